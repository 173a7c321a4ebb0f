#![no_main]

use libfuzzer_sys::fuzz_target;
use thermopanel::paneldata::{join_firm_weather, parse_firm_csv, JoinOptions};

fuzz_target!(|data: &[u8]| {
    if let Ok(parsed) = parse_firm_csv(data) {
        for r in &parsed.records {
            assert!(r.cvalue.is_none_or(|v| (0.0..=1.0).contains(&v)));
        }
        if let Ok(panel) = join_firm_weather(&parsed.records, &[], &JoinOptions::default()) {
            assert!(panel.join_report.is_balanced());
        }
    }
});
