#![no_main]

use libfuzzer_sys::fuzz_target;
use thermopanel::study::StudyConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = StudyConfig::parse(text) {
            let _ = cfg.validate();
        }
    }
});
