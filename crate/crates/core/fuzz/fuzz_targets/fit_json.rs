#![no_main]

use libfuzzer_sys::fuzz_target;
use thermopanel::estimator::FitResult;
use thermopanel::study::TableArtifact;

fuzz_target!(|data: &[u8]| {
    if let Ok(fit) = serde_json::from_slice::<FitResult>(data) {
        let _ = serde_json::to_string(&fit);
    }
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(table) = TableArtifact::from_json(text) {
            let _ = table.to_text();
        }
    }
});
