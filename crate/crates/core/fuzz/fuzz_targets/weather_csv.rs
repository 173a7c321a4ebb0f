#![no_main]

use libfuzzer_sys::fuzz_target;
use thermopanel::paneldata::{parse_weather_csv, WeatherSchema};
use thermopanel::tembin::{count_bins, BinSpec};

fuzz_target!(|data: &[u8]| {
    for schema in [WeatherSchema::default(), WeatherSchema::gsod_imperial()] {
        if let Ok(parsed) = parse_weather_csv(data, &schema) {
            let temps: Vec<f64> = parsed.records.iter().filter_map(|r| r.mean_temp_c).collect();
            let counts = count_bins(&temps, &BinSpec::default()).unwrap();
            assert!(counts.is_consistent());
        }
    }
});
