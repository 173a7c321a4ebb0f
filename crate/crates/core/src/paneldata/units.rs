use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::DailyWeatherRecord;

pub const KNOT_TO_MS: f64 = 0.514444;
pub const MILE_TO_KM: f64 = 1.609344;

/// A station-day in NOAA GSOD native units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GsodRecord {
    pub county_code: String,
    pub date: NaiveDate,
    pub temp_f: Option<f64>,
    pub wind_knots: Option<f64>,
    pub sea_pressure_hpa: Option<f64>,
    pub visibility_miles: Option<f64>,
}

pub(crate) fn fahrenheit_to_celsius(f: f64) -> f64 {
    (f - 32.0) * 5.0 / 9.0
}

pub(crate) fn celsius_to_fahrenheit(c: f64) -> f64 {
    c * 9.0 / 5.0 + 32.0
}

pub fn convert_gsod_units(raw: &GsodRecord) -> DailyWeatherRecord {
    DailyWeatherRecord {
        county_code: raw.county_code.clone(),
        date: raw.date,
        mean_temp_c: raw.temp_f.map(fahrenheit_to_celsius),
        wind: raw.wind_knots.map(|k| k * KNOT_TO_MS),
        sea_pressure: raw.sea_pressure_hpa,
        visibility: raw.visibility_miles.map(|m| m * MILE_TO_KM),
    }
}

/// Inverse of [`convert_gsod_units`].
pub fn to_gsod_units(rec: &DailyWeatherRecord) -> GsodRecord {
    GsodRecord {
        county_code: rec.county_code.clone(),
        date: rec.date,
        temp_f: rec.mean_temp_c.map(celsius_to_fahrenheit),
        wind_knots: rec.wind.map(|w| w / KNOT_TO_MS),
        sea_pressure_hpa: rec.sea_pressure,
        visibility_miles: rec.visibility.map(|v| v / MILE_TO_KM),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw(temp_f: Option<f64>, knots: Option<f64>, miles: Option<f64>) -> GsodRecord {
        GsodRecord {
            county_code: "C001".into(),
            date: NaiveDate::from_ymd_opt(2005, 1, 3).unwrap(),
            temp_f,
            wind_knots: knots,
            sea_pressure_hpa: Some(1013.0),
            visibility_miles: miles,
        }
    }

    #[test]
    fn known_conversions() {
        let r = convert_gsod_units(&raw(Some(32.0), Some(10.0), Some(1.0)));
        assert_eq!(r.mean_temp_c, Some(0.0));
        assert!((r.wind.unwrap() - 5.14444).abs() < 1e-12);
        assert!((r.visibility.unwrap() - 1.609344).abs() < 1e-12);
        assert_eq!(r.sea_pressure, Some(1013.0));

        let hot = convert_gsod_units(&raw(Some(86.0), None, None));
        assert!((hot.mean_temp_c.unwrap() - 30.0).abs() < 1e-12);
        assert_eq!(hot.wind, None);
        assert_eq!(hot.visibility, None);
    }

    proptest! {
        #[test]
        fn round_trip(t in -130.0f64..140.0, k in 0.0f64..200.0, m in 0.0f64..100.0) {
            let src = raw(Some(t), Some(k), Some(m));
            let back = to_gsod_units(&convert_gsod_units(&src));
            prop_assert!((back.temp_f.unwrap() - t).abs() < 1e-9);
            prop_assert!((back.wind_knots.unwrap() - k).abs() < 1e-9);
            prop_assert!((back.visibility_miles.unwrap() - m).abs() < 1e-9);
        }
    }
}
