//! Ingestion of daily weather and firm-year records and their join into a
//! firm-year panel.

mod firms;
mod join;
mod units;
mod weather;

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::tembin::{BinCounts, BinSpec};
use crate::Error;

pub use firms::{parse_firm_csv, write_firm_csv};
pub use join::{join_firm_weather, JoinOptions, DEFAULT_MIN_COVERAGE_DAYS};
pub use units::{convert_gsod_units, to_gsod_units, GsodRecord, KNOT_TO_MS, MILE_TO_KM};
pub use weather::{parse_weather_csv, write_weather_csv, DistanceUnit, SpeedUnit, TempUnit, WeatherSchema};

/// One station-day, keyed by the county/city code used for the join.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyWeatherRecord {
    pub county_code: String,
    pub date: NaiveDate,
    pub mean_temp_c: Option<f64>,
    pub wind: Option<f64>,
    pub sea_pressure: Option<f64>,
    pub visibility: Option<f64>,
}

pub const TEMP_RANGE_C: (f64, f64) = (-90.0, 60.0);
pub const SEA_PRESSURE_RANGE_HPA: (f64, f64) = (850.0, 1100.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Ownership {
    Private,
    StateOwned,
    Collective,
    Mixed,
    Foreign,
}

impl Ownership {
    pub const ALL: [Ownership; 5] = [
        Ownership::Private,
        Ownership::StateOwned,
        Ownership::Collective,
        Ownership::Mixed,
        Ownership::Foreign,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Ownership::Private => "private",
            Ownership::StateOwned => "soe",
            Ownership::Collective => "collective",
            Ownership::Mixed => "mixed",
            Ownership::Foreign => "foreign",
        }
    }

    pub fn column_title(self) -> &'static str {
        match self {
            Ownership::Private => "Private",
            Ownership::StateOwned => "State-owned",
            Ownership::Collective => "Collective",
            Ownership::Mixed => "Mixed",
            Ownership::Foreign => "Foreign-owned",
        }
    }
}

impl fmt::Display for Ownership {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Ownership {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let norm: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect();
        Ok(match norm.as_str() {
            "private" => Ownership::Private,
            "soe" | "stateowned" | "state" => Ownership::StateOwned,
            "collective" => Ownership::Collective,
            "mixed" | "mix" => Ownership::Mixed,
            "foreign" | "foreignowned" => Ownership::Foreign,
            _ => return Err(Error::Validation(format!("unknown ownership `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirmYearRecord {
    pub firm_id: String,
    pub year: i32,
    pub city_code: String,
    pub ownership: Ownership,
    pub industry_code: String,
    /// Net fixed assets over total assets; `None` when the field was empty.
    pub cvalue: Option<f64>,
}

/// A malformed input line. Line numbers are 1-based and count the header.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineError {
    pub line: u64,
    pub message: String,
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Result of parsing a delimited file: good records, per-line errors and
/// per-field counts of empty (missing) values among the good records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub errors: Vec<LineError>,
    pub missing: BTreeMap<String, usize>,
}

impl<T> Default for Parsed<T> {
    fn default() -> Self {
        Parsed {
            records: Vec::new(),
            errors: Vec::new(),
            missing: BTreeMap::new(),
        }
    }
}

impl<T> Parsed<T> {
    pub(crate) fn count_missing(&mut self, field: &str) {
        *self.missing.entry(field.to_string()).or_default() += 1;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinReport {
    pub rows_in: usize,
    pub rows_joined: usize,
    pub dropped_no_station: usize,
    pub dropped_low_coverage: usize,
    pub dropped_missing_outcome: usize,
}

impl JoinReport {
    pub fn is_balanced(&self) -> bool {
        self.rows_in
            == self.rows_joined
                + self.dropped_no_station
                + self.dropped_low_coverage
                + self.dropped_missing_outcome
    }

    /// `key: value` lines, one per field.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "rows_in: {}", self.rows_in);
        let _ = writeln!(s, "rows_joined: {}", self.rows_joined);
        let _ = writeln!(s, "dropped_no_station: {}", self.dropped_no_station);
        let _ = writeln!(s, "dropped_low_coverage: {}", self.dropped_low_coverage);
        let _ = writeln!(s, "dropped_missing_outcome: {}", self.dropped_missing_outcome);
        s
    }
}

/// A joined firm-year observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelRow {
    pub firm_id: String,
    pub year: i32,
    pub city_code: String,
    pub ownership: Ownership,
    pub industry_code: String,
    pub cvalue: f64,
    /// Annual means over the days where the field was observed.
    pub wind: Option<f64>,
    pub sea: Option<f64>,
    pub visb: Option<f64>,
    pub bins: BinCounts,
}

/// Joined rows sorted by `(firm_id, year)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PanelDataset {
    pub rows: Vec<PanelRow>,
    pub join_report: JoinReport,
}

impl PanelDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Values of a named panel variable: `cvalue`, a control, or a bin column
    /// (ASCII or Stata name). Missing values are NaN.
    pub fn variable(&self, name: &str, spec: &BinSpec) -> crate::Result<Vec<f64>> {
        let get: Box<dyn Fn(&PanelRow) -> f64> = match name {
            "cvalue" => Box::new(|r| r.cvalue),
            "wind" => Box::new(|r| r.wind.unwrap_or(f64::NAN)),
            "sea" => Box::new(|r| r.sea.unwrap_or(f64::NAN)),
            "visb" => Box::new(|r| r.visb.unwrap_or(f64::NAN)),
            "year" => Box::new(|r| f64::from(r.year)),
            _ => {
                let slot = spec
                    .slot_of(name)
                    .ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
                Box::new(move |r| f64::from(r.bins.counts[slot]))
            }
        };
        Ok(self.rows.iter().map(get).collect())
    }

    /// Joined panel as CSV: identifiers, outcome, controls and bin counts.
    pub fn to_csv(&self, spec: &BinSpec) -> String {
        let mut out = String::from("firm_id,year,city_code,ownership,industry_code,cvalue,wind,sea,visb");
        for label in spec.ascii_labels() {
            out.push(',');
            out.push_str(&label);
        }
        out.push_str(",reference_days,total_days\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        for r in &self.rows {
            let _ = write!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.firm_id,
                r.year,
                r.city_code,
                r.ownership,
                r.industry_code,
                r.cvalue,
                opt(r.wind),
                opt(r.sea),
                opt(r.visb)
            );
            for c in r.bins.counts {
                let _ = write!(out, ",{c}");
            }
            let _ = writeln!(out, ",{},{}", r.bins.reference_days, r.bins.total_days);
        }
        out
    }
}
