use std::collections::{HashMap, HashSet};

use chrono::Datelike;

use super::{DailyWeatherRecord, FirmYearRecord, JoinReport, PanelDataset, PanelRow};
use crate::tembin::{count_bins, BinCounts, BinSpec};
use crate::{Error, Result};

pub const DEFAULT_MIN_COVERAGE_DAYS: u32 = 300;

#[derive(Debug, Clone)]
pub struct JoinOptions {
    /// A firm-year needs at least this many days with a valid temperature.
    pub min_coverage_days: u32,
    pub bin_spec: BinSpec,
}

impl Default for JoinOptions {
    fn default() -> Self {
        JoinOptions {
            min_coverage_days: DEFAULT_MIN_COVERAGE_DAYS,
            bin_spec: BinSpec::default(),
        }
    }
}

/// Annual climate of one county.
#[derive(Debug, Clone)]
struct ClimateYear {
    bins: BinCounts,
    wind: Option<f64>,
    sea: Option<f64>,
    visb: Option<f64>,
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Collapses same-day records of one county (several stations) into their
/// field-wise mean over present values; days stay in date order.
fn daily_series(mut days: Vec<&DailyWeatherRecord>) -> Vec<[Option<f64>; 4]> {
    days.sort_by_key(|r| r.date);
    let mut out: Vec<[Option<f64>; 4]> = Vec::with_capacity(days.len());
    let mut i = 0;
    while i < days.len() {
        let mut j = i + 1;
        while j < days.len() && days[j].date == days[i].date {
            j += 1;
        }
        let group = &days[i..j];
        let field = |f: fn(&DailyWeatherRecord) -> Option<f64>| {
            if group.len() == 1 {
                f(group[0])
            } else {
                mean_of(group.iter().filter_map(|r| f(r)))
            }
        };
        out.push([
            field(|r| r.mean_temp_c),
            field(|r| r.wind),
            field(|r| r.sea_pressure),
            field(|r| r.visibility),
        ]);
        i = j;
    }
    out
}

fn climate_year(days: Vec<&DailyWeatherRecord>, spec: &BinSpec) -> Result<ClimateYear> {
    let series = daily_series(days);
    let temps: Vec<f64> = series.iter().filter_map(|d| d[0]).collect();
    Ok(ClimateYear {
        bins: count_bins(&temps, spec)?,
        wind: mean_of(series.iter().filter_map(|d| d[1])),
        sea: mean_of(series.iter().filter_map(|d| d[2])),
        visb: mean_of(series.iter().filter_map(|d| d[3])),
    })
}

/// Joins firm-years to the weather of their city on `(city_code, year)`.
///
/// Every input row ends up either joined or in exactly one drop counter,
/// checked in this order: no weather rows for the city-year, fewer valid
/// temperature days than `min_coverage_days`, empty outcome.
pub fn join_firm_weather(
    firms: &[FirmYearRecord],
    weather: &[DailyWeatherRecord],
    opts: &JoinOptions,
) -> Result<PanelDataset> {
    if !(1..=366).contains(&opts.min_coverage_days) {
        return Err(Error::Validation(format!(
            "min_coverage_days must lie in [1, 366], got {}",
            opts.min_coverage_days
        )));
    }
    let mut seen = HashSet::with_capacity(firms.len());
    for f in firms {
        if !seen.insert((f.firm_id.as_str(), f.year)) {
            return Err(Error::DuplicateKey {
                firm_id: f.firm_id.clone(),
                year: f.year,
            });
        }
    }

    let mut by_county_year: HashMap<(&str, i32), Vec<&DailyWeatherRecord>> = HashMap::new();
    for w in weather {
        by_county_year
            .entry((w.county_code.as_str(), w.date.year()))
            .or_default()
            .push(w);
    }
    let needed: HashSet<(&str, i32)> = firms.iter().map(|f| (f.city_code.as_str(), f.year)).collect();
    let mut climate: HashMap<(&str, i32), ClimateYear> = HashMap::with_capacity(needed.len());
    for (key, days) in by_county_year {
        if needed.contains(&key) {
            climate.insert(key, climate_year(days, &opts.bin_spec)?);
        }
    }

    let mut report = JoinReport {
        rows_in: firms.len(),
        ..JoinReport::default()
    };
    let mut rows = Vec::with_capacity(firms.len());
    for f in firms {
        let Some(c) = climate.get(&(f.city_code.as_str(), f.year)) else {
            report.dropped_no_station += 1;
            continue;
        };
        if c.bins.total_days < opts.min_coverage_days {
            report.dropped_low_coverage += 1;
            continue;
        }
        let Some(cvalue) = f.cvalue else {
            report.dropped_missing_outcome += 1;
            continue;
        };
        rows.push(PanelRow {
            firm_id: f.firm_id.clone(),
            year: f.year,
            city_code: f.city_code.clone(),
            ownership: f.ownership,
            industry_code: f.industry_code.clone(),
            cvalue,
            wind: c.wind,
            sea: c.sea,
            visb: c.visb,
            bins: c.bins,
        });
    }
    rows.sort_by(|a, b| a.firm_id.cmp(&b.firm_id).then(a.year.cmp(&b.year)));
    report.rows_joined = rows.len();
    debug_assert!(report.is_balanced());
    Ok(PanelDataset {
        rows,
        join_report: report,
    })
}
