//! Seeded synthetic firm-year panels with planted temperature-bin effects.
//!
//! Each city gets a sinusoidal annual temperature cycle plus a city-year
//! shift and i.i.d. daily noise; wind, sea-level pressure and visibility are
//! a city baseline plus city-year and daily shocks. Firms are assigned to
//! cities, ownership types and industries, and the outcome is assembled as
//! `alpha + bins'beta + controls'phi + firm effect + year effect + noise`,
//! with bins and controls taken `effect_lag` years back.

mod oracle;

use std::collections::HashMap;

use chrono::{Datelike, NaiveDate};
use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::paneldata::{write_firm_csv, write_weather_csv, DailyWeatherRecord, FirmYearRecord, Ownership};
use crate::tembin::{count_bins, BinCounts, BinSpec, N_BINS};
use crate::{Error, Result};

pub use oracle::{dummy_rank, oracle_ols_dummies, OracleFit, OracleVcov, ORACLE_MAX_ROWS};

/// Magnitudes of the contemporaneous bin effects with weather controls,
/// cold to hot.
pub const TABLE2_BIN_EFFECTS: [f64; N_BINS] = [
    -0.000319, -6.22e-05, 0.000135, 7.74e-05, 0.000175, 7.79e-05, 5.88e-05, -0.000163, -0.000506,
];
/// Wind, sea-level pressure, visibility.
pub const TABLE2_CONTROL_EFFECTS: [f64; 3] = [-0.0129, -0.00148, 0.00187];
pub const TABLE2_CONSTANT: f64 = 1.904;

/// Relative ownership frequencies (private, SOE, collective, mixed, foreign).
const OWNERSHIP_WEIGHTS: [f64; 5] = [535_067.0, 130_288.0, 167_440.0, 321_108.0, 109_152.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClimateProfile {
    /// Annual mean temperatures are spread evenly over this range across
    /// cities, coldest city first.
    pub mean_range_c: (f64, f64),
    pub amplitude_range_c: (f64, f64),
    pub year_shift_sd: f64,
    pub daily_noise_sd: f64,
}

impl Default for ClimateProfile {
    fn default() -> Self {
        ClimateProfile {
            mean_range_c: (0.0, 22.0),
            amplitude_range_c: (8.0, 16.0),
            year_shift_sd: 1.0,
            daily_noise_sd: 3.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthScenario {
    pub n_firms: usize,
    pub n_years: usize,
    pub n_cities: usize,
    pub n_industries: usize,
    pub start_year: i32,
    pub alpha: f64,
    pub beta_bins: [f64; N_BINS],
    pub beta_controls: [f64; 3],
    pub firm_fe_sd: f64,
    pub year_fe_sd: f64,
    pub noise_sd: f64,
    /// Outcomes respond to weather this many years back.
    pub effect_lag: u32,
    /// Probability that a day's temperature is missing.
    pub missing_temp_rate: f64,
    pub seed: u64,
    pub climate: ClimateProfile,
}

impl Default for SynthScenario {
    fn default() -> Self {
        SynthScenario {
            n_firms: 200,
            n_years: 10,
            n_cities: 20,
            n_industries: 6,
            start_year: 2005,
            alpha: TABLE2_CONSTANT,
            beta_bins: TABLE2_BIN_EFFECTS,
            beta_controls: TABLE2_CONTROL_EFFECTS,
            firm_fe_sd: 0.04,
            year_fe_sd: 0.005,
            noise_sd: 0.02,
            effect_lag: 0,
            missing_temp_rate: 0.0,
            seed: 1,
            climate: ClimateProfile::default(),
        }
    }
}

impl SynthScenario {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_firms", self.n_firms),
            ("n_years", self.n_years),
            ("n_cities", self.n_cities),
            ("n_industries", self.n_industries),
        ];
        for (name, v) in counts {
            if v < 2 {
                return Err(Error::Config(format!("{name} must be at least 2, got {v}")));
            }
        }
        let sds = [
            self.firm_fe_sd,
            self.year_fe_sd,
            self.noise_sd,
            self.climate.year_shift_sd,
            self.climate.daily_noise_sd,
        ];
        if sds.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::Config("dispersions must be finite and non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.missing_temp_rate) {
            return Err(Error::Config("missing_temp_rate must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn end_year(&self) -> i32 {
        self.start_year + self.n_years as i32 - 1
    }
}

/// One generated outcome and its components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub firm_id: String,
    pub year: i32,
    /// `bins'beta + controls'phi` at the effect lag.
    pub linear_index: f64,
    pub firm_effect: f64,
    pub year_effect: f64,
    pub noise: f64,
    pub cvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub alpha: f64,
    pub beta_bins: [f64; N_BINS],
    pub beta_controls: [f64; 3],
    pub effect_lag: u32,
    pub firm_effects: Vec<(String, f64)>,
    pub year_effects: Vec<(i32, f64)>,
    pub rows: Vec<TruthRow>,
}

impl SynthTruth {
    /// Planted coefficients in regressor order: nine bins cold to hot, then
    /// wind, sea, visb.
    pub fn planted(&self) -> Vec<f64> {
        self.beta_bins.iter().chain(&self.beta_controls).copied().collect()
    }

    pub fn recompose(&self, row: &TruthRow) -> f64 {
        self.alpha + row.linear_index + row.firm_effect + row.year_effect + row.noise
    }
}

#[derive(Debug, Clone)]
pub struct SynthPanel {
    pub weather: Vec<DailyWeatherRecord>,
    pub firms: Vec<FirmYearRecord>,
    pub truth: SynthTruth,
}

impl SynthPanel {
    pub fn weather_csv(&self) -> String {
        write_weather_csv(&self.weather)
    }

    pub fn firm_csv(&self) -> String {
        write_firm_csv(&self.firms)
    }

    pub fn truth_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.truth)?)
    }
}

#[derive(Debug, Clone, Copy)]
struct CityClimate {
    bins: BinCounts,
    controls: [f64; 3],
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

fn normal(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd).expect("non-negative finite sd")
}

pub fn city_code(c: usize) -> String {
    format!("C{:03}", c + 1)
}

/// Daily weather of one city for `years`, drawn from its own RNG stream.
fn city_weather(
    scenario: &SynthScenario,
    c: usize,
    years: std::ops::RangeInclusive<i32>,
    spec: &BinSpec,
) -> (Vec<DailyWeatherRecord>, Vec<(i32, CityClimate)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    rng.set_stream(c as u64 + 1);
    let cl = &scenario.climate;
    let frac = c as f64 / (scenario.n_cities - 1) as f64;
    let mean = cl.mean_range_c.0 + frac * (cl.mean_range_c.1 - cl.mean_range_c.0);
    let amplitude = rng.random_range(cl.amplitude_range_c.0..=cl.amplitude_range_c.1);
    let wind_base = rng.random_range(3.0..8.0);
    let sea_base = rng.random_range(1010.0..1020.0);
    let visb_base = rng.random_range(6.0..12.0);
    let code = city_code(c);

    let mut records = Vec::new();
    let mut climate = Vec::new();
    for year in years {
        let shift = normal(cl.year_shift_sd).sample(&mut rng);
        let wind_shock = normal(0.5).sample(&mut rng);
        let sea_shock = normal(0.8).sample(&mut rng);
        let visb_shock = normal(0.6).sample(&mut rng);
        let first = NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year");
        let n_days = if NaiveDate::from_ymd_opt(year, 12, 31).expect("valid").ordinal() == 366 {
            366
        } else {
            365
        };
        let mut temps = Vec::with_capacity(n_days);
        let mut sums = [0.0; 3];
        for d in 0..n_days {
            let phase = 2.0 * std::f64::consts::PI * (d as f64 - 15.0) / n_days as f64;
            let t = round1(mean + shift - amplitude * phase.cos() + normal(cl.daily_noise_sd).sample(&mut rng));
            let wind = round1((wind_base + wind_shock + normal(1.5).sample(&mut rng)).max(0.0));
            let sea = round1((sea_base + sea_shock + normal(5.0).sample(&mut rng)).clamp(950.0, 1080.0));
            let visb = round1((visb_base + visb_shock + normal(2.0).sample(&mut rng)).max(0.1));
            let missing = scenario.missing_temp_rate > 0.0 && rng.random::<f64>() < scenario.missing_temp_rate;
            let t = t.clamp(-89.9, 59.9);
            if !missing {
                temps.push(t);
            }
            for (s, v) in sums.iter_mut().zip([wind, sea, visb]) {
                *s += v;
            }
            records.push(DailyWeatherRecord {
                county_code: code.clone(),
                date: first + chrono::Days::new(d as u64),
                mean_temp_c: (!missing).then_some(t),
                wind: Some(wind),
                sea_pressure: Some(sea),
                visibility: Some(visb),
            });
        }
        climate.push((
            year,
            CityClimate {
                bins: count_bins(&temps, spec).expect("finite temperatures"),
                controls: sums.map(|s| s / n_days as f64),
            },
        ));
    }
    (records, climate)
}

/// Generates a panel from `scenario`. Output is a pure function of the
/// scenario.
pub fn generate_panel(scenario: &SynthScenario) -> Result<SynthPanel> {
    scenario.validate()?;
    let spec = BinSpec::default();
    let first_weather_year = scenario.start_year - scenario.effect_lag as i32;
    let years = first_weather_year..=scenario.end_year();

    let per_city: Vec<_> = (0..scenario.n_cities)
        .map(|c| city_weather(scenario, c, years.clone(), &spec))
        .collect();
    let mut weather = Vec::new();
    let mut climate: HashMap<(usize, i32), CityClimate> = HashMap::new();
    for (c, (recs, cl)) in per_city.into_iter().enumerate() {
        weather.extend(recs);
        climate.extend(cl.into_iter().map(|(y, v)| ((c, y), v)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let own_dist = WeightedIndex::new(OWNERSHIP_WEIGHTS).expect("positive weights");
    let ind_weights: Vec<f64> = (0..scenario.n_industries).map(|k| 1.0 / (k as f64 + 1.0)).collect();
    let ind_dist = WeightedIndex::new(&ind_weights).expect("positive weights");
    let firm_fe = normal(scenario.firm_fe_sd);
    let year_fe = normal(scenario.year_fe_sd);
    let noise = normal(scenario.noise_sd);

    let year_effects: Vec<(i32, f64)> = (scenario.start_year..=scenario.end_year())
        .map(|y| (y, year_fe.sample(&mut rng)))
        .collect();
    let width = scenario.n_firms.to_string().len().max(4);

    let mut firms = Vec::with_capacity(scenario.n_firms * scenario.n_years);
    let mut rows = Vec::with_capacity(scenario.n_firms * scenario.n_years);
    let mut firm_effects = Vec::with_capacity(scenario.n_firms);
    for f in 0..scenario.n_firms {
        let firm_id = format!("F{:0width$}", f + 1);
        let city = rng.random_range(0..scenario.n_cities);
        let ownership = Ownership::ALL[own_dist.sample(&mut rng)];
        let industry = format!("I{:02}", ind_dist.sample(&mut rng) + 1);
        let delta = firm_fe.sample(&mut rng);
        firm_effects.push((firm_id.clone(), delta));
        for &(year, tau) in &year_effects {
            let cl = climate[&(city, year - scenario.effect_lag as i32)];
            let bins_part: f64 = cl
                .bins
                .counts
                .iter()
                .zip(&scenario.beta_bins)
                .map(|(&n, b)| f64::from(n) * b)
                .sum();
            let ctrl_part: f64 = cl.controls.iter().zip(&scenario.beta_controls).map(|(x, b)| x * b).sum();
            let eps = noise.sample(&mut rng);
            let row = TruthRow {
                firm_id: firm_id.clone(),
                year,
                linear_index: bins_part + ctrl_part,
                firm_effect: delta,
                year_effect: tau,
                noise: eps,
                cvalue: 0.0,
            };
            let cvalue = scenario.alpha + row.linear_index + row.firm_effect + row.year_effect + row.noise;
            firms.push(FirmYearRecord {
                firm_id: firm_id.clone(),
                year,
                city_code: city_code(city),
                ownership,
                industry_code: industry.clone(),
                cvalue: Some(cvalue),
            });
            rows.push(TruthRow { cvalue, ..row });
        }
    }
    let out_of_range = firms.iter().filter(|f| f.cvalue.is_some_and(|c| !(0.0..=1.0).contains(&c))).count();
    if out_of_range > 0 {
        log::warn!("{out_of_range} generated cvalue(s) fall outside [0, 1] and will be rejected on parse");
    }

    Ok(SynthPanel {
        weather,
        firms,
        truth: SynthTruth {
            alpha: scenario.alpha,
            beta_bins: scenario.beta_bins,
            beta_controls: scenario.beta_controls,
            effect_lag: scenario.effect_lag,
            firm_effects,
            year_effects,
            rows,
        },
    })
}
