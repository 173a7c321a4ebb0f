use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::estimator::Dimension;
use crate::hdfe::{DEFAULT_MAX_ITERS, DEFAULT_TOLERANCE};
use crate::paneldata::{WeatherSchema, DEFAULT_MIN_COVERAGE_DAYS};
use crate::tembin::BinSpec;
use crate::{Error, Result};

pub const DEFAULT_INDUSTRY_MIN_OBS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HetDimension {
    Ownership,
    Industry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeatherUnits {
    Metric,
    /// GSOD column names and units (°F, knots, miles).
    Imperial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub firms: Option<PathBuf>,
    pub weather: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub weather_units: WeatherUnits,
    pub bin_edges: Option<Vec<f64>>,
    pub reference_bin: Option<usize>,
    pub coverage: u32,
    pub lag: u32,
    pub cluster: Dimension,
    /// Fixed effects of the baseline, robustness and ownership tables.
    pub fixed_effects: Vec<Dimension>,
    /// Fixed effects of the per-industry regressions.
    pub industry_fixed_effects: Vec<Dimension>,
    pub het_dimensions: Vec<HetDimension>,
    pub industry_min_obs: usize,
    /// Regress on all nine bins per industry instead of the hottest one.
    pub industry_all_bins: bool,
    pub tolerance: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            firms: None,
            weather: None,
            out_dir: PathBuf::from("out"),
            weather_units: WeatherUnits::Metric,
            bin_edges: None,
            reference_bin: None,
            coverage: DEFAULT_MIN_COVERAGE_DAYS,
            lag: 1,
            cluster: Dimension::City,
            fixed_effects: vec![Dimension::Firm, Dimension::Year],
            industry_fixed_effects: vec![Dimension::Year, Dimension::City],
            het_dimensions: vec![HetDimension::Ownership, HetDimension::Industry],
            industry_min_obs: DEFAULT_INDUSTRY_MIN_OBS,
            industry_all_bins: false,
            tolerance: DEFAULT_TOLERANCE,
            max_iters: DEFAULT_MAX_ITERS,
            seed: 1,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" => Ok(true),
        "0" | "false" | "no" | "n" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected a boolean, got `{v}`"))),
    }
}

fn parse_list<T>(v: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(f).collect()
}

impl StudyConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "firms" => self.firms = Some(PathBuf::from(v)),
            "weather" => self.weather = Some(PathBuf::from(v)),
            "out" | "out_dir" => self.out_dir = PathBuf::from(v),
            "weather_units" => {
                self.weather_units = match v.to_ascii_lowercase().as_str() {
                    "metric" => WeatherUnits::Metric,
                    "imperial" | "gsod" => WeatherUnits::Imperial,
                    _ => return Err(Error::Config(format!("`weather_units`: unknown `{v}`"))),
                }
            }
            "bin_edges" => self.bin_edges = Some(parse_list(v, |s| parse_num("bin_edges", s))?),
            "reference_bin" => self.reference_bin = Some(parse_num(key, v)?),
            "coverage" => self.coverage = parse_num(key, v)?,
            "lag" => self.lag = parse_num(key, v)?,
            "cluster" => self.cluster = Dimension::parse(v)?,
            "fe" | "fixed_effects" => self.fixed_effects = parse_list(v, Dimension::parse)?,
            "industry_fe" => self.industry_fixed_effects = parse_list(v, Dimension::parse)?,
            "het" | "het_dimensions" => {
                self.het_dimensions = parse_list(v, |s| match s.to_ascii_lowercase().as_str() {
                    "ownership" => Ok(HetDimension::Ownership),
                    "industry" => Ok(HetDimension::Industry),
                    _ => Err(Error::Config(format!("`het`: unknown dimension `{s}`"))),
                })?
            }
            "industry_min_obs" => self.industry_min_obs = parse_num(key, v)?,
            "industry_all_bins" => self.industry_all_bins = parse_bool(key, v)?,
            "tolerance" => self.tolerance = parse_num(key, v)?,
            "max_iters" => self.max_iters = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines on top of the defaults. Blank lines and
    /// lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = StudyConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            self.set(k, v).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("line {}: {m}", i + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.industry_min_obs < 1 {
            return Err(Error::Config("industry_min_obs must be at least 1".into()));
        }
        if !(1..=366).contains(&self.coverage) {
            return Err(Error::Config(format!("coverage must lie in [1, 366], got {}", self.coverage)));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) || self.max_iters == 0 {
            return Err(Error::Config("tolerance must be positive and max_iters at least 1".into()));
        }
        self.bin_spec()?;
        Ok(())
    }

    pub fn bin_spec(&self) -> Result<BinSpec> {
        let default = BinSpec::default();
        match (&self.bin_edges, self.reference_bin) {
            (None, None) => Ok(default),
            (edges, reference) => BinSpec::new(
                edges.clone().unwrap_or_else(|| default.edges().to_vec()),
                reference.unwrap_or(default.reference_interval()),
            ),
        }
    }

    pub fn weather_schema(&self) -> WeatherSchema {
        match self.weather_units {
            WeatherUnits::Metric => WeatherSchema::default(),
            WeatherUnits::Imperial => WeatherSchema::gsod_imperial(),
        }
    }
}
