//! Temperature-bin day counts and regressor matrices.
//!
//! Daily mean temperatures are sorted into ten left-open, right-closed
//! intervals: `(-inf, -10]`, `(-10, -5]`, ..., `(25, 30]`, `(30, inf)`. The
//! `(10, 15]` interval is the reference group and never becomes a regressor,
//! leaving nine day-count columns per firm-year.
//!
//! Column order everywhere is cold to hot. The Stata-style names run the
//! other way: `temp1` is the hottest regressor bin and `temp9` the coldest.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::paneldata::{PanelDataset, PanelRow};
use crate::{Error, Result};

/// Number of regressor bins (all intervals except the reference one).
pub const N_BINS: usize = 9;

/// Names of the annual weather controls, in output order.
pub const CONTROL_LABELS: [&str; 3] = ["wind", "sea", "visb"];

/// Ten half-open intervals given by nine strictly increasing Celsius edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    edges: Vec<f64>,
    reference: usize,
}

impl Default for BinSpec {
    fn default() -> Self {
        BinSpec {
            edges: vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            reference: 5,
        }
    }
}

impl BinSpec {
    /// `reference` indexes the ten intervals: 0 is `(-inf, edges[0]]`, 9 is
    /// `(edges[8], inf)`.
    pub fn new(edges: Vec<f64>, reference: usize) -> Result<Self> {
        if edges.len() != N_BINS {
            return Err(Error::Config(format!(
                "bin spec needs {} edges, got {}",
                N_BINS,
                edges.len()
            )));
        }
        if edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::Config("bin edges must be finite".into()));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("bin edges must be strictly increasing".into()));
        }
        if reference > N_BINS {
            return Err(Error::Config(format!(
                "reference interval {reference} out of range 0..={N_BINS}"
            )));
        }
        Ok(BinSpec { edges, reference })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn reference_interval(&self) -> usize {
        self.reference
    }

    /// Interval indices (0..10) of the nine regressor bins, cold to hot.
    pub fn regressor_intervals(&self) -> impl Iterator<Item = usize> + '_ {
        (0..=N_BINS).filter(move |&i| i != self.reference)
    }

    fn interval_of_slot(&self, slot: usize) -> usize {
        if slot < self.reference {
            slot
        } else {
            slot + 1
        }
    }

    /// Human-readable label of regressor slot `slot` (0 = coldest), e.g.
    /// `≤ -10°C`, `25~30°C`, `>30°C`.
    pub fn display_label(&self, slot: usize) -> String {
        self.interval_display(self.interval_of_slot(slot))
    }

    /// ASCII column name of regressor slot `slot`: `le_m10`, `m10_m5`, ...,
    /// `25_30`, `gt30`.
    pub fn ascii_label(&self, slot: usize) -> String {
        let i = self.interval_of_slot(slot);
        if i == 0 {
            format!("le_{}", ascii_num(self.edges[0]))
        } else if i == N_BINS {
            format!("gt{}", ascii_num(self.edges[N_BINS - 1]))
        } else {
            format!("{}_{}", ascii_num(self.edges[i - 1]), ascii_num(self.edges[i]))
        }
    }

    /// Stata variable name: `temp1` is the hottest slot, `temp9` the coldest.
    pub fn stata_name(&self, slot: usize) -> String {
        format!("temp{}", N_BINS - slot)
    }

    pub fn interval_display(&self, i: usize) -> String {
        if i == 0 {
            format!("≤ {}°C", fmt_num(self.edges[0]))
        } else if i == N_BINS {
            format!(">{}°C", fmt_num(self.edges[N_BINS - 1]))
        } else {
            format!("{}~{}°C", fmt_num(self.edges[i - 1]), fmt_num(self.edges[i]))
        }
    }

    pub fn ascii_labels(&self) -> Vec<String> {
        (0..N_BINS).map(|s| self.ascii_label(s)).collect()
    }

    /// Slot of a regressor column name, accepting ASCII or Stata spelling.
    pub fn slot_of(&self, label: &str) -> Option<usize> {
        (0..N_BINS).find(|&s| self.ascii_label(s) == label || self.stata_name(s) == label)
    }

    /// Display text for any feature label, including lagged (`L1_...`) and
    /// control columns.
    pub fn pretty_label(&self, label: &str) -> String {
        if let Some((lag, base)) = split_lag(label) {
            let prefix = if lag == 1 { "L".to_string() } else { format!("L{lag}") };
            return format!("{prefix}{}", self.pretty_label(base));
        }
        match self.slot_of(label) {
            Some(slot) => self.display_label(slot),
            None => label.to_string(),
        }
    }
}

fn fmt_num(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

fn ascii_num(x: f64) -> String {
    fmt_num(x).replace('-', "m").replace('.', "p")
}

/// Splits `L{k}_{base}` into `(k, base)`.
pub fn split_lag(label: &str) -> Option<(u32, &str)> {
    let rest = label.strip_prefix('L')?;
    let (digits, base) = rest.split_once('_')?;
    let lag = digits.parse().ok()?;
    Some((lag, base))
}

pub fn lag_label(label: &str, lag: u32) -> String {
    format!("L{lag}_{label}")
}

/// Interval index (0..=9) containing `temp_c`.
pub fn bin_index(temp_c: f64, spec: &BinSpec) -> Result<usize> {
    if !temp_c.is_finite() {
        return Err(Error::Domain(temp_c));
    }
    Ok(spec
        .edges
        .iter()
        .position(|&edge| temp_c <= edge)
        .unwrap_or(N_BINS))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinCounts {
    /// Regressor-bin day counts, cold to hot.
    pub counts: [u32; N_BINS],
    pub reference_days: u32,
    pub total_days: u32,
}

impl BinCounts {
    /// Count in Stata numbering: `temp(1)` is the hottest bin.
    pub fn temp(&self, j: usize) -> u32 {
        self.counts[N_BINS - j]
    }

    pub fn is_consistent(&self) -> bool {
        self.counts.iter().sum::<u32>() + self.reference_days == self.total_days
    }
}

pub fn count_bins(daily_temps: &[f64], spec: &BinSpec) -> Result<BinCounts> {
    let mut by_interval = [0u32; N_BINS + 1];
    for &t in daily_temps {
        by_interval[bin_index(t, spec)?] += 1;
    }
    let mut out = BinCounts {
        reference_days: by_interval[spec.reference],
        total_days: daily_temps.len() as u32,
        ..BinCounts::default()
    };
    for (slot, interval) in spec.regressor_intervals().enumerate() {
        out.counts[slot] = by_interval[interval];
    }
    Ok(out)
}

/// Dense row-major feature matrix aligned with the rows of a [`PanelDataset`].
/// Missing values are NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub labels: Vec<String>,
    pub n_rows: usize,
    pub data: Vec<f64>,
    pub lag_depth: u32,
}

impl FeatureMatrix {
    /// Nine bin columns, followed by `wind`, `sea`, `visb` when
    /// `include_controls` is set.
    pub fn from_panel(panel: &PanelDataset, spec: &BinSpec, include_controls: bool) -> Self {
        let mut labels = spec.ascii_labels();
        if include_controls {
            labels.extend(CONTROL_LABELS.iter().map(|s| s.to_string()));
        }
        let width = labels.len();
        let mut data = Vec::with_capacity(panel.rows.len() * width);
        for row in &panel.rows {
            data.extend(row.bins.counts.iter().map(|&c| f64::from(c)));
            if include_controls {
                data.extend(row_controls(row));
            }
        }
        FeatureMatrix {
            labels,
            n_rows: panel.rows.len(),
            data,
            lag_depth: 0,
        }
    }

    pub fn n_cols(&self) -> usize {
        self.labels.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.n_cols();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn column_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn column(&self, label: &str) -> Result<Vec<f64>> {
        let j = self
            .column_index(label)
            .ok_or_else(|| Error::UnknownVariable(label.to_string()))?;
        Ok((0..self.n_rows).map(|i| self.row(i)[j]).collect())
    }

    /// CSV with a header row of column labels; missing values are empty.
    pub fn to_csv(&self) -> String {
        let mut out = self.labels.join(",");
        out.push('\n');
        for i in 0..self.n_rows {
            let cells: Vec<String> = self
                .row(i)
                .iter()
                .map(|v| if v.is_nan() { String::new() } else { format!("{v}") })
                .collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

fn row_controls(row: &PanelRow) -> [f64; 3] {
    [row.wind, row.sea, row.visb].map(|v| v.unwrap_or(f64::NAN))
}

#[derive(Debug, Clone)]
pub struct LaggedPanel {
    pub features: FeatureMatrix,
    pub panel: PanelDataset,
    /// Set when no row had a lag source.
    pub warning: Option<String>,
}

/// Replaces every feature column of row `(firm, year)` with the values of row
/// `(firm, year - lag)`. Rows without a source row are dropped; gaps are not
/// filled.
pub fn build_lagged(panel: &PanelDataset, features: &FeatureMatrix, lag: u32) -> Result<LaggedPanel> {
    if features.n_rows != panel.rows.len() {
        return Err(Error::Validation(format!(
            "feature matrix has {} rows, panel has {}",
            features.n_rows,
            panel.rows.len()
        )));
    }
    if lag == 0 {
        return Ok(LaggedPanel {
            features: features.clone(),
            panel: panel.clone(),
            warning: None,
        });
    }
    let index: HashMap<(&str, i32), usize> = panel
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| ((r.firm_id.as_str(), r.year), i))
        .collect();

    let width = features.n_cols();
    let mut rows = Vec::new();
    let mut data = Vec::new();
    for row in &panel.rows {
        let source_year = row.year - lag as i32;
        if let Some(&src) = index.get(&(row.firm_id.as_str(), source_year)) {
            rows.push(row.clone());
            data.extend_from_slice(features.row(src));
        }
    }
    let warning = rows.is_empty().then(|| {
        format!("lag {lag} leaves no rows: no firm has observations {lag} years apart")
    });
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    let n_rows = rows.len();
    debug_assert_eq!(data.len(), n_rows * width);
    Ok(LaggedPanel {
        features: FeatureMatrix {
            labels: features
                .labels
                .iter()
                .map(|l| lag_label(l, lag))
                .collect(),
            n_rows,
            data,
            lag_depth: features.lag_depth + lag,
        },
        panel: PanelDataset {
            rows,
            join_report: panel.join_report.clone(),
        },
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bin_index_boundaries() {
        let spec = BinSpec::default();
        assert_eq!(bin_index(-12.0, &spec).unwrap(), 0);
        assert_eq!(bin_index(-10.0, &spec).unwrap(), 0);
        assert_eq!(bin_index(-9.99, &spec).unwrap(), 1);
        assert_eq!(bin_index(12.0, &spec).unwrap(), spec.reference_interval());
        assert_eq!(bin_index(15.0, &spec).unwrap(), spec.reference_interval());
        assert_eq!(bin_index(15.01, &spec).unwrap(), 6);
        assert_eq!(bin_index(30.0, &spec).unwrap(), 8);
        assert_eq!(bin_index(30.5, &spec).unwrap(), 9);
        assert!(matches!(bin_index(f64::NAN, &spec), Err(Error::Domain(_))));
        assert!(bin_index(f64::INFINITY, &spec).is_err());
    }

    #[test]
    fn labels_follow_cold_to_hot_order() {
        let spec = BinSpec::default();
        assert_eq!(
            spec.ascii_labels(),
            ["le_m10", "m10_m5", "m5_0", "0_5", "5_10", "15_20", "20_25", "25_30", "gt30"]
        );
        assert_eq!(spec.display_label(0), "≤ -10°C");
        assert_eq!(spec.display_label(7), "25~30°C");
        assert_eq!(spec.display_label(8), ">30°C");
        assert_eq!(spec.stata_name(8), "temp1");
        assert_eq!(spec.stata_name(0), "temp9");
        assert_eq!(spec.slot_of("temp1"), Some(8));
        assert_eq!(spec.pretty_label("L1_25_30"), "L25~30°C");
        assert_eq!(spec.pretty_label("L1_wind"), "Lwind");
        assert_eq!(spec.pretty_label("L2_gt30"), "L2>30°C");
    }

    #[test]
    fn count_bins_small_series() {
        let spec = BinSpec::default();
        let c = count_bins(&[-11.0, -11.0, 2.0, 12.0, 31.0], &spec).unwrap();
        assert_eq!(c.counts, [2, 0, 0, 1, 0, 0, 0, 0, 1]);
        assert_eq!(c.reference_days, 1);
        assert_eq!(c.total_days, 5);
        assert_eq!(c.temp(1), 1);
        assert_eq!(c.temp(9), 2);

        let empty = count_bins(&[], &spec).unwrap();
        assert_eq!(empty, BinCounts::default());
    }

    #[test]
    fn bin_spec_validation() {
        assert!(BinSpec::new(vec![0.0; 9], 5).is_err());
        assert!(BinSpec::new(vec![1.0, 2.0], 0).is_err());
        assert!(BinSpec::new((0..9).map(f64::from).collect(), 10).is_err());
        let s = BinSpec::new((0..9).map(|i| f64::from(i) * 2.5).collect(), 0).unwrap();
        assert_eq!(s.ascii_label(0), "0_2p5");
    }
}
