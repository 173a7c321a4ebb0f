//! Least-squares estimation on absorbed data with classical or CR1
//! covariance.

mod matrix;
mod qr;
mod summary;
mod vcov;

use serde::{Deserialize, Serialize};

use crate::hdfe::{self, Factor, FeSpec};
use crate::paneldata::{Ownership, PanelDataset, PanelRow};
use crate::tembin::FeatureMatrix;
use crate::{Error, Result};

pub use matrix::SquareMatrix;
pub use qr::{ols, OlsFit, COLLINEARITY_TOL};
pub use summary::{p_value, stars, summarize_fit, FitParts, FitResult, Z_95};
pub use vcov::{classical_vcov, cluster_vcov, Dof};

/// Panel dimension usable as a fixed effect or cluster variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dimension {
    Firm,
    Year,
    City,
    YearCity,
}

impl Dimension {
    pub fn name(self) -> &'static str {
        match self {
            Dimension::Firm => "firm",
            Dimension::Year => "year",
            Dimension::City => "city",
            Dimension::YearCity => "year_city",
        }
    }

    pub fn fe_label(self) -> &'static str {
        match self {
            Dimension::Firm => "Firm FE",
            Dimension::Year => "Year FE",
            Dimension::City => "City FE",
            Dimension::YearCity => "Year-by-city FE",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "firm" | "firm_id" => Ok(Dimension::Firm),
            "year" => Ok(Dimension::Year),
            "city" | "city_code" => Ok(Dimension::City),
            "year_city" | "yearcity" | "year-city" => Ok(Dimension::YearCity),
            other => Err(Error::Config(format!("unknown panel dimension `{other}`"))),
        }
    }

    /// Factor over the given panel rows.
    pub fn factor(self, rows: &[&PanelRow]) -> Factor {
        match self {
            Dimension::Firm => {
                let keys: Vec<&str> = rows.iter().map(|r| r.firm_id.as_str()).collect();
                Factor::from_keys(self.name(), &keys)
            }
            Dimension::Year => {
                let keys: Vec<i32> = rows.iter().map(|r| r.year).collect();
                Factor::from_keys(self.name(), &keys)
            }
            Dimension::City => {
                let keys: Vec<&str> = rows.iter().map(|r| r.city_code.as_str()).collect();
                Factor::from_keys(self.name(), &keys)
            }
            Dimension::YearCity => {
                let keys: Vec<(i32, &str)> = rows.iter().map(|r| (r.year, r.city_code.as_str())).collect();
                Factor::from_keys(self.name(), &keys)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VcovKind {
    Classical,
    ClusterRobust(Dimension),
}

impl VcovKind {
    pub fn describe(self) -> String {
        match self {
            VcovKind::Classical => "classical".into(),
            VcovKind::ClusterRobust(d) => format!("cluster({})", d.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SampleFilter {
    All,
    Ownership(Ownership),
    Industry(String),
    MinYear(i32),
}

impl SampleFilter {
    pub fn accepts(&self, row: &PanelRow) -> bool {
        match self {
            SampleFilter::All => true,
            SampleFilter::Ownership(o) => row.ownership == *o,
            SampleFilter::Industry(code) => row.industry_code == *code,
            SampleFilter::MinYear(y) => row.year >= *y,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            SampleFilter::All => "all rows".into(),
            SampleFilter::Ownership(o) => format!("ownership == {o}"),
            SampleFilter::Industry(c) => format!("industry_code == {c}"),
            SampleFilter::MinYear(y) => format!("year >= {y}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionSpec {
    pub name: String,
    /// Feature-matrix column labels, in output order.
    pub regressors: Vec<String>,
    pub fixed_effects: Vec<Dimension>,
    pub vcov: VcovKind,
    pub sample_filter: SampleFilter,
    /// Whether the weather controls are among the regressors (table footer).
    pub include_controls: bool,
    pub tolerance: f64,
    pub max_iters: usize,
}

impl RegressionSpec {
    pub fn new(name: impl Into<String>, regressors: Vec<String>) -> Self {
        RegressionSpec {
            name: name.into(),
            regressors,
            fixed_effects: vec![Dimension::Firm, Dimension::Year],
            vcov: VcovKind::Classical,
            sample_filter: SampleFilter::All,
            include_controls: false,
            tolerance: hdfe::DEFAULT_TOLERANCE,
            max_iters: hdfe::DEFAULT_MAX_ITERS,
        }
    }
}

/// Fits `y` on `x` after absorbing `fe`. An empty `fe` absorbs a global
/// intercept. Singletons are dropped first; the cluster factor, when given,
/// is subset alongside.
pub fn estimate(
    y: &[f64],
    x: &[Vec<f64>],
    labels: &[String],
    fe: &FeSpec,
    cluster: Option<(Dimension, &Factor)>,
) -> Result<FitResult> {
    let n_in = y.len();
    if n_in == 0 {
        return Err(Error::EmptySample);
    }
    let fe = if fe.factors.is_empty() {
        FeSpec::with_tolerance(
            vec![Factor::from_levels("intercept", vec![0; n_in])],
            fe.tolerance,
            fe.max_iters,
        )?
    } else {
        fe.clone()
    };
    let drop = hdfe::drop_singletons(&fe);
    if drop.kept.is_empty() {
        return Err(Error::EmptySample);
    }
    let rows = &drop.kept;
    let fe = fe.subset(rows);
    let take = |c: &[f64]| -> Vec<f64> { rows.iter().map(|&i| c[i]).collect() };
    let y_raw = take(y);
    let x_raw: Vec<Vec<f64>> = x.iter().map(|c| take(c)).collect();
    let n = y_raw.len();

    let mean = |c: &[f64]| c.iter().sum::<f64>() / c.len() as f64;
    let y_mean = mean(&y_raw);
    let tss_raw: f64 = y_raw.iter().map(|v| (v - y_mean).powi(2)).sum();

    let mut cols = Vec::with_capacity(x_raw.len() + 1);
    cols.push(y_raw.clone());
    cols.extend(x_raw.iter().cloned());
    let absorbed = hdfe::absorb(&cols, &fe)?;
    let mut demeaned = absorbed.columns;
    let y_dm = demeaned.remove(0);

    let fit = ols(&y_dm, &demeaned, labels)?;
    let dof = Dof {
        n,
        k: fit.kept.len(),
        m: absorbed.absorbed_dof.m,
    };
    let kept_cols: Vec<&[f64]> = fit.kept.iter().map(|&j| demeaned[j].as_slice()).collect();
    let (vcov, vcov_kind, n_clusters) = match cluster {
        None => (classical_vcov(&fit.residuals, &fit.xtx_inv, dof)?, VcovKind::Classical, None),
        Some((dim, c)) => {
            let c = c.subset(rows);
            let v = cluster_vcov(&fit.residuals, &kept_cols, &fit.xtx_inv, &c, dof)?;
            (v, VcovKind::ClusterRobust(dim), Some(c.n_levels()))
        }
    };

    let x_means: f64 = fit
        .kept
        .iter()
        .zip(&fit.beta)
        .map(|(&j, b)| b * mean(&x_raw[j]))
        .sum();
    Ok(summarize_fit(FitParts {
        labels: fit.kept.iter().map(|&j| labels[j].clone()).collect(),
        beta: fit.beta,
        vcov,
        vcov_kind,
        n_clusters,
        dof,
        m_exact: absorbed.absorbed_dof.exact,
        rss: fit.residuals.iter().map(|e| e * e).sum(),
        tss_raw,
        tss_within: y_dm.iter().map(|v| v * v).sum(),
        reported_constant: y_mean - x_means,
        dropped_collinear: fit.dropped_collinear,
        singletons_dropped: drop.dropped,
        iterations: absorbed.iterations_used,
    }))
}

/// Runs one regression spec on a panel and its aligned feature matrix.
/// Rows with a missing outcome or regressor are excluded listwise.
pub fn fit_spec(panel: &PanelDataset, features: &FeatureMatrix, spec: &RegressionSpec) -> Result<FitResult> {
    run_spec(panel, features, spec).map_err(|e| e.in_spec(spec.name.clone()))
}

fn run_spec(panel: &PanelDataset, features: &FeatureMatrix, spec: &RegressionSpec) -> Result<FitResult> {
    if features.n_rows != panel.rows.len() {
        return Err(Error::Validation("feature matrix and panel differ in length".into()));
    }
    let cols: Vec<usize> = spec
        .regressors
        .iter()
        .map(|l| {
            features
                .column_index(l)
                .ok_or_else(|| Error::UnknownVariable(l.clone()))
        })
        .collect::<Result<_>>()?;
    let rows: Vec<usize> = (0..panel.rows.len())
        .filter(|&i| {
            let r = &panel.rows[i];
            spec.sample_filter.accepts(r)
                && r.cvalue.is_finite()
                && cols.iter().all(|&j| features.row(i)[j].is_finite())
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::EmptySample);
    }
    let prow: Vec<&PanelRow> = rows.iter().map(|&i| &panel.rows[i]).collect();
    let y: Vec<f64> = prow.iter().map(|r| r.cvalue).collect();
    let x: Vec<Vec<f64>> = cols
        .iter()
        .map(|&j| rows.iter().map(|&i| features.row(i)[j]).collect())
        .collect();
    let factors = spec.fixed_effects.iter().map(|d| d.factor(&prow)).collect();
    let fe = FeSpec::with_tolerance(factors, spec.tolerance, spec.max_iters)?;
    let cluster = match spec.vcov {
        VcovKind::Classical => None,
        VcovKind::ClusterRobust(d) => Some((d, d.factor(&prow))),
    };
    estimate(&y, &x, &spec.regressors, &fe, cluster.as_ref().map(|(d, f)| (*d, f)))
}
