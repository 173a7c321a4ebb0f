use std::cmp::Reverse;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coefplot::{emit_coefplot, point, CoefPlotArtifact};
use super::config::StudyConfig;
use super::tables::{ColumnOutcome, RegressionColumn, RowLabel, StatRow, TableArtifact, TableBody, TableKind};
use crate::estimator::{fit_spec, FitResult, RegressionSpec, SampleFilter, VcovKind};
use crate::paneldata::{Ownership, PanelDataset};
use crate::tembin::{build_lagged, BinSpec, FeatureMatrix, CONTROL_LABELS, N_BINS};
use crate::{Error, Result};

/// Variables summarized by default: outcome, controls, then bins cold to hot.
pub fn default_describe_vars(bins: &BinSpec) -> Vec<String> {
    let mut v = vec!["cvalue".to_string()];
    v.extend(CONTROL_LABELS.iter().map(|s| s.to_string()));
    v.extend(bins.ascii_labels());
    v
}

/// Mean, sample SD (n - 1), min and max over the finite entries of `values`.
pub fn describe_column(variable: &str, display: &str, values: &[f64]) -> StatRow {
    let xs: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let n = xs.len();
    let mean = (n > 0).then(|| xs.iter().sum::<f64>() / n as f64);
    let sd = mean.filter(|_| n > 1).map(|m| {
        let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    });
    StatRow {
        variable: variable.to_string(),
        display: display.to_string(),
        mean,
        sd,
        min: xs.iter().copied().reduce(f64::min),
        max: xs.iter().copied().reduce(f64::max),
        n,
    }
}

pub fn run_descriptives(panel: &PanelDataset, bins: &BinSpec, variables: &[String]) -> Result<TableArtifact> {
    let rows = variables
        .iter()
        .map(|v| Ok(describe_column(v, &bins.pretty_label(v), &panel.variable(v, bins)?)))
        .collect::<Result<_>>()?;
    Ok(TableArtifact {
        kind: TableKind::Descriptives,
        title: "Descriptive statistics".into(),
        body: TableBody::Statistics(rows),
        footnotes: vec!["SD uses the n - 1 denominator; statistics skip missing values.".into()],
    })
}

fn spec_for(config: &StudyConfig, name: String, regressors: Vec<String>, controls: bool) -> RegressionSpec {
    let mut spec = RegressionSpec::new(name, regressors);
    spec.fixed_effects = config.fixed_effects.clone();
    spec.include_controls = controls;
    spec.tolerance = config.tolerance;
    spec.max_iters = config.max_iters;
    spec
}

/// Columns (1)-(4): bins; bins + controls; then both again with clustered SEs.
fn four_specs(config: &StudyConfig, prefix: &str, bins: &[String], controls: &[String]) -> Vec<RegressionSpec> {
    let with_controls: Vec<String> = bins.iter().chain(controls).cloned().collect();
    let shapes = [
        (bins.to_vec(), false, VcovKind::Classical),
        (with_controls.clone(), true, VcovKind::Classical),
        (bins.to_vec(), false, VcovKind::ClusterRobust(config.cluster)),
        (with_controls, true, VcovKind::ClusterRobust(config.cluster)),
    ];
    shapes
        .into_iter()
        .enumerate()
        .map(|(i, (regs, controls, vcov))| {
            let mut s = spec_for(config, format!("{prefix} ({})", i + 1), regs, controls);
            s.vcov = vcov;
            s
        })
        .collect()
}

fn row_labels(bins: &BinSpec, keys: &[String]) -> Vec<RowLabel> {
    keys.iter()
        .map(|k| RowLabel {
            key: k.clone(),
            display: bins.pretty_label(k),
        })
        .collect()
}

/// Fits every spec concurrently; results keep spec order, and the first
/// failing spec in that order determines the error.
fn fit_all(panel: &PanelDataset, features: &FeatureMatrix, specs: &[RegressionSpec]) -> Result<Vec<FitResult>> {
    let fits: Vec<Result<FitResult>> = specs.par_iter().map(|s| fit_spec(panel, features, s)).collect();
    let fits = fits.into_iter().collect::<Result<Vec<_>>>()?;
    for (s, f) in specs.iter().zip(&fits) {
        log::info!(
            "{}: n={} k={} m={} iterations={} singletons={}",
            s.name,
            f.n_obs,
            f.k_regressors,
            f.m_absorbed,
            f.iterations,
            f.singletons_dropped
        );
    }
    Ok(fits)
}

fn numbered(specs: Vec<RegressionSpec>, fits: Vec<FitResult>) -> Vec<RegressionColumn> {
    specs
        .into_iter()
        .zip(fits)
        .enumerate()
        .map(|(i, (spec, fit))| RegressionColumn {
            number: format!("({})", i + 1),
            title: "cvalue".into(),
            spec,
            outcome: ColumnOutcome::Estimated(fit),
        })
        .collect()
}

pub fn run_baseline(panel: &PanelDataset, config: &StudyConfig) -> Result<TableArtifact> {
    let bins = config.bin_spec()?;
    let features = FeatureMatrix::from_panel(panel, &bins, true);
    let bin_labels = bins.ascii_labels();
    let controls: Vec<String> = CONTROL_LABELS.iter().map(|s| s.to_string()).collect();
    let specs = four_specs(config, "baseline", &bin_labels, &controls);
    let fits = fit_all(panel, &features, &specs)?;
    let keys: Vec<String> = bin_labels.into_iter().chain(controls).collect();
    Ok(TableArtifact {
        kind: TableKind::Baseline,
        title: "Baseline regression".into(),
        body: TableBody::Regressions {
            rows: row_labels(&bins, &keys),
            columns: numbered(specs, fits),
        },
        footnotes: vec![format!(
            "Reference bin {} omitted.",
            bins.interval_display(bins.reference_interval())
        )],
    })
}

pub fn run_robustness(panel: &PanelDataset, config: &StudyConfig) -> Result<TableArtifact> {
    let lag = config.lag;
    if lag < 1 {
        return Err(Error::Config("robustness needs lag >= 1".into()));
    }
    let bins = config.bin_spec()?;
    let features = FeatureMatrix::from_panel(panel, &bins, true);
    let lagged = build_lagged(panel, &features, lag)?;
    if lagged.panel.is_empty() {
        return Err(Error::EmptySample.in_spec(format!("robustness: lag {lag} trim leaves no rows")));
    }
    let bin_labels: Vec<String> = lagged.features.labels[..N_BINS].to_vec();
    let controls: Vec<String> = lagged.features.labels[N_BINS..].to_vec();
    let specs = four_specs(config, "robustness", &bin_labels, &controls);
    let fits = fit_all(&lagged.panel, &lagged.features, &specs)?;
    let keys: Vec<String> = bin_labels.into_iter().chain(controls).collect();
    let first_year = lagged.panel.rows.iter().map(|r| r.year).min().unwrap_or_default();
    Ok(TableArtifact {
        kind: TableKind::Robustness,
        title: "Robustness test".into(),
        body: TableBody::Regressions {
            rows: row_labels(&bins, &keys),
            columns: numbered(specs, fits),
        },
        footnotes: vec![
            format!("All regressors lagged by {lag} year(s); sample starts in {first_year}."),
            "The hottest-bin row is lagged like every other regressor.".into(),
        ],
    })
}

/// Estimation failures that mark a subsample column as insufficient rather
/// than aborting the table.
fn is_insufficient(e: &Error) -> bool {
    match e {
        Error::EmptySample | Error::Rank | Error::DofExhausted { .. } | Error::InsufficientClusters(_) => true,
        Error::Spec { source, .. } => is_insufficient(source),
        _ => false,
    }
}

fn subsample_columns(
    panel: &PanelDataset,
    features: &FeatureMatrix,
    specs: Vec<RegressionSpec>,
    titles: Vec<String>,
) -> Result<Vec<RegressionColumn>> {
    let fits: Vec<Result<FitResult>> = specs.par_iter().map(|s| fit_spec(panel, features, s)).collect();
    specs
        .into_iter()
        .zip(fits)
        .zip(titles)
        .enumerate()
        .map(|(i, ((spec, fit), title))| {
            let outcome = match fit {
                Ok(f) => ColumnOutcome::Estimated(f),
                Err(e) if is_insufficient(&e) => {
                    log::warn!("{e}");
                    ColumnOutcome::Insufficient {
                        reason: e.to_string(),
                        n_obs: panel.rows.iter().filter(|r| spec.sample_filter.accepts(r)).count(),
                    }
                }
                Err(e) => return Err(e),
            };
            Ok(RegressionColumn {
                number: format!("({})", i + 1),
                title,
                spec,
                outcome,
            })
        })
        .collect()
}

fn with_controls(bins: &BinSpec) -> Vec<String> {
    bins.ascii_labels()
        .into_iter()
        .chain(CONTROL_LABELS.iter().map(|s| s.to_string()))
        .collect()
}

pub fn run_ownership_het(panel: &PanelDataset, config: &StudyConfig) -> Result<TableArtifact> {
    let bins = config.bin_spec()?;
    let features = FeatureMatrix::from_panel(panel, &bins, true);
    let regressors = with_controls(&bins);
    let specs: Vec<RegressionSpec> = Ownership::ALL
        .iter()
        .map(|&o| {
            let mut s = spec_for(config, format!("ownership {o}"), regressors.clone(), true);
            s.sample_filter = SampleFilter::Ownership(o);
            s
        })
        .collect();
    let titles = Ownership::ALL.iter().map(|o| o.column_title().to_string()).collect();
    let columns = subsample_columns(panel, &features, specs, titles)?;
    Ok(TableArtifact {
        kind: TableKind::OwnershipHet,
        title: "Ownership heterogeneity analysis".into(),
        body: TableBody::Regressions {
            rows: row_labels(&bins, &regressors),
            columns,
        },
        footnotes: vec!["Each column is estimated on its ownership subsample alone.".into()],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndustryHet {
    pub table: TableArtifact,
    pub plot: CoefPlotArtifact,
    /// Observation counts of every industry before screening.
    pub counts: BTreeMap<String, usize>,
}

/// Industries with at least `min_obs` rows, largest first; ties go to the
/// higher industry code.
pub fn screen_industries(panel: &PanelDataset, min_obs: usize) -> (Vec<(String, usize)>, BTreeMap<String, usize>) {
    let mut counts = BTreeMap::new();
    for r in &panel.rows {
        *counts.entry(r.industry_code.clone()).or_insert(0usize) += 1;
    }
    let mut survivors: Vec<(String, usize)> = counts
        .iter()
        .filter(|(_, &n)| n >= min_obs)
        .map(|(k, &n)| (k.clone(), n))
        .collect();
    survivors.sort_by(|a, b| (Reverse(a.1), Reverse(&a.0)).cmp(&(Reverse(b.1), Reverse(&b.0))));
    (survivors, counts)
}

pub fn run_industry_het(panel: &PanelDataset, config: &StudyConfig) -> Result<IndustryHet> {
    let bins = config.bin_spec()?;
    let (survivors, counts) = screen_industries(panel, config.industry_min_obs);
    if survivors.is_empty() {
        return Err(Error::EmptySample.in_spec(format!(
            "industry heterogeneity: no industry has at least {} observations",
            config.industry_min_obs
        )));
    }
    let hottest = bins.ascii_label(N_BINS - 1);
    let bin_regs = if config.industry_all_bins {
        bins.ascii_labels()
    } else {
        vec![hottest.clone()]
    };
    let regressors: Vec<String> = bin_regs
        .into_iter()
        .chain(CONTROL_LABELS.iter().map(|s| s.to_string()))
        .collect();
    let features = FeatureMatrix::from_panel(panel, &bins, true);
    let specs: Vec<RegressionSpec> = survivors
        .iter()
        .map(|(code, _)| {
            let mut s = spec_for(config, format!("industry {code}"), regressors.clone(), true);
            s.fixed_effects = config.industry_fixed_effects.clone();
            s.sample_filter = SampleFilter::Industry(code.clone());
            s
        })
        .collect();
    let titles = survivors.iter().map(|(code, _)| code.clone()).collect();
    let columns = subsample_columns(panel, &features, specs, titles)?;

    let points = columns
        .iter()
        .filter_map(|c| {
            let f = c.fit()?;
            let j = f.index_of(&hottest)?;
            Some(point(c.title.clone(), c.title.clone(), f.beta[j], f.se[j]))
        })
        .collect();
    let fe_names: Vec<&str> = config.industry_fixed_effects.iter().map(|d| d.fe_label()).collect();
    let plot = CoefPlotArtifact {
        title: format!("Industry heterogeneity: {} effect", bins.display_label(N_BINS - 1)),
        points,
        zero_line: true,
    };
    let table = TableArtifact {
        kind: TableKind::IndustryHet,
        title: "Industry heterogeneity analysis".into(),
        body: TableBody::Regressions {
            rows: row_labels(&bins, &regressors),
            columns,
        },
        footnotes: vec![format!(
            "Industries with at least {} observations, largest first; {} of {} kept. Fixed effects: {}.",
            config.industry_min_obs,
            survivors.len(),
            counts.len(),
            fe_names.join(", ")
        )],
    };
    Ok(IndustryHet { table, plot, counts })
}

/// Coefficient plot of the bins in a baseline-style table column, coldest
/// bin first.
pub fn bin_coefplot(table: &TableArtifact, column: usize, bins: &BinSpec) -> Result<CoefPlotArtifact> {
    let col = table
        .columns()
        .get(column)
        .ok_or_else(|| Error::Validation(format!("table has no column {}", column + 1)))?;
    let fit = col
        .fit()
        .ok_or_else(|| Error::Validation(format!("column {} was not estimated", col.number)))?;
    let order: Vec<String> = fit.labels.iter().take(N_BINS).cloned().collect();
    let mut plot = emit_coefplot(fit, &order, bins)?;
    plot.title = format!("Temperature bin effects on cvalue, column {}", col.number);
    Ok(plot)
}

/// Artifacts of a full run, in write order.
#[derive(Debug, Clone)]
pub struct PipelineArtifacts {
    pub tables: Vec<TableArtifact>,
    pub plots: Vec<(String, CoefPlotArtifact)>,
}

pub fn run_pipeline(panel: &PanelDataset, config: &StudyConfig) -> Result<PipelineArtifacts> {
    use super::config::HetDimension;
    let bins = config.bin_spec()?;
    let mut tables = vec![run_descriptives(panel, &bins, &default_describe_vars(&bins))?];
    let baseline = run_baseline(panel, config)?;
    let mut plots = vec![("coefplot_baseline".to_string(), bin_coefplot(&baseline, 1, &bins)?)];
    tables.push(baseline);
    tables.push(run_robustness(panel, config)?);
    if config.het_dimensions.contains(&HetDimension::Ownership) {
        tables.push(run_ownership_het(panel, config)?);
    }
    if config.het_dimensions.contains(&HetDimension::Industry) {
        let het = run_industry_het(panel, config)?;
        tables.push(het.table);
        plots.push(("coefplot_industry".to_string(), het.plot));
    }
    Ok(PipelineArtifacts { tables, plots })
}
