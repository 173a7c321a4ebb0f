use serde::{Deserialize, Serialize};

use super::format::{fmt_count, fmt_fixed, fmt_sig, render_grid, GridLine};
use crate::estimator::{Dimension, FitResult, RegressionSpec, VcovKind};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TableKind {
    Descriptives,
    Baseline,
    Robustness,
    OwnershipHet,
    IndustryHet,
}

impl TableKind {
    /// File stem of the written artifact.
    pub fn file_stem(self) -> &'static str {
        match self {
            TableKind::Descriptives => "descriptives",
            TableKind::Baseline => "baseline",
            TableKind::Robustness => "robustness",
            TableKind::OwnershipHet => "het_ownership",
            TableKind::IndustryHet => "het_industry",
        }
    }
}

/// Summary statistics of one variable. Statistics are `None` when
/// undefined (no observations, or one observation for the SD).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRow {
    pub variable: String,
    pub display: String,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(clippy::large_enum_variant)]
pub enum ColumnOutcome {
    Estimated(FitResult),
    Insufficient { reason: String, n_obs: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionColumn {
    /// `(1)`, `(2)`, ...
    pub number: String,
    /// Dependent variable or subsample name.
    pub title: String,
    pub spec: RegressionSpec,
    pub outcome: ColumnOutcome,
}

impl RegressionColumn {
    pub fn fit(&self) -> Option<&FitResult> {
        match &self.outcome {
            ColumnOutcome::Estimated(f) => Some(f),
            ColumnOutcome::Insufficient { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowLabel {
    pub key: String,
    pub display: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TableBody {
    Statistics(Vec<StatRow>),
    Regressions {
        rows: Vec<RowLabel>,
        columns: Vec<RegressionColumn>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableArtifact {
    pub kind: TableKind,
    pub title: String,
    pub body: TableBody,
    pub footnotes: Vec<String>,
}

const FE_ORDER: [Dimension; 4] = [Dimension::Year, Dimension::Firm, Dimension::City, Dimension::YearCity];

fn opt(v: Option<f64>) -> String {
    v.map(fmt_sig).unwrap_or_default()
}

impl TableArtifact {
    pub fn columns(&self) -> &[RegressionColumn] {
        match &self.body {
            TableBody::Regressions { columns, .. } => columns,
            TableBody::Statistics(_) => &[],
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.title);
        out.push_str(&match &self.body {
            TableBody::Statistics(rows) => render_stats(rows),
            TableBody::Regressions { rows, columns } => render_regressions(rows, columns),
        });
        for note in &self.footnotes {
            out.push_str(note);
            out.push('\n');
        }
        out
    }
}

fn render_stats(rows: &[StatRow]) -> String {
    let mut lines = vec![
        GridLine::Rule('='),
        GridLine::Cells(["Variable", "Mean", "SD", "Min", "Max", "N"].map(String::from).to_vec()),
        GridLine::Rule('-'),
    ];
    for r in rows {
        lines.push(GridLine::Cells(vec![
            r.display.clone(),
            opt(r.mean),
            opt(r.sd),
            opt(r.min),
            opt(r.max),
            fmt_count(r.n),
        ]));
    }
    lines.push(GridLine::Rule('='));
    render_grid(&lines)
}

fn row_of(first: &str, cells: impl Iterator<Item = String>) -> GridLine {
    GridLine::Cells(std::iter::once(first.to_string()).chain(cells).collect())
}

fn render_regressions(rows: &[RowLabel], columns: &[RegressionColumn]) -> String {
    let mut lines = vec![
        GridLine::Rule('='),
        row_of("", columns.iter().map(|c| c.number.clone())),
        row_of("VARIABLES", columns.iter().map(|c| c.title.clone())),
        GridLine::Rule('-'),
    ];
    for row in rows {
        let coef = columns.iter().map(|c| {
            c.fit()
                .and_then(|f| {
                    let j = f.index_of(&row.key)?;
                    Some(format!("{}{}", fmt_sig(*f.beta.get(j)?), f.stars.get(j).map_or("", String::as_str)))
                })
                .unwrap_or_default()
        });
        lines.push(row_of(&row.display, coef));
        let se = columns.iter().map(|c| {
            c.fit()
                .and_then(|f| f.index_of(&row.key).and_then(|j| f.se.get(j)).map(|s| format!("({})", fmt_sig(*s))))
                .unwrap_or_default()
        });
        lines.push(row_of("", se));
    }
    lines.push(row_of(
        "Constant",
        columns.iter().map(|c| c.fit().map(|f| fmt_sig(f.reported_constant)).unwrap_or_default()),
    ));
    lines.push(GridLine::Rule('-'));

    let yn = |b: bool| if b { "Y" } else { "N" }.to_string();
    lines.push(row_of("Controls", columns.iter().map(|c| yn(c.spec.include_controls))));
    for dim in FE_ORDER {
        if columns.iter().any(|c| c.spec.fixed_effects.contains(&dim)) {
            lines.push(row_of(
                dim.fe_label(),
                columns.iter().map(|c| yn(c.spec.fixed_effects.contains(&dim))),
            ));
        }
    }
    lines.push(row_of("SE", columns.iter().map(|c| c.spec.vcov.describe())));
    if columns.iter().any(|c| matches!(c.spec.vcov, VcovKind::ClusterRobust(_))) {
        lines.push(row_of(
            "Clusters",
            columns
                .iter()
                .map(|c| c.fit().and_then(|f| f.n_clusters).map(fmt_count).unwrap_or_default()),
        ));
    }
    lines.push(row_of(
        "Observations",
        columns.iter().map(|c| match &c.outcome {
            ColumnOutcome::Estimated(f) => fmt_count(f.n_obs),
            ColumnOutcome::Insufficient { .. } => "insufficient sample".into(),
        }),
    ));
    lines.push(row_of(
        "R-squared",
        columns.iter().map(|c| c.fit().map(|f| fmt_fixed(f.r2_full, 3)).unwrap_or_default()),
    ));
    lines.push(row_of(
        "Within R-squared",
        columns.iter().map(|c| c.fit().map(|f| fmt_fixed(f.r2_within, 3)).unwrap_or_default()),
    ));
    lines.push(GridLine::Rule('='));
    let mut out = render_grid(&lines);
    out.push_str("Standard errors in parentheses. *** p<0.01, ** p<0.05, * p<0.1\n");
    out.push_str("Constant is mean(y) - mean(x)'b over the estimation sample; no standard error.\n");
    for c in columns {
        if let ColumnOutcome::Insufficient { reason, n_obs } = &c.outcome {
            out.push_str(&format!("{} {}: insufficient sample ({} rows): {reason}\n", c.number, c.title, fmt_count(*n_obs)));
        }
        if let Some(f) = c.fit() {
            if !f.dropped_collinear.is_empty() {
                out.push_str(&format!("{} {}: dropped as collinear: {}\n", c.number, c.title, f.dropped_collinear.join(", ")));
            }
            if !f.m_exact {
                out.push_str(&format!("{} {}: absorbed dof is approximate (3+ fixed effects)\n", c.number, c.title));
            }
        }
    }
    out
}
