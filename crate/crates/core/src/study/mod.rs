//! Reproduction of the study's tables and figures from a joined panel:
//! descriptives, baseline and lagged regressions, ownership and industry
//! heterogeneity, and coefficient plots.

mod coefplot;
mod config;
mod format;
mod io;
mod run;
mod tables;

pub use coefplot::{emit_coefplot, CoefPlotArtifact, CoefPoint};
pub use config::{HetDimension, StudyConfig, WeatherUnits, DEFAULT_INDUSTRY_MIN_OBS};
pub use format::{fmt_count, fmt_sci, fmt_sig};
pub use io::{ensure_dir, load_panel, read_text, write_ingest, write_plot, write_table, write_text, IngestLog};
pub use run::{
    bin_coefplot, default_describe_vars, describe_column, run_baseline, run_descriptives, run_industry_het,
    run_ownership_het, run_pipeline, run_robustness, screen_industries, IndustryHet, PipelineArtifacts,
};
pub use tables::{ColumnOutcome, RegressionColumn, RowLabel, StatRow, TableArtifact, TableBody, TableKind};
