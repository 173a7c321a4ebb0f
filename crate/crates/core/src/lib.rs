//! Temperature-bin fixed-effects panel regressions.
//!
//! The crate covers the full path from daily station weather to published
//! regression tables:
//!
//! - [`paneldata`]: CSV ingestion of daily weather and firm-year records, unit
//!   conversion, and the firm/weather join.
//! - [`tembin`]: nine-bin temperature day counts, feature matrices and lags.
//! - [`hdfe`]: singleton dropping, alternating-projection absorption of fixed
//!   effects and absorbed degrees of freedom.
//! - [`estimator`]: rank-revealing least squares, classical and CR1 covariance,
//!   inference summaries.
//! - [`study`]: table and coefficient-plot artifacts plus the CLI configuration.
//! - [`synth`]: seeded synthetic panels with planted coefficients and a
//!   dummy-variable oracle regression.

pub mod error;
pub mod estimator;
pub mod hdfe;
pub mod paneldata;
pub mod study;
pub mod synth;
pub mod tembin;

pub use error::{Error, Result};
