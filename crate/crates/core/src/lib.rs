//! Verification of probabilistic forecasts of extremes through the
//! distribution of their CRPS values.
//!
//! The crate provides closed-form and quadrature CRPS and weighted CRPS,
//! analytics for generalized Pareto tails, GP fitting over thresholds,
//! score-distribution diagnostics (qq/pp data, discrepancy,
//! Diebold–Mariano, Cramér–von Mises) with the extremes index built on
//! them, and two simulation testbeds with known conditional laws.
//!
//! ```
//! use crps_core::{crps, Distribution};
//!
//! let f = Distribution::exponential(1.0).unwrap();
//! assert!((crps(&f, 0.0).unwrap() - 0.5).abs() < 1e-15);
//! ```

pub mod distributions;
pub mod error;
pub mod evt_fit;
pub mod io;
pub mod numeric;
pub mod rng;
pub mod scoring;
pub mod simulation;
pub mod stats;
pub mod tail_analysis;
pub mod verification;

pub use distributions::{Distribution, Family, GpTail, SplicedTail};
pub use error::{Error, Result};
pub use evt_fit::{fit_gp, fit_gp_above, shift_scale, threshold_grid, FitMethod, GpFitResult};
pub use scoring::{crps, crps_closed, crps_ensemble, crps_quadrature, wcrps_quantile, WeightFunction};
pub use simulation::{ForecasterKind, Model};
pub use tail_analysis::{ambiguity_region, ambiguous_counterpart, expected_crps_pareto, splice_tail, CupGeometry};
pub use verification::{Forecast, ForecastObsRecord, IndexReport, ScoreSeries};
