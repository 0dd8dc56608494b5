//! Nonparametric regression of a circular response on a functional covariate.
//!
//! The estimator smooths `sin Θ` and `cos Θ` with the same Nadaraya–Watson
//! weights over L² curve distances and recombines them with `atan2`:
//!
//! ```
//! use std::sync::Arc;
//! use funcirc::{fit, simulate_curve, Angle, Dataset, Grid, Kernel, Smoothing};
//!
//! let grid = Arc::new(Grid::uniform(51)?);
//! let curves = [0.2, 0.4, 0.6, 0.8]
//!     .iter()
//!     .map(|&u| simulate_curve(u, grid.clone(), 30.0))
//!     .collect::<Result<Vec<_>, _>>()?;
//! let responses = [0.1, 0.3, 0.5, 0.7].map(|r| Angle::new(r).unwrap()).to_vec();
//! let data = Dataset::new(curves, responses, None)?;
//!
//! let model = fit(data, Kernel::Quadratic, Smoothing::Bandwidth(5.0))?;
//! let chi = simulate_curve(0.5, grid, 30.0)?;
//! let direction = model.predict(&chi)?;
//! assert!(direction.radians() > 0.1 && direction.radians() < 0.7);
//! # Ok::<(), funcirc::Error>(())
//! ```

pub mod circular;
pub mod error;
pub mod functional;
pub mod kernel;
pub mod metrics;
pub mod regression;
pub mod sim;

pub use circular::{
    atan2_dir, circ_error_summary, circ_mean, cos_dissimilarity, mean_resultant_length,
    sample_von_mises, wrap_angle, Angle, CircErrorSummary, CircularSample,
};
pub use error::{Error, Result};
pub use functional::{
    angle_to_day, date_to_angle, day_to_angle, distance_matrix, distances_to, integrate_curve,
    l2_distance, parse_date, read_curve_table, read_curves_csv, read_responses_csv, simulate_curve,
    year_length, CsvOptions, Curve, CurveTable, Dataset, DistanceMatrix, Grid, DAILY_POINTS,
};
pub use kernel::{
    bandwidth_grid, kernel_eval, nw_weights, small_ball_estimate, GridParams, Kernel,
};
pub use metrics::{cape, case};
pub use regression::{
    ci_half_width, confidence_interval, estimate_sigma1, fit, loocv_score,
    median_positive_distance, normal_critical_value, select_bandwidth_cv, select_k_cv, CiEstimate,
    ConfidenceBand, CvOutcome, DegeneratePolicy, FittedModel, Pilots, Smoothing, VarianceSmoother,
    MODEL_FORMAT_VERSION,
};
pub use sim::{
    generate_dataset, regression_truth, run_replicate, run_replicates, standardized_error_sample,
    verify_variance_identity, AggregateRow, Estimator, RegressionKind, ReplicateResult,
    ScenarioConfig, ScenarioOutcome, StandardizedSample, VarianceDiagnostic,
};
