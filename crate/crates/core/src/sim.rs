//! Simulation study: synthetic curves with von Mises noise around a known
//! regression direction, replicated bandwidth selection, and Monte Carlo
//! checks of the trigonometric moment identities.
//!
//! Every replicate draws from its own `ChaCha8Rng` seeded with
//! `seed ^ replicate_index`, so results do not depend on how replicates are
//! scheduled across threads.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circular::{atan2_dir, sample_von_mises, Angle};
use crate::error::{Error, Result};
use crate::functional::{
    distance_matrix, distances_to, integrate_curve, simulate_curve, Curve, Dataset, Grid,
};
use crate::kernel::{bandwidth_grid, GridParams, Kernel};
use crate::regression::{
    argmin_trace, fit, fitted_values, median_positive_distance, select_bandwidth_dm, select_k_dm,
    total_cos_loss, ConfidenceBand, Pilots, Smoothing, UnitVectors,
};

/// Slack allowed on `acos` arguments for quadrature error in `∫X`.
const ACOS_SLACK: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegressionKind {
    /// `atan2(0.5 + ∫X, ∫X)`
    R1,
    /// `acos(−0.3 ∫X) + 1.5 acos(0.4 ∫X)`
    R2,
}

impl fmt::Display for RegressionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegressionKind::R1 => "r1",
            RegressionKind::R2 => "r2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Nw,
    Knn,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Nw => "nw",
            Estimator::Knn => "knn",
        })
    }
}

/// One simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub regression_kind: RegressionKind,
    pub n: usize,
    pub kappa: f64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_estimator")]
    pub estimator: Estimator,
    #[serde(default = "default_kernel")]
    pub kernel: Kernel,
    #[serde(default)]
    pub bandwidth_grid: GridParams,
}

fn default_replicates() -> usize {
    100
}

fn default_grid_size() -> usize {
    101
}

fn default_estimator() -> Estimator {
    Estimator::Nw
}

fn default_kernel() -> Kernel {
    Kernel::Quadratic
}

impl ScenarioConfig {
    /// Defaults for everything except the four design factors.
    pub fn new(
        regression_kind: RegressionKind,
        estimator: Estimator,
        n: usize,
        kappa: f64,
    ) -> Self {
        ScenarioConfig {
            regression_kind,
            n,
            kappa,
            replicates: default_replicates(),
            grid_size: default_grid_size(),
            seed: 0,
            estimator,
            kernel: default_kernel(),
            bandwidth_grid: GridParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid(format!(
                "scenario n must be >= 2, got {}",
                self.n
            )));
        }
        if self.kappa.is_nan() || self.kappa < 0.0 {
            return Err(Error::invalid(format!(
                "kappa must be >= 0, got {}",
                self.kappa
            )));
        }
        if self.replicates < 1 {
            return Err(Error::invalid("scenario needs at least one replicate"));
        }
        if self.grid_size < 2 {
            return Err(Error::invalid("grid_size must be >= 2"));
        }
        Ok(())
    }

    fn rng(&self, replicate: usize) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ replicate as u64)
    }
}

fn checked_acos(x: f64, integral: f64) -> Result<f64> {
    if x.abs() > 1.0 + ACOS_SLACK {
        return Err(Error::invalid(format!(
            "acos argument {x} out of range (curve integral {integral})"
        )));
    }
    Ok(x.clamp(-1.0, 1.0).acos())
}

/// True regression direction at a curve.
pub fn regression_truth(kind: RegressionKind, c: &Curve) -> Result<Angle> {
    let integral = integrate_curve(c);
    match kind {
        RegressionKind::R1 => atan2_dir(0.5 + integral, integral),
        RegressionKind::R2 => {
            let a = checked_acos(-0.3 * integral, integral)?;
            let b = checked_acos(0.4 * integral, integral)?;
            Angle::new(a + 1.5 * b)
        }
    }
}

/// Draw one sample: curves from `U ~ U[0,1]`, responses `m(X) + ε` with
/// `ε ~ vM(0, κ)`. Returns the dataset and the noiseless directions.
pub fn generate_dataset<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<(Dataset, Vec<Angle>)> {
    cfg.validate()?;
    let grid = Arc::new(Grid::uniform(cfg.grid_size)?);
    let mut curves = Vec::with_capacity(cfg.n);
    let mut truth = Vec::with_capacity(cfg.n);
    let mut responses = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let u: f64 = rng.random();
        let curve = simulate_curve(u, grid.clone(), 30.0)?;
        let m = regression_truth(cfg.regression_kind, &curve)?;
        let eps = sample_von_mises(Angle::ZERO, cfg.kappa, rng)?;
        responses.push(m.rotate(eps.radians()));
        truth.push(m);
        curves.push(curve);
    }
    Ok((Dataset::new(curves, responses, None)?, truth))
}

/// Cross-validated and oracle errors of one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub case_cv: f64,
    pub case_oracle: f64,
    /// Selected bandwidth (or neighbour count in kNN mode).
    pub smoothing_cv: f64,
    /// CASE-minimising bandwidth (or neighbour count) from the same grid.
    pub smoothing_oracle: f64,
}

/// Run one replicate. `Ok(None)` when no candidate has a finite CV score.
pub fn run_replicate(cfg: &ScenarioConfig, index: usize) -> Result<Option<ReplicateResult>> {
    let mut rng = cfg.rng(index);
    let (data, truth) = generate_dataset(cfg, &mut rng)?;
    let dm = distance_matrix(&data);
    let units = UnitVectors::new(data.responses());
    let responses = data.responses();
    let n = truth.len() as f64;

    // CASE of the in-sample fit for each candidate; the CV choice and the
    // oracle come from the same candidate list.
    let (cv, candidates): (_, Vec<(f64, Smoothing)>) = match cfg.estimator {
        Estimator::Nw => {
            let grid = match bandwidth_grid(&dm, cfg.bandwidth_grid) {
                Ok(g) => g,
                Err(Error::DegenerateDataset(_)) => return Ok(None),
                Err(e) => return Err(e),
            };
            let cv = select_bandwidth_dm(&units, responses, &dm, cfg.kernel, &grid);
            let cands = grid.iter().map(|&h| (h, Smoothing::Bandwidth(h))).collect();
            (cv.map(|o| o.best), cands)
        }
        Estimator::Knn => {
            let ks: Vec<usize> = (1..cfg.n).collect();
            let cv = select_k_dm(&units, responses, &dm, &ks);
            let cands = ks
                .iter()
                .map(|&k| (k as f64, Smoothing::Neighbors(k)))
                .collect();
            (cv.map(|o| o.best as f64), cands)
        }
    };
    let smoothing_cv = match cv {
        Ok(v) => v,
        Err(Error::NoFeasibleBandwidth) | Err(Error::InvalidArgument(_)) => return Ok(None),
        Err(e) => return Err(e),
    };

    let case_trace: Vec<(f64, f64)> = candidates
        .par_iter()
        .map(|&(value, smoothing)| {
            let fitted = fitted_values(&units, &dm, smoothing, cfg.kernel);
            (value, total_cos_loss(&fitted, &truth) / n)
        })
        .collect();
    let case_cv = case_trace
        .iter()
        .find(|(v, _)| *v == smoothing_cv)
        .map(|&(_, c)| c)
        .expect("CV choice is one of the candidates");
    let oracle = argmin_trace(case_trace)?;
    Ok(Some(ReplicateResult {
        case_cv,
        case_oracle: oracle.best_score,
        smoothing_cv,
        smoothing_oracle: oracle.best,
    }))
}

/// Averages over the feasible replicates of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub kind: RegressionKind,
    pub estimator: Estimator,
    pub n: usize,
    pub kappa: f64,
    pub replicates: usize,
    pub mean_case_cv: f64,
    pub mean_case_oracle: f64,
    /// Replicates dropped because CV found no feasible candidate.
    pub excluded: usize,
}

impl AggregateRow {
    pub const CSV_HEADER: &'static str =
        "kind,estimator,n,kappa,replicates,mean_case_cv,mean_case_oracle,excluded";

    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.kind,
            self.estimator,
            self.n,
            self.kappa,
            self.replicates,
            self.mean_case_cv,
            self.mean_case_oracle,
            self.excluded
        )
    }
}

/// Aggregate row plus the per-replicate results (`None` = excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutcome {
    pub row: AggregateRow,
    pub per_replicate: Vec<Option<ReplicateResult>>,
}

/// Run every replicate of a scenario and average the feasible ones.
///
/// Replicates run in parallel; they are collected in index order and summed
/// sequentially, so the row is bit-identical for a given seed.
pub fn run_replicates(cfg: &ScenarioConfig) -> Result<ScenarioOutcome> {
    cfg.validate()?;
    let per_replicate = (0..cfg.replicates)
        .into_par_iter()
        .map(|i| run_replicate(cfg, i))
        .collect::<Result<Vec<_>>>()?;
    let feasible: Vec<&ReplicateResult> = per_replicate.iter().flatten().collect();
    let excluded = per_replicate.len() - feasible.len();
    let mean = |f: fn(&ReplicateResult) -> f64| {
        if feasible.is_empty() {
            f64::NAN
        } else {
            feasible.iter().map(|r| f(r)).sum::<f64>() / feasible.len() as f64
        }
    };
    let row = AggregateRow {
        kind: cfg.regression_kind,
        estimator: cfg.estimator,
        n: cfg.n,
        kappa: cfg.kappa,
        replicates: cfg.replicates,
        mean_case_cv: mean(|r| r.case_cv),
        mean_case_oracle: mean(|r| r.case_oracle),
        excluded,
    };
    Ok(ScenarioOutcome { row, per_replicate })
}

/// Monte Carlo check of the variance decomposition of the sine and cosine
/// regression errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceDiagnostic {
    /// `Var(sin Θ)` around the fixed direction.
    pub s1_sq: f64,
    /// `Var(cos Θ)`.
    pub s2_sq: f64,
    /// `Var(sin ε)`.
    pub sigma1_sq: f64,
    /// `Var(cos ε)`.
    pub sigma2_sq: f64,
    /// `Cov(sin ε, cos ε)`.
    pub sigma12: f64,
    /// Mean resultant length `E cos ε`.
    pub ell: f64,
    /// `|ŝ₁² − (f₁²σ̂₂² + 2f₁f₂σ̂₁₂ + f₂²σ̂₁²)|`
    pub s1_gap: f64,
    /// `|ŝ₂² − (f₂²σ̂₂² − 2f₁f₂σ̂₁₂ + f₁²σ̂₁²)|`
    pub s2_gap: f64,
    /// `|(ŝ₁² + ŝ₂²) − (σ̂₁² + σ̂₂²)|`
    pub sum_gap: f64,
    /// `max_j |mean(Θ-component j) − f_j ℓ̂|`
    pub moment_gap: f64,
    /// Monte Carlo standard error of `ŝ₁² + ŝ₂²`.
    pub mc_se: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn cov(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    xs.iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / xs.len() as f64
}

/// Draw `n_mc` errors `ε ~ vM(0, κ)`, form `Θ = direction + ε`, and compare
/// the sample moments of `(sin Θ, cos Θ)` with those implied by the moments
/// of `ε`.
pub fn verify_variance_identity<R: Rng + ?Sized>(
    kappa: f64,
    direction: Angle,
    n_mc: usize,
    rng: &mut R,
) -> Result<VarianceDiagnostic> {
    if n_mc < 10_000 {
        return Err(Error::invalid(format!("n_mc must be >= 10^4, got {n_mc}")));
    }
    let mut se = Vec::with_capacity(n_mc);
    let mut ce = Vec::with_capacity(n_mc);
    let mut st = Vec::with_capacity(n_mc);
    let mut ct = Vec::with_capacity(n_mc);
    for _ in 0..n_mc {
        let eps = sample_von_mises(Angle::ZERO, kappa, rng)?;
        let theta = direction.rotate(eps.radians());
        se.push(eps.radians().sin());
        ce.push(eps.radians().cos());
        st.push(theta.sin());
        ct.push(theta.cos());
    }
    let (f1, f2) = (direction.sin(), direction.cos());
    let s1_sq = cov(&st, &st);
    let s2_sq = cov(&ct, &ct);
    let sigma1_sq = cov(&se, &se);
    let sigma2_sq = cov(&ce, &ce);
    let sigma12 = cov(&se, &ce);
    let ell = mean(&ce);

    let s1_model = f1 * f1 * sigma2_sq + 2.0 * f1 * f2 * sigma12 + f2 * f2 * sigma1_sq;
    let s2_model = f2 * f2 * sigma2_sq - 2.0 * f1 * f2 * sigma12 + f1 * f1 * sigma1_sq;

    let (mst, mct) = (mean(&st), mean(&ct));
    let total: Vec<f64> = st
        .iter()
        .zip(&ct)
        .map(|(s, c)| (s - mst).powi(2) + (c - mct).powi(2))
        .collect();
    let mc_se = cov(&total, &total).sqrt() / (n_mc as f64).sqrt();

    Ok(VarianceDiagnostic {
        s1_sq,
        s2_sq,
        sigma1_sq,
        sigma2_sq,
        sigma12,
        ell,
        s1_gap: (s1_sq - s1_model).abs(),
        s2_gap: (s2_sq - s2_model).abs(),
        sum_gap: ((s1_sq + s2_sq) - (sigma1_sq + sigma2_sq)).abs(),
        moment_gap: (mst - f1 * ell).abs().max((mct - f2 * ell).abs()),
        mc_se,
    })
}

/// Standardised estimation errors at one curve across replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedSample {
    pub values: Vec<f64>,
    /// Replicates dropped for an infeasible CV search, a zero small-ball
    /// estimate, or a zero variance or resultant-length estimate.
    pub degenerate: usize,
}

impl StandardizedSample {
    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let k = self.values.len() as f64;
        self.values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (k - 1.0)
    }
}

/// For each replicate: fit a uniform-kernel model with a cross-validated
/// bandwidth and standardise `m̂(χ) − m(χ)` by `√(nF̂) ℓ̂ / √σ̂₁²`, using the
/// default pilot bandwidths.
pub fn standardized_error_sample(cfg: &ScenarioConfig, chi: &Curve) -> Result<StandardizedSample> {
    cfg.validate()?;
    if cfg.kernel != Kernel::Uniform {
        return Err(Error::UnsupportedKernel(format!(
            "standardised errors need the uniform kernel, scenario uses {}",
            cfg.kernel
        )));
    }
    let target = regression_truth(cfg.regression_kind, chi)?;
    let draws = (0..cfg.replicates)
        .into_par_iter()
        .map(|i| standardized_error(cfg, chi, target, i))
        .collect::<Result<Vec<_>>>()?;
    let degenerate = draws.iter().filter(|d| d.is_none()).count();
    Ok(StandardizedSample {
        values: draws.into_iter().flatten().collect(),
        degenerate,
    })
}

fn standardized_error(
    cfg: &ScenarioConfig,
    chi: &Curve,
    target: Angle,
    index: usize,
) -> Result<Option<f64>> {
    let mut rng = cfg.rng(index);
    let (data, _) = generate_dataset(cfg, &mut rng)?;
    let dists = distances_to(&data, chi)?;
    let dm = distance_matrix(&data);
    let units = UnitVectors::new(data.responses());
    let Ok(grid) = bandwidth_grid(&dm, cfg.bandwidth_grid) else {
        return Ok(None);
    };
    let h = match select_bandwidth_dm(&units, data.responses(), &dm, Kernel::Uniform, &grid) {
        Ok(cv) => cv.best,
        Err(Error::NoFeasibleBandwidth) => return Ok(None),
        Err(e) => return Err(e),
    };
    let Some(pilot_var) = median_positive_distance(&dm) else {
        return Ok(None);
    };
    let model = fit(data, Kernel::Uniform, Smoothing::Bandwidth(h))?;
    let pilots = Pilots {
        resid: h,
        var: pilot_var,
    };
    let ci = match ConfidenceBand::new(&model, 0.05, pilots).and_then(|b| b.at_distances(&dists)) {
        Ok(ci) => ci,
        Err(Error::EmptyNeighborhood { .. } | Error::DegenerateDirection(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    if ci.sigma1_hat <= 0.0 {
        return Ok(None);
    }
    let n = dists.len() as f64;
    Ok(Some(
        (n * ci.f_hat).sqrt() * ci.ell_hat / ci.sigma1_hat.sqrt() * ci.center.signed_diff(target),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::case;
    use std::f64::consts::PI;

    fn curve_with_integral(target: f64) -> Curve {
        // constant curve on [0,1] integrates to its level
        let g = Arc::new(Grid::uniform(11).unwrap());
        Curve::new(g, vec![target; 11]).unwrap()
    }

    #[test]
    fn truth_examples() {
        let c = curve_with_integral(2.5);
        let r1 = regression_truth(RegressionKind::R1, &c).unwrap();
        assert!((r1.radians() - 3.0f64.atan2(2.5)).abs() < 1e-12);
        let r2 = regression_truth(RegressionKind::R2, &c).unwrap();
        assert!((r2.radians() - (-0.75f64).acos()).abs() < 1e-12);
        assert!((r2.radians() - 2.418_858_405_776_377_7).abs() < 1e-9);
        let z = regression_truth(RegressionKind::R2, &curve_with_integral(0.0)).unwrap();
        assert!((z.radians() - 1.25 * PI).abs() < 1e-12);
        assert!(matches!(
            regression_truth(RegressionKind::R2, &curve_with_integral(4.0)),
            Err(Error::InvalidArgument(msg)) if msg.contains('4')
        ));
    }

    #[test]
    fn r2_tolerates_quadrature_slack() {
        let g = Arc::new(Grid::uniform(101).unwrap());
        let c = simulate_curve(1.0, g, 30.0).unwrap();
        assert!(regression_truth(RegressionKind::R2, &c).is_ok());
        let over = regression_truth(RegressionKind::R2, &curve_with_integral(2.5005)).unwrap();
        assert!((over.radians() - (-0.750_15f64).acos()).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let mut cfg = ScenarioConfig::new(RegressionKind::R1, Estimator::Nw, 1, 5.0);
        assert!(cfg.validate().is_err());
        cfg.n = 10;
        cfg.kappa = -1.0;
        assert!(cfg.validate().is_err());
        cfg.kappa = 5.0;
        cfg.replicates = 0;
        assert!(cfg.validate().is_err());
        cfg.replicates = 1;
        cfg.grid_size = 1;
        assert!(cfg.validate().is_err());

        let json = r#"{"regression_kind":"r2","n":50,"kappa":10}"#;
        let cfg: ScenarioConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.replicates, 100);
        assert_eq!(cfg.grid_size, 101);
        assert_eq!(cfg.estimator, Estimator::Nw);
        assert_eq!(cfg.kernel, Kernel::Quadratic);
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = ScenarioConfig::new(RegressionKind::R1, Estimator::Nw, 20, 5.0);
        let (a, ta) = generate_dataset(&cfg, &mut cfg.rng(3)).unwrap();
        let (b, tb) = generate_dataset(&cfg, &mut cfg.rng(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        let (c, _) = generate_dataset(&cfg, &mut cfg.rng(4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn huge_kappa_removes_noise() {
        let cfg = ScenarioConfig::new(RegressionKind::R2, Estimator::Nw, 200, 1e6);
        let (d, truth) = generate_dataset(&cfg, &mut cfg.rng(0)).unwrap();
        assert!(case(d.responses(), &truth).unwrap() < 1e-5);
    }

    #[test]
    fn replicate_oracle_dominates_cv() {
        for estimator in [Estimator::Nw, Estimator::Knn] {
            let mut cfg = ScenarioConfig::new(RegressionKind::R1, estimator, 30, 5.0);
            cfg.replicates = 8;
            let out = run_replicates(&cfg).unwrap();
            for r in out.per_replicate.iter().flatten() {
                assert!(r.case_oracle <= r.case_cv);
            }
            assert_eq!(out.row.replicates, 8);
            assert!(out.row.mean_case_oracle <= out.row.mean_case_cv);
            assert_eq!(run_replicates(&cfg).unwrap(), out);
        }
    }

    #[test]
    fn variance_identity_near_degenerate_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = verify_variance_identity(1e6, Angle::new(1.0).unwrap(), 10_000, &mut rng).unwrap();
        for v in [d.s1_sq, d.s2_sq, d.sigma1_sq, d.sigma2_sq] {
            assert!(v < 1e-5);
        }
        assert!(verify_variance_identity(5.0, Angle::ZERO, 100, &mut rng).is_err());
    }

    #[test]
    fn csv_line_layout() {
        let row = AggregateRow {
            kind: RegressionKind::R1,
            estimator: Estimator::Knn,
            n: 50,
            kappa: 5.0,
            replicates: 3,
            mean_case_cv: 0.25,
            mean_case_oracle: 0.125,
            excluded: 1,
        };
        assert_eq!(row.to_csv_line(), "r1,knn,50,5,3,0.25,0.125,1");
        assert_eq!(AggregateRow::CSV_HEADER.split(',').count(), 8);
    }
}
