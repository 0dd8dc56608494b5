//! Circular-on-functional regression.
//!
//! The sine and cosine of the response are each smoothed with the same kernel
//! weights and recombined with `atan2`. Bandwidths are chosen by leave-one-out
//! cross-validation under the cosine loss. A k-nearest-neighbour variant
//! replaces the bandwidth with a neighbour count.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::circular::{atan2_dir, circ_mean, cos_dissimilarity, Angle, CircularSample};
use crate::error::{Error, Result};
use crate::functional::{distance_matrix, distances_to, Curve, Dataset, DistanceMatrix, Grid};
use crate::kernel::{nw_weights, quantile_sorted, small_ball_estimate, Kernel};

/// Smoothing parameter of a fitted model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Smoothing {
    /// Kernel bandwidth `h > 0` on the curve-distance scale.
    Bandwidth(f64),
    /// Uniform average over the `k` nearest training curves.
    Neighbors(usize),
}

impl fmt::Display for Smoothing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smoothing::Bandwidth(h) => write!(f, "h={h}"),
            Smoothing::Neighbors(k) => write!(f, "k={k}"),
        }
    }
}

/// What `predict` does when both smoothed components vanish.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegeneratePolicy {
    #[default]
    Error,
    /// Fall back to the circular mean of all training responses.
    GlobalMean,
}

/// Sines and cosines of the training responses.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct UnitVectors {
    sin: Vec<f64>,
    cos: Vec<f64>,
}

impl UnitVectors {
    pub(crate) fn new(responses: &[Angle]) -> Self {
        UnitVectors {
            sin: responses.iter().map(|a| a.sin()).collect(),
            cos: responses.iter().map(|a| a.cos()).collect(),
        }
    }

    /// Kernel-weighted mean of the unit vectors, skipping index `skip`.
    /// `None` when every kernel weight vanishes.
    pub(crate) fn nw(
        &self,
        dists: &[f64],
        h: f64,
        kernel: Kernel,
        skip: Option<usize>,
    ) -> Option<(f64, f64)> {
        let (mut s, mut c, mut total) = (0.0, 0.0, 0.0);
        for (i, &d) in dists.iter().enumerate() {
            if Some(i) == skip {
                continue;
            }
            let w = kernel.value(d / h);
            if w > 0.0 {
                s += w * self.sin[i];
                c += w * self.cos[i];
                total += w;
            }
        }
        (total > 0.0).then(|| (s / total, c / total))
    }

    /// Plain mean of the unit vectors over the `k` nearest indices (ties at
    /// the k-th distance all included), skipping index `skip`.
    pub(crate) fn knn(&self, dists: &[f64], k: usize, skip: Option<usize>) -> Option<(f64, f64)> {
        let idx = nearest(dists, k, skip);
        if idx.is_empty() {
            return None;
        }
        let m = idx.len() as f64;
        let s: f64 = idx.iter().map(|&i| self.sin[i]).sum();
        let c: f64 = idx.iter().map(|&i| self.cos[i]).sum();
        Some((s / m, c / m))
    }

    pub(crate) fn components(
        &self,
        dists: &[f64],
        smoothing: Smoothing,
        kernel: Kernel,
        skip: Option<usize>,
    ) -> Option<(f64, f64)> {
        match smoothing {
            Smoothing::Bandwidth(h) => self.nw(dists, h, kernel, skip),
            Smoothing::Neighbors(k) => self.knn(dists, k, skip),
        }
    }
}

/// Indices of the `k` smallest distances plus any ties with the k-th one.
/// The result is sorted by index so sums do not depend on tie order.
fn nearest(dists: &[f64], k: usize, skip: Option<usize>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dists.len()).filter(|&i| Some(i) != skip).collect();
    if order.is_empty() || k == 0 {
        return Vec::new();
    }
    let k = k.min(order.len());
    order.sort_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(a.cmp(&b)));
    let kth = dists[order[k - 1]];
    let end = k + order[k..].iter().take_while(|&&i| dists[i] == kth).count();
    let mut chosen = order[..end].to_vec();
    chosen.sort_unstable();
    chosen
}

fn check_smoothing(smoothing: Smoothing, n: usize) -> Result<()> {
    match smoothing {
        Smoothing::Bandwidth(h) if !(h > 0.0 && h.is_finite()) => Err(Error::invalid(format!(
            "bandwidth must be positive and finite, got {h}"
        ))),
        Smoothing::Neighbors(k) if k == 0 || k > n => Err(Error::invalid(format!(
            "neighbor count must lie in 1..={n}, got {k}"
        ))),
        _ => Ok(()),
    }
}

/// Training data plus everything needed to predict at new curves.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    training: Dataset,
    kernel: Kernel,
    smoothing: Smoothing,
    units: UnitVectors,
    degenerate: DegeneratePolicy,
}

/// Store the training sample; estimation happens at prediction time.
pub fn fit(d: Dataset, kernel: Kernel, smoothing: Smoothing) -> Result<FittedModel> {
    check_smoothing(smoothing, d.len())?;
    let units = UnitVectors::new(d.responses());
    Ok(FittedModel {
        training: d,
        kernel,
        smoothing,
        units,
        degenerate: DegeneratePolicy::Error,
    })
}

impl FittedModel {
    pub fn with_degenerate_policy(mut self, policy: DegeneratePolicy) -> Self {
        self.degenerate = policy;
        self
    }

    pub fn training(&self) -> &Dataset {
        &self.training
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn smoothing(&self) -> Smoothing {
        self.smoothing
    }

    pub fn degenerate_policy(&self) -> DegeneratePolicy {
        self.degenerate
    }

    pub fn len(&self) -> usize {
        self.training.len()
    }

    pub fn is_empty(&self) -> bool {
        self.training.is_empty()
    }

    /// Training response sines and cosines.
    pub fn unit_vectors(&self) -> (&[f64], &[f64]) {
        (&self.units.sin, &self.units.cos)
    }

    fn empty_neighborhood(&self) -> Error {
        Error::EmptyNeighborhood {
            query: Default::default(),
            bandwidth: match self.smoothing {
                Smoothing::Bandwidth(h) => h,
                Smoothing::Neighbors(_) => f64::NAN,
            },
        }
    }

    /// Smoothed `(E[sin Θ | χ], E[cos Θ | χ])` from distances to the training curves.
    pub fn components_at_distances(&self, dists: &[f64]) -> Result<(f64, f64)> {
        if dists.len() != self.len() {
            return Err(Error::invalid(format!(
                "expected {} distances, got {}",
                self.len(),
                dists.len()
            )));
        }
        self.units
            .components(dists, self.smoothing, self.kernel, None)
            .ok_or_else(|| self.empty_neighborhood())
    }

    pub fn predict_components(&self, chi: &Curve) -> Result<(f64, f64)> {
        self.components_at_distances(&distances_to(&self.training, chi)?)
    }

    fn direction(&self, (s, c): (f64, f64)) -> Result<Angle> {
        match atan2_dir(s, c) {
            Err(Error::DegenerateDirection(_))
                if self.degenerate == DegeneratePolicy::GlobalMean =>
            {
                circ_mean(&CircularSample::new(self.training.responses().to_vec())?)
            }
            other => other,
        }
    }

    pub fn predict_at_distances(&self, dists: &[f64]) -> Result<Angle> {
        self.direction(self.components_at_distances(dists)?)
    }

    pub fn predict(&self, chi: &Curve) -> Result<Angle> {
        self.direction(self.predict_components(chi)?)
    }

    /// Estimated mean resultant length `√(m̂₁² + m̂₂²)` at `chi`.
    pub fn estimate_ell(&self, chi: &Curve) -> Result<f64> {
        let (s, c) = self.predict_components(chi)?;
        Ok(s.hypot(c).min(1.0))
    }
}

/// Leave-one-out predictions at every training curve from a precomputed
/// distance matrix. `None` marks an empty or directionless neighbourhood.
pub(crate) fn loo_predictions(
    units: &UnitVectors,
    dm: &DistanceMatrix,
    smoothing: Smoothing,
    kernel: Kernel,
) -> Vec<Option<Angle>> {
    (0..dm.len())
        .map(|i| {
            units
                .components(dm.row(i), smoothing, kernel, Some(i))
                .and_then(|(s, c)| atan2_dir(s, c).ok())
        })
        .collect()
}

/// In-sample predictions (each curve's own observation included).
pub(crate) fn fitted_values(
    units: &UnitVectors,
    dm: &DistanceMatrix,
    smoothing: Smoothing,
    kernel: Kernel,
) -> Vec<Option<Angle>> {
    (0..dm.len())
        .map(|i| {
            units
                .components(dm.row(i), smoothing, kernel, None)
                .and_then(|(s, c)| atan2_dir(s, c).ok())
        })
        .collect()
}

/// Sum of cosine losses of `predictions` against `targets`; `+∞` if any
/// prediction is missing.
pub(crate) fn total_cos_loss(predictions: &[Option<Angle>], targets: &[Angle]) -> f64 {
    let mut acc = 0.0;
    for (p, &t) in predictions.iter().zip(targets) {
        match p {
            Some(p) => acc += cos_dissimilarity(t, *p),
            None => return f64::INFINITY,
        }
    }
    acc
}

pub(crate) fn loocv_from_matrix(
    units: &UnitVectors,
    responses: &[Angle],
    dm: &DistanceMatrix,
    smoothing: Smoothing,
    kernel: Kernel,
) -> f64 {
    total_cos_loss(&loo_predictions(units, dm, smoothing, kernel), responses)
}

/// Cross-validation criterion `Σᵢ (1 − cos(Θᵢ − m̂⁽ⁱ⁾(Xᵢ)))`.
///
/// Returns `+∞` when some leave-one-out neighbourhood is empty, so that the
/// bandwidth drops out of the search instead of aborting it.
pub fn loocv_score(d: &Dataset, kernel: Kernel, h: f64) -> Result<f64> {
    if d.len() < 2 {
        return Err(Error::invalid(
            "cross-validation needs at least two observations",
        ));
    }
    check_smoothing(Smoothing::Bandwidth(h), d.len())?;
    let dm = distance_matrix(d);
    let units = UnitVectors::new(d.responses());
    Ok(loocv_from_matrix(
        &units,
        d.responses(),
        &dm,
        Smoothing::Bandwidth(h),
        kernel,
    ))
}

/// Selected smoothing parameter and the full `(candidate, score)` trace,
/// sorted by candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome<T> {
    pub best: T,
    pub best_score: f64,
    pub trace: Vec<(T, f64)>,
}

/// Argmin over a trace; ties go to the smaller candidate.
pub(crate) fn argmin_trace<T: Copy + PartialOrd>(mut trace: Vec<(T, f64)>) -> Result<CvOutcome<T>> {
    trace.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    let mut best: Option<(T, f64)> = None;
    for &(cand, score) in &trace {
        if score.is_finite() && best.is_none_or(|(_, s)| score < s) {
            best = Some((cand, score));
        }
    }
    let (best, best_score) = best.ok_or(Error::NoFeasibleBandwidth)?;
    Ok(CvOutcome {
        best,
        best_score,
        trace,
    })
}

pub(crate) fn select_bandwidth_dm(
    units: &UnitVectors,
    responses: &[Angle],
    dm: &DistanceMatrix,
    kernel: Kernel,
    grid: &[f64],
) -> Result<CvOutcome<f64>> {
    if grid.is_empty() {
        return Err(Error::invalid("bandwidth grid is empty"));
    }
    for &h in grid {
        check_smoothing(Smoothing::Bandwidth(h), responses.len())?;
    }
    let trace: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&h| {
            let score = loocv_from_matrix(units, responses, dm, Smoothing::Bandwidth(h), kernel);
            (h, score)
        })
        .collect();
    argmin_trace(trace)
}

/// Bandwidth minimising the leave-one-out cosine loss over `grid`.
pub fn select_bandwidth_cv(d: &Dataset, kernel: Kernel, grid: &[f64]) -> Result<CvOutcome<f64>> {
    if d.len() < 2 {
        return Err(Error::invalid(
            "cross-validation needs at least two observations",
        ));
    }
    let dm = distance_matrix(d);
    select_bandwidth_dm(
        &UnitVectors::new(d.responses()),
        d.responses(),
        &dm,
        kernel,
        grid,
    )
}

pub(crate) fn select_k_dm(
    units: &UnitVectors,
    responses: &[Angle],
    dm: &DistanceMatrix,
    k_grid: &[usize],
) -> Result<CvOutcome<usize>> {
    let n = responses.len();
    if k_grid.is_empty() {
        return Err(Error::invalid("neighbor-count grid is empty"));
    }
    if let Some(&k) = k_grid.iter().find(|&&k| k == 0 || k + 1 > n) {
        return Err(Error::invalid(format!(
            "leave-one-out neighbor counts must lie in 1..={}, got {k}",
            n.saturating_sub(1)
        )));
    }
    let trace: Vec<(usize, f64)> = k_grid
        .par_iter()
        .map(|&k| {
            let score = loocv_from_matrix(
                units,
                responses,
                dm,
                Smoothing::Neighbors(k),
                Kernel::Uniform,
            );
            (k, score)
        })
        .collect();
    argmin_trace(trace).map_err(|_| Error::invalid("no neighbor count gives a finite score"))
}

/// Neighbour count minimising the leave-one-out cosine loss over `k_grid`.
pub fn select_k_cv(d: &Dataset, k_grid: &[usize]) -> Result<CvOutcome<usize>> {
    let dm = distance_matrix(d);
    select_k_dm(&UnitVectors::new(d.responses()), d.responses(), &dm, k_grid)
}

/// Median of the strictly positive pairwise training distances.
pub fn median_positive_distance(dm: &DistanceMatrix) -> Option<f64> {
    let mut v: Vec<f64> = dm.upper_triangle().filter(|&d| d > 0.0).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(quantile_sorted(&v, 0.5))
}

/// Pilot bandwidths of the two-step conditional variance estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pilots {
    /// Bandwidth of the fit that produces the residuals.
    pub resid: f64,
    /// Bandwidth of the regression of squared residual sines.
    pub var: f64,
}

impl Pilots {
    /// Residual pilot = the model bandwidth; variance pilot = median positive
    /// pairwise training distance.
    pub fn defaults(model: &FittedModel) -> Result<Pilots> {
        let Smoothing::Bandwidth(h) = model.smoothing else {
            return Err(Error::invalid("default pilots need a bandwidth-mode model"));
        };
        let dm = distance_matrix(&model.training);
        let var = median_positive_distance(&dm).ok_or_else(|| {
            Error::DegenerateDataset("all pairwise curve distances are zero".into())
        })?;
        Ok(Pilots { resid: h, var })
    }
}

/// Squared sines of circular residuals `Θᵢ − m̂(Xᵢ)` from a kernel fit with
/// bandwidth `pilot`.
pub(crate) fn squared_residual_sines(
    units: &UnitVectors,
    responses: &[Angle],
    dm: &DistanceMatrix,
    kernel: Kernel,
    pilot: f64,
) -> Result<Vec<f64>> {
    check_smoothing(Smoothing::Bandwidth(pilot), responses.len())?;
    let fitted = fitted_values(units, dm, Smoothing::Bandwidth(pilot), kernel);
    fitted
        .iter()
        .zip(responses)
        .map(|(f, &t)| {
            let f = f.ok_or_else(|| {
                Error::DegenerateDirection("residual pilot fit has no direction".into())
            })?;
            Ok(t.signed_diff(f).sin().powi(2))
        })
        .collect()
}

/// Precomputed residual step of the conditional variance estimator, reusable
/// across query curves.
#[derive(Debug, Clone)]
pub struct VarianceSmoother {
    sq_sines: Vec<f64>,
    kernel: Kernel,
    pilot_var: f64,
}

impl VarianceSmoother {
    pub fn new(model: &FittedModel, pilots: Pilots) -> Result<Self> {
        check_smoothing(Smoothing::Bandwidth(pilots.var), model.len())?;
        let dm = distance_matrix(&model.training);
        let sq_sines = squared_residual_sines(
            &model.units,
            model.training.responses(),
            &dm,
            model.kernel,
            pilots.resid,
        )?;
        Ok(VarianceSmoother {
            sq_sines,
            kernel: model.kernel,
            pilot_var: pilots.var,
        })
    }

    /// `σ̂₁²` at a query given its distances to the training curves, clamped to `[0, 1]`.
    pub fn at_distances(&self, dists: &[f64]) -> Result<f64> {
        let w = nw_weights(dists, self.pilot_var, self.kernel)?;
        let v: f64 = w.iter().zip(&self.sq_sines).map(|(w, s)| w * s).sum();
        Ok(v.clamp(0.0, 1.0))
    }
}

/// Two-step estimate of `Var[sin ε | X = χ]`.
pub fn estimate_sigma1(model: &FittedModel, chi: &Curve, pilots: Pilots) -> Result<f64> {
    VarianceSmoother::new(model, pilots)?.at_distances(&distances_to(&model.training, chi)?)
}

/// Asymptotic confidence interval for the regression direction at one curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiEstimate {
    pub center: Angle,
    pub half_width: f64,
    /// Confidence level `1 − α`.
    pub level: f64,
    pub sigma1_hat: f64,
    pub ell_hat: f64,
    pub f_hat: f64,
}

impl CiEstimate {
    /// Lower endpoint, wrapped; the interval runs counter-clockwise to [`upper`](Self::upper).
    pub fn lower(&self) -> Angle {
        self.center.rotate(-self.half_width)
    }

    pub fn upper(&self) -> Angle {
        self.center.rotate(self.half_width)
    }
}

/// Standard-normal quantile `z` with upper tail `α/2`.
pub fn normal_critical_value(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let std = Normal::standard();
    Ok(std.inverse_cdf(1.0 - alpha / 2.0))
}

/// `z_{α/2} · √σ̂₁² / (ℓ̂ · √(n F̂))`.
pub fn ci_half_width(alpha: f64, sigma1_sq: f64, ell: f64, n: usize, f_hat: f64) -> Result<f64> {
    let z = normal_critical_value(alpha)?;
    if ell.is_nan() || ell <= 0.0 {
        return Err(Error::DegenerateDirection(
            "estimated mean resultant length is zero".into(),
        ));
    }
    if f_hat.is_nan() || f_hat <= 0.0 {
        return Err(Error::EmptyNeighborhood {
            query: Default::default(),
            bandwidth: f64::NAN,
        });
    }
    Ok(z * sigma1_sq.max(0.0).sqrt() / (ell * (n as f64 * f_hat).sqrt()))
}

/// Pointwise intervals for a uniform-kernel model; caches the residual step.
#[derive(Debug, Clone)]
pub struct ConfidenceBand<'a> {
    model: &'a FittedModel,
    alpha: f64,
    h: f64,
    variance: VarianceSmoother,
}

impl<'a> ConfidenceBand<'a> {
    pub fn new(model: &'a FittedModel, alpha: f64, pilots: Pilots) -> Result<Self> {
        normal_critical_value(alpha)?;
        if model.kernel != Kernel::Uniform {
            return Err(Error::UnsupportedKernel(format!(
                "confidence intervals need the uniform kernel, model uses {}",
                model.kernel
            )));
        }
        let Smoothing::Bandwidth(h) = model.smoothing else {
            return Err(Error::UnsupportedKernel(
                "confidence intervals need a bandwidth-mode model".into(),
            ));
        };
        Ok(ConfidenceBand {
            model,
            alpha,
            h,
            variance: VarianceSmoother::new(model, pilots)?,
        })
    }

    pub fn at_distances(&self, dists: &[f64]) -> Result<CiEstimate> {
        let f_hat = small_ball_estimate(dists, self.h)?;
        if f_hat == 0.0 {
            return Err(self.model.empty_neighborhood());
        }
        let (s, c) = self.model.components_at_distances(dists)?;
        let ell_hat = s.hypot(c).min(1.0);
        let center = self.model.direction((s, c))?;
        let sigma1_hat = self.variance.at_distances(dists)?;
        let half_width = ci_half_width(self.alpha, sigma1_hat, ell_hat, self.model.len(), f_hat)?;
        Ok(CiEstimate {
            center,
            half_width,
            level: 1.0 - self.alpha,
            sigma1_hat,
            ell_hat,
            f_hat,
        })
    }

    pub fn at(&self, chi: &Curve) -> Result<CiEstimate> {
        self.at_distances(&distances_to(&self.model.training, chi)?)
    }
}

/// Asymptotic `1 − α` interval for the regression direction at `chi`.
pub fn confidence_interval(
    model: &FittedModel,
    chi: &Curve,
    alpha: f64,
    pilots: Pilots,
) -> Result<CiEstimate> {
    ConfidenceBand::new(model, alpha, pilots)?.at(chi)
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format_version: u32,
    kernel: Kernel,
    smoothing: Smoothing,
    #[serde(default)]
    degenerate_policy: DegeneratePolicy,
    grid: Grid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ids: Option<Vec<String>>,
    /// Radians on `[0, 2π)`.
    responses: Vec<f64>,
    curves: Vec<Vec<f64>>,
}

impl FittedModel {
    /// Self-describing JSON; floats use shortest round-trip decimals.
    pub fn to_json(&self) -> String {
        let doc = ModelDocument {
            format_version: MODEL_FORMAT_VERSION,
            kernel: self.kernel,
            smoothing: self.smoothing,
            degenerate_policy: self.degenerate,
            grid: (**self.training.grid()).clone(),
            ids: self.training.ids().map(<[String]>::to_vec),
            responses: self
                .training
                .responses()
                .iter()
                .map(|a| a.radians())
                .collect(),
            curves: self
                .training
                .curves()
                .iter()
                .map(|c| c.values().to_vec())
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("model document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("model file: {e}")))?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported model format version {}",
                doc.format_version
            )));
        }
        let grid = std::sync::Arc::new(doc.grid);
        let curves = doc
            .curves
            .into_iter()
            .map(|v| Curve::new(grid.clone(), v))
            .collect::<Result<Vec<_>>>()?;
        let responses = doc
            .responses
            .into_iter()
            .map(Angle::new)
            .collect::<Result<Vec<_>>>()?;
        let data = Dataset::new(curves, responses, doc.ids)?;
        Ok(fit(data, doc.kernel, doc.smoothing)?.with_degenerate_policy(doc.degenerate_policy))
    }
}
