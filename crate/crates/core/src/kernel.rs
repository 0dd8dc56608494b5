//! Kernels supported on `[0, 1]`, Nadaraya–Watson weights, empirical
//! small-ball probabilities and candidate bandwidth grids.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::DistanceMatrix;

/// Asymmetric kernel on the nonnegative half-line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// `K(u) = 1` on `[0, 1]`.
    Uniform,
    /// `K(u) = 1 − u²` on `[0, 1)`.
    Quadratic,
}

impl Kernel {
    /// Kernel value without argument checks; `u` must be nonnegative.
    #[inline]
    pub(crate) fn value(self, u: f64) -> f64 {
        match self {
            Kernel::Uniform if u <= 1.0 => 1.0,
            Kernel::Quadratic if u < 1.0 => 1.0 - u * u,
            _ => 0.0,
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kernel::Uniform => "uniform",
            Kernel::Quadratic => "quadratic",
        })
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Kernel::Uniform),
            "quadratic" => Ok(Kernel::Quadratic),
            other => Err(Error::invalid(format!("unknown kernel `{other}`"))),
        }
    }
}

pub fn kernel_eval(k: Kernel, u: f64) -> Result<f64> {
    if u.is_nan() || u < 0.0 {
        return Err(Error::invalid(format!(
            "kernel argument must be >= 0, got {u}"
        )));
    }
    Ok(k.value(u))
}

fn check_bandwidth(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "bandwidth must be positive and finite, got {h}"
        )))
    }
}

/// Normalised kernel weights `K(dᵢ/h) / Σⱼ K(dⱼ/h)`.
pub fn nw_weights(distances: &[f64], h: f64, k: Kernel) -> Result<Vec<f64>> {
    check_bandwidth(h)?;
    if let Some(d) = distances.iter().find(|d| d.is_nan() || **d < 0.0) {
        return Err(Error::invalid(format!("distances must be >= 0, got {d}")));
    }
    let mut w: Vec<f64> = distances.iter().map(|&d| k.value(d / h)).collect();
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(Error::EmptyNeighborhood {
            query: Default::default(),
            bandwidth: h,
        });
    }
    w.iter_mut().for_each(|x| *x /= total);
    Ok(w)
}

/// Empirical small-ball probability: the fraction of distances `≤ h`.
pub fn small_ball_estimate(distances: &[f64], h: f64) -> Result<f64> {
    check_bandwidth(h)?;
    if distances.is_empty() {
        return Err(Error::invalid(
            "small-ball estimate needs at least one distance",
        ));
    }
    let inside = distances.iter().filter(|&&d| d <= h).count();
    Ok(inside as f64 / distances.len() as f64)
}

/// Candidate-grid parameters for bandwidth cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridParams {
    pub n_grid: usize,
    pub lo_q: f64,
    pub hi_q: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams {
            n_grid: 25,
            lo_q: 0.05,
            hi_q: 1.0,
        }
    }
}

/// Linear-interpolation quantile of sorted data, `q ∈ [0, 1]`.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Geometrically spaced bandwidths between two quantiles of the positive
/// off-diagonal distances.
pub fn bandwidth_grid(dm: &DistanceMatrix, params: GridParams) -> Result<Vec<f64>> {
    let GridParams { n_grid, lo_q, hi_q } = params;
    if n_grid < 2 {
        return Err(Error::invalid("bandwidth grid needs at least 2 points"));
    }
    if !(lo_q > 0.0 && lo_q < hi_q && hi_q <= 1.0) {
        return Err(Error::invalid(format!(
            "need 0 < lo_q < hi_q <= 1, got lo_q={lo_q}, hi_q={hi_q}"
        )));
    }
    if dm.len() < 2 {
        return Err(Error::DegenerateDataset(
            "bandwidth grid needs at least two curves".into(),
        ));
    }
    let mut positive: Vec<f64> = dm.upper_triangle().filter(|&d| d > 0.0).collect();
    if positive.is_empty() {
        return Err(Error::DegenerateDataset(
            "all pairwise curve distances are zero".into(),
        ));
    }
    positive.sort_by(f64::total_cmp);
    let lo = quantile_sorted(&positive, lo_q);
    let hi = quantile_sorted(&positive, hi_q);
    let steps = (n_grid - 1) as f64;
    let ratio = hi / lo;
    let mut grid: Vec<f64> = (0..n_grid)
        .map(|i| lo * ratio.powf(i as f64 / steps))
        .collect();
    grid[0] = lo;
    grid[n_grid - 1] = hi;
    Ok(grid)
}
