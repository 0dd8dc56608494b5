//! Circular-data primitives.
//!
//! Angles are stored in radians on `[0, 2π)`. The von Mises sampler follows
//! Best & Fisher (1979): a wrapped-Cauchy envelope with rejection, which is
//! exact and needs no Bessel evaluations at sampling time.

use std::f64::consts::{PI, TAU};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A direction on the unit circle, in radians on `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    /// Wraps any finite value onto `[0, 2π)`.
    pub fn new(radians: f64) -> Result<Self> {
        wrap_angle(radians)
    }

    #[inline]
    pub fn radians(self) -> f64 {
        self.0
    }

    /// Rotate counter-clockwise by `alpha` radians.
    pub fn rotate(self, alpha: f64) -> Self {
        wrap_finite(self.0 + alpha)
    }

    /// Signed deviation `self − other` mapped into `(−π, π]`.
    pub fn signed_diff(self, other: Angle) -> f64 {
        let d = self.0 - other.0;
        if d > PI {
            d - TAU
        } else if d <= -PI {
            d + TAU
        } else {
            d
        }
    }

    /// Length of the shorter arc between the two directions, in `[0, π]`.
    pub fn circular_distance(self, other: Angle) -> f64 {
        self.signed_diff(other).abs()
    }

    #[inline]
    pub fn sin(self) -> f64 {
        self.0.sin()
    }

    #[inline]
    pub fn cos(self) -> f64 {
        self.0.cos()
    }
}

impl TryFrom<f64> for Angle {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        wrap_angle(value)
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

fn wrap_finite(x: f64) -> Angle {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs.
    Angle(if r >= TAU { 0.0 } else { r })
}

/// Reduce `x` modulo 2π onto `[0, 2π)`.
pub fn wrap_angle(x: f64) -> Result<Angle> {
    if !x.is_finite() {
        return Err(Error::invalid(format!("cannot wrap non-finite angle {x}")));
    }
    Ok(wrap_finite(x))
}

/// Direction of the vector `(c, s)`, i.e. `atan2(s, c)` wrapped onto `[0, 2π)`.
pub fn atan2_dir(s: f64, c: f64) -> Result<Angle> {
    if !s.is_finite() || !c.is_finite() {
        return Err(Error::invalid(format!("non-finite components ({s}, {c})")));
    }
    if s == 0.0 && c == 0.0 {
        return Err(Error::DegenerateDirection(
            "sine and cosine components are both zero".into(),
        ));
    }
    Ok(wrap_finite(s.atan2(c)))
}

/// A nonempty ordered collection of angles.
#[derive(Debug, Clone, PartialEq)]
pub struct CircularSample(Vec<Angle>);

impl CircularSample {
    pub fn new(angles: Vec<Angle>) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::invalid("circular sample must be nonempty"));
        }
        Ok(CircularSample(angles))
    }

    pub fn from_radians(values: &[f64]) -> Result<Self> {
        let angles = values
            .iter()
            .map(|&v| wrap_angle(v))
            .collect::<Result<Vec<_>>>()?;
        Self::new(angles)
    }

    pub fn angles(&self) -> &[Angle] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Mean sine and mean cosine.
    fn mean_components(&self) -> (f64, f64) {
        let n = self.0.len() as f64;
        let (s, c) = self
            .0
            .iter()
            .fold((0.0, 0.0), |(s, c), a| (s + a.sin(), c + a.cos()));
        (s / n, c / n)
    }
}

/// Mean direction: the direction of the average unit vector.
pub fn circ_mean(sample: &CircularSample) -> Result<Angle> {
    let (s, c) = sample.mean_components();
    if s.hypot(c) <= 1e-15 {
        return Err(Error::DegenerateDirection(
            "sample has zero mean resultant length".into(),
        ));
    }
    atan2_dir(s, c)
}

/// Norm of the average unit vector, in `[0, 1]`.
pub fn mean_resultant_length(sample: &CircularSample) -> f64 {
    let (s, c) = sample.mean_components();
    s.hypot(c).min(1.0)
}

/// Cosine loss `1 − cos(a − b)`, in `[0, 2]`.
#[inline]
pub fn cos_dissimilarity(a: Angle, b: Angle) -> f64 {
    1.0 - (a.0 - b.0).cos()
}

/// Below this concentration the von Mises law is indistinguishable from the
/// uniform law at double precision, and the envelope constants cancel badly.
const KAPPA_UNIFORM_CUTOFF: f64 = 1e-6;

/// Draw one value from the von Mises law `vM(mu, kappa)`.
pub fn sample_von_mises<R: Rng + ?Sized>(mu: Angle, kappa: f64, rng: &mut R) -> Result<Angle> {
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(Error::invalid(format!(
            "von Mises concentration must be finite and >= 0, got {kappa}"
        )));
    }
    if kappa < KAPPA_UNIFORM_CUTOFF {
        return Ok(wrap_finite(rng.random::<f64>() * TAU));
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = ((1.0 + r * z) / (r + z)).clamp(-1.0, 1.0);
        let c = kappa * (r - f);
        let u2: f64 = rng.random();
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let u3: f64 = rng.random();
            let theta = if u3 > 0.5 { f.acos() } else { -f.acos() };
            return Ok(mu.rotate(theta));
        }
    }
}

/// Location and spread summary of a sample of circular errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircErrorSummary {
    /// Sample point minimising the total cosine loss.
    pub median: Angle,
    /// 25% nearest-rank quantile of signed deviations from the median.
    pub lower_quartile_offset: f64,
    /// 75% nearest-rank quantile of signed deviations from the median.
    pub upper_quartile_offset: f64,
    /// Mean of `1 − cos(error)`.
    pub mean_cos_loss: f64,
}

/// Circular median and quartile offsets of a sample of errors.
///
/// The median is restricted to the sample points; ties go to the smallest
/// angle.
pub fn circ_error_summary(errors: &CircularSample) -> CircErrorSummary {
    let angles = errors.angles();
    let loss = |mu: Angle| -> f64 { angles.iter().map(|&a| cos_dissimilarity(a, mu)).sum() };

    let mut median = angles[0];
    let mut best = loss(median);
    for &candidate in &angles[1..] {
        let l = loss(candidate);
        if l < best || (l == best && candidate.0 < median.0) {
            best = l;
            median = candidate;
        }
    }

    let mut deviations: Vec<f64> = angles.iter().map(|a| a.signed_diff(median)).collect();
    deviations.sort_by(f64::total_cmp);

    CircErrorSummary {
        median,
        lower_quartile_offset: nearest_rank(&deviations, 0.25),
        upper_quartile_offset: nearest_rank(&deviations, 0.75),
        mean_cos_loss: angles.iter().map(|a| 1.0 - a.cos()).sum::<f64>() / angles.len() as f64,
    }
}

fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = (p * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ang(x: f64) -> Angle {
        wrap_angle(x).unwrap()
    }

    fn close(a: Angle, b: Angle, tol: f64) -> bool {
        a.circular_distance(b) <= tol
    }

    #[test]
    fn wrap_examples() {
        assert_eq!(wrap_angle(0.0).unwrap().radians(), 0.0);
        assert!(close(ang(5.0 * PI / 2.0), Angle(PI / 2.0), 1e-12));
        assert!((ang(-PI / 4.0).radians() - 7.0 * PI / 4.0).abs() < 1e-12);
        assert!(wrap_angle(f64::NAN).is_err());
        assert!(wrap_angle(f64::INFINITY).is_err());
        let tiny = ang(-1e-20);
        assert!(tiny.radians() < TAU);
    }

    #[test]
    fn atan2_examples() {
        assert_eq!(atan2_dir(0.0, 1.0).unwrap().radians(), 0.0);
        assert!((atan2_dir(1.0, 0.0).unwrap().radians() - PI / 2.0).abs() < 1e-15);
        // atan(3/2.5) evaluated independently.
        assert!((atan2_dir(3.0, 2.5).unwrap().radians() - (1.2f64).atan()).abs() < 1e-15);
        assert!((atan2_dir(3.0, 2.5).unwrap().radians() - 0.876_058_050_598_193_3).abs() < 1e-12);
        assert!(matches!(
            atan2_dir(0.0, 0.0),
            Err(Error::DegenerateDirection(_))
        ));
    }

    #[test]
    fn atan2_inverts_sin_cos_on_dense_grid() {
        for i in 0..10_000 {
            let theta = TAU * i as f64 / 10_000.0;
            let got = atan2_dir(theta.sin(), theta.cos()).unwrap();
            assert!(close(got, Angle(theta), 1e-12), "{theta} -> {got}");
        }
    }

    #[test]
    fn circ_mean_examples() {
        let s = CircularSample::from_radians(&[PI / 3.0; 3]).unwrap();
        assert!(close(circ_mean(&s).unwrap(), Angle(PI / 3.0), 1e-12));
        let s = CircularSample::from_radians(&[0.0, PI / 2.0]).unwrap();
        assert!(close(circ_mean(&s).unwrap(), Angle(PI / 4.0), 1e-12));

        // brute-force summation
        let xs = [0.1f64, 0.5, 6.0];
        let ss: f64 = xs.iter().map(|x| x.sin()).sum();
        let cs: f64 = xs.iter().map(|x| x.cos()).sum();
        let expected = ss.atan2(cs).rem_euclid(TAU);
        let s = CircularSample::from_radians(&xs).unwrap();
        assert!(close(circ_mean(&s).unwrap(), Angle(expected), 1e-12));

        let s = CircularSample::from_radians(&[0.0, PI]).unwrap();
        assert!(circ_mean(&s).is_err());
        assert!(CircularSample::new(vec![]).is_err());
    }

    #[test]
    fn resultant_length_examples() {
        let s = CircularSample::from_radians(&[1.3; 3]).unwrap();
        assert!((mean_resultant_length(&s) - 1.0).abs() < 1e-12);
        let s = CircularSample::from_radians(&[0.0, PI]).unwrap();
        assert!(mean_resultant_length(&s) < 1e-12);
    }

    #[test]
    fn cos_dissimilarity_examples() {
        assert_eq!(cos_dissimilarity(Angle(1.0), Angle(1.0)), 0.0);
        assert!((cos_dissimilarity(Angle(0.0), Angle(PI)) - 2.0).abs() < 1e-15);
        assert!((cos_dissimilarity(Angle(0.0), Angle(PI / 2.0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn von_mises_rejects_negative_kappa() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_von_mises(Angle::ZERO, -1.0, &mut rng).is_err());
        assert!(sample_von_mises(Angle::ZERO, f64::NAN, &mut rng).is_err());
    }

    fn draws(mu: f64, kappa: f64, n: usize, seed: u64) -> CircularSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..n)
            .map(|_| sample_von_mises(Angle(mu), kappa, &mut rng).unwrap())
            .collect();
        CircularSample::new(v).unwrap()
    }

    #[test]
    fn von_mises_uniform_limit() {
        let s = draws(0.0, 0.0, 100_000, 3);
        assert!(mean_resultant_length(&s) < 0.01);
    }

    #[test]
    fn von_mises_concentrates_at_mu() {
        let s = draws(1.0, 15.0, 100_000, 4);
        assert!(close(circ_mean(&s).unwrap(), Angle(1.0), 0.02));
    }

    #[test]
    fn von_mises_huge_kappa_is_near_point_mass() {
        let s = draws(2.0, 1e6, 1000, 5);
        assert!(s.angles().iter().all(|a| close(*a, Angle(2.0), 0.01)));
    }

    #[test]
    fn summary_all_zero() {
        let s = CircularSample::from_radians(&[0.0; 4]).unwrap();
        let sum = circ_error_summary(&s);
        assert_eq!(sum.median, Angle::ZERO);
        assert_eq!(sum.lower_quartile_offset, 0.0);
        assert_eq!(sum.upper_quartile_offset, 0.0);
        assert_eq!(sum.mean_cos_loss, 0.0);
    }

    #[test]
    fn summary_symmetric_three_points() {
        let s = CircularSample::from_radians(&[-0.1, 0.0, 0.1]).unwrap();
        let sum = circ_error_summary(&s);
        assert_eq!(sum.median, Angle::ZERO);
        assert!((sum.lower_quartile_offset + 0.1).abs() < 1e-12);
        assert!((sum.upper_quartile_offset - 0.1).abs() < 1e-12);
    }

    #[test]
    fn summary_median_matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let xs: Vec<f64> = (0..7).map(|_| rng.random::<f64>() * TAU).collect();
            let s = CircularSample::from_radians(&xs).unwrap();
            let sum = circ_error_summary(&s);
            let best = xs
                .iter()
                .map(|&m| xs.iter().map(|&x| 1.0 - (x - m).cos()).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            let got: f64 = xs
                .iter()
                .map(|&x| 1.0 - (x - sum.median.radians()).cos())
                .sum();
            assert!((got - best).abs() < 1e-12);
            assert!(xs.iter().any(|&x| x == sum.median.radians()));
        }
    }

    proptest! {
        #[test]
        fn wrap_is_idempotent(x in -1e6f64..1e6) {
            let once = ang(x);
            prop_assert_eq!(ang(once.radians()), once);
            prop_assert!(once.radians() >= 0.0 && once.radians() < TAU);
        }

        #[test]
        fn wrap_ignores_full_turns(x in -100.0f64..100.0, k in -1_000_000i64..=1_000_000) {
            let shifted = ang(x + TAU * k as f64);
            // x + 2πk carries rounding of order |k|·ulp(2π).
            prop_assert!(close(shifted, ang(x), 1e-8));
        }

        #[test]
        fn circ_mean_is_rotation_equivariant(
            xs in prop::collection::vec(0.0f64..1.5, 1..20),
            alpha in -10.0f64..10.0,
        ) {
            let s = CircularSample::from_radians(&xs).unwrap();
            let rotated: Vec<f64> = xs.iter().map(|x| x + alpha).collect();
            let r = CircularSample::from_radians(&rotated).unwrap();
            let m = circ_mean(&s).unwrap();
            prop_assert!(close(circ_mean(&r).unwrap(), m.rotate(alpha), 1e-9));
            prop_assert!((mean_resultant_length(&s) - mean_resultant_length(&r)).abs() < 1e-12);
        }

        #[test]
        fn cos_dissimilarity_is_symmetric(a in 0.0f64..TAU, b in 0.0f64..TAU) {
            let (a, b) = (Angle(a), Angle(b));
            prop_assert_eq!(cos_dissimilarity(a, b), cos_dissimilarity(b, a));
            prop_assert!((0.0..=2.0).contains(&cos_dissimilarity(a, b)));
        }
    }
}
