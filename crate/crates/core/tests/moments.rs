//! Trigonometric moments of the von Mises law against Bessel-series values.

mod common;

use std::f64::consts::FRAC_PI_3;
use std::sync::Arc;

use common::oracles::{bessel_i, mean_and_se, vm_resultant, vm_sin_variance};
use funcirc::{
    circ_mean, estimate_sigma1, fit, generate_dataset, mean_resultant_length, sample_von_mises,
    simulate_curve, verify_variance_identity, Angle, CircularSample, Dataset, Estimator, Grid,
    Kernel, Pilots, RegressionKind, ScenarioConfig, Smoothing,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn bessel_series_matches_reference_values() {
    let cases = [
        (1.0, 0.446_390),
        (5.0, 0.893_383),
        (10.0, 0.948_600),
        (15.0, 0.966_070),
    ];
    for (kappa, want) in cases {
        assert!((vm_resultant(kappa) - want).abs() < 5e-6, "kappa {kappa}");
    }
    assert!((vm_sin_variance(10.0) - 0.094_860).abs() < 5e-6);
    assert!((vm_sin_variance(5.0) - 0.178_677).abs() < 5e-6);
    assert!((bessel_i(0, 0.0) - 1.0).abs() < 1e-15);
    assert_eq!(bessel_i(1, 0.0), 0.0);
}

#[test]
fn sampler_resultant_length_is_calibrated() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xbe55e1);
    for kappa in [1.0, 5.0, 10.0, 15.0] {
        let draws: Vec<f64> = (0..100_000)
            .map(|_| {
                sample_von_mises(Angle::ZERO, kappa, &mut rng)
                    .unwrap()
                    .cos()
            })
            .collect();
        let (m, se) = mean_and_se(&draws);
        assert!(
            (m - vm_resultant(kappa)).abs() < 3.0 * se,
            "kappa {kappa}: {m} vs {}",
            vm_resultant(kappa)
        );
    }
}

#[test]
fn sampler_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let sample = |mu: f64, kappa: f64, rng: &mut ChaCha8Rng| {
        let mu = Angle::new(mu).unwrap();
        let v = (0..100_000)
            .map(|_| sample_von_mises(mu, kappa, rng).unwrap())
            .collect();
        CircularSample::new(v).unwrap()
    };
    assert!(mean_resultant_length(&sample(0.0, 0.0, &mut rng)) < 0.01);
    let s = sample(1.0, 15.0, &mut rng);
    assert!(
        circ_mean(&s)
            .unwrap()
            .circular_distance(Angle::new(1.0).unwrap())
            < 0.02
    );
    let r = mean_resultant_length(&sample(0.0, 5.0, &mut rng));
    assert!((r - vm_resultant(5.0)).abs() < 0.01);
}

#[test]
fn simulated_noise_has_von_mises_cosine_loss() {
    let mut cfg = ScenarioConfig::new(RegressionKind::R1, Estimator::Nw, 10_000, 5.0);
    cfg.grid_size = 21;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (data, truth) = generate_dataset(&cfg, &mut rng).unwrap();
    let loss = data
        .responses()
        .iter()
        .zip(&truth)
        .map(|(y, m)| 1.0 - y.signed_diff(*m).cos())
        .sum::<f64>()
        / truth.len() as f64;
    assert!((loss - (1.0 - vm_resultant(5.0))).abs() < 0.01, "{loss}");
}

#[test]
fn variance_identity_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let dir = Angle::new(FRAC_PI_3).unwrap();
    let d = verify_variance_identity(5.0, dir, 100_000, &mut rng).unwrap();
    assert!(
        (d.sigma1_sq - vm_sin_variance(5.0)).abs() < 0.01,
        "{}",
        d.sigma1_sq
    );
    assert!((d.ell - vm_resultant(5.0)).abs() < 0.01);
    assert!(d.sum_gap < 4.0 * d.mc_se);
    assert!(d.s1_gap < 1e-10 && d.s2_gap < 1e-10);
}

#[test]
fn sigma1_estimate_recovers_sine_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(400);
    let grid = Arc::new(Grid::uniform(51).unwrap());
    let mu = Angle::new(2.0).unwrap();
    let n = 400;
    let curves = (0..n)
        .map(|_| simulate_curve(rng.random(), grid.clone(), 30.0).unwrap())
        .collect();
    let responses = (0..n)
        .map(|_| {
            mu.rotate(
                sample_von_mises(Angle::ZERO, 10.0, &mut rng)
                    .unwrap()
                    .radians(),
            )
        })
        .collect();
    let data = Dataset::new(curves, responses, None).unwrap();
    let model = fit(data, Kernel::Uniform, Smoothing::Bandwidth(1.5)).unwrap();
    let chi = simulate_curve(0.5, grid, 30.0).unwrap();
    let pilots = Pilots::defaults(&model).unwrap();
    let s = estimate_sigma1(&model, &chi, pilots).unwrap();
    assert!((s - vm_sin_variance(10.0)).abs() < 0.02, "{s}");
}
