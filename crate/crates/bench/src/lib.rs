//! Fixtures shared by the benchmarks in `benches/`.

use funcirc::{generate_dataset, Dataset, Estimator, RegressionKind, ScenarioConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A simulated `r1` sample of `n` curves on `grid_size` points.
pub fn sample(n: usize, grid_size: usize, seed: u64) -> Dataset {
    let mut cfg = ScenarioConfig::new(RegressionKind::R1, Estimator::Nw, n, 10.0);
    cfg.grid_size = grid_size;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_dataset(&cfg, &mut rng).expect("valid scenario").0
}
