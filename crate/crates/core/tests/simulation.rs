//! Replicate scheduling must not change results.

use funcirc::{run_replicates, Estimator, RegressionKind, ScenarioConfig};

fn run_with_threads(cfg: &ScenarioConfig, threads: usize) -> funcirc::ScenarioOutcome {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(|| run_replicates(cfg).unwrap())
}

#[test]
fn rows_are_bit_identical_across_thread_counts() {
    for est in [Estimator::Nw, Estimator::Knn] {
        let mut cfg = ScenarioConfig::new(RegressionKind::R2, est, 30, 8.0);
        cfg.replicates = 12;
        cfg.seed = 77;
        let one = run_with_threads(&cfg, 1);
        let four = run_with_threads(&cfg, 4);
        assert_eq!(one.row.to_csv_line(), four.row.to_csv_line());
        assert_eq!(one.per_replicate, four.per_replicate);
    }
}

#[test]
fn oracle_never_loses_to_cross_validation() {
    for (kind, est) in [
        (RegressionKind::R1, Estimator::Nw),
        (RegressionKind::R2, Estimator::Nw),
        (RegressionKind::R1, Estimator::Knn),
    ] {
        let mut cfg = ScenarioConfig::new(kind, est, 40, 5.0);
        cfg.replicates = 20;
        let out = run_replicates(&cfg).unwrap();
        assert_eq!(out.row.excluded, 0);
        for r in out.per_replicate.iter().flatten() {
            assert!(r.case_oracle <= r.case_cv);
        }
        assert!(out.row.mean_case_oracle <= out.row.mean_case_cv);
    }
}
