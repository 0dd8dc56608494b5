use std::path::PathBuf;

use anyhow::Context;
use funcirc::{
    run_replicates, AggregateRow, Estimator, GridParams, Kernel, RegressionKind, ScenarioConfig,
};
use serde::Deserialize;

use crate::output::{read_input, write_atomic};
use crate::report::{ConfigDigest, Outcome};
use crate::usage;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Scenario JSON; `regression_kind`, `estimator`, `n` and `kappa` may be
    /// arrays, and every combination becomes one output row.
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Override the scenario's replicate count.
    #[arg(long)]
    replicates: Option<usize>,
    /// Override the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Deserialize, Debug)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn values(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(vs) => vs.clone(),
        }
    }
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(alias = "kind")]
    regression_kind: OneOrMany<RegressionKind>,
    n: OneOrMany<usize>,
    kappa: OneOrMany<f64>,
    #[serde(default)]
    estimator: Option<OneOrMany<Estimator>>,
    #[serde(default)]
    replicates: Option<usize>,
    #[serde(default)]
    grid_size: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    kernel: Option<Kernel>,
    #[serde(default)]
    bandwidth_grid: Option<GridParams>,
}

impl ScenarioFile {
    /// Cells in file order: kind, then estimator, then n, then kappa.
    fn cells(&self, replicates: Option<usize>, seed: Option<u64>) -> Vec<ScenarioConfig> {
        let estimators = self
            .estimator
            .as_ref()
            .map_or_else(|| vec![Estimator::Nw], OneOrMany::values);
        let mut out = Vec::new();
        for kind in self.regression_kind.values() {
            for &est in &estimators {
                for n in self.n.values() {
                    for kappa in self.kappa.values() {
                        let mut cfg = ScenarioConfig::new(kind, est, n, kappa);
                        if let Some(r) = replicates.or(self.replicates) {
                            cfg.replicates = r;
                        }
                        if let Some(g) = self.grid_size {
                            cfg.grid_size = g;
                        }
                        if let Some(s) = seed.or(self.seed) {
                            cfg.seed = s;
                        }
                        if let Some(k) = self.kernel {
                            cfg.kernel = k;
                        }
                        if let Some(b) = self.bandwidth_grid {
                            cfg.bandwidth_grid = b;
                        }
                        out.push(cfg);
                    }
                }
            }
        }
        out
    }
}

pub fn run(args: &Args) -> anyhow::Result<Outcome> {
    let bytes = read_input(&args.scenario)?;
    let mut digest = ConfigDigest::new(args);
    digest.input(&bytes);

    let file: ScenarioFile = serde_json::from_slice(&bytes).map_err(|e| {
        usage(format!(
            "malformed scenario `{}`: {e}",
            args.scenario.display()
        ))
    })?;
    let cells = file.cells(args.replicates, args.seed);
    if cells.is_empty() {
        return Err(usage(
            "scenario defines no cells (an axis is an empty list)",
        ));
    }
    for cfg in &cells {
        cfg.validate().context("invalid scenario cell")?;
    }

    let mut warnings = Vec::new();
    let mut text = format!("{}\n", AggregateRow::CSV_HEADER);
    for cfg in &cells {
        let label = format!(
            "{} {} n={} kappa={}",
            cfg.regression_kind, cfg.estimator, cfg.n, cfg.kappa
        );
        eprintln!("simulating {label} ({} replicates)", cfg.replicates);
        let outcome = run_replicates(cfg).with_context(|| format!("cell {label}"))?;
        let row = outcome.row;
        if row.excluded == row.replicates {
            return Err(anyhow::Error::new(funcirc::Error::NoFeasibleBandwidth)
                .context(format!("cell {label}: every replicate was infeasible")));
        }
        if row.excluded > 0 {
            warnings.push(format!(
                "cell {label}: {} of {} replicates excluded (no feasible bandwidth)",
                row.excluded, row.replicates
            ));
        }
        text.push_str(&row.to_csv_line());
        text.push('\n');
    }
    write_atomic(&args.out, text.as_bytes())?;

    Ok(Outcome {
        digest: digest.finish(),
        seed: Some(cells[0].seed),
        outputs: vec![args.out.clone()],
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_and_array_axes_expand_in_order() {
        let f: ScenarioFile = serde_json::from_str(
            r#"{"kind": "r1", "estimator": ["nw", "knn"], "n": [50, 100], "kappa": 5}"#,
        )
        .unwrap();
        let cells = f.cells(Some(3), None);
        let got: Vec<(Estimator, usize)> = cells.iter().map(|c| (c.estimator, c.n)).collect();
        assert_eq!(
            got,
            [
                (Estimator::Nw, 50),
                (Estimator::Nw, 100),
                (Estimator::Knn, 50),
                (Estimator::Knn, 100)
            ]
        );
        assert!(cells.iter().all(|c| c.replicates == 3 && c.seed == 0));
    }

    #[test]
    fn flags_override_file() {
        let f: ScenarioFile = serde_json::from_str(
            r#"{"regression_kind": "r2", "n": 20, "kappa": 10, "replicates": 7, "seed": 9}"#,
        )
        .unwrap();
        let c = &f.cells(None, Some(11))[0];
        assert_eq!((c.replicates, c.seed), (7, 11));
        assert_eq!(c.estimator, Estimator::Nw);
    }

    #[test]
    fn unknown_fields_rejected() {
        let r: Result<ScenarioFile, _> =
            serde_json::from_str(r#"{"kind": "r1", "n": 5, "kappa": 1, "sede": 3}"#);
        assert!(r.is_err());
    }
}
