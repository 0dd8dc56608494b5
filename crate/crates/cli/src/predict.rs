use std::path::PathBuf;

use anyhow::Context;
use funcirc::{
    angle_to_day, distances_to, parse_date, read_curve_table, year_length, ConfidenceBand,
    CsvOptions, FittedModel, Pilots,
};
use rayon::prelude::*;

use crate::output::{csv_bytes, read_input, write_atomic};
use crate::report::{ConfigDigest, Outcome};
use crate::usage;

/// Day count used for `pred_day` when an id is not a date.
const DEFAULT_YEAR_LENGTH: f64 = 365.0;

#[derive(clap::Args, Debug)]
pub struct Args {
    #[arg(long)]
    model: PathBuf,
    /// Wide curve file on the model's grid.
    #[arg(long)]
    curves: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Add pointwise `1 − ALPHA` intervals (uniform-kernel models only).
    #[arg(long, value_name = "ALPHA")]
    ci: Option<f64>,
    /// Bandwidth of the residual fit (default: the model bandwidth).
    #[arg(long, requires = "ci")]
    pilot_resid: Option<f64>,
    /// Bandwidth of the variance regression (default: median pairwise distance).
    #[arg(long, requires = "ci")]
    pilot_var: Option<f64>,
    /// Drop rows with missing cells instead of failing.
    #[arg(long)]
    lenient: bool,
}

pub fn run(args: &Args) -> anyhow::Result<Outcome> {
    let mut digest = ConfigDigest::new(args);
    let model_bytes = read_input(&args.model)?;
    digest.input(&model_bytes);
    let curves_bytes = read_input(&args.curves)?;
    digest.input(&curves_bytes);

    let text = std::str::from_utf8(&model_bytes)
        .map_err(|_| usage(format!("model `{}` is not UTF-8", args.model.display())))?;
    let model = FittedModel::from_json(text)
        .with_context(|| format!("loading model `{}`", args.model.display()))?;

    let model_grid = model.training().grid().clone();
    let opts = CsvOptions {
        lenient: args.lenient,
        expected_points: Some(model_grid.len()),
    };
    let table = read_curve_table(curves_bytes.as_slice(), &opts)
        .with_context(|| format!("reading curves `{}`", args.curves.display()))?;
    if *table.grid != *model_grid {
        return Err(anyhow::Error::new(funcirc::Error::IncompatibleGrids {
            left: model_grid.len(),
            right: table.grid.len(),
        })
        .context("curve file grid differs from the model grid"));
    }
    let warnings: Vec<String> = table
        .dropped_lines
        .iter()
        .map(|l| {
            format!(
                "dropped line {l} of `{}` (missing value)",
                args.curves.display()
            )
        })
        .collect();

    let band = match args.ci {
        Some(alpha) => {
            let defaults = Pilots::defaults(&model);
            let pilots = match (args.pilot_resid, args.pilot_var) {
                (Some(resid), Some(var)) => Pilots { resid, var },
                (resid, var) => {
                    let d = defaults.context("computing default pilot bandwidths")?;
                    Pilots {
                        resid: resid.unwrap_or(d.resid),
                        var: var.unwrap_or(d.var),
                    }
                }
            };
            Some(ConfidenceBand::new(&model, alpha, pilots).context("--ci")?)
        }
        None => None,
    };

    let rows = table
        .ids
        .par_iter()
        .zip(&table.curves)
        .map(|(id, curve)| -> funcirc::Result<Vec<String>> {
            let dists = distances_to(model.training(), curve)?;
            let year = parse_date(id).map_or(DEFAULT_YEAR_LENGTH, |d| year_length(d) as f64);
            let (center, interval) = match &band {
                Some(b) => {
                    let ci = b
                        .at_distances(&dists)
                        .map_err(|e| e.with_query(id.clone()))?;
                    (ci.center, Some((ci.lower(), ci.upper())))
                }
                None => {
                    let center = model
                        .predict_at_distances(&dists)
                        .map_err(|e| e.with_query(id.clone()))?;
                    (center, None)
                }
            };
            let mut row = vec![
                id.clone(),
                center.radians().to_string(),
                angle_to_day(center, year).to_string(),
            ];
            if let Some((lo, hi)) = interval {
                row.extend([lo.radians().to_string(), hi.radians().to_string()]);
            }
            Ok(row)
        })
        .collect::<funcirc::Result<Vec<_>>>()?;

    let header: &[&str] = if band.is_some() {
        &["id", "pred_angle_rad", "pred_day", "ci_lo_rad", "ci_hi_rad"]
    } else {
        &["id", "pred_angle_rad", "pred_day"]
    };
    write_atomic(&args.out, &csv_bytes(header, rows)?)?;

    Ok(Outcome {
        digest: digest.finish(),
        seed: None,
        outputs: vec![args.out.clone()],
        warnings,
    })
}
