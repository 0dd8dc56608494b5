use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Context;
use chrono::Datelike;
use funcirc::{
    cape, circ_error_summary, date_to_angle, parse_date, wrap_angle, Angle, CircularSample,
};

use crate::output::{csv_bytes, read_input, write_atomic};
use crate::report::{ConfigDigest, Outcome};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// CSV with `id` (ISO date) and `pred_angle_rad` columns, plus an optional
    /// `obs_angle_rad` column; the output of `predict` qualifies.
    #[arg(long)]
    pairs: PathBuf,
    /// Per-month CAPE values.
    #[arg(long)]
    out: PathBuf,
    /// Per-month circular summaries of the errors `observed − predicted`.
    #[arg(long)]
    out_summary: Option<PathBuf>,
}

struct Pair {
    month: u32,
    observed: Angle,
    predicted: Angle,
}

fn parse_error(row: usize, column: &str, message: impl Into<String>) -> funcirc::Error {
    funcirc::Error::Parse {
        row,
        column: Some(column.to_string()),
        message: message.into(),
    }
}

fn parse_angle(cell: &str, row: usize, column: &str) -> funcirc::Result<Angle> {
    cell.parse::<f64>()
        .ok()
        .and_then(|v| wrap_angle(v).ok())
        .ok_or_else(|| parse_error(row, column, format!("`{cell}` is not a finite angle")))
}

/// File row and month of a row without a prediction.
type Skipped = (usize, u32);

/// Read the pairs; rows with an empty prediction are skipped and reported.
fn read_pairs(bytes: &[u8]) -> anyhow::Result<(Vec<Pair>, Vec<Skipped>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let headers = rdr
        .headers()
        .map_err(|e| funcirc::Error::Format(e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let id_col = col("id")
        .ok_or_else(|| funcirc::Error::Format("pairs file needs an `id` column".into()))?;
    let pred_col = col("pred_angle_rad").ok_or_else(|| {
        funcirc::Error::Format("pairs file needs a `pred_angle_rad` column".into())
    })?;
    let obs_col = col("obs_angle_rad");

    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| funcirc::Error::Parse {
            row: e.position().map_or(0, |p| p.line() as usize),
            column: None,
            message: e.to_string(),
        })?;
        let row = rec.position().map_or(0, |p| p.line() as usize);
        let id = rec.get(id_col).unwrap_or_default();
        let date = parse_date(id)
            .ok_or_else(|| parse_error(row, "id", format!("`{id}` is not an ISO date")))?;
        let month = date.month();
        let pred_cell = rec.get(pred_col).unwrap_or_default();
        if pred_cell.is_empty() {
            skipped.push((row, month));
            continue;
        }
        let predicted = parse_angle(pred_cell, row, "pred_angle_rad")?;
        let observed = match obs_col.and_then(|c| rec.get(c)).filter(|c| !c.is_empty()) {
            Some(cell) => parse_angle(cell, row, "obs_angle_rad")?,
            None => date_to_angle(date),
        };
        pairs.push(Pair {
            month,
            observed,
            predicted,
        });
    }
    Ok((pairs, skipped))
}

pub fn run(args: &Args) -> anyhow::Result<Outcome> {
    let mut digest = ConfigDigest::new(args);
    let bytes = read_input(&args.pairs)?;
    digest.input(&bytes);
    let (pairs, skipped) =
        read_pairs(&bytes).with_context(|| format!("reading pairs `{}`", args.pairs.display()))?;

    let mut warnings: Vec<String> = skipped
        .iter()
        .map(|(row, _)| format!("row {row} has no prediction; skipped"))
        .collect();
    let kept: std::collections::BTreeSet<u32> = pairs.iter().map(|p| p.month).collect();
    let emptied: std::collections::BTreeSet<u32> = skipped
        .iter()
        .map(|&(_, m)| m)
        .filter(|m| !kept.contains(m))
        .collect();
    warnings.extend(
        emptied
            .iter()
            .map(|m| format!("month {m} has no usable pairs; omitted")),
    );
    if pairs.is_empty() {
        return Err(funcirc::Error::Format("pairs file has no usable rows".into()).into());
    }

    let observed: Vec<Angle> = pairs.iter().map(|p| p.observed).collect();
    let predicted: Vec<Angle> = pairs.iter().map(|p| p.predicted).collect();
    let months: Vec<u32> = pairs.iter().map(|p| p.month).collect();
    let by_month = cape(&observed, &predicted, &months)?;

    let mut errors: BTreeMap<u32, Vec<Angle>> = BTreeMap::new();
    for p in &pairs {
        let e = wrap_angle(p.observed.signed_diff(p.predicted))?;
        errors.entry(p.month).or_default().push(e);
    }

    let cape_rows = by_month
        .iter()
        .map(|(m, v)| [m.to_string(), errors[m].len().to_string(), v.to_string()]);
    write_atomic(&args.out, &csv_bytes(&["month", "n", "cape"], cape_rows)?)?;
    let mut outputs = vec![args.out.clone()];

    if let Some(path) = &args.out_summary {
        let mut rows = Vec::with_capacity(errors.len());
        for (m, errs) in &errors {
            let s = circ_error_summary(&CircularSample::new(errs.clone())?);
            rows.push([
                m.to_string(),
                errs.len().to_string(),
                s.median.radians().to_string(),
                s.lower_quartile_offset.to_string(),
                s.upper_quartile_offset.to_string(),
                s.mean_cos_loss.to_string(),
            ]);
        }
        let header = [
            "month",
            "n",
            "median_rad",
            "lower_quartile_offset_rad",
            "upper_quartile_offset_rad",
            "mean_cos_loss",
        ];
        write_atomic(path, &csv_bytes(&header, rows)?)?;
        outputs.push(path.clone());
    }

    Ok(Outcome {
        digest: digest.finish(),
        seed: None,
        outputs,
        warnings,
    })
}
