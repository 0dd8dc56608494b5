use std::path::PathBuf;

use anyhow::Context;
use clap::ValueEnum;
use funcirc::{
    bandwidth_grid, distance_matrix, fit, read_curve_table, read_responses_csv,
    select_bandwidth_cv, select_k_cv, CsvOptions, Dataset, DegeneratePolicy, GridParams, Kernel,
    Smoothing, DAILY_POINTS,
};

use crate::output::{csv_bytes, read_input, write_atomic};
use crate::report::{ConfigDigest, Outcome};
use crate::usage;

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Nw,
    Knn,
}

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Wide curve file `id,v0,…`; ids are ISO dates unless `--responses` is given.
    #[arg(long)]
    curves: PathBuf,
    #[arg(long)]
    out_model: PathBuf,
    #[arg(long, value_parser = parse_kernel)]
    kernel: Kernel,
    #[arg(long, value_enum, default_value_t = Mode::Nw)]
    mode: Mode,
    /// Number of candidate bandwidths.
    #[arg(long, default_value_t = 25)]
    grid_size: usize,
    /// Quantile of the pairwise distances giving the smallest candidate.
    #[arg(long, default_value_t = 0.05)]
    grid_lo: f64,
    /// Quantile of the pairwise distances giving the largest candidate.
    #[arg(long, default_value_t = 1.0)]
    grid_hi: f64,
    /// Write the `(candidate, cv_score)` trace here.
    #[arg(long)]
    out_trace: Option<PathBuf>,
    /// `id,angle_rad` responses; without it responses come from date ids.
    #[arg(long)]
    responses: Option<PathBuf>,
    /// Drop rows with missing cells instead of failing.
    #[arg(long)]
    lenient: bool,
    /// Required number of value columns (default 144 for date-keyed files).
    #[arg(long)]
    points: Option<usize>,
    /// Predict the global circular mean where the smoothed vector vanishes.
    #[arg(long)]
    global_mean_fallback: bool,
}

fn parse_kernel(s: &str) -> Result<Kernel, String> {
    s.parse::<Kernel>().map_err(|e| e.to_string())
}

pub fn run(args: &Args) -> anyhow::Result<Outcome> {
    let mut digest = ConfigDigest::new(args);
    let curves_bytes = read_input(&args.curves)?;
    digest.input(&curves_bytes);

    let expected = args
        .points
        .or((args.responses.is_none()).then_some(DAILY_POINTS));
    let opts = CsvOptions {
        lenient: args.lenient,
        expected_points: expected,
    };
    let table = read_curve_table(curves_bytes.as_slice(), &opts)
        .with_context(|| format!("reading curves `{}`", args.curves.display()))?;
    let mut warnings: Vec<String> = table
        .dropped_lines
        .iter()
        .map(|l| {
            format!(
                "dropped line {l} of `{}` (missing value)",
                args.curves.display()
            )
        })
        .collect();

    let data: Dataset = match &args.responses {
        Some(path) => {
            let bytes = read_input(path)?;
            digest.input(&bytes);
            let resp = read_responses_csv(bytes.as_slice())
                .with_context(|| format!("reading responses `{}`", path.display()))?;
            table.into_dataset_with(&resp)?
        }
        None => table.into_dated_dataset()?,
    };
    if data.len() < 2 {
        return Err(usage("cross-validation needs at least two curves"));
    }

    let (smoothing, header, trace): (Smoothing, &str, Vec<(String, f64)>) = match args.mode {
        Mode::Nw => {
            let params = GridParams {
                n_grid: args.grid_size,
                lo_q: args.grid_lo,
                hi_q: args.grid_hi,
            };
            let grid = bandwidth_grid(&distance_matrix(&data), params)?;
            let cv = select_bandwidth_cv(&data, args.kernel, &grid)?;
            let trace = cv.trace.iter().map(|&(h, s)| (h.to_string(), s)).collect();
            (Smoothing::Bandwidth(cv.best), "bandwidth", trace)
        }
        Mode::Knn => {
            let ks: Vec<usize> = (1..data.len()).collect();
            let cv = select_k_cv(&data, &ks).map_err(|_| funcirc::Error::NoFeasibleBandwidth)?;
            let trace = cv.trace.iter().map(|&(k, s)| (k.to_string(), s)).collect();
            (Smoothing::Neighbors(cv.best), "k", trace)
        }
    };
    eprintln!("selected {smoothing} from {} candidates", trace.len());
    let infeasible = trace.iter().filter(|(_, s)| !s.is_finite()).count();
    if infeasible > 0 {
        warnings.push(format!(
            "{infeasible} candidates had an empty leave-one-out neighbourhood"
        ));
    }

    let policy = if args.global_mean_fallback {
        DegeneratePolicy::GlobalMean
    } else {
        DegeneratePolicy::Error
    };
    let model = fit(data, args.kernel, smoothing)?.with_degenerate_policy(policy);
    write_atomic(&args.out_model, model.to_json().as_bytes())?;
    let mut outputs = vec![args.out_model.clone()];

    if let Some(path) = &args.out_trace {
        let rows = trace.into_iter().map(|(c, s)| [c, s.to_string()]);
        write_atomic(path, &csv_bytes(&[header, "cv_score"], rows)?)?;
        outputs.push(path.clone());
    }

    Ok(Outcome {
        digest: digest.finish(),
        seed: None,
        outputs,
        warnings,
    })
}
