//! Helpers for driving the `funcirc` binary on synthetic files.
#![allow(dead_code)]

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::{Days, NaiveDate};
use funcirc::{date_to_angle, Angle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const POINTS: usize = 144;

pub fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

pub fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_funcirc"));
    cmd.args(args).env_remove("FUNC_CIRC_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn funcirc")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn assert_ok(out: &Output) {
    assert_eq!(code(out), 0, "stderr:\n{}", stderr(out));
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

pub fn dates(start: &str, count: usize, step: u64) -> Vec<NaiveDate> {
    let start = NaiveDate::parse_from_str(start, "%Y-%m-%d").unwrap();
    (0..count as u64)
        .map(|i| start.checked_add_days(Days::new(i * step)).unwrap())
        .collect()
}

/// A 10-minute temperature profile whose daily mean tracks `cos θ` and whose
/// diurnal range tracks `sin θ`, so the season is recoverable from the curve.
pub fn daily_profile(theta: f64, noise: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mean = 12.0 - 6.0 * theta.cos();
    let range = 4.0 + 3.0 * theta.sin();
    (0..POINTS)
        .map(|j| {
            let t = j as f64 / (POINTS - 1) as f64;
            mean + range * (TAU * t - PI / 2.0).sin() + noise * (rng.random::<f64>() - 0.5)
        })
        .collect()
}

pub fn wide_csv<'a>(rows: impl IntoIterator<Item = (String, &'a [f64])>) -> String {
    let mut s = String::from("id");
    let mut width = None;
    let mut body = String::new();
    for (id, values) in rows {
        width.get_or_insert(values.len());
        body.push_str(&id);
        for v in values {
            write!(body, ",{v}").unwrap();
        }
        body.push('\n');
    }
    for j in 0..width.unwrap_or(0) {
        write!(s, ",v{j}").unwrap();
    }
    s.push('\n');
    s + &body
}

/// Date-keyed curves with profiles following each date's own season.
pub fn write_daily_curves(path: &Path, days: &[NaiveDate], noise: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let profiles: Vec<(String, Vec<f64>)> = days
        .iter()
        .map(|d| {
            let theta = date_to_angle(*d).radians();
            (d.to_string(), daily_profile(theta, noise, &mut rng))
        })
        .collect();
    let text = wide_csv(profiles.iter().map(|(id, v)| (id.clone(), v.as_slice())));
    std::fs::write(path, text).unwrap();
}

pub fn write_responses(path: &Path, rows: &[(String, Angle)]) {
    let mut s = String::from("id,angle_rad\n");
    for (id, a) in rows {
        writeln!(s, "{id},{}", a.radians()).unwrap();
    }
    std::fs::write(path, s).unwrap();
}

pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header = rdr.headers().unwrap().iter().map(str::to_string).collect();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

pub fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<String> {
    let j = header.iter().position(|h| h == name).expect(name);
    rows.iter().map(|r| r[j].clone()).collect()
}

pub fn num_column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    column(header, rows, name)
        .iter()
        .map(|s| s.parse().unwrap())
        .collect()
}

pub struct Workspace {
    pub dir: tempfile::TempDir,
}

impl Workspace {
    pub fn new() -> Self {
        Workspace {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}
