//! Functional covariates: curves sampled on a shared grid, the L² semimetric,
//! calendar encoding of the response, and wide-CSV ingestion.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::io::Read;
use std::sync::Arc;

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circular::{wrap_angle, Angle};
use crate::error::{Error, Result};

/// Number of 10-minute records in a daily temperature curve.
pub const DAILY_POINTS: usize = 144;

/// Strictly increasing abscissae shared by every curve of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("a grid needs at least two points"));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("grid points must be finite"));
        }
        if let Some(w) = points.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::invalid(format!(
                "grid must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Grid { points })
    }

    /// `p` equally spaced points on `[0, 1]`, endpoints included.
    pub fn uniform(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::invalid("a grid needs at least two points"));
        }
        let last = (p - 1) as f64;
        Grid::new((0..p).map(|i| i as f64 / last).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Trapezoidal rule over the grid for values sampled at its points.
    fn trapezoid(&self, values: impl Iterator<Item = f64>) -> f64 {
        let mut acc = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for (&t, v) in self.points.iter().zip(values) {
            if let Some((t0, v0)) = prev {
                acc += 0.5 * (t - t0) * (v0 + v);
            }
            prev = Some((t, v));
        }
        acc
    }
}

impl TryFrom<Vec<f64>> for Grid {
    type Error = Error;

    fn try_from(points: Vec<f64>) -> Result<Self> {
        Grid::new(points)
    }
}

impl From<Grid> for Vec<f64> {
    fn from(g: Grid) -> Vec<f64> {
        g.points
    }
}

fn same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// A real-valued function observed at the points of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Curve {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "curve has {} values but its grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("curve value {i} is not finite")));
        }
        Ok(Curve { grid, values })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn check_grid(&self, other: &Curve) -> Result<()> {
        if same_grid(&self.grid, &other.grid) {
            Ok(())
        } else {
            Err(Error::IncompatibleGrids {
                left: self.grid.len(),
                right: other.grid.len(),
            })
        }
    }
}

/// Paired `(curve, angle)` observations on one common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    grid: Arc<Grid>,
    curves: Vec<Curve>,
    responses: Vec<Angle>,
    ids: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(
        curves: Vec<Curve>,
        responses: Vec<Angle>,
        ids: Option<Vec<String>>,
    ) -> Result<Self> {
        let Some(first) = curves.first() else {
            return Err(Error::invalid("a dataset needs at least one observation"));
        };
        if responses.len() != curves.len() {
            return Err(Error::invalid(format!(
                "{} curves but {} responses",
                curves.len(),
                responses.len()
            )));
        }
        if let Some(ids) = &ids {
            if ids.len() != curves.len() {
                return Err(Error::invalid(format!(
                    "{} curves but {} ids",
                    curves.len(),
                    ids.len()
                )));
            }
        }
        let grid = first.grid.clone();
        for c in &curves[1..] {
            first.check_grid(c)?;
        }
        Ok(Dataset {
            grid,
            curves,
            responses,
            ids,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn curves(&self) -> &[Curve] {
        &self.curves
    }

    pub fn responses(&self) -> &[Angle] {
        &self.responses
    }

    pub fn ids(&self) -> Option<&[String]> {
        self.ids.as_deref()
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    /// Same curves with every response rotated by `alpha`.
    pub fn rotated(&self, alpha: f64) -> Dataset {
        Dataset {
            responses: self.responses.iter().map(|r| r.rotate(alpha)).collect(),
            ..self.clone()
        }
    }
}

/// Trapezoidal integral of a curve over its own grid.
pub fn integrate_curve(c: &Curve) -> f64 {
    c.grid.trapezoid(c.values.iter().copied())
}

/// L² distance `√∫(a − b)²`, trapezoidal on the shared grid.
pub fn l2_distance(a: &Curve, b: &Curve) -> Result<f64> {
    a.check_grid(b)?;
    Ok(l2_unchecked(a, b))
}

fn l2_unchecked(a: &Curve, b: &Curve) -> f64 {
    let sq = a.values.iter().zip(&b.values).map(|(x, y)| {
        let d = x - y;
        d * d
    });
    a.grid.trapezoid(sq).max(0.0).sqrt()
}

/// Distances from `chi` to every training curve of `d`.
pub fn distances_to(d: &Dataset, chi: &Curve) -> Result<Vec<f64>> {
    d.curves.iter().map(|c| l2_distance(c, chi)).collect()
}

/// Dense symmetric matrix of pairwise curve distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Build from a row-major `n × n` buffer.
    pub fn from_rows(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::invalid(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        Ok(DistanceMatrix { n, data })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Off-diagonal entries `(i, j)` with `i < j`.
    pub fn upper_triangle(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).flat_map(move |i| ((i + 1)..self.n).map(move |j| self.get(i, j)))
    }
}

/// Pairwise L² distances of all dataset curves.
///
/// Rows are computed in parallel; each entry depends only on its two curves,
/// so the result does not depend on scheduling.
pub fn distance_matrix(d: &Dataset) -> DistanceMatrix {
    let n = d.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| l2_unchecked(&d.curves[i], &d.curves[j]))
                .collect()
        })
        .collect();
    let mut data = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + 1 + off;
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    DistanceMatrix { n, data }
}

/// Simulated covariate `X(t) = amplitude · u · (1 − t) · t^(1+u)` on `grid`.
pub fn simulate_curve(u: f64, grid: Arc<Grid>, amplitude: f64) -> Result<Curve> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::invalid(format!("u must lie in [0, 1], got {u}")));
    }
    if grid.points().iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::invalid("simulated curves need a grid inside [0, 1]"));
    }
    let values = grid
        .points()
        .iter()
        .map(|&t| amplitude * u * (1.0 - t) * t.powf(1.0 + u))
        .collect();
    Curve::new(grid, values)
}

/// Calendar day (1-based) to angle; day 1 maps to 0.
pub fn day_to_angle(day_index: f64, year_length: f64) -> Result<Angle> {
    if year_length.is_nan() || year_length <= 0.0 || !(1.0..=year_length).contains(&day_index) {
        return Err(Error::invalid(format!(
            "day {day_index} outside 1..={year_length}"
        )));
    }
    wrap_angle(TAU * (day_index - 1.0) / year_length)
}

/// Inverse of [`day_to_angle`]: a fractional 1-based day.
pub fn angle_to_day(a: Angle, year_length: f64) -> f64 {
    1.0 + year_length * a.radians() / TAU
}

/// Parse an ISO-8601 `YYYY-MM-DD` date.
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok()
}

/// Days in the calendar year of `date` (365 or 366).
pub fn year_length(date: NaiveDate) -> u32 {
    if NaiveDate::from_ymd_opt(date.year(), 2, 29).is_some() {
        366
    } else {
        365
    }
}

/// Day-of-year angle of a calendar date, using that year's own length.
pub fn date_to_angle(date: NaiveDate) -> Angle {
    // ordinal() is always within 1..=year_length.
    day_to_angle(date.ordinal() as f64, year_length(date) as f64).expect("valid ordinal")
}

/// Ingestion options for wide curve files.
#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    /// Drop rows with missing cells instead of rejecting the file.
    pub lenient: bool,
    /// Required number of value columns, if any.
    pub expected_points: Option<usize>,
}

/// Curves read from a wide CSV file, before responses are attached.
#[derive(Debug, Clone)]
pub struct CurveTable {
    pub grid: Arc<Grid>,
    pub ids: Vec<String>,
    pub curves: Vec<Curve>,
    /// 1-based file lines dropped in lenient mode.
    pub dropped_lines: Vec<u64>,
}

impl CurveTable {
    /// Attach responses derived from ISO-date ids.
    pub fn into_dated_dataset(self) -> Result<Dataset> {
        let responses = self
            .ids
            .iter()
            .map(|id| {
                parse_date(id).map(date_to_angle).ok_or_else(|| {
                    Error::Format(format!("id `{id}` is not an ISO-8601 date (YYYY-MM-DD)"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(self.curves, responses, Some(self.ids))
    }

    /// Attach responses looked up by id.
    pub fn into_dataset_with(self, responses: &[(String, Angle)]) -> Result<Dataset> {
        let lookup: HashMap<&str, Angle> =
            responses.iter().map(|(id, a)| (id.as_str(), *a)).collect();
        let resp = self
            .ids
            .iter()
            .map(|id| {
                lookup
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::Format(format!("no response for id `{id}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(self.curves, resp, Some(self.ids))
    }

    pub fn all_ids_are_dates(&self) -> bool {
        self.ids.iter().all(|id| parse_date(id).is_some())
    }
}

fn parse_cell(cell: &str, line: u64, column: &str) -> Result<Option<f64>> {
    let cell = cell.trim();
    if cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan") {
        return Ok(None);
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::Parse {
            row: line as usize,
            column: Some(column.to_string()),
            message: format!("`{cell}` is not a finite number"),
        }),
    }
}

/// Read a wide curve file: header `id,v0,…,v{p−1}`, an optional
/// `grid,t0,…,t{p−1}` line, then one curve per row.
pub fn read_curve_table<R: Read>(reader: R, opts: &CsvOptions) -> Result<CurveTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();

    let csv_err = |e: csv::Error| {
        let row = e.position().map(|p| p.line() as usize).unwrap_or(0);
        Error::Parse {
            row,
            column: None,
            message: e.to_string(),
        }
    };

    let header = match records.next() {
        Some(r) => r.map_err(csv_err)?,
        None => return Err(Error::Format("empty file: missing header".into())),
    };
    if header.get(0).map(str::trim) != Some("id") {
        return Err(Error::Format(
            "missing header: first line must be `id,v0,v1,...`".into(),
        ));
    }
    let columns: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let p = columns.len();
    if p < 2 {
        return Err(Error::Format(format!(
            "need at least 2 value columns, got {p}"
        )));
    }
    if let Some(expected) = opts.expected_points {
        if p != expected {
            return Err(Error::Format(format!(
                "expected {expected} value columns, header has {p}"
            )));
        }
    }

    let mut grid: Option<Arc<Grid>> = None;
    let mut ids = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dropped_lines = Vec::new();

    for (k, rec) in records.enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(k as u64 + 2);
        if rec.len() != p + 1 {
            return Err(Error::Parse {
                row: line as usize,
                column: None,
                message: format!("expected {} fields, found {}", p + 1, rec.len()),
            });
        }
        let id = rec.get(0).unwrap_or_default().to_string();
        if k == 0 && id == "grid" {
            let mut pts = Vec::with_capacity(p);
            for (cell, col) in rec.iter().skip(1).zip(&columns) {
                match parse_cell(cell, line, col)? {
                    Some(v) => pts.push(v),
                    None => {
                        return Err(Error::Parse {
                            row: line as usize,
                            column: Some(col.clone()),
                            message: "missing grid abscissa".into(),
                        })
                    }
                }
            }
            grid = Some(Arc::new(Grid::new(pts)?));
            continue;
        }
        let mut values = Vec::with_capacity(p);
        let mut missing = None;
        for (cell, col) in rec.iter().skip(1).zip(&columns) {
            match parse_cell(cell, line, col)? {
                Some(v) => values.push(v),
                None => {
                    missing = Some(col.clone());
                    break;
                }
            }
        }
        if let Some(col) = missing {
            if opts.lenient {
                dropped_lines.push(line);
                continue;
            }
            return Err(Error::Parse {
                row: line as usize,
                column: Some(col),
                message: "missing value".into(),
            });
        }
        ids.push(id);
        rows.push(values);
    }

    if rows.is_empty() {
        return Err(Error::Format("file contains no curves".into()));
    }
    let grid = match grid {
        Some(g) => g,
        None => Arc::new(Grid::uniform(p)?),
    };
    let curves = rows
        .into_iter()
        .map(|v| Curve::new(grid.clone(), v))
        .collect::<Result<Vec<_>>>()?;
    Ok(CurveTable {
        grid,
        ids,
        curves,
        dropped_lines,
    })
}

/// Read a wide curve file whose ids are dates; responses are the day-of-year
/// angles of those dates.
pub fn read_curves_csv<R: Read>(reader: R, opts: &CsvOptions) -> Result<Dataset> {
    read_curve_table(reader, opts)?.into_dated_dataset()
}

/// Read an `id,angle_rad` response file.
pub fn read_responses_csv<R: Read>(reader: R) -> Result<Vec<(String, Angle)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Format(e.to_string()))?
        .clone();
    if headers.get(0) != Some("id") || headers.get(1) != Some("angle_rad") {
        return Err(Error::Format(
            "response file header must be `id,angle_rad`".into(),
        ));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            row: e.position().map(|p| p.line() as usize).unwrap_or(0),
            column: None,
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let value =
            parse_cell(rec.get(1).unwrap_or_default(), line, "angle_rad")?.ok_or_else(|| {
                Error::Parse {
                    row: line as usize,
                    column: Some("angle_rad".into()),
                    message: "missing value".into(),
                }
            })?;
        out.push((
            rec.get(0).unwrap_or_default().to_string(),
            wrap_angle(value)?,
        ));
    }
    Ok(out)
}
