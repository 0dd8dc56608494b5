//! Error metrics under the cosine loss.

use std::collections::BTreeMap;

use crate::circular::{cos_dissimilarity, Angle};
use crate::error::{Error, Result};

/// Circular average squared error `(1/n) Σ (1 − cos(truthᵢ − predᵢ))`.
pub fn case(predictions: &[Angle], truth: &[Angle]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::invalid(format!(
            "{} predictions but {} true values",
            predictions.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::invalid("CASE of an empty sample"));
    }
    let total: f64 = predictions
        .iter()
        .zip(truth)
        .map(|(&p, &t)| cos_dissimilarity(t, p))
        .sum();
    Ok(total / truth.len() as f64)
}

/// Circular average prediction error of each group.
pub fn cape<G: Ord + Clone>(
    observed: &[Angle],
    predicted: &[Angle],
    groups: &[G],
) -> Result<BTreeMap<G, f64>> {
    if observed.len() != predicted.len() || observed.len() != groups.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} observed, {} predicted, {} group labels",
            observed.len(),
            predicted.len(),
            groups.len()
        )));
    }
    if observed.is_empty() {
        return Err(Error::invalid("CAPE needs at least one group"));
    }
    let mut acc: BTreeMap<G, (f64, usize)> = BTreeMap::new();
    for ((&o, &p), g) in observed.iter().zip(predicted).zip(groups) {
        let e = acc.entry(g.clone()).or_insert((0.0, 0));
        e.0 += cos_dissimilarity(o, p);
        e.1 += 1;
    }
    Ok(acc
        .into_iter()
        .map(|(g, (sum, n))| (g, sum / n as f64))
        .collect())
}
