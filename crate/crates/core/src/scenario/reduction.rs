//! Fast-forward scenario selection under the Kantorovich distance.
//!
//! Scenarios are compared with the Euclidean distance between their
//! concatenated channels, each channel scaled by its largest absolute value
//! over the whole set. Deleted scenarios hand their probability to the
//! nearest kept scenario. Ties go to the lowest scenario index.

use crate::error::{invalid, Result};
use crate::types::ScenarioSet;

#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    /// Kept scenario indices in selection order.
    pub selected: Vec<usize>,
    /// Kept indices in ascending order, aligned with `probabilities`.
    pub kept: Vec<usize>,
    pub probabilities: Vec<f64>,
    /// Sum over deleted scenarios of probability times distance to the
    /// nearest kept scenario.
    pub objective: f64,
}

fn normalized_points(set: &ScenarioSet) -> Vec<Vec<f64>> {
    let n_channels = set.channels().len();
    let scale: Vec<f64> = (0..n_channels)
        .map(|c| {
            let m = (0..set.len())
                .flat_map(|s| set.scenario(s)[c].iter())
                .fold(0.0f64, |m, v| m.max(v.abs()));
            if m > 0.0 {
                1.0 / m
            } else {
                1.0
            }
        })
        .collect();
    (0..set.len())
        .map(|s| {
            set.scenario(s)
                .iter()
                .zip(&scale)
                .flat_map(|(series, f)| series.iter().map(move |v| v * f))
                .collect()
        })
        .collect()
}

fn distance_matrix(set: &ScenarioSet) -> Vec<Vec<f64>> {
    let pts = normalized_points(set);
    let n = pts.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = pts[i]
                .iter()
                .zip(&pts[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

fn nearest_kept(d: &[Vec<f64>], i: usize, kept: &[usize]) -> usize {
    let mut best = kept[0];
    for &j in kept {
        if d[i][j] < d[i][best] || (d[i][j] == d[i][best] && j < best) {
            best = j;
        }
    }
    best
}

/// Greedy forward selection of `target` scenarios.
pub fn fast_forward_select(set: &ScenarioSet, target: usize) -> Result<Reduction> {
    let n = set.len();
    if target == 0 || target > n {
        return Err(invalid(format!(
            "reduction target {target} outside 1..={n}"
        )));
    }
    let p = set.probabilities();
    let d = distance_matrix(set);
    let mut is_kept = vec![false; n];
    let mut current = vec![f64::INFINITY; n];
    let mut selected = Vec::with_capacity(target);

    for _ in 0..target {
        let mut best: Option<(usize, f64)> = None;
        for u in (0..n).filter(|&u| !is_kept[u]) {
            let score: f64 = (0..n)
                .filter(|&i| i != u && !is_kept[i])
                .map(|i| p[i] * current[i].min(d[i][u]))
                .sum();
            if best.is_none_or(|(_, b)| score < b) {
                best = Some((u, score));
            }
        }
        let (u, _) = best.expect("a candidate remains while selecting");
        is_kept[u] = true;
        selected.push(u);
        for i in 0..n {
            current[i] = current[i].min(d[i][u]);
        }
    }

    let kept: Vec<usize> = (0..n).filter(|&i| is_kept[i]).collect();
    let mut probabilities: Vec<f64> = kept.iter().map(|&i| p[i]).collect();
    let mut objective = 0.0;
    for i in (0..n).filter(|&i| !is_kept[i]) {
        let j = nearest_kept(&d, i, &kept);
        let slot = kept.binary_search(&j).expect("nearest is kept");
        probabilities[slot] += p[i];
        objective += p[i] * d[i][j];
    }
    Ok(Reduction {
        selected,
        kept,
        probabilities,
        objective,
    })
}

/// Kantorovich-type cost of keeping only `kept` from `set`.
pub fn reduction_objective(set: &ScenarioSet, kept: &[usize]) -> f64 {
    let d = distance_matrix(set);
    (0..set.len())
        .filter(|i| !kept.contains(i))
        .map(|i| set.probability(i) * d[i][nearest_kept(&d, i, kept)])
        .sum()
}

/// Reduced set of `target` input scenarios, in input order.
pub fn reduce_scenarios(set: &ScenarioSet, target: usize) -> Result<ScenarioSet> {
    let r = fast_forward_select(set, target)?;
    let scenarios = r.kept.iter().map(|&i| set.scenario(i).to_vec()).collect();
    let total: f64 = r.probabilities.iter().sum();
    let probabilities = r.probabilities.iter().map(|p| p / total).collect();
    ScenarioSet::new(set.channels().to_vec(), scenarios, probabilities)
}
