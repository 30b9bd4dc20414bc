//! Binned discrete Markov chain over joint (pv, load, member demand) states.
//!
//! Each channel is cut into equal-probability bins. The joint state is the
//! triple of bin indices, and one transition matrix is kept per hour of the
//! day (hour h to hour h+1, the last hour wrapping to the next day's first).

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::types::{ScenarioSet, ENERGY_CHANNELS};

/// Hourly energy history, one value per slot and channel.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyHistory {
    pub pv: Vec<f64>,
    pub load: Vec<f64>,
    pub member_demand: Vec<f64>,
}

impl EnergyHistory {
    pub fn len(&self) -> usize {
        self.pv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pv.is_empty()
    }

    fn channels(&self) -> [&[f64]; 3] {
        [&self.pv, &self.load, &self.member_demand]
    }

    /// The first `hours` slots.
    pub fn prefix(&self, hours: usize) -> Self {
        Self {
            pv: self.pv[..hours].to_vec(),
            load: self.load[..hours].to_vec(),
            member_demand: self.member_demand[..hours].to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JointState(pub usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmcModel {
    horizon: usize,
    /// Strictly ascending thresholds per channel; bin `b` holds values in
    /// `(edges[b-1], edges[b]]`.
    bin_edges: Vec<Vec<f64>>,
    /// Mean training value of each bin, per channel.
    representatives: Vec<Vec<f64>>,
    /// `transitions[h][from]` lists `(to, probability)` sorted by `to`.
    transitions: Vec<BTreeMap<usize, Vec<(usize, f64)>>>,
    last_state: JointState,
}

impl DmcModel {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn bin_edges(&self, channel: usize) -> &[f64] {
        &self.bin_edges[channel]
    }

    pub fn representatives(&self, channel: usize) -> &[f64] {
        &self.representatives[channel]
    }

    pub fn bins(&self, channel: usize) -> usize {
        self.representatives[channel].len()
    }

    pub fn state_count(&self) -> usize {
        (0..3).map(|c| self.bins(c)).product()
    }

    /// State of the last hour of the training history.
    pub fn last_state(&self) -> JointState {
        self.last_state
    }

    pub fn encode(&self, bins: [usize; 3]) -> JointState {
        JointState((bins[0] * self.bins(1) + bins[1]) * self.bins(2) + bins[2])
    }

    pub fn decode(&self, state: JointState) -> [usize; 3] {
        let b2 = state.0 % self.bins(2);
        let rest = state.0 / self.bins(2);
        [rest / self.bins(1), rest % self.bins(1), b2]
    }

    pub fn bin_of(&self, channel: usize, value: f64) -> usize {
        self.bin_edges[channel].partition_point(|e| *e < value)
    }

    pub fn state_of(&self, values: [f64; 3]) -> JointState {
        self.encode([
            self.bin_of(0, values[0]),
            self.bin_of(1, values[1]),
            self.bin_of(2, values[2]),
        ])
    }

    /// Outgoing distribution of `from` at hour `hour`; unobserved rows stay put.
    pub fn row(&self, hour: usize, from: JointState) -> Vec<(JointState, f64)> {
        match self.transitions[hour % self.horizon].get(&from.0) {
            Some(row) => row.iter().map(|&(to, p)| (JointState(to), p)).collect(),
            None => vec![(from, 1.0)],
        }
    }

    /// Hours with an explicit (observed) row for `from`.
    pub fn is_observed(&self, hour: usize, from: JointState) -> bool {
        self.transitions[hour % self.horizon].contains_key(&from.0)
    }

    fn values_of(&self, state: JointState) -> [f64; 3] {
        let b = self.decode(state);
        [
            self.representatives[0][b[0]],
            self.representatives[1][b[1]],
            self.representatives[2][b[2]],
        ]
    }

    fn step(&self, hour: usize, from: JointState, rng: &mut ChaCha8Rng) -> JointState {
        let Some(row) = self.transitions[hour % self.horizon].get(&from.0) else {
            return from;
        };
        let r: f64 = rng.random();
        let mut acc = 0.0;
        for &(to, p) in row {
            acc += p;
            if r < acc {
                return JointState(to);
            }
        }
        JointState(row.last().expect("observed rows are non-empty").0)
    }
}

/// Equal-probability thresholds: every bin holds at least one sample.
fn quantile_edges(values: &[f64], bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let max = sorted[n - 1];
    let mut edges: Vec<f64> = Vec::new();
    for i in 1..bins {
        let idx = (i * n).div_ceil(bins) - 1;
        let t = sorted[idx];
        if t < max && edges.last().is_none_or(|last| t > *last) {
            edges.push(t);
        }
    }
    edges
}

/// Fits the hour-indexed chain to `history`, which must span whole days of
/// `horizon` slots.
pub fn fit_dmc(history: &EnergyHistory, horizon: usize, bins_per_channel: usize) -> Result<DmcModel> {
    if horizon == 0 {
        return Err(invalid("horizon must be at least one hour"));
    }
    if bins_per_channel < 2 {
        return Err(invalid("bins_per_channel must be at least 2"));
    }
    let n = history.len();
    if history.load.len() != n || history.member_demand.len() != n {
        return Err(invalid("energy history channels differ in length"));
    }
    if n % horizon != 0 {
        return Err(invalid(format!(
            "history of {n} hours is not a whole number of {horizon}-hour days"
        )));
    }
    if n / horizon < 2 {
        return Err(invalid("history must span at least two days"));
    }
    for (c, series) in history.channels().iter().enumerate() {
        if let Some((t, v)) = series
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(invalid(format!(
                "{} history has invalid value {v} at hour {t}",
                ENERGY_CHANNELS[c].as_str()
            )));
        }
    }

    let bin_edges: Vec<Vec<f64>> = history
        .channels()
        .iter()
        .map(|s| quantile_edges(s, bins_per_channel))
        .collect();
    let mut sums: Vec<Vec<f64>> = bin_edges.iter().map(|e| vec![0.0; e.len() + 1]).collect();
    let mut counts: Vec<Vec<usize>> = bin_edges.iter().map(|e| vec![0; e.len() + 1]).collect();
    let mut model = DmcModel {
        horizon,
        bin_edges,
        representatives: Vec::new(),
        transitions: vec![BTreeMap::new(); horizon],
        last_state: JointState(0),
    };
    model.representatives = sums.clone();

    let channels = history.channels();
    let mut states = Vec::with_capacity(n);
    for t in 0..n {
        let mut bins = [0usize; 3];
        for c in 0..3 {
            let b = model.bin_of(c, channels[c][t]);
            sums[c][b] += channels[c][t];
            counts[c][b] += 1;
            bins[c] = b;
        }
        states.push(model.encode(bins));
    }
    model.representatives = sums
        .iter()
        .zip(&counts)
        .map(|(s, c)| s.iter().zip(c).map(|(s, &c)| s / c as f64).collect())
        .collect();

    let mut tallies: Vec<BTreeMap<usize, BTreeMap<usize, usize>>> = vec![BTreeMap::new(); horizon];
    for t in 0..n - 1 {
        *tallies[t % horizon]
            .entry(states[t].0)
            .or_default()
            .entry(states[t + 1].0)
            .or_default() += 1;
    }
    for (h, rows) in tallies.into_iter().enumerate() {
        for (from, row) in rows {
            let total: usize = row.values().sum();
            let probs = row
                .into_iter()
                .map(|(to, c)| (to, c as f64 / total as f64))
                .collect();
            model.transitions[h].insert(from, probs);
        }
    }
    model.last_state = states[n - 1];
    Ok(model)
}

/// Samples `count` equally likely day trajectories starting after `initial_state`,
/// which is taken to be the state of the last hour of the previous day.
///
/// Scenario `i` draws from its own ChaCha stream `(seed, i)`.
pub fn sample_scenarios(
    model: &DmcModel,
    initial_state: JointState,
    count: usize,
    horizon: usize,
    seed: u64,
) -> Result<ScenarioSet> {
    if count == 0 {
        return Err(invalid("scenario count must be at least 1"));
    }
    if horizon == 0 {
        return Err(invalid("horizon must be at least one hour"));
    }
    if initial_state.0 >= model.state_count() {
        return Err(invalid(format!(
            "state {} out of range for a chain with {} states",
            initial_state.0,
            model.state_count()
        )));
    }
    let start_hour = model.horizon - 1;
    let scenarios = (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut series = vec![Vec::with_capacity(horizon); 3];
            let mut state = initial_state;
            for t in 0..horizon {
                state = model.step(start_hour + t, state, &mut rng);
                let v = model.values_of(state);
                for c in 0..3 {
                    series[c].push(v[c]);
                }
            }
            series
        })
        .collect();
    ScenarioSet::uniform(ENERGY_CHANNELS.to_vec(), scenarios)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::TrajectoryKind;

    fn history(pv: &[f64], load: &[f64], md: &[f64]) -> EnergyHistory {
        EnergyHistory {
            pv: pv.to_vec(),
            load: load.to_vec(),
            member_demand: md.to_vec(),
        }
    }

    #[test]
    fn constant_history_is_degenerate() {
        let h = history(&[3.0; 48], &[2.0; 48], &[1.0; 48]);
        let m = fit_dmc(&h, 24, 10).unwrap();
        assert_eq!(m.state_count(), 1);
        for hour in 0..24 {
            assert_eq!(m.row(hour, JointState(0)), vec![(JointState(0), 1.0)]);
        }
        assert_eq!(m.representatives(0), &[3.0]);
    }

    #[test]
    fn two_day_toy_matches_hand_count() {
        // K=2, days [0,10] and [0,0] for pv, flat load and demand.
        // pv bins: (-inf,0] and (0,inf). States per slot: 0,1,0,0.
        // Hour-0 transitions: 0->1 (slot 0->1) and 0->0 (slot 2->3).
        // Hour-1 transitions: 1->0 (slot 1->2).
        let h = history(&[0.0, 10.0, 0.0, 0.0], &[1.0; 4], &[2.0; 4]);
        let m = fit_dmc(&h, 2, 2).unwrap();
        assert_eq!(m.bin_edges(0), &[0.0]);
        assert_eq!(m.bins(1), 1);
        assert_eq!(m.representatives(0), &[0.0, 10.0]);
        let s0 = m.encode([0, 0, 0]);
        let s1 = m.encode([1, 0, 0]);
        assert_eq!(m.row(0, s0), vec![(s0, 0.5), (s1, 0.5)]);
        assert_eq!(m.row(1, s1), vec![(s0, 1.0)]);
        // never observed: self transition
        assert!(!m.is_observed(1, s0));
        assert_eq!(m.row(1, s0), vec![(s0, 1.0)]);
        assert_eq!(m.last_state(), s0);
    }

    #[test]
    fn alternating_history_with_two_bins() {
        // K=4, two days of pv [0,8,8,0] / [0,8,0,0], load [1,2,1,2] twice.
        // pv thresholds (8 samples, 2 bins): sorted[3] = 0 -> bins {0} and {8}.
        // load thresholds: sorted[3] = 1 -> bins {1} and {2}.
        // States (pv_bin, load_bin): day1 (0,0)(1,1)(1,0)(0,1), day2 (0,0)(1,1)(0,0)(0,1).
        // Hour 0: (0,0)->(1,1) twice -> probability 1.
        // Hour 1: (1,1)->(1,0) once, (1,1)->(0,0) once -> 1/2 each.
        // Hour 2: (1,0)->(0,1) once, (0,0)->(0,1) once.
        // Hour 3: (0,1)->(0,0) once (day boundary).
        let h = history(
            &[0.0, 8.0, 8.0, 0.0, 0.0, 8.0, 0.0, 0.0],
            &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0],
            &[5.0; 8],
        );
        let m = fit_dmc(&h, 4, 2).unwrap();
        let st = |p, l| m.encode([p, l, 0]);
        assert_eq!(m.row(0, st(0, 0)), vec![(st(1, 1), 1.0)]);
        assert_eq!(m.row(1, st(1, 1)), vec![(st(0, 0), 0.5), (st(1, 0), 0.5)]);
        assert_eq!(m.row(2, st(1, 0)), vec![(st(0, 1), 1.0)]);
        assert_eq!(m.row(2, st(0, 0)), vec![(st(0, 1), 1.0)]);
        assert_eq!(m.row(3, st(0, 1)), vec![(st(0, 0), 1.0)]);
        for hour in 0..4 {
            for s in 0..m.state_count() {
                let total: f64 = m.row(hour, JointState(s)).iter().map(|r| r.1).sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn negative_history_is_rejected() {
        let mut pv = vec![1.0; 48];
        pv[7] = -0.5;
        assert!(fit_dmc(&history(&pv, &[1.0; 48], &[1.0; 48]), 24, 10).is_err());
        let mut load = vec![1.0; 48];
        load[3] = f64::NAN;
        assert!(fit_dmc(&history(&[1.0; 48], &load, &[1.0; 48]), 24, 10).is_err());
    }

    #[test]
    fn history_shape_is_checked() {
        let h = history(&[1.0; 30], &[1.0; 30], &[1.0; 30]);
        assert!(fit_dmc(&h, 24, 10).is_err());
        let h = history(&[1.0; 24], &[1.0; 24], &[1.0; 24]);
        assert!(fit_dmc(&h, 24, 10).is_err());
        let h = history(&[1.0; 48], &[1.0; 48], &[1.0; 48]);
        assert!(fit_dmc(&h, 24, 1).is_err());
    }

    #[test]
    fn degenerate_chain_samples_identical_scenarios() {
        let h = history(&[3.0; 48], &[2.0; 48], &[1.0; 48]);
        let m = fit_dmc(&h, 24, 10).unwrap();
        let set = sample_scenarios(&m, m.last_state(), 5, 24, 1).unwrap();
        assert_eq!(set.len(), 5);
        for s in 0..5 {
            assert_eq!(set.probability(s), 0.2);
            assert_eq!(set.scenario(s), set.scenario(0));
        }
        assert_eq!(set.series(0, TrajectoryKind::Pv), &[3.0; 24]);
    }

    #[test]
    fn out_of_range_state_is_rejected() {
        let h = history(&[3.0; 48], &[2.0; 48], &[1.0; 48]);
        let m = fit_dmc(&h, 24, 10).unwrap();
        assert!(sample_scenarios(&m, JointState(1), 1, 24, 0).is_err());
        assert!(sample_scenarios(&m, JointState(0), 0, 24, 0).is_err());
    }
}
