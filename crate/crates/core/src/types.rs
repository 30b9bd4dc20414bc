//! Hourly trajectories, weighted scenario sets, bids and day-ahead programs.

use serde::{Deserialize, Serialize};

use crate::config::RecConfig;
use crate::error::{invalid, Result};

/// Tolerance on the probability sum of a [`ScenarioSet`].
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    Pv,
    Load,
    MemberDemand,
    PriceSellMax,
    PriceBuyMin,
    PriceExport,
    PriceImport,
}

impl TrajectoryKind {
    pub fn is_price(self) -> bool {
        matches!(
            self,
            Self::PriceSellMax | Self::PriceBuyMin | Self::PriceExport | Self::PriceImport
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pv => "pv",
            Self::Load => "load",
            Self::MemberDemand => "member_demand",
            Self::PriceSellMax => "price_sell_max",
            Self::PriceBuyMin => "price_buy_min",
            Self::PriceExport => "price_export",
            Self::PriceImport => "price_import",
        }
    }
}

pub const ENERGY_CHANNELS: [TrajectoryKind; 3] = [
    TrajectoryKind::Pv,
    TrajectoryKind::Load,
    TrajectoryKind::MemberDemand,
];

pub const PRICE_CHANNELS: [TrajectoryKind; 2] =
    [TrajectoryKind::PriceSellMax, TrajectoryKind::PriceBuyMin];

fn check_values(kind: TrajectoryKind, values: &[f64]) -> Result<()> {
    for (k, v) in values.iter().enumerate() {
        if !v.is_finite() || *v < 0.0 {
            return Err(invalid(format!(
                "{} value at hour {k} must be finite and non-negative, got {v}",
                kind.as_str()
            )));
        }
    }
    Ok(())
}

/// K hourly values of one kind (energies in kWh per slot or prices in €/kWh).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayTrajectory {
    kind: TrajectoryKind,
    values: Vec<f64>,
}

impl DayTrajectory {
    pub fn new(kind: TrajectoryKind, values: Vec<f64>, horizon: usize) -> Result<Self> {
        if values.len() != horizon {
            return Err(invalid(format!(
                "{} trajectory has {} values, expected {horizon}",
                kind.as_str(),
                values.len()
            )));
        }
        check_values(kind, &values)?;
        Ok(Self { kind, values })
    }

    pub fn kind(&self) -> TrajectoryKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Equal-length multi-channel trajectories with occurrence probabilities.
///
/// Values are stored as `scenario -> channel -> hour`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    channels: Vec<TrajectoryKind>,
    horizon: usize,
    scenarios: Vec<Vec<Vec<f64>>>,
    probabilities: Vec<f64>,
}

impl ScenarioSet {
    pub fn new(
        channels: Vec<TrajectoryKind>,
        scenarios: Vec<Vec<Vec<f64>>>,
        probabilities: Vec<f64>,
    ) -> Result<Self> {
        if scenarios.is_empty() {
            return Err(invalid("scenario set must contain at least one scenario"));
        }
        if channels.is_empty() {
            return Err(invalid("scenario set must have at least one channel"));
        }
        for (i, a) in channels.iter().enumerate() {
            if channels[..i].contains(a) {
                return Err(invalid(format!("duplicate channel {}", a.as_str())));
            }
        }
        if probabilities.len() != scenarios.len() {
            return Err(invalid(format!(
                "{} probabilities for {} scenarios",
                probabilities.len(),
                scenarios.len()
            )));
        }
        let horizon = scenarios[0].first().map_or(0, Vec::len);
        if horizon == 0 {
            return Err(invalid("scenarios must have at least one hour"));
        }
        for (s, sc) in scenarios.iter().enumerate() {
            if sc.len() != channels.len() {
                return Err(invalid(format!(
                    "scenario {s} has {} channels, expected {}",
                    sc.len(),
                    channels.len()
                )));
            }
            for (c, series) in sc.iter().enumerate() {
                if series.len() != horizon {
                    return Err(invalid(format!(
                        "scenario {s} channel {} has {} hours, expected {horizon}",
                        channels[c].as_str(),
                        series.len()
                    )));
                }
                check_values(channels[c], series)?;
            }
        }
        let mut total = 0.0;
        for (s, p) in probabilities.iter().enumerate() {
            if !p.is_finite() || *p < 0.0 {
                return Err(invalid(format!("probability of scenario {s} is {p}")));
            }
            total += p;
        }
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(invalid(format!("probabilities sum to {total}, expected 1")));
        }
        Ok(Self {
            channels,
            horizon,
            scenarios,
            probabilities,
        })
    }

    /// Equally likely scenarios.
    pub fn uniform(channels: Vec<TrajectoryKind>, scenarios: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let n = scenarios.len().max(1);
        let p = vec![1.0 / n as f64; scenarios.len()];
        Self::new(channels, scenarios, p)
    }

    pub fn channels(&self) -> &[TrajectoryKind] {
        &self.channels
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, s: usize) -> f64 {
        self.probabilities[s]
    }

    pub fn channel_index(&self, kind: TrajectoryKind) -> Option<usize> {
        self.channels.iter().position(|c| *c == kind)
    }

    pub fn has_channels(&self, kinds: &[TrajectoryKind]) -> bool {
        kinds.iter().all(|k| self.channel_index(*k).is_some())
    }

    /// All channels of scenario `s`, in channel order.
    pub fn scenario(&self, s: usize) -> &[Vec<f64>] {
        &self.scenarios[s]
    }

    /// Panics when the channel is absent; callers check with [`Self::has_channels`].
    pub fn series(&self, s: usize, kind: TrajectoryKind) -> &[f64] {
        let c = self
            .channel_index(kind)
            .unwrap_or_else(|| panic!("channel {} not in scenario set", kind.as_str()));
        &self.scenarios[s][c]
    }

    pub fn value(&self, s: usize, kind: TrajectoryKind, k: usize) -> f64 {
        self.series(s, kind)[k]
    }

    pub fn trajectory(&self, s: usize, kind: TrajectoryKind) -> DayTrajectory {
        DayTrajectory {
            kind,
            values: self.series(s, kind).to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Sell,
    Buy,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Sell => "sell",
            Side::Buy => "buy",
        }
    }
}

/// A price-quantity offer on the service market for one hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bid {
    pub hour: usize,
    pub side: Side,
    pub price: f64,
    pub quantity: f64,
    pub submitted: bool,
}

impl Bid {
    pub fn not_submitted(hour: usize, side: Side) -> Self {
        Self {
            hour,
            side,
            price: 0.0,
            quantity: 0.0,
            submitted: false,
        }
    }

    /// Broken bid invariants, empty when the bid is well formed.
    pub fn violations(&self, config: &RecConfig) -> Vec<String> {
        let mut out = Vec::new();
        let cap = match self.side {
            Side::Sell => config.p_export_max,
            Side::Buy => config.p_import_max,
        };
        if !(self.quantity >= 0.0) {
            out.push(format!("hour {}: negative quantity {}", self.hour, self.quantity));
        }
        if self.quantity > cap {
            out.push(format!(
                "hour {}: {} quantity {} exceeds limit {cap}",
                self.hour,
                self.side.as_str(),
                self.quantity
            ));
        }
        if !self.submitted && (self.quantity != 0.0 || self.price != 0.0) {
            out.push(format!(
                "hour {}: bid not submitted but carries price {} and quantity {}",
                self.hour, self.price, self.quantity
            ));
        }
        out
    }
}

/// Decided baseline, storage schedule and bids for the day ahead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayAheadProgram {
    /// Declared community exchange per hour, positive = export.
    pub rec_baseline: Vec<f64>,
    /// Storage baseline per hour, positive = discharge.
    pub bess_baseline: Vec<f64>,
    /// At most one submitted bid per hour.
    pub bids: Vec<Option<Bid>>,
    /// `sell_choice[k][j]` is set when the hour-k sell price is the one of price scenario j.
    pub sell_choice: Vec<Vec<bool>>,
    pub buy_choice: Vec<Vec<bool>>,
}

impl DayAheadProgram {
    /// An idle program that declares `baseline` and submits nothing.
    pub fn idle(baseline: Vec<f64>, bess: Vec<f64>, n_prices: usize) -> Self {
        let k = baseline.len();
        Self {
            rec_baseline: baseline,
            bess_baseline: bess,
            bids: vec![None; k],
            sell_choice: vec![vec![false; n_prices]; k],
            buy_choice: vec![vec![false; n_prices]; k],
        }
    }

    pub fn horizon(&self) -> usize {
        self.rec_baseline.len()
    }

    pub fn bid(&self, k: usize, side: Side) -> Option<&Bid> {
        self.bids[k]
            .as_ref()
            .filter(|b| b.side == side && b.submitted)
    }

    /// Broken program invariants against the price scenarios the choice refers to.
    pub fn violations(&self, config: &RecConfig, prices: &ScenarioSet) -> Vec<String> {
        let mut out = Vec::new();
        let k_len = self.horizon();
        if self.bess_baseline.len() != k_len
            || self.bids.len() != k_len
            || self.sell_choice.len() != k_len
            || self.buy_choice.len() != k_len
        {
            out.push("program series lengths differ".to_string());
            return out;
        }
        for k in 0..k_len {
            let bid = self.bids[k].as_ref();
            if let Some(b) = bid {
                if b.hour != k {
                    out.push(format!("bid stored at hour {k} is labelled hour {}", b.hour));
                }
                out.extend(b.violations(config));
            }
            for (side, choice, channel) in [
                (Side::Sell, &self.sell_choice[k], TrajectoryKind::PriceSellMax),
                (Side::Buy, &self.buy_choice[k], TrajectoryKind::PriceBuyMin),
            ] {
                let chosen: Vec<usize> = (0..choice.len()).filter(|&j| choice[j]).collect();
                let submitted = bid.is_some_and(|b| b.side == side && b.submitted);
                if chosen.len() != usize::from(submitted) {
                    out.push(format!(
                        "hour {k}: {} price choice selects {} candidates, submitted={submitted}",
                        side.as_str(),
                        chosen.len()
                    ));
                    continue;
                }
                if let (Some(&j), Some(b)) = (chosen.first(), bid) {
                    if j >= prices.len() {
                        out.push(format!("hour {k}: price choice {j} out of range"));
                    } else if b.price != prices.value(j, channel, k) {
                        out.push(format!(
                            "hour {k}: {} price {} differs from scenario {j} price {}",
                            side.as_str(),
                            b.price,
                            prices.value(j, channel, k)
                        ));
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probability_sum_is_enforced() {
        let ch = vec![TrajectoryKind::Pv];
        let sc = vec![vec![vec![1.0, 2.0]], vec![vec![3.0, 4.0]]];
        assert!(ScenarioSet::new(ch.clone(), sc.clone(), vec![0.5, 0.5]).is_ok());
        assert!(ScenarioSet::new(ch.clone(), sc.clone(), vec![0.5, 0.4]).is_err());
        assert!(ScenarioSet::new(ch, sc, vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn ragged_scenarios_are_rejected() {
        let ch = vec![TrajectoryKind::Pv];
        let sc = vec![vec![vec![1.0, 2.0]], vec![vec![3.0]]];
        assert!(ScenarioSet::uniform(ch, sc).is_err());
    }

    #[test]
    fn negative_energy_is_rejected() {
        assert!(DayTrajectory::new(TrajectoryKind::Load, vec![1.0, -0.1], 2).is_err());
        assert!(DayTrajectory::new(TrajectoryKind::Load, vec![1.0], 2).is_err());
        assert!(DayTrajectory::new(TrajectoryKind::Load, vec![1.0, 0.0], 2).is_ok());
    }

    #[test]
    fn bid_invariants() {
        let c = RecConfig::default();
        let ok = Bid {
            hour: 0,
            side: Side::Sell,
            price: 0.2,
            quantity: 10.0,
            submitted: true,
        };
        assert!(ok.violations(&c).is_empty());
        let too_big = Bid {
            quantity: c.p_export_max + 1.0,
            ..ok.clone()
        };
        assert_eq!(too_big.violations(&c).len(), 1);
        let ghost = Bid {
            submitted: false,
            ..ok
        };
        assert_eq!(ghost.violations(&c).len(), 1);
        assert!(Bid::not_submitted(3, Side::Buy).violations(&c).is_empty());
    }

    #[test]
    fn program_choice_must_match_bid() {
        let c = RecConfig::default();
        let prices = ScenarioSet::uniform(
            PRICE_CHANNELS.to_vec(),
            vec![
                vec![vec![0.10], vec![0.02]],
                vec![vec![0.20], vec![0.03]],
            ],
        )
        .unwrap();
        let mut p = DayAheadProgram::idle(vec![0.0], vec![0.0], 2);
        assert!(p.violations(&c, &prices).is_empty());
        p.bids[0] = Some(Bid {
            hour: 0,
            side: Side::Sell,
            price: 0.20,
            quantity: 5.0,
            submitted: true,
        });
        assert_eq!(p.violations(&c, &prices).len(), 1);
        p.sell_choice[0][1] = true;
        assert!(p.violations(&c, &prices).is_empty());
        p.sell_choice[0] = vec![true, false];
        assert_eq!(p.violations(&c, &prices).len(), 1);
    }
}
