use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::types::{ScenarioSet, PRICE_CHANNELS};

/// One historical day of service-market clearing prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceDay {
    /// Highest accepted sell price per hour.
    pub sell_max: Vec<f64>,
    /// Lowest accepted purchase price per hour.
    pub buy_min: Vec<f64>,
}

/// One equally likely scenario per historical day.
pub fn build_price_scenarios(history: &[PriceDay], horizon: usize) -> Result<ScenarioSet> {
    if history.is_empty() {
        return Err(invalid("price history is empty"));
    }
    let mut scenarios = Vec::with_capacity(history.len());
    for (d, day) in history.iter().enumerate() {
        if day.sell_max.len() != horizon || day.buy_min.len() != horizon {
            return Err(invalid(format!(
                "price day {d} has {}/{} hourly values, expected {horizon}",
                day.sell_max.len(),
                day.buy_min.len()
            )));
        }
        scenarios.push(vec![day.sell_max.clone(), day.buy_min.clone()]);
    }
    ScenarioSet::uniform(PRICE_CHANNELS.to_vec(), scenarios)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::TrajectoryKind;

    fn day(v: f64, k: usize) -> PriceDay {
        PriceDay {
            sell_max: vec![v; k],
            buy_min: vec![v / 2.0; k],
        }
    }

    #[test]
    fn one_scenario_per_day() {
        let hist: Vec<_> = (0..30).map(|d| day(0.1 + d as f64 * 0.01, 24)).collect();
        let set = build_price_scenarios(&hist, 24).unwrap();
        assert_eq!(set.len(), 30);
        for p in set.probabilities() {
            assert!((p - 1.0 / 30.0).abs() < 1e-15);
        }
        assert_eq!(set.value(3, TrajectoryKind::PriceSellMax, 5), 0.13);
        assert_eq!(set.value(3, TrajectoryKind::PriceBuyMin, 5), 0.065);
    }

    #[test]
    fn single_day_has_probability_one() {
        let set = build_price_scenarios(&[day(0.2, 24)], 24).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.probability(0), 1.0);
    }

    #[test]
    fn short_day_is_rejected() {
        let mut d = day(0.2, 24);
        d.sell_max.pop();
        assert!(build_price_scenarios(&[day(0.2, 24), d], 24).is_err());
        assert!(build_price_scenarios(&[], 24).is_err());
    }
}
