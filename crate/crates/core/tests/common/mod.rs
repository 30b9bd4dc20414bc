#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use recbid::milp::{build_instance, DayAheadModel, KnownPrices};
use recbid::{RecConfig, ScenarioSet, ENERGY_CHANNELS, PRICE_CHANNELS};

/// Random inputs of a small planning problem.
pub struct Inputs {
    pub config: RecConfig,
    pub prices: ScenarioSet,
    pub energies: ScenarioSet,
    pub known: KnownPrices,
}

impl Inputs {
    pub fn build(&self) -> DayAheadModel {
        build_instance(&self.config, &self.prices, &self.energies, &self.known, self.config.soc_initial)
            .expect("random instance builds")
    }

    pub fn with_config(&self, config: RecConfig) -> Inputs {
        Inputs {
            config,
            prices: self.prices.clone(),
            energies: self.energies.clone(),
            known: self.known.clone(),
        }
    }
}

fn series(rng: &mut ChaCha8Rng, k: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..k).map(|_| (rng.random_range(lo..hi) * 1e4).round() / 1e4).collect()
}

/// A plant scaled to small flows, with `k` hours, `nm` price and `nr` energy
/// scenarios, drawn from `seed`.
pub fn random_inputs(seed: u64, k: usize, nm: usize, nr: usize) -> Inputs {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = RecConfig {
        horizon_hours: k,
        p_export_max: 60.0,
        p_import_max: 60.0,
        battery_capacity_kwh: 100.0,
        battery_power_kwh_per_slot: 40.0,
        soc_initial: 0.5,
        soc_final_min: 0.3,
        soc_final_max: 0.7,
        ..RecConfig::default()
    };
    let prices = (0..nm)
        .map(|_| vec![series(&mut rng, k, 0.1, 0.4), series(&mut rng, k, 0.01, 0.11)])
        .collect();
    let energies = (0..nr)
        .map(|_| {
            vec![
                series(&mut rng, k, 0.0, 60.0),
                series(&mut rng, k, 0.0, 10.0),
                series(&mut rng, k, 0.0, 30.0),
            ]
        })
        .collect();
    let export = series(&mut rng, k, 0.05, 0.15);
    let import = series(&mut rng, k, 0.2, 0.3);
    Inputs {
        config,
        prices: ScenarioSet::uniform(PRICE_CHANNELS.to_vec(), prices).unwrap(),
        energies: ScenarioSet::uniform(ENERGY_CHANNELS.to_vec(), energies).unwrap(),
        known: KnownPrices::new(export, import, k).unwrap(),
    }
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// A synthetic run of `days` simulated days split into four 6-hour slots,
/// one scenario per side and the reference backend. The terminal SOC window
/// is open: with so little history the sampled day can be a frozen night
/// without any PV to recharge from.
pub fn small_run(dir: &std::path::Path, days: usize) -> recbid::sim::RunSpec {
    use recbid::solver::{Backend, SolveRequest};
    use recbid::synthetic::{synthetic_dataset, SyntheticSpec};
    let data = synthetic_dataset(&SyntheticSpec {
        horizon: 4,
        history_days: 12,
        week_days: days,
        ..SyntheticSpec::default()
    })
    .unwrap();
    // A 6-hour slot carries six hours of energy.
    let config = RecConfig {
        horizon_hours: 4,
        p_export_max: 1200.0,
        p_import_max: 1200.0,
        battery_power_kwh_per_slot: 720.0,
        soc_final_min: 0.0,
        soc_final_max: 1.0,
        ..RecConfig::default()
    };
    let mut spec = recbid::sim::RunSpec::new(config, data, dir);
    spec.n_prices = 1;
    spec.n_energies = 1;
    spec.price_window_days = 10;
    spec.energy_samples = 50;
    spec.solve = SolveRequest {
        backend: Backend::Reference,
        binary_limit: 64,
        ..SolveRequest::default()
    };
    spec
}
