//! Seeded synthetic community data shaped like a summer week.
//!
//! PV follows a clipped sine between 05:00 and 20:00 scaled by a persistent
//! daily clearness index. Member demand has morning and evening peaks, the
//! internal load a daytime plateau. Export prices carry an evening premium
//! and a midday dip, import prices add a fixed network charge, and service
//! market clearing prices are random multiples of the export price.

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::DataSet;
use crate::error::{invalid, Result};
use crate::scenario::{EnergyHistory, PriceDay};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub horizon: usize,
    pub history_days: usize,
    pub week_days: usize,
    pub pv_peak_kw: f64,
    pub member_peak_kw: f64,
    pub load_peak_kw: f64,
    /// Date of the first history day, `YYYY-MM-DD`.
    pub start_date: String,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    /// 15 households (37.076 kW), 50 kWp PV and a 10.037 kW internal load;
    /// 35 days of history before a 7-day week starting on 1 July.
    fn default() -> Self {
        Self {
            horizon: 24,
            history_days: 35,
            week_days: 7,
            pv_peak_kw: 50.0,
            member_peak_kw: 37.076,
            load_peak_kw: 10.037,
            start_date: "2022-05-27".to_string(),
            seed: 2022,
        }
    }
}

fn bump(t: f64, centre: f64, width: f64) -> f64 {
    (-((t - centre) / width).powi(2)).exp()
}

struct DayData {
    pv: Vec<f64>,
    load: Vec<f64>,
    md: Vec<f64>,
    export: Vec<f64>,
    import: Vec<f64>,
    sell_max: Vec<f64>,
    buy_min: Vec<f64>,
}

fn day(spec: &SyntheticSpec, rng: &mut ChaCha8Rng, clearness: f64) -> DayData {
    let k = spec.horizon;
    // Energy per slot scales with the slot length.
    let slot_h = 24.0 / k as f64;
    let level = rng.random_range(0.38..0.50);
    let mut d = DayData {
        pv: Vec::with_capacity(k),
        load: Vec::with_capacity(k),
        md: Vec::with_capacity(k),
        export: Vec::with_capacity(k),
        import: Vec::with_capacity(k),
        sell_max: Vec::with_capacity(k),
        buy_min: Vec::with_capacity(k),
    };
    for h in 0..k {
        let t = (h as f64 + 0.5) * slot_h;
        let sun = if (5.0..20.0).contains(&t) {
            (std::f64::consts::PI * (t - 5.0) / 15.0).sin().max(0.0)
        } else {
            0.0
        };
        let pv = spec.pv_peak_kw * 0.85 * sun * clearness * rng.random_range(0.85..1.05);
        let md = spec.member_peak_kw
            * (0.22 + 0.3 * bump(t, 8.0, 1.5) + 0.55 * bump(t, 20.0, 2.0))
            * rng.random_range(0.8..1.2);
        let load = spec.load_peak_kw * (0.3 + 0.4 * bump(t, 13.0, 4.0)) * rng.random_range(0.8..1.2);
        let shape = 1.0 + 0.3 * bump(t, 20.0, 2.0) - 0.15 * bump(t, 13.0, 3.0);
        let export = level * shape * rng.random_range(0.95..1.05);
        let spike = if rng.random_bool(0.1) { 2.5 } else { 1.0 };
        d.pv.push(pv * slot_h);
        d.md.push(md * slot_h);
        d.load.push(load * slot_h);
        d.export.push(export);
        d.import.push(export + 0.08);
        d.sell_max.push(export * rng.random_range(1.0..2.2) * spike);
        d.buy_min.push(export * rng.random_range(0.05..0.7));
    }
    d
}

fn round(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

pub fn synthetic_dataset(spec: &SyntheticSpec) -> Result<DataSet> {
    if spec.horizon == 0 || 1440 % spec.horizon != 0 {
        return Err(invalid(format!("horizon {} does not divide a day into whole minutes", spec.horizon)));
    }
    if spec.history_days < 2 || spec.week_days == 0 {
        return Err(invalid("need at least two history days and one simulated day"));
    }
    let start = NaiveDate::parse_from_str(&spec.start_date, "%Y-%m-%d")
        .map_err(|e| invalid(format!("bad start date {:?}: {e}", spec.start_date)))?
        .and_hms_opt(0, 0, 0)
        .expect("midnight exists");
    let k = spec.horizon;
    let step = Duration::minutes((1440 / k) as i64);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut clearness: f64 = 0.8;
    let total = spec.history_days + spec.week_days;
    let mut out = DataSet {
        horizon: k,
        history_energy: EnergyHistory::default(),
        history_prices: Vec::new(),
        week_energy: EnergyHistory::default(),
        week_prices: Vec::new(),
        week_export: Vec::new(),
        week_import: Vec::new(),
        week_timestamps: Vec::new(),
        history_energy_timestamps: Vec::new(),
        history_price_timestamps: Vec::new(),
    };
    for dd in 0..total {
        clearness = (0.6 * clearness + 0.4 * rng.random_range(0.3..1.0)).clamp(0.2, 1.0);
        let d = day(spec, &mut rng, clearness);
        let stamps: Vec<String> = (0..k)
            .map(|h| (start + Duration::days(dd as i64) + step * h as i32).format("%Y-%m-%dT%H:%M").to_string())
            .collect();
        let r = |v: Vec<f64>| v.into_iter().map(round).collect::<Vec<f64>>();
        let prices = PriceDay {
            sell_max: r(d.sell_max),
            buy_min: r(d.buy_min),
        };
        let (energy, ts) = if dd < spec.history_days {
            out.history_prices.push(prices);
            out.history_price_timestamps.extend(stamps.iter().cloned());
            (&mut out.history_energy, &mut out.history_energy_timestamps)
        } else {
            out.week_prices.push(prices);
            out.week_export.push(r(d.export));
            out.week_import.push(r(d.import));
            (&mut out.week_energy, &mut out.week_timestamps)
        };
        energy.pv.extend(r(d.pv));
        energy.load.extend(r(d.load));
        energy.member_demand.extend(r(d.md));
        ts.extend(stamps);
    }
    Ok(out)
}
