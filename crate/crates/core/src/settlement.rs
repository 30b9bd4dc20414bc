//! Ex-post market outcome: bid acceptance, real-time storage dispatch and
//! the realized community cash flow.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::config::RecConfig;
use crate::error::{invalid, Result};
use crate::types::{Bid, DayAheadProgram, Side};

/// Per-hour acceptance of the submitted bids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Acceptance {
    pub sell: Vec<bool>,
    pub buy: Vec<bool>,
}

impl Acceptance {
    pub fn none(horizon: usize) -> Self {
        Self {
            sell: vec![false; horizon],
            buy: vec![false; horizon],
        }
    }

    pub fn horizon(&self) -> usize {
        self.sell.len()
    }
}

/// A sell bid clears when its price does not exceed the highest accepted sell
/// price; a purchase bid when its price is not below the lowest accepted
/// purchase price.
pub fn bid_clears(bid: &Bid, sell_max: f64, buy_min: f64) -> bool {
    bid.submitted
        && match bid.side {
            Side::Sell => bid.price <= sell_max,
            Side::Buy => bid.price >= buy_min,
        }
}

pub fn decide_acceptance(bids: &[Option<Bid>], sell_max: &[f64], buy_min: &[f64]) -> Result<Acceptance> {
    let k = bids.len();
    if sell_max.len() != k || buy_min.len() != k {
        return Err(invalid(format!(
            "{k} bid slots but {}/{} realized prices",
            sell_max.len(),
            buy_min.len()
        )));
    }
    let mut out = Acceptance::none(k);
    for (h, bid) in bids.iter().enumerate() {
        if let Some(b) = bid {
            if bid_clears(b, sell_max[h], buy_min[h]) {
                match b.side {
                    Side::Sell => out.sell[h] = true,
                    Side::Buy => out.buy[h] = true,
                }
            }
        }
    }
    Ok(out)
}

/// Realized hourly energies of one day (kWh per slot).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizedEnergies {
    pub pv: Vec<f64>,
    pub load: Vec<f64>,
    pub member_demand: Vec<f64>,
}

impl RealizedEnergies {
    pub fn horizon(&self) -> usize {
        self.pv.len()
    }

    fn check(&self, horizon: usize) -> Result<()> {
        for (name, s) in [("pv", &self.pv), ("load", &self.load), ("member_demand", &self.member_demand)] {
            if s.len() != horizon {
                return Err(invalid(format!("realized {name} has {} hours, expected {horizon}", s.len())));
            }
            if let Some(v) = s.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(invalid(format!("realized {name} has invalid value {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourDispatch {
    /// Community exchange the storage aimed at.
    pub target: f64,
    pub charge: f64,
    pub discharge: f64,
    pub export: f64,
    pub import: f64,
    /// Facility exchange net of the delivered service, split by sign: the
    /// day-ahead schedule the energy is paid on.
    pub baseline_export: f64,
    pub baseline_import: f64,
    pub rec_exchange: f64,
    pub member_demand: f64,
    /// Undelivered part of an accepted sell bid.
    pub sell_error: f64,
    /// Undelivered part of an accepted purchase bid.
    pub buy_error: f64,
    pub soc_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dispatch {
    pub hours: Vec<HourDispatch>,
    /// SOC at the start of every hour and after the last one.
    pub soc: Vec<f64>,
}

impl Dispatch {
    pub fn soc_final(&self) -> f64 {
        *self.soc.last().expect("soc has K+1 points")
    }
}

/// Greedy single-hour correction toward the declared exchange plus any
/// accepted service.
///
/// The storage covers the gap between the target and the uncontrolled balance
/// `pv - load - member_demand` as far as its power, SOC window and the
/// renewable-only charging rule allow. Grid limits are not enforced here.
pub fn realtime_dispatch(
    program: &DayAheadProgram,
    acceptance: &Acceptance,
    realized: &RealizedEnergies,
    config: &RecConfig,
    soc_initial: f64,
) -> Result<Dispatch> {
    let kk = program.horizon();
    if acceptance.horizon() != kk {
        return Err(invalid(format!("acceptance covers {} hours, program {kk}", acceptance.horizon())));
    }
    realized.check(kk)?;
    if !(0.0..=1.0).contains(&soc_initial) {
        return Err(invalid(format!("initial SOC {soc_initial} outside [0, 1]")));
    }
    let storage = config.has_storage();
    let cap = config.battery_capacity_kwh;
    let mut soc = soc_initial;
    let mut socs = vec![soc];
    let mut hours = Vec::with_capacity(kk);
    for k in 0..kk {
        let sell = acceptance.sell[k].then(|| program.bid(k, Side::Sell)).flatten();
        let buy = acceptance.buy[k].then(|| program.bid(k, Side::Buy)).flatten();
        let target = program.rec_baseline[k] + sell.map_or(0.0, |b| b.quantity) - buy.map_or(0.0, |b| b.quantity);
        let md = realized.member_demand[k];
        let balance = realized.pv[k] - realized.load[k] - md;
        // Positive: the storage must discharge.
        let need = target - balance;
        let (mut charge, mut discharge) = (0.0, 0.0);
        if storage {
            if need > 0.0 {
                discharge = need
                    .min(config.battery_power_kwh_per_slot)
                    .min(soc * cap * config.eta_discharge);
            } else if need < 0.0 {
                let mut c = (-need)
                    .min(config.battery_power_kwh_per_slot)
                    .min((1.0 - soc) * cap / config.eta_charge);
                if config.renewable_only_charging {
                    c = c.min(realized.pv[k]);
                }
                charge = c;
            }
            soc = (soc + (config.eta_charge * charge - discharge / config.eta_discharge) / cap).clamp(0.0, 1.0);
        }
        let cf = realized.pv[k] - realized.load[k] + discharge - charge;
        let rec_exchange = balance + discharge - charge;
        let sell_error = sell.map_or(0.0, |b| (target - rec_exchange).clamp(0.0, b.quantity));
        let buy_error = buy.map_or(0.0, |b| (rec_exchange - target).clamp(0.0, b.quantity));
        let delivered = sell.map_or(0.0, |b| b.quantity - sell_error) - buy.map_or(0.0, |b| b.quantity - buy_error);
        let baseline = cf - delivered;
        hours.push(HourDispatch {
            target,
            charge,
            discharge,
            export: cf.max(0.0),
            import: (-cf).max(0.0),
            baseline_export: baseline.max(0.0),
            baseline_import: (-baseline).max(0.0),
            rec_exchange,
            member_demand: md,
            sell_error,
            buy_error,
            soc_end: soc,
        });
        socs.push(soc);
    }
    Ok(Dispatch { hours, soc: socs })
}

/// Prices the realized day is settled at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettlementPrices {
    pub export: Vec<f64>,
    pub import: Vec<f64>,
    pub penalty_sell: f64,
    pub penalty_buy: f64,
    pub incentive_shared: f64,
}

/// Cash-flow components of one hour, one day or a sum of days (€).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CashFlow {
    pub export_revenue: f64,
    pub import_cost: f64,
    /// Energy counted as shared (kWh).
    pub shared_energy: f64,
    pub shared_incentive: f64,
    pub msd_sell_revenue: f64,
    pub msd_buy_cost: f64,
    pub penalty_sell: f64,
    pub penalty_buy_refund: f64,
    pub net: f64,
}

impl CashFlow {
    pub const COLUMNS: [&'static str; 9] = [
        "export_revenue",
        "import_cost",
        "shared_energy",
        "shared_incentive",
        "msd_sell_revenue",
        "msd_buy_cost",
        "penalty_sell",
        "penalty_buy_refund",
        "net",
    ];

    pub fn values(&self) -> [f64; 9] {
        [
            self.export_revenue,
            self.import_cost,
            self.shared_energy,
            self.shared_incentive,
            self.msd_sell_revenue,
            self.msd_buy_cost,
            self.penalty_sell,
            self.penalty_buy_refund,
            self.net,
        ]
    }

    /// Net implied by the components.
    pub fn components_net(&self) -> f64 {
        self.export_revenue - self.import_cost + self.shared_incentive + self.msd_sell_revenue
            - self.msd_buy_cost
            - self.penalty_sell
            + self.penalty_buy_refund
    }

    pub fn accumulate(&mut self, other: &CashFlow) {
        self.export_revenue += other.export_revenue;
        self.import_cost += other.import_cost;
        self.shared_energy += other.shared_energy;
        self.shared_incentive += other.shared_incentive;
        self.msd_sell_revenue += other.msd_sell_revenue;
        self.msd_buy_cost += other.msd_buy_cost;
        self.penalty_sell += other.penalty_sell;
        self.penalty_buy_refund += other.penalty_buy_refund;
        self.net += other.net;
    }

    pub fn sum<'a>(flows: impl IntoIterator<Item = &'a CashFlow>) -> CashFlow {
        let mut total = CashFlow::default();
        for f in flows {
            total.accumulate(f);
        }
        total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CashFlowReport {
    pub hours: Vec<CashFlow>,
    pub total: CashFlow,
}

impl CashFlowReport {
    /// One row per hour followed by a `total` row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["hour"];
        header.extend(CashFlow::COLUMNS);
        w.write_record(&header)?;
        let rows = self
            .hours
            .iter()
            .enumerate()
            .map(|(k, f)| (k.to_string(), f))
            .chain(std::iter::once(("total".to_string(), &self.total)));
        for (label, f) in rows {
            let mut rec = vec![label];
            rec.extend(f.values().iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv is utf-8"))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Energy is paid on the baseline flows, service at the bid prices, errors
/// at the penalties and the incentive on `min(export, member_demand)`.
pub fn settle(
    dispatch: &Dispatch,
    program: &DayAheadProgram,
    acceptance: &Acceptance,
    prices: &SettlementPrices,
) -> Result<CashFlowReport> {
    let kk = dispatch.hours.len();
    if program.horizon() != kk || acceptance.horizon() != kk || prices.export.len() != kk || prices.import.len() != kk {
        return Err(invalid(format!("settlement inputs do not all span {kk} hours")));
    }
    let hours: Vec<CashFlow> = dispatch
        .hours
        .iter()
        .enumerate()
        .map(|(k, h)| {
            let shared = h.export.min(h.member_demand).max(0.0);
            let sell = acceptance.sell[k].then(|| program.bid(k, Side::Sell)).flatten();
            let buy = acceptance.buy[k].then(|| program.bid(k, Side::Buy)).flatten();
            let mut f = CashFlow {
                export_revenue: h.baseline_export * prices.export[k],
                import_cost: h.baseline_import * prices.import[k],
                shared_energy: shared,
                shared_incentive: prices.incentive_shared * shared,
                msd_sell_revenue: sell.map_or(0.0, |b| b.quantity * b.price),
                msd_buy_cost: buy.map_or(0.0, |b| b.quantity * b.price),
                penalty_sell: h.sell_error * prices.penalty_sell,
                penalty_buy_refund: h.buy_error * prices.penalty_buy,
                net: 0.0,
            };
            f.net = f.components_net();
            f
        })
        .collect();
    let total = CashFlow::sum(&hours);
    Ok(CashFlowReport { hours, total })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bid(side: Side, price: f64, quantity: f64) -> Option<Bid> {
        Some(Bid {
            hour: 0,
            side,
            price,
            quantity,
            submitted: true,
        })
    }

    fn one_hour(baseline: f64, b: Option<Bid>) -> DayAheadProgram {
        let mut p = DayAheadProgram::idle(vec![baseline], vec![0.0], 1);
        p.bids[0] = b;
        p
    }

    fn energies(pv: f64, load: f64, md: f64) -> RealizedEnergies {
        RealizedEnergies {
            pv: vec![pv],
            load: vec![load],
            member_demand: vec![md],
        }
    }

    fn prices(export: f64, import: f64) -> SettlementPrices {
        SettlementPrices {
            export: vec![export],
            import: vec![import],
            penalty_sell: 0.3,
            penalty_buy: 0.01,
            incentive_shared: 0.119,
        }
    }

    #[test]
    fn acceptance_rule() {
        let a = decide_acceptance(&[bid(Side::Sell, 80.0, 1.0)], &[100.0], &[0.0]).unwrap();
        assert!(a.sell[0]);
        let a = decide_acceptance(&[bid(Side::Sell, 100.0, 1.0)], &[100.0], &[0.0]).unwrap();
        assert!(a.sell[0]);
        let a = decide_acceptance(&[bid(Side::Buy, 10.0, 1.0)], &[0.0], &[20.0]).unwrap();
        assert!(!a.buy[0]);
        let a = decide_acceptance(&[None], &[1.0], &[0.0]).unwrap();
        assert_eq!(a, Acceptance::none(1));
    }

    #[test]
    fn idle_day_settles_to_zero() {
        let p = one_hour(0.0, None);
        let acc = Acceptance::none(1);
        let d = realtime_dispatch(&p, &acc, &energies(0.0, 0.0, 0.0), &RecConfig::default(), 0.5).unwrap();
        let r = settle(&d, &p, &acc, &prices(0.1, 0.3)).unwrap();
        assert_eq!(r.total, CashFlow::default());
    }

    #[test]
    fn shared_incentive_of_one_hour() {
        // 30 kWh exported against 50 kWh of member demand.
        let cfg = RecConfig {
            battery_capacity_kwh: 0.0,
            ..RecConfig::default()
        };
        let p = one_hour(-20.0, None);
        let acc = Acceptance::none(1);
        let d = realtime_dispatch(&p, &acc, &energies(30.0, 0.0, 50.0), &cfg, 0.5).unwrap();
        assert_eq!(d.hours[0].export, 30.0);
        let r = settle(&d, &p, &acc, &prices(0.0, 0.0)).unwrap();
        assert!((r.total.shared_incentive - 3.57).abs() < 1e-12);
    }

    #[test]
    fn accepted_sell_with_shortfall() {
        // Storage-free community that cannot move its exchange at all.
        let cfg = RecConfig {
            battery_capacity_kwh: 0.0,
            ..RecConfig::default()
        };
        let p = one_hour(8.0, bid(Side::Sell, 0.2, 10.0));
        let acc = decide_acceptance(&p.bids, &[0.25], &[0.0]).unwrap();
        let d = realtime_dispatch(&p, &acc, &energies(16.0, 0.0, 0.0), &cfg, 0.5).unwrap();
        assert_eq!(d.hours[0].sell_error, 2.0);
        let r = settle(&d, &p, &acc, &prices(0.0, 0.0)).unwrap();
        assert!((r.total.msd_sell_revenue - 2.0).abs() < 1e-12);
        assert!((r.total.penalty_sell - 0.6).abs() < 1e-12);
        assert!((r.total.net - 1.4).abs() < 1e-12);
    }

    #[test]
    fn storage_covers_pv_shortfall() {
        // Planned 40 kWh of PV, 10 kWh sold on top of a 40 kWh baseline,
        // 30 kWh realized: the storage discharges the missing 10 plus the service.
        let cfg = RecConfig::default();
        let p = one_hour(40.0, bid(Side::Sell, 0.2, 10.0));
        let acc = decide_acceptance(&p.bids, &[0.3], &[0.0]).unwrap();
        let d = realtime_dispatch(&p, &acc, &energies(30.0, 0.0, 0.0), &cfg, 0.5).unwrap();
        let h = d.hours[0];
        assert!((h.discharge - 20.0).abs() < 1e-12);
        assert_eq!(h.sell_error, 0.0);
        assert!((h.rec_exchange - 50.0).abs() < 1e-12);
        assert!((d.soc_final() - (0.5 - 20.0 / 0.95 / 250.0)).abs() < 1e-12);
    }

    #[test]
    fn delivered_purchase_keeps_the_scheduled_energy_revenue() {
        // 30 kWh declared, 10 kWh bought back and delivered by charging.
        let cfg = RecConfig::default();
        let p = one_hour(30.0, bid(Side::Buy, 0.05, 10.0));
        let acc = decide_acceptance(&p.bids, &[1.0], &[0.04]).unwrap();
        let d = realtime_dispatch(&p, &acc, &energies(30.0, 0.0, 0.0), &cfg, 0.5).unwrap();
        let h = d.hours[0];
        assert_eq!(h.charge, 10.0);
        assert_eq!(h.export, 20.0);
        assert_eq!(h.baseline_export, 30.0);
        let r = settle(&d, &p, &acc, &prices(0.1, 0.3)).unwrap();
        assert!((r.total.export_revenue - 3.0).abs() < 1e-12);
        assert!((r.total.msd_buy_cost - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_storage_leaves_full_shortfall() {
        let cfg = RecConfig::default();
        let p = one_hour(0.0, bid(Side::Sell, 0.2, 10.0));
        let acc = decide_acceptance(&p.bids, &[0.3], &[0.0]).unwrap();
        let d = realtime_dispatch(&p, &acc, &energies(0.0, 0.0, 0.0), &cfg, 0.0).unwrap();
        assert_eq!(d.hours[0].discharge, 0.0);
        assert_eq!(d.hours[0].sell_error, 10.0);
    }

    #[test]
    fn charging_is_limited_to_pv() {
        // Baseline asks to absorb 50 kWh, only 5 kWh of PV is available.
        let cfg = RecConfig::default();
        let p = one_hour(-50.0, None);
        let acc = Acceptance::none(1);
        let d = realtime_dispatch(&p, &acc, &energies(5.0, 0.0, 0.0), &cfg, 0.5).unwrap();
        assert_eq!(d.hours[0].charge, 5.0);
        let off = RecConfig {
            renewable_only_charging: false,
            ..cfg
        };
        let d = realtime_dispatch(&p, &acc, &energies(5.0, 0.0, 0.0), &off, 0.5).unwrap();
        assert_eq!(d.hours[0].charge, 55.0);
    }

    #[test]
    fn report_csv_has_total_row() {
        let r = CashFlowReport {
            hours: vec![CashFlow { net: 1.0, export_revenue: 1.0, ..CashFlow::default() }; 2],
            total: CashFlow { net: 2.0, export_revenue: 2.0, ..CashFlow::default() },
        };
        let text = r.to_csv_string().unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("hour,export_revenue,import_cost"));
        assert!(lines[3].starts_with("total,2,"));
    }
}
