//! Scenario-based day-ahead bidding program.
//!
//! Indices: hour `k`, price scenario `s`, energy scenario `l`, bid-price
//! candidate `j`. Candidate `j` of hour `k` is the clearing price of price
//! scenario `j` at that hour.

use serde::Serialize;

use super::instance::{MilpInstance, Sense, Symbol, SymbolKey, VarId, VarKind};
use crate::config::{validate_config, RecConfig, SharedEnergyCapMode, Violation};
use crate::error::{invalid, Error, Result};
use crate::types::{DayTrajectory, ScenarioSet, TrajectoryKind, ENERGY_CHANNELS, PRICE_CHANNELS};

use Symbol::*;

/// Day-ahead export and import tariffs.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownPrices {
    pub export: DayTrajectory,
    pub import: DayTrajectory,
}

impl KnownPrices {
    pub fn new(export: Vec<f64>, import: Vec<f64>, horizon: usize) -> Result<Self> {
        Ok(Self {
            export: DayTrajectory::new(TrajectoryKind::PriceExport, export, horizon)?,
            import: DayTrajectory::new(TrajectoryKind::PriceImport, import, horizon)?,
        })
    }
}

/// Constants resolved from the config and the scenario sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolvedParams {
    pub penalty_sell: f64,
    pub penalty_buy: f64,
    pub epsilon_max: f64,
    pub incentive_shared: f64,
}

/// Everything the encoders read.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelData {
    pub config: RecConfig,
    pub prices: ScenarioSet,
    pub energies: ScenarioSet,
    pub known: KnownPrices,
    pub soc_initial: f64,
    pub params: ResolvedParams,
    /// `sell_accept[k][s][j]`: a sell bid at candidate j is accepted in price scenario s.
    pub sell_accept: Vec<Vec<Vec<bool>>>,
    pub buy_accept: Vec<Vec<Vec<bool>>>,
}

impl ModelData {
    pub fn horizon(&self) -> usize {
        self.config.horizon_hours
    }

    pub fn n_prices(&self) -> usize {
        self.prices.len()
    }

    pub fn n_energies(&self) -> usize {
        self.energies.len()
    }

    pub fn sell_price(&self, k: usize, j: usize) -> f64 {
        self.prices.value(j, TrajectoryKind::PriceSellMax, k)
    }

    pub fn buy_price(&self, k: usize, j: usize) -> f64 {
        self.prices.value(j, TrajectoryKind::PriceBuyMin, k)
    }

    pub fn pv(&self, k: usize, l: usize) -> f64 {
        self.energies.value(l, TrajectoryKind::Pv, k)
    }

    pub fn load(&self, k: usize, l: usize) -> f64 {
        self.energies.value(l, TrajectoryKind::Load, k)
    }

    pub fn member_demand(&self, k: usize, l: usize) -> f64 {
        self.energies.value(l, TrajectoryKind::MemberDemand, k)
    }

    fn paths(&self) -> impl Iterator<Item = (usize, usize, usize)> {
        let (kk, nm, nr) = (self.horizon(), self.n_prices(), self.n_energies());
        (0..kk).flat_map(move |k| (0..nm).flat_map(move |s| (0..nr).map(move |l| (k, s, l))))
    }

    fn hour_prices(&self) -> impl Iterator<Item = (usize, usize)> {
        let (kk, nm) = (self.horizon(), self.n_prices());
        (0..kk).flat_map(move |k| (0..nm).map(move |s| (k, s)))
    }
}

/// A built program together with the data it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct DayAheadModel {
    pub instance: MilpInstance,
    pub data: ModelData,
}

impl DayAheadModel {
    pub fn var(&self, key: SymbolKey) -> VarId {
        self.instance.var(key)
    }

    /// Fixes every bid-submission binary to zero.
    pub fn forbid_bids(&mut self) {
        for k in 0..self.data.horizon() {
            for sym in [SellSubmitted, BuySubmitted] {
                let id = self.instance.var(SymbolKey::hour(sym, k));
                self.instance.fix(id, 0.0);
            }
        }
    }
}

/// Largest spread across energy scenarios of `pv - load - member_demand` at any hour.
pub fn default_epsilon(energies: &ScenarioSet) -> f64 {
    let mut eps = 0.0f64;
    for k in 0..energies.horizon() {
        let balance = (0..energies.len()).map(|l| {
            energies.value(l, TrajectoryKind::Pv, k)
                - energies.value(l, TrajectoryKind::Load, k)
                - energies.value(l, TrajectoryKind::MemberDemand, k)
        });
        let (lo, hi) = balance.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        eps = eps.max(hi - lo);
    }
    eps
}

/// Sell penalty 10% above the highest sell clearing price and buy refund
/// 10% below the lowest buy clearing price.
pub fn default_penalties(prices: &ScenarioSet) -> (f64, f64) {
    let all = |kind| {
        (0..prices.len()).flat_map(move |s| prices.series(s, kind).iter().copied())
    };
    let max_sell = all(TrajectoryKind::PriceSellMax).fold(0.0f64, f64::max);
    let min_buy = all(TrajectoryKind::PriceBuyMin).fold(f64::INFINITY, f64::min);
    let sell = if max_sell > 0.0 { 1.1 * max_sell } else { 0.01 };
    let buy = if min_buy > 0.0 { 0.9 * min_buy } else { min_buy - 0.01 };
    (sell, buy)
}

fn check_inputs(
    config: &RecConfig,
    prices: &ScenarioSet,
    energies: &ScenarioSet,
    known: &KnownPrices,
    soc_initial: f64,
) -> Result<()> {
    let kk = config.horizon_hours;
    if !prices.has_channels(&PRICE_CHANNELS) {
        return Err(invalid("price scenarios lack sell/buy clearing price channels"));
    }
    if !energies.has_channels(&ENERGY_CHANNELS) {
        return Err(invalid("energy scenarios lack pv/load/member_demand channels"));
    }
    for (what, len) in [
        ("price scenarios", prices.horizon()),
        ("energy scenarios", energies.horizon()),
        ("export prices", known.export.len()),
        ("import prices", known.import.len()),
    ] {
        if len != kk {
            return Err(invalid(format!("{what} span {len} hours, horizon is {kk}")));
        }
    }
    if !(0.0..=1.0).contains(&soc_initial) {
        return Err(invalid(format!("initial SOC {soc_initial} outside [0, 1]")));
    }
    Ok(())
}

fn resolve_params(config: &RecConfig, prices: &ScenarioSet, energies: &ScenarioSet) -> Result<ResolvedParams> {
    let (def_sell, def_buy) = default_penalties(prices);
    let params = ResolvedParams {
        penalty_sell: config.penalty_sell.unwrap_or(def_sell),
        penalty_buy: config.penalty_buy.unwrap_or(def_buy),
        epsilon_max: config.epsilon_max.unwrap_or_else(|| default_epsilon(energies)),
        incentive_shared: config.incentive_shared,
    };
    let mut bad = Vec::new();
    for s in 0..prices.len() {
        for k in 0..prices.horizon() {
            let sell = prices.value(s, TrajectoryKind::PriceSellMax, k);
            let buy = prices.value(s, TrajectoryKind::PriceBuyMin, k);
            if params.penalty_sell <= sell && bad.iter().all(|v: &Violation| v.field != "penalty_sell") {
                bad.push(Violation::new(
                    "penalty_sell",
                    format!(
                        "must exceed every sell clearing price, {} <= {sell} (hour {k}, scenario {s})",
                        params.penalty_sell
                    ),
                ));
            }
            if params.penalty_buy >= buy && bad.iter().all(|v: &Violation| v.field != "penalty_buy") {
                bad.push(Violation::new(
                    "penalty_buy",
                    format!(
                        "must be below every buy clearing price, {} >= {buy} (hour {k}, scenario {s})",
                        params.penalty_buy
                    ),
                ));
            }
        }
    }
    if bad.is_empty() {
        Ok(params)
    } else {
        Err(Error::InvalidConfig(bad))
    }
}

/// `A[k][s][j]` for both sides: a sell at candidate j clears in scenario s
/// when its price is at most that scenario's sell clearing price; a buy
/// clears when its price is at least the buy clearing price.
pub fn acceptance_matrices(prices: &ScenarioSet) -> (Vec<Vec<Vec<bool>>>, Vec<Vec<Vec<bool>>>) {
    let nm = prices.len();
    let kk = prices.horizon();
    let sell = |k: usize, s: usize| prices.value(s, TrajectoryKind::PriceSellMax, k);
    let buy = |k: usize, s: usize| prices.value(s, TrajectoryKind::PriceBuyMin, k);
    let a_sell = (0..kk)
        .map(|k| {
            (0..nm)
                .map(|s| (0..nm).map(|j| sell(k, j) <= sell(k, s)).collect())
                .collect()
        })
        .collect();
    let a_buy = (0..kk)
        .map(|k| {
            (0..nm)
                .map(|s| (0..nm).map(|j| buy(k, j) >= buy(k, s)).collect())
                .collect()
        })
        .collect();
    (a_sell, a_buy)
}

/// Builds the full day-ahead program.
pub fn build_instance(
    config: &RecConfig,
    prices: &ScenarioSet,
    energies: &ScenarioSet,
    known: &KnownPrices,
    soc_initial: f64,
) -> Result<DayAheadModel> {
    let violations = validate_config(config);
    if !violations.is_empty() {
        return Err(Error::InvalidConfig(violations));
    }
    check_inputs(config, prices, energies, known, soc_initial)?;
    let params = resolve_params(config, prices, energies)?;
    let (sell_accept, buy_accept) = acceptance_matrices(prices);
    let data = ModelData {
        config: config.clone(),
        prices: prices.clone(),
        energies: energies.clone(),
        known: known.clone(),
        soc_initial,
        params,
        sell_accept,
        buy_accept,
    };

    let mut m = MilpInstance::new();
    declare_variables(&mut m, &data);
    encode_bidding(&mut m, &data);
    encode_acceptance(&mut m, &data);
    encode_energy_balance(&mut m, &data);
    encode_relaxation_logic(&mut m, &data);
    encode_storage(&mut m, &data);
    encode_shared_energy(&mut m, &data);
    encode_objective(&mut m, &data);
    Ok(DayAheadModel { instance: m, data })
}

const FREE: (f64, f64) = (f64::NEG_INFINITY, f64::INFINITY);

fn declare_variables(m: &mut MilpInstance, d: &ModelData) {
    let c = &d.config;
    let (pe, pi, pb, eps) = (
        c.p_export_max,
        c.p_import_max,
        c.battery_power_kwh_per_slot,
        d.params.epsilon_max,
    );
    let (kk, nm) = (d.horizon(), d.n_prices());

    let hour: [(Symbol, VarKind, (f64, f64)); 4] = [
        (SellQuantity, VarKind::Continuous, (0.0, pe)),
        (BuyQuantity, VarKind::Continuous, (0.0, pi)),
        (SellSubmitted, VarKind::Binary, (0.0, 1.0)),
        (BuySubmitted, VarKind::Binary, (0.0, 1.0)),
    ];
    for (sym, kind, (lo, hi)) in hour {
        for k in 0..kk {
            m.add_symbol(SymbolKey::hour(sym, k), kind, lo, hi);
        }
    }
    for sym in [SellPriceChoice, BuyPriceChoice] {
        for k in 0..kk {
            for j in 0..nm {
                m.add_symbol(SymbolKey::candidate(sym, k, j), VarKind::Binary, 0.0, 1.0);
            }
        }
    }
    let per_price: [(Symbol, VarKind, (f64, f64)); 6] = [
        (SellService, VarKind::Continuous, (0.0, pe)),
        (BuyService, VarKind::Continuous, (0.0, pi)),
        (SellAccepted, VarKind::Binary, (0.0, 1.0)),
        (BuyAccepted, VarKind::Binary, (0.0, 1.0)),
        (SellActive, VarKind::Binary, (0.0, 1.0)),
        (BuyActive, VarKind::Binary, (0.0, 1.0)),
    ];
    for (sym, kind, (lo, hi)) in per_price {
        for (k, s) in d.hour_prices() {
            m.add_symbol(SymbolKey::price(sym, k, s), kind, lo, hi);
        }
    }
    let per_path: [(Symbol, VarKind, (f64, f64)); 17] = [
        (Export, VarKind::Continuous, (0.0, pe)),
        (Import, VarKind::Continuous, (0.0, pi)),
        (ExportOn, VarKind::Binary, (0.0, 1.0)),
        (BaselineExport, VarKind::Continuous, (0.0, pe)),
        (BaselineImport, VarKind::Continuous, (0.0, pi)),
        (BaselineExportOn, VarKind::Binary, (0.0, 1.0)),
        (RecExchange, VarKind::Continuous, FREE),
        (SellError, VarKind::Continuous, (0.0, pe)),
        (BuyError, VarKind::Continuous, (0.0, pi)),
        (BaselineUp, VarKind::Continuous, (0.0, eps)),
        (BaselineDown, VarKind::Continuous, (0.0, eps)),
        (ReserveUp, VarKind::Continuous, (0.0, eps)),
        (ReserveDown, VarKind::Continuous, (0.0, eps)),
        (Charge, VarKind::Continuous, (0.0, pb)),
        (Discharge, VarKind::Continuous, (0.0, pb)),
        (ChargeOn, VarKind::Binary, (0.0, 1.0)),
        (Shared, VarKind::Continuous, (0.0, pe)),
    ];
    for (sym, kind, (lo, hi)) in per_path {
        for (k, s, l) in d.paths() {
            m.add_symbol(SymbolKey::path(sym, k, s, l), kind, lo, hi);
        }
    }
    for (sym, (lo, hi)) in [(RecBaseline, FREE), (BessBaseline, FREE)] {
        for k in 0..kk {
            m.add_symbol(SymbolKey::hour(sym, k), VarKind::Continuous, lo, hi);
        }
    }
    for (sym, hi) in [(SellRevenueProduct, pe), (BuyRevenueProduct, pi)] {
        for k in 0..kk {
            for j in 0..nm {
                m.add_symbol(SymbolKey::candidate(sym, k, j), VarKind::Continuous, 0.0, hi);
            }
        }
    }
}

fn h(m: &MilpInstance, sym: Symbol, k: usize) -> VarId {
    m.var(SymbolKey::hour(sym, k))
}

fn c(m: &MilpInstance, sym: Symbol, k: usize, j: usize) -> VarId {
    m.var(SymbolKey::candidate(sym, k, j))
}

fn ps(m: &MilpInstance, sym: Symbol, k: usize, s: usize) -> VarId {
    m.var(SymbolKey::price(sym, k, s))
}

fn pl(m: &MilpInstance, sym: Symbol, k: usize, s: usize, l: usize) -> VarId {
    m.var(SymbolKey::path(sym, k, s, l))
}

/// `y = x * bin` for continuous `x` in [0, big_m] and binary `bin`.
fn product_rows(m: &mut MilpInstance, name: &str, y: VarId, x: VarId, bin: VarId, big_m: f64) {
    m.add_constraint(format!("{name}_qty"), vec![(y, 1.0), (x, -1.0)], Sense::Le, 0.0);
    m.add_constraint(format!("{name}_on"), vec![(y, 1.0), (bin, -big_m)], Sense::Le, 0.0);
    m.add_constraint(
        format!("{name}_off"),
        vec![(y, 1.0), (x, -1.0), (bin, -big_m)],
        Sense::Ge,
        -big_m,
    );
}

/// Quantity limits, one bid per hour and the bid-price choice.
pub fn encode_bidding(m: &mut MilpInstance, d: &ModelData) {
    let c_ = &d.config;
    for k in 0..d.horizon() {
        let (q_s, q_b) = (h(m, SellQuantity, k), h(m, BuyQuantity, k));
        let (b_s, b_b) = (h(m, SellSubmitted, k), h(m, BuySubmitted, k));
        m.add_constraint(format!("bid_cap_sell_k{k}"), vec![(q_s, 1.0), (b_s, -c_.p_export_max)], Sense::Le, 0.0);
        m.add_constraint(format!("bid_cap_buy_k{k}"), vec![(q_b, 1.0), (b_b, -c_.p_import_max)], Sense::Le, 0.0);
        m.add_constraint(format!("one_bid_k{k}"), vec![(b_s, 1.0), (b_b, 1.0)], Sense::Le, 1.0);
        for (sym, bin, side) in [(SellPriceChoice, b_s, "sell"), (BuyPriceChoice, b_b, "buy")] {
            let mut terms: Vec<(VarId, f64)> = (0..d.n_prices()).map(|j| (c(m, sym, k, j), 1.0)).collect();
            terms.push((bin, -1.0));
            m.add_constraint(format!("price_pick_{side}_k{k}"), terms, Sense::Eq, 0.0);
        }
    }
}

/// Acceptance flags from the price choice and the realised service.
pub fn encode_acceptance(m: &mut MilpInstance, d: &ModelData) {
    let c_ = &d.config;
    for (k, s) in d.hour_prices() {
        for (acc, choice, a, side) in [
            (SellAccepted, SellPriceChoice, &d.sell_accept, "sell"),
            (BuyAccepted, BuyPriceChoice, &d.buy_accept, "buy"),
        ] {
            let mut terms = vec![(ps(m, acc, k, s), 1.0)];
            for j in 0..d.n_prices() {
                if a[k][s][j] {
                    terms.push((c(m, choice, k, j), -1.0));
                }
            }
            m.add_constraint(format!("accept_{side}_k{k}_s{s}"), terms, Sense::Eq, 0.0);
        }
        let (g, q, dl) = (ps(m, SellService, k, s), h(m, SellQuantity, k), ps(m, SellAccepted, k, s));
        product_rows(m, &format!("service_sell_k{k}_s{s}"), g, q, dl, c_.p_export_max);
        let (g, q, dl) = (ps(m, BuyService, k, s), h(m, BuyQuantity, k), ps(m, BuyAccepted, k, s));
        product_rows(m, &format!("service_buy_k{k}_s{s}"), g, q, dl, c_.p_import_max);
    }
}

/// Common-facility and community balances, service errors and the
/// facility baseline.
pub fn encode_energy_balance(m: &mut MilpInstance, d: &ModelData) {
    let c_ = &d.config;
    for (k, s, l) in d.paths() {
        let t = format!("k{k}_s{s}_l{l}");
        let pe = pl(m, Export, k, s, l);
        let pi = pl(m, Import, k, s, l);
        let on = pl(m, ExportOn, k, s, l);
        let pc = pl(m, Charge, k, s, l);
        let pd = pl(m, Discharge, k, s, l);
        let prec = pl(m, RecExchange, k, s, l);
        let (e_s, e_b) = (pl(m, SellError, k, s, l), pl(m, BuyError, k, s, l));
        let (g_s, g_b) = (ps(m, SellService, k, s), ps(m, BuyService, k, s));
        let (w_up, w_dn) = (pl(m, BaselineUp, k, s, l), pl(m, BaselineDown, k, s, l));
        let (hpe, hpi, hon) = (
            pl(m, BaselineExport, k, s, l),
            pl(m, BaselineImport, k, s, l),
            pl(m, BaselineExportOn, k, s, l),
        );
        let hrec = h(m, RecBaseline, k);

        m.add_constraint(
            format!("cf_balance_{t}"),
            vec![(pe, 1.0), (pi, -1.0), (pd, -1.0), (pc, 1.0)],
            Sense::Eq,
            d.pv(k, l) - d.load(k, l),
        );
        m.add_constraint(format!("export_on_{t}"), vec![(pe, 1.0), (on, -c_.p_export_max)], Sense::Le, 0.0);
        m.add_constraint(format!("import_off_{t}"), vec![(pi, 1.0), (on, c_.p_import_max)], Sense::Le, c_.p_import_max);
        m.add_constraint(
            format!("rec_identity_{t}"),
            vec![(prec, 1.0), (pe, -1.0), (pi, 1.0)],
            Sense::Eq,
            -d.member_demand(k, l),
        );
        m.add_constraint(
            format!("rec_service_{t}"),
            vec![
                (prec, 1.0),
                (hrec, -1.0),
                (w_up, -1.0),
                (w_dn, 1.0),
                (g_s, -1.0),
                (e_s, 1.0),
                (g_b, 1.0),
                (e_b, -1.0),
            ],
            Sense::Eq,
            0.0,
        );
        m.add_constraint(format!("error_sell_{t}"), vec![(e_s, 1.0), (g_s, -1.0)], Sense::Le, 0.0);
        m.add_constraint(format!("error_buy_{t}"), vec![(e_b, 1.0), (g_b, -1.0)], Sense::Le, 0.0);
        m.add_constraint(
            format!("cf_baseline_{t}"),
            vec![
                (pe, 1.0),
                (pi, -1.0),
                (hpe, -1.0),
                (hpi, 1.0),
                (g_s, -1.0),
                (e_s, 1.0),
                (g_b, 1.0),
                (e_b, -1.0),
            ],
            Sense::Eq,
            0.0,
        );
        m.add_constraint(format!("base_export_on_{t}"), vec![(hpe, 1.0), (hon, -c_.p_export_max)], Sense::Le, 0.0);
        m.add_constraint(
            format!("base_import_off_{t}"),
            vec![(hpi, 1.0), (hon, c_.p_import_max)],
            Sense::Le,
            c_.p_import_max,
        );
    }
}

/// `u = accepted AND submitted`, and the gating of the baseline and reserve
/// relaxations.
pub fn encode_relaxation_logic(m: &mut MilpInstance, d: &ModelData) {
    let eps = d.params.epsilon_max;
    for (k, s) in d.hour_prices() {
        for (u, acc, bid, side) in [
            (SellActive, SellAccepted, SellSubmitted, "sell"),
            (BuyActive, BuyAccepted, BuySubmitted, "buy"),
        ] {
            let (u, acc, bid) = (ps(m, u, k, s), ps(m, acc, k, s), h(m, bid, k));
            let t = format!("{side}_k{k}_s{s}");
            m.add_constraint(format!("active_both_{t}"), vec![(u, 1.0), (acc, -1.0), (bid, -1.0)], Sense::Ge, -1.0);
            m.add_constraint(format!("active_acc_{t}"), vec![(u, 1.0), (acc, -1.0)], Sense::Le, 0.0);
            m.add_constraint(format!("active_bid_{t}"), vec![(u, 1.0), (bid, -1.0)], Sense::Le, 0.0);
        }
    }
    for (k, s, l) in d.paths() {
        let t = format!("k{k}_s{s}_l{l}");
        let (u_s, u_b) = (ps(m, SellActive, k, s), ps(m, BuyActive, k, s));
        let w_up = pl(m, BaselineUp, k, s, l);
        let w_dn = pl(m, BaselineDown, k, s, l);
        let v_up = pl(m, ReserveUp, k, s, l);
        let v_dn = pl(m, ReserveDown, k, s, l);
        m.add_constraint(format!("relax_w_up_{t}"), vec![(w_up, 1.0), (u_b, eps)], Sense::Le, eps);
        m.add_constraint(format!("relax_w_dn_{t}"), vec![(w_dn, 1.0), (u_s, eps)], Sense::Le, eps);
        m.add_constraint(format!("relax_v_up_{t}"), vec![(v_up, 1.0), (u_s, -eps)], Sense::Le, 0.0);
        m.add_constraint(format!("relax_v_dn_{t}"), vec![(v_dn, 1.0), (u_b, -eps)], Sense::Le, 0.0);
    }
}

/// Storage service coupling, charge/discharge exclusivity, SOC window and
/// renewable-only charging.
///
/// SOC rows are written in kWh (multiplied by the capacity), so a storage of
/// zero capacity pins the net charge to zero.
pub fn encode_storage(m: &mut MilpInstance, d: &ModelData) {
    let c_ = &d.config;
    let cap = c_.battery_capacity_kwh;
    let pb = c_.battery_power_kwh_per_slot;
    let s0 = d.soc_initial;
    let kk = d.horizon();
    for (k, s, l) in d.paths() {
        let t = format!("k{k}_s{s}_l{l}");
        let pc = pl(m, Charge, k, s, l);
        let pd = pl(m, Discharge, k, s, l);
        let on = pl(m, ChargeOn, k, s, l);
        m.add_constraint(
            format!("bess_service_{t}"),
            vec![
                (pd, 1.0),
                (pc, -1.0),
                (h(m, BessBaseline, k), -1.0),
                (ps(m, SellService, k, s), -1.0),
                (ps(m, BuyService, k, s), 1.0),
                (pl(m, ReserveUp, k, s, l), -1.0),
                (pl(m, ReserveDown, k, s, l), 1.0),
            ],
            Sense::Eq,
            0.0,
        );
        m.add_constraint(format!("charge_on_{t}"), vec![(pc, 1.0), (on, -pb)], Sense::Le, 0.0);
        m.add_constraint(format!("discharge_off_{t}"), vec![(pd, 1.0), (on, pb)], Sense::Le, pb);
        if c_.renewable_only_charging {
            m.add_constraint(format!("green_charge_{t}"), vec![(pc, 1.0)], Sense::Le, d.pv(k, l));
        }
    }
    for s in 0..d.n_prices() {
        for l in 0..d.n_energies() {
            let mut terms = Vec::with_capacity(2 * kk);
            for k in 0..kk {
                terms.push((pl(m, Charge, k, s, l), c_.eta_charge));
                terms.push((pl(m, Discharge, k, s, l), -1.0 / c_.eta_discharge));
                let t = format!("k{k}_s{s}_l{l}");
                m.add_constraint(format!("soc_max_{t}"), terms.clone(), Sense::Le, (1.0 - s0) * cap);
                m.add_constraint(format!("soc_min_{t}"), terms.clone(), Sense::Ge, -s0 * cap);
            }
            let t = format!("s{s}_l{l}");
            m.add_constraint(format!("soc_end_min_{t}"), terms.clone(), Sense::Ge, (c_.soc_final_min - s0) * cap);
            m.add_constraint(format!("soc_end_max_{t}"), terms, Sense::Le, (c_.soc_final_max - s0) * cap);
        }
    }
}

/// Shared energy bounded by export and by the configured cap.
pub fn encode_shared_energy(m: &mut MilpInstance, d: &ModelData) {
    for (k, s, l) in d.paths() {
        let t = format!("k{k}_s{s}_l{l}");
        let sh = pl(m, Shared, k, s, l);
        let pe = pl(m, Export, k, s, l);
        m.add_constraint(format!("shared_export_{t}"), vec![(sh, 1.0), (pe, -1.0)], Sense::Le, 0.0);
        match d.config.shared_energy_cap_mode {
            SharedEnergyCapMode::MemberDemand => {
                m.add_constraint(format!("shared_cap_{t}"), vec![(sh, 1.0)], Sense::Le, d.member_demand(k, l));
            }
            SharedEnergyCapMode::RecExchange => {
                let prec = pl(m, RecExchange, k, s, l);
                m.add_constraint(format!("shared_cap_{t}"), vec![(sh, 1.0), (prec, -1.0)], Sense::Le, 0.0);
            }
        }
    }
}

/// Expected cash flow. Pay-as-bid revenue is written through the products
/// `z_j = d_j * P`, so that `Gamma * price = sum_j A_j * candidate_j * z_j`.
pub fn encode_objective(m: &mut MilpInstance, d: &ModelData) {
    let c_ = &d.config;
    let p = &d.params;
    let pm = d.prices.probabilities();
    let pr = d.energies.probabilities();
    let mut terms: Vec<(VarId, f64)> = Vec::new();

    for (k, s, l) in d.paths() {
        let w = pm[s] * pr[l];
        let ce = d.known.export.values()[k];
        let ci = d.known.import.values()[k];
        terms.push((pl(m, BaselineExport, k, s, l), w * ce));
        terms.push((pl(m, BaselineImport, k, s, l), -w * ci));
        terms.push((pl(m, Shared, k, s, l), w * p.incentive_shared));
        terms.push((pl(m, SellError, k, s, l), -w * p.penalty_sell));
        terms.push((pl(m, BuyError, k, s, l), w * p.penalty_buy));
    }

    for k in 0..d.horizon() {
        for j in 0..d.n_prices() {
            let (mut sell, mut buy) = (0.0, 0.0);
            for s in 0..d.n_prices() {
                for l in 0..d.n_energies() {
                    let w = pm[s] * pr[l];
                    if d.sell_accept[k][s][j] {
                        sell += w * d.sell_price(k, j);
                    }
                    if d.buy_accept[k][s][j] {
                        buy += w * d.buy_price(k, j);
                    }
                }
            }
            terms.push((c(m, SellRevenueProduct, k, j), sell));
            terms.push((c(m, BuyRevenueProduct, k, j), -buy));
            let t = format!("k{k}_j{j}");
            let (z, q, dj) = (c(m, SellRevenueProduct, k, j), h(m, SellQuantity, k), c(m, SellPriceChoice, k, j));
            product_rows(m, &format!("revenue_sell_{t}"), z, q, dj, c_.p_export_max);
            let (z, q, dj) = (c(m, BuyRevenueProduct, k, j), h(m, BuyQuantity, k), c(m, BuyPriceChoice, k, j));
            product_rows(m, &format!("revenue_buy_{t}"), z, q, dj, c_.p_import_max);
        }
        // Identities of the integral model that the product rows alone do
        // not impose on the relaxation: the quantity is split over the
        // candidates, and the service of scenario s is the share accepted there.
        for (zs, q, g, a, side) in [
            (SellRevenueProduct, SellQuantity, SellService, &d.sell_accept, "sell"),
            (BuyRevenueProduct, BuyQuantity, BuyService, &d.buy_accept, "buy"),
        ] {
            let mut terms: Vec<(VarId, f64)> = (0..d.n_prices()).map(|j| (c(m, zs, k, j), 1.0)).collect();
            terms.push((h(m, q, k), -1.0));
            m.add_constraint(format!("revenue_split_{side}_k{k}"), terms, Sense::Eq, 0.0);
            for s in 0..d.n_prices() {
                let mut terms = vec![(ps(m, g, k, s), 1.0)];
                terms.extend((0..d.n_prices()).filter(|&j| a[k][s][j]).map(|j| (c(m, zs, k, j), -1.0)));
                m.add_constraint(format!("service_link_{side}_k{k}_s{s}"), terms, Sense::Eq, 0.0);
            }
        }
    }

    terms.retain(|&(_, coef)| coef != 0.0);
    m.objective.terms = terms;
    m.objective.constant = 0.0;
}
