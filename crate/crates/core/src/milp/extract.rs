use serde::Serialize;

use super::builder::DayAheadModel;
use super::instance::{Symbol, SymbolKey};
use super::solution::{audit, round_binaries, rounding_shift, Solution};
use crate::config::SharedEnergyCapMode;
use crate::error::{Error, Result};
use crate::types::{Bid, DayAheadProgram, Side};

/// Largest residual change rounding the binaries may cause.
pub const ROUNDING_TOLERANCE: f64 = 1e-5;

/// A solved day-ahead program and the planned scenario paths behind it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DayPlan {
    pub program: DayAheadProgram,
    /// Expected cash flow of the plan (€).
    pub objective: f64,
    pub mip_gap: f64,
    /// `planned_soc[s][l][k]`: SOC at the start of hour k, K+1 points per path.
    pub planned_soc: Vec<Vec<Vec<f64>>>,
    /// `shared[k][s][l]`: min(cap, export), recomputed from the solved export.
    pub shared: Vec<Vec<Vec<f64>>>,
    /// `sell_accepted[k][s]` as decided by the price choice.
    pub sell_accepted: Vec<Vec<bool>>,
    pub buy_accepted: Vec<Vec<bool>>,
    /// Solver values with binaries rounded, indexed by variable id.
    #[serde(skip)]
    pub values: Vec<f64>,
}

impl DayPlan {
    pub fn value(&self, model: &DayAheadModel, key: SymbolKey) -> f64 {
        self.values[model.var(key).0]
    }

    /// `[k][s][l]` values of a path-indexed symbol.
    pub fn path_values(&self, model: &DayAheadModel, symbol: Symbol) -> Vec<Vec<Vec<f64>>> {
        let d = &model.data;
        (0..d.horizon())
            .map(|k| {
                (0..d.n_prices())
                    .map(|s| {
                        (0..d.n_energies())
                            .map(|l| self.value(model, SymbolKey::path(symbol, k, s, l)))
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }
}

fn snap(x: f64, lo: f64, hi: f64) -> f64 {
    x.clamp(lo, hi)
}

/// Turns a solver result into a program, refusing points that rounding
/// would make materially infeasible.
pub fn extract_plan(model: &DayAheadModel, solution: &Solution) -> Result<DayPlan> {
    let inst = &model.instance;
    let d = &model.data;
    if !solution.status.has_values() {
        return Err(Error::Extraction(format!("solver status is {}", solution.status)));
    }
    if solution.values.len() != inst.variables.len() {
        return Err(Error::Extraction(format!(
            "solution has {} values for {} variables",
            solution.values.len(),
            inst.variables.len()
        )));
    }
    let (shift, row) = rounding_shift(inst, &solution.values);
    if shift > ROUNDING_TOLERANCE {
        return Err(Error::Extraction(format!(
            "rounding binaries moves row {} by {shift:.3e}",
            row.unwrap_or_default()
        )));
    }
    let values = round_binaries(inst, &solution.values);
    let get = |key: SymbolKey| values[inst.var(key).0];
    let on = |key: SymbolKey| get(key) > 0.5;

    let kk = d.horizon();
    let nm = d.n_prices();
    let nr = d.n_energies();
    let cfg = &d.config;

    let mut bids = vec![None; kk];
    let mut sell_choice = vec![vec![false; nm]; kk];
    let mut buy_choice = vec![vec![false; nm]; kk];
    for k in 0..kk {
        for j in 0..nm {
            sell_choice[k][j] = on(SymbolKey::candidate(Symbol::SellPriceChoice, k, j));
            buy_choice[k][j] = on(SymbolKey::candidate(Symbol::BuyPriceChoice, k, j));
        }
        let sell = on(SymbolKey::hour(Symbol::SellSubmitted, k));
        let buy = on(SymbolKey::hour(Symbol::BuySubmitted, k));
        if sell {
            let j = sell_choice[k].iter().position(|&x| x).expect("a sell price is chosen");
            bids[k] = Some(Bid {
                hour: k,
                side: Side::Sell,
                price: d.sell_price(k, j),
                quantity: snap(get(SymbolKey::hour(Symbol::SellQuantity, k)), 0.0, cfg.p_export_max),
                submitted: true,
            });
        } else if buy {
            let j = buy_choice[k].iter().position(|&x| x).expect("a buy price is chosen");
            bids[k] = Some(Bid {
                hour: k,
                side: Side::Buy,
                price: d.buy_price(k, j),
                quantity: snap(get(SymbolKey::hour(Symbol::BuyQuantity, k)), 0.0, cfg.p_import_max),
                submitted: true,
            });
        }
    }
    let program = DayAheadProgram {
        rec_baseline: (0..kk).map(|k| get(SymbolKey::hour(Symbol::RecBaseline, k))).collect(),
        bess_baseline: (0..kk).map(|k| get(SymbolKey::hour(Symbol::BessBaseline, k))).collect(),
        bids,
        sell_choice,
        buy_choice,
    };

    let planned_soc = (0..nm)
        .map(|s| {
            (0..nr)
                .map(|l| {
                    let mut soc = vec![d.soc_initial];
                    let mut cur = d.soc_initial;
                    for k in 0..kk {
                        if cfg.battery_capacity_kwh > 0.0 {
                            let pc = get(SymbolKey::path(Symbol::Charge, k, s, l));
                            let pd = get(SymbolKey::path(Symbol::Discharge, k, s, l));
                            cur += (cfg.eta_charge * pc - pd / cfg.eta_discharge) / cfg.battery_capacity_kwh;
                        }
                        soc.push(cur);
                    }
                    soc
                })
                .collect()
        })
        .collect();

    let shared = (0..kk)
        .map(|k| {
            (0..nm)
                .map(|s| {
                    (0..nr)
                        .map(|l| {
                            let pe = get(SymbolKey::path(Symbol::Export, k, s, l)).max(0.0);
                            let cap = match cfg.shared_energy_cap_mode {
                                SharedEnergyCapMode::MemberDemand => d.member_demand(k, l),
                                SharedEnergyCapMode::RecExchange => {
                                    get(SymbolKey::path(Symbol::RecExchange, k, s, l))
                                }
                            };
                            pe.min(cap).max(0.0)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let accepted = |sym| -> Vec<Vec<bool>> {
        (0..kk)
            .map(|k| (0..nm).map(|s| on(SymbolKey::price(sym, k, s))).collect())
            .collect()
    };
    let objective = inst.objective.evaluate(&values);
    Ok(DayPlan {
        program,
        objective,
        mip_gap: solution.mip_gap,
        planned_soc,
        shared,
        sell_accepted: accepted(Symbol::SellAccepted),
        buy_accepted: accepted(Symbol::BuyAccepted),
        values,
    })
}

/// Feasibility of a solution against every emitted row at tolerance `tol`.
pub fn check_solution(model: &DayAheadModel, solution: &Solution, tol: f64) -> Result<()> {
    let report = audit(&model.instance, &solution.values);
    if report.is_feasible(tol) {
        Ok(())
    } else {
        Err(Error::Extraction(format!("solution fails audit: {report}")))
    }
}
