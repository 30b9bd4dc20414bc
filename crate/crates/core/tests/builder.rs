mod common;

use std::collections::BTreeMap;

use common::random_inputs;
use recbid::milp::{
    acceptance_matrices, audit, build_instance, extract_plan, KnownPrices, Sense, Symbol, SymbolKey,
};
use recbid::solver::{emit_exchange, reference_solve};
use recbid::{Error, RecConfig, ScenarioSet, ENERGY_CHANNELS, PRICE_CHANNELS};

fn one_hour(pv: f64, load: f64, md: f64, sell: f64, buy: f64, export: f64, import: f64) -> common::Inputs {
    let config = RecConfig {
        horizon_hours: 1,
        ..RecConfig::default()
    };
    common::Inputs {
        config,
        prices: ScenarioSet::uniform(PRICE_CHANNELS.to_vec(), vec![vec![vec![sell], vec![buy]]]).unwrap(),
        energies: ScenarioSet::uniform(ENERGY_CHANNELS.to_vec(), vec![vec![vec![pv], vec![load], vec![md]]])
            .unwrap(),
        known: KnownPrices::new(vec![export], vec![import], 1).unwrap(),
    }
}

/// Row family of a constraint name: the name up to its index suffix.
fn family(name: &str) -> String {
    let cut = name.find("_k").unwrap_or_else(|| name.find("_s").unwrap_or(name.len()));
    name[..cut].to_string()
}

#[test]
fn single_hour_counts_match_hand_list() {
    let model = one_hour(40.0, 5.0, 10.0, 0.3, 0.05, 0.1, 0.25).build();
    let inst = &model.instance;
    // P+ P- b+ b-, d+ d-, six price-indexed, seventeen path-indexed,
    // two baselines and two revenue products.
    assert_eq!(inst.variables.len(), 4 + 2 + 6 + 17 + 2 + 2);
    // b+ b- d+ d- delta+ delta- u+ u- and three exclusivity flags.
    assert_eq!(inst.binary_count(), 11);

    let mut got: BTreeMap<String, usize> = BTreeMap::new();
    for c in &inst.constraints {
        *got.entry(family(&c.name)).or_default() += 1;
    }
    let single = [
        "bid_cap_sell", "bid_cap_buy", "one_bid", "price_pick_sell", "price_pick_buy",
        "accept_sell", "accept_buy",
        "cf_balance", "export_on", "import_off", "rec_identity", "rec_service",
        "error_sell", "error_buy", "cf_baseline", "base_export_on", "base_import_off",
        "active_both_sell", "active_acc_sell", "active_bid_sell",
        "active_both_buy", "active_acc_buy", "active_bid_buy",
        "relax_w_up", "relax_w_dn", "relax_v_up", "relax_v_dn",
        "bess_service", "charge_on", "discharge_off", "green_charge", "soc_max", "soc_min",
        "soc_end_min", "soc_end_max",
        "shared_export", "shared_cap",
        "revenue_split_sell", "revenue_split_buy", "service_link_sell", "service_link_buy",
    ];
    // Products carry three rows each: quantity, on and off.
    let triple = ["service_sell", "service_buy", "revenue_sell", "revenue_buy"];
    let expected: BTreeMap<String, usize> = single
        .iter()
        .map(|n| (n.to_string(), 1))
        .chain(triple.iter().map(|n| (n.to_string(), 3)))
        .collect();
    assert_eq!(got, expected);
    assert_eq!(inst.constraints.len(), 53);
}

#[test]
fn counts_follow_the_index_sets() {
    for (k, nm, nr) in [(1, 1, 1), (3, 2, 2), (2, 3, 1), (4, 1, 3)] {
        let model = random_inputs(7, k, nm, nr).build();
        let inst = &model.instance;
        assert_eq!(inst.variables.len(), k * (6 + 10 * nm + 17 * nm * nr));
        assert_eq!(inst.binary_count(), k * (2 + 6 * nm + 3 * nm * nr));
        assert_eq!(inst.constraints.len(), k * (7 + 22 * nm + 22 * nm * nr) + 2 * nm * nr);
    }
}

#[test]
fn paper_scale_copies_and_one_bid_rows() {
    let model = random_inputs(3, 24, 10, 10).build();
    let inst = &model.instance;
    for sym in [Symbol::Export, Symbol::Charge, Symbol::SellError, Symbol::Shared] {
        let n = inst.keys().filter(|(_, key)| key.symbol == sym).count();
        assert_eq!(n, 24 * 10 * 10, "{sym:?}");
    }
    assert_eq!(inst.constraints_with_prefix("one_bid_").count(), 24);
    for c in inst.constraints_with_prefix("one_bid_") {
        assert_eq!(c.sense, Sense::Le);
        assert_eq!(c.rhs, 1.0);
        assert_eq!(c.terms.len(), 2);
    }
}

#[test]
fn builds_are_textually_identical() {
    let a = random_inputs(11, 3, 2, 2).build();
    let b = random_inputs(11, 3, 2, 2).build();
    assert_eq!(emit_exchange(&a.instance).unwrap(), emit_exchange(&b.instance).unwrap());
    assert_eq!(a.instance.symbol_sidecar(), b.instance.symbol_sidecar());
}

#[test]
fn invalid_config_is_refused_with_violations() {
    let mut inputs = random_inputs(1, 2, 1, 1);
    inputs.config.eta_charge = 0.0;
    inputs.config.soc_final_min = 0.9;
    match build_instance(&inputs.config, &inputs.prices, &inputs.energies, &inputs.known, 0.5) {
        Err(Error::InvalidConfig(v)) => {
            let fields: Vec<&str> = v.iter().map(|x| x.field.as_str()).collect();
            assert_eq!(fields, ["eta_charge", "soc_final_min"]);
        }
        other => panic!("expected a refusal, got {other:?}"),
    }
    inputs.config = RecConfig {
        horizon_hours: 2,
        penalty_sell: Some(0.05),
        ..RecConfig::default()
    };
    assert!(matches!(
        build_instance(&inputs.config, &inputs.prices, &inputs.energies, &inputs.known, 0.5),
        Err(Error::InvalidConfig(_))
    ));
}

#[test]
fn acceptance_matrix_of_two_prices() {
    // Sell clearing prices 50 and 100: a bid at 100 clears only in scenario 2.
    let prices = ScenarioSet::uniform(
        PRICE_CHANNELS.to_vec(),
        vec![vec![vec![50.0], vec![1.0]], vec![vec![100.0], vec![2.0]]],
    )
    .unwrap();
    let (sell, buy) = acceptance_matrices(&prices);
    let j = 1;
    assert_eq!((sell[0][0][j], sell[0][1][j]), (false, true));
    // The lowest price clears everywhere.
    assert_eq!((sell[0][0][0], sell[0][1][0]), (true, true));
    // Buy side: a bid at 2 clears in both, a bid at 1 only where the minimum is 1.
    assert_eq!((buy[0][0][1], buy[0][1][1]), (true, true));
    assert_eq!((buy[0][0][0], buy[0][1][0]), (true, false));
}

fn soc_feasible(charge: f64) -> bool {
    let mut inputs = one_hour(60.0, 0.0, 0.0, 0.3, 0.05, 0.1, 0.25);
    inputs.config.soc_final_min = 0.0;
    inputs.config.soc_final_max = 0.7;
    let mut model = inputs.build();
    let pc = model.var(SymbolKey::path(Symbol::Charge, 0, 0, 0));
    model.instance.fix(pc, charge);
    reference_solve(&model.instance, 24).unwrap().status.has_values()
}

#[test]
fn soc_window_boundary_in_one_slot() {
    // 0.5 + 0.95 * x / 250 = 0.7
    let boundary: f64 = 0.2 * 250.0 / 0.95;
    assert!((boundary - 52.631_578_947_368_42).abs() < 1e-12);
    assert!(soc_feasible(boundary));
    assert!(!soc_feasible(0.201 * 250.0 / 0.95));
}

#[test]
fn shared_energy_objective_weight() {
    let model = one_hour(40.0, 0.0, 10.0, 0.3, 0.05, 0.0, 0.0).build();
    let mut x = vec![0.0; model.instance.variables.len()];
    x[model.var(SymbolKey::path(Symbol::Shared, 0, 0, 0)).0] = 10.0;
    assert!((model.instance.objective.evaluate(&x) - 1.19).abs() < 1e-12);
}

#[test]
fn objective_at_a_hand_built_point() {
    // 40 kWh PV, 10 kWh member demand, a 5 kWh sell bid at 0.3 that clears,
    // 1 kWh of it undelivered.
    let model = one_hour(40.0, 0.0, 10.0, 0.3, 0.05, 0.1, 0.25).build();
    let inst = &model.instance;
    let mut x = vec![0.0; inst.variables.len()];
    let mut set = |key: SymbolKey, v: f64| x[inst.var(key).0] = v;
    use Symbol::*;
    set(SymbolKey::hour(SellQuantity, 0), 5.0);
    set(SymbolKey::hour(SellSubmitted, 0), 1.0);
    set(SymbolKey::candidate(SellPriceChoice, 0, 0), 1.0);
    set(SymbolKey::candidate(SellRevenueProduct, 0, 0), 5.0);
    set(SymbolKey::price(SellAccepted, 0, 0), 1.0);
    set(SymbolKey::price(SellActive, 0, 0), 1.0);
    set(SymbolKey::price(SellService, 0, 0), 5.0);
    let p = |s| SymbolKey::path(s, 0, 0, 0);
    set(p(Export), 40.0);
    set(p(ExportOn), 1.0);
    set(p(RecExchange), 30.0);
    set(p(SellError), 1.0);
    set(p(BaselineExport), 36.0);
    set(p(BaselineExportOn), 1.0);
    set(p(Shared), 10.0);
    set(SymbolKey::hour(RecBaseline, 0), 26.0);
    set(SymbolKey::hour(BessBaseline, 0), -5.0);
    let report = audit(inst, &x);
    assert!(report.is_feasible(1e-12), "{report}");
    // 36 * 0.1 + 10 * 0.119 + 5 * 0.3 - 1 * (1.1 * 0.3)
    let hand = 3.6 + 1.19 + 1.5 - 0.33;
    assert!((inst.objective.evaluate(&x) - hand).abs() < 1e-12);
}

#[test]
fn idle_point_has_zero_objective() {
    let model = one_hour(0.0, 0.0, 0.0, 0.3, 0.05, 0.1, 0.25).build();
    let x = vec![0.0; model.instance.variables.len()];
    assert_eq!(model.instance.objective.evaluate(&x), 0.0);
}

#[test]
fn zero_capacity_storage_stays_idle() {
    let mut inputs = random_inputs(5, 3, 1, 2);
    inputs.config.battery_capacity_kwh = 0.0;
    let model = inputs.build();
    let sol = reference_solve(&model.instance, 64).unwrap();
    assert!(sol.status.has_values());
    for (id, key) in model.instance.keys() {
        if matches!(key.symbol, Symbol::Charge | Symbol::Discharge) {
            assert!(sol.values[id.0].abs() < 1e-9, "{}", key.name());
        }
    }
}

#[test]
fn shared_energy_is_reported_as_the_minimum_without_incentive() {
    let mut inputs = one_hour(40.0, 0.0, 10.0, 0.3, 0.05, 0.1, 0.25);
    inputs.config.incentive_shared = 0.0;
    let model = inputs.build();
    let sol = reference_solve(&model.instance, 24).unwrap();
    let plan = extract_plan(&model, &sol).unwrap();
    let pe = plan.value(&model, SymbolKey::path(Symbol::Export, 0, 0, 0));
    assert!((plan.shared[0][0][0] - pe.min(10.0)).abs() < 1e-9);
}

#[test]
fn forbidding_bids_never_helps() {
    for seed in 0..3 {
        let inputs = random_inputs(seed, 2, 2, 1);
        let free = reference_solve(&inputs.build().instance, 64).unwrap();
        let mut restricted = inputs.build();
        restricted.forbid_bids();
        let r = reference_solve(&restricted.instance, 64).unwrap();
        assert!(r.objective_value <= free.objective_value + 1e-9);
    }
}

#[test]
fn idle_plant_hour_takes_the_best_bid_posture() {
    // No PV, load or member demand: the only energy is a 47.5 kWh discharge
    // (0.2 of 250 kWh through 0.95). Worked by hand:
    //   no bid: 0.1 * 47.5                                   =  4.75
    //   sell 200 at 0.3, import the 152.5 shortfall at 0.25  = 60 - 38.125 = 21.875
    //   buy 152.5 at 0.05, baseline export capped at 200     = 20 - 7.625 = 12.375
    let inputs = one_hour(0.0, 0.0, 0.0, 0.3, 0.05, 0.1, 0.25);
    let solve = |forbid_sell: bool, forbid_buy: bool| {
        let mut model = inputs.build();
        for (sym, off) in [(Symbol::SellSubmitted, forbid_sell), (Symbol::BuySubmitted, forbid_buy)] {
            if off {
                let id = model.var(SymbolKey::hour(sym, 0));
                model.instance.fix(id, 0.0);
            }
        }
        reference_solve(&model.instance, 24).unwrap().objective_value
    };
    let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
    assert!(close(solve(true, true), 4.75));
    assert!(close(solve(false, true), 21.875));
    assert!(close(solve(true, false), 12.375));
    assert!(close(solve(false, false), 21.875));
}
