mod common;

use proptest::prelude::*;

use common::{random_inputs, rel_diff};
use recbid::milp::{extract_plan, Sense, Symbol, SymbolKey};
use recbid::settlement::{
    decide_acceptance, realtime_dispatch, settle, Acceptance, RealizedEnergies, SettlementPrices,
};
use recbid::solver::{reference_solve, solve_lp, LinearProgram, LpOutcome};
use recbid::{Bid, DayAheadProgram, RecConfig, ScenarioSet, Side, TrajectoryKind, PRICE_CHANNELS};

// ---------------------------------------------------------------------------
// Simplex against brute-force vertex enumeration.

#[derive(Debug, Clone)]
struct SmallLp {
    c: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    rows: Vec<(Vec<f64>, Sense, f64)>,
}

fn small_lp() -> impl Strategy<Value = SmallLp> {
    (1usize..=4, 0usize..=3).prop_flat_map(|(n, m)| {
        let coef = -3i32..=3;
        let row = (
            prop::collection::vec(coef.clone(), n),
            prop_oneof![Just(Sense::Le), Just(Sense::Ge), Just(Sense::Eq)],
            -4i32..=6,
        );
        (
            prop::collection::vec(coef, n),
            prop::collection::vec(-2i32..=0, n),
            prop::collection::vec(1i32..=3, n),
            prop::collection::vec(row, m),
        )
            .prop_map(|(c, lo, hi, rows)| SmallLp {
                c: c.into_iter().map(f64::from).collect(),
                lo: lo.into_iter().map(f64::from).collect(),
                hi: hi.into_iter().map(f64::from).collect(),
                rows: rows
                    .into_iter()
                    .map(|(a, s, b)| (a.into_iter().map(f64::from).collect(), s, f64::from(b)))
                    .collect(),
            })
    })
}

fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = combinations(n - 1, k);
    for mut c in combinations(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out
}

/// Best vertex of the bounded polytope, `None` when it is empty.
fn vertex_optimum(lp: &SmallLp) -> Option<f64> {
    let n = lp.c.len();
    let mut planes: Vec<(Vec<f64>, f64)> = lp.rows.iter().map(|(a, _, b)| (a.clone(), *b)).collect();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        planes.push((e.clone(), lp.lo[i]));
        planes.push((e, lp.hi[i]));
    }
    let feasible = |x: &[f64]| {
        let tol = 1e-9;
        (0..n).all(|i| x[i] >= lp.lo[i] - tol && x[i] <= lp.hi[i] + tol)
            && lp.rows.iter().all(|(a, s, b)| {
                let ax: f64 = a.iter().zip(x).map(|(a, x)| a * x).sum();
                match s {
                    Sense::Le => ax <= b + tol,
                    Sense::Ge => ax >= b - tol,
                    Sense::Eq => (ax - b).abs() <= tol,
                }
            })
    };
    let mut best: Option<f64> = None;
    for set in combinations(planes.len(), n) {
        let a = set.iter().map(|&i| planes[i].0.clone()).collect();
        let b = set.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = gauss(a, b) {
            if feasible(&x) {
                let v: f64 = lp.c.iter().zip(&x).map(|(c, x)| c * x).sum();
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn simplex_matches_vertex_enumeration(lp in small_lp()) {
        let n = lp.c.len();
        let mut prog = LinearProgram::new(n);
        prog.objective = lp.c.clone();
        prog.lower = lp.lo.clone();
        prog.upper = lp.hi.clone();
        for (a, s, b) in &lp.rows {
            prog.add_row(a.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect(), *s, *b);
        }
        match (solve_lp(&prog), vertex_optimum(&lp)) {
            (LpOutcome::Optimal { objective, x }, Some(best)) => {
                prop_assert!((objective - best).abs() <= 1e-8, "simplex {objective}, vertices {best}");
                let cx: f64 = lp.c.iter().zip(&x).map(|(c, x)| c * x).sum();
                prop_assert!((cx - objective).abs() <= 1e-8);
            }
            (LpOutcome::Infeasible, None) => {}
            (got, want) => prop_assert!(false, "simplex {got:?}, vertices {want:?}"),
        }
    }
}

// ---------------------------------------------------------------------------
// Money scaling.

fn scaled(inputs: &common::Inputs, alpha: f64) -> common::Inputs {
    let mut out = inputs.with_config(RecConfig {
        incentive_shared: inputs.config.incentive_shared * alpha,
        ..inputs.config.clone()
    });
    let scenarios = (0..inputs.prices.len())
        .map(|s| inputs.prices.scenario(s).iter().map(|ch| ch.iter().map(|v| v * alpha).collect()).collect())
        .collect();
    out.prices = ScenarioSet::new(PRICE_CHANNELS.to_vec(), scenarios, inputs.prices.probabilities().to_vec()).unwrap();
    let k = inputs.config.horizon_hours;
    let export = inputs.known.export.values().iter().map(|v| v * alpha).collect();
    let import = inputs.known.import.values().iter().map(|v| v * alpha).collect();
    out.known = recbid::milp::KnownPrices::new(export, import, k).unwrap();
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn scaling_all_prices_scales_the_optimum(seed in 0u64..1000, alpha in 0.25f64..4.0) {
        let base = random_inputs(seed, 2, 2, 1);
        let a = reference_solve(&base.build().instance, 64).unwrap();
        let b = reference_solve(&scaled(&base, alpha).build().instance, 64).unwrap();
        prop_assert!(rel_diff(b.objective_value, alpha * a.objective_value) <= 1e-6,
            "{} vs {} * {}", b.objective_value, alpha, a.objective_value);
    }
}

// ---------------------------------------------------------------------------
// Real-time dispatch and settlement.

fn program_strategy(k: usize) -> impl Strategy<Value = DayAheadProgram> {
    let bid = prop_oneof![
        Just(None),
        (0.0f64..0.5, 0.0f64..80.0).prop_map(|(p, q)| Some((Side::Sell, p, q))),
        (0.0f64..0.5, 0.0f64..80.0).prop_map(|(p, q)| Some((Side::Buy, p, q))),
    ];
    (
        prop::collection::vec(-100.0f64..100.0, k),
        prop::collection::vec(bid, k),
    )
        .prop_map(move |(baseline, bids)| {
            let mut p = DayAheadProgram::idle(baseline, vec![0.0; k], 1);
            p.bids = bids
                .into_iter()
                .enumerate()
                .map(|(hour, b)| {
                    b.map(|(side, price, quantity)| Bid { hour, side, price, quantity, submitted: true })
                })
                .collect();
            p
        })
}

fn plant() -> RecConfig {
    RecConfig {
        battery_capacity_kwh: 100.0,
        battery_power_kwh_per_slot: 40.0,
        ..RecConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dispatch_and_settlement_invariants(
        program in program_strategy(6),
        pv in prop::collection::vec(0.0f64..80.0, 6),
        load in prop::collection::vec(0.0f64..20.0, 6),
        md in prop::collection::vec(0.0f64..40.0, 6),
        sell_max in prop::collection::vec(0.0f64..0.5, 6),
        buy_min in prop::collection::vec(0.0f64..0.5, 6),
        soc0 in 0.0f64..=1.0,
        green in any::<bool>(),
    ) {
        let config = RecConfig { renewable_only_charging: green, ..plant() };
        let acceptance = decide_acceptance(&program.bids, &sell_max, &buy_min).unwrap();
        let realized = RealizedEnergies { pv: pv.clone(), load, member_demand: md };
        let d = realtime_dispatch(&program, &acceptance, &realized, &config, soc0).unwrap();
        prop_assert_eq!(d.soc.len(), 7);
        for (k, h) in d.hours.iter().enumerate() {
            prop_assert!((0.0..=1.0).contains(&h.soc_end));
            prop_assert!(h.charge == 0.0 || h.discharge == 0.0);
            prop_assert!(h.charge <= config.battery_power_kwh_per_slot + 1e-12);
            prop_assert!(h.discharge <= config.battery_power_kwh_per_slot + 1e-12);
            if green {
                prop_assert!(h.charge <= pv[k] + 1e-12);
            }
            let qty = |side| program.bid(k, side).map_or(0.0, |b| b.quantity);
            prop_assert!(h.sell_error >= 0.0 && h.sell_error <= qty(Side::Sell) + 1e-12);
            prop_assert!(h.buy_error >= 0.0 && h.buy_error <= qty(Side::Buy) + 1e-12);
            if !acceptance.sell[k] {
                prop_assert_eq!(h.sell_error, 0.0);
            }
            prop_assert!(h.export * h.import == 0.0);
            prop_assert!(h.baseline_export * h.baseline_import == 0.0);
        }
        let prices = SettlementPrices {
            export: vec![0.1; 6],
            import: vec![0.25; 6],
            penalty_sell: 0.6,
            penalty_buy: -0.01,
            incentive_shared: 0.119,
        };
        let report = settle(&d, &program, &acceptance, &prices).unwrap();
        for (h, f) in d.hours.iter().zip(&report.hours) {
            let by_hand = f.export_revenue - f.import_cost + f.shared_incentive + f.msd_sell_revenue
                - f.msd_buy_cost - f.penalty_sell + f.penalty_buy_refund;
            prop_assert!((f.net - by_hand).abs() <= 1e-9);
            prop_assert!((f.shared_energy - h.export.min(h.member_demand)).abs() <= 1e-12);
        }
        let total: f64 = report.hours.iter().map(|f| f.net).sum();
        prop_assert!((report.total.net - total).abs() <= 1e-9);
    }

    #[test]
    fn acceptance_follows_the_clearing_comparison(
        program in program_strategy(8),
        sell_max in prop::collection::vec(0.0f64..0.5, 8),
        buy_min in prop::collection::vec(0.0f64..0.5, 8),
    ) {
        let a = decide_acceptance(&program.bids, &sell_max, &buy_min).unwrap();
        for k in 0..8 {
            let (s, b) = match &program.bids[k] {
                Some(bid) if bid.side == Side::Sell => (bid.price <= sell_max[k], false),
                Some(bid) => (false, bid.price >= buy_min[k]),
                None => (false, false),
            };
            prop_assert_eq!((a.sell[k], a.buy[k]), (s, b));
        }
    }
}

// ---------------------------------------------------------------------------
// A single-scenario plan realized exactly reproduces its objective.

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn realizing_the_only_scenario_pays_the_planned_objective(seed in 0u64..10_000) {
        let inputs = random_inputs(seed, 3, 1, 1);
        let model = inputs.build();
        let sol = reference_solve(&model.instance, 64).unwrap();
        let plan = extract_plan(&model, &sol).unwrap();
        let errors: f64 = [Symbol::SellError, Symbol::BuyError]
            .iter()
            .flat_map(|&s| (0..3).map(move |k| SymbolKey::path(s, k, 0, 0)))
            .map(|key| plan.value(&model, key))
            .sum();
        prop_assume!(errors.abs() < 1e-9);

        let e = &inputs.energies;
        let realized = RealizedEnergies {
            pv: e.series(0, TrajectoryKind::Pv).to_vec(),
            load: e.series(0, TrajectoryKind::Load).to_vec(),
            member_demand: e.series(0, TrajectoryKind::MemberDemand).to_vec(),
        };
        let acceptance = decide_acceptance(
            &plan.program.bids,
            inputs.prices.series(0, TrajectoryKind::PriceSellMax),
            inputs.prices.series(0, TrajectoryKind::PriceBuyMin),
        )
        .unwrap();
        prop_assert_eq!(&acceptance, &Acceptance {
            sell: (0..3).map(|k| plan.sell_accepted[k][0] && plan.program.bid(k, Side::Sell).is_some()).collect(),
            buy: (0..3).map(|k| plan.buy_accepted[k][0] && plan.program.bid(k, Side::Buy).is_some()).collect(),
        });
        let d = realtime_dispatch(&plan.program, &acceptance, &realized, &inputs.config, inputs.config.soc_initial).unwrap();
        for k in 0..=3 {
            prop_assert!((d.soc[k] - plan.planned_soc[0][0][k]).abs() <= 1e-7);
        }
        let p = model.data.params;
        let prices = SettlementPrices {
            export: inputs.known.export.values().to_vec(),
            import: inputs.known.import.values().to_vec(),
            penalty_sell: p.penalty_sell,
            penalty_buy: p.penalty_buy,
            incentive_shared: p.incentive_shared,
        };
        let report = settle(&d, &plan.program, &acceptance, &prices).unwrap();
        prop_assert!(rel_diff(report.total.net, plan.objective) <= 1e-6,
            "realized {} planned {}", report.total.net, plan.objective);
    }
}
