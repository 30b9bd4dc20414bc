//! Report files of a simulation run.
//!
//! `report.json` summarizes the run. `cashflow.csv`, `bids.csv` and `soc.csv`
//! are wide tables; the `*_long.csv` files hold the same data one value per
//! row for plotting.

use std::path::Path;

use serde::Serialize;
use serde_json::json;

use super::{Comparison, RunSpec, WeekReport};
use crate::error::Result;
use crate::settlement::CashFlow;
use crate::types::Side;

pub const REPORT_FILES: [&str; 7] = [
    "report.json",
    "cashflow.csv",
    "bids.csv",
    "soc.csv",
    "soc_long.csv",
    "bids_long.csv",
    "cashflow_long.csv",
];

fn writer(dir: &Path, name: &str) -> Result<csv::Writer<std::fs::File>> {
    Ok(csv::Writer::from_path(dir.join(name))?)
}

fn num(x: f64) -> String {
    x.to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Serialize)]
struct DaySummary {
    day: usize,
    soc_initial: f64,
    soc_final: f64,
    planned_objective: f64,
    mip_gap: f64,
    max_row_violation: f64,
    penalty_sell: f64,
    penalty_buy: f64,
    bids_submitted: usize,
    bids_accepted: usize,
    cashflow: CashFlow,
}

/// Writes [`REPORT_FILES`] for `report` into `dir`.
pub fn write_week(report: &WeekReport, spec: &RunSpec, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let k = spec.data.horizon;
    let stamp = |day: usize, h: usize| spec.data.week_timestamps.get(day * k + h).cloned().unwrap_or_default();

    let days: Vec<DaySummary> = report
        .days
        .iter()
        .map(|d| DaySummary {
            day: d.day,
            soc_initial: d.soc_initial,
            soc_final: d.soc_final(),
            planned_objective: d.plan.objective,
            mip_gap: d.plan.mip_gap,
            max_row_violation: d.max_row_violation,
            penalty_sell: d.penalty_sell,
            penalty_buy: d.penalty_buy,
            bids_submitted: d.plan.program.bids.iter().flatten().count(),
            bids_accepted: (0..k).filter(|&h| d.acceptance.sell[h] || d.acceptance.buy[h]).count(),
            cashflow: d.cashflow.total,
        })
        .collect();
    let summary = json!({
        "seed": report.seed,
        "case": report.case,
        "n_prices": spec.n_prices,
        "n_energies": spec.n_energies,
        "price_window_days": spec.price_window_days,
        "energy_samples": spec.energy_samples,
        "backend": spec.solve.backend,
        "config": spec.case.apply(&spec.config),
        "days": days,
        "total": report.total,
        "planned_objective": report.planned_objective,
    });
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&summary)? + "\n")?;

    let mut w = writer(dir, "cashflow.csv")?;
    let mut header = vec!["day", "hour", "timestamp"];
    header.extend(CashFlow::COLUMNS);
    w.write_record(&header)?;
    let row = |day: String, hour: String, ts: String, f: &CashFlow| {
        let mut r = vec![day, hour, ts];
        r.extend(f.values().iter().map(|v| num(*v)));
        r
    };
    for d in &report.days {
        for (h, f) in d.cashflow.hours.iter().enumerate() {
            w.write_record(row(d.day.to_string(), h.to_string(), stamp(d.day, h), f))?;
        }
        w.write_record(row(d.day.to_string(), "total".into(), String::new(), &d.cashflow.total))?;
    }
    w.write_record(row("all".into(), "total".into(), String::new(), &report.total))?;
    w.flush()?;

    let mut w = writer(dir, "bids.csv")?;
    w.write_record([
        "day", "hour", "timestamp", "side", "price", "quantity", "accepted", "error", "clearing_price", "export_price",
    ])?;
    for d in &report.days {
        for (h, bid) in d.plan.program.bids.iter().enumerate() {
            let Some(b) = bid else { continue };
            let (accepted, error, clearing) = match b.side {
                Side::Sell => (d.acceptance.sell[h], d.dispatch.hours[h].sell_error, d.realized_sell_max[h]),
                Side::Buy => (d.acceptance.buy[h], d.dispatch.hours[h].buy_error, d.realized_buy_min[h]),
            };
            w.write_record([
                d.day.to_string(),
                h.to_string(),
                stamp(d.day, h),
                b.side.as_str().to_string(),
                num(b.price),
                num(b.quantity),
                accepted.to_string(),
                num(error),
                num(clearing),
                num(spec.data.week_export[d.day][h]),
            ])?;
        }
    }
    w.flush()?;

    let mut w = writer(dir, "soc.csv")?;
    w.write_record(["day", "hour", "step", "realized", "planned_min", "planned_max"])?;
    let mut long = writer(dir, "soc_long.csv")?;
    long.write_record(["day", "hour", "step", "series", "soc"])?;
    for d in &report.days {
        for h in 0..=k {
            let step = (d.day * k + h).to_string();
            let planned = d.plan.planned_soc.iter().flatten().map(|p| p[h]);
            let lo = planned.clone().fold(f64::INFINITY, f64::min);
            let hi = planned.fold(f64::NEG_INFINITY, f64::max);
            w.write_record([d.day.to_string(), h.to_string(), step.clone(), num(d.dispatch.soc[h]), num(lo), num(hi)])?;
            long.write_record([d.day.to_string(), h.to_string(), step.clone(), "realized".into(), num(d.dispatch.soc[h])])?;
            for (s, row) in d.plan.planned_soc.iter().enumerate() {
                for (l, path) in row.iter().enumerate() {
                    long.write_record([d.day.to_string(), h.to_string(), step.clone(), format!("plan_s{s}_l{l}"), num(path[h])])?;
                }
            }
        }
    }
    w.flush()?;
    long.flush()?;

    let mut w = writer(dir, "bids_long.csv")?;
    w.write_record(["day", "hour", "step", "series", "value"])?;
    for d in &report.days {
        for h in 0..k {
            let step = (d.day * k + h).to_string();
            let mut series: Vec<(String, f64)> = vec![
                ("export_price".into(), spec.data.week_export[d.day][h]),
                ("sell_clearing_max".into(), d.realized_sell_max[h]),
                ("buy_clearing_min".into(), d.realized_buy_min[h]),
            ];
            if let Some(b) = &d.plan.program.bids[h] {
                let side = b.side.as_str();
                let (acc, err) = match b.side {
                    Side::Sell => (d.acceptance.sell[h], d.dispatch.hours[h].sell_error),
                    Side::Buy => (d.acceptance.buy[h], d.dispatch.hours[h].buy_error),
                };
                series.push((format!("{side}_bid_price"), b.price));
                series.push((format!("{side}_bid_quantity"), b.quantity));
                series.push((format!("{side}_accepted"), f64::from(u8::from(acc))));
                series.push((format!("{side}_error"), err));
            }
            for (name, v) in series {
                w.write_record([d.day.to_string(), h.to_string(), step.clone(), name, num(v)])?;
            }
        }
    }
    w.flush()?;

    let mut w = writer(dir, "cashflow_long.csv")?;
    w.write_record(["case", "day", "hour", "step", "component", "value"])?;
    for d in &report.days {
        for (h, f) in d.cashflow.hours.iter().enumerate() {
            let step = (d.day * k + h).to_string();
            for (name, v) in CashFlow::COLUMNS.iter().zip(f.values()) {
                w.write_record([
                    report.case.as_str().to_string(),
                    d.day.to_string(),
                    h.to_string(),
                    step.clone(),
                    name.to_string(),
                    num(v),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// The comparison table as CSV text.
pub fn comparison_csv(cmp: &Comparison) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["case", "net_eur", "delta_vs_case3_pct", "delta_vs_case1_pct", "planned_objective_eur"])?;
    for r in &cmp.rows {
        w.write_record([
            r.case.as_str().to_string(),
            num(r.net),
            opt(r.delta_vs_neither),
            opt(r.delta_vs_no_msd),
            num(r.planned_objective),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// Writes `compare.csv`, `compare.json` and `compare_long.csv` (weekly
/// cash-flow components per case) into `dir`.
pub fn write_comparison(cmp: &Comparison, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("compare.csv"), comparison_csv(cmp)?)?;
    std::fs::write(dir.join("compare.json"), serde_json::to_string_pretty(cmp)? + "\n")?;
    let mut w = writer(dir, "compare_long.csv")?;
    w.write_record(["case", "component", "value"])?;
    for week in &cmp.weeks {
        for (name, v) in CashFlow::COLUMNS.iter().zip(week.total.values()) {
            w.write_record([week.case.as_str(), name, &num(v)])?;
        }
    }
    w.flush()?;
    Ok(())
}
