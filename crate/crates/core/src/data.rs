//! Hourly CSV inputs of a simulation run.
//!
//! A data directory holds five files, each with a `timestamp` column followed
//! by numeric columns, one row per hourly slot and whole days only:
//!
//! | file | columns |
//! |---|---|
//! | `history_energy.csv` | `pv_kwh,load_kwh,member_demand_kwh` |
//! | `history_msd_prices.csv` | `msd_sell_max_eur_kwh,msd_buy_min_eur_kwh` |
//! | `week_energy.csv` | as `history_energy.csv`, realized days to simulate |
//! | `week_msd_prices.csv` | as `history_msd_prices.csv`, realized days |
//! | `week_known_prices.csv` | `export_eur_kwh,import_eur_kwh` |

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scenario::{EnergyHistory, PriceDay};

pub const HISTORY_ENERGY: &str = "history_energy.csv";
pub const HISTORY_PRICES: &str = "history_msd_prices.csv";
pub const WEEK_ENERGY: &str = "week_energy.csv";
pub const WEEK_PRICES: &str = "week_msd_prices.csv";
pub const WEEK_KNOWN: &str = "week_known_prices.csv";

pub const ENERGY_COLUMNS: [&str; 3] = ["pv_kwh", "load_kwh", "member_demand_kwh"];
pub const MSD_COLUMNS: [&str; 2] = ["msd_sell_max_eur_kwh", "msd_buy_min_eur_kwh"];
pub const KNOWN_COLUMNS: [&str; 2] = ["export_eur_kwh", "import_eur_kwh"];

/// A timestamped table of named numeric columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlyTable {
    pub timestamps: Vec<String>,
    /// `columns[c][t]`.
    pub columns: Vec<Vec<f64>>,
}

impl HourlyTable {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn read(path: &Path, names: &[&str]) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| invalid(format!("{} lacks column {name}", path.display())))
        };
        let ts = col("timestamp")?;
        let idx: Vec<usize> = names.iter().map(|n| col(n)).collect::<Result<_>>()?;
        let mut table = HourlyTable {
            timestamps: Vec::new(),
            columns: vec![Vec::new(); names.len()],
        };
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            table.timestamps.push(rec.get(ts).unwrap_or_default().to_string());
            for (c, &i) in idx.iter().enumerate() {
                let field = rec.get(i).unwrap_or_default().trim();
                let v: f64 = field.parse().map_err(|_| {
                    invalid(format!("{} row {}: {} = {field:?} is not a number", path.display(), line + 2, names[c]))
                })?;
                if !v.is_finite() || v < 0.0 {
                    return Err(invalid(format!(
                        "{} row {}: {} = {v} must be finite and non-negative",
                        path.display(),
                        line + 2,
                        names[c]
                    )));
                }
                table.columns[c].push(v);
            }
        }
        Ok(table)
    }

    pub fn write(&self, path: &Path, names: &[&str]) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["timestamp"];
        header.extend(names);
        w.write_record(&header)?;
        for t in 0..self.len() {
            let mut rec = vec![self.timestamps[t].clone()];
            rec.extend(self.columns.iter().map(|c| c[t].to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    fn check_days(&self, horizon: usize, what: &str) -> Result<usize> {
        if self.is_empty() || self.len() % horizon != 0 {
            return Err(invalid(format!(
                "{what} has {} rows, expected a positive multiple of {horizon}",
                self.len()
            )));
        }
        Ok(self.len() / horizon)
    }
}

/// Everything a week simulation reads, split into whole days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSet {
    pub horizon: usize,
    pub history_energy: EnergyHistory,
    pub history_prices: Vec<PriceDay>,
    pub week_energy: EnergyHistory,
    pub week_prices: Vec<PriceDay>,
    /// Export and import prices per simulated day.
    pub week_export: Vec<Vec<f64>>,
    pub week_import: Vec<Vec<f64>>,
    pub week_timestamps: Vec<String>,
    pub history_energy_timestamps: Vec<String>,
    pub history_price_timestamps: Vec<String>,
}

fn energy_of(t: &HourlyTable) -> EnergyHistory {
    EnergyHistory {
        pv: t.columns[0].clone(),
        load: t.columns[1].clone(),
        member_demand: t.columns[2].clone(),
    }
}

fn price_days(t: &HourlyTable, horizon: usize) -> Vec<PriceDay> {
    (0..t.len() / horizon)
        .map(|d| PriceDay {
            sell_max: t.columns[0][d * horizon..(d + 1) * horizon].to_vec(),
            buy_min: t.columns[1][d * horizon..(d + 1) * horizon].to_vec(),
        })
        .collect()
}

fn chunks(v: &[f64], horizon: usize) -> Vec<Vec<f64>> {
    v.chunks(horizon).map(<[f64]>::to_vec).collect()
}

impl DataSet {
    pub fn days(&self) -> usize {
        self.week_prices.len()
    }

    pub fn load_dir(dir: &Path, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(invalid("horizon must be at least one hour"));
        }
        let he = HourlyTable::read(&dir.join(HISTORY_ENERGY), &ENERGY_COLUMNS)?;
        let hp = HourlyTable::read(&dir.join(HISTORY_PRICES), &MSD_COLUMNS)?;
        let we = HourlyTable::read(&dir.join(WEEK_ENERGY), &ENERGY_COLUMNS)?;
        let wp = HourlyTable::read(&dir.join(WEEK_PRICES), &MSD_COLUMNS)?;
        let wk = HourlyTable::read(&dir.join(WEEK_KNOWN), &KNOWN_COLUMNS)?;
        he.check_days(horizon, HISTORY_ENERGY)?;
        hp.check_days(horizon, HISTORY_PRICES)?;
        let days = we.check_days(horizon, WEEK_ENERGY)?;
        for (t, name) in [(&wp, WEEK_PRICES), (&wk, WEEK_KNOWN)] {
            if t.check_days(horizon, name)? != days {
                return Err(invalid(format!("{name} covers {} days, {WEEK_ENERGY} {days}", t.len() / horizon)));
            }
        }
        Ok(Self {
            horizon,
            history_energy: energy_of(&he),
            history_prices: price_days(&hp, horizon),
            week_energy: energy_of(&we),
            week_prices: price_days(&wp, horizon),
            week_export: chunks(&wk.columns[0], horizon),
            week_import: chunks(&wk.columns[1], horizon),
            week_timestamps: we.timestamps,
            history_energy_timestamps: he.timestamps,
            history_price_timestamps: hp.timestamps,
        })
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let energy = |e: &EnergyHistory, ts: &[String]| HourlyTable {
            timestamps: ts.to_vec(),
            columns: vec![e.pv.clone(), e.load.clone(), e.member_demand.clone()],
        };
        let prices = |p: &[PriceDay], ts: &[String]| HourlyTable {
            timestamps: ts.to_vec(),
            columns: vec![
                p.iter().flat_map(|d| d.sell_max.iter().copied()).collect(),
                p.iter().flat_map(|d| d.buy_min.iter().copied()).collect(),
            ],
        };
        energy(&self.history_energy, &self.history_energy_timestamps).write(&dir.join(HISTORY_ENERGY), &ENERGY_COLUMNS)?;
        prices(&self.history_prices, &self.history_price_timestamps).write(&dir.join(HISTORY_PRICES), &MSD_COLUMNS)?;
        energy(&self.week_energy, &self.week_timestamps).write(&dir.join(WEEK_ENERGY), &ENERGY_COLUMNS)?;
        prices(&self.week_prices, &self.week_timestamps).write(&dir.join(WEEK_PRICES), &MSD_COLUMNS)?;
        HourlyTable {
            timestamps: self.week_timestamps.clone(),
            columns: vec![self.week_export.concat(), self.week_import.concat()],
        }
        .write(&dir.join(WEEK_KNOWN), &KNOWN_COLUMNS)?;
        Ok(())
    }

    /// Energy observed strictly before simulated day `day`.
    pub fn energy_before(&self, day: usize) -> EnergyHistory {
        let k = day * self.horizon;
        let mut h = self.history_energy.clone();
        h.pv.extend_from_slice(&self.week_energy.pv[..k]);
        h.load.extend_from_slice(&self.week_energy.load[..k]);
        h.member_demand.extend_from_slice(&self.week_energy.member_demand[..k]);
        h
    }

    /// The last `window` price days strictly before simulated day `day`.
    pub fn prices_before(&self, day: usize, window: usize) -> Vec<PriceDay> {
        let all: Vec<&PriceDay> = self.history_prices.iter().chain(&self.week_prices[..day]).collect();
        let start = all.len().saturating_sub(window);
        all[start..].iter().map(|d| (*d).clone()).collect()
    }

    pub fn realized_energy(&self, day: usize) -> EnergyHistory {
        let r = day * self.horizon..(day + 1) * self.horizon;
        EnergyHistory {
            pv: self.week_energy.pv[r.clone()].to_vec(),
            load: self.week_energy.load[r.clone()].to_vec(),
            member_demand: self.week_energy.member_demand[r].to_vec(),
        }
    }

    pub fn day_timestamps(&self, day: usize) -> &[String] {
        &self.week_timestamps[day * self.horizon..(day + 1) * self.horizon]
    }
}
