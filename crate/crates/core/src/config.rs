//! Plant, market and tuning constants of a community.
//!
//! Every power-like quantity is an energy per hourly slot (kWh). Prices are
//! in €/kWh.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Upper bound used for the shared energy of each scenario path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SharedEnergyCapMode {
    /// Shared energy is capped by the aggregated member demand.
    #[default]
    MemberDemand,
    /// Shared energy is capped by the community grid exchange.
    RecExchange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecConfig {
    pub horizon_hours: usize,
    pub p_export_max: f64,
    pub p_import_max: f64,
    pub battery_capacity_kwh: f64,
    pub battery_power_kwh_per_slot: f64,
    pub eta_charge: f64,
    pub eta_discharge: f64,
    pub soc_initial: f64,
    pub soc_final_min: f64,
    pub soc_final_max: f64,
    /// Per-kWh penalty on undelivered sell service. Derived from the price
    /// scenarios when absent.
    pub penalty_sell: Option<f64>,
    /// Per-kWh refund on undelivered purchase service. Derived from the price
    /// scenarios when absent.
    pub penalty_buy: Option<f64>,
    pub incentive_shared: f64,
    /// Range of the balance `pv - load - member_demand` the baseline may
    /// absorb. Derived from the energy scenarios when absent.
    pub epsilon_max: Option<f64>,
    pub renewable_only_charging: bool,
    pub shared_energy_cap_mode: SharedEnergyCapMode,
}

impl Default for RecConfig {
    /// 120 kW / 250 kWh storage behind a 200 kW connection, 0.95 efficiencies,
    /// terminal SOC window [0.3, 0.7] and a 0.119 €/kWh sharing incentive.
    fn default() -> Self {
        Self {
            horizon_hours: 24,
            p_export_max: 200.0,
            p_import_max: 200.0,
            battery_capacity_kwh: 250.0,
            battery_power_kwh_per_slot: 120.0,
            eta_charge: 0.95,
            eta_discharge: 0.95,
            soc_initial: 0.5,
            soc_final_min: 0.3,
            soc_final_max: 0.7,
            penalty_sell: None,
            penalty_buy: None,
            incentive_shared: 0.119,
            epsilon_max: None,
            renewable_only_charging: true,
            shared_energy_cap_mode: SharedEnergyCapMode::MemberDemand,
        }
    }
}

/// One broken configuration invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    pub(crate) fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl RecConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Final SOC of the storage is unconstrained when there is no storage.
    pub fn has_storage(&self) -> bool {
        self.battery_capacity_kwh > 0.0 && self.battery_power_kwh_per_slot > 0.0
    }
}

/// Reports every broken invariant of `config`; empty when the config is valid.
pub fn validate_config(config: &RecConfig) -> Vec<Violation> {
    let mut out = Vec::new();

    if config.horizon_hours == 0 {
        out.push(Violation::new("horizon_hours", "must be at least 1"));
    }
    for (field, value) in [
        ("p_export_max", config.p_export_max),
        ("p_import_max", config.p_import_max),
    ] {
        if !(value.is_finite() && value > 0.0) {
            out.push(Violation::new(field, format!("must be > 0, got {value}")));
        }
    }
    // A zero-sized storage is a legal plant without a battery.
    for (field, value) in [
        ("battery_capacity_kwh", config.battery_capacity_kwh),
        ("battery_power_kwh_per_slot", config.battery_power_kwh_per_slot),
    ] {
        if !(value.is_finite() && value >= 0.0) {
            out.push(Violation::new(field, format!("must be >= 0, got {value}")));
        }
    }
    for (field, value) in [
        ("eta_charge", config.eta_charge),
        ("eta_discharge", config.eta_discharge),
    ] {
        if !(value > 0.0 && value <= 1.0) {
            out.push(Violation::new(
                field,
                format!("must lie in (0, 1], got {value}"),
            ));
        }
    }
    for (field, value) in [
        ("soc_initial", config.soc_initial),
        ("soc_final_min", config.soc_final_min),
        ("soc_final_max", config.soc_final_max),
    ] {
        if !(0.0..=1.0).contains(&value) {
            out.push(Violation::new(
                field,
                format!("must lie in [0, 1], got {value}"),
            ));
        }
    }
    if config.soc_final_min > config.soc_final_max {
        out.push(Violation::new(
            "soc_final_min",
            format!(
                "must not exceed soc_final_max ({} > {})",
                config.soc_final_min, config.soc_final_max
            ),
        ));
    }
    // A buy-side refund may be negative when clearing prices reach zero.
    if let Some(v) = config.penalty_buy {
        if !v.is_finite() {
            out.push(Violation::new("penalty_buy", format!("must be finite, got {v}")));
        }
    }
    for (field, value) in [
        ("penalty_sell", config.penalty_sell),
        ("epsilon_max", config.epsilon_max),
    ] {
        if let Some(v) = value {
            if !(v.is_finite() && v >= 0.0) {
                out.push(Violation::new(field, format!("must be >= 0, got {v}")));
            }
        }
    }
    if !(config.incentive_shared.is_finite() && config.incentive_shared >= 0.0) {
        out.push(Violation::new(
            "incentive_shared",
            format!("must be >= 0, got {}", config.incentive_shared),
        ));
    }
    out
}
