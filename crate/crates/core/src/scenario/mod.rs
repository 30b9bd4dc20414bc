//! Price and energy scenario construction.

mod dmc;
mod prices;
mod reduction;

pub use dmc::{fit_dmc, sample_scenarios, DmcModel, EnergyHistory, JointState};
pub use prices::{build_price_scenarios, PriceDay};
pub use reduction::{fast_forward_select, reduce_scenarios, reduction_objective, Reduction};
