//! Day-ahead bidding of a renewable energy community on a pay-as-bid
//! ancillary-service market.

pub mod config;
pub mod data;
pub mod error;
pub mod milp;
pub mod scenario;
pub mod settlement;
pub mod sim;
pub mod solver;
pub mod synthetic;
pub mod types;

pub use config::{validate_config, RecConfig, SharedEnergyCapMode, Violation};
pub use error::{Error, Result};
pub use types::{
    Bid, DayAheadProgram, DayTrajectory, ScenarioSet, Side, TrajectoryKind, ENERGY_CHANNELS,
    PRICE_CHANNELS,
};
