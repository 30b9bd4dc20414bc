//! The day-ahead bidding program as a solver-agnostic MILP.

mod builder;
mod extract;
mod instance;
mod solution;

pub use builder::{
    acceptance_matrices, build_instance, default_epsilon, default_penalties, encode_acceptance,
    encode_bidding, encode_energy_balance, encode_objective, encode_relaxation_logic,
    encode_shared_energy, encode_storage, DayAheadModel, KnownPrices, ModelData, ResolvedParams,
};
pub use extract::{check_solution, extract_plan, DayPlan, ROUNDING_TOLERANCE};
pub use instance::{
    Constraint, MilpInstance, Objective, Sense, Symbol, SymbolKey, VarId, VarKind, Variable,
};
pub use solution::{audit, round_binaries, rounding_shift, AuditReport, Solution, SolveStatus};
