//! Solving instances: an external CBC-compatible process or the built-in
//! exact reference.

mod backend;
mod exchange;
mod reference;
mod simplex;

pub use backend::{
    locate_solver, solve, solve_external, write_instance, Backend, SolveRequest, EXACT_FILE,
    INSTANCE_FILE, SIDECAR_FILE, SOLUTION_FILE, SOLVER_ENV,
};
pub use exchange::{
    decode_exact, emit_exchange, parse_exact_values, parse_solution, parse_solution_exact,
    write_solution,
};
pub use reference::{reference_solve, DEFAULT_BINARY_LIMIT};
pub use simplex::{solve_lp, LinearProgram, LpOutcome, LpRow, COST_TOLERANCE};
