use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};

use super::exchange::{emit_exchange, parse_solution_exact, write_solution};
use super::reference::{reference_solve, DEFAULT_BINARY_LIMIT};
use crate::error::{invalid, Error, Result};
use crate::milp::{MilpInstance, Solution};

/// Environment variable holding the external solver command line.
pub const SOLVER_ENV: &str = "REC_SOLVER_CMD";

pub const INSTANCE_FILE: &str = "instance.lp";
pub const SOLUTION_FILE: &str = "solution.sol";
pub const SIDECAR_FILE: &str = "instance.json";
/// Full-precision column values written next to the solution file.
pub const EXACT_FILE: &str = "solution.exact";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// A CBC-compatible command run on the LP file.
    External,
    /// The built-in branch and bound.
    Reference,
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "external" => Ok(Backend::External),
            "reference" => Ok(Backend::Reference),
            _ => Err(invalid(format!("unknown backend {s:?}, expected external or reference"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRequest {
    pub backend: Backend,
    pub time_limit_s: f64,
    pub rel_gap: f64,
    /// Refusal threshold of the reference backend.
    pub binary_limit: usize,
}

impl Default for SolveRequest {
    fn default() -> Self {
        Self {
            backend: Backend::External,
            time_limit_s: 600.0,
            rel_gap: 1e-6,
            binary_limit: DEFAULT_BINARY_LIMIT,
        }
    }
}

impl SolveRequest {
    pub fn validate(&self) -> Result<()> {
        if !(self.time_limit_s > 0.0) {
            return Err(invalid(format!("time limit must be > 0, got {}", self.time_limit_s)));
        }
        if !(self.rel_gap >= 0.0) {
            return Err(invalid(format!("relative gap must be >= 0, got {}", self.rel_gap)));
        }
        Ok(())
    }
}

fn on_path(name: &str) -> Option<PathBuf> {
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path)
        .map(|d| d.join(name))
        .find(|p| p.is_file())
}

/// CBC shipped inside the `pulp` Python package, if one is installed.
fn bundled_cbc() -> Option<PathBuf> {
    let out = Command::new("python3")
        .args([
            "-c",
            "import os, pulp; print(os.path.join(os.path.dirname(pulp.__file__), 'solverdir', 'cbc'))",
        ])
        .output()
        .ok()?;
    if !out.status.success() {
        return None;
    }
    let dir = PathBuf::from(String::from_utf8_lossy(&out.stdout).trim());
    let arch = match std::env::consts::ARCH {
        "x86_64" => "i64",
        "aarch64" => "arm64",
        "x86" => "i32",
        _ => return None,
    };
    let os = match std::env::consts::OS {
        "linux" => "linux",
        "macos" => "osx",
        _ => return None,
    };
    let p = dir.join(os).join(arch).join("cbc");
    p.is_file().then_some(p)
}

/// Solver command line: `REC_SOLVER_CMD`, else `cbc` on the path, else the
/// CBC bundled with `pulp`.
pub fn locate_solver() -> Option<Vec<String>> {
    if let Ok(cmd) = std::env::var(SOLVER_ENV) {
        let parts: Vec<String> = cmd.split_whitespace().map(str::to_string).collect();
        if !parts.is_empty() {
            return Some(parts);
        }
    }
    on_path("cbc")
        .or_else(bundled_cbc)
        .map(|p| vec![p.to_string_lossy().into_owned()])
}

/// Writes the LP file and symbol sidecar into `dir`.
pub fn write_instance(inst: &MilpInstance, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let lp = dir.join(INSTANCE_FILE);
    std::fs::write(&lp, emit_exchange(inst)?)?;
    std::fs::write(dir.join(SIDECAR_FILE), inst.symbol_sidecar())?;
    Ok(lp)
}

/// Runs `command` (CBC argument conventions) on the LP file in `dir`.
pub fn solve_external(inst: &MilpInstance, request: &SolveRequest, command: &[String], dir: &Path) -> Result<Solution> {
    request.validate()?;
    let (program, args) = command
        .split_first()
        .ok_or_else(|| Error::Solver("empty solver command".into()))?;
    let lp = write_instance(inst, dir)?;
    let sol = dir.join(SOLUTION_FILE);
    let exact = dir.join(EXACT_FILE);
    for f in [&sol, &exact] {
        if f.exists() {
            std::fs::remove_file(f)?;
        }
    }
    let output = Command::new(program)
        .args(args)
        .arg(&lp)
        .args(["integerTolerance", "1e-9", "primalTolerance", "1e-9"])
        .arg("ratioGap")
        .arg(request.rel_gap.to_string())
        .arg("seconds")
        .arg(request.time_limit_s.to_string())
        .args(["solve", "printingOptions", "all", "solu"])
        .arg(&sol)
        .args(["printingOptions", "fixall", "solu"])
        .arg(&exact)
        .output()
        .map_err(|e| Error::Solver(format!("cannot run {program}: {e}")))?;
    if !output.status.success() {
        return Err(Error::Solver(format!(
            "{program} exited with {}: {}",
            output.status,
            String::from_utf8_lossy(&output.stderr).trim()
        )));
    }
    let text = std::fs::read_to_string(&sol)
        .map_err(|e| Error::Solver(format!("no solution file from {program}: {e}")))?;
    // The exact dump is optional: solvers without it fall back to 8 digits.
    let exact_text = std::fs::read_to_string(&exact).unwrap_or_default();
    parse_solution_exact(&text, &exact_text, inst)
}

/// Solves with the requested backend, leaving the exchange files in `dir`.
pub fn solve(inst: &MilpInstance, request: &SolveRequest, dir: &Path) -> Result<Solution> {
    request.validate()?;
    match request.backend {
        Backend::External => {
            let cmd = locate_solver().ok_or_else(|| {
                Error::Solver(format!("no external solver found; set {SOLVER_ENV} or install cbc"))
            })?;
            solve_external(inst, request, &cmd, dir)
        }
        Backend::Reference => {
            write_instance(inst, dir)?;
            let solution = reference_solve(inst, request.binary_limit)?;
            std::fs::write(dir.join(SOLUTION_FILE), write_solution(&solution, inst))?;
            Ok(solution)
        }
    }
}
