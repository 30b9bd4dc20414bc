use std::fmt;

use serde::{Deserialize, Serialize};

use super::instance::{MilpInstance, VarId, VarKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Stopped on a limit with a feasible incumbent.
    GapLimit,
}

impl SolveStatus {
    pub fn has_values(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::GapLimit)
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::GapLimit => "gap_limit",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub status: SolveStatus,
    /// Objective of the instance evaluated at `values` (€).
    pub objective_value: f64,
    /// One value per instance variable; empty without a solution.
    pub values: Vec<f64>,
    pub mip_gap: f64,
}

impl Solution {
    pub fn without_values(status: SolveStatus) -> Self {
        Self {
            status,
            objective_value: f64::NAN,
            values: Vec::new(),
            mip_gap: f64::NAN,
        }
    }

    pub fn with_values(instance: &MilpInstance, status: SolveStatus, values: Vec<f64>, mip_gap: f64) -> Self {
        let objective_value = instance.objective.evaluate(&values);
        Self {
            status,
            objective_value,
            values,
            mip_gap,
        }
    }

    pub fn value(&self, id: VarId) -> f64 {
        self.values[id.0]
    }
}

/// Worst violations of a candidate point.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub max_row_violation: f64,
    pub worst_row: Option<String>,
    pub max_bound_violation: f64,
    pub worst_bound: Option<String>,
    pub max_integrality_gap: f64,
    pub worst_binary: Option<String>,
}

impl AuditReport {
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.max_row_violation <= tol
            && self.max_bound_violation <= tol
            && self.max_integrality_gap <= tol
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "row {:.3e} ({}), bound {:.3e} ({}), integrality {:.3e} ({})",
            self.max_row_violation,
            self.worst_row.as_deref().unwrap_or("-"),
            self.max_bound_violation,
            self.worst_bound.as_deref().unwrap_or("-"),
            self.max_integrality_gap,
            self.worst_binary.as_deref().unwrap_or("-"),
        )
    }
}

/// Re-evaluates every row, bound and integrality requirement at `values`.
pub fn audit(instance: &MilpInstance, values: &[f64]) -> AuditReport {
    assert_eq!(values.len(), instance.variables.len(), "one value per variable");
    let mut r = AuditReport {
        max_row_violation: 0.0,
        worst_row: None,
        max_bound_violation: 0.0,
        worst_bound: None,
        max_integrality_gap: 0.0,
        worst_binary: None,
    };
    for c in &instance.constraints {
        let v = c.violation(values);
        if v > r.max_row_violation || (v.is_nan() && r.worst_row.is_none()) {
            r.max_row_violation = if v.is_nan() { f64::INFINITY } else { v };
            r.worst_row = Some(c.name.clone());
        }
    }
    for (var, &x) in instance.variables.iter().zip(values) {
        let v = (var.lower - x).max(x - var.upper).max(0.0);
        if v > r.max_bound_violation {
            r.max_bound_violation = v;
            r.worst_bound = Some(var.name.clone());
        }
        if var.kind == VarKind::Binary {
            let g = (x - x.round()).abs();
            if g > r.max_integrality_gap {
                r.max_integrality_gap = g;
                r.worst_binary = Some(var.name.clone());
            }
        }
    }
    r
}

/// `values` with every binary rounded to 0 or 1.
pub fn round_binaries(instance: &MilpInstance, values: &[f64]) -> Vec<f64> {
    instance
        .variables
        .iter()
        .zip(values)
        .map(|(var, &x)| match var.kind {
            VarKind::Binary => x.round().clamp(0.0, 1.0),
            VarKind::Continuous => x,
        })
        .collect()
}

/// Largest increase of any row violation caused by rounding the binaries.
pub fn rounding_shift(instance: &MilpInstance, values: &[f64]) -> (f64, Option<String>) {
    let rounded = round_binaries(instance, values);
    let mut worst = (0.0, None);
    for c in &instance.constraints {
        let d = c.violation(&rounded) - c.violation(values);
        if d > worst.0 {
            worst = (d, Some(c.name.clone()));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::instance::Sense;

    #[test]
    fn audit_flags_rows_bounds_and_integrality() {
        let mut m = MilpInstance::new();
        let x = m.add_variable("x", VarKind::Continuous, 0.0, 3.0);
        let b = m.add_variable("b", VarKind::Binary, 0.0, 1.0);
        m.add_constraint("cap", vec![(x, 1.0), (b, -3.0)], Sense::Le, 0.0);
        assert!(audit(&m, &[3.0, 1.0]).is_feasible(1e-9));
        let r = audit(&m, &[2.0, 0.5]);
        assert_eq!(r.max_row_violation, 0.5);
        assert_eq!(r.worst_row.as_deref(), Some("cap"));
        assert_eq!(r.max_integrality_gap, 0.5);
        let r = audit(&m, &[4.0, 1.0]);
        assert_eq!(r.max_bound_violation, 1.0);
        assert_eq!(r.worst_bound.as_deref(), Some("x"));
        let (shift, row) = rounding_shift(&m, &[1.0, 0.4]);
        assert!((shift - 1.0).abs() < 1e-12);
        assert_eq!(row.as_deref(), Some("cap"));
    }
}
