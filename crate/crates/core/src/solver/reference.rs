//! Exact reference solver: branch and bound over the binaries with LP
//! bounds from the built-in simplex and activity-based propagation.
//!
//! Every binary assignment is either visited or excluded by a proof
//! (propagated infeasibility, infeasible relaxation, or a relaxation bound
//! no better than the incumbent), so the result is the exact optimum.

use super::simplex::{solve_lp, LinearProgram, LpOutcome};
use crate::error::{Error, Result};
use crate::milp::{MilpInstance, Sense, Solution, SolveStatus, VarKind};

pub const DEFAULT_BINARY_LIMIT: usize = 24;
const NODE_LIMIT: usize = 2_000_000;
const INTEGRALITY: f64 = 1e-6;
const PROPAGATION_TOLERANCE: f64 = 1e-9;

/// A row in `terms <= rhs` form.
struct LeRow {
    terms: Vec<(usize, f64)>,
    rhs: f64,
}

fn le_rows(inst: &MilpInstance) -> Vec<LeRow> {
    let mut out = Vec::with_capacity(inst.constraints.len() * 2);
    for c in &inst.constraints {
        let terms: Vec<(usize, f64)> = c.terms.iter().map(|(v, a)| (v.0, *a)).collect();
        let neg = || terms.iter().map(|&(j, a)| (j, -a)).collect::<Vec<_>>();
        match c.sense {
            Sense::Le => out.push(LeRow { terms: terms.clone(), rhs: c.rhs }),
            Sense::Ge => out.push(LeRow { terms: neg(), rhs: -c.rhs }),
            Sense::Eq => {
                out.push(LeRow { terms: neg(), rhs: -c.rhs });
                out.push(LeRow { terms: terms.clone(), rhs: c.rhs });
            }
        }
    }
    out
}

/// Tightens bounds in place; `false` when a row cannot be satisfied.
fn propagate(rows: &[LeRow], is_binary: &[bool], lower: &mut [f64], upper: &mut [f64]) -> bool {
    for _round in 0..50 {
        let mut changed = false;
        for row in rows {
            let mut min_act = 0.0;
            let mut inf_count = 0usize;
            for &(j, a) in &row.terms {
                let b = if a > 0.0 { lower[j] } else { upper[j] };
                if b.is_infinite() {
                    inf_count += 1;
                } else {
                    min_act += a * b;
                }
            }
            let slack_tol = PROPAGATION_TOLERANCE * (1.0 + row.rhs.abs());
            if inf_count == 0 && min_act > row.rhs + slack_tol {
                return false;
            }
            if inf_count > 1 {
                continue;
            }
            for &(j, a) in &row.terms {
                let own = if a > 0.0 { lower[j] } else { upper[j] };
                let rest = if own.is_infinite() {
                    if inf_count != 1 {
                        continue;
                    }
                    min_act
                } else {
                    if inf_count != 0 {
                        continue;
                    }
                    min_act - a * own
                };
                // a * x_j <= rhs - rest
                let lim = (row.rhs - rest) / a;
                if a > 0.0 {
                    let mut nu = lim;
                    if is_binary[j] {
                        nu = if nu < 1.0 - INTEGRALITY { 0.0 } else { 1.0 };
                    }
                    if nu < upper[j] - 1e-9 * (1.0 + upper[j].abs().min(1e12)) {
                        if is_binary[j] || upper[j].is_infinite() || upper[j] - nu > 1e-6 {
                            upper[j] = nu;
                            changed = true;
                        }
                    }
                } else {
                    let mut nl = lim;
                    if is_binary[j] {
                        nl = if nl > INTEGRALITY { 1.0 } else { 0.0 };
                    }
                    if nl > lower[j] + 1e-9 * (1.0 + lower[j].abs().min(1e12)) {
                        if is_binary[j] || lower[j].is_infinite() || nl - lower[j] > 1e-6 {
                            lower[j] = nl;
                            changed = true;
                        }
                    }
                }
                if lower[j] > upper[j] + PROPAGATION_TOLERANCE * (1.0 + lower[j].abs()) {
                    return false;
                }
            }
        }
        if !changed {
            break;
        }
    }
    true
}

struct Node {
    /// Bounds of every binary variable, by position in `binaries`.
    fix: Vec<(f64, f64)>,
    bound: f64,
}

struct Search {
    rows: Vec<LeRow>,
    is_binary: Vec<bool>,
    binaries: Vec<usize>,
    /// Branching priority per binary position (lower first).
    priority: Vec<u8>,
    base: LinearProgram,
}

enum Relaxation {
    Infeasible,
    Unbounded,
    Solved { x: Vec<f64>, objective: f64, lower: Vec<f64>, upper: Vec<f64> },
}

impl Search {
    fn new(inst: &MilpInstance) -> Self {
        let n = inst.variables.len();
        let mut base = LinearProgram::new(n);
        for (v, c) in &inst.objective.terms {
            base.objective[v.0] += c;
        }
        for c in &inst.constraints {
            base.add_row(c.terms.iter().map(|(v, a)| (v.0, *a)).collect(), c.sense, c.rhs);
        }
        for (j, v) in inst.variables.iter().enumerate() {
            base.lower[j] = v.lower;
            base.upper[j] = v.upper;
        }
        let is_binary: Vec<bool> = inst.variables.iter().map(|v| v.kind == VarKind::Binary).collect();
        let binaries: Vec<usize> = (0..n).filter(|&j| is_binary[j]).collect();
        let priority = binaries
            .iter()
            .map(|&j| match inst.key(crate::milp::VarId(j)) {
                Some(k) if k.symbol.is_first_stage() => 0,
                _ => 1,
            })
            .collect();
        Self {
            rows: le_rows(inst),
            is_binary,
            binaries,
            priority,
            base,
        }
    }

    fn relax(&self, fix: &[(f64, f64)]) -> Result<Relaxation> {
        let mut lower = self.base.lower.clone();
        let mut upper = self.base.upper.clone();
        for (p, &j) in self.binaries.iter().enumerate() {
            lower[j] = lower[j].max(fix[p].0);
            upper[j] = upper[j].min(fix[p].1);
        }
        if !propagate(&self.rows, &self.is_binary, &mut lower, &mut upper) {
            return Ok(Relaxation::Infeasible);
        }
        // Propagated bounds are implied by the rows, so they leave the
        // relaxation unchanged while fixing many columns outright.
        let mut lp = self.base.clone();
        for j in 0..lower.len() {
            let (l, u) = (lower[j], upper[j]);
            if l > u {
                let mid = 0.5 * (l + u);
                lp.lower[j] = mid;
                lp.upper[j] = mid;
            } else {
                lp.lower[j] = l;
                lp.upper[j] = u;
            }
        }
        match solve_lp(&lp) {
            LpOutcome::Optimal { x, objective } => Ok(Relaxation::Solved { x, objective, lower, upper }),
            LpOutcome::Infeasible => Ok(Relaxation::Infeasible),
            LpOutcome::Unbounded => Ok(Relaxation::Unbounded),
            LpOutcome::Stalled => Err(Error::Solver("simplex iteration limit reached".into())),
        }
    }

    /// Binary position to branch on, if any binary is fractional.
    fn branch_var(&self, x: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, u8, f64)> = None;
        for (p, &j) in self.binaries.iter().enumerate() {
            let frac = (x[j] - x[j].round()).abs();
            if frac <= INTEGRALITY {
                continue;
            }
            let pr = self.priority[p];
            let better = match best {
                None => true,
                Some((_, bp, bf)) => pr < bp || (pr == bp && frac > bf + 1e-12),
            };
            if better {
                best = Some((p, pr, frac));
            }
        }
        best.map(|(p, _, _)| p)
    }
}

fn improves(value: f64, incumbent: Option<f64>) -> bool {
    match incumbent {
        None => true,
        Some(z) => value > z + 1e-9 * (1.0 + z.abs()),
    }
}

/// Exact optimum of `inst`; refuses instances with more than `binary_limit` binaries.
pub fn reference_solve(inst: &MilpInstance, binary_limit: usize) -> Result<Solution> {
    let count = inst.binary_count();
    if count > binary_limit {
        return Err(Error::BinaryLimit { count, limit: binary_limit });
    }
    let search = Search::new(inst);
    let root_fix: Vec<(f64, f64)> = search
        .binaries
        .iter()
        .map(|&j| (inst.variables[j].lower, inst.variables[j].upper))
        .collect();
    let mut open = vec![Node { fix: root_fix, bound: f64::INFINITY }];
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut nodes = 0usize;

    while !open.is_empty() {
        nodes += 1;
        if nodes > NODE_LIMIT {
            return Err(Error::Solver(format!("reference search exceeded {NODE_LIMIT} nodes")));
        }
        // Depth first until an incumbent exists, best bound afterwards.
        let idx = match incumbent {
            None => open.len() - 1,
            Some(_) => {
                let mut best = 0;
                for (i, n) in open.iter().enumerate() {
                    if n.bound > open[best].bound {
                        best = i;
                    }
                }
                best
            }
        };
        let node = open.remove(idx);
        if !improves(node.bound, incumbent.as_ref().map(|i| i.0)) {
            continue;
        }
        let (x, objective, lower, upper) = match search.relax(&node.fix)? {
            Relaxation::Infeasible => continue,
            Relaxation::Unbounded => {
                if incumbent.is_none() {
                    return Ok(Solution::without_values(SolveStatus::Unbounded));
                }
                continue;
            }
            Relaxation::Solved { x, objective, lower, upper } => (x, objective, lower, upper),
        };
        if !improves(objective, incumbent.as_ref().map(|i| i.0)) {
            continue;
        }
        let fix: Vec<(f64, f64)> = search.binaries.iter().map(|&j| (lower[j], upper[j])).collect();
        match search.branch_var(&x) {
            None => {
                // Pin the binaries and re-solve so the point is exactly integral.
                let pinned: Vec<(f64, f64)> = search
                    .binaries
                    .iter()
                    .map(|&j| {
                        let r = x[j].round().clamp(0.0, 1.0);
                        (r, r)
                    })
                    .collect();
                if let Relaxation::Solved { x, objective, .. } = search.relax(&pinned)? {
                    if improves(objective, incumbent.as_ref().map(|i| i.0)) {
                        incumbent = Some((objective, x));
                    }
                }
            }
            Some(p) => {
                let j = search.binaries[p];
                let up_first = x[j] >= 0.5;
                let mut down = fix.clone();
                down[p] = (0.0, 0.0);
                let mut up = fix;
                up[p] = (1.0, 1.0);
                let (first, second) = if up_first { (up, down) } else { (down, up) };
                // The preferred child is pushed last so depth-first pops it next.
                open.push(Node { fix: second, bound: objective });
                open.push(Node { fix: first, bound: objective });
            }
        }
    }

    Ok(match incumbent {
        Some((_, x)) => Solution::with_values(inst, SolveStatus::Optimal, x, 0.0),
        None => Solution::without_values(SolveStatus::Infeasible),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_lp() {
        let mut m = MilpInstance::new();
        let x = m.add_variable("x", VarKind::Continuous, 0.0, 3.0);
        m.objective.terms.push((x, 1.0));
        let s = reference_solve(&m, 0).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective_value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn knapsack() {
        // Feasible pairs: ab (9), ac (8), bc (7); all three weigh 6.
        let mut m = MilpInstance::new();
        let v: Vec<_> = ["a", "b", "c"]
            .iter()
            .map(|n| m.add_variable(*n, VarKind::Binary, 0.0, 1.0))
            .collect();
        m.objective.terms = vec![(v[0], 5.0), (v[1], 4.0), (v[2], 3.0)];
        m.add_constraint("w", vec![(v[0], 2.0), (v[1], 3.0), (v[2], 1.0)], Sense::Le, 5.0);
        m.add_constraint("u", vec![(v[0], 4.0), (v[1], 1.0), (v[2], 2.0)], Sense::Le, 11.0);
        let s = reference_solve(&m, 3).unwrap();
        assert!((s.objective_value - 9.0).abs() < 1e-9);
        assert_eq!(s.values, vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn binary_limit_is_enforced() {
        let mut m = MilpInstance::new();
        for i in 0..3 {
            m.add_variable(format!("b{i}"), VarKind::Binary, 0.0, 1.0);
        }
        match reference_solve(&m, 2) {
            Err(Error::BinaryLimit { count: 3, limit: 2 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn infeasible_assignments() {
        let mut m = MilpInstance::new();
        let a = m.add_variable("a", VarKind::Binary, 0.0, 1.0);
        let b = m.add_variable("b", VarKind::Binary, 0.0, 1.0);
        m.add_constraint("both", vec![(a, 1.0), (b, 1.0)], Sense::Eq, 1.5);
        let s = reference_solve(&m, 2).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
        assert!(s.values.is_empty());
    }
}
