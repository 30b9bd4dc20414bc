//! Dense bounded-variable primal simplex.
//!
//! Every row gets a slack (`a x + s = b`) whose bounds encode the sense.
//! Rows whose slack cannot start inside its bounds get an artificial
//! column, driven to zero in phase one. Fixed columns are substituted out
//! before the tableau is built.

use crate::milp::Sense;

/// Reduced-cost optimality tolerance.
pub const COST_TOLERANCE: f64 = 1e-9;
const PIVOT_TOLERANCE: f64 = 1e-9;
const PHASE_ONE_TOLERANCE: f64 = 1e-7;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `max c x` subject to rows and `lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    pub fn new(n: usize) -> Self {
        Self {
            objective: vec![0.0; n],
            rows: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(LpRow { terms, sense, rhs });
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
    /// Iteration limit reached without a verdict.
    Stalled,
}

struct Tableau {
    m: usize,
    cols: usize,
    /// Row-major `m x cols`.
    t: Vec<f64>,
    basis: Vec<usize>,
    value: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Columns that may not enter the basis.
    barred: Vec<bool>,
    d: Vec<f64>,
}

enum Step {
    Optimal,
    Unbounded,
    Moved,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.cols + j]
    }

    fn reset_costs(&mut self, cost: &[f64]) {
        let mut d = cost.to_vec();
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.cols..(i + 1) * self.cols];
                for (dj, &a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        for i in 0..self.m {
            d[self.basis[i]] = 0.0;
        }
        self.d = d;
    }

    fn is_basic(&self) -> Vec<bool> {
        let mut b = vec![false; self.cols];
        for &j in &self.basis {
            b[j] = true;
        }
        b
    }

    /// Entering column and direction (+1 increase, -1 decrease).
    fn price(&self, basic: &[bool], bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.cols {
            if basic[j] || self.barred[j] {
                continue;
            }
            let dj = self.d[j];
            let dir = if dj > COST_TOLERANCE && self.value[j] < self.upper[j] {
                1.0
            } else if dj < -COST_TOLERANCE && self.value[j] > self.lower[j] {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(_, _, s)| dj.abs() > s) {
                best = Some((j, dir, dj.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let cols = self.cols;
        let p = self.t[r * cols + q];
        for a in &mut self.t[r * cols..(r + 1) * cols] {
            *a /= p;
        }
        let nz: Vec<usize> = (0..cols).filter(|&j| self.t[r * cols + j] != 0.0).collect();
        let (before, rest) = self.t.split_at_mut(r * cols);
        let (prow, after) = rest.split_at_mut(cols);
        let eliminate = |row: &mut [f64]| {
            let f = row[q];
            if f != 0.0 {
                for &j in &nz {
                    row[j] -= f * prow[j];
                }
                row[q] = 0.0;
            }
        };
        for row in before.chunks_mut(cols) {
            eliminate(row);
        }
        for row in after.chunks_mut(cols) {
            eliminate(row);
        }
        let f = self.d[q];
        if f != 0.0 {
            for &j in &nz {
                self.d[j] -= f * prow[j];
            }
            self.d[q] = 0.0;
        }
        self.basis[r] = q;
    }

    fn step(&mut self, bland: bool, degenerate: &mut bool) -> Step {
        let basic = self.is_basic();
        let Some((q, dir)) = self.price(&basic, bland) else {
            return Step::Optimal;
        };
        // Own bound range first: a bound flip needs no pivot.
        let mut theta = self.upper[q] - self.lower[q];
        let mut leave: Option<(usize, f64, f64)> = None;
        for i in 0..self.m {
            let alpha = -dir * self.at(i, q);
            if alpha.abs() <= PIVOT_TOLERANCE {
                continue;
            }
            let b = self.basis[i];
            let (limit, target) = if alpha > 0.0 {
                if self.upper[b] == f64::INFINITY {
                    continue;
                }
                (((self.upper[b] - self.value[b]) / alpha).max(0.0), self.upper[b])
            } else {
                if self.lower[b] == f64::NEG_INFINITY {
                    continue;
                }
                (((self.value[b] - self.lower[b]) / -alpha).max(0.0), self.lower[b])
            };
            match leave {
                _ if limit < theta - 1e-12 => {
                    theta = limit;
                    leave = Some((i, target, alpha));
                }
                Some((li, _, la)) if limit <= theta + 1e-12 => {
                    let take = if bland {
                        b < self.basis[li]
                    } else {
                        alpha.abs() > la.abs()
                    };
                    if take {
                        theta = theta.min(limit);
                        leave = Some((i, target, alpha));
                    }
                }
                _ => {}
            }
        }
        if theta == f64::INFINITY {
            return Step::Unbounded;
        }
        *degenerate = theta <= 1e-12;
        let delta = dir * theta;
        if delta != 0.0 {
            for i in 0..self.m {
                let a = self.at(i, q);
                if a != 0.0 {
                    let b = self.basis[i];
                    self.value[b] -= a * delta;
                }
            }
            self.value[q] += delta;
        }
        match leave {
            None => {
                self.value[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
            }
            Some((r, target, _)) => {
                let out = self.basis[r];
                self.pivot(r, q);
                self.value[out] = target;
            }
        }
        Step::Moved
    }

    fn run(&mut self, max_iter: usize) -> Result<bool, ()> {
        let mut streak = 0;
        for _ in 0..max_iter {
            let mut degenerate = false;
            match self.step(streak >= DEGENERATE_STREAK, &mut degenerate) {
                Step::Optimal => return Ok(true),
                Step::Unbounded => return Ok(false),
                Step::Moved => {
                    streak = if degenerate { streak + 1 } else { 0 };
                }
            }
        }
        Err(())
    }
}

/// Solves `basis_matrix * y = rhs` by Gaussian elimination with partial pivoting.
fn dense_solve(mut a: Vec<f64>, mut rhs: Vec<f64>, m: usize) -> Option<Vec<f64>> {
    for c in 0..m {
        let p = (c..m).max_by(|&x, &y| a[x * m + c].abs().total_cmp(&a[y * m + c].abs()))?;
        if a[p * m + c].abs() < 1e-12 {
            return None;
        }
        if p != c {
            for j in 0..m {
                a.swap(p * m + j, c * m + j);
            }
            rhs.swap(p, c);
        }
        let piv = a[c * m + c];
        for r in c + 1..m {
            let f = a[r * m + c] / piv;
            if f != 0.0 {
                for j in c..m {
                    a[r * m + j] -= f * a[c * m + j];
                }
                rhs[r] -= f * rhs[c];
            }
        }
    }
    let mut y = vec![0.0; m];
    for r in (0..m).rev() {
        let mut s = rhs[r];
        for j in r + 1..m {
            s -= a[r * m + j] * y[j];
        }
        y[r] = s / a[r * m + r];
    }
    Some(y)
}

/// Solves `lp` exactly up to floating-point tolerances.
pub fn solve_lp(lp: &LinearProgram) -> LpOutcome {
    let n = lp.n_vars();
    for j in 0..n {
        if lp.lower[j] > lp.upper[j] {
            return LpOutcome::Infeasible;
        }
    }
    // Substitute fixed columns.
    let mut col_of = vec![usize::MAX; n];
    let mut free_cols = Vec::new();
    for j in 0..n {
        if lp.lower[j] != lp.upper[j] {
            col_of[j] = free_cols.len();
            free_cols.push(j);
        }
    }
    let nf = free_cols.len();
    let mut rows: Vec<(Vec<(usize, f64)>, Sense, f64)> = Vec::new();
    for row in &lp.rows {
        let mut rhs = row.rhs;
        let mut terms = Vec::with_capacity(row.terms.len());
        for &(j, a) in &row.terms {
            if a == 0.0 {
                continue;
            }
            if col_of[j] == usize::MAX {
                rhs -= a * lp.lower[j];
            } else {
                terms.push((col_of[j], a));
            }
        }
        if terms.is_empty() {
            let ok = match row.sense {
                Sense::Le => rhs >= -PHASE_ONE_TOLERANCE,
                Sense::Ge => rhs <= PHASE_ONE_TOLERANCE,
                Sense::Eq => rhs.abs() <= PHASE_ONE_TOLERANCE,
            };
            if !ok {
                return LpOutcome::Infeasible;
            }
            continue;
        }
        rows.push((terms, row.sense, rhs));
    }
    let m = rows.len();

    let mut lower = Vec::with_capacity(nf + 2 * m);
    let mut upper = Vec::with_capacity(nf + 2 * m);
    let mut value = Vec::with_capacity(nf + 2 * m);
    for &j in &free_cols {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        lower.push(l);
        upper.push(u);
        value.push(if l.is_finite() {
            l
        } else if u.is_finite() {
            u
        } else {
            0.0
        });
    }
    for (_, sense, _) in &rows {
        let (l, u) = match sense {
            Sense::Le => (0.0, f64::INFINITY),
            Sense::Ge => (f64::NEG_INFINITY, 0.0),
            Sense::Eq => (0.0, 0.0),
        };
        lower.push(l);
        upper.push(u);
        value.push(0.0);
    }
    // Slack values implied by the starting point; artificial where out of bounds.
    let mut artificial = Vec::new();
    for (i, (terms, _, rhs)) in rows.iter().enumerate() {
        let act: f64 = terms.iter().map(|&(c, a)| a * value[c]).sum();
        let s = rhs - act;
        let si = nf + i;
        if s < lower[si] || s > upper[si] {
            let at = if s < lower[si] { lower[si] } else { upper[si] };
            value[si] = at;
            artificial.push((i, s - at));
        } else {
            value[si] = s;
        }
    }
    let n_art = artificial.len();
    let cols = nf + m + n_art;
    let mut t = vec![0.0; m * cols];
    let mut basis: Vec<usize> = (0..m).map(|i| nf + i).collect();
    for (i, (terms, _, _)) in rows.iter().enumerate() {
        for &(c, a) in terms {
            t[i * cols + c] += a;
        }
        t[i * cols + nf + i] = 1.0;
    }
    for (k, &(i, resid)) in artificial.iter().enumerate() {
        let c = nf + m + k;
        let sign = if resid >= 0.0 { 1.0 } else { -1.0 };
        // Make the artificial basic with a unit column in row i.
        if sign < 0.0 {
            for a in &mut t[i * cols..(i + 1) * cols] {
                *a = -*a;
            }
        }
        t[i * cols + c] = 1.0;
        lower.push(0.0);
        upper.push(f64::INFINITY);
        value.push(resid.abs());
        basis[i] = c;
    }
    // The slack of a row that received an artificial is nonbasic at a bound,
    // and its column entry is now sign-adjusted along with the row.

    let mut tab = Tableau {
        m,
        cols,
        t,
        basis,
        value,
        lower,
        upper,
        barred: vec![false; cols],
        d: vec![0.0; cols],
    };
    let max_iter = 50 * (cols + m) + 1000;

    if n_art > 0 {
        let mut cost = vec![0.0; cols];
        for c in nf + m..cols {
            cost[c] = -1.0;
        }
        tab.reset_costs(&cost);
        if tab.run(max_iter).is_err() {
            return LpOutcome::Stalled;
        }
        let infeas: f64 = (nf + m..cols).map(|c| tab.value[c]).sum();
        let scale = 1.0 + rows.iter().map(|r| r.2.abs()).fold(0.0, f64::max);
        if infeas > PHASE_ONE_TOLERANCE * scale {
            return LpOutcome::Infeasible;
        }
        for c in nf + m..cols {
            tab.barred[c] = true;
            tab.upper[c] = 0.0;
            tab.value[c] = tab.value[c].max(0.0);
        }
    }

    let mut cost = vec![0.0; cols];
    for (c, &j) in free_cols.iter().enumerate() {
        cost[c] = lp.objective[j];
    }
    tab.reset_costs(&cost);
    match tab.run(max_iter) {
        Ok(true) => {}
        Ok(false) => return LpOutcome::Unbounded,
        Err(()) => return LpOutcome::Stalled,
    }

    // Recompute basic values from the original rows to shed drift.
    if m > 0 {
        let basic = tab.is_basic();
        let mut bmat = vec![0.0; m * m];
        let mut pos = vec![usize::MAX; cols];
        for (r, &c) in tab.basis.iter().enumerate() {
            pos[c] = r;
        }
        let mut rhs: Vec<f64> = rows.iter().map(|r| r.2).collect();
        let art_row: Vec<(usize, f64)> = artificial
            .iter()
            .map(|&(i, resid)| (i, if resid >= 0.0 { 1.0 } else { -1.0 }))
            .collect();
        let mut add = |i: usize, c: usize, a: f64, rhs: &mut Vec<f64>| {
            if basic[c] {
                bmat[i * m + pos[c]] += a;
            } else {
                rhs[i] -= a * tab.value[c];
            }
        };
        for (i, (terms, _, _)) in rows.iter().enumerate() {
            for &(c, a) in terms {
                add(i, c, a, &mut rhs);
            }
            add(i, nf + i, 1.0, &mut rhs);
        }
        for (k, &(i, sign)) in art_row.iter().enumerate() {
            // Row i was scaled by sign; undo by adding the artificial in the
            // original orientation.
            add(i, nf + m + k, sign, &mut rhs);
        }
        if let Some(y) = dense_solve(bmat, rhs, m) {
            for (r, &c) in tab.basis.iter().enumerate() {
                tab.value[c] = y[r];
            }
        }
    }

    let mut x = lp.lower.clone();
    for (c, &j) in free_cols.iter().enumerate() {
        x[j] = tab.value[c];
    }
    let objective = (0..n).map(|j| lp.objective[j] * x[j]).sum();
    LpOutcome::Optimal { x, objective }
}
