//! CPLEX LP text for instances and CBC-style solution files.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::milp::{MilpInstance, Solution, SolveStatus, VarId, VarKind};

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn push_terms(out: &mut String, inst: &MilpInstance, terms: &[(VarId, f64)]) {
    if terms.is_empty() {
        if let Some(v) = inst.variables.first() {
            let _ = write!(out, " 0 {}", v.name);
        }
        return;
    }
    for (i, (v, a)) in terms.iter().enumerate() {
        let name = &inst.variables[v.0].name;
        let sign = if *a < 0.0 { "-" } else { "+" };
        if i == 0 && sign == "+" {
            let _ = write!(out, " {} {name}", a.abs());
        } else {
            let _ = write!(out, " {sign} {} {name}", a.abs());
        }
    }
}

fn bound(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x}")
    }
}

/// Canonical LP text: variables in id order, rows in id order.
pub fn emit_exchange(inst: &MilpInstance) -> Result<String> {
    let mut seen = HashMap::new();
    for (i, v) in inst.variables.iter().enumerate() {
        if v.name.is_empty() {
            return Err(Error::Emit(format!("variable {i} has no name")));
        }
        if !valid_name(&v.name) {
            return Err(Error::Emit(format!("variable name {:?} is not exchangeable", v.name)));
        }
        if seen.insert(v.name.as_str(), i).is_some() {
            return Err(Error::Emit(format!("duplicate variable name {}", v.name)));
        }
    }
    for (i, c) in inst.constraints.iter().enumerate() {
        if !valid_name(&c.name) {
            return Err(Error::Emit(format!("row {i} has invalid name {:?}", c.name)));
        }
        if c.terms.is_empty() && inst.variables.is_empty() {
            return Err(Error::Emit(format!("row {} has no terms", c.name)));
        }
    }

    let mut out = String::new();
    out.push_str("\\ recbid instance\n");
    if inst.objective.constant != 0.0 {
        let _ = writeln!(out, "\\ objective constant {}", inst.objective.constant);
    }
    out.push_str("Maximize\n obj:");
    push_terms(&mut out, inst, &inst.objective.terms);
    out.push_str("\nSubject To\n");
    for c in &inst.constraints {
        let _ = write!(out, " {}:", c.name);
        push_terms(&mut out, inst, &c.terms);
        let _ = writeln!(out, " {} {}", c.sense.as_str(), c.rhs);
    }
    out.push_str("Bounds\n");
    for v in &inst.variables {
        match v.kind {
            VarKind::Binary if v.lower == 0.0 && v.upper == 1.0 => {}
            _ if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY => {
                let _ = writeln!(out, " {} free", v.name);
            }
            _ => {
                let _ = writeln!(out, " {} <= {} <= {}", bound(v.lower), v.name, bound(v.upper));
            }
        }
    }
    let binaries: Vec<&str> = inst
        .variables
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .map(|v| v.name.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for b in binaries {
            let _ = writeln!(out, " {b}");
        }
    }
    out.push_str("End\n");
    Ok(out)
}

fn parse_status(line: &str) -> Result<SolveStatus> {
    let l = line.trim_start();
    let status = if l.starts_with("Optimal") {
        SolveStatus::Optimal
    } else if l.starts_with("Infeasible")
        || l.starts_with("Integer infeasible")
        || l.starts_with("Problem proven infeasible")
    {
        SolveStatus::Infeasible
    } else if l.starts_with("Unbounded") || l.starts_with("Problem proven unbounded") {
        SolveStatus::Unbounded
    } else if l.starts_with("Stopped on") {
        SolveStatus::GapLimit
    } else {
        return Err(Error::Parse(format!("unknown status line {l:?}")));
    };
    Ok(status)
}

/// Reads a CBC solution file written with `printingOptions all`.
///
/// Stopped runs count as `gap_limit` and keep their incumbent.
pub fn parse_solution(text: &str, inst: &MilpInstance) -> Result<Solution> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty solution file".into()))?;
    let status = parse_status(header)?;
    if !status.has_values() {
        return Ok(Solution::without_values(status));
    }

    let mut entries: Vec<(String, f64)> = Vec::new();
    for line in lines {
        let mut toks = line.split_whitespace().filter(|t| *t != "**");
        let (Some(_idx), Some(name), Some(value)) = (toks.next(), toks.next(), toks.next()) else {
            return Err(Error::Parse(format!("malformed line {line:?}")));
        };
        let value: f64 = value
            .parse()
            .map_err(|_| Error::Parse(format!("bad value in line {line:?}")))?;
        entries.push((name.to_string(), value));
    }
    // Rows are listed before columns when both are printed.
    let n = inst.variables.len();
    let columns = if entries.len() == inst.constraints.len() + n {
        &entries[inst.constraints.len()..]
    } else {
        &entries[..]
    };
    let index: HashMap<&str, usize> = inst
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| (v.name.as_str(), i))
        .collect();
    let mut values = vec![f64::NAN; n];
    for (name, value) in columns {
        if let Some(&i) = index.get(name.as_str()) {
            values[i] = *value;
        }
    }
    if let Some(i) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::Parse(format!(
            "solution lacks variable {}",
            inst.variables[i].name
        )));
    }
    let gap = if status == SolveStatus::Optimal { 0.0 } else { f64::NAN };
    Ok(Solution::with_values(inst, status, values, gap))
}


const EXACT_DIGITS: &[u8; 64] = b"0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ*+";

/// Decodes CBC's 12-character exact number: four 16-bit groups, most
/// significant first, each as three base-64 digits, least significant first.
pub fn decode_exact(code: &str) -> Option<f64> {
    let b = code.as_bytes();
    if b.len() != 12 {
        return None;
    }
    let mut bits = 0u64;
    for group in b.chunks(3) {
        let mut v = 0u64;
        for (i, ch) in group.iter().enumerate() {
            let digit = EXACT_DIGITS.iter().position(|c| c == ch)? as u64;
            v |= digit << (6 * i);
        }
        if v > 0xffff {
            return None;
        }
        bits = (bits << 16) | v;
    }
    Some(f64::from_bits(bits))
}

/// Reads the `printingOptions fixall` dump: one ` FX <bound> <name> <code>` line per column.
pub fn parse_exact_values(text: &str, inst: &MilpInstance) -> Result<Vec<Option<f64>>> {
    let index: HashMap<&str, usize> = inst
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| (v.name.as_str(), i))
        .collect();
    let mut values = vec![None; inst.variables.len()];
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let [_, _, name, code] = toks[..] else {
            return Err(Error::Parse(format!("malformed exact line {line:?}")));
        };
        let value = decode_exact(code)
            .ok_or_else(|| Error::Parse(format!("bad exact number {code:?}")))?;
        if let Some(&i) = index.get(name) {
            values[i] = Some(value);
        }
    }
    Ok(values)
}

/// `parse_solution` with values replaced by their exact counterparts.
pub fn parse_solution_exact(text: &str, exact: &str, inst: &MilpInstance) -> Result<Solution> {
    let mut sol = parse_solution(text, inst)?;
    if !sol.status.has_values() {
        return Ok(sol);
    }
    for (v, e) in sol.values.iter_mut().zip(parse_exact_values(exact, inst)?) {
        if let Some(e) = e {
            *v = e;
        }
    }
    sol.objective_value = inst.objective.evaluate(&sol.values);
    Ok(sol)
}

/// CBC-style solution text for `solution`, rows first, then columns.
pub fn write_solution(solution: &Solution, inst: &MilpInstance) -> String {
    let mut out = String::new();
    let head = match solution.status {
        SolveStatus::Optimal => "Optimal",
        SolveStatus::Infeasible => "Infeasible",
        SolveStatus::Unbounded => "Unbounded",
        SolveStatus::GapLimit => "Stopped on gap",
    };
    let obj = if solution.objective_value.is_finite() {
        solution.objective_value
    } else {
        0.0
    };
    let _ = writeln!(out, "{head} - objective value {obj}");
    if !solution.status.has_values() {
        return out;
    }
    for (i, c) in inst.constraints.iter().enumerate() {
        let _ = writeln!(out, "{i:>7} {} {} 0", c.name, c.activity(&solution.values));
    }
    for (i, v) in inst.variables.iter().enumerate() {
        let _ = writeln!(out, "{i:>7} {} {} 0", v.name, solution.values[i]);
    }
    out
}
