use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn as_str(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|(v, a)| a * values[v.0]).sum()
    }

    /// Amount by which `values` breaks the row, zero when satisfied.
    pub fn violation(&self, values: &[f64]) -> f64 {
        let act = self.activity(values);
        match self.sense {
            Sense::Le => (act - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - act).max(0.0),
            Sense::Eq => (act - self.rhs).abs(),
        }
    }
}

/// Linear objective, always maximised.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl Objective {
    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(v, c)| c * values[v.0]).sum::<f64>()
    }
}

/// Model quantities, each indexed by hour `k` and optionally by price
/// scenario `s`, energy scenario `l` or price candidate `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symbol {
    /// Offered sell quantity P+.
    SellQuantity,
    /// Offered purchase quantity P-.
    BuyQuantity,
    /// Sell bid submitted b+.
    SellSubmitted,
    BuySubmitted,
    /// Sell price equals candidate j: d+.
    SellPriceChoice,
    BuyPriceChoice,
    /// Realised sell service Γ+ in a price scenario.
    SellService,
    BuyService,
    /// Sell bid accepted δ+ in a price scenario.
    SellAccepted,
    BuyAccepted,
    /// Sell bid submitted and accepted u+.
    SellActive,
    BuyActive,
    Export,
    Import,
    ExportOn,
    BaselineExport,
    BaselineImport,
    BaselineExportOn,
    RecExchange,
    RecBaseline,
    SellError,
    BuyError,
    /// Baseline relaxations w+, w-.
    BaselineUp,
    BaselineDown,
    /// Storage reserve relaxations v+, v-.
    ReserveUp,
    ReserveDown,
    Charge,
    Discharge,
    ChargeOn,
    BessBaseline,
    Shared,
    /// Product d+ * P+ used for pay-as-bid revenue.
    SellRevenueProduct,
    BuyRevenueProduct,
}

impl Symbol {
    pub fn prefix(self) -> &'static str {
        match self {
            Symbol::SellQuantity => "Psell",
            Symbol::BuyQuantity => "Pbuy",
            Symbol::SellSubmitted => "bsell",
            Symbol::BuySubmitted => "bbuy",
            Symbol::SellPriceChoice => "dsell",
            Symbol::BuyPriceChoice => "dbuy",
            Symbol::SellService => "Gsell",
            Symbol::BuyService => "Gbuy",
            Symbol::SellAccepted => "accsell",
            Symbol::BuyAccepted => "accbuy",
            Symbol::SellActive => "usell",
            Symbol::BuyActive => "ubuy",
            Symbol::Export => "Pe",
            Symbol::Import => "Pi",
            Symbol::ExportOn => "onE",
            Symbol::BaselineExport => "Phe",
            Symbol::BaselineImport => "Phi",
            Symbol::BaselineExportOn => "onHE",
            Symbol::RecExchange => "Prec",
            Symbol::RecBaseline => "Phrec",
            Symbol::SellError => "Esell",
            Symbol::BuyError => "Ebuy",
            Symbol::BaselineUp => "wup",
            Symbol::BaselineDown => "wdn",
            Symbol::ReserveUp => "vup",
            Symbol::ReserveDown => "vdn",
            Symbol::Charge => "Pc",
            Symbol::Discharge => "Pd",
            Symbol::ChargeOn => "onC",
            Symbol::BessBaseline => "Phb",
            Symbol::Shared => "Psh",
            Symbol::SellRevenueProduct => "zsell",
            Symbol::BuyRevenueProduct => "zbuy",
        }
    }

    /// Binaries chosen before uncertainty is revealed.
    pub fn is_first_stage(self) -> bool {
        matches!(
            self,
            Symbol::SellSubmitted
                | Symbol::BuySubmitted
                | Symbol::SellPriceChoice
                | Symbol::BuyPriceChoice
                | Symbol::SellAccepted
                | Symbol::BuyAccepted
                | Symbol::SellActive
                | Symbol::BuyActive
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SymbolKey {
    pub symbol: Symbol,
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j: Option<usize>,
}

impl SymbolKey {
    pub fn hour(symbol: Symbol, k: usize) -> Self {
        Self { symbol, k, s: None, l: None, j: None }
    }

    pub fn candidate(symbol: Symbol, k: usize, j: usize) -> Self {
        Self { symbol, k, s: None, l: None, j: Some(j) }
    }

    pub fn price(symbol: Symbol, k: usize, s: usize) -> Self {
        Self { symbol, k, s: Some(s), l: None, j: None }
    }

    pub fn path(symbol: Symbol, k: usize, s: usize, l: usize) -> Self {
        Self { symbol, k, s: Some(s), l: Some(l), j: None }
    }

    pub fn name(&self) -> String {
        let mut n = format!("{}_k{}", self.symbol.prefix(), self.k);
        if let Some(j) = self.j {
            n.push_str(&format!("_j{j}"));
        }
        if let Some(s) = self.s {
            n.push_str(&format!("_s{s}"));
        }
        if let Some(l) = self.l {
            n.push_str(&format!("_l{l}"));
        }
        n
    }
}

impl fmt::Display for SymbolKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// A solver-agnostic mixed-integer linear program (maximisation).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MilpInstance {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Objective,
    keys: Vec<Option<SymbolKey>>,
    index: HashMap<SymbolKey, VarId>,
}

impl MilpInstance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, name: impl Into<String>, kind: VarKind, lower: f64, upper: f64) -> VarId {
        let (lower, upper) = match kind {
            VarKind::Binary => (lower.max(0.0), upper.min(1.0)),
            VarKind::Continuous => (lower, upper),
        };
        self.variables.push(Variable {
            name: name.into(),
            kind,
            lower,
            upper,
        });
        self.keys.push(None);
        VarId(self.variables.len() - 1)
    }

    /// Declares the model quantity `key`; panics if it already exists.
    pub fn add_symbol(&mut self, key: SymbolKey, kind: VarKind, lower: f64, upper: f64) -> VarId {
        assert!(!self.index.contains_key(&key), "duplicate symbol {key}");
        let id = self.add_variable(key.name(), kind, lower, upper);
        self.keys[id.0] = Some(key);
        self.index.insert(key, id);
        id
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) {
        debug_assert!(terms.iter().all(|(v, _)| v.0 < self.variables.len()));
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            sense,
            rhs,
        });
    }

    pub fn lookup(&self, key: &SymbolKey) -> Option<VarId> {
        self.index.get(key).copied()
    }

    /// Panics when `key` is not declared.
    pub fn var(&self, key: SymbolKey) -> VarId {
        self.lookup(&key)
            .unwrap_or_else(|| panic!("symbol {key} not declared"))
    }

    pub fn key(&self, id: VarId) -> Option<&SymbolKey> {
        self.keys[id.0].as_ref()
    }

    pub fn keys(&self) -> impl Iterator<Item = (VarId, &SymbolKey)> {
        self.keys
            .iter()
            .enumerate()
            .filter_map(|(i, k)| k.as_ref().map(|k| (VarId(i), k)))
    }

    pub fn binary_count(&self) -> usize {
        self.variables
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .count()
    }

    pub fn constraint(&self, name: &str) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.name == name)
    }

    pub fn constraints_with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a Constraint> + 'a {
        self.constraints
            .iter()
            .filter(move |c| c.name.starts_with(prefix))
    }

    pub fn set_bounds(&mut self, id: VarId, lower: f64, upper: f64) {
        self.variables[id.0].lower = lower;
        self.variables[id.0].upper = upper;
    }

    pub fn fix(&mut self, id: VarId, value: f64) {
        self.set_bounds(id, value, value);
    }

    /// JSON map from variable name to its model quantity.
    pub fn symbol_sidecar(&self) -> String {
        let mut map = serde_json::Map::new();
        for (id, key) in self.keys() {
            map.insert(
                self.variables[id.0].name.clone(),
                serde_json::to_value(key).expect("keys serialize"),
            );
        }
        serde_json::to_string_pretty(&serde_json::Value::Object(map)).expect("sidecar serializes")
    }
}
