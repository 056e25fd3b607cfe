//! Guarded-path encoding of loop bodies, scalarization of array accesses, and
//! the iteration-space and body queries for a pair of corresponding
//! statements.

mod body;
mod query;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::frontend::{expr_to_compact, BinOp, Expr, Location, ScalarType};

pub use body::{encode_body, loop_header, loop_nest_of, LoopHeader, MAX_PATHS};
pub use query::{build_queries, implies, BoundsCheck, EquivalenceQuery, Psi, Side};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
pub enum EncodeError {
    #[error("cannot encode statement at {0}: {1}")]
    EncodingFailed(Location, String),
}

/// A storage location written by a body.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Cell {
    Elem(String, Vec<Expr>),
    Scalar(String),
    /// The k-th value printed by the body.
    Out(usize),
}

impl Cell {
    pub fn name(&self) -> Option<&str> {
        match self {
            Cell::Elem(n, _) | Cell::Scalar(n) => Some(n),
            Cell::Out(_) => None,
        }
    }

    /// Pre-state read of this cell.
    pub fn to_expr(&self) -> Expr {
        match self {
            Cell::Elem(n, idx) => Expr::Index(n.clone(), idx.clone()),
            Cell::Scalar(n) => Expr::var(n.clone()),
            Cell::Out(k) => Expr::var(format!("$out{k}")),
        }
    }

    pub fn rename(&self, f: &impl Fn(&str) -> Option<String>) -> Cell {
        match self {
            Cell::Elem(n, idx) => Cell::Elem(f(n).unwrap_or_else(|| n.clone()), idx.iter().map(|e| e.rename(f)).collect()),
            Cell::Scalar(n) => Cell::Scalar(f(n).unwrap_or_else(|| n.clone())),
            Cell::Out(k) => Cell::Out(*k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EffectKind {
    Assign,
    Read,
    Print { format: String },
}

/// `cell := value`, with `value` over the iteration's pre-state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Effect {
    pub cell: Cell,
    pub value: Expr,
    pub kind: EffectKind,
}

/// One path through a body: the guard under which it runs and its effects in
/// order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuardedStmt {
    pub guard: Expr,
    pub effects: Vec<Effect>,
    /// Source statements contributing effects.
    pub locs: Vec<Location>,
}

/// Pairwise-disjoint, jointly exhaustive guarded paths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BodyFormula {
    pub stmts: Vec<GuardedStmt>,
}

impl BodyFormula {
    pub fn cells(&self) -> BTreeSet<Cell> {
        self.stmts.iter().flat_map(|g| g.effects.iter().map(|e| e.cell.clone())).collect()
    }

    /// Disjunction of the guards of paths that change something.
    pub fn active_guard(&self) -> Expr {
        Expr::or_all(self.stmts.iter().filter(|g| !g.effects.is_empty()).map(|g| g.guard.clone()))
    }

    pub fn rename(&self, f: &impl Fn(&str) -> Option<String>) -> BodyFormula {
        BodyFormula {
            stmts: self
                .stmts
                .iter()
                .map(|g| GuardedStmt {
                    guard: g.guard.rename(f),
                    effects: g.effects.iter().map(|e| rename_effect(e, f)).collect(),
                    locs: g.locs.clone(),
                })
                .collect(),
        }
    }
}

pub fn rename_effect(e: &Effect, f: &impl Fn(&str) -> Option<String>) -> Effect {
    Effect { cell: e.cell.rename(f), value: e.value.rename(f), kind: e.kind.clone() }
}

/// Value of `cell` after running `effects` from the pre-state, with aliasing
/// resolved by index comparison.
pub fn final_value(effects: &[Effect], cell: &Cell) -> Expr {
    let mut acc = cell.to_expr();
    for e in effects {
        match (&e.cell, cell) {
            (Cell::Elem(a, wi), Cell::Elem(b, ri)) if a == b && wi.len() == ri.len() => {
                if wi == ri {
                    acc = e.value.clone();
                } else if e.value != acc {
                    let same = Expr::and_all(wi.iter().zip(ri).map(|(w, r)| Expr::bin(BinOp::Eq, r.clone(), w.clone())));
                    acc = Expr::ite(same, e.value.clone(), acc);
                }
            }
            (Cell::Scalar(a), Cell::Scalar(b)) if a == b => acc = e.value.clone(),
            (Cell::Out(a), Cell::Out(b)) if a == b => acc = e.value.clone(),
            _ => {}
        }
    }
    acc
}

fn flatten(op: BinOp, e: &Expr, out: &mut Vec<Expr>) {
    match e {
        Expr::Binary(o, l, r) if *o == op => {
            flatten(op, l, out);
            flatten(op, r, out);
        }
        other => out.push(other.clone()),
    }
}

/// Sort operands of `+` and `*` chains by a fixed order. `key` maps a name to
/// its rank token; giving a name and its image under σ the same token makes
/// the order σ-consistent.
pub fn normalize_commutative(e: &Expr, key: &impl Fn(&str) -> String) -> Expr {
    e.map(&mut |x| match x {
        Expr::Binary(op @ (BinOp::Add | BinOp::Mul), _, _) => {
            let mut items = Vec::new();
            flatten(op, &x, &mut items);
            items.sort_by_cached_key(|it| {
                // Constants last, so `i + 1` stays readable.
                let is_const = matches!(it, Expr::Int(_));
                (is_const, expr_to_compact(&it.rename(&|n| Some(key(n)))))
            });
            items.into_iter().reduce(|a, b| Expr::bin(op, a, b)).expect("nonempty chain")
        }
        other => other,
    })
}

/// Information about one scalar symbol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Symbol {
    pub side: Option<Side>,
    /// Source-level expression the symbol stands for (`dp[i-1][j]`, `n`).
    pub source: Expr,
    /// Scalarized indices, for array accesses.
    pub idx: Vec<Expr>,
    /// Array name in the σ-shared class, for array accesses.
    pub class: Option<String>,
    /// Access text in the reference's namespace; equal keys on the two
    /// sides denote the same element.
    pub key: String,
    pub post: bool,
    pub boolean: bool,
}

/// Replaces array accesses and variables by scalar symbols, remembering what
/// each symbol stands for.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Scalarizer {
    /// Candidate name -> reference name.
    pub inverse: BTreeMap<String, String>,
    pub ref_types: BTreeMap<String, ScalarType>,
    pub cand_types: BTreeMap<String, ScalarType>,
    pub table: BTreeMap<String, Symbol>,
}

impl Scalarizer {
    pub fn new(
        sigma_hat: &crate::correspondence::VariableMap,
        ref_types: BTreeMap<String, ScalarType>,
        cand_types: BTreeMap<String, ScalarType>,
    ) -> Scalarizer {
        let inverse = sigma_hat.pairs.iter().map(|(a, b)| (b.clone(), a.clone())).collect();
        Scalarizer { inverse, ref_types, cand_types, table: BTreeMap::new() }
    }

    fn prefix(side: Side) -> &'static str {
        match side {
            Side::Ref => "r!",
            Side::Cand => "c!",
        }
    }

    /// σ-shared class token for a name on `side`.
    fn class(&self, side: Side, name: &str) -> String {
        match side {
            Side::Ref => name.to_string(),
            Side::Cand => self.inverse.get(name).cloned().unwrap_or_else(|| format!("c!{name}")),
        }
    }

    fn is_bool(&self, side: Side, name: &str) -> bool {
        let t = match side {
            Side::Ref => self.ref_types.get(name),
            Side::Cand => self.cand_types.get(name),
        };
        t == Some(&ScalarType::Bool)
    }

    pub fn normalize(&self, side: Side, e: &Expr) -> Expr {
        normalize_commutative(e, &|n| self.class(side, n))
    }

    fn access_text(&self, side: Side, name: &str, idx: &[Expr], post: bool) -> String {
        let mut s = format!("{}{}{}", Self::prefix(side), name, if post { "'" } else { "" });
        for i in idx {
            s.push_str(&format!("[{}]", expr_to_compact(&self.normalize(side, i))));
        }
        s
    }

    /// Pre-state scalarization of an expression on `side`.
    pub fn pre(&mut self, side: Side, e: &Expr) -> Expr {
        match e {
            Expr::Var(v) if v.starts_with('$') => {
                self.table.entry(v.clone()).or_insert_with(|| Symbol {
                    side: None,
                    source: e.clone(),
                    idx: Vec::new(),
                    class: None,
                    key: String::new(),
                    post: false,
                    boolean: false,
                });
                e.clone()
            }
            Expr::Var(v) => {
                let sym = format!("{}{}", Self::prefix(side), v);
                let boolean = self.is_bool(side, v);
                self.table.entry(sym.clone()).or_insert_with(|| Symbol {
                    side: Some(side),
                    source: e.clone(),
                    idx: Vec::new(),
                    class: None,
                    key: String::new(),
                    post: false,
                    boolean,
                });
                Expr::Var(sym)
            }
            Expr::Index(a, idx) => {
                let sidx: Vec<Expr> = idx.iter().map(|i| self.pre(side, i)).collect();
                let sym = self.access_text(side, a, idx, false);
                let class = self.class(side, a);
                let key = idx.iter().fold(class.clone(), |mut k, i| {
                    let shared = self.normalize(side, i).rename(&|n| Some(self.class(side, n)));
                    k.push_str(&format!("[{}]", expr_to_compact(&shared)));
                    k
                });
                let boolean = self.is_bool(side, a);
                self.table.entry(sym.clone()).or_insert_with(|| Symbol {
                    side: Some(side),
                    source: e.clone(),
                    idx: sidx,
                    class: Some(class),
                    key,
                    post: false,
                    boolean,
                });
                Expr::Var(sym)
            }
            Expr::Int(_) | Expr::Bool(_) => e.clone(),
            Expr::Binary(op, l, r) => Expr::bin(*op, self.pre(side, l), self.pre(side, r)),
            Expr::Unary(op, x) => Expr::Unary(*op, Box::new(self.pre(side, x))),
            Expr::Ternary(c, a, b) => Expr::ite(self.pre(side, c), self.pre(side, a), self.pre(side, b)),
            Expr::Call(..) => {
                // Calls are inlined before encoding; a leftover one is opaque.
                let sym = format!("{}{}", Self::prefix(side), expr_to_compact(e));
                self.table.entry(sym.clone()).or_insert_with(|| Symbol {
                    side: Some(side),
                    source: e.clone(),
                    idx: Vec::new(),
                    class: None,
                    key: String::new(),
                    post: false,
                    boolean: false,
                });
                Expr::Var(sym)
            }
        }
    }

    /// Post-state symbol of a written cell.
    pub fn post(&mut self, side: Side, cell: &Cell) -> Expr {
        let (sym, source, idx, boolean) = match cell {
            Cell::Elem(a, idx) => (
                self.access_text(side, a, idx, true),
                cell.to_expr(),
                idx.iter().map(|i| self.pre(side, i)).collect(),
                self.is_bool(side, a),
            ),
            Cell::Scalar(v) => (format!("{}{}'", Self::prefix(side), v), cell.to_expr(), Vec::new(), self.is_bool(side, v)),
            Cell::Out(k) => (format!("{}$out{}'", Self::prefix(side), k), cell.to_expr(), Vec::new(), false),
        };
        self.table.entry(sym.clone()).or_insert_with(|| Symbol {
            side: Some(side),
            source,
            idx,
            class: None,
            key: String::new(),
            post: true,
            boolean,
        });
        Expr::Var(sym)
    }

    /// Functional consistency of pre-state accesses to σ-related arrays
    /// (equal indices give equal values), plus 0/1 domains of boolean
    /// symbols.
    pub fn consistency(&self) -> Vec<Expr> {
        let mut out = Vec::new();
        let accesses: Vec<(&String, &Symbol)> =
            self.table.iter().filter(|(_, s)| s.class.is_some() && !s.post).collect();
        for (k, (sa, a)) in accesses.iter().enumerate() {
            for (sb, b) in accesses.iter().skip(k + 1) {
                if a.class != b.class || a.idx.len() != b.idx.len() {
                    continue;
                }
                let eq_vals = Expr::bin(BinOp::Eq, Expr::var(sa.as_str()), Expr::var(sb.as_str()));
                if a.key == b.key {
                    out.push(eq_vals);
                    continue;
                }
                let same_idx = Expr::and_all(a.idx.iter().zip(&b.idx).map(|(x, y)| Expr::bin(BinOp::Eq, x.clone(), y.clone())));
                out.push(Expr::bin(BinOp::Or, Expr::not(same_idx), eq_vals));
            }
        }
        for (s, info) in &self.table {
            if info.boolean {
                let v = Expr::var(s.as_str());
                out.push(Expr::bin(
                    BinOp::And,
                    Expr::bin(BinOp::Ge, v.clone(), Expr::Int(0)),
                    Expr::bin(BinOp::Le, v, Expr::Int(1)),
                ));
            }
        }
        out
    }

    /// Replaces scalar symbols by the source expressions they stand for.
    pub fn unscalarize(&self, e: &Expr) -> Expr {
        e.map(&mut |x| match x {
            Expr::Var(v) => match self.table.get(&v) {
                Some(s) if !s.post => s.source.clone(),
                _ => Expr::Var(v),
            },
            other => other,
        })
    }

    /// Source expression for a scalar symbol, if known.
    pub fn source(&self, sym: &str) -> Option<&Expr> {
        self.table.get(sym).map(|s| &s.source)
    }
}

#[cfg(test)]
mod tests;
