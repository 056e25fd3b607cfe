//! The iteration-space query Φ and the body query Ψ for one pair of
//! corresponding statements.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{encode_body, final_value, loop_nest_of, BodyFormula, Cell, EncodeError, LoopHeader, Scalarizer};
use crate::analysis::LabeledProgram;
use crate::constraints::InputConstraints;
use crate::correspondence::{Segment, VariableMap};
use crate::frontend::{BinOp, Expr, Stmt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    Ref,
    Cand,
}

/// Ψ ≡ pre ∧ φ₁ ∧ φ₂ ⟹ post, over scalar symbols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Psi {
    pub pre: Expr,
    pub phi1: Expr,
    pub phi2: Expr,
    pub post: Expr,
}

impl Psi {
    pub fn formula(&self) -> Expr {
        let lhs = Expr::and(Expr::and(self.pre.clone(), self.phi1.clone()), self.phi2.clone());
        implies(lhs, self.post.clone())
    }
}

pub fn implies(a: Expr, b: Expr) -> Expr {
    match a {
        Expr::Bool(true) => b,
        a => Expr::bin(BinOp::Or, Expr::not(a), b),
    }
}

fn iff(a: Expr, b: Expr) -> Expr {
    Expr::bin(BinOp::And, implies(a.clone(), b.clone()), implies(b, a))
}

/// An array-bounds side condition of one candidate path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsCheck {
    /// Index of the candidate path.
    pub path: usize,
    pub access: Expr,
    /// Condition, in candidate names, under which the access is evaluated.
    pub guard: Expr,
    pub formula: Expr,
}

/// Everything needed to check one corresponding pair. Bodies are kept at
/// source level so that feedback can rewrite the candidate side and rebuild
/// Ψ.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquivalenceQuery {
    pub sigma_hat: VariableMap,
    pub ref_headers: Vec<LoopHeader>,
    pub cand_headers: Vec<LoopHeader>,
    pub ref_body: BodyFormula,
    pub cand_body: BodyFormula,
    /// Reference input constraints.
    pub constraints: Expr,
    /// σ̂ pairs of scalars: inputs and loop indices.
    pub scalar_pairs: Vec<(String, String)>,
    pub scalar_map: Scalarizer,
    /// The paired top-level statements.
    pub cand_stmt: Stmt,
    pub ref_stmt: Stmt,
}

fn top_level_before<'a>(lp: &'a LabeledProgram, s: &Stmt) -> &'a [Stmt] {
    let body = &lp.program.main().body;
    let k = body.iter().position(|t| t.loc == s.loc).unwrap_or(0);
    &body[..k]
}

fn nest(lp: &LabeledProgram, s: &Stmt) -> Result<(Vec<LoopHeader>, Vec<Stmt>), EncodeError> {
    if s.is_loop() {
        let (h, items) = loop_nest_of(lp, s, top_level_before(lp, s))?;
        Ok((h, items.to_vec()))
    } else {
        Ok((Vec::new(), vec![s.clone()]))
    }
}

/// One query per zipped statement pair of two corresponding segments. A
/// segment without loops is a single straight-line body.
pub fn build_queries(
    r: &LabeledProgram,
    rs: &Segment,
    c: &LabeledProgram,
    cs: &Segment,
    sigma: &VariableMap,
    constraints: &InputConstraints,
) -> Result<Vec<EquivalenceQuery>, EncodeError> {
    let straight = |s: &Segment| s.loops().next().is_none();
    let pairs: Vec<(Stmt, Stmt, Vec<Stmt>, Vec<Stmt>, Vec<LoopHeader>, Vec<LoopHeader>)> = if straight(rs) && straight(cs) {
        let (a, b) = (rs.stmts[0].clone(), cs.stmts[0].clone());
        vec![(a, b, rs.stmts.clone(), cs.stmts.clone(), Vec::new(), Vec::new())]
    } else {
        let mixed = |s: &Segment| s.stmts.iter().any(|t| !t.is_loop());
        if mixed(rs) || mixed(cs) || rs.stmts.len() != cs.stmts.len() {
            let at = cs.stmts.first().map(|s| s.loc).unwrap_or_default();
            return Err(EncodeError::EncodingFailed(at, "segments do not pair loop by loop".into()));
        }
        let mut out = Vec::new();
        for (a, b) in rs.stmts.iter().zip(&cs.stmts) {
            let (ha, ia) = nest(r, a)?;
            let (hb, ib) = nest(c, b)?;
            out.push((a.clone(), b.clone(), ia, ib, ha, hb));
        }
        out
    };
    let mut queries = Vec::new();
    for (a, b, ia, ib, ha, hb) in pairs {
        let ri: Vec<String> = ha.iter().map(|h| h.index.clone()).collect();
        let ci: Vec<String> = hb.iter().map(|h| h.index.clone()).collect();
        let sigma_hat = sigma.with_indices(&ri, &ci);
        let ref_body = encode_body(r, &ia, &ri.iter().cloned().collect())?;
        let cand_body = encode_body(c, &ib, &ci.iter().cloned().collect())?;
        let is_scalar = |lp: &LabeledProgram, n: &str| lp.vars.get(n).is_none_or(|t| t.dims.is_empty());
        let scalar_pairs = sigma_hat
            .pairs
            .iter()
            .filter(|(x, y)| is_scalar(r, x) && is_scalar(c, y))
            .map(|(x, y)| (x.clone(), y.clone()))
            .collect();
        let types = |lp: &LabeledProgram| lp.vars.iter().map(|(n, t)| (n.clone(), t.ty)).collect();
        queries.push(EquivalenceQuery {
            scalar_map: Scalarizer::new(&sigma_hat, types(r), types(c)),
            sigma_hat,
            ref_headers: ha,
            cand_headers: hb,
            ref_body,
            cand_body,
            constraints: constraints.conjunction(),
            scalar_pairs,
            cand_stmt: b,
            ref_stmt: a,
        });
    }
    Ok(queries)
}

impl EquivalenceQuery {
    fn body(&self, side: Side) -> &BodyFormula {
        match side {
            Side::Ref => &self.ref_body,
            Side::Cand => &self.cand_body,
        }
    }

    fn headers(&self, side: Side) -> &[LoopHeader] {
        match side {
            Side::Ref => &self.ref_headers,
            Side::Cand => &self.cand_headers,
        }
    }

    /// `cell` of `side` renamed into the other side's namespace; `None` when
    /// its variable has no counterpart.
    pub fn map_cell(&self, side: Side, cell: &Cell) -> Option<Cell> {
        let m = &self.sigma_hat;
        let f = |n: &str| -> Option<String> {
            match side {
                Side::Ref => m.get(n).map(str::to_string),
                Side::Cand => m.inverse(n).map(str::to_string),
            }
        };
        if let Some(n) = cell.name() {
            f(n)?;
        }
        Some(cell.rename(&f))
    }

    /// Whether a cell takes part in the comparison.
    pub fn relevant(&self, side: Side, cell: &Cell) -> bool {
        self.map_cell(side, cell).is_some()
    }

    /// Cells compared on `side`: its own writes plus the images of the other
    /// side's, deduplicated by scalar symbol.
    fn cells(&mut self, side: Side) -> Vec<Cell> {
        let other = match side {
            Side::Ref => Side::Cand,
            Side::Cand => Side::Ref,
        };
        let mut out: Vec<Cell> = self.body(side).cells().into_iter().collect();
        let extra: Vec<Cell> = self.body(other).cells().iter().filter_map(|c| self.map_cell(other, c)).collect();
        out.extend(extra);
        let mut seen = BTreeSet::new();
        out.retain(|c| {
            let Expr::Var(sym) = self.scalar_map.post(side, c) else { unreachable!() };
            seen.insert(sym)
        });
        out
    }

    fn corr(&mut self) -> Expr {
        let pairs = self.scalar_pairs.clone();
        let mut items = Vec::new();
        for (a, b) in pairs {
            let x = self.scalar_map.pre(Side::Ref, &Expr::var(a));
            let y = self.scalar_map.pre(Side::Cand, &Expr::var(b));
            items.push(Expr::bin(BinOp::Eq, x, y));
        }
        let k = self.constraints.clone();
        items.push(self.scalar_map.pre(Side::Ref, &k));
        Expr::and_all(items)
    }

    /// Facts that hold whenever `side`'s body runs: correspondence, input
    /// constraints, its iteration space and array consistency.
    pub fn context(&mut self, side: Side) -> Expr {
        let corr = self.corr();
        let iter = self.iter(side);
        Expr::and_all([corr, iter, self.consistency()])
    }

    fn consistency(&self) -> Expr {
        Expr::and_all(self.scalar_map.consistency())
    }

    pub fn iter(&mut self, side: Side) -> Expr {
        let f = Expr::and_all(self.headers(side).iter().map(|h| h.iter()));
        self.scalar_map.pre(side, &f)
    }

    /// Guard of the `k`-th path of `side`, scalarized.
    pub fn guard(&mut self, side: Side, k: usize) -> Expr {
        let g = self.body(side).stmts[k].guard.clone();
        self.scalar_map.pre(side, &g)
    }

    /// Paths of `side` that change a compared cell.
    pub fn active_paths(&self, side: Side) -> Vec<usize> {
        let b = self.body(side);
        (0..b.stmts.len()).filter(|&k| b.stmts[k].effects.iter().any(|e| self.relevant(side, &e.cell))).collect()
    }

    fn guards(&mut self, side: Side) -> Expr {
        let ks = self.active_paths(side);
        let gs: Vec<Expr> = ks.into_iter().map(|k| self.guard(side, k)).collect();
        Expr::or_all(gs)
    }

    /// Φ ≡ corr ⟹ (iter_r ∧ guards_r ⟺ iter_c ∧ guards_c). Straight-line
    /// pairs give `true`.
    pub fn phi(&mut self) -> Expr {
        if self.ref_headers.is_empty() && self.cand_headers.is_empty() {
            return Expr::Bool(true);
        }
        let corr = self.corr();
        let l = Expr::and(self.iter(Side::Ref), self.guards(Side::Ref));
        let r = Expr::and(self.iter(Side::Cand), self.guards(Side::Cand));
        implies(Expr::and(corr, self.consistency()), iff(l, r))
    }

    /// Iteration spaces alone.
    pub fn iter_only(&mut self) -> Expr {
        if self.ref_headers.is_empty() && self.cand_headers.is_empty() {
            return Expr::Bool(true);
        }
        let corr = self.corr();
        let (l, r) = (self.iter(Side::Ref), self.iter(Side::Cand));
        implies(Expr::and(corr, self.consistency()), iff(l, r))
    }

    fn phi_side(&mut self, side: Side, cells: &[Cell]) -> Expr {
        let mut out = Vec::new();
        for k in 0..self.body(side).stmts.len() {
            let g = self.guard(side, k);
            let effects = self.body(side).stmts[k].effects.clone();
            let mut eqs = Vec::new();
            for c in cells {
                let post = self.scalar_map.post(side, c);
                let val = self.scalar_map.pre(side, &final_value(&effects, c));
                eqs.push(Expr::bin(BinOp::Eq, post, val));
            }
            out.push(implies(g, Expr::and_all(eqs)));
        }
        Expr::and_all(out)
    }

    /// Ψ for the current bodies.
    pub fn psi(&mut self) -> Psi {
        let rc = self.cells(Side::Ref);
        let cc = self.cells(Side::Cand);
        let phi1 = self.phi_side(Side::Ref, &rc);
        let phi2 = self.phi_side(Side::Cand, &cc);
        let mut post = Vec::new();
        for c in &rc {
            if let Some(m) = self.map_cell(Side::Ref, c) {
                let a = self.scalar_map.post(Side::Ref, c);
                let b = self.scalar_map.post(Side::Cand, &m);
                post.push(Expr::bin(BinOp::Eq, a, b));
            }
        }
        let corr = self.corr();
        let iter = self.iter(Side::Ref);
        let pre = Expr::and_all([corr, iter, self.consistency()]);
        Psi { pre, phi1, phi2, post: Expr::and_all(post) }
    }

    /// Bounds side conditions for every candidate array access under
    /// `dims` (candidate names; arrays missing from `dims` are skipped).
    pub fn bounds_checks(&mut self, dims: &BTreeMap<String, Vec<Expr>>) -> Vec<BoundsCheck> {
        let mut raw = Vec::new();
        for (k, p) in self.cand_body.stmts.iter().enumerate() {
            // A guard is evaluated whether or not its path is taken, so its
            // accesses are checked under their short-circuit prefix alone.
            let mut acc = Vec::new();
            accesses(&p.guard, &Expr::Bool(true), &mut acc);
            let in_guard = acc.len();
            for e in &p.effects {
                accesses(&e.value, &p.guard, &mut acc);
                if let Cell::Elem(a, idx) = &e.cell {
                    for i in idx {
                        accesses(i, &p.guard, &mut acc);
                    }
                    acc.push((p.guard.clone(), Expr::Index(a.clone(), idx.clone())));
                }
            }
            for (n, (g, access)) in acc.into_iter().enumerate() {
                let Expr::Index(a, idx) = &access else { continue };
                let Some(ds) = dims.get(a) else { continue };
                if ds.len() != idx.len() {
                    continue;
                }
                let inb = Expr::and_all(idx.iter().zip(ds).map(|(i, d)| {
                    Expr::bin(
                        BinOp::And,
                        Expr::bin(BinOp::Le, Expr::Int(0), i.clone()),
                        Expr::bin(BinOp::Lt, i.clone(), d.clone()),
                    )
                }));
                let g = if n < in_guard { g } else { Expr::and(p.guard.clone(), g) };
                raw.push((k, access.clone(), g, inb));
            }
        }
        // One check per access and path, under every condition that reaches it.
        let mut merged: Vec<(usize, Expr, Expr, Expr)> = Vec::new();
        for (k, a, g, inb) in raw {
            match merged.iter_mut().find(|(k2, a2, _, _)| *k2 == k && *a2 == a) {
                Some(m) => {
                    if m.2 != g {
                        m.2 = Expr::or_all([m.2.clone(), g]);
                    }
                }
                None => merged.push((k, a, g, inb)),
            }
        }
        let raw = merged;
        let corr = self.corr();
        let iter = self.iter(Side::Cand);
        let mut scal = Vec::new();
        for (path, access, g, inb) in raw {
            let sg = self.scalar_map.pre(Side::Cand, &g);
            let inb = self.scalar_map.pre(Side::Cand, &inb);
            scal.push((path, access, g, sg, inb));
        }
        // Consistency last, once every access has its symbol.
        let ctx = Expr::and_all([corr, iter, self.consistency()]);
        scal.into_iter()
            .map(|(path, access, guard, g, inb)| BoundsCheck {
                path,
                access,
                guard,
                formula: implies(Expr::and(ctx.clone(), g), inb),
            })
            .collect()
    }
}

/// Array accesses of `e` with the guard under which each is evaluated.
fn accesses(e: &Expr, g: &Expr, out: &mut Vec<(Expr, Expr)>) {
    match e {
        Expr::Index(_, idx) => {
            for i in idx {
                accesses(i, g, out);
            }
            out.push((g.clone(), e.clone()));
        }
        Expr::Ternary(c, a, b) => {
            accesses(c, g, out);
            accesses(a, &Expr::and(g.clone(), (**c).clone()), out);
            accesses(b, &Expr::and(g.clone(), Expr::not((**c).clone())), out);
        }
        Expr::Binary(BinOp::And, l, r) => {
            accesses(l, g, out);
            accesses(r, &Expr::and(g.clone(), (**l).clone()), out);
        }
        Expr::Binary(BinOp::Or, l, r) => {
            accesses(l, g, out);
            accesses(r, &Expr::and(g.clone(), Expr::not((**l).clone())), out);
        }
        Expr::Binary(_, l, r) => {
            accesses(l, g, out);
            accesses(r, g, out);
        }
        Expr::Unary(_, x) => accesses(x, g, out),
        Expr::Call(_, args) => args.iter().for_each(|a| accesses(a, g, out)),
        Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) => {}
    }
}
