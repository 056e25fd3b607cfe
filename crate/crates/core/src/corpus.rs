//! Hand-written correct solutions and a deterministic mutation corpus built
//! from them, for end-to-end evaluation.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::analysis::{analyze, Label, LabeledProgram};
use crate::constraints::InputConstraints;
use crate::frontend::{load, render_program, BinOp, Declarator, Expr, Program, Stmt, StmtKind};
use crate::oracle;
use crate::solver::fold;

pub struct Problem {
    pub name: &'static str,
    pub constraints: &'static str,
    pub reference: &'static str,
    /// `(id, source)`, the reference included.
    pub solutions: &'static [(&'static str, &'static str)],
}

const TRIANGLE_REF: &str = include_str!("../corpus/triangle_ref.c");
const ROBBER_REF: &str = include_str!("../corpus/robber_ref.c");
const GRID_REF: &str = include_str!("../corpus/grid_ref.c");
const LCS_REF: &str = include_str!("../corpus/lcs_ref.c");

pub fn problems() -> Vec<Problem> {
    vec![
        Problem {
            name: "triangle",
            constraints: "1 <= n && n <= 100",
            reference: TRIANGLE_REF,
            solutions: &[("triangle_ref", TRIANGLE_REF), ("triangle_alt", include_str!("../corpus/triangle_alt.c"))],
        },
        Problem {
            name: "robber",
            constraints: "1 <= n && n <= 100",
            reference: ROBBER_REF,
            solutions: &[("robber_ref", ROBBER_REF), ("robber_alt", include_str!("../corpus/robber_alt.c"))],
        },
        Problem {
            name: "grid",
            constraints: "1 <= n && n <= 50\n1 <= m && m <= 50",
            reference: GRID_REF,
            solutions: &[("grid_ref", GRID_REF), ("grid_alt", include_str!("../corpus/grid_alt.c"))],
        },
        Problem {
            name: "lcs",
            constraints: "1 <= n && n <= 50\n1 <= m && m <= 50",
            reference: LCS_REF,
            solutions: &[("lcs_ref", LCS_REF), ("lcs_alt", include_str!("../corpus/lcs_alt.c"))],
        },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MutationKind {
    WrongGuard,
    IndexOffByOne,
    MissingCase,
    WrongLoopBound,
    HardcodedDimension,
    SpuriousInit,
    WrongOutputBound,
}

impl MutationKind {
    pub const ALL: [MutationKind; 7] = [
        MutationKind::WrongGuard,
        MutationKind::IndexOffByOne,
        MutationKind::MissingCase,
        MutationKind::WrongLoopBound,
        MutationKind::HardcodedDimension,
        MutationKind::SpuriousInit,
        MutationKind::WrongOutputBound,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mutant {
    pub id: String,
    pub problem: String,
    pub solution: String,
    pub kind: MutationKind,
    pub source: String,
}

/// Literal used for hard-coded dimensions; above every constraint bound.
pub const HARD_DIM: i64 = 101;

fn neighbour(op: BinOp) -> Option<BinOp> {
    Some(match op {
        BinOp::Lt => BinOp::Le,
        BinOp::Le => BinOp::Lt,
        BinOp::Gt => BinOp::Ge,
        BinOp::Ge => BinOp::Gt,
        BinOp::Eq => BinOp::Ne,
        BinOp::Ne => BinOp::Eq,
        _ => return None,
    })
}

fn plus(e: &Expr, k: i64) -> Expr {
    fold(&Expr::bin(BinOp::Add, e.clone(), Expr::Int(k)))
}

/// Copies of `e` with the `n`-th node (pre-order) rewritten by `f`, for every
/// node where `f` applies.
fn node_variants(e: &Expr, f: &dyn Fn(&Expr) -> Vec<Expr>) -> Vec<Expr> {
    let mut count = 0;
    e.walk(&mut |_| count += 1);
    let mut out = Vec::new();
    for target in 0..count {
        let mut at = 0;
        let mut found = Vec::new();
        e.walk(&mut |x| {
            if at == target {
                found = f(x);
            }
            at += 1;
        });
        for replacement in found {
            out.push(replace_nth(e, target, &replacement));
        }
    }
    out
}

fn replace_nth(e: &Expr, n: usize, with: &Expr) -> Expr {
    fn go(e: &Expr, n: usize, at: &mut usize, with: &Expr) -> Expr {
        let me = *at;
        *at += 1;
        if me == n {
            // Skip the subtree's nodes so numbering stays pre-order.
            let mut size = 0;
            e.walk(&mut |_| size += 1);
            *at += size - 1;
            return with.clone();
        }
        match e {
            Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) => e.clone(),
            Expr::Index(a, idx) => Expr::Index(a.clone(), idx.iter().map(|x| go(x, n, at, with)).collect()),
            Expr::Call(f, args) => Expr::Call(f.clone(), args.iter().map(|x| go(x, n, at, with)).collect()),
            Expr::Binary(op, l, r) => {
                let l = go(l, n, at, with);
                Expr::bin(*op, l, go(r, n, at, with))
            }
            Expr::Unary(op, x) => Expr::Unary(*op, Box::new(go(x, n, at, with))),
            Expr::Ternary(c, t, f) => {
                let c = go(c, n, at, with);
                let t = go(t, n, at, with);
                Expr::ite(c, t, go(f, n, at, with))
            }
        }
    }
    go(e, n, &mut 0, with)
}

fn comparison_variants(x: &Expr) -> Vec<Expr> {
    match x {
        Expr::Binary(op, l, r) if op.is_comparison() => {
            let mut v = Vec::new();
            if let Some(o) = neighbour(*op) {
                v.push(Expr::bin(o, (**l).clone(), (**r).clone()));
            }
            v.push(Expr::bin(*op, (**l).clone(), plus(r, 1)));
            v
        }
        _ => Vec::new(),
    }
}

fn index_variants(x: &Expr) -> Vec<Expr> {
    match x {
        Expr::Index(a, idx) => {
            let mut v = Vec::new();
            for k in 0..idx.len() {
                for d in [1, -1] {
                    let mut j = idx.clone();
                    j[k] = plus(&j[k], d);
                    v.push(Expr::Index(a.clone(), j));
                }
            }
            v
        }
        _ => Vec::new(),
    }
}

fn ternary_arms(x: &Expr) -> Vec<Expr> {
    match x {
        Expr::Ternary(_, t, f) => vec![(**t).clone(), (**f).clone()],
        _ => Vec::new(),
    }
}

fn with_stmt(p: &Program, ord: u32, f: &dyn Fn(&Stmt) -> Vec<Stmt>) -> Program {
    fn go(items: &mut Vec<Stmt>, ord: u32, f: &dyn Fn(&Stmt) -> Vec<Stmt>) -> bool {
        if let Some(k) = items.iter().position(|s| s.loc.ordinal == ord) {
            let new = f(&items[k]);
            items.splice(k..=k, new);
            return true;
        }
        for s in items.iter_mut() {
            if go_stmt(s, ord, f) {
                return true;
            }
        }
        false
    }
    fn go_stmt(s: &mut Stmt, ord: u32, f: &dyn Fn(&Stmt) -> Vec<Stmt>) -> bool {
        match &mut s.kind {
            StmtKind::Block(items) => go(items, ord, f),
            _ => {
                for c in s.children_mut() {
                    if c.loc.ordinal == ord {
                        let mut new = f(c);
                        *c = match new.len() {
                            1 => new.remove(0),
                            _ => Stmt::at(c.loc, StmtKind::Block(new)),
                        };
                        return true;
                    }
                    if go_stmt(c, ord, f) {
                        return true;
                    }
                }
                false
            }
        }
    }
    let mut out = p.clone();
    go(&mut out.main_mut().body, ord, f);
    out
}

fn rewrite_exprs(s: &Stmt, e: &Expr, with: Expr) -> Stmt {
    let mut s = s.clone();
    let swap = |x: &mut Expr| {
        if x == e {
            *x = with.clone();
        }
    };
    match &mut s.kind {
        StmtKind::Assign { value, .. } => swap(value),
        StmtKind::If { cond, .. } => swap(cond),
        StmtKind::For { cond: Some(c), .. } => swap(c),
        StmtKind::Write { args, .. } => args.iter_mut().for_each(swap),
        _ => {}
    }
    s
}

/// Top-level statements of `main` carrying `label`, with everything inside.
fn region(lp: &LabeledProgram, label: Label) -> Vec<&Stmt> {
    let mut out = Vec::new();
    for s in &lp.program.main().body {
        if lp.labels_within(s).contains(&label) {
            s.walk(&mut |t| out.push(t));
        }
    }
    out
}

fn expr_mutants(p: &Program, s: &Stmt, e: &Expr, f: &dyn Fn(&Expr) -> Vec<Expr>) -> Vec<Program> {
    node_variants(e, f)
        .into_iter()
        .map(|v| with_stmt(p, s.loc.ordinal, &|t| vec![rewrite_exprs(t, e, v.clone())]))
        .collect()
}

fn loop_bound_mutants(p: &Program, s: &Stmt) -> Vec<Program> {
    let StmtKind::For { cond: Some(c), .. } = &s.kind else { return Vec::new() };
    let Expr::Binary(op, l, r) = c else { return Vec::new() };
    let mut out = Vec::new();
    if let Some(o) = neighbour(*op) {
        out.push(Expr::bin(o, (**l).clone(), (**r).clone()));
    }
    out.push(Expr::bin(*op, (**l).clone(), plus(r, -1)));
    out.into_iter().map(|v| with_stmt(p, s.loc.ordinal, &|t| vec![rewrite_exprs(t, c, v.clone())])).collect()
}

/// All syntactic mutants of one solution, by kind, in a fixed order.
pub fn mutate(src: &str) -> Vec<(MutationKind, Program)> {
    let Ok(p) = load(src) else { return Vec::new() };
    let Ok(lp) = analyze(&p) else { return Vec::new() };
    let mut out = Vec::new();
    let update = region(&lp, Label::Update);
    let is_update_assign = |s: &Stmt| lp.label(s.loc) == Some(Label::Update) && matches!(s.kind, StmtKind::Assign { .. });

    for s in &update {
        match &s.kind {
            StmtKind::If { cond, then_branch, else_branch } => {
                for m in expr_mutants(&p, s, cond, &comparison_variants) {
                    out.push((MutationKind::WrongGuard, m));
                }
                let keep_else = else_branch.as_deref().cloned().map_or_else(Vec::new, |e| vec![e]);
                out.push((MutationKind::MissingCase, with_stmt(&p, s.loc.ordinal, &|_| keep_else.clone())));
                if else_branch.is_some() {
                    let then_only = Stmt::at(
                        s.loc,
                        StmtKind::If { cond: cond.clone(), then_branch: then_branch.clone(), else_branch: None },
                    );
                    out.push((MutationKind::MissingCase, with_stmt(&p, s.loc.ordinal, &|_| vec![then_only.clone()])));
                }
            }
            StmtKind::Assign { value, .. } if is_update_assign(s) || value.names().iter().any(|n| lp.is_dp(n)) => {
                let is_cmp = |x: &Expr| if matches!(x, Expr::Ternary(..)) { Vec::new() } else { comparison_variants(x) };
                for m in expr_mutants(&p, s, value, &is_cmp) {
                    out.push((MutationKind::WrongGuard, m));
                }
                for m in expr_mutants(&p, s, value, &ternary_arms) {
                    out.push((MutationKind::MissingCase, m));
                }
                if is_update_assign(s) {
                    for m in expr_mutants(&p, s, value, &index_variants) {
                        out.push((MutationKind::IndexOffByOne, m));
                    }
                }
            }
            StmtKind::For { .. } => {
                for m in loop_bound_mutants(&p, s) {
                    out.push((MutationKind::WrongLoopBound, m));
                }
            }
            _ => {}
        }
    }
    for s in region(&lp, Label::Init) {
        if s.is_loop() {
            for m in loop_bound_mutants(&p, s) {
                out.push((MutationKind::WrongLoopBound, m));
            }
        }
        if let (StmtKind::Assign { target, value }, Some(Label::Init)) = (&s.kind, lp.label(s.loc)) {
            let wrong = Stmt::at(s.loc, StmtKind::Assign { target: target.clone(), value: plus(value, 1) });
            out.push((MutationKind::SpuriousInit, with_stmt(&p, s.loc.ordinal, &|_| vec![wrong.clone()])));
            if let Some(last) = target.indices.last() {
                let mut extra = target.clone();
                *extra.indices.last_mut().unwrap() = plus(last, 1);
                let add = Stmt::new(StmtKind::Assign { target: extra, value: value.clone() });
                out.push((MutationKind::SpuriousInit, with_stmt(&p, s.loc.ordinal, &|t| vec![t.clone(), add.clone()])));
            }
        }
    }
    for s in region(&lp, Label::Output) {
        match &s.kind {
            StmtKind::For { .. } => {
                for m in loop_bound_mutants(&p, s) {
                    out.push((MutationKind::WrongOutputBound, m));
                }
            }
            StmtKind::Write { args, .. } => {
                for a in args {
                    for m in expr_mutants(&p, s, a, &index_variants) {
                        out.push((MutationKind::WrongOutputBound, m));
                    }
                }
            }
            StmtKind::Assign { value, .. } if lp.label(s.loc) == Some(Label::Output) => {
                for m in expr_mutants(&p, s, value, &index_variants) {
                    out.push((MutationKind::WrongOutputBound, m));
                }
            }
            _ => {}
        }
    }
    for s in &p.main().body {
        s.walk(&mut |t| {
            let StmtKind::Decl { ty, vars } = &t.kind else { return };
            for (k, d) in vars.iter().enumerate() {
                if d.dims.iter().any(|x| !x.names().is_empty()) {
                    let mut vars = vars.clone();
                    vars[k] = Declarator { dims: vec![Expr::Int(HARD_DIM); d.dims.len()], ..d.clone() };
                    let decl = Stmt::at(t.loc, StmtKind::Decl { ty: *ty, vars });
                    out.push((MutationKind::HardcodedDimension, with_stmt(&p, t.loc.ordinal, &|_| vec![decl.clone()])));
                }
            }
        });
    }
    out
}

/// Up to `n` items spread evenly over `items`.
fn spread<T: Clone>(items: &[T], n: usize) -> Vec<T> {
    if items.len() <= n {
        return items.to_vec();
    }
    (0..n).map(|k| items[k * items.len() / n].clone()).collect()
}

/// The corpus: for every solution and mutation kind, up to `per_kind`
/// distinct mutants that the differential oracle tells apart from the
/// problem's reference. Hard-coded dimensions are kept without that check,
/// since the fault is the declaration itself.
pub fn generate(per_kind: usize, trials: usize) -> Vec<Mutant> {
    let mut out = Vec::new();
    for prob in problems() {
        let k = InputConstraints::parse(prob.constraints).expect("corpus constraints parse");
        let reference = load(prob.reference).expect("corpus reference loads");
        for (sid, src) in prob.solutions {
            let mut seen: BTreeSet<String> = BTreeSet::new();
            seen.insert(render_program(&load(src).expect("corpus solution loads")));
            let all = mutate(src);
            for kind in MutationKind::ALL {
                let mut kept = Vec::new();
                for (_, m) in all.iter().filter(|(k2, _)| *k2 == kind) {
                    let text = render_program(m);
                    if !seen.insert(text.clone()) || load(&text).is_err() {
                        continue;
                    }
                    if kind == MutationKind::HardcodedDimension || !oracle::differential(&reference, m, trials, &k).agrees() {
                        kept.push(text);
                    }
                }
                for (n, text) in spread(&kept, per_kind).into_iter().enumerate() {
                    out.push(Mutant {
                        id: format!("{sid}-{kind:?}-{n}"),
                        problem: prob.name.to_string(),
                        solution: sid.to_string(),
                        kind,
                        source: text,
                    });
                }
            }
        }
    }
    out
}
