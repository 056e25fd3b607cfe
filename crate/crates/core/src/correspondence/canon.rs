//! Loop canonicalization: split heterogeneous loops by label and group the
//! labeled top-level statements of `main` into segments.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::analysis::{Direction, Label, LabeledProgram};
use crate::frontend::{BinOp, Expr, Program, Stmt, StmtKind};

/// One entry of the canonical top-level list: a single loop, a run of
/// straight-line statements with one label, or adjacent loops merged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub label: Label,
    pub stmts: Vec<Stmt>,
}

impl Segment {
    pub fn loops(&self) -> impl Iterator<Item = &Stmt> {
        self.stmts.iter().filter(|s| s.is_loop())
    }

    /// The single loop of an update segment.
    pub fn the_loop(&self) -> Option<&Stmt> {
        match self.stmts.as_slice() {
            [s] if s.is_loop() => Some(s),
            _ => None,
        }
    }

    pub fn writes(&self) -> BTreeSet<String> {
        self.stmts.iter().flat_map(|s| s.writes()).collect()
    }

    pub fn reads(&self) -> BTreeSet<String> {
        self.stmts.iter().flat_map(|s| s.reads()).collect()
    }

    pub fn first_line(&self) -> u32 {
        self.stmts.first().map_or(0, |s| s.loc.line)
    }

    pub fn last_line(&self) -> u32 {
        let mut last = 0;
        for s in &self.stmts {
            s.walk(&mut |t| last = last.max(t.loc.line));
        }
        last
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CanonError {
    #[error("cannot split loop at {at}: {reason}")]
    CanonicalizationFailed { at: String, reason: String },
}

fn failed(s: &Stmt, reason: impl Into<String>) -> CanonError {
    CanonError::CanonicalizationFailed { at: s.loc.to_string(), reason: reason.into() }
}

fn single_label(lp: &LabeledProgram, s: &Stmt) -> Option<Label> {
    let ls = lp.labels_within(s);
    if ls.len() == 1 {
        ls.into_iter().next()
    } else {
        None
    }
}

fn body_items(body: &Stmt) -> Vec<Stmt> {
    match &body.kind {
        StmtKind::Block(items) => items.clone(),
        _ => vec![body.clone()],
    }
}

fn with_body(lp: &Stmt, items: Vec<Stmt>) -> Stmt {
    let mut out = lp.clone();
    let body = Box::new(Stmt::at(
        match &lp.kind {
            StmtKind::For { body, .. } | StmtKind::While { body, .. } | StmtKind::CountDown { body, .. } => body.loc,
            _ => unreachable!("with_body on a non-loop"),
        },
        StmtKind::Block(items),
    ));
    match &mut out.kind {
        StmtKind::For { body: b, .. } | StmtKind::While { body: b, .. } | StmtKind::CountDown { body: b, .. } => *b = body,
        _ => unreachable!(),
    }
    out
}

/// Array accesses `(name, indices)` read anywhere inside `s`.
fn array_reads(s: &Stmt) -> Vec<(String, Vec<Expr>)> {
    let mut out = Vec::new();
    s.walk(&mut |t| {
        for e in t.own_exprs() {
            e.walk(&mut |x| {
                if let Expr::Index(n, idx) = x {
                    out.push((n.clone(), idx.clone()));
                }
            });
        }
    });
    out
}

fn array_writes(s: &Stmt) -> Vec<(String, Vec<Expr>)> {
    let mut out = Vec::new();
    s.walk(&mut |t| match &t.kind {
        StmtKind::Assign { target, .. } | StmtKind::Read { target, .. } if !target.is_scalar() => {
            out.push((target.name.clone(), target.indices.clone()))
        }
        _ => {}
    });
    out
}

/// A read of `r` sees only values already produced by the write `w` in this
/// or an earlier iteration.
fn not_ahead(r: &[Expr], w: &[Expr], dir: Option<Direction>) -> bool {
    r.len() == w.len()
        && r.iter().zip(w).all(|(r, w)| {
            r == w
                || match (r, dir) {
                    (Expr::Binary(BinOp::Sub, a, c), Some(Direction::Up)) => **a == *w && matches!(**c, Expr::Int(k) if k > 0),
                    (Expr::Binary(BinOp::Add, a, c), Some(Direction::Down)) => **a == *w && matches!(**c, Expr::Int(k) if k > 0),
                    _ => false,
                }
        })
}

/// Splits a loop whose body carries several labels into one loop per label,
/// in order of first occurrence. Returns `[(label, loop)]`.
fn split_loop(lp: &LabeledProgram, s: &Stmt) -> Result<Vec<(Label, Stmt)>, CanonError> {
    if let Some(l) = single_label(lp, s) {
        return Ok(vec![(l, s.clone())]);
    }
    let (header_init, header_reads, body) = match &s.kind {
        StmtKind::For { init, cond, step, body } => {
            let mut reads: BTreeSet<String> = cond.iter().flat_map(|c| c.names()).collect();
            if let Some(st) = step {
                reads.extend(st.reads());
            }
            (init.as_ref().map(|i| i.writes()).unwrap_or_default(), reads, body)
        }
        StmtKind::While { cond, body } => (BTreeSet::new(), cond.names(), body),
        _ => return Err(failed(s, "only for and while loops can be split")),
    };

    // Flatten nested heterogeneous loops first.
    let mut items: Vec<(Option<Label>, Stmt)> = Vec::new();
    for it in body_items(body) {
        let ls = lp.labels_within(&it);
        match ls.len() {
            0 => items.push((None, it)),
            1 => items.push((ls.into_iter().next(), it)),
            _ if it.is_loop() => items.extend(split_loop(lp, &it)?.into_iter().map(|(l, s)| (Some(l), s))),
            _ => return Err(failed(s, format!("statement at {} mixes labels", it.loc))),
        }
    }
    let mut order: Vec<Label> = Vec::new();
    for (l, _) in &items {
        if let Some(l) = l {
            if !order.contains(l) {
                order.push(*l);
            }
        }
    }
    let mut parts: Vec<Vec<Stmt>> = vec![Vec::new(); order.len()];
    let mut own: Vec<Vec<Stmt>> = vec![Vec::new(); order.len()];
    let mut current = 0usize;
    for (k, (l, it)) in items.iter().enumerate() {
        if let Some(l) = l {
            current = order.iter().position(|x| x == l).expect("collected above");
            parts[current].push(it.clone());
            own[current].push(it.clone());
            continue;
        }
        // Which partitions use what this unlabeled statement writes?
        let w = it.writes();
        let mut users: Vec<usize> = Vec::new();
        for (p, _) in order.iter().enumerate() {
            let uses = items
                .iter()
                .skip(k + 1)
                .chain(items.iter().take(k))
                .any(|(l2, s2)| l2.is_some_and(|l2| order[p] == l2) && !s2.reads().is_disjoint(&w));
            if uses {
                users.push(p);
            }
        }
        let in_header = !header_reads.is_disjoint(&w);
        if users.len() > 1 || in_header {
            if !array_writes(it).is_empty() {
                return Err(failed(s, format!("shared statement at {} writes an array", it.loc)));
            }
            let self_dep = !it.reads().is_disjoint(&w);
            if self_dep && !w.is_subset(&header_init) {
                return Err(failed(s, format!("shared statement at {} carries state across iterations", it.loc)));
            }
            for p in parts.iter_mut() {
                p.push(it.clone());
            }
        } else {
            let p = users.first().copied().unwrap_or(current);
            parts[p].push(it.clone());
            own[p].push(it.clone());
        }
    }

    let dir = lp.loop_info(s.loc).and_then(|i| i.direction());
    let block = |v: &[Stmt]| Stmt::new(StmtKind::Block(v.to_vec()));
    for a in 0..order.len() {
        for b in a + 1..order.len() {
            let (pa, pb) = (block(&own[a]), block(&own[b]));
            let (wa, wb) = (pa.writes(), pb.writes());
            if !wb.is_disjoint(&block(&parts[a]).reads()) {
                return Err(failed(s, format!("{} part reads what the later {} part writes", order[a], order[b])));
            }
            if !wa.is_disjoint(&wb) {
                return Err(failed(s, "two parts write the same variable"));
            }
            let arrays_a = array_writes(&pa);
            for n in wa.intersection(&pb.reads()) {
                let writes_n: Vec<&Vec<Expr>> = arrays_a.iter().filter(|(m, _)| m == n).map(|(_, i)| i).collect();
                if writes_n.is_empty() {
                    return Err(failed(s, format!("scalar '{n}' flows between parts")));
                }
                for (m, r) in array_reads(&pb) {
                    if m == *n && !writes_n.iter().any(|w| not_ahead(&r, w, dir)) {
                        return Err(failed(s, format!("'{n}' is read ahead of its write")));
                    }
                }
            }
        }
    }
    Ok(order.into_iter().zip(parts).map(|(l, p)| (l, with_body(s, p))).collect())
}

/// `main`'s body with heterogeneous top-level loops split.
pub fn canonical_body(lp: &LabeledProgram) -> Result<Vec<Stmt>, CanonError> {
    let mut out = Vec::new();
    for s in &lp.program.main().body {
        if s.is_loop() && lp.labels_within(s).len() > 1 {
            out.extend(split_loop(lp, s)?.into_iter().map(|(_, s)| s));
        } else {
            out.push(s.clone());
        }
    }
    Ok(out)
}

/// The program with split loops in place, for oracle comparison.
pub fn canonical_program(lp: &LabeledProgram) -> Result<Program, CanonError> {
    let mut p = lp.program.clone();
    p.main_mut().body = canonical_body(lp)?;
    Ok(p)
}

fn read_targets(s: &Stmt) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    s.walk(&mut |t| {
        if let StmtKind::Read { target, .. } = &t.kind {
            out.insert(target.name.clone());
        }
    });
    out
}

/// Canonical top-level list of `main`: labeled statements only, in source
/// order. Straight-line runs with one label form one segment, all trailing
/// output computation forms one segment, adjacent input loops over the same
/// array and adjacent initialization loops of the same DP array are merged.
/// Update loops are never merged.
pub fn canonicalize_loops(lp: &LabeledProgram) -> Result<Vec<Segment>, CanonError> {
    let mut segs: Vec<Segment> = Vec::new();
    for s in canonical_body(lp)? {
        let Some(label) = single_label(lp, &s) else {
            if lp.labels_within(&s).is_empty() {
                continue;
            }
            return Err(failed(&s, "statement mixes labels"));
        };
        let merge = match segs.last() {
            Some(prev) if prev.label == label => match label {
                Label::Output => true,
                _ if !s.is_loop() => prev.loops().next().is_none(),
                Label::Input => {
                    prev.loops().next().is_some() && {
                        let a: BTreeSet<String> = prev.stmts.iter().flat_map(read_targets).collect();
                        !a.is_disjoint(&read_targets(&s)) && a.iter().any(|n| lp.vars.get(n).is_some_and(|t| t.rank() > 0))
                    }
                }
                Label::Init => {
                    prev.loops().next().is_some() && {
                        let dp_w = |x: &BTreeSet<String>| -> BTreeSet<String> { x.iter().filter(|n| lp.is_dp(n)).cloned().collect() };
                        let a = dp_w(&prev.writes());
                        !a.is_empty() && a == dp_w(&s.writes())
                    }
                }
                Label::Update => false,
            },
            _ => false,
        };
        match segs.last_mut() {
            Some(prev) if merge => prev.stmts.push(s),
            _ => segs.push(Segment { label, stmts: vec![s] }),
        }
    }
    Ok(segs)
}
