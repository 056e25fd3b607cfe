//! Loop index identification and per-loop shape facts.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::frontend::{BinOp, Expr, Location, Stmt, StmtKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "+")]
    Up,
    #[serde(rename = "-")]
    Down,
}

impl Direction {
    pub fn symbol(self) -> char {
        match self {
            Direction::Up => '+',
            Direction::Down => '-',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopInfo {
    pub loc: Location,
    /// Index variable, when one satisfies all four conditions.
    pub index: Option<String>,
    /// Constant per-iteration change of the index, when unconditional.
    pub stride: Option<i64>,
    /// Location of the enclosing loop, if any.
    pub parent: Option<Location>,
}

impl LoopInfo {
    pub fn direction(&self) -> Option<Direction> {
        match self.stride? {
            s if s > 0 => Some(Direction::Up),
            s if s < 0 => Some(Direction::Down),
            _ => None,
        }
    }
}

/// Constant change applied by `x = x ± c` (or `x = c + x`).
pub fn constant_step(s: &Stmt, var: &str) -> Option<i64> {
    let StmtKind::Assign { target, value } = &s.kind else { return None };
    if target.name != var || !target.is_scalar() {
        return None;
    }
    let is_var = |e: &Expr| *e == Expr::var(var);
    match value {
        Expr::Binary(BinOp::Add, l, r) => match (&**l, &**r) {
            (l, Expr::Int(c)) if is_var(l) => Some(*c),
            (Expr::Int(c), r) if is_var(r) => Some(*c),
            _ => None,
        },
        Expr::Binary(BinOp::Sub, l, r) => match (&**l, &**r) {
            (l, Expr::Int(c)) if is_var(l) => Some(-*c),
            _ => None,
        },
        _ => None,
    }
}

fn body_items(s: &Stmt) -> Vec<&Stmt> {
    match &s.kind {
        StmtKind::Block(items) => items.iter().collect(),
        _ => vec![s],
    }
}

/// Scalars written before `loop_loc` (by ordinal) outside the loop, or by the
/// loop's own init.
fn initialized_before(all: &[Stmt], lp: &Stmt, var: &str) -> bool {
    if let StmtKind::For { init: Some(init), .. } = &lp.kind {
        if init.writes().contains(var) {
            return true;
        }
    }
    let inside: BTreeSet<u32> = {
        let mut v = BTreeSet::new();
        lp.walk(&mut |s| {
            v.insert(s.loc.ordinal);
        });
        v
    };
    let mut found = false;
    for s in all {
        s.walk(&mut |s| {
            if s.loc.ordinal >= lp.loc.ordinal || inside.contains(&s.loc.ordinal) {
                return;
            }
            let direct = match &s.kind {
                StmtKind::Assign { target, .. } => target.is_scalar() && target.name == var,
                StmtKind::Decl { vars, .. } => vars.iter().any(|d| d.name == var && d.init.is_some()),
                _ => false,
            };
            found |= direct;
        });
    }
    found
}

/// Find loops in `body` (a function body) and the indices driving them.
pub fn analyze_loops(body: &[Stmt], scalars: &BTreeSet<String>) -> (BTreeSet<String>, BTreeMap<u32, LoopInfo>) {
    let mut indices = BTreeSet::new();
    let mut infos = BTreeMap::new();
    fn visit(
        s: &Stmt,
        parent: Option<Location>,
        all: &[Stmt],
        scalars: &BTreeSet<String>,
        indices: &mut BTreeSet<String>,
        infos: &mut BTreeMap<u32, LoopInfo>,
    ) {
        let mut next_parent = parent;
        let (cond, step, inner) = match &s.kind {
            StmtKind::For { cond, step, body, .. } => (cond.as_ref(), step.as_deref(), Some(body.as_ref())),
            StmtKind::While { cond, body } => (Some(cond), None, Some(body.as_ref())),
            _ => (None, None, None),
        };
        if let Some(body) = inner {
            let mut updated = body.writes();
            if let Some(st) = step {
                updated.extend(st.writes());
            }
            let guard_names = cond.map(|c| c.names()).unwrap_or_default();
            let mut chosen: Option<(String, Option<i64>)> = None;
            for v in guard_names.iter() {
                if !scalars.contains(v) || !updated.contains(v) || !initialized_before(all, s, v) {
                    continue;
                }
                indices.insert(v.clone());
                let stride = unconditional_stride(body, step, v);
                if chosen.as_ref().map_or(true, |(_, st)| st.is_none() && stride.is_some()) {
                    chosen = Some((v.clone(), stride));
                }
            }
            let (index, stride) = match chosen {
                Some((v, st)) => (Some(v), st),
                None => (None, None),
            };
            infos.insert(s.loc.ordinal, LoopInfo { loc: s.loc, index, stride, parent });
            next_parent = Some(s.loc);
        }
        if let StmtKind::CountDown { .. } = &s.kind {
            infos.insert(s.loc.ordinal, LoopInfo { loc: s.loc, index: None, stride: None, parent });
            next_parent = Some(s.loc);
        }
        for c in s.children() {
            visit(c, next_parent, all, scalars, indices, infos);
        }
    }
    for s in body {
        visit(s, None, body, scalars, &mut indices, &mut infos);
    }
    (indices, infos)
}

/// The index's change per iteration if it is a single unconditional
/// constant step: the `for` step, or exactly one top-level body statement of
/// a `while`.
fn unconditional_stride(body: &Stmt, step: Option<&Stmt>, var: &str) -> Option<i64> {
    if let Some(st) = step {
        if body.writes().contains(var) {
            return None;
        }
        return constant_step(st, var);
    }
    let items = body_items(body);
    let mut stride = None;
    for it in &items {
        if let Some(c) = constant_step(it, var) {
            if stride.is_some() {
                return None;
            }
            stride = Some(c);
        } else if it.writes().contains(var) {
            return None;
        }
    }
    stride
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse, preprocess};

    fn scalars_of(p: &crate::frontend::Program) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for s in &p.main().body {
            s.walk(&mut |s| {
                if let StmtKind::Decl { vars, .. } = &s.kind {
                    out.extend(vars.iter().filter(|d| d.dims.is_empty()).map(|d| d.name.clone()));
                }
            });
        }
        out
    }

    #[test]
    fn figure_two_indices() {
        let p = preprocess(&parse(include_str!("../../tests/fixtures/fig2.c")).unwrap());
        let (idx, infos) = analyze_loops(&p.main().body, &scalars_of(&p));
        assert_eq!(idx, ["i", "j"].iter().map(|s| s.to_string()).collect());
        assert!(infos.values().all(|l| l.direction() == Some(Direction::Up)));
    }

    #[test]
    fn countdown_bound_is_not_an_index() {
        let p = preprocess(
            &parse("int main(){int t, x; scanf(\"%d\", &t); x = 0; while(t--){ x = x + 1; } return 0;}").unwrap(),
        );
        let (idx, _) = analyze_loops(&p.main().body, &scalars_of(&p));
        assert!(idx.is_empty());
    }

    #[test]
    fn loop_free_program_has_no_indices() {
        let p = parse("int main(){int x; x = 1; return 0;}").unwrap();
        assert!(analyze_loops(&p.main().body, &scalars_of(&p)).0.is_empty());
    }

    #[test]
    fn while_with_guarded_update_has_no_stride() {
        let p = preprocess(
            &parse("int main(){int i, n; n = 5; i = 0; while(i < n){ if (n > 2) i = i + 1; else i = i + 2; } return 0;}")
                .unwrap(),
        );
        let (idx, infos) = analyze_loops(&p.main().body, &scalars_of(&p));
        assert!(idx.contains("i"));
        let lp = infos.values().next().unwrap();
        assert_eq!(lp.index.as_deref(), Some("i"));
        assert_eq!(lp.stride, None);
    }
}
