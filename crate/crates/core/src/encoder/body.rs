//! Path enumeration over a loop body and loop-header extraction.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{final_value, BodyFormula, Cell, EffectKind, EncodeError, Effect, GuardedStmt};
use crate::analysis::{Direction, LabeledProgram};
use crate::frontend::{BinOp, Expr, Stmt, StmtKind};

/// Paths per body before encoding gives up.
pub const MAX_PATHS: usize = 64;

fn fail(s: &Stmt, why: impl Into<String>) -> EncodeError {
    EncodeError::EncodingFailed(s.loc, why.into())
}

#[derive(Debug, Clone)]
struct Path {
    conds: Vec<Expr>,
    effects: Vec<Effect>,
    locs: Vec<crate::frontend::Location>,
    reads: usize,
    outs: usize,
}

impl Path {
    /// Rewrites `e`, an expression over the state reached by this path, into
    /// one over the iteration's pre-state.
    fn current(&self, e: &Expr) -> Expr {
        e.map(&mut |x| match x {
            Expr::Index(a, idx) => final_value(&self.effects, &Cell::Elem(a, idx)),
            Expr::Var(v) if !v.starts_with('$') => final_value(&self.effects, &Cell::Scalar(v)),
            other => other,
        })
    }
}

struct Encoder<'a> {
    lp: &'a LabeledProgram,
    indices: &'a BTreeSet<String>,
}

impl Encoder<'_> {
    /// The `k`-th own expression of `s`, temporaries eliminated when Σ has it.
    fn expr(&self, s: &Stmt, k: usize, raw: &Expr) -> Expr {
        self.lp.store.resolved_expr(s.loc, k).cloned().unwrap_or_else(|| raw.clone())
    }

    fn stmts(&self, items: &[Stmt], paths: Vec<Path>) -> Result<Vec<Path>, EncodeError> {
        items.iter().try_fold(paths, |ps, s| self.stmt(s, ps))
    }

    fn stmt(&self, s: &Stmt, paths: Vec<Path>) -> Result<Vec<Path>, EncodeError> {
        match &s.kind {
            StmtKind::Block(items) => self.stmts(items, paths),
            StmtKind::Decl { vars, .. } => {
                let mut paths = paths;
                let mut k = 0;
                for d in vars {
                    if !d.dims.is_empty() {
                        return Err(fail(s, "array declared inside a loop body"));
                    }
                    if let Some(init) = &d.init {
                        let v = self.expr(s, k, init);
                        k += 1;
                        for p in &mut paths {
                            let value = p.current(&v);
                            p.effects.push(Effect { cell: Cell::Scalar(d.name.clone()), value, kind: EffectKind::Assign });
                        }
                    }
                }
                Ok(paths)
            }
            StmtKind::Assign { target, value } => {
                let name = &target.name;
                if self.lp.is_input(name) {
                    return Err(fail(s, format!("input variable '{name}' is modified")));
                }
                if target.is_scalar() && self.indices.contains(name) {
                    return Ok(paths);
                }
                let n = target.indices.len();
                let idx: Vec<Expr> = target.indices.iter().enumerate().map(|(k, e)| self.expr(s, k, e)).collect();
                let v = self.expr(s, n, value);
                let mut paths = paths;
                for p in &mut paths {
                    let cell = if target.is_scalar() {
                        Cell::Scalar(name.clone())
                    } else {
                        Cell::Elem(name.clone(), idx.iter().map(|e| p.current(e)).collect())
                    };
                    let value = p.current(&v);
                    p.effects.push(Effect { cell, value, kind: EffectKind::Assign });
                    p.locs.push(s.loc);
                }
                Ok(paths)
            }
            StmtKind::Read { target, .. } => {
                let idx: Vec<Expr> = target.indices.iter().enumerate().map(|(k, e)| self.expr(s, k, e)).collect();
                let mut paths = paths;
                for p in &mut paths {
                    let cell = if target.is_scalar() {
                        Cell::Scalar(target.name.clone())
                    } else {
                        Cell::Elem(target.name.clone(), idx.iter().map(|e| p.current(e)).collect())
                    };
                    let value = Expr::var(format!("$in{}", p.reads));
                    p.reads += 1;
                    p.effects.push(Effect { cell, value, kind: EffectKind::Read });
                    p.locs.push(s.loc);
                }
                Ok(paths)
            }
            StmtKind::Write { format, args } => {
                let vals: Vec<Expr> = args.iter().enumerate().map(|(k, e)| self.expr(s, k, e)).collect();
                let mut paths = paths;
                for p in &mut paths {
                    for v in &vals {
                        let value = p.current(v);
                        let cell = Cell::Out(p.outs);
                        p.outs += 1;
                        p.effects.push(Effect { cell, value, kind: EffectKind::Print { format: format.clone() } });
                    }
                    p.locs.push(s.loc);
                }
                Ok(paths)
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                let c = self.expr(s, 0, cond);
                let mut out = Vec::new();
                for p in paths {
                    let pc = p.current(&c);
                    let mut t = p.clone();
                    t.conds.push(pc.clone());
                    out.extend(self.stmt(then_branch, vec![t])?);
                    let mut f = p;
                    f.conds.push(Expr::not(pc));
                    match else_branch {
                        Some(e) => out.extend(self.stmt(e, vec![f])?),
                        None => out.push(f),
                    }
                    if out.len() > MAX_PATHS {
                        return Err(fail(s, "too many paths"));
                    }
                }
                Ok(out)
            }
            StmtKind::For { .. } | StmtKind::While { .. } | StmtKind::CountDown { .. } => {
                Err(fail(s, "loop nested below the encoded level"))
            }
            StmtKind::Call { name, .. } => Err(fail(s, format!("call statement '{name}'"))),
            StmtKind::CompoundAssign { .. } | StmtKind::IncDec { .. } => Err(fail(s, "statement not pre-processed")),
            StmtKind::Return(_) => Err(fail(s, "return inside an encoded body")),
        }
    }
}

/// Disjoint, exhaustive guarded paths of `items`, each with the effects it
/// performs in order. Writes to loop indices in `indices` are not effects.
pub fn encode_body(lp: &LabeledProgram, items: &[Stmt], indices: &BTreeSet<String>) -> Result<BodyFormula, EncodeError> {
    let enc = Encoder { lp, indices };
    let start = Path { conds: Vec::new(), effects: Vec::new(), locs: Vec::new(), reads: 0, outs: 0 };
    let paths = enc.stmts(items, vec![start])?;
    Ok(BodyFormula {
        stmts: paths
            .into_iter()
            .map(|p| GuardedStmt { guard: Expr::and_all(p.conds), effects: p.effects, locs: p.locs })
            .collect(),
    })
}

/// Shape of one loop level: `index` starts at `init`, moves by `stride` and
/// continues while `cond` holds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopHeader {
    pub index: String,
    pub init: Expr,
    pub cond: Expr,
    pub stride: i64,
    pub loc: crate::frontend::Location,
}

impl LoopHeader {
    pub fn direction(&self) -> Direction {
        if self.stride > 0 { Direction::Up } else { Direction::Down }
    }

    /// Values the index takes, as a formula over the index and the
    /// variables of `init` and `cond`.
    pub fn iter(&self) -> Expr {
        let v = Expr::var(self.index.clone());
        let from = match self.direction() {
            Direction::Up => Expr::bin(BinOp::Le, self.init.clone(), v.clone()),
            Direction::Down => Expr::bin(BinOp::Le, v.clone(), self.init.clone()),
        };
        let mut f = Expr::and(from, self.cond.clone());
        if self.stride.abs() > 1 {
            let off = Expr::bin(BinOp::Sub, v, self.init.clone());
            f = Expr::and(f, Expr::bin(BinOp::Eq, Expr::bin(BinOp::Mod, off, Expr::Int(self.stride)), Expr::Int(0)));
        }
        f
    }
}

fn body_items(lp: &Stmt) -> &[Stmt] {
    let body = match &lp.kind {
        StmtKind::For { body, .. } | StmtKind::While { body, .. } | StmtKind::CountDown { body, .. } => body,
        _ => return std::slice::from_ref(lp),
    };
    match &body.kind {
        StmtKind::Block(items) => items,
        _ => std::slice::from_ref(body.as_ref()),
    }
}

/// Header of loop `s`; `before` are the statements preceding it at its
/// level, where a `while` loop's index is initialized.
pub fn loop_header(lp: &LabeledProgram, s: &Stmt, before: &[Stmt]) -> Result<LoopHeader, EncodeError> {
    let info = lp.loop_info(s.loc).ok_or_else(|| fail(s, "unknown loop"))?;
    let index = info.index.clone().ok_or_else(|| fail(s, "loop has no index variable"))?;
    let stride = info.stride.filter(|k| *k != 0).ok_or_else(|| fail(s, "loop index has no constant stride"))?;
    let init_of = |t: &Stmt| -> Option<Expr> {
        match &t.kind {
            StmtKind::Assign { target, value } if target.is_scalar() && target.name == index => {
                Some(lp.store.resolved_expr(t.loc, 0).cloned().unwrap_or_else(|| value.clone()))
            }
            _ => None,
        }
    };
    let (init, cond) = match &s.kind {
        StmtKind::For { init, cond, .. } => (
            init.as_deref().and_then(init_of).or_else(|| before.iter().rev().find_map(init_of)),
            cond.as_ref().map(|c| lp.store.resolved_expr(s.loc, 0).cloned().unwrap_or_else(|| c.clone())),
        ),
        StmtKind::While { cond, .. } => (
            before.iter().rev().find_map(init_of),
            Some(lp.store.resolved_expr(s.loc, 0).cloned().unwrap_or_else(|| cond.clone())),
        ),
        _ => (None, None),
    };
    let init = init.ok_or_else(|| fail(s, format!("no initialization of '{index}'")))?;
    let cond = cond.ok_or_else(|| fail(s, "loop has no condition"))?;
    let mut arrays = false;
    for e in [&init, &cond] {
        e.walk(&mut |x| arrays |= matches!(x, Expr::Index(..) | Expr::Call(..)));
    }
    if arrays {
        return Err(fail(s, "loop bound depends on array contents"));
    }
    Ok(LoopHeader { index, init, cond, stride, loc: s.loc })
}

/// Perfect-nest view of a loop: headers outermost first and the innermost
/// body. Outer levels may hold only the next loop plus statements that touch
/// no arrays and do no I/O. `before` precedes `s` at top level.
pub fn loop_nest_of<'a>(
    lp: &LabeledProgram,
    s: &'a Stmt,
    before: &[Stmt],
) -> Result<(Vec<LoopHeader>, &'a [Stmt]), EncodeError> {
    let mut headers = vec![loop_header(lp, s, before)?];
    let mut items = body_items(s);
    loop {
        let loops: Vec<usize> = (0..items.len()).filter(|&k| items[k].is_loop()).collect();
        match loops.as_slice() {
            [] => return Ok((headers, items)),
            [k] => {
                for (j, t) in items.iter().enumerate() {
                    if j != *k && !inert(t) {
                        return Err(fail(t, "statement beside a nested loop"));
                    }
                }
                headers.push(loop_header(lp, &items[*k], &items[..*k])?);
                items = body_items(&items[*k]);
            }
            _ => return Err(fail(s, "several loops at one nesting level")),
        }
    }
}

fn inert(s: &Stmt) -> bool {
    let mut ok = true;
    s.walk(&mut |t| match &t.kind {
        StmtKind::Assign { target, .. } => ok &= target.is_scalar(),
        StmtKind::Decl { vars, .. } => ok &= vars.iter().all(|d| d.dims.is_empty()),
        StmtKind::Read { .. } | StmtKind::Write { .. } | StmtKind::Call { .. } => ok = false,
        _ => {}
    });
    ok
}
