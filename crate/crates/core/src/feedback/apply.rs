//! Mechanical application of fixes to the candidate's canonical program.

use std::collections::BTreeSet;

use super::Fix;
use crate::analysis::declared_vars;
use crate::encoder::{BodyFormula, Cell, Effect, EffectKind, LoopHeader};
use crate::frontend::{BinOp, Declarator, Expr, LValue, Location, Program, ScalarType, Stmt, StmtKind};

const NEW: Location = Location { ordinal: u32::MAX, line: 0, column: 0 };

fn new(kind: StmtKind) -> Stmt {
    Stmt::at(NEW, kind)
}

fn find_mut(items: &mut [Stmt], ord: u32) -> Option<&mut Stmt> {
    for s in items {
        if s.loc.ordinal == ord {
            return Some(s);
        }
        for k in s.children_mut() {
            if let Some(f) = find_mut(std::slice::from_mut(k), ord) {
                return Some(f);
            }
        }
    }
    None
}

fn loop_body_mut(s: &mut Stmt) -> Option<&mut Stmt> {
    match &mut s.kind {
        StmtKind::For { body, .. } | StmtKind::While { body, .. } | StmtKind::CountDown { body, .. } => Some(body),
        _ => None,
    }
}

/// The only loop directly inside `s`'s body.
fn inner_loop_mut(s: &mut Stmt) -> Option<&mut Stmt> {
    let body = loop_body_mut(s)?;
    if body.is_loop() {
        return Some(body);
    }
    match &mut body.kind {
        StmtKind::Block(items) => {
            let mut loops = items.iter_mut().filter(|t| t.is_loop());
            let first = loops.next();
            if loops.next().is_some() {
                return None;
            }
            first
        }
        _ => None,
    }
}

fn set_header(s: &mut Stmt, h: &LoopHeader) {
    let v = Expr::var(h.index.clone());
    let assign = |value: Expr| Box::new(new(StmtKind::Assign { target: LValue::scalar(h.index.clone()), value }));
    match &mut s.kind {
        StmtKind::For { init, cond, step, .. } => {
            *init = Some(assign(h.init.clone()));
            *cond = Some(h.cond.clone());
            *step = Some(assign(Expr::bin(BinOp::Add, v, Expr::Int(h.stride))));
        }
        StmtKind::While { cond, .. } => *cond = h.cond.clone(),
        _ => {}
    }
}

fn apply_header(p: &mut Program, at: u32, headers: &[LoopHeader]) {
    let Some(mut s) = find_mut(&mut p.main_mut().body, at) else { return };
    for (k, h) in headers.iter().enumerate() {
        set_header(s, h);
        if k + 1 < headers.len() {
            match inner_loop_mut(s) {
                Some(inner) => s = inner,
                None => return,
            }
        }
    }
}

fn lvalue(c: &Cell) -> Option<LValue> {
    match c {
        Cell::Elem(n, idx) => Some(LValue { name: n.clone(), indices: idx.clone() }),
        Cell::Scalar(n) => Some(LValue::scalar(n.clone())),
        Cell::Out(_) => None,
    }
}

/// Statements performing `effects` in order. Values refer to the state
/// before the path, so when a later value reads something written earlier
/// all values are first saved in temporaries.
fn path_stmts(effects: &[Effect], keep: &impl Fn(&Cell) -> bool, temps: &mut Vec<String>, taken: &mut BTreeSet<String>) -> Vec<Stmt> {
    let effects: Vec<&Effect> = effects.iter().filter(|e| matches!(e.kind, EffectKind::Print { .. }) || keep(&e.cell)).collect();
    let mut written = BTreeSet::new();
    let mut hazard = false;
    for e in &effects {
        if e.value.names().iter().any(|n| written.contains(n)) {
            hazard = true;
        }
        if let Some(n) = e.cell.name() {
            written.insert(n.to_string());
        }
    }
    let mut values: Vec<Expr> = effects.iter().map(|e| e.value.clone()).collect();
    let mut out = Vec::new();
    if hazard {
        for (k, e) in effects.iter().enumerate() {
            if e.kind == EffectKind::Read {
                continue;
            }
            let t = super::output::fresh("fb_t", taken);
            out.push(new(StmtKind::Assign { target: LValue::scalar(t.clone()), value: values[k].clone() }));
            values[k] = Expr::var(t.clone());
            temps.push(t);
        }
    }
    let mut k = 0;
    while k < effects.len() {
        let e = effects[k];
        match &e.kind {
            EffectKind::Print { format } => {
                let mut args = vec![values[k].clone()];
                while effects.get(k + 1).is_some_and(|n| n.kind == e.kind) && args.len() < format.matches('%').count() {
                    k += 1;
                    args.push(values[k].clone());
                }
                out.push(new(StmtKind::Write { format: format.clone(), args }));
            }
            EffectKind::Read => {
                if let Some(target) = lvalue(&e.cell) {
                    out.push(new(StmtKind::Read { format: "%d".into(), target }));
                }
            }
            EffectKind::Assign => {
                if let Some(target) = lvalue(&e.cell) {
                    out.push(new(StmtKind::Assign { target, value: values[k].clone() }));
                }
            }
        }
        k += 1;
    }
    out
}

fn block(mut stmts: Vec<Stmt>) -> Stmt {
    if stmts.len() == 1 {
        stmts.remove(0)
    } else {
        new(StmtKind::Block(stmts))
    }
}

/// If/else-if chain over the paths of `body` that do something.
fn body_stmts(body: &BodyFormula, keep: &impl Fn(&Cell) -> bool, taken: &mut BTreeSet<String>) -> (Vec<Stmt>, Vec<String>) {
    let mut temps = Vec::new();
    let arms: Vec<(Expr, Vec<Stmt>)> = body
        .stmts
        .iter()
        .map(|g| (g.guard.clone(), path_stmts(&g.effects, keep, &mut temps, taken)))
        .filter(|(_, s)| !s.is_empty())
        .collect();
    if let [(Expr::Bool(true), s)] = arms.as_slice() {
        return (s.clone(), temps);
    }
    let mut chain: Option<Stmt> = None;
    for (g, s) in arms.into_iter().rev() {
        chain = Some(new(StmtKind::If {
            cond: g,
            then_branch: Box::new(block(s)),
            else_branch: chain.map(Box::new),
        }));
    }
    (chain.into_iter().collect(), temps)
}

fn strip_inits(s: &Stmt) -> Option<Stmt> {
    match &s.kind {
        StmtKind::Decl { ty, vars } => Some(new(StmtKind::Decl {
            ty: *ty,
            vars: vars.iter().map(|d| Declarator { init: None, ..d.clone() }).collect(),
        })),
        _ => None,
    }
}

fn flat(items: &[Stmt]) -> Vec<&Stmt> {
    let mut out = Vec::new();
    for s in items {
        match &s.kind {
            StmtKind::Block(inner) => out.extend(flat(inner)),
            _ => out.push(s),
        }
    }
    out
}

fn int_decl(names: &[String]) -> Option<Stmt> {
    (!names.is_empty()).then(|| {
        new(StmtKind::Decl {
            ty: ScalarType::Int,
            vars: names.iter().map(|n| Declarator { name: n.clone(), dims: Vec::new(), init: None }).collect(),
        })
    })
}

/// New statement list for a region: its declarations without initializers,
/// the rebuilt paths, then the region's own writes to `indices`.
fn rebuild(old: &[&Stmt], body: &BodyFormula, indices: &BTreeSet<String>, keep: &impl Fn(&Cell) -> bool, taken: &mut BTreeSet<String>) -> Vec<Stmt> {
    let mut out: Vec<Stmt> = old.iter().filter_map(|s| strip_inits(s)).collect();
    let (stmts, temps) = body_stmts(body, keep, taken);
    out.extend(int_decl(&temps));
    out.extend(stmts);
    for s in old {
        if matches!(&s.kind, StmtKind::Assign { target, .. } if target.is_scalar() && indices.contains(&target.name)) {
            out.push((*s).clone());
        }
    }
    out
}

fn apply_body(p: &mut Program, at: &[u32], looped: bool, body: &BodyFormula, taken: &mut BTreeSet<String>) {
    let declared = declared_vars(p);
    let keep = |c: &Cell| match c {
        Cell::Elem(n, _) => declared.get(n).is_some_and(|t| !t.dims.is_empty()),
        Cell::Scalar(n) => declared.get(n).is_some_and(|t| t.dims.is_empty()),
        Cell::Out(_) => false,
    };
    let main = &mut p.main_mut().body;
    if looped {
        let Some(&first) = at.first() else { return };
        let Some(mut s) = find_mut(main, first) else { return };
        let mut indices = BTreeSet::new();
        loop {
            match &s.kind {
                StmtKind::For { init: Some(i), .. } => {
                    if let Some(n) = i.written_name() {
                        indices.insert(n.to_string());
                    }
                }
                StmtKind::For { .. } | StmtKind::While { .. } => {}
                _ => break,
            }
            if let StmtKind::While { cond, .. } = &s.kind {
                indices.extend(cond.names());
            }
            if inner_loop_mut(s).is_none() {
                break;
            }
            s = inner_loop_mut(s).expect("checked above");
        }
        let Some(b) = loop_body_mut(s) else { return };
        let old = [b.clone()];
        let items = rebuild(&flat(&old), body, &indices, &keep, taken);
        *b = new(StmtKind::Block(items));
    } else {
        let Some(pos) = main.iter().position(|s| at.contains(&s.loc.ordinal)) else { return };
        let old: Vec<Stmt> = main.iter().filter(|s| at.contains(&s.loc.ordinal)).cloned().collect();
        let items = rebuild(&flat(&old), body, &BTreeSet::new(), &keep, taken);
        main.retain(|s| !at.contains(&s.loc.ordinal));
        main.splice(pos..pos, items);
    }
}

fn walk_mut(s: &mut Stmt, f: &mut impl FnMut(&mut Stmt)) {
    f(s);
    for c in s.children_mut() {
        walk_mut(c, f);
    }
}

fn remove_declarator(items: &mut Vec<Stmt>, name: &str) -> bool {
    let mut found = false;
    for s in items.iter_mut() {
        walk_mut(s, &mut |t| {
            if let StmtKind::Decl { vars, .. } = &mut t.kind {
                let before = vars.len();
                vars.retain(|d| d.name != name);
                found |= vars.len() != before;
            }
        });
    }
    items.retain(|s| !matches!(&s.kind, StmtKind::Decl { vars, .. } if vars.is_empty()));
    found
}

fn apply_dims(p: &mut Program, array: &str, dims: &[Expr]) {
    let ty = declared_vars(p).get(array).map_or(ScalarType::Int, |t| t.ty);
    let main = &mut p.main_mut().body;
    if !remove_declarator(main, array) {
        return;
    }
    let needs: BTreeSet<String> = dims.iter().flat_map(|d| d.names()).collect();
    // After the last top-level statement reading what the dimensions use.
    let pos = main
        .iter()
        .rposition(|s| {
            let mut reads = false;
            s.walk(&mut |t| {
                if let StmtKind::Read { target, .. } = &t.kind {
                    reads |= needs.contains(&target.name);
                }
            });
            reads
        })
        .map_or(0, |k| k + 1);
    let decl = new(StmtKind::Decl { ty, vars: vec![Declarator { name: array.to_string(), dims: dims.to_vec(), init: None }] });
    main.insert(pos, decl);
}

fn apply_replace(p: &mut Program, at: &[u32], stmts: &[Stmt], decls: &[String]) {
    let declared = declared_vars(p);
    let main = &mut p.main_mut().body;
    let Some(pos) = main.iter().position(|s| at.contains(&s.loc.ordinal)) else { return };
    main.retain(|s| !at.contains(&s.loc.ordinal));
    main.splice(pos..pos, stmts.iter().cloned());
    let fresh: Vec<String> = decls.iter().filter(|d| !declared.contains_key(*d)).cloned().collect();
    if let Some(d) = int_decl(&fresh) {
        main.insert(0, d);
    }
}

/// The program with every fix applied, renumbered.
pub fn apply(p: &Program, fixes: &[Fix]) -> Program {
    let mut out = p.clone();
    let mut taken: BTreeSet<String> = declared_vars(p).into_keys().collect();
    for f in fixes {
        if let Fix::Replace { decls, .. } = f {
            taken.extend(decls.iter().cloned());
        }
    }
    for f in fixes {
        match f {
            Fix::Header { at, headers } => apply_header(&mut out, *at, headers),
            Fix::Body { at, looped, body } => apply_body(&mut out, at, *looped, body, &mut taken),
            Fix::Replace { at, stmts, decls } => apply_replace(&mut out, at, stmts, decls),
            Fix::Dims { .. } => {}
        }
    }
    // Declarations last: they move statements at top level.
    for f in fixes {
        if let Fix::Dims { array, dims } = f {
            apply_dims(&mut out, array, dims);
        }
    }
    out.renumber();
    out
}
