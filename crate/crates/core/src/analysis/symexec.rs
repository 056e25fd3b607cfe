//! Forward symbolic propagation that eliminates temporaries and inlines calls.
//!
//! Every temporary is tracked as either a known expression over DP variables
//! (arrays, inputs, loop indices) or unknown. Conditionals merge into
//! ternaries, loops forget whatever they may overwrite, and array writes
//! invalidate values that read the written array.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::frontend::{expr_to_string, BinOp, Expr, FunctionDef, Location, Program, Stmt, StmtKind};

/// Substitution steps allowed per resolved use.
pub const MAX_SUBSTITUTIONS: usize = 64;
const MAX_EXPR_SIZE: usize = 4000;
const MAX_LEAVES: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GuardedExpr {
    pub guard: Expr,
    pub expr: Expr,
}

/// Σ: for each location, the guarded expressions replacing each temporary
/// (or call, keyed by its source text) used there, plus every expression of
/// the statement with temporaries and calls already eliminated.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubstitutionStore {
    pub entries: BTreeMap<u32, BTreeMap<String, Vec<GuardedExpr>>>,
    /// Aligned with `Stmt::own_exprs`; `None` where elimination failed.
    pub resolved: BTreeMap<u32, Vec<Option<Expr>>>,
}

impl SubstitutionStore {
    pub fn get(&self, loc: Location, name: &str) -> Option<&[GuardedExpr]> {
        self.entries.get(&loc.ordinal)?.get(name).map(|v| v.as_slice())
    }

    pub fn resolved(&self, loc: Location) -> Option<&[Option<Expr>]> {
        self.resolved.get(&loc.ordinal).map(|v| v.as_slice())
    }

    /// The `k`-th own expression of the statement at `loc`, resolved.
    pub fn resolved_expr(&self, loc: Location, k: usize) -> Option<&Expr> {
        self.resolved.get(&loc.ordinal)?.get(k)?.as_ref()
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum SymexecError {
    #[error("recursive call chain through '{0}' is not supported")]
    RecursionUnsupported(String),
}

/// Lift ternaries to the top, producing disjoint guarded leaves. Falls back to
/// a single unguarded leaf when the expansion would be too large.
pub fn guarded_leaves(e: &Expr) -> Vec<GuardedExpr> {
    match leaves(e) {
        Some(v) if v.len() <= MAX_LEAVES => v,
        _ => vec![GuardedExpr { guard: Expr::Bool(true), expr: e.clone() }],
    }
}

fn leaves(e: &Expr) -> Option<Vec<GuardedExpr>> {
    let single = |e: Expr| vec![GuardedExpr { guard: Expr::Bool(true), expr: e }];
    Some(match e {
        Expr::Ternary(c, t, f) => {
            let mut out = Vec::new();
            for l in leaves(t)? {
                out.push(GuardedExpr { guard: Expr::and((**c).clone(), l.guard), expr: l.expr });
            }
            for l in leaves(f)? {
                out.push(GuardedExpr { guard: Expr::and(Expr::not((**c).clone()), l.guard), expr: l.expr });
            }
            if out.len() > MAX_LEAVES {
                return None;
            }
            out
        }
        Expr::Binary(op, l, r) => {
            let (ls, rs) = (leaves(l)?, leaves(r)?);
            if ls.len() * rs.len() > MAX_LEAVES {
                return None;
            }
            let mut out = Vec::new();
            for a in &ls {
                for b in &rs {
                    out.push(GuardedExpr {
                        guard: Expr::and(a.guard.clone(), b.guard.clone()),
                        expr: Expr::bin(*op, a.expr.clone(), b.expr.clone()),
                    });
                }
            }
            out
        }
        Expr::Unary(op, x) => leaves(x)?
            .into_iter()
            .map(|l| GuardedExpr { guard: l.guard, expr: Expr::Unary(*op, Box::new(l.expr)) })
            .collect(),
        other => single(other.clone()),
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Val {
    Known(Expr),
    Unknown,
}

type Env = BTreeMap<String, Val>;

/// Return-value summary of a function in terms of its parameter names.
#[derive(Debug, Clone)]
struct Summary {
    params: Vec<String>,
    ret: Expr,
}

pub(crate) struct SymExec<'a> {
    program: &'a Program,
    temps: BTreeSet<String>,
    summaries: HashMap<String, Option<Summary>>,
    store: Option<SubstitutionStore>,
    budget: usize,
    /// Location of the statement being resolved, for Σ entries.
    here: Location,
}

pub(crate) fn check_recursion(p: &Program) -> Result<(), SymexecError> {
    fn calls(f: &FunctionDef) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for s in &f.body {
            s.walk(&mut |s| {
                if let StmtKind::Call { name, .. } = &s.kind {
                    out.insert(name.clone());
                }
                for e in s.own_exprs() {
                    e.walk(&mut |e| {
                        if let Expr::Call(n, _) = e {
                            out.insert(n.clone());
                        }
                    });
                }
            });
        }
        out
    }
    let graph: BTreeMap<&str, BTreeSet<String>> = p.functions.iter().map(|f| (f.name.as_str(), calls(f))).collect();
    // Depth-first search for a back edge.
    fn visit<'g>(
        n: &'g str,
        g: &'g BTreeMap<&str, BTreeSet<String>>,
        state: &mut BTreeMap<&'g str, u8>,
    ) -> Result<(), SymexecError> {
        match state.get(n) {
            Some(1) => return Err(SymexecError::RecursionUnsupported(n.to_string())),
            Some(2) => return Ok(()),
            _ => {}
        }
        state.insert(n, 1);
        if let Some(succ) = g.get(n) {
            for m in succ {
                if let Some((k, _)) = g.get_key_value(m.as_str()) {
                    visit(k, g, state)?;
                }
            }
        }
        state.insert(n, 2);
        Ok(())
    }
    let mut state = BTreeMap::new();
    for n in graph.keys() {
        visit(n, &graph, &mut state)?;
    }
    Ok(())
}

/// Compute Σ for `main` of `p`, treating every scalar outside `atoms` as a
/// temporary.
pub(crate) fn run_main(p: &Program, atoms: &BTreeSet<String>) -> Result<SubstitutionStore, SymexecError> {
    check_recursion(p)?;
    let main = p.main();
    let mut temps = BTreeSet::new();
    for s in &main.body {
        s.walk(&mut |s| {
            if let StmtKind::Decl { vars, .. } = &s.kind {
                for d in vars {
                    if d.dims.is_empty() && !atoms.contains(&d.name) {
                        temps.insert(d.name.clone());
                    }
                }
            }
        });
    }
    let mut sx = SymExec {
        program: p,
        temps,
        summaries: HashMap::new(),
        store: Some(SubstitutionStore::default()),
        budget: MAX_SUBSTITUTIONS,
        here: Location::default(),
    };
    let mut env = Env::new();
    let mut returns = Vec::new();
    sx.block(&main.body, &mut env, &Expr::Bool(true), &mut returns);
    Ok(sx.store.take().unwrap())
}

impl<'a> SymExec<'a> {
    fn resolve(&mut self, e: &Expr, env: &Env) -> Option<Expr> {
        self.budget = MAX_SUBSTITUTIONS;
        let r = self.resolve_inner(e, env)?;
        (r.size() <= MAX_EXPR_SIZE).then_some(r)
    }

    fn resolve_inner(&mut self, e: &Expr, env: &Env) -> Option<Expr> {
        Some(match e {
            Expr::Var(x) if self.temps.contains(x) => {
                self.budget = self.budget.checked_sub(1)?;
                match env.get(x) {
                    Some(Val::Known(v)) => {
                        self.record(x, v);
                        v.clone()
                    }
                    _ => return None,
                }
            }
            Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) => e.clone(),
            Expr::Index(a, idx) => {
                Expr::Index(a.clone(), idx.iter().map(|i| self.resolve_inner(i, env)).collect::<Option<_>>()?)
            }
            Expr::Binary(op, l, r) => Expr::bin(*op, self.resolve_inner(l, env)?, self.resolve_inner(r, env)?),
            Expr::Unary(op, x) => Expr::Unary(*op, Box::new(self.resolve_inner(x, env)?)),
            Expr::Ternary(c, t, f) => Expr::ite(
                self.resolve_inner(c, env)?,
                self.resolve_inner(t, env)?,
                self.resolve_inner(f, env)?,
            ),
            Expr::Call(name, args) => {
                self.budget = self.budget.checked_sub(1)?;
                let args: Vec<Expr> = args.iter().map(|a| self.resolve_inner(a, env)).collect::<Option<_>>()?;
                let s = self.summary(name)?;
                let v = instantiate(&s, &args)?;
                self.record(&expr_to_string(e), &v);
                v
            }
        })
    }

    fn record(&mut self, name: &str, v: &Expr) {
        let here = self.here.ordinal;
        if let Some(store) = &mut self.store {
            store.entries.entry(here).or_default().entry(name.to_string()).or_insert_with(|| guarded_leaves(v));
        }
    }

    fn summary(&mut self, name: &str) -> Option<Summary> {
        if let Some(s) = self.summaries.get(name) {
            return s.clone();
        }
        let s = self.compute_summary(name);
        self.summaries.insert(name.to_string(), s.clone());
        s
    }

    fn compute_summary(&mut self, name: &str) -> Option<Summary> {
        let f = self.program.function(name)?;
        let array_params: BTreeSet<&str> =
            f.params.iter().filter(|p| !p.dims.is_empty()).map(|p| p.name.as_str()).collect();
        let mut local_arrays = BTreeSet::new();
        let mut temps = BTreeSet::new();
        let mut has_effects = false;
        for s in &f.body {
            s.walk(&mut |s| {
                if let StmtKind::Decl { vars, .. } = &s.kind {
                    for d in vars {
                        if d.dims.is_empty() {
                            temps.insert(d.name.clone());
                        } else {
                            local_arrays.insert(d.name.clone());
                        }
                    }
                }
                match &s.kind {
                    StmtKind::Assign { target, .. } | StmtKind::Read { target, .. }
                        if !target.is_scalar() && array_params.contains(target.name.as_str()) =>
                    {
                        has_effects = true;
                    }
                    StmtKind::Read { .. } | StmtKind::Write { .. } => has_effects = true,
                    _ => {}
                }
            });
        }
        // Callees with side effects on the caller are not summarized.
        if has_effects {
            return None;
        }
        let mut env = Env::new();
        for p in &f.params {
            if p.dims.is_empty() {
                temps.insert(p.name.clone());
                env.insert(p.name.clone(), Val::Known(Expr::var(p.name.clone())));
            }
        }
        let mut inner = SymExec {
            program: self.program,
            temps,
            summaries: std::mem::take(&mut self.summaries),
            store: None,
            budget: MAX_SUBSTITUTIONS,
            here: Location::default(),
        };
        let mut returns = Vec::new();
        let complete = inner.block(&f.body, &mut env, &Expr::Bool(true), &mut returns);
        self.summaries = inner.summaries;
        let mut chain: Option<Expr> = None;
        for (g, v) in returns.into_iter().rev() {
            let v = v?;
            chain = Some(match chain {
                None => v,
                Some(rest) => Expr::ite(g?, v, rest),
            });
        }
        let ret = chain?;
        // Guards only ever reach returns through the chain; an incomplete walk
        // (return inside a loop) cannot be summarized.
        if !complete || ret.names().iter().any(|n| local_arrays.contains(n)) {
            return None;
        }
        Some(Summary { params: f.params.iter().map(|p| p.name.clone()).collect(), ret })
    }

    fn invalidate(&self, env: &mut Env, written: &BTreeSet<String>) {
        for (x, v) in env.iter_mut() {
            let stale = written.contains(x)
                || matches!(v, Val::Known(e) if e.names().iter().any(|n| written.contains(n)));
            if stale {
                *v = Val::Unknown;
            }
        }
    }

    fn set_resolved(&mut self, s: &Stmt, env: &Env) {
        if self.store.is_none() {
            return;
        }
        self.here = s.loc;
        let exprs: Vec<Expr> = s.own_exprs().into_iter().cloned().collect();
        let resolved: Vec<Option<Expr>> = exprs.iter().map(|e| self.resolve(e, env)).collect();
        self.store.as_mut().unwrap().resolved.insert(s.loc.ordinal, resolved);
    }

    fn assign(&mut self, name: &str, is_scalar: bool, value: Option<Expr>, env: &mut Env) {
        if is_scalar && self.temps.contains(name) {
            env.insert(name.to_string(), value.map_or(Val::Unknown, Val::Known));
            // Values that mention the old value of the temp cannot exist: temps
            // never appear inside known values.
        } else {
            let written: BTreeSet<String> = [name.to_string()].into();
            self.invalidate(env, &written);
        }
    }

    /// Returns false when a return occurs somewhere the summary cannot
    /// express (inside a loop).
    fn block(
        &mut self,
        items: &[Stmt],
        env: &mut Env,
        path: &Expr,
        returns: &mut Vec<(Option<Expr>, Option<Expr>)>,
    ) -> bool {
        let mut ok = true;
        for s in items {
            ok &= self.stmt(s, env, path, returns);
            if matches!(s.kind, StmtKind::Return(_)) {
                break;
            }
        }
        ok
    }

    fn stmt(
        &mut self,
        s: &Stmt,
        env: &mut Env,
        path: &Expr,
        returns: &mut Vec<(Option<Expr>, Option<Expr>)>,
    ) -> bool {
        self.set_resolved(s, env);
        self.here = s.loc;
        match &s.kind {
            StmtKind::Decl { vars, .. } => {
                for d in vars {
                    if d.dims.is_empty() {
                        let v = d.init.as_ref().and_then(|e| self.resolve(e, env));
                        if self.temps.contains(&d.name) {
                            env.insert(d.name.clone(), v.map_or(Val::Unknown, Val::Known));
                        } else {
                            self.assign(&d.name, true, None, env);
                        }
                    } else {
                        self.assign(&d.name, false, None, env);
                    }
                }
                true
            }
            StmtKind::Assign { target, value } => {
                let v = self.resolve(value, env);
                self.assign(&target.name, target.is_scalar(), v, env);
                true
            }
            StmtKind::CompoundAssign { target, op, value } => {
                let v = self.resolve(&Expr::bin(*op, target.to_expr(), value.clone()), env);
                self.assign(&target.name, target.is_scalar(), v, env);
                true
            }
            StmtKind::IncDec { target, delta } => {
                let v = self.resolve(&Expr::bin(BinOp::Add, target.to_expr(), Expr::Int(*delta)), env);
                self.assign(&target.name, target.is_scalar(), v, env);
                true
            }
            StmtKind::Read { target, .. } => {
                self.assign(&target.name, target.is_scalar(), None, env);
                true
            }
            StmtKind::Write { .. } => true,
            StmtKind::Call { args, .. } => {
                // Arrays handed to a callee may be written by it.
                let mut written = BTreeSet::new();
                for a in args {
                    if let Expr::Var(n) | Expr::Index(n, _) = a {
                        if !self.temps.contains(n) {
                            written.insert(n.clone());
                        }
                    }
                }
                self.invalidate(env, &written);
                true
            }
            StmtKind::Return(e) => {
                let v = e.as_ref().and_then(|e| self.resolve(e, env));
                returns.push((Some(path.clone()), v));
                true
            }
            StmtKind::Block(items) => self.block(items, env, path, returns),
            StmtKind::If { cond, then_branch, else_branch } => {
                let c = self.resolve(cond, env);
                let mut t_env = env.clone();
                let mut e_env = env.clone();
                let before = returns.len();
                let t_path = match &c {
                    Some(c) => Expr::and(path.clone(), c.clone()),
                    None => path.clone(),
                };
                let mut ok = self.stmt(then_branch, &mut t_env, &t_path, returns);
                let then_returned = returns.len() > before;
                let mid = returns.len();
                if let Some(e) = else_branch {
                    let e_path = match &c {
                        Some(c) => Expr::and(path.clone(), Expr::not(c.clone())),
                        None => path.clone(),
                    };
                    ok &= self.stmt(e, &mut e_env, &e_path, returns);
                }
                let else_returned = returns.len() > mid;
                if c.is_none() && returns.len() > before {
                    // Unresolvable guard on a return path.
                    for r in &mut returns[before..] {
                        r.0 = None;
                    }
                }
                // A branch that returned does not flow on.
                *env = match (then_returned, else_returned) {
                    (true, false) => e_env,
                    (false, true) => t_env,
                    _ => merge(&c, t_env, e_env),
                };
                ok
            }
            StmtKind::For { init, cond, step, body } => {
                if let Some(i) = init {
                    self.stmt(i, env, path, returns);
                }
                let mut written = body.writes();
                if let Some(st) = step {
                    written.extend(st.writes());
                }
                self.invalidate(env, &written);
                let entry = env.clone();
                // Resolve the guard in the loop-entry state.
                if self.store.is_some() {
                    self.here = s.loc;
                    let r: Vec<Option<Expr>> = cond.iter().map(|c| self.resolve(c, env)).collect();
                    self.store.as_mut().unwrap().resolved.insert(s.loc.ordinal, r);
                }
                let before = returns.len();
                let mut body_env = env.clone();
                self.stmt(body, &mut body_env, path, returns);
                if let Some(st) = step {
                    self.stmt(st, &mut body_env, path, returns);
                }
                *env = entry;
                returns.len() == before
            }
            StmtKind::While { body, .. } => {
                let written = body.writes();
                self.invalidate(env, &written);
                let entry = env.clone();
                self.set_resolved(s, env);
                let before = returns.len();
                let mut body_env = env.clone();
                self.stmt(body, &mut body_env, path, returns);
                *env = entry;
                returns.len() == before
            }
            StmtKind::CountDown { var, body } => {
                let mut written = body.writes();
                written.insert(var.clone());
                self.invalidate(env, &written);
                let entry = env.clone();
                let before = returns.len();
                let mut body_env = env.clone();
                self.stmt(body, &mut body_env, path, returns);
                *env = entry;
                returns.len() == before
            }
        }
    }
}

fn merge(c: &Option<Expr>, t: Env, e: Env) -> Env {
    let mut out = Env::new();
    let keys: BTreeSet<String> = t.keys().chain(e.keys()).cloned().collect();
    for k in keys {
        let a = t.get(&k).cloned().unwrap_or(Val::Unknown);
        let b = e.get(&k).cloned().unwrap_or(Val::Unknown);
        let v = match (a, b, c) {
            (a, b, _) if a == b => a,
            (Val::Known(x), Val::Known(y), Some(c)) => Val::Known(Expr::ite(c.clone(), x, y)),
            _ => Val::Unknown,
        };
        out.insert(k, v);
    }
    out
}

/// Substitute call arguments into a summary. Array arguments may be whole
/// arrays or row slices (`D[n-1]`).
fn instantiate(s: &Summary, args: &[Expr]) -> Option<Expr> {
    let map: BTreeMap<&str, &Expr> = s.params.iter().map(|p| p.as_str()).zip(args).collect();
    let mut ok = true;
    let out = s.ret.map(&mut |e| match e {
        Expr::Var(v) if map.contains_key(v.as_str()) => map[v.as_str()].clone(),
        Expr::Index(a, idx) if map.contains_key(a.as_str()) => match map[a.as_str()] {
            Expr::Var(base) => Expr::Index(base.clone(), idx),
            Expr::Index(base, pre) => {
                let mut full = pre.clone();
                full.extend(idx);
                Expr::Index(base.clone(), full)
            }
            _ => {
                ok = false;
                Expr::Index(a, idx)
            }
        },
        other => other,
    });
    ok.then_some(out)
}
