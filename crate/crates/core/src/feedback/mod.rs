//! Counterexample-guided feedback: refinement of the candidate's body
//! formula until the body query is valid, plus declaration and output checks,
//! rendering, and mechanical application of the suggested fixes.

mod apply;
mod decl;
mod output;
mod pipeline;
mod render;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analysis::Label;
use crate::correspondence::VariableMap;
use crate::encoder::{implies, Psi, BodyFormula, Cell, Effect, EffectKind, EquivalenceQuery, GuardedStmt, LoopHeader, Side};
use crate::frontend::{expr_to_string, BinOp, Expr, LValue, Stmt, StmtKind};
use crate::solver::{check_validity, simplify, smt, SolverConfig, SolverVerdict, VerdictKind};

pub use apply::apply;
pub use decl::check_declarations;
pub use output::{compare_outputs, lift_output_pattern, Aggregate, OutputPattern};
pub use pipeline::{prepare, verify, verify_sources, Prepared, PrepareError, VerifyConfig};
pub use render::render;

/// Refinements per statement pair before the whole body is replaced.
pub const DEFAULT_DELTA: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CorrectionKind {
    Declaration,
    IterationSpace,
    ReplaceStatement,
    GuardSplit,
    TotalSubstitution,
    OutputPattern,
    OutOfBounds,
}

/// Part of the program a correction is about, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Section {
    Declaration,
    Input,
    Initialization,
    Update,
    Output,
}

impl From<Label> for Section {
    fn from(l: Label) -> Section {
        match l {
            Label::Input => Section::Input,
            Label::Init => Section::Initialization,
            Label::Update => Section::Update,
            Label::Output => Section::Output,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Correction {
    pub kind: CorrectionKind,
    pub section: Section,
    /// Solver-simplified guard, in candidate names.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard: Option<Expr>,
    /// The guard before simplification.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_guard: Option<Expr>,
    pub suggested: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replaced: Option<String>,
    /// Candidate source line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<u32>,
}

/// A mechanical edit of the candidate's canonical program. Statement
/// positions are location ordinals in that program.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fix {
    Dims { array: String, dims: Vec<Expr> },
    Header { at: u32, headers: Vec<LoopHeader> },
    /// Replace the innermost body of the loop at `at[0]`, or the straight-line
    /// statements `at`, by the guarded paths of `body`.
    Body { at: Vec<u32>, looped: bool, body: BodyFormula },
    /// Replace the statements `at` by `stmts`, declaring `decls` first.
    Replace { at: Vec<u32>, stmts: Vec<Stmt>, decls: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    VerifiedCorrect,
    Faulty,
    Unlabeled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QueryKind {
    Phi,
    IterOnly,
    Psi,
    /// Ψ restricted to one reference path.
    PsiPath,
    GuardEquivalence,
    Bounds,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub query: QueryKind,
    pub verdict: VerdictKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<BTreeMap<String, i64>>,
    /// The checked formula, over scalar symbols.
    pub formula: Expr,
    pub elapsed_ms: u64,
}

/// Queries issued for one statement pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairTrace {
    pub section: Section,
    pub line: u32,
    pub steps: Vec<TraceStep>,
    pub refinements: usize,
    pub total_substitution: bool,
    /// Whether the last body query was valid.
    pub final_valid: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackReport {
    pub submission: String,
    pub verdict: Verdict,
    /// Why the submission needs manual evaluation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<VariableMap>,
    pub corrections: Vec<Correction>,
    pub fixes: Vec<Fix>,
    pub trace: Vec<PairTrace>,
    /// Sum of guard node counts, after and before simplification.
    pub feedback_size: usize,
    pub raw_feedback_size: usize,
    pub elapsed_ms: u64,
}

impl FeedbackReport {
    pub fn unlabeled(id: &str, reason: impl Into<String>) -> FeedbackReport {
        FeedbackReport {
            submission: id.to_string(),
            verdict: Verdict::Unlabeled,
            reason: Some(reason.into()),
            sigma: None,
            corrections: Vec::new(),
            fixes: Vec::new(),
            trace: Vec::new(),
            feedback_size: 0,
            raw_feedback_size: 0,
            elapsed_ms: 0,
        }
    }
}

/// Outcome of refining one statement pair.
#[derive(Debug, Clone)]
pub struct PairOutcome {
    pub corrections: Vec<Correction>,
    pub fixes: Vec<Fix>,
    pub trace: PairTrace,
}

/// Raised when a query cannot be decided; the submission goes to manual
/// evaluation.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct Undecided(pub String);

fn record(trace: &mut PairTrace, query: QueryKind, formula: Expr, v: &SolverVerdict) {
    trace.steps.push(TraceStep {
        query,
        verdict: v.kind,
        model: v.model.clone(),
        formula,
        elapsed_ms: v.elapsed_ms,
    });
}

fn check(trace: &mut PairTrace, query: QueryKind, f: Expr, cfg: &SolverConfig) -> Result<SolverVerdict, Undecided> {
    let v = check_validity(&f, cfg);
    record(trace, query, f, &v);
    if v.kind == VerdictKind::Unknown {
        return Err(Undecided(format!(
            "solver could not decide a {query:?} query: {}",
            v.diagnostics.clone().unwrap_or_default()
        )));
    }
    Ok(v)
}

fn sigma_fn(m: &VariableMap) -> impl Fn(&str) -> Option<String> + '_ {
    |n| m.get(n).map(str::to_string)
}

/// Candidate-side statements performing `effects`, compared cells only.
pub fn effects_to_stmts(q: &EquivalenceQuery, side: Side, effects: &[Effect]) -> Vec<Stmt> {
    let mut out = Vec::new();
    let mut k = 0;
    while k < effects.len() {
        let e = &effects[k];
        match &e.kind {
            EffectKind::Print { format } => {
                let mut args = vec![e.value.clone()];
                while let Some(n) = effects.get(k + 1).filter(|n| n.kind == e.kind && args.len() < format.matches('%').count()) {
                    args.push(n.value.clone());
                    k += 1;
                }
                out.push(Stmt::new(StmtKind::Write { format: format.clone(), args }));
            }
            _ if !q.relevant(side, &e.cell) => {}
            EffectKind::Read => {
                if let Some(target) = lvalue(&e.cell) {
                    out.push(Stmt::new(StmtKind::Read { format: "%d".into(), target }));
                }
            }
            EffectKind::Assign => {
                if let Some(target) = lvalue(&e.cell) {
                    out.push(Stmt::new(StmtKind::Assign { target, value: e.value.clone() }));
                }
            }
        }
        k += 1;
    }
    out
}

fn lvalue(c: &Cell) -> Option<LValue> {
    match c {
        Cell::Elem(n, idx) => Some(LValue { name: n.clone(), indices: idx.clone() }),
        Cell::Scalar(n) => Some(LValue::scalar(n.clone())),
        Cell::Out(_) => None,
    }
}

fn stmts_text(stmts: &[Stmt]) -> String {
    if stmts.is_empty() {
        return "nothing".into();
    }
    let parts: Vec<String> = stmts.iter().map(crate::frontend::render::simple_to_string).collect();
    parts.join("; ")
}

fn rename_effects(effects: &[Effect], m: &VariableMap) -> Vec<Effect> {
    effects.iter().map(|e| crate::encoder::rename_effect(e, &sigma_fn(m))).collect()
}

/// Index of the path of `side` whose guard `model` satisfies.
fn matching_path(q: &mut EquivalenceQuery, side: Side, model: &BTreeMap<String, i64>) -> Option<usize> {
    let n = match side {
        Side::Ref => q.ref_body.stmts.len(),
        Side::Cand => q.cand_body.stmts.len(),
    };
    (0..n).find(|&k| smt::eval(&q.guard(side, k), model).is_some_and(|v| v != 0))
}

/// Simplified and raw candidate-side guard.
fn simplified_guard(q: &mut EquivalenceQuery, g: &Expr, cfg: &SolverConfig) -> (Expr, Expr) {
    let sg = q.scalar_map.pre(Side::Cand, g);
    let ctx = q.context(Side::Cand);
    let s = simplify(&sg, &ctx, cfg);
    (q.scalar_map.unscalarize(&s), g.clone())
}

/// When no path of `side` matches, a frame path that changes nothing, under
/// the negation of all its guards. The opposite side then gets a "remove
/// this computation" correction.
fn add_frame(q: &mut EquivalenceQuery, side: Side, model: &BTreeMap<String, i64>) -> Option<usize> {
    let body = match side {
        Side::Ref => &mut q.ref_body,
        Side::Cand => &mut q.cand_body,
    };
    let guard = Expr::not(Expr::or_all(body.stmts.iter().map(|g| g.guard.clone())));
    body.stmts.push(GuardedStmt { guard, effects: Vec::new(), locs: Vec::new() });
    let k = body.stmts.len() - 1;
    if smt::eval(&q.guard(side, k), model).is_some_and(|v| v != 0) {
        Some(k)
    } else {
        None
    }
}

fn headers_text(hs: &[LoopHeader]) -> String {
    let parts: Vec<String> = hs
        .iter()
        .map(|h| {
            let step = if h.stride == 1 {
                format!("{}++", h.index)
            } else if h.stride == -1 {
                format!("{}--", h.index)
            } else {
                format!("{} = {} + {}", h.index, h.index, h.stride)
            };
            format!("for ({} = {}; {}; {})", h.index, expr_to_string(&h.init), expr_to_string(&h.cond), step)
        })
        .collect();
    parts.join(" ")
}

fn rename_header(h: &LoopHeader, m: &VariableMap) -> LoopHeader {
    let f = sigma_fn(m);
    LoopHeader {
        index: f(&h.index).unwrap_or_else(|| h.index.clone()),
        init: h.init.rename(&f),
        cond: h.cond.rename(&f),
        stride: h.stride,
        loc: h.loc,
    }
}

/// Algorithm for one statement pair: iteration spaces first, then the
/// refinement loop on the body query, at most `delta` refinements.
pub fn gen_feedback(
    q: &mut EquivalenceQuery,
    label: Label,
    delta: usize,
    cfg: &SolverConfig,
) -> Result<PairOutcome, Undecided> {
    let section = Section::from(label);
    let line = q.cand_stmt.loc.line;
    let mut trace = PairTrace { section, line, steps: Vec::new(), refinements: 0, total_substitution: false, final_valid: false };
    let mut corrections = Vec::new();
    let mut fixes = Vec::new();

    let phi = q.phi();
    if check(&mut trace, QueryKind::Phi, phi, cfg)?.kind == VerdictKind::Counterexample {
        let it = q.iter_only();
        if check(&mut trace, QueryKind::IterOnly, it, cfg)?.kind == VerdictKind::Counterexample {
            let want: Vec<LoopHeader> = q.ref_headers.iter().map(|h| rename_header(h, &q.sigma_hat)).collect();
            if want.len() != q.cand_headers.len() {
                return Err(Undecided("loop nests differ in depth".into()));
            }
            corrections.push(Correction {
                kind: CorrectionKind::IterationSpace,
                section,
                guard: None,
                raw_guard: None,
                suggested: headers_text(&want),
                replaced: Some(headers_text(&q.cand_headers)),
                line: Some(line),
            });
            let want: Vec<LoopHeader> =
                want.into_iter().zip(&q.cand_headers).map(|(w, c)| LoopHeader { loc: c.loc, ..w }).collect();
            q.cand_headers = want.clone();
            fixes.push(Fix::Header { at: q.cand_stmt.loc.ordinal, headers: want });
        }
    }

    let original = q.cand_body.clone();
    let mut changed = false;
    loop {
        let psi = q.psi();
        let v = check(&mut trace, QueryKind::Psi, psi.formula(), cfg)?;
        let Some(model) = v.model.filter(|_| v.kind == VerdictKind::Counterexample) else {
            trace.final_valid = true;
            break;
        };
        if trace.refinements == delta {
            let body = q.ref_body.rename(&sigma_fn(&q.sigma_hat));
            let suggested: Vec<String> = body
                .stmts
                .iter()
                .filter(|g| !g.effects.is_empty())
                .map(|g| format!("if ({}) {}", expr_to_string(&g.guard), stmts_text(&effects_to_stmts(q, Side::Cand, &g.effects))))
                .collect();
            corrections.push(Correction {
                kind: CorrectionKind::TotalSubstitution,
                section,
                guard: None,
                raw_guard: None,
                suggested: suggested.join("; "),
                replaced: None,
                line: Some(line),
            });
            q.cand_body = body;
            trace.total_substitution = true;
            changed = true;
            break;
        }
        let Some(mut k1) = matching_path(q, Side::Ref, &model).or_else(|| add_frame(q, Side::Ref, &model)) else {
            return Err(Undecided("countermodel satisfies no guard".into()));
        };
        // Prefer the earliest failing reference path, so the order of
        // corrections does not depend on which countermodel the solver found.
        let mut model = model;
        for k in 0..k1 {
            let g = q.guard(Side::Ref, k);
            let restricted = Psi { pre: Expr::and(psi.pre.clone(), g), ..psi.clone() };
            let v = check(&mut trace, QueryKind::PsiPath, restricted.formula(), cfg)?;
            if let (VerdictKind::Counterexample, Some(m)) = (v.kind, v.model) {
                model = m;
                k1 = k;
                break;
            }
        }
        let Some(k2) = matching_path(q, Side::Cand, &model).or_else(|| add_frame(q, Side::Cand, &model)) else {
            return Err(Undecided("countermodel satisfies no guard".into()));
        };
        trace.refinements += 1;
        changed = true;
        let g1 = q.guard(Side::Ref, k1);
        let g2 = q.guard(Side::Cand, k2);
        let same = implies(psi.pre.clone(), Expr::bin(BinOp::And, implies(g1.clone(), g2.clone()), implies(g2, g1)));
        let s1: Vec<Effect> =
            q.ref_body.stmts[k1].effects.iter().filter(|e| q.relevant(Side::Ref, &e.cell)).cloned().collect();
        let s1 = rename_effects(&s1, &q.sigma_hat);
        let old = q.cand_body.stmts[k2].clone();
        let suggested = stmts_text(&effects_to_stmts(q, Side::Cand, &s1));
        let replaced = Some(stmts_text(&effects_to_stmts(q, Side::Cand, &old.effects)));
        let line = old.locs.first().map(|l| l.line).or(Some(line));
        if check(&mut trace, QueryKind::GuardEquivalence, same, cfg)?.is_valid() {
            let (guard, raw) = simplified_guard(q, &old.guard, cfg);
            q.cand_body.stmts[k2].effects = s1;
            corrections.push(Correction {
                kind: CorrectionKind::ReplaceStatement,
                section,
                guard: Some(guard),
                raw_guard: Some(raw),
                suggested,
                replaced,
                line,
            });
        } else {
            let g1s = q.ref_body.stmts[k1].guard.rename(&sigma_fn(&q.sigma_hat));
            let h2 = Expr::and(old.guard.clone(), g1s.clone());
            let h2n = Expr::and(old.guard.clone(), Expr::not(g1s));
            let (guard, raw) = simplified_guard(q, &h2, cfg);
            let (rest, _) = simplified_guard(q, &h2n, cfg);
            q.cand_body.stmts.splice(
                k2..=k2,
                [
                    GuardedStmt { guard: guard.clone(), effects: s1, locs: old.locs.clone() },
                    GuardedStmt { guard: rest, effects: old.effects.clone(), locs: old.locs.clone() },
                ],
            );
            corrections.push(Correction {
                kind: CorrectionKind::GuardSplit,
                section,
                guard: Some(guard),
                raw_guard: Some(raw),
                suggested,
                replaced,
                line,
            });
        }
    }
    if changed && q.cand_body != original {
        let looped = !q.cand_headers.is_empty();
        fixes.push(Fix::Body { at: vec![q.cand_stmt.loc.ordinal], looped, body: q.cand_body.clone() });
    }
    Ok(PairOutcome { corrections, fixes, trace })
}

/// Out-of-bounds corrections for the candidate's current body.
pub fn check_bounds(
    q: &mut EquivalenceQuery,
    label: Label,
    dims: &BTreeMap<String, Vec<Expr>>,
    trace: &mut PairTrace,
    cfg: &SolverConfig,
) -> Result<Vec<Correction>, Undecided> {
    let mut out = Vec::new();
    for b in q.bounds_checks(dims) {
        let v = check(trace, QueryKind::Bounds, b.formula.clone(), cfg)?;
        if v.kind == VerdictKind::Counterexample {
            let p = q.cand_body.stmts[b.path].clone();
            let (guard, raw) = simplified_guard(q, &b.guard, cfg);
            out.push(Correction {
                kind: CorrectionKind::OutOfBounds,
                section: Section::from(label),
                guard: Some(guard),
                raw_guard: Some(raw),
                suggested: format!("keep {} within its declared bounds", expr_to_string(&b.access)),
                replaced: None,
                line: p.locs.first().map(|l| l.line),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
