//! End-to-end verification of a candidate against a reference.

use std::collections::BTreeMap;
use std::time::Instant;

use super::{
    check_bounds, compare_outputs, gen_feedback, lift_output_pattern, output::fresh, Correction, FeedbackReport, Fix, PairTrace,
    Section, Verdict, DEFAULT_DELTA,
};
use crate::analysis::{analyze, AnalysisError, Label, LabeledProgram};
use crate::constraints::InputConstraints;
use crate::correspondence::{
    canonical_program, canonicalize_loops, control_correspondence, derive_variable_maps, CanonError, Segment, VariableMap,
};
use crate::encoder::build_queries;
use crate::frontend::{load, stmt_to_string, Expr, FrontendError, LValue, Stmt, StmtKind};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PrepareError {
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Canon(#[from] CanonError),
}

/// A submission ready for comparison: its canonical program, labeled, and
/// the canonical top-level segments.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub lp: LabeledProgram,
    pub segments: Vec<Segment>,
}

pub fn prepare(src: &str) -> Result<Prepared, PrepareError> {
    let p = load(src)?;
    let lp = analyze(&p)?;
    let mut cp = canonical_program(&lp)?;
    cp.renumber();
    let lp = analyze(&cp)?;
    let segments = canonicalize_loops(&lp)?;
    Ok(Prepared { lp, segments })
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub solver: SolverConfig,
    pub delta: usize,
    /// Over the reference's input names.
    pub constraints: InputConstraints,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { solver: SolverConfig::default(), delta: DEFAULT_DELTA, constraints: InputConstraints::default() }
    }
}

/// Writes that verification would not see.
fn unsafe_writes(c: &LabeledProgram) -> Option<String> {
    let mut why = None;
    for s in &c.program.main().body {
        s.walk(&mut |t| {
            if why.is_some() || c.label(t.loc).is_some() {
                return;
            }
            let Some(n) = t.written_name() else { return };
            let array = c.vars.get(n).is_some_and(|v| !v.dims.is_empty());
            if array || c.is_input(n) {
                why = Some(format!("unlabeled statement at line {} writes '{n}'", t.loc.line));
            }
        });
    }
    for f in c.program.functions.iter().filter(|f| f.name != "main") {
        let arrays: Vec<&str> = f.params.iter().filter(|p| !p.dims.is_empty()).map(|p| p.name.as_str()).collect();
        for s in &f.body {
            s.walk(&mut |t| {
                if let StmtKind::Assign { target, .. } | StmtKind::Read { target, .. } = &t.kind {
                    if why.is_none() && !target.is_scalar() && arrays.contains(&target.name.as_str()) {
                        why = Some(format!("helper '{}' writes its array parameter '{}'", f.name, target.name));
                    }
                }
            });
        }
    }
    why
}

struct MapResult {
    sigma: VariableMap,
    corrections: Vec<Correction>,
    fixes: Vec<Fix>,
    trace: Vec<PairTrace>,
}

fn seg_text(s: &Segment, rename: &impl Fn(&str) -> Option<String>) -> String {
    let texts: Vec<String> = s
        .stmts
        .iter()
        .map(|t| {
            let mut t = t.clone();
            rename_stmt(&mut t, rename);
            stmt_to_string(&t)
        })
        .collect();
    texts.join("")
}

fn rename_stmt(s: &mut Stmt, f: &impl Fn(&str) -> Option<String>) {
    match &mut s.kind {
        StmtKind::Decl { vars, .. } => {
            for d in vars {
                d.name = f(&d.name).unwrap_or_else(|| d.name.clone());
                d.dims = d.dims.iter().map(|e| e.rename(f)).collect();
                d.init = d.init.as_ref().map(|e| e.rename(f));
            }
        }
        StmtKind::Assign { target, value } => {
            *target = rename_lvalue(target, f);
            *value = value.rename(f);
        }
        StmtKind::Read { target, .. } => *target = rename_lvalue(target, f),
        StmtKind::Write { args, .. } => *args = args.iter().map(|e| e.rename(f)).collect(),
        StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => *cond = cond.rename(f),
        StmtKind::For { cond, .. } => *cond = cond.as_ref().map(|e| e.rename(f)),
        StmtKind::Return(Some(e)) => *e = e.rename(f),
        _ => {}
    }
    for c in s.children_mut() {
        rename_stmt(c, f);
    }
}

fn rename_lvalue(lv: &LValue, f: &impl Fn(&str) -> Option<String>) -> LValue {
    LValue { name: f(&lv.name).unwrap_or_else(|| lv.name.clone()), indices: lv.indices.iter().map(|e| e.rename(f)).collect() }
}

fn verify_map(r: &Prepared, c: &Prepared, sigma: &VariableMap, cfg: &VerifyConfig) -> Result<MapResult, String> {
    let cc = control_correspondence(&r.lp, &r.segments, &c.lp, &c.segments, sigma).map_err(|e| e.to_string())?;
    let (mut corrections, mut fixes) = super::check_declarations(&r.lp, &c.lp, sigma);
    let mut dims: BTreeMap<String, Vec<Expr>> =
        c.lp.vars.iter().filter(|(_, t)| !t.dims.is_empty()).map(|(n, t)| (n.clone(), t.dims.clone())).collect();
    for f in &fixes {
        if let Fix::Dims { array, dims: d } = f {
            dims.insert(array.clone(), d.clone());
        }
    }
    let rename = |n: &str| sigma.get(n).map(str::to_string);
    let cand_ctx = cfg.constraints.conjunction().rename(&rename);
    let mut trace = Vec::new();
    for (rs, cs) in &cc.pairs {
        if rs.label == Label::Output {
            let lifted = (lift_output_pattern(&r.lp.program, rs), lift_output_pattern(&c.lp.program, cs));
            if let (Some(a), Some(b)) = &lifted {
                let found = compare_outputs(a, b, sigma, &cand_ctx, &cfg.solver, Some(cs.first_line()));
                if !found.is_empty() {
                    let mut taken = c.lp.vars.keys().cloned().collect();
                    let acc = fresh("fb_acc", &mut taken);
                    let k = fresh("fb_k", &mut taken);
                    let want = a.rename(&rename);
                    let want = super::OutputPattern { format: b.format.clone(), ..want };
                    fixes.push(Fix::Replace {
                        at: cs.stmts.iter().map(|s| s.loc.ordinal).collect(),
                        stmts: want.generate(&acc, &k),
                        decls: vec![acc, k],
                    });
                }
                corrections.extend(found);
                continue;
            }
            let looped = |s: &Segment| s.stmts.iter().any(|t| t.contains_loop());
            if looped(rs) || looped(cs) {
                if seg_text(rs, &rename) == seg_text(cs, &|_| None) {
                    continue;
                }
                return Err("output computation is not a recognized pattern".into());
            }
        }
        let queries =
            build_queries(&r.lp, rs, &c.lp, cs, sigma, &cfg.constraints).map_err(|e| e.to_string())?;
        for mut q in queries {
            let mut out = gen_feedback(&mut q, rs.label, cfg.delta, &cfg.solver).map_err(|e| e.0)?;
            let bounds = check_bounds(&mut q, rs.label, &dims, &mut out.trace, &cfg.solver).map_err(|e| e.0)?;
            corrections.extend(out.corrections);
            corrections.extend(bounds);
            for f in out.fixes {
                match f {
                    Fix::Body { looped: false, body, .. } => fixes.push(Fix::Body {
                        at: cs.stmts.iter().map(|s| s.loc.ordinal).collect(),
                        looped: false,
                        body,
                    }),
                    f => fixes.push(f),
                }
            }
            trace.push(out.trace);
        }
    }
    Ok(MapResult { sigma: sigma.clone(), corrections, fixes, trace })
}

/// Verify a prepared candidate against a prepared reference.
pub fn verify(r: &Prepared, c: &Prepared, id: &str, cfg: &VerifyConfig) -> FeedbackReport {
    let start = Instant::now();
    let finish = |mut rep: FeedbackReport| {
        rep.elapsed_ms = start.elapsed().as_millis() as u64;
        rep
    };
    if let Some(why) = unsafe_writes(&c.lp) {
        return finish(FeedbackReport::unlabeled(id, why));
    }
    let maps = derive_variable_maps(&r.lp, &c.lp);
    if maps.is_empty() {
        return finish(FeedbackReport::unlabeled(id, "no variable map between reference and candidate"));
    }
    let mut best: Option<MapResult> = None;
    let mut first_err = None;
    for sigma in &maps {
        match verify_map(r, c, sigma, cfg) {
            Ok(m) => {
                if best.as_ref().is_none_or(|b| m.corrections.len() < b.corrections.len()) {
                    best = Some(m);
                }
                if best.as_ref().is_some_and(|b| b.corrections.is_empty()) {
                    break;
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let Some(m) = best else {
        return finish(FeedbackReport::unlabeled(id, first_err.unwrap_or_default()));
    };
    let mut corrections = m.corrections;
    // Stable: declarations first, the rest in pair order.
    corrections.sort_by_key(|c| c.section != Section::Declaration);
    let size = |g: &Option<Expr>| g.as_ref().map_or(0, Expr::size);
    let feedback_size = corrections.iter().map(|c| size(&c.guard)).sum();
    let raw_feedback_size = corrections.iter().map(|c| size(&c.raw_guard)).sum();
    let verdict = if corrections.is_empty() { Verdict::VerifiedCorrect } else { Verdict::Faulty };
    finish(FeedbackReport {
        submission: id.to_string(),
        verdict,
        reason: None,
        sigma: Some(m.sigma),
        corrections,
        fixes: m.fixes,
        trace: m.trace,
        feedback_size,
        raw_feedback_size,
        elapsed_ms: 0,
    })
}

/// `verify` from source text. A candidate that cannot be prepared needs
/// manual evaluation; a reference that cannot is an error.
pub fn verify_sources(reference: &str, candidate: &str, id: &str, cfg: &VerifyConfig) -> Result<FeedbackReport, PrepareError> {
    let r = prepare(reference)?;
    Ok(match prepare(candidate) {
        Ok(c) => verify(&r, &c, id, cfg),
        Err(e) => FeedbackReport::unlabeled(id, e.to_string()),
    })
}
