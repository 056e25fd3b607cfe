//! DP-array identification and statement labeling by pattern matching over
//! the substitution store.

use std::collections::{BTreeMap, BTreeSet};

use super::symexec::guarded_leaves;
use super::{declared_vars, input_vars, loops, AnalysisError, Label, LabeledProgram, SubstitutionStore};
use crate::frontend::{Expr, Program, Stmt, StmtKind};

/// Resolved right-hand side of an array assignment.
fn resolved_rhs<'s>(s: &Stmt, store: &'s SubstitutionStore) -> Option<&'s Expr> {
    match &s.kind {
        StmtKind::Assign { target, .. } => store.resolved_expr(s.loc, target.indices.len()),
        _ => None,
    }
}

/// Arrays that appear on both sides of some assignment once temporaries are
/// replaced, ordered by the location of that first assignment.
pub fn identify_dp_arrays(p: &Program, store: &SubstitutionStore) -> Result<Vec<String>, AnalysisError> {
    let mut out: Vec<String> = Vec::new();
    for s in &p.main().body {
        s.walk(&mut |s| {
            if let StmtKind::Assign { target, .. } = &s.kind {
                if target.is_scalar() || out.contains(&target.name) {
                    return;
                }
                if resolved_rhs(s, store).is_some_and(|e| e.mentions(&target.name)) {
                    out.push(target.name.clone());
                }
            }
        });
    }
    if out.is_empty() {
        return Err(AnalysisError::NoDpArray);
    }
    Ok(out)
}

pub fn label_statements(p: &Program, store: &SubstitutionStore) -> Result<LabeledProgram, AnalysisError> {
    let dp_arrays = identify_dp_arrays(p, store)?;
    let vars = declared_vars(p);
    let inputs = input_vars(p);
    let scalars: BTreeSet<String> =
        vars.iter().filter(|(_, t)| t.dims.is_empty()).map(|(n, _)| n.clone()).collect();
    let (loop_indices, loop_infos) = loops::analyze_loops(&p.main().body, &scalars);
    let input_names: BTreeSet<&str> = inputs.iter().map(|(n, _)| n.as_str()).collect();
    let dp: BTreeSet<&str> = dp_arrays.iter().map(|s| s.as_str()).collect();

    let mut labels = BTreeMap::new();
    let mut first_err: Option<AnalysisError> = None;
    let classify = |e: &Expr| -> Option<Label> {
        let names = e.names();
        if names.iter().any(|n| dp.contains(n.as_str())) {
            return Some(Label::Update);
        }
        names
            .iter()
            .all(|n| input_names.contains(n.as_str()) || loop_indices.contains(n))
            .then_some(Label::Init)
    };
    for s in &p.main().body {
        s.walk(&mut |s| {
            let label = match &s.kind {
                StmtKind::Read { .. } => Some(Label::Input),
                StmtKind::Write { .. } => Some(Label::Output),
                StmtKind::Assign { target, .. } if dp.contains(target.name.as_str()) && !target.is_scalar() => {
                    let Some(rhs) = resolved_rhs(s, store) else {
                        first_err.get_or_insert(AnalysisError::LabelIncomplete(s.loc, target.name.clone()));
                        return;
                    };
                    let mut seen = BTreeSet::new();
                    for leaf in guarded_leaves(rhs) {
                        match classify(&leaf.expr) {
                            Some(l) => {
                                seen.insert(l);
                            }
                            None => {
                                first_err
                                    .get_or_insert(AnalysisError::LabelIncomplete(s.loc, target.name.clone()));
                                return;
                            }
                        }
                    }
                    if seen.len() > 1 {
                        first_err.get_or_insert(AnalysisError::LabelConflict(s.loc));
                        return;
                    }
                    seen.into_iter().next()
                }
                _ => None,
            };
            if let Some(l) = label {
                labels.insert(s.loc.ordinal, l);
            }
        });
    }
    if let Some(e) = first_err {
        return Err(e);
    }

    // Output: assignments feeding a printed scalar, transitively.
    let temps: BTreeSet<String> = scalars
        .iter()
        .filter(|n| !input_names.contains(n.as_str()) && !loop_indices.contains(*n))
        .cloned()
        .collect();
    let mut feeding: BTreeSet<String> = BTreeSet::new();
    let mut work: Vec<String> = Vec::new();
    for s in &p.main().body {
        s.walk(&mut |s| {
            if let StmtKind::Write { args, .. } = &s.kind {
                for a in args {
                    work.extend(a.names().into_iter().filter(|n| temps.contains(n)));
                }
            }
        });
    }
    while let Some(x) = work.pop() {
        if !feeding.insert(x.clone()) {
            continue;
        }
        for s in &p.main().body {
            s.walk(&mut |s| {
                let rhs: Option<&Expr> = match &s.kind {
                    StmtKind::Assign { target, value } if target.is_scalar() && target.name == x => Some(value),
                    StmtKind::Decl { vars, .. } => vars.iter().find(|d| d.name == x).and_then(|d| d.init.as_ref()),
                    _ => None,
                };
                if let Some(rhs) = rhs {
                    work.extend(rhs.names().into_iter().filter(|n| temps.contains(n) && !feeding.contains(n)));
                }
            });
        }
    }
    for s in &p.main().body {
        s.walk(&mut |s| {
            let feeds = match &s.kind {
                StmtKind::Assign { target, .. } => target.is_scalar() && feeding.contains(&target.name),
                StmtKind::Decl { vars, .. } => vars.iter().any(|d| d.init.is_some() && feeding.contains(&d.name)),
                _ => false,
            };
            if feeds {
                labels.entry(s.loc.ordinal).or_insert(Label::Output);
            }
        });
    }

    Ok(LabeledProgram {
        program: p.clone(),
        dp_arrays,
        input_vars: inputs,
        loop_indices,
        labels,
        store: store.clone(),
        vars,
        loops: loop_infos,
    })
}
