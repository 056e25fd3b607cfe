//! Declared dimensions of corresponding arrays.

use std::collections::BTreeMap;

use super::{Correction, CorrectionKind, Fix, Section};
use crate::analysis::LabeledProgram;
use crate::correspondence::VariableMap;
use crate::frontend::{expr_to_compact, Expr, StmtKind};

/// Candidate arrays declared with a literal dimension where the reference
/// uses one computed from inputs. One correction per candidate declaration
/// statement, naming every such array in it.
pub fn check_declarations(r: &LabeledProgram, c: &LabeledProgram, sigma: &VariableMap) -> (Vec<Correction>, Vec<Fix>) {
    let input_derived = |e: &Expr| {
        let names = e.names();
        !names.is_empty() && names.iter().all(|n| r.is_input(n) && r.vars.get(n).is_some_and(|t| t.dims.is_empty()))
    };
    let rename = |e: &Expr| e.rename(&|n| sigma.get(n).map(str::to_string));
    // Candidate declaration statement of each array, by source line.
    let mut decl_line: BTreeMap<String, (u32, u32)> = BTreeMap::new();
    for s in &c.program.main().body {
        s.walk(&mut |t| {
            if let StmtKind::Decl { vars, .. } = &t.kind {
                for d in vars.iter().filter(|d| !d.dims.is_empty()) {
                    decl_line.entry(d.name.clone()).or_insert((t.loc.ordinal, t.loc.line));
                }
            }
        });
    }
    let mut groups: BTreeMap<(u32, String), (u32, Vec<String>)> = BTreeMap::new();
    let mut fixes = Vec::new();
    for (rn, cn) in &sigma.pairs {
        let (Some(rt), Some(ct)) = (r.vars.get(rn), c.vars.get(cn)) else { continue };
        if rt.dims.is_empty() || rt.dims.len() != ct.dims.len() {
            continue;
        }
        let hard = rt.dims.iter().zip(&ct.dims).any(|(a, b)| input_derived(a) && matches!(b, Expr::Int(_)));
        if !hard {
            continue;
        }
        let dims: Vec<Expr> = rt.dims.iter().map(rename).collect();
        let ty = format!("{}{}", ct.ty, dims.iter().map(|d| format!("[{}]", expr_to_compact(d))).collect::<String>());
        let (ord, line) = decl_line.get(cn).copied().unwrap_or_default();
        groups.entry((ord, ty)).or_insert((line, Vec::new())).1.push(cn.clone());
        fixes.push(Fix::Dims { array: cn.clone(), dims });
    }
    let corrections = groups
        .into_iter()
        .map(|((_, ty), (line, mut names))| {
            names.sort();
            let who = match names.as_slice() {
                [one] => format!("Type of {one} should be {ty}"),
                [init @ .., last] => format!("Types of {} and {last} should be {ty}", init.join(", ")),
                [] => unreachable!(),
            };
            Correction {
                kind: CorrectionKind::Declaration,
                section: Section::Declaration,
                guard: None,
                raw_guard: None,
                suggested: who,
                replaced: None,
                line: Some(line),
            }
        })
        .collect();
    (corrections, fixes)
}
