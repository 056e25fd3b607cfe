//! Static analysis of a pre-processed submission: the substitution store,
//! loop indices, DP arrays and statement labels.

mod labels;
pub mod loops;
pub mod symexec;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::frontend::{Expr, Location, Program, ScalarType, Stmt, StmtKind};

pub use labels::{identify_dp_arrays, label_statements};
pub use loops::{Direction, LoopInfo};
pub use symexec::{guarded_leaves, GuardedExpr, SubstitutionStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Input,
    Init,
    Update,
    Output,
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Label::Input => "input",
            Label::Init => "initialization",
            Label::Update => "update",
            Label::Output => "output",
        })
    }
}

/// Declared type of a variable in `main`; `dims` is empty for scalars.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarType {
    pub ty: ScalarType,
    pub dims: Vec<Expr>,
}

impl VarType {
    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn compatible(&self, other: &VarType) -> bool {
        self.ty == other.ty && self.rank() == other.rank()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
pub enum AnalysisError {
    #[error("recursive call chain through '{0}' is not supported")]
    RecursionUnsupported(String),
    #[error("no DP array found")]
    NoDpArray,
    #[error("statement at {0} has guarded variants with different labels")]
    LabelConflict(Location),
    #[error("write to DP array '{1}' at {0} matches no labeling pattern")]
    LabelIncomplete(Location, String),
}

impl From<symexec::SymexecError> for AnalysisError {
    fn from(e: symexec::SymexecError) -> Self {
        match e {
            symexec::SymexecError::RecursionUnsupported(f) => AnalysisError::RecursionUnsupported(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledProgram {
    pub program: Program,
    /// In order of first update.
    pub dp_arrays: Vec<String>,
    /// In order of first read.
    pub input_vars: Vec<(String, VarType)>,
    pub loop_indices: BTreeSet<String>,
    /// Keyed by location ordinal.
    pub labels: BTreeMap<u32, Label>,
    pub store: SubstitutionStore,
    pub vars: BTreeMap<String, VarType>,
    pub loops: BTreeMap<u32, LoopInfo>,
}

impl LabeledProgram {
    pub fn label(&self, loc: Location) -> Option<Label> {
        self.labels.get(&loc.ordinal).copied()
    }

    pub fn is_input(&self, name: &str) -> bool {
        self.input_vars.iter().any(|(n, _)| n == name)
    }

    pub fn is_dp(&self, name: &str) -> bool {
        self.dp_arrays.iter().any(|n| n == name)
    }

    /// Labels carried by `s` and everything nested in it.
    pub fn labels_within(&self, s: &Stmt) -> BTreeSet<Label> {
        let mut out = BTreeSet::new();
        s.walk(&mut |t| {
            if let Some(l) = self.label(t.loc) {
                out.insert(l);
            }
        });
        out
    }

    pub fn loop_info(&self, loc: Location) -> Option<&LoopInfo> {
        self.loops.get(&loc.ordinal)
    }
}

/// Declared variables of `main` (first declaration wins).
pub fn declared_vars(p: &Program) -> BTreeMap<String, VarType> {
    let mut out = BTreeMap::new();
    for s in &p.main().body {
        s.walk(&mut |s| {
            if let StmtKind::Decl { ty, vars } = &s.kind {
                for d in vars {
                    out.entry(d.name.clone()).or_insert(VarType { ty: *ty, dims: d.dims.clone() });
                }
            }
        });
    }
    out
}

/// Variables filled by `scanf` in `main`, in order of first read.
pub fn input_vars(p: &Program) -> Vec<(String, VarType)> {
    let vars = declared_vars(p);
    let mut out: Vec<(String, VarType)> = Vec::new();
    for s in &p.main().body {
        s.walk(&mut |s| {
            if let StmtKind::Read { target, .. } = &s.kind {
                if !out.iter().any(|(n, _)| *n == target.name) {
                    if let Some(t) = vars.get(&target.name) {
                        out.push((target.name.clone(), t.clone()));
                    }
                }
            }
        });
    }
    out
}

pub fn identify_loop_indices(p: &Program) -> BTreeSet<String> {
    let scalars = declared_vars(p).into_iter().filter(|(_, t)| t.dims.is_empty()).map(|(n, _)| n).collect();
    loops::analyze_loops(&p.main().body, &scalars).0
}

/// DP variables that are never substituted: arrays, inputs and loop indices.
fn atoms(p: &Program) -> BTreeSet<String> {
    let vars = declared_vars(p);
    let mut out: BTreeSet<String> =
        vars.iter().filter(|(_, t)| !t.dims.is_empty()).map(|(n, _)| n.clone()).collect();
    out.extend(input_vars(p).into_iter().map(|(n, _)| n));
    out.extend(identify_loop_indices(p));
    out
}

pub fn compute_substitution_store(p: &Program) -> Result<SubstitutionStore, AnalysisError> {
    Ok(symexec::run_main(p, &atoms(p))?)
}

/// The whole analysis: store, DP arrays and labels.
pub fn analyze(p: &Program) -> Result<LabeledProgram, AnalysisError> {
    let store = compute_substitution_store(p)?;
    label_statements(p, &store)
}

#[cfg(test)]
mod tests;
