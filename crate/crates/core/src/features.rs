//! Discrete strategy features under canonical naming.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{Direction, Label, LabeledProgram};
use crate::frontend::{expr_to_compact, Expr, ScalarType, Stmt, StmtKind};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UpdateLoopFeature {
    pub depth: usize,
    pub directions: Vec<Direction>,
    pub updated_element: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FeatureVector {
    pub dp_type: ScalarType,
    pub dp_dims: usize,
    pub input_reused_as_dp: bool,
    pub num_update_loops: usize,
    pub update_loops: Vec<UpdateLoopFeature>,
}

impl FeatureVector {
    /// JSON with sorted keys, so equal vectors give equal bytes.
    pub fn canonical_text(&self) -> String {
        let v = serde_json::to_value(self).expect("feature vector serializes");
        serde_json::to_string(&v).expect("json value serializes")
    }

    /// Stable content hash of the canonical text.
    pub fn id(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        hex::encode(&digest[..8])
    }
}

impl std::fmt::Display for FeatureVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "<{},{}> reuse={} loops={}",
            self.dp_type,
            self.dp_dims,
            if self.input_reused_as_dp { "yes" } else { "no" },
            self.num_update_loops
        )?;
        for l in &self.update_loops {
            let dirs: String = l.directions.iter().map(|d| d.symbol()).collect();
            write!(f, " [{} <{}> {}]", l.depth, dirs, l.updated_element)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
pub enum FeatureError {
    #[error("feature extraction failed: {0}")]
    FeatureExtractionFailed(String),
}

/// Canonical name of the loop index at nesting level `depth` (0 = outermost).
pub fn canonical_index(depth: usize) -> String {
    const NAMES: [&str; 6] = ["i", "j", "k", "l", "m", "o"];
    NAMES.get(depth).map(|s| s.to_string()).unwrap_or_else(|| format!("i{depth}"))
}

/// Canonical name of the `k`-th DP array.
pub fn canonical_dp(k: usize) -> String {
    if k == 0 { "dp".into() } else { format!("dp{k}") }
}

/// Canonical name of the `k`-th input variable.
pub fn canonical_input(k: usize) -> String {
    if k == 0 { "in".into() } else { format!("in{k}") }
}

fn fail(msg: impl Into<String>) -> FeatureError {
    FeatureError::FeatureExtractionFailed(msg.into())
}

/// Update statements nested in `s` together with their enclosing loops
/// (outermost first, starting with `s` itself when it is a loop).
fn updates_with_loops<'a>(lp: &LabeledProgram, s: &'a Stmt, enclosing: &mut Vec<&'a Stmt>, out: &mut Vec<(Vec<&'a Stmt>, &'a Stmt)>) {
    if lp.label(s.loc) == Some(Label::Update) {
        out.push((enclosing.clone(), s));
    }
    let pushed = s.is_loop();
    if pushed {
        enclosing.push(s);
    }
    for c in s.children() {
        updates_with_loops(lp, c, enclosing, out);
    }
    if pushed {
        enclosing.pop();
    }
}

/// The loop nest around the deepest update in `top` (ties go to the first in
/// source order) and that update.
fn update_nest<'a>(lp: &LabeledProgram, top: &'a Stmt) -> Result<(Vec<&'a Stmt>, &'a Stmt), FeatureError> {
    let mut found = Vec::new();
    updates_with_loops(lp, top, &mut Vec::new(), &mut found);
    let depth = found.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
    found.into_iter().find(|(l, _)| l.len() == depth).ok_or_else(|| fail("loop has no update"))
}

/// Canonical names for one nest: indices by depth, then DP arrays, then inputs.
fn canonical_renaming(lp: &LabeledProgram, nest: &[&Stmt]) -> BTreeMap<String, String> {
    let mut rename = BTreeMap::new();
    for (d, l) in nest.iter().enumerate() {
        if let Some(index) = lp.loop_info(l.loc).and_then(|i| i.index.as_ref()) {
            rename.entry(index.clone()).or_insert_with(|| canonical_index(d));
        }
    }
    for (k, a) in lp.dp_arrays.iter().enumerate() {
        rename.insert(a.clone(), canonical_dp(k));
    }
    for (k, (n, _)) in lp.input_vars.iter().enumerate() {
        rename.entry(n.clone()).or_insert_with(|| canonical_input(k));
    }
    rename
}

fn canonical(e: &Expr, rename: &BTreeMap<String, String>) -> String {
    expr_to_compact(&e.rename(&|n| Some(rename.get(n).cloned().unwrap_or_else(|| "_".into()))))
}

fn loop_feature(lp: &LabeledProgram, top: &Stmt) -> Result<UpdateLoopFeature, FeatureError> {
    let (nest, upd) = update_nest(lp, top)?;
    let mut directions = Vec::new();
    for l in &nest {
        let info = lp.loop_info(l.loc).ok_or_else(|| fail(format!("unanalyzed loop at {}", l.loc)))?;
        if info.index.is_none() {
            return Err(fail(format!("loop at {} has no index", l.loc)));
        }
        directions.push(info.direction().ok_or_else(|| fail(format!("loop at {} has no constant stride", l.loc)))?);
    }
    let StmtKind::Assign { target, .. } = &upd.kind else {
        return Err(fail(format!("update at {} is not an assignment", upd.loc)));
    };
    let rename = canonical_renaming(lp, &nest);
    Ok(UpdateLoopFeature { depth: nest.len(), directions, updated_element: canonical(&target.to_expr(), &rename) })
}

fn update_loop_tops(lp: &LabeledProgram) -> impl Iterator<Item = &Stmt> {
    lp.program.main().body.iter().filter(|s| s.is_loop() && lp.labels_within(s).contains(&Label::Update))
}

/// Canonical guard text of every loop around each update-loop nest, in order.
/// Used for majority voting inside a cluster.
pub fn update_loop_bounds(lp: &LabeledProgram) -> Vec<String> {
    let mut out = Vec::new();
    for top in update_loop_tops(lp) {
        let Ok((nest, _)) = update_nest(lp, top) else { continue };
        let rename = canonical_renaming(lp, &nest);
        for l in nest {
            let cond = match &l.kind {
                StmtKind::For { cond: Some(c), .. } | StmtKind::While { cond: c, .. } => canonical(c, &rename),
                _ => String::new(),
            };
            out.push(cond);
        }
    }
    out
}

pub fn extract_features(lp: &LabeledProgram) -> Result<FeatureVector, FeatureError> {
    let primary = lp.dp_arrays.first().ok_or_else(|| fail("no DP array"))?;
    let ty = lp.vars.get(primary).ok_or_else(|| fail(format!("'{primary}' is not declared in main")))?;
    let input_reused_as_dp = lp.dp_arrays.iter().any(|a| lp.is_input(a));

    // A lone update outside any loop does not count as an update loop.
    let update_loops = update_loop_tops(lp).map(|s| loop_feature(lp, s)).collect::<Result<Vec<_>, _>>()?;
    Ok(FeatureVector {
        dp_type: ty.ty,
        dp_dims: ty.rank(),
        input_reused_as_dp,
        num_update_loops: update_loops.len(),
        update_loops,
    })
}
