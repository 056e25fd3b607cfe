//! Variable maps between a reference and a candidate, and the pairing of
//! their canonical top-level statements.

mod canon;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::analysis::{Direction, Label, LabeledProgram};
use crate::frontend::Stmt;

pub use canon::{canonical_body, canonical_program, canonicalize_loops, CanonError, Segment};

/// Injective map from reference names to candidate names.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct VariableMap {
    pub pairs: BTreeMap<String, String>,
}

impl VariableMap {
    pub fn get(&self, r: &str) -> Option<&str> {
        self.pairs.get(r).map(|s| s.as_str())
    }

    pub fn inverse(&self, c: &str) -> Option<&str> {
        self.pairs.iter().find(|(_, v)| v.as_str() == c).map(|(k, _)| k.as_str())
    }

    pub fn is_injective(&self) -> bool {
        let image: BTreeSet<&String> = self.pairs.values().collect();
        image.len() == self.pairs.len()
    }

    /// σ̂: this map extended with loop indices paired by nesting depth.
    pub fn with_indices(&self, r: &[String], c: &[String]) -> VariableMap {
        let mut out = self.clone();
        for (a, b) in r.iter().zip(c) {
            out.pairs.entry(a.clone()).or_insert_with(|| b.clone());
        }
        out
    }
}

impl std::fmt::Display for VariableMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("{")?;
        for (k, (a, b)) in self.pairs.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}->{b}")?;
        }
        f.write_str("}")
    }
}

/// All variable maps: inputs paired by read order, DP arrays by every
/// type-compatible bijection consistent with the input pairing.
pub fn derive_variable_maps(r: &LabeledProgram, c: &LabeledProgram) -> Vec<VariableMap> {
    if r.input_vars.len() != c.input_vars.len() || r.dp_arrays.len() != c.dp_arrays.len() {
        return Vec::new();
    }
    let mut base = VariableMap::default();
    for ((rn, rt), (cn, ct)) in r.input_vars.iter().zip(&c.input_vars) {
        if !rt.compatible(ct) || r.is_dp(rn) != c.is_dp(cn) {
            return Vec::new();
        }
        base.pairs.insert(rn.clone(), cn.clone());
    }
    let mut out = Vec::new();
    fn go(
        k: usize,
        r: &LabeledProgram,
        c: &LabeledProgram,
        cur: &mut VariableMap,
        used: &mut BTreeSet<String>,
        out: &mut Vec<VariableMap>,
    ) {
        let Some(rn) = r.dp_arrays.get(k) else {
            out.push(cur.clone());
            return;
        };
        if let Some(cn) = cur.get(rn) {
            // Already paired as an input.
            if c.is_dp(cn) {
                go(k + 1, r, c, cur, used, out);
            }
            return;
        }
        for cn in &c.dp_arrays {
            if used.contains(cn) || cur.inverse(cn).is_some() {
                continue;
            }
            let (Some(rt), Some(ct)) = (r.vars.get(rn), c.vars.get(cn)) else { continue };
            if !rt.compatible(ct) {
                continue;
            }
            cur.pairs.insert(rn.clone(), cn.clone());
            used.insert(cn.clone());
            go(k + 1, r, c, cur, used, out);
            cur.pairs.remove(rn);
            used.remove(cn);
        }
    }
    go(0, r, c, &mut base, &mut BTreeSet::new(), &mut out);
    debug_assert!(out.iter().all(|m| m.is_injective()));
    out
}

/// Loop nest shape: indices and directions along the deepest path of the
/// first loop in the segment, outermost first.
pub fn loop_nest(lp: &LabeledProgram, s: &Stmt) -> Vec<(Option<String>, Option<Direction>)> {
    fn deepest<'a>(s: &'a Stmt) -> Vec<&'a Stmt> {
        let mut best: Vec<&Stmt> = Vec::new();
        for c in s.children() {
            let d = deepest(c);
            if d.len() > best.len() {
                best = d;
            }
        }
        if s.is_loop() {
            best.insert(0, s);
        }
        best
    }
    deepest(s)
        .into_iter()
        .map(|l| {
            let info = lp.loop_info(l.loc);
            (info.and_then(|i| i.index.clone()), info.and_then(|i| i.direction()))
        })
        .collect()
}

/// Loop indices of a segment's deepest nest, outermost first.
pub fn nest_indices(lp: &LabeledProgram, s: &Stmt) -> Vec<String> {
    loop_nest(lp, s).into_iter().filter_map(|(i, _)| i).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlCorrespondence {
    pub pairs: Vec<(Segment, Segment)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
pub enum CorrespondenceError {
    #[error("no control correspondence at top-level item {index}: {reason}")]
    NoCorrespondence { index: usize, reason: String },
}

/// The σ-domain variables a segment is about: what it writes among inputs
/// and DP arrays, or, when it writes none, the DP arrays it reads.
fn key_vars(lp: &LabeledProgram, s: &Segment) -> BTreeSet<String> {
    let w: BTreeSet<String> = s.writes().into_iter().filter(|n| lp.is_dp(n) || lp.is_input(n)).collect();
    if !w.is_empty() {
        return w;
    }
    s.reads().into_iter().filter(|n| lp.is_dp(n)).collect()
}

pub fn control_correspondence(
    r: &LabeledProgram,
    rs: &[Segment],
    c: &LabeledProgram,
    cs: &[Segment],
    sigma: &VariableMap,
) -> Result<ControlCorrespondence, CorrespondenceError> {
    let fail = |index: usize, reason: String| CorrespondenceError::NoCorrespondence { index, reason };
    if rs.len() != cs.len() {
        return Err(fail(rs.len().min(cs.len()), format!("{} top-level items against {}", rs.len(), cs.len())));
    }
    let mut pairs = Vec::new();
    for (k, (a, b)) in rs.iter().zip(cs).enumerate() {
        let la: BTreeSet<Label> = a.stmts.iter().flat_map(|s| r.labels_within(s)).collect();
        let lb: BTreeSet<Label> = b.stmts.iter().flat_map(|s| c.labels_within(s)).collect();
        if la != lb {
            return Err(fail(k, format!("labels {la:?} against {lb:?}")));
        }
        let mapped: BTreeSet<String> =
            key_vars(r, a).iter().map(|n| sigma.get(n).map(str::to_string).unwrap_or_else(|| format!("?{n}"))).collect();
        if mapped != key_vars(c, b) {
            return Err(fail(k, format!("variables {:?} against {:?}", key_vars(r, a), key_vars(c, b))));
        }
        // Output computation is checked by pattern, so its loop shape may differ.
        if a.label != Label::Output {
            // Straight-line runs compare as one item whatever their length.
            let shape = |lp: &LabeledProgram, seg: &Segment| -> Vec<Vec<Option<Direction>>> {
                seg.loops().map(|s| loop_nest(lp, s).into_iter().map(|x| x.1).collect()).collect()
            };
            let (sa, sb) = (shape(r, a), shape(c, b));
            if sa != sb {
                return Err(fail(k, format!("loop shapes {sa:?} against {sb:?}")));
            }
        }
        pairs.push((a.clone(), b.clone()));
    }
    Ok(ControlCorrespondence { pairs })
}
