use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context};

use dpfeedback::clustering::{assign_reference, rank_candidates, Cluster, ReferenceOrigin, ReferenceSource};

use crate::ingest::extract;
use crate::state::{valid_id, CorpusState, Extraction, Submission};

/// Representatives shown per cluster.
const SHOWN: usize = 3;

fn bounds(s: &CorpusState) -> BTreeMap<String, Vec<String>> {
    s.submissions
        .iter()
        .filter_map(|(id, sub)| match &sub.extraction {
            Extraction::Extracted { bounds, .. } => Some((id.clone(), bounds.clone())),
            Extraction::Unlabeled { .. } => None,
        })
        .collect()
}

pub fn list(s: &CorpusState) -> String {
    if s.clusters.is_empty() {
        return "nothing to review\n".into();
    }
    let b = bounds(s);
    let mut out = String::new();
    for (i, c) in s.clusters.iter().enumerate() {
        out += &format!("#{} {} ({} members) {}\n", i + 1, c.cluster_id, c.members.len(), c.feature_vector);
        match (&c.reference, c.reference_origin) {
            (Some(r), Some(ReferenceOrigin::InstructorAdded)) => out += &format!("  reference: {r} (added)\n"),
            (Some(r), _) => out += &format!("  reference: {r}\n"),
            (None, _) => {
                let ranked = rank_candidates(c, &b);
                let shown: Vec<&str> = ranked.iter().take(SHOWN).map(String::as_str).collect();
                out += &format!("  no reference; candidates: {}\n", shown.join(", "));
            }
        }
    }
    out
}

/// A full cluster id or a unique prefix of one.
pub fn resolve<'a>(s: &'a CorpusState, key: &str) -> anyhow::Result<&'a Cluster> {
    let hits: Vec<&Cluster> = s.clusters.iter().filter(|c| c.cluster_id.starts_with(key)).collect();
    match hits.as_slice() {
        [c] => Ok(c),
        [] => bail!("no cluster with id {key}"),
        _ => bail!("cluster prefix {key} is ambiguous"),
    }
}

pub fn mark(s: &mut CorpusState, cluster: &str, sub: &str) -> anyhow::Result<()> {
    let id = resolve(s, cluster)?.cluster_id.clone();
    assign_reference(&mut s.clusters, &id, ReferenceSource::Member(sub))?;
    s.results.clear();
    Ok(())
}

/// Ingests `path` as a new solution and makes it the reference of `cluster`.
/// Returns the id it was stored under.
pub fn add(s: &mut CorpusState, cluster: &str, path: &Path, id: Option<&str>) -> anyhow::Result<String> {
    let cid = resolve(s, cluster)?.cluster_id.clone();
    let id = match id {
        Some(i) => i.to_string(),
        None => path.file_stem().and_then(|x| x.to_str()).ok_or_else(|| anyhow!("cannot name {}", path.display()))?.to_string(),
    };
    if !valid_id(&id) {
        bail!("invalid submission id '{id}'");
    }
    if s.submissions.contains_key(&id) {
        bail!("submission id '{id}' already exists");
    }
    let source = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let (fv, bounds) = extract(&source).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    assign_reference(&mut s.clusters, &cid, ReferenceSource::New { id: &id, features: &fv })?;
    let extraction = Extraction::Extracted { cluster: cid, bounds };
    s.submissions.insert(id.clone(), Submission { path: path.display().to_string(), source, extraction });
    s.results.clear();
    Ok(id)
}
