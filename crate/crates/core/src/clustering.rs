//! Partitioning by feature-vector equality and reference bookkeeping.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::features::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceOrigin {
    Corpus,
    InstructorAdded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub cluster_id: String,
    pub feature_vector: FeatureVector,
    pub members: BTreeSet<String>,
    pub reference: Option<String>,
    pub reference_origin: Option<ReferenceOrigin>,
}

impl Cluster {
    fn new(fv: FeatureVector) -> Cluster {
        Cluster { cluster_id: fv.id(), feature_vector: fv, members: BTreeSet::new(), reference: None, reference_origin: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClusterError {
    #[error("submission '{submission}' belongs to cluster {actual}, not {expected}")]
    ReferenceClusterMismatch { submission: String, expected: String, actual: String },
    #[error("submission '{0}' is not a member of cluster {1}")]
    NotAMember(String, String),
    #[error("no cluster with id {0}")]
    UnknownCluster(String),
    #[error("cluster state: {0}")]
    State(String),
}

fn order(clusters: &mut [Cluster]) {
    clusters.sort_by(|a, b| b.members.len().cmp(&a.members.len()).then_with(|| a.cluster_id.cmp(&b.cluster_id)));
}

/// Groups submissions with equal vectors, largest cluster first.
pub fn cluster(corpus: &[(String, FeatureVector)]) -> Vec<Cluster> {
    let mut by_id: BTreeMap<String, Cluster> = BTreeMap::new();
    for (sub, fv) in corpus {
        by_id.entry(fv.id()).or_insert_with(|| Cluster::new(fv.clone())).members.insert(sub.clone());
    }
    let mut out: Vec<Cluster> = by_id.into_values().collect();
    order(&mut out);
    out
}

/// Adds one submission to an existing clustering. Existing clusters are only
/// extended, never split. Returns the id of the cluster it joined.
pub fn add_member(clusters: &mut Vec<Cluster>, sub: &str, fv: &FeatureVector) -> String {
    let id = fv.id();
    match clusters.iter_mut().find(|c| c.cluster_id == id) {
        Some(c) => {
            c.members.insert(sub.to_string());
        }
        None => {
            let mut c = Cluster::new(fv.clone());
            c.members.insert(sub.to_string());
            clusters.push(c);
        }
    }
    order(clusters);
    id
}

/// Members ordered by how many update-loop bounds agree with the cluster
/// majority, most first; ties by id. `bounds` maps a member to its canonical
/// bound texts (see `features::update_loop_bounds`).
pub fn rank_candidates(c: &Cluster, bounds: &BTreeMap<String, Vec<String>>) -> Vec<String> {
    let width = c.members.iter().filter_map(|m| bounds.get(m)).map(|b| b.len()).max().unwrap_or(0);
    let mut majority: Vec<Option<&str>> = Vec::with_capacity(width);
    for k in 0..width {
        let mut votes: BTreeMap<&str, usize> = BTreeMap::new();
        for m in &c.members {
            if let Some(b) = bounds.get(m).and_then(|b| b.get(k)) {
                *votes.entry(b.as_str()).or_default() += 1;
            }
        }
        // Highest count; the lexicographically first text wins a tie.
        let best = votes.iter().max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0))).map(|(t, _)| *t);
        majority.push(best);
    }
    let score = |m: &String| -> usize {
        bounds.get(m).map_or(0, |b| b.iter().zip(&majority).filter(|(x, y)| Some(x.as_str()) == **y).count())
    };
    let mut out: Vec<String> = c.members.iter().cloned().collect();
    out.sort_by(|a, b| score(b).cmp(&score(a)).then_with(|| a.cmp(b)));
    out
}

pub enum ReferenceSource<'a> {
    /// An existing member of the cluster.
    Member(&'a str),
    /// A freshly ingested solution with its extracted vector.
    New { id: &'a str, features: &'a FeatureVector },
}

/// Records the reference for cluster `cluster_id`. A new solution is clustered
/// first and must land in the same cluster.
pub fn assign_reference(clusters: &mut Vec<Cluster>, cluster_id: &str, src: ReferenceSource<'_>) -> Result<(), ClusterError> {
    if !clusters.iter().any(|c| c.cluster_id == cluster_id) {
        return Err(ClusterError::UnknownCluster(cluster_id.to_string()));
    }
    let (sub, origin) = match src {
        ReferenceSource::Member(sub) => {
            let c = clusters.iter().find(|c| c.cluster_id == cluster_id).expect("checked above");
            if !c.members.contains(sub) {
                return Err(ClusterError::NotAMember(sub.to_string(), cluster_id.to_string()));
            }
            (sub, ReferenceOrigin::Corpus)
        }
        ReferenceSource::New { id, features } => {
            if features.id() != cluster_id {
                return Err(ClusterError::ReferenceClusterMismatch {
                    submission: id.to_string(),
                    expected: cluster_id.to_string(),
                    actual: features.id(),
                });
            }
            add_member(clusters, id, features);
            (id, ReferenceOrigin::InstructorAdded)
        }
    };
    let c = clusters.iter_mut().find(|c| c.cluster_id == cluster_id).expect("checked above");
    c.reference = Some(sub.to_string());
    c.reference_origin = Some(origin);
    Ok(())
}

/// The cluster containing `sub`, if any.
pub fn cluster_of<'c>(clusters: &'c [Cluster], sub: &str) -> Option<&'c Cluster> {
    clusters.iter().find(|c| c.members.contains(sub))
}

/// Writes the state file through a temporary sibling and a rename.
pub fn save_state(path: &Path, clusters: &[Cluster]) -> Result<(), ClusterError> {
    let err = |e: std::io::Error| ClusterError::State(format!("{}: {e}", path.display()));
    let text = serde_json::to_string_pretty(clusters).map_err(|e| ClusterError::State(e.to_string()))?;
    let tmp = path.with_extension("json.tmp");
    let mut f = std::fs::File::create(&tmp).map_err(err)?;
    f.write_all(text.as_bytes()).map_err(err)?;
    f.sync_all().map_err(err)?;
    std::fs::rename(&tmp, path).map_err(err)
}

pub fn load_state(path: &Path) -> Result<Vec<Cluster>, ClusterError> {
    let text = std::fs::read_to_string(path).map_err(|e| ClusterError::State(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ClusterError::State(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{analyze, Direction};
    use crate::features::{extract_features, UpdateLoopFeature};
    use crate::frontend::{load, ScalarType};

    fn fv(dims: usize) -> FeatureVector {
        FeatureVector {
            dp_type: ScalarType::Int,
            dp_dims: dims,
            input_reused_as_dp: false,
            num_update_loops: 1,
            update_loops: vec![UpdateLoopFeature {
                depth: 1,
                directions: vec![Direction::Up],
                updated_element: "dp[i]".into(),
            }],
        }
    }

    fn bounds(items: &[(&str, &str)]) -> BTreeMap<String, Vec<String>> {
        items.iter().map(|(m, b)| (m.to_string(), vec![b.to_string()])).collect()
    }

    #[test]
    fn figures_share_a_cluster() {
        let f2 = extract_features(&analyze(&load(include_str!("../tests/fixtures/fig2.c")).unwrap()).unwrap()).unwrap();
        let f3 = extract_features(&analyze(&load(include_str!("../tests/fixtures/fig3.c")).unwrap()).unwrap()).unwrap();
        let cs = cluster(&[("fig2".into(), f2), ("fig3".into(), f3)]);
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].members.len(), 2);
    }

    #[test]
    fn boolean_and_integer_tables_split() {
        let mut b = fv(2);
        b.dp_type = ScalarType::Bool;
        let cs = cluster(&[("a".into(), fv(2)), ("b".into(), b)]);
        assert_eq!(cs.len(), 2);
    }

    #[test]
    fn empty_corpus() {
        assert!(cluster(&[]).is_empty());
    }

    #[test]
    fn largest_first() {
        let cs = cluster(&[("a".into(), fv(1)), ("b".into(), fv(2)), ("c".into(), fv(2))]);
        assert_eq!(cs[0].members.len(), 2);
    }

    #[test]
    fn majority_bound_ranks_first() {
        let cs = cluster(&[("s1".into(), fv(1)), ("s2".into(), fv(1)), ("s3".into(), fv(1))]);
        let b = bounds(&[("s1", "i<=in"), ("s2", "i<in"), ("s3", "i<in")]);
        assert_eq!(rank_candidates(&cs[0], &b), vec!["s2", "s3", "s1"]);
    }

    #[test]
    fn identical_bounds_order_by_id() {
        let cs = cluster(&[("z".into(), fv(1)), ("a".into(), fv(1))]);
        let b = bounds(&[("z", "i<in"), ("a", "i<in")]);
        assert_eq!(rank_candidates(&cs[0], &b), vec!["a", "z"]);
    }

    #[test]
    fn singleton_ranks_itself() {
        let cs = cluster(&[("only".into(), fv(1))]);
        assert_eq!(rank_candidates(&cs[0], &BTreeMap::new()), vec!["only"]);
    }

    #[test]
    fn reference_from_corpus() {
        let mut cs = cluster(&[("fig2".into(), fv(2)), ("fig3".into(), fv(2))]);
        let id = cs[0].cluster_id.clone();
        assign_reference(&mut cs, &id, ReferenceSource::Member("fig2")).unwrap();
        assert_eq!(cs[0].reference.as_deref(), Some("fig2"));
        assert_eq!(cs[0].reference_origin, Some(ReferenceOrigin::Corpus));
    }

    #[test]
    fn added_reference_joins() {
        let mut cs = cluster(&[("a".into(), fv(2))]);
        let id = cs[0].cluster_id.clone();
        assign_reference(&mut cs, &id, ReferenceSource::New { id: "ref", features: &fv(2) }).unwrap();
        assert!(cs[0].members.contains("ref"));
        assert_eq!(cs[0].reference_origin, Some(ReferenceOrigin::InstructorAdded));
    }

    #[test]
    fn added_reference_elsewhere_is_rejected() {
        let mut cs = cluster(&[("a".into(), fv(2))]);
        let id = cs[0].cluster_id.clone();
        let e = assign_reference(&mut cs, &id, ReferenceSource::New { id: "ref", features: &fv(1) }).unwrap_err();
        assert!(matches!(e, ClusterError::ReferenceClusterMismatch { .. }));
        assert!(!cs[0].members.contains("ref"));
    }

    #[test]
    fn state_round_trips() {
        let dir = std::env::temp_dir().join(format!("clusters-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("clusters.json");
        let cs = cluster(&[("a".into(), fv(2)), ("b".into(), fv(1))]);
        save_state(&path, &cs).unwrap();
        assert_eq!(load_state(&path).unwrap(), cs);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
