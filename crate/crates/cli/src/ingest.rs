use std::collections::BTreeMap;

use dpfeedback::analysis::analyze;
use dpfeedback::clustering::cluster;
use dpfeedback::features::{extract_features, update_loop_bounds, FeatureVector};
use dpfeedback::frontend::load;

use crate::state::{CorpusState, Extraction, Manifest, Submission};

/// Front end, analysis and feature extraction for one source.
pub fn extract(source: &str) -> Result<(FeatureVector, Vec<String>), String> {
    let p = load(source).map_err(|e| e.to_string())?;
    let lp = analyze(&p).map_err(|e| e.to_string())?;
    let fv = extract_features(&lp).map_err(|e| e.to_string())?;
    Ok((fv, update_loop_bounds(&lp)))
}

/// Builds a fresh state from the manifest. Failures are recorded per
/// submission and never stop the batch.
pub fn ingest(m: &Manifest) -> anyhow::Result<CorpusState> {
    let constraints = match &m.constraints {
        Some(p) => std::fs::read_to_string(p)?,
        None => String::new(),
    };
    dpfeedback::constraints::InputConstraints::parse(&constraints)
        .map_err(|e| anyhow::anyhow!("constraints: {e}"))?;
    let mut submissions = BTreeMap::new();
    let mut vectors = Vec::new();
    for e in &m.submissions {
        let (source, extraction) = match std::fs::read_to_string(&e.path) {
            Err(err) => (String::new(), Extraction::Unlabeled { reason: format!("unreadable source: {err}") }),
            Ok(src) => {
                let ex = match extract(&src) {
                    Ok((fv, bounds)) => {
                        let ex = Extraction::Extracted { cluster: fv.id(), bounds };
                        vectors.push((e.id.clone(), fv));
                        ex
                    }
                    Err(reason) => Extraction::Unlabeled { reason },
                };
                (src, ex)
            }
        };
        submissions.insert(e.id.clone(), Submission { path: e.path.display().to_string(), source, extraction });
    }
    Ok(CorpusState {
        problem: m.problem.clone(),
        constraints,
        submissions,
        clusters: cluster(&vectors),
        results: BTreeMap::new(),
    })
}

pub fn ingest_summary(s: &CorpusState) -> String {
    let bad = s.submissions.values().filter(|x| matches!(x.extraction, Extraction::Unlabeled { .. })).count();
    let mut out = format!(
        "{}: {} submissions, {} extracted, {} unlabeled, {} clusters\n",
        s.problem,
        s.submissions.len(),
        s.submissions.len() - bad,
        bad,
        s.clusters.len()
    );
    for (id, sub) in &s.submissions {
        if let Extraction::Unlabeled { reason } = &sub.extraction {
            out += &format!("  {id}: unlabeled ({reason})\n");
        }
    }
    out
}
