use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use dpfeedback::clustering::ReferenceOrigin;
use dpfeedback::feedback::{Section, Verdict};

use crate::state::{CorpusState, Extraction, Outcome};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusRow {
    pub cluster: String,
    pub members: usize,
    pub strategy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<ReferenceOrigin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackSize {
    pub before: usize,
    pub after: usize,
    /// Percentage removed by simplification.
    pub reduction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub problem: String,
    pub submissions: usize,
    pub unlabeled_at_ingest: usize,
    pub census: Vec<CensusRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub most_popular: Option<String>,
    /// Empty until verify has run.
    pub verdicts: BTreeMap<String, usize>,
    /// Faulty submissions by the parts that needed correction (I, U, O).
    pub components: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback_size: Option<FeedbackSize>,
}

/// Input-side corrections count as I, initialization and update as U.
pub fn components(o: &Outcome) -> String {
    let mut tag = String::new();
    let has = |f: &dyn Fn(&Section) -> bool| o.sections.iter().any(f);
    if has(&|s| matches!(s, Section::Declaration | Section::Input)) {
        tag.push('I');
    }
    if has(&|s| matches!(s, Section::Initialization | Section::Update)) {
        tag.push('U');
    }
    if has(&|s| matches!(s, Section::Output)) {
        tag.push('O');
    }
    tag
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::VerifiedCorrect => "verified-correct",
        Verdict::Faulty => "faulty",
        Verdict::Unlabeled => "unlabeled",
    }
}

pub fn build(s: &CorpusState) -> CorpusReport {
    let census: Vec<CensusRow> = s
        .clusters
        .iter()
        .map(|c| CensusRow {
            cluster: c.cluster_id.clone(),
            members: c.members.len(),
            strategy: c.feature_vector.to_string(),
            reference: c.reference.clone(),
            origin: c.reference_origin,
        })
        .collect();
    // Clusters are stored largest first, ties by id.
    let most_popular = census.first().map(|r| r.cluster.clone());
    let mut verdicts = BTreeMap::new();
    let mut comps = BTreeMap::new();
    for o in s.results.values() {
        *verdicts.entry(verdict_name(o.verdict).to_string()).or_insert(0) += 1;
        if o.verdict == Verdict::Faulty {
            *comps.entry(components(o)).or_insert(0) += 1;
        }
    }
    let feedback_size = (!s.results.is_empty()).then(|| {
        let before: usize = s.results.values().map(|o| o.raw_feedback_size).sum();
        let after: usize = s.results.values().map(|o| o.feedback_size).sum();
        let reduction = if before == 0 { 0.0 } else { 100.0 * (before - after.min(before)) as f64 / before as f64 };
        FeedbackSize { before, after, reduction }
    });
    CorpusReport {
        problem: s.problem.clone(),
        submissions: s.submissions.len(),
        unlabeled_at_ingest: s.submissions.values().filter(|x| matches!(x.extraction, Extraction::Unlabeled { .. })).count(),
        census,
        most_popular,
        verdicts,
        components: comps,
        feedback_size,
    }
}

impl CorpusReport {
    pub fn to_text(&self) -> String {
        let mut out = format!("problem {}: {} submissions, {} unlabeled at ingest\n", self.problem, self.submissions, self.unlabeled_at_ingest);
        out += &format!("clusters: {}\n", self.census.len());
        for r in &self.census {
            let reference = match (&r.reference, r.origin) {
                (Some(x), Some(ReferenceOrigin::InstructorAdded)) => format!("{x} (added)"),
                (Some(x), _) => x.clone(),
                (None, _) => "-".into(),
            };
            out += &format!("  {} {:>4}  ref {}  {}\n", r.cluster, r.members, reference, r.strategy);
        }
        if let Some(p) = &self.most_popular {
            let n = self.census.first().map_or(0, |r| r.members);
            out += &format!("most popular strategy: {p} with {n} submissions\n");
        }
        if self.verdicts.is_empty() {
            return out;
        }
        out += "verdicts:\n";
        for (v, n) in &self.verdicts {
            out += &format!("  {v}: {n}\n");
        }
        out += "faulty components:\n";
        for (c, n) in &self.components {
            out += &format!("  {}: {n}\n", if c.is_empty() { "-" } else { c });
        }
        if let Some(f) = &self.feedback_size {
            out += &format!("feedback size: {} before simplification, {} after ({:.1}% smaller)\n", f.before, f.after, f.reduction);
        }
        out
    }
}
