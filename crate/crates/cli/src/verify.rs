use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use dpfeedback::feedback::{self, prepare, render, FeedbackReport, Prepared, Verdict, VerifyConfig};

use crate::state::{write_atomic, CorpusState, Extraction, Outcome};

/// Table-2-shaped totals of one verify run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub submissions: usize,
    pub verified_correct: usize,
    pub faulty: usize,
    pub unlabeled: usize,
    /// Included in `verified_correct`.
    pub references: usize,
    pub skipped_clusters: Vec<String>,
    pub average_corrections: f64,
    pub feedback_size: usize,
    pub raw_feedback_size: usize,
    pub total_ms: u64,
    pub average_ms: f64,
    pub max_ms: u64,
    /// Faulty reports with a pair whose refinement did not end valid.
    pub soundness_violations: Vec<String>,
}

impl Summary {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "submissions: {}\nverified correct: {} ({} references)\nfaulty: {}\nunlabeled: {}\n",
            self.submissions, self.verified_correct, self.references, self.faulty, self.unlabeled
        );
        out += &format!("average corrections per faulty submission: {:.2}\n", self.average_corrections);
        out += &format!("feedback size: {} (before simplification {})\n", self.feedback_size, self.raw_feedback_size);
        out += &format!("time: {:.0} ms average, {} ms max\n", self.average_ms, self.max_ms);
        for c in &self.skipped_clusters {
            out += &format!("skipped cluster {c}: no reference\n");
        }
        for v in &self.soundness_violations {
            out += &format!("SOUNDNESS VIOLATION: {v}\n");
        }
        out
    }
}

pub struct VerifyRun {
    /// Sorted by submission id; references have no report.
    pub reports: Vec<FeedbackReport>,
    pub summary: Summary,
}

pub fn outcome(r: &FeedbackReport, cluster: Option<&str>) -> Outcome {
    Outcome {
        verdict: r.verdict,
        reason: r.reason.clone(),
        cluster: cluster.map(str::to_string),
        reference: false,
        corrections: r.corrections.len(),
        sections: r.corrections.iter().map(|c| c.section).collect(),
        feedback_size: r.feedback_size,
        raw_feedback_size: r.raw_feedback_size,
    }
}

/// Every pair of a Faulty report that was not replaced wholesale must end
/// with a valid body query.
pub fn sound(r: &FeedbackReport) -> bool {
    r.verdict != Verdict::Faulty || r.trace.iter().all(|t| t.total_substitution || t.final_valid)
}

enum Job<'a> {
    Done(FeedbackReport),
    Check { id: &'a str, reference: &'a Prepared, source: &'a str },
}

/// Verifies every non-reference member of every cluster with a reference.
/// `jobs` bounds the worker pool; results are merged by submission id.
pub fn run(s: &mut CorpusState, cfg: &VerifyConfig, jobs: usize) -> anyhow::Result<VerifyRun> {
    let mut refs: BTreeMap<&str, Result<Prepared, String>> = BTreeMap::new();
    let mut summary = Summary::default();
    for c in &s.clusters {
        match &c.reference {
            Some(r) => {
                let src = s.submissions.get(r).map(|x| x.source.as_str()).unwrap_or_default();
                refs.insert(&c.cluster_id, prepare(src).map_err(|e| format!("reference {r} does not verify: {e}")));
            }
            None => {
                log::warn!("cluster {} has no reference; skipping its {} members", c.cluster_id, c.members.len());
                summary.skipped_clusters.push(c.cluster_id.clone());
            }
        }
    }
    let is_ref: BTreeSet<&str> = s.clusters.iter().filter_map(|c| c.reference.as_deref()).collect();
    let mut results = BTreeMap::new();
    let mut jobs_in = Vec::new();
    let mut owner: BTreeMap<String, String> = BTreeMap::new();
    for (id, sub) in &s.submissions {
        match &sub.extraction {
            Extraction::Unlabeled { reason } => jobs_in.push(Job::Done(FeedbackReport::unlabeled(id, reason.clone()))),
            Extraction::Extracted { cluster, .. } => {
                if is_ref.contains(id.as_str()) {
                    let o = Outcome {
                        verdict: Verdict::VerifiedCorrect,
                        reason: None,
                        cluster: Some(cluster.clone()),
                        reference: true,
                        corrections: 0,
                        sections: BTreeSet::new(),
                        feedback_size: 0,
                        raw_feedback_size: 0,
                    };
                    results.insert(id.clone(), o);
                    continue;
                }
                match refs.get(cluster.as_str()) {
                    None => continue,
                    Some(Err(why)) => jobs_in.push(Job::Done(FeedbackReport::unlabeled(id, why.clone()))),
                    Some(Ok(p)) => jobs_in.push(Job::Check { id, reference: p, source: &sub.source }),
                }
                owner.insert(id.clone(), cluster.clone());
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
    let mut reports: Vec<FeedbackReport> = pool.install(|| {
        jobs_in
            .into_par_iter()
            .map(|j| match j {
                Job::Done(r) => r,
                Job::Check { id, reference, source } => match prepare(source) {
                    Ok(c) => feedback::verify(reference, &c, id, cfg),
                    Err(e) => FeedbackReport::unlabeled(id, e.to_string()),
                },
            })
            .collect()
    });
    reports.sort_by(|a, b| a.submission.cmp(&b.submission));
    for r in &reports {
        results.insert(r.submission.clone(), outcome(r, owner.get(&r.submission).map(String::as_str)));
        if !sound(r) {
            summary.soundness_violations.push(r.submission.clone());
        }
    }
    tally(&mut summary, &results, &reports);
    s.results = results;
    Ok(VerifyRun { reports, summary })
}

fn tally(sum: &mut Summary, results: &BTreeMap<String, Outcome>, reports: &[FeedbackReport]) {
    sum.submissions = results.len();
    for o in results.values() {
        match o.verdict {
            Verdict::VerifiedCorrect => sum.verified_correct += 1,
            Verdict::Faulty => sum.faulty += 1,
            Verdict::Unlabeled => sum.unlabeled += 1,
        }
        sum.references += o.reference as usize;
        sum.feedback_size += o.feedback_size;
        sum.raw_feedback_size += o.raw_feedback_size;
    }
    let corrections: usize = results.values().filter(|o| o.verdict == Verdict::Faulty).map(|o| o.corrections).sum();
    sum.average_corrections = if sum.faulty == 0 { 0.0 } else { corrections as f64 / sum.faulty as f64 };
    sum.total_ms = reports.iter().map(|r| r.elapsed_ms).sum();
    sum.max_ms = reports.iter().map(|r| r.elapsed_ms).max().unwrap_or(0);
    sum.average_ms = if reports.is_empty() { 0.0 } else { sum.total_ms as f64 / reports.len() as f64 };
}

/// `<out>/reports/<id>.{json,txt}` plus `<out>/summary.{json,txt}`.
pub fn write(out: &Path, run: &VerifyRun) -> anyhow::Result<()> {
    let dir = out.join("reports");
    for r in &run.reports {
        let mut json = serde_json::to_string_pretty(r)?;
        json.push('\n');
        write_atomic(&dir.join(format!("{}.json", r.submission)), json.as_bytes())?;
        write_atomic(&dir.join(format!("{}.txt", r.submission)), render(r).as_bytes())?;
    }
    let mut json = serde_json::to_string_pretty(&run.summary)?;
    json.push('\n');
    write_atomic(&out.join("summary.json"), json.as_bytes())?;
    write_atomic(&out.join("summary.txt"), run.summary.to_text().as_bytes())
}
