use std::path::{Path, PathBuf};
use std::process::Command;

use dpfeedback::clustering::ReferenceOrigin;
use dpfeedback::feedback::{FeedbackReport, Verdict};
use dpfeedback_cli::state::{CorpusState, Extraction};
use dpfeedback_cli::{run, EXIT_FAILED, EXIT_OK, EXIT_USAGE};

const FIG2: &str = include_str!("../../core/tests/fixtures/fig2.c");
const FIG3: &str = include_str!("../../core/tests/fixtures/fig3.c");

const SUM: &str = "int main() { int n, i; scanf(\"%d\", &n); int a[n+1], dp[n+1];
  for (i = 1; i <= n; i++) scanf(\"%d\", &a[i]);
  dp[0] = 0;
  for (i = 1; i <= n; i++) dp[i] = dp[i-1] + a[i];
  printf(\"%d\", dp[n]); return 0; }";

struct Corpus {
    dir: tempfile::TempDir,
}

impl Corpus {
    /// Writes the sources and a manifest over them.
    fn new(subs: &[(&str, &str)]) -> Corpus {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("limits.txt"), "1 <= n && n <= 100\n").unwrap();
        let entries: Vec<serde_json::Value> = subs
            .iter()
            .map(|(id, src)| {
                std::fs::write(dir.path().join(format!("{id}.c")), src).unwrap();
                serde_json::json!({ "id": id, "path": format!("{id}.c") })
            })
            .collect();
        let m = serde_json::json!({ "problem": "p", "constraints": "limits.txt", "submissions": entries, "state": "state.json" });
        std::fs::write(dir.path().join("manifest.json"), m.to_string()).unwrap();
        Corpus { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn state(&self) -> String {
        self.path("state.json").display().to_string()
    }

    fn run(&self, args: &[&str]) -> (i32, String) {
        let mut out = Vec::new();
        let mut all = vec!["dpfeedback".to_string()];
        all.extend(args.iter().map(|a| a.to_string()));
        let code = run(all, &mut out);
        (code, String::from_utf8(out).unwrap())
    }

    fn ingest(&self) -> CorpusState {
        let m = self.path("manifest.json").display().to_string();
        assert_eq!(self.run(&["ingest", &m]).0, EXIT_OK);
        self.load()
    }

    fn load(&self) -> CorpusState {
        CorpusState::load(&self.path("state.json")).unwrap()
    }

    fn mark(&self, cluster: &str, sub: &str) -> i32 {
        self.run(&["review", &self.state(), "mark", cluster, sub]).0
    }

    fn report(&self, id: &str) -> FeedbackReport {
        let text = std::fs::read_to_string(self.path(&format!("reports/{id}.json"))).unwrap();
        serde_json::from_str(&text).unwrap()
    }
}

fn cluster_of(s: &CorpusState, id: &str) -> String {
    match &s.submissions[id].extraction {
        Extraction::Extracted { cluster, .. } => cluster.clone(),
        other => panic!("{id}: {other:?}"),
    }
}

#[test]
fn ingest_records_failures_without_stopping() {
    let c = Corpus::new(&[("a", SUM), ("b", SUM), ("c", FIG2), ("d", "int main() { int n; scanf(\"%d\" &n); }")]);
    let s = c.ingest();
    let bad: Vec<(&String, &Extraction)> =
        s.submissions.iter().filter(|(_, x)| matches!(x.extraction, Extraction::Unlabeled { .. })).map(|(i, x)| (i, &x.extraction)).collect();
    assert_eq!(bad.len(), 1);
    assert_eq!(bad[0].0, "d");
    assert!(matches!(bad[0].1, Extraction::Unlabeled { reason } if reason.starts_with("syntax error")));
    assert_eq!(s.clusters.len(), 2);
    assert_eq!(s.clusters[0].members.len(), 2, "largest cluster first");
}

#[test]
fn figure_pair_forms_one_cluster() {
    let c = Corpus::new(&[("fig2", FIG2), ("fig3", FIG3)]);
    let s = c.ingest();
    assert_eq!(s.clusters.len(), 1);
    assert_eq!(s.clusters[0].members.len(), 2);
}

#[test]
fn empty_manifest_gives_empty_state() {
    let c = Corpus::new(&[]);
    let s = c.ingest();
    assert!(s.submissions.is_empty() && s.clusters.is_empty());
    let (code, text) = c.run(&["review", &c.state()]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(text, "nothing to review\n");
    let (_, text) = c.run(&["report", &c.state()]);
    assert!(text.contains("clusters: 0") && !text.contains("verdicts"), "{text}");
}

#[test]
fn marking_a_non_member_is_rejected() {
    let c = Corpus::new(&[("fig2", FIG2), ("fig3", FIG3), ("sum", SUM)]);
    let s = c.ingest();
    let before = std::fs::read(c.path("state.json")).unwrap();
    assert_eq!(c.mark(&cluster_of(&s, "fig2"), "sum"), EXIT_FAILED);
    assert_eq!(c.mark("ffffffff", "fig2"), EXIT_FAILED);
    assert_eq!(std::fs::read(c.path("state.json")).unwrap(), before, "state untouched");
    assert_eq!(c.mark(&cluster_of(&s, "fig2")[..6], "fig2"), EXIT_OK, "unique prefixes resolve");
    let s = c.load();
    assert_eq!(s.clusters.iter().find(|k| k.members.contains("fig2")).unwrap().reference.as_deref(), Some("fig2"));
}

#[test]
fn adding_a_reference_checks_its_cluster() {
    let c = Corpus::new(&[("fig3", FIG3), ("sum", SUM)]);
    let s = c.ingest();
    let tri = cluster_of(&s, "fig3");
    std::fs::write(c.path("other.c"), SUM).unwrap();
    let other = c.path("other.c").display().to_string();
    assert_eq!(c.run(&["review", &c.state(), "add", &tri, &other]).0, EXIT_FAILED);
    assert!(!c.load().submissions.contains_key("other"));

    std::fs::write(c.path("model.c"), FIG2).unwrap();
    let model = c.path("model.c").display().to_string();
    let (code, text) = c.run(&["review", &c.state(), "add", &tri, &model, "--id", "model"]);
    assert_eq!(code, EXIT_OK, "{text}");
    let s = c.load();
    let k = s.clusters.iter().find(|k| k.cluster_id == tri).unwrap();
    assert_eq!(k.reference.as_deref(), Some("model"));
    assert_eq!(k.reference_origin, Some(ReferenceOrigin::InstructorAdded));
    assert!(k.members.contains("model"));
    assert!(c.run(&["review", &c.state()]).1.contains("reference: model (added)"));
}

#[test]
fn golden_flow_through_the_cli() {
    let c = Corpus::new(&[("fig2", FIG2), ("fig3", FIG3)]);
    let s = c.ingest();
    assert_eq!(c.mark(&s.clusters[0].cluster_id, "fig2"), EXIT_OK);
    let (code, text) = c.run(&["verify", &c.state(), "--jobs", "2"]);
    assert_eq!(code, EXIT_OK, "{text}");
    assert!(text.contains("verified correct: 1 (1 references)") && text.contains("faulty: 1"), "{text}");
    let rep = c.report("fig3");
    assert_eq!(rep.verdict, Verdict::Faulty);
    assert_eq!(rep.corrections.len(), 4);
    let txt = std::fs::read_to_string(c.path("reports/fig3.txt")).unwrap();
    assert!(txt.starts_with("In the declaration:"), "{txt}");
    assert!(!c.path("reports/fig2.json").exists(), "references get no report");
    let (_, report) = c.run(&["report", &c.state()]);
    assert!(report.contains("faulty: 1") && report.contains("IUO: 1"), "{report}");
}

#[test]
fn copies_of_the_reference_all_verify() {
    let c = Corpus::new(&[("r", SUM), ("c1", SUM), ("c2", SUM)]);
    let s = c.ingest();
    assert_eq!(c.mark(&s.clusters[0].cluster_id, "r"), EXIT_OK);
    assert_eq!(c.run(&["verify", &c.state()]).0, EXIT_OK);
    let s = c.load();
    assert_eq!(s.results.len(), 3);
    assert!(s.results.values().all(|o| o.verdict == Verdict::VerifiedCorrect));
    assert_eq!(std::fs::read_to_string(c.path("reports/c1.txt")).unwrap(), "c1: verified correct\n");
}

#[test]
fn undecidable_guard_needs_manual_evaluation() {
    let r = SUM.replace(
        "dp[i] = dp[i-1] + a[i];",
        "{ if (dp[i-1] * dp[i-1] * dp[i-1] + a[i] * a[i] * a[i] + i * i * i == 33) dp[i] = dp[i-1] * 2; else dp[i] = dp[i-1] + a[i]; }",
    );
    let c = Corpus::new(&[("r", &r), ("c", SUM)]);
    let s = c.ingest();
    assert_eq!(c.mark(&cluster_of(&s, "r"), "r"), EXIT_OK);
    assert_eq!(c.run(&["verify", &c.state(), "--timeout-ms", "500"]).0, EXIT_OK);
    let rep = c.report("c");
    assert_eq!(rep.verdict, Verdict::Unlabeled);
    assert!(rep.reason.unwrap().contains("unknown"));
}

#[test]
fn clusters_without_reference_are_skipped() {
    let c = Corpus::new(&[("fig2", FIG2), ("fig3", FIG3), ("sum", SUM), ("sum2", SUM)]);
    let s = c.ingest();
    assert_eq!(c.mark(&cluster_of(&s, "sum"), "sum"), EXIT_OK);
    let (code, text) = c.run(&["verify", &c.state()]);
    assert_eq!(code, EXIT_OK);
    assert!(text.contains(&format!("skipped cluster {}", cluster_of(&s, "fig2"))), "{text}");
    let s = c.load();
    assert!(!s.results.contains_key("fig3"));
    assert_eq!(s.results["sum2"].verdict, Verdict::VerifiedCorrect);
}

fn strip_timings(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(m) => {
            m.remove("elapsed_ms");
            m.values_mut().for_each(strip_timings);
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(strip_timings),
        _ => {}
    }
}

fn reports_without_timings(dir: &Path) -> Vec<(String, serde_json::Value)> {
    let mut out = Vec::new();
    let mut names: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    names.sort();
    for p in names.into_iter().filter(|p| p.extension().is_some_and(|e| e == "json")) {
        let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
        strip_timings(&mut v);
        out.push((p.file_name().unwrap().to_string_lossy().into_owned(), v));
    }
    out
}

#[test]
fn identical_runs_give_identical_outputs() {
    let subs = [("fig2", FIG2), ("fig3", FIG3), ("sum", SUM)];
    let (a, b) = (Corpus::new(&subs), Corpus::new(&subs));
    let mut states = Vec::new();
    let mut reports = Vec::new();
    for (c, jobs) in [(&a, "1"), (&b, "3")] {
        let s = c.ingest();
        assert_eq!(c.mark(&cluster_of(&s, "fig2"), "fig2"), EXIT_OK);
        assert_eq!(c.run(&["verify", &c.state(), "--jobs", jobs]).0, EXIT_OK);
        let st = std::fs::read_to_string(c.path("state.json")).unwrap();
        states.push(st.replace(&c.dir.path().display().to_string(), "<dir>"));
        reports.push(reports_without_timings(&c.path("reports")));
        assert_eq!(c.run(&["report", &c.state(), "--json"]).1, c.run(&["report", &c.state(), "--json"]).1);
    }
    assert_eq!(states[0], states[1]);
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn state_writes_leave_no_temporaries() {
    let c = Corpus::new(&[("fig2", FIG2), ("fig3", FIG3)]);
    let s = c.ingest();
    assert_eq!(c.mark(&s.clusters[0].cluster_id, "fig3"), EXIT_OK);
    let mut names: Vec<String> =
        std::fs::read_dir(c.dir.path()).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    assert_eq!(names, ["fig2.c", "fig3.c", "limits.txt", "manifest.json", "state.json"]);
}

#[test]
fn report_before_verify_is_census_only() {
    let c = Corpus::new(&[("fig2", FIG2), ("fig3", FIG3), ("sum", SUM)]);
    let s = c.ingest();
    let (_, text) = c.run(&["report", &c.state()]);
    assert!(text.contains(&format!("most popular strategy: {} with 2 submissions", cluster_of(&s, "fig2"))), "{text}");
    assert!(!text.contains("verdicts"));
    let out = c.path("out").display().to_string();
    assert_eq!(c.run(&["report", &c.state(), "--out", &out]).0, EXIT_OK);
    assert!(c.path("out/report.json").is_file() && c.path("out/report.txt").is_file());
}

#[test]
fn exit_codes() {
    let bin = env!("CARGO_BIN_EXE_dpfeedback");
    let code = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code().unwrap();
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["frobnicate"]), EXIT_USAGE);
    assert_eq!(code(&["verify"]), EXIT_USAGE);
    assert_eq!(code(&["verify", "/no/such/state.json"]), EXIT_USAGE);
    assert_eq!(code(&["ingest", "/no/such/manifest.json", "--delta", "0"]), EXIT_USAGE);

    let c = Corpus::new(&[("a", SUM)]);
    std::fs::write(c.path("bad.json"), r#"{"problem":"p","submissions":[{"id":"a","path":"a.c"},{"id":"a","path":"a.c"}],"state":"s.json"}"#).unwrap();
    assert_eq!(code(&["ingest", &c.path("bad.json").display().to_string()]), EXIT_USAGE);
    c.ingest();
    assert_eq!(code(&["review", &c.state(), "mark", "zz", "a"]), EXIT_FAILED);
}
