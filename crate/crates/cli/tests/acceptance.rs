//! One pass/fail line per acceptance criterion. Run with
//! `cargo test --release --test acceptance -- --nocapture` to see the lines.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use dpfeedback::analysis::{analyze, Direction};
use dpfeedback::clustering::cluster;
use dpfeedback::constraints::InputConstraints;
use dpfeedback::corpus::{generate, problems, Mutant, MutationKind};
use dpfeedback::features::{extract_features, FeatureVector, UpdateLoopFeature};
use dpfeedback::feedback::{
    apply, prepare, verify_sources, CorrectionKind, FeedbackReport, QueryKind, Section, Verdict, VerifyConfig,
};
use dpfeedback::frontend::{
    expr_to_string, load, parse, parse_expr, preprocess, render_program, strip_testcase_loop, Program, ScalarType,
};
use dpfeedback::oracle::{self, Status};
use dpfeedback::solver::{check_validity, smt, SolverConfig, VerdictKind};
use dpfeedback_cli::state::CorpusState;

const FIG2: &str = include_str!("../../core/tests/fixtures/fig2.c");
const FIG3: &str = include_str!("../../core/tests/fixtures/fig3.c");

/// Mutants per (solution, kind).
const PER_KIND: usize = 8;
/// Oracle trials used to filter equivalent mutants and to audit verdicts.
const FILTER_TRIALS: usize = 30;
const AUDIT_TRIALS: usize = 200;

struct Line {
    n: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn line(n: u32, name: &'static str, pass: bool, detail: String) -> Line {
    println!("{} criterion {n} ({name}): {detail}", if pass { "PASS" } else { "FAIL" });
    Line { n, name, pass, detail }
}

fn squash(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

/// `g` and `want` agree whenever `ctx` holds, per the solver.
fn equivalent(g: &str, want: &str, ctx: &str) -> bool {
    let f = parse_expr(&format!("!({ctx}) || (({g}) && ({want})) || (!({g}) && !({want}))")).unwrap();
    check_validity(&f, &SolverConfig::default()).is_valid()
}

/// Ingest, mark, verify through the CLI entry point; returns the Fig. 3 report.
fn cli_flow() -> (FeedbackReport, Duration) {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).display().to_string();
    std::fs::write(p("fig2.c"), FIG2).unwrap();
    std::fs::write(p("fig3.c"), FIG3).unwrap();
    std::fs::write(p("limits.txt"), "1 <= n && n <= 100\n").unwrap();
    let m = r#"{"problem":"triangle","constraints":"limits.txt","state":"state.json",
        "submissions":[{"id":"fig2","path":"fig2.c"},{"id":"fig3","path":"fig3.c"}]}"#;
    std::fs::write(p("manifest.json"), m).unwrap();
    let start = Instant::now();
    let run = |args: &[&str]| {
        let mut all = vec!["dpfeedback"];
        all.extend_from_slice(args);
        assert_eq!(dpfeedback_cli::run(all, &mut std::io::sink()), 0, "{args:?}");
    };
    run(&["ingest", &p("manifest.json")]);
    let state = CorpusState::load(dir.path().join("state.json").as_path()).unwrap();
    run(&["review", &p("state.json"), "mark", &state.clusters[0].cluster_id, "fig2"]);
    run(&["verify", &p("state.json")]);
    let elapsed = start.elapsed();
    let text = std::fs::read_to_string(dir.path().join("reports/fig3.json")).unwrap();
    (serde_json::from_str(&text).unwrap(), elapsed)
}

fn golden(rep: &FeedbackReport, elapsed: Duration) -> Line {
    let ctx = "1 <= i && i < n && 0 <= j && j <= i && 1 <= n && n <= 100";
    let kinds: Vec<CorrectionKind> = rep.corrections.iter().map(|c| c.kind).collect();
    let want = [CorrectionKind::Declaration, CorrectionKind::GuardSplit, CorrectionKind::GuardSplit, CorrectionKind::OutputPattern];
    let mut ok = kinds == want;
    let mut why = Vec::new();
    if ok {
        let c = &rep.corrections;
        let guard = |k: usize| c[k].guard.as_ref().map(expr_to_string).unwrap_or_default();
        let checks = [
            ("declaration int[n][n]", c[0].suggested.contains("int[n][n]")),
            ("guard j == 0", equivalent(&guard(1), "j == 0", ctx)),
            ("statement under j == 0", squash(&c[1].suggested) == "D[i][j]=D[i-1][j]+A[i][j]"),
            ("guard j != 0 && j == i", equivalent(&guard(2), "j != 0 && j == i", ctx)),
            ("statement under j == i", squash(&c[2].suggested) == "D[i][j]=D[i-1][j-1]+A[i][j]"),
            ("output bound", c[3].suggested.contains("D[n-1][n-1]") && c[3].replaced.as_deref().is_some_and(|r| r.contains("D[n-1][99]"))),
            ("final query valid", rep.trace.iter().filter(|t| t.section == Section::Update).all(|t| t.final_valid)),
            ("under 10 s", elapsed < Duration::from_secs(10)),
        ];
        for (what, pass) in checks {
            if !pass {
                ok = false;
                why.push(what);
            }
        }
    }
    let detail = if ok {
        format!("4 corrections as expected in {:.2} s", elapsed.as_secs_f64())
    } else {
        format!("kinds {kinds:?}, failed: {why:?}")
    };
    line(1, "golden example", ok, detail)
}

fn ladder(rep: &FeedbackReport) -> Line {
    let Some(t) = rep.trace.iter().find(|t| t.section == Section::Update) else {
        return line(2, "refinement trace", false, "no update pair".into());
    };
    let psi: Vec<VerdictKind> = t.steps.iter().filter(|s| s.query == QueryKind::Psi).map(|s| s.verdict).collect();
    let want = [VerdictKind::Counterexample, VerdictKind::Counterexample, VerdictKind::Valid];
    let ok = t.refinements == 2 && psi == want && t.final_valid;
    line(2, "refinement trace", ok, format!("{} refinements, body queries {psi:?}", t.refinements))
}

fn features() -> Line {
    let fv = |src: &str| extract_features(&analyze(&load(src).unwrap()).unwrap()).unwrap();
    let want = FeatureVector {
        dp_type: ScalarType::Int,
        dp_dims: 2,
        input_reused_as_dp: false,
        num_update_loops: 1,
        update_loops: vec![UpdateLoopFeature {
            depth: 2,
            directions: vec![Direction::Up, Direction::Up],
            updated_element: "dp[i][j]".into(),
        }],
    };
    let (f2, f3) = (fv(FIG2), fv(FIG3));
    let clusters = cluster(&[("fig2".into(), f2.clone()), ("fig3".into(), f3.clone())]);
    let ok = f2 == want && f3 == want && clusters.len() == 1;
    line(3, "feature fidelity", ok, format!("fig2 {f2}; fig3 {f3}; {} cluster(s)", clusters.len()))
}

struct Outcome {
    mutant: Mutant,
    report: FeedbackReport,
    elapsed: Duration,
    /// For Faulty: the corrected program rechecks as VerifiedCorrect.
    recheck: bool,
    /// A VerifiedCorrect verdict (on the mutant or its correction) that the
    /// oracle refutes.
    unsound: Option<String>,
}

fn config(constraints: &str) -> VerifyConfig {
    VerifyConfig { constraints: InputConstraints::parse(constraints).unwrap(), ..Default::default() }
}

fn run_corpus(mutants: Vec<Mutant>) -> Vec<Outcome> {
    let probs = problems();
    let mut out = Vec::new();
    for m in mutants {
        let p = probs.iter().find(|p| p.name == m.problem).unwrap();
        let cfg = config(p.constraints);
        let reference = load(p.reference).unwrap();
        let start = Instant::now();
        let report = verify_sources(p.reference, &m.source, &m.id, &cfg).unwrap();
        let elapsed = start.elapsed();
        let refuted = |src: &str| load(src).map_or(false, |q| !oracle::differential(&reference, &q, AUDIT_TRIALS, &cfg.constraints).agrees());
        let mut unsound = None;
        let mut recheck = false;
        match report.verdict {
            Verdict::VerifiedCorrect if refuted(&m.source) => unsound = Some(format!("{} verified", m.id)),
            Verdict::Faulty => {
                let fixed = render_program(&apply(&prepare(&m.source).unwrap().lp.program, &report.fixes));
                let again = verify_sources(p.reference, &fixed, &m.id, &cfg).unwrap();
                recheck = again.verdict == Verdict::VerifiedCorrect;
                if recheck && refuted(&fixed) {
                    unsound = Some(format!("{} corrected", m.id));
                }
            }
            _ => {}
        }
        out.push(Outcome { mutant: m, report, elapsed, recheck, unsound });
    }
    out
}

fn corpus_stats(res: &[Outcome]) -> Line {
    let solutions: std::collections::BTreeSet<&str> = res.iter().map(|o| o.mutant.solution.as_str()).collect();
    let probs: std::collections::BTreeSet<&str> = res.iter().map(|o| o.mutant.problem.as_str()).collect();
    let kinds: std::collections::BTreeSet<MutationKind> = res.iter().map(|o| o.mutant.kind).collect();
    let caught = res.iter().filter(|o| o.report.verdict != Verdict::VerifiedCorrect).count();
    let faulty: Vec<&Outcome> = res.iter().filter(|o| o.report.verdict == Verdict::Faulty).collect();
    let rechecked = faulty.iter().filter(|o| o.recheck).count();
    let unsound: Vec<&String> = res.iter().filter_map(|o| o.unsound.as_ref()).collect();
    let caught_pct = 100.0 * caught as f64 / res.len().max(1) as f64;
    let recheck_pct = 100.0 * rechecked as f64 / faulty.len().max(1) as f64;
    let ok = res.len() >= 200
        && solutions.len() >= 5
        && probs.len() >= 3
        && kinds.len() == MutationKind::ALL.len()
        && caught_pct >= 90.0
        && unsound.is_empty()
        && recheck_pct >= 80.0;
    let mut by_verdict: BTreeMap<String, usize> = BTreeMap::new();
    for o in res {
        *by_verdict.entry(format!("{:?}", o.report.verdict)).or_default() += 1;
    }
    let detail = format!(
        "{} mutants of {} solutions in {} problems, {} kinds; {by_verdict:?}; {caught_pct:.1}% faulty or unlabeled; \
         {} unsound {unsound:?}; recheck {rechecked}/{} = {recheck_pct:.1}%",
        res.len(),
        solutions.len(),
        probs.len(),
        kinds.len(),
        unsound.len(),
        faulty.len()
    );
    line(4, "mutation corpus", ok, detail)
}

fn soundness(res: &[Outcome]) -> Line {
    let (mut models, mut bad_models, mut pairs, mut bad_pairs) = (0, Vec::new(), 0, Vec::new());
    for o in res.iter().filter(|o| o.report.verdict == Verdict::Faulty) {
        for t in &o.report.trace {
            for s in &t.steps {
                if let (VerdictKind::Counterexample, Some(m)) = (s.verdict, &s.model) {
                    models += 1;
                    if smt::eval(&s.formula, m) != Some(0) {
                        bad_models.push(format!("{} {:?}", o.mutant.id, s.query));
                    }
                }
            }
            if !t.total_substitution {
                pairs += 1;
                if !t.final_valid {
                    bad_pairs.push(o.mutant.id.clone());
                }
            }
        }
    }
    let ok = bad_models.is_empty() && bad_pairs.is_empty();
    let detail = format!(
        "{models} countermodels, {} do not falsify {bad_models:?}; {pairs} refined pairs, {} not valid {bad_pairs:?}",
        bad_models.len(),
        bad_pairs.len()
    );
    line(5, "soundness", ok, detail)
}

/// A Fig. 2 solution wrapped in a test-case loop.
const WRAPPED: &str = "int main() {
  int t, i, j, n, best;
  scanf(\"%d\", &t);
  while (t--) {
    scanf(\"%d\", &n);
    int m[n][n], dp[n][n];
    for (i = 0; i < n; i++)
      for (j = 0; j <= i; j++)
        scanf(\"%d\", &m[i][j]);
    dp[0][0] = m[0][0];
    for (i = 1; i < n; i++)
      for (j = 0; j <= i; j++)
        dp[i][j] = m[i][j] + (j == 0 ? dp[i-1][j] : (j == i ? dp[i-1][j-1] : (dp[i-1][j] > dp[i-1][j-1] ? dp[i-1][j] : dp[i-1][j-1])));
    best = dp[n-1][0];
    for (i = 1; i < n; i++)
      if (dp[n-1][i] > best) best = dp[n-1][i];
    printf(\"%d\\n\", best);
  }
  return 0;
}";

/// The stripped program on an input against the wrapped one on the same
/// input preceded by a test-case count of 1.
fn strip_agrees(wrapped: &Program, stripped: &Program, k: &InputConstraints, trials: usize) -> Result<usize, String> {
    let mut run = 0;
    for seed in 0..trials as u64 {
        let cap = 1 + (seed as i64 * 6) / trials as i64;
        let Some((tape, r)) = oracle::differential::sample_input(stripped, k, seed, cap) else { continue };
        if r.status != Status::Ok {
            continue;
        }
        let input: Vec<i64> = std::iter::once(1).chain(tape.iter().map(|e| e.value)).collect();
        let w = oracle::interpret(wrapped, &input, oracle::DEFAULT_STEP_BUDGET);
        if w.status != Status::Ok || w.outputs != r.outputs {
            return Err(format!("input {input:?}: wrapped {w:?}, stripped {r:?}"));
        }
        run += 1;
    }
    Ok(run)
}

fn preservation() -> Line {
    const TRIALS: usize = 120;
    let mut programs: Vec<(String, &str, String)> = Vec::new();
    for p in problems() {
        for (id, src) in p.solutions {
            programs.push((id.to_string(), src, p.constraints.to_string()));
        }
    }
    programs.push(("wrapped".into(), WRAPPED, "1 <= n && n <= 100".into()));
    let mut failures = Vec::new();
    let mut min_trials = usize::MAX;
    let mut note = |stage: &str, id: &str, r: Result<usize, String>| match r {
        Ok(n) => min_trials = min_trials.min(n),
        Err(e) => failures.push(format!("{id} {stage}: {e}")),
    };
    let agree = |a: &Program, b: &Program, k: &InputConstraints| match oracle::differential(a, b, TRIALS, k) {
        oracle::Verdict::Agree { trials_run } => Ok(trials_run),
        v => Err(format!("{v:?}")),
    };
    for (id, src, k) in &programs {
        let k = InputConstraints::parse(k).unwrap();
        let raw = parse(src).unwrap();
        let stripped = strip_testcase_loop(&raw);
        if id == "wrapped" {
            let r = if stripped == raw { Err("wrapper not stripped".into()) } else { strip_agrees(&raw, &stripped, &k, TRIALS) };
            note("strip", id, r);
        } else {
            note("strip", id, agree(&raw, &stripped, &k));
        }
        note("preprocess", id, agree(&stripped, &preprocess(&stripped), &k));
        note("canonicalize", id, agree(&stripped, &prepare(src).unwrap().lp.program, &k));
    }
    let ok = failures.is_empty() && min_trials >= 100;
    line(6, "semantics preservation", ok, format!("{} programs x 3 stages, at least {min_trials} inputs each; failures {failures:?}", programs.len()))
}

fn performance(res: &[Outcome]) -> Line {
    let total: Duration = res.iter().map(|o| o.elapsed).sum();
    let avg = total.as_secs_f64() / res.len().max(1) as f64;
    let max = res.iter().map(|o| o.elapsed).max().unwrap_or_default();
    let timeout = SolverConfig::default().timeout_ms;
    let ok = avg <= 5.0 && timeout == 3000;
    line(7, "performance", ok, format!("average {avg:.3} s, max {:.3} s over {} mutants, {timeout} ms per query", max.as_secs_f64(), res.len()))
}

fn simplification(res: &[Outcome]) -> Line {
    let grew: Vec<&str> = res.iter().filter(|o| o.report.feedback_size > o.report.raw_feedback_size).map(|o| o.mutant.id.as_str()).collect();
    let split = |o: &&Outcome| o.report.corrections.iter().any(|c| c.kind == CorrectionKind::GuardSplit);
    let shrunk = res.iter().filter(split).filter(|o| o.report.feedback_size < o.report.raw_feedback_size).count();
    let (before, after): (usize, usize) =
        res.iter().fold((0, 0), |(b, a), o| (b + o.report.raw_feedback_size, a + o.report.feedback_size));
    let ok = grew.is_empty() && shrunk >= 1;
    let detail = format!("size {before} -> {after}; {shrunk} guard-split reports shrink; {} grow {grew:?}", grew.len());
    line(8, "simplification", ok, detail)
}

#[test]
fn acceptance() {
    let (rep, elapsed) = cli_flow();
    let mut lines = vec![golden(&rep, elapsed), ladder(&rep), features()];
    let res = run_corpus(generate(PER_KIND, FILTER_TRIALS));
    lines.push(corpus_stats(&res));
    lines.push(soundness(&res));
    lines.push(preservation());
    lines.push(performance(&res));
    lines.push(simplification(&res));
    let failed: Vec<String> = lines.iter().filter(|l| !l.pass).map(|l| format!("{} {}: {}", l.n, l.name, l.detail)).collect();
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
}
