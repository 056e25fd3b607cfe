use super::*;
use crate::constraints::InputConstraints;
use crate::frontend::render_program;
use crate::oracle;

const FIG2: &str = include_str!("../../tests/fixtures/fig2.c");
const FIG3: &str = include_str!("../../tests/fixtures/fig3.c");

fn cfg() -> VerifyConfig {
    VerifyConfig { constraints: InputConstraints::parse("1 <= n && n <= 100").unwrap(), ..Default::default() }
}

fn run(r: &str, c: &str) -> FeedbackReport {
    verify_sources(r, c, "t", &cfg()).unwrap()
}

#[test]
fn golden_report() {
    let rep = run(FIG2, FIG3);
    let text = render(&rep);
    assert_eq!(rep.verdict, Verdict::Faulty, "{rep:?}");
    let kinds: Vec<CorrectionKind> = rep.corrections.iter().map(|c| c.kind).collect();
    assert_eq!(
        kinds,
        vec![
            CorrectionKind::Declaration,
            CorrectionKind::GuardSplit,
            CorrectionKind::GuardSplit,
            CorrectionKind::OutputPattern
        ]
    );
    assert!(text.contains("Types of A and D should be int[n][n]"), "{text}");
    assert!(text.contains("Under guard j == 0, compute D[i][j] = "), "{text}");
    assert!(text.contains("maximum over D[n-1][0],...,D[n-1][n-1] instead of D[n-1][0],...,D[n-1][99]"), "{text}");
    let update = rep.trace.iter().find(|t| t.section == Section::Update).unwrap();
    assert_eq!(update.refinements, 2);
    assert!(update.final_valid);
}

#[test]
fn reference_against_itself_is_verified() {
    let rep = run(FIG2, FIG2);
    assert_eq!(rep.verdict, Verdict::VerifiedCorrect, "{}", render(&rep));
}

#[test]
fn applied_fixes_verify_and_agree() {
    let rep = run(FIG2, FIG3);
    let c = prepare(FIG3).unwrap();
    let fixed = apply(&c.lp.program, &rep.fixes);
    let src = render_program(&fixed);
    let again = run(FIG2, &src);
    assert_eq!(again.verdict, Verdict::VerifiedCorrect, "{src}\n{}", render(&again));
    let r = crate::frontend::load(FIG2).unwrap();
    let v = oracle::differential(&r, &fixed, 50, &cfg().constraints);
    assert!(matches!(v, oracle::Verdict::Agree { .. }), "{v:?}");
}

const SUM_REF: &str = "int main() { int n, i; scanf(\"%d\", &n); int a[n+1], dp[n+1];
  for (i = 1; i <= n; i++) scanf(\"%d\", &a[i]);
  dp[0] = 0;
  for (i = 1; i <= n; i++) dp[i] = dp[i-1] + a[i];
  printf(\"%d\", dp[n]); return 0; }";

fn small() -> VerifyConfig {
    VerifyConfig { constraints: InputConstraints::parse("1 <= n && n <= 20").unwrap(), ..Default::default() }
}

#[test]
fn wrong_rhs_under_same_guard_is_one_replacement() {
    let cand = SUM_REF.replace("dp[i] = dp[i-1] + a[i]", "dp[i] = dp[i-1] - a[i]");
    let rep = verify_sources(SUM_REF, &cand, "m", &small()).unwrap();
    let kinds: Vec<CorrectionKind> = rep.corrections.iter().map(|c| c.kind).collect();
    assert_eq!(kinds, vec![CorrectionKind::ReplaceStatement]);
    assert_eq!(rep.corrections[0].suggested, "dp[i] = dp[i-1] + a[i]");
    let fixed = apply(&prepare(&cand).unwrap().lp.program, &rep.fixes);
    let again = verify_sources(SUM_REF, &render_program(&fixed), "m", &small()).unwrap();
    assert_eq!(again.verdict, Verdict::VerifiedCorrect);
}

fn scan(agg: &str) -> String {
    let step = match agg {
        "max" => "if (dp[k] > acc) acc = dp[k];",
        "min" => "if (dp[k] < acc) acc = dp[k];",
        _ => "acc = acc + dp[k];",
    };
    let init = if agg == "sum" { "acc = 0; for (k = 1; k <= n; k++)" } else { "acc = dp[1]; for (k = 2; k <= n; k++)" };
    format!(
        "int main() {{ int n, i, k, acc; scanf(\"%d\", &n); int a[n+1], dp[n+1];
  for (i = 1; i <= n; i++) scanf(\"%d\", &a[i]);
  dp[0] = 0;
  for (i = 1; i <= n; i++) dp[i] = dp[i-1] + a[i];
  {init} {step}
  printf(\"%d\", acc); return 0; }}"
    )
}

#[test]
fn aggregates_lift_and_compare() {
    for agg in ["max", "min", "sum"] {
        let p = prepare(&scan(agg)).unwrap();
        let out = p.segments.iter().find(|s| s.label == crate::analysis::Label::Output).unwrap();
        let pat = lift_output_pattern(&p.lp.program, out).unwrap();
        assert_eq!(pat.to_string(), format!("_{agg}(dp[1], dp[n])"));
    }
    let rep = verify_sources(&scan("max"), &scan("sum"), "s", &small()).unwrap();
    assert_eq!(rep.corrections.len(), 1);
    assert_eq!(rep.corrections[0].kind, CorrectionKind::OutputPattern);
    assert!(rep.corrections[0].suggested.starts_with("maximum over"));
    assert!(rep.corrections[0].replaced.as_deref().unwrap().starts_with("sum over"));
    // The oracle agrees the two programs differ.
    let (a, b) = (crate::frontend::load(&scan("max")).unwrap(), crate::frontend::load(&scan("sum")).unwrap());
    assert!(!oracle::differential(&a, &b, 50, &small().constraints).agrees());
    let fixed = apply(&prepare(&scan("sum")).unwrap().lp.program, &rep.fixes);
    let again = verify_sources(&scan("max"), &render_program(&fixed), "s", &small()).unwrap();
    assert_eq!(again.verdict, Verdict::VerifiedCorrect, "{}", render_program(&fixed));
}

#[test]
fn figure_outputs_lift() {
    let lifted = |src: &str| {
        let p = prepare(src).unwrap();
        let out = p.segments.iter().find(|s| s.label == crate::analysis::Label::Output).unwrap();
        lift_output_pattern(&p.lp.program, out).map(|o| o.to_string())
    };
    assert_eq!(lifted(FIG3).as_deref(), Some("_max(D[n-1][0], D[n-1][99])"));
    assert_eq!(lifted(FIG2).as_deref(), Some("_max(dp[n-1][0], dp[n-1][n-1])"));
    assert_eq!(lifted(SUM_REF), None);
}

#[test]
fn same_declarations_need_no_correction() {
    let r = prepare(FIG2).unwrap();
    let sigma = crate::correspondence::derive_variable_maps(&r.lp, &r.lp).remove(0);
    let (c, f) = check_declarations(&r.lp, &r.lp, &sigma);
    assert!(c.is_empty() && f.is_empty());
}

#[test]
fn exhausted_budget_substitutes_the_body() {
    let cfg = VerifyConfig { delta: 1, ..cfg() };
    let rep = verify_sources(FIG2, FIG3, "t", &cfg).unwrap();
    let update = rep.trace.iter().find(|t| t.section == Section::Update).unwrap();
    assert!(update.total_substitution);
    assert_eq!(update.refinements, 1);
    let text = render(&rep);
    assert!(text.contains("Replace the whole body by: if (j == 0) D[i][j] = D[i-1][j] + A[i][j]"), "{text}");
    let fixed = apply(&prepare(FIG3).unwrap().lp.program, &rep.fixes);
    let again = verify_sources(FIG2, &render_program(&fixed), "t", &cfg).unwrap();
    assert_eq!(again.verdict, Verdict::VerifiedCorrect, "{}", render_program(&fixed));
}

#[test]
fn verified_banner_and_unlabeled_reason() {
    let rep = run(FIG2, FIG2);
    assert_eq!(render(&rep), "t: verified correct\n");
    assert!(rep.corrections.is_empty() && rep.fixes.is_empty());
    let bad = run(FIG2, "int main() { int n; scanf(\"%d\", &n); printf(\"%d\", n); return 0; }");
    assert_eq!(bad.verdict, Verdict::Unlabeled);
    assert!(render(&bad).contains("needs manual evaluation"));
}

#[test]
fn helper_writing_its_array_is_unlabeled() {
    let src = FIG3.replace("max = arr[0];", "max = arr[0]; arr[0] = 0;");
    let rep = run(FIG2, &src);
    assert_eq!(rep.verdict, Verdict::Unlabeled);
    assert!(rep.reason.unwrap().contains("array parameter"));
}

#[test]
fn simplified_guards_are_never_larger() {
    let rep = run(FIG2, FIG3);
    for c in &rep.corrections {
        if let (Some(g), Some(r)) = (&c.guard, &c.raw_guard) {
            assert!(g.size() <= r.size());
        }
    }
    assert!(rep.feedback_size <= rep.raw_feedback_size);
}

#[test]
fn guard_read_reached_by_a_later_branch_is_checked() {
    // dp[i-2] is safe in the first condition (i > 1) but the second
    // condition reads it again when i == 1.
    let cand = SUM_REF.replace(
        "dp[i] = dp[i-1] + a[i];",
        "{ if (i > 1 && dp[i-2] > 0) dp[i] = dp[i-1] + a[i]; else if (dp[i-2] <= 0) dp[i] = dp[i-1] + a[i]; else dp[i] = dp[i-1] + a[i]; }",
    );
    let r = crate::frontend::load(SUM_REF).unwrap();
    let c = crate::frontend::load(&cand).unwrap();
    assert!(!oracle::differential(&r, &c, 20, &small().constraints).agrees(), "the read faults at run time");
    let rep = verify_sources(SUM_REF, &cand, "g", &small()).unwrap();
    assert_eq!(rep.verdict, Verdict::Faulty, "{}", render(&rep));
    let oob: Vec<&Correction> = rep.corrections.iter().filter(|c| c.kind == CorrectionKind::OutOfBounds).collect();
    assert!(!oob.is_empty() && oob.iter().all(|c| c.suggested.contains("dp[i-2]")), "{}", render(&rep));
}
