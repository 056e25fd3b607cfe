use super::*;
use crate::frontend::{load, parse_expr, Expr};

fn fig2() -> Program {
    load(include_str!("../../tests/fixtures/fig2.c")).unwrap()
}

fn fig3() -> Program {
    load(include_str!("../../tests/fixtures/fig3.c")).unwrap()
}

fn lines_with(lp: &LabeledProgram, label: Label) -> Vec<u32> {
    let mut out = Vec::new();
    lp.program.walk(&mut |s| {
        if lp.label(s.loc) == Some(label) {
            out.push(s.loc.line);
        }
    });
    out
}

fn stmt_at_line(p: &Program, line: u32) -> Stmt {
    let mut found = None;
    p.walk(&mut |s| {
        if s.loc.line == line && found.is_none() && !matches!(s.kind, StmtKind::Block(_)) {
            found = Some(s.clone());
        }
    });
    found.unwrap_or_else(|| panic!("no statement on line {line}"))
}

#[test]
fn figure_two_labels() {
    let lp = analyze(&fig2()).unwrap();
    assert_eq!(lp.dp_arrays, vec!["dp"]);
    assert_eq!(lines_with(&lp, Label::Init), vec![8]);
    assert_eq!(lines_with(&lp, Label::Update), vec![12, 14, 16, 17]);
    assert_eq!(lines_with(&lp, Label::Output), vec![20, 22, 23]);
    assert_eq!(lines_with(&lp, Label::Input), vec![3, 7]);
    let names: Vec<&str> = lp.input_vars.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, vec!["n", "m"]);
}

#[test]
fn figure_three_labels() {
    let lp = analyze(&fig3()).unwrap();
    assert_eq!(lp.dp_arrays, vec!["D"]);
    assert_eq!(lines_with(&lp, Label::Init), vec![17]);
    assert_eq!(lines_with(&lp, Label::Update), vec![20]);
    assert_eq!(lines_with(&lp, Label::Output), vec![21, 22]);
}

#[test]
fn call_is_summarized_into_guarded_expressions() {
    let p = fig3();
    let lp = analyze(&p).unwrap();
    let upd = stmt_at_line(&p, 20);
    let entry = lp.store.get(upd.loc, "max(D[i-1][j], D[i-1][j-1])").expect("call entry");
    let a = parse_expr("D[i-1][j]").unwrap();
    let b = parse_expr("D[i-1][j-1]").unwrap();
    let g = parse_expr("D[i-1][j] > D[i-1][j-1]").unwrap();
    assert_eq!(entry.len(), 2);
    assert_eq!(entry[0], GuardedExpr { guard: g.clone(), expr: a.clone() });
    assert_eq!(entry[1], GuardedExpr { guard: Expr::not(g.clone()), expr: b.clone() });
    let rhs = lp.store.resolved_expr(upd.loc, 2).unwrap();
    assert_eq!(*rhs, Expr::bin(crate::frontend::BinOp::Add, parse_expr("A[i][j]").unwrap(), Expr::ite(g, a, b)));
}

#[test]
fn temporary_is_replaced_by_its_definition() {
    let p = load(
        "int main(){int n, i, t; int x[10]; scanf(\"%d\", &n); x[0] = n;\
         for(i=1;i<n;i++){ t = x[i-1]; x[i] = t; } printf(\"%d\", x[n-1]); return 0;}",
    )
    .unwrap();
    let lp = analyze(&p).unwrap();
    assert_eq!(lp.dp_arrays, vec!["x"]);
    let mut store_loc = None;
    p.walk(&mut |s| {
        if let StmtKind::Assign { target, .. } = &s.kind {
            if target.name == "x" && target.indices == vec![Expr::var("i")] {
                store_loc = Some(s.loc);
            }
        }
    });
    let entry = lp.store.get(store_loc.unwrap(), "t").unwrap();
    assert_eq!(entry, &[GuardedExpr { guard: Expr::Bool(true), expr: parse_expr("x[i-1]").unwrap() }]);
}

#[test]
fn input_scalar_has_no_entry() {
    let lp = analyze(&fig2()).unwrap();
    assert!(lp.store.entries.values().all(|m| !m.contains_key("n")));
}

#[test]
fn loop_indices_of_figures() {
    assert_eq!(identify_loop_indices(&fig2()), ["i", "j"].iter().map(|s| s.to_string()).collect());
}

#[test]
fn echo_program_has_no_dp_array() {
    let p = load("int main(){int n; scanf(\"%d\", &n); printf(\"%d\", n); return 0;}").unwrap();
    assert_eq!(analyze(&p).unwrap_err(), AnalysisError::NoDpArray);
}

#[test]
fn variants_with_different_labels_conflict() {
    let p = load(
        "int main(){int n, i, c, t; int dp[10], inp[10]; scanf(\"%d\", &n); scanf(\"%d\", &c);\
         for(i=0;i<n;i++) scanf(\"%d\", &inp[i]); dp[0] = 0;\
         for(i=1;i<n;i++){ if (c > 0) t = dp[i-1]; else t = inp[i]; dp[i] = t; }\
         printf(\"%d\", dp[n-1]); return 0;}",
    )
    .unwrap();
    assert!(matches!(analyze(&p), Err(AnalysisError::LabelConflict(_))));
}

#[test]
fn recursion_is_rejected() {
    let p = load(
        "int f(int x){ return f(x - 1); }\
         int main(){int n, i; int dp[5]; dp[0] = 0; for(i=1;i<5;i++) dp[i] = dp[i-1] + f(i); return 0;}",
    )
    .unwrap();
    assert!(matches!(compute_substitution_store(&p), Err(AnalysisError::RecursionUnsupported(_))));
}

#[test]
fn helper_factoring_keeps_dp_detection() {
    let direct = load(
        "int main(){int n, i; int a[10], dp[10]; scanf(\"%d\", &n); for(i=0;i<n;i++) scanf(\"%d\", &a[i]);\
         dp[0] = a[0]; for(i=1;i<n;i++) dp[i] = dp[i-1] + a[i]; printf(\"%d\", dp[n-1]); return 0;}",
    )
    .unwrap();
    let helper = load(
        "int add(int x, int y){ return x + y; }\
         int main(){int n, i, s; int a[10], dp[10]; scanf(\"%d\", &n); for(i=0;i<n;i++) scanf(\"%d\", &a[i]);\
         dp[0] = a[0]; for(i=1;i<n;i++){ s = add(dp[i-1], a[i]); dp[i] = s; } printf(\"%d\", dp[n-1]); return 0;}",
    )
    .unwrap();
    assert_eq!(analyze(&direct).unwrap().dp_arrays, analyze(&helper).unwrap().dp_arrays);
}
