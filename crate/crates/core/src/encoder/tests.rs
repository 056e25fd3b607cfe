use super::*;
use crate::analysis::{analyze, Label, LabeledProgram};
use crate::constraints::InputConstraints;
use crate::correspondence::{canonicalize_loops, derive_variable_maps, Segment, VariableMap};
use crate::frontend::{load, parse_expr};
use crate::solver::{check_validity, fold, SolverConfig, VerdictKind};

fn lp(src: &str) -> LabeledProgram {
    analyze(&load(src).unwrap()).unwrap()
}

fn fig2() -> LabeledProgram {
    lp(include_str!("../../tests/fixtures/fig2.c"))
}

fn fig3() -> LabeledProgram {
    lp(include_str!("../../tests/fixtures/fig3.c"))
}

fn e(s: &str) -> Expr {
    parse_expr(s).unwrap()
}

fn segment(p: &LabeledProgram, label: Label) -> Segment {
    canonicalize_loops(p).unwrap().into_iter().find(|s| s.label == label).unwrap()
}

fn queries(r: &LabeledProgram, c: &LabeledProgram, label: Label, k: &str) -> Vec<EquivalenceQuery> {
    let sigma = derive_variable_maps(r, c).remove(0);
    let k = InputConstraints::parse(k).unwrap();
    build_queries(r, &segment(r, label), c, &segment(c, label), &sigma, &k).unwrap()
}

fn body_of(p: &LabeledProgram, label: Label) -> BodyFormula {
    let s = segment(p, label);
    let (h, items) = loop_nest_of(p, &s.stmts[0], &[]).unwrap();
    encode_body(p, items, &h.iter().map(|h| h.index.clone()).collect()).unwrap()
}

fn valid(f: &Expr) -> bool {
    check_validity(f, &SolverConfig::default()).kind == VerdictKind::Valid
}

#[test]
fn figure_two_update_has_four_disjoint_paths() {
    let b = body_of(&fig2(), Label::Update);
    let guards: Vec<Expr> = b.stmts.iter().map(|g| fold(&g.guard)).collect();
    assert_eq!(
        guards,
        vec![
            e("j == 0"),
            e("j != 0 && j == i"),
            e("j != 0 && j != i && dp[i-1][j] > dp[i-1][j-1]"),
            e("j != 0 && j != i && dp[i-1][j] <= dp[i-1][j-1]"),
        ]
    );
    assert!(b.stmts.iter().all(|g| g.effects.len() == 1));
    assert_eq!(b.stmts[0].effects[0].cell, Cell::Elem("dp".into(), vec![e("i"), e("j")]));
    assert_eq!(b.stmts[0].effects[0].value, e("dp[i-1][j] + m[i][j]"));
}

#[test]
fn figure_three_update_is_one_guarded_equality() {
    let b = body_of(&fig3(), Label::Update);
    assert_eq!(b.stmts.len(), 1);
    assert_eq!(b.stmts[0].guard, Expr::Bool(true));
    let eff = &b.stmts[0].effects[0];
    assert_eq!(eff.cell, Cell::Elem("D".into(), vec![e("i"), e("j")]));
    assert_eq!(eff.value, e("A[i][j] + (D[i-1][j] > D[i-1][j-1] ? D[i-1][j] : D[i-1][j-1])"));
}

#[test]
fn one_armed_if_leaves_a_frame_path() {
    let p = lp("int main(){int n, i; int dp[10]; scanf(\"%d\", &n); dp[0] = 0;\
                for(i=1;i<n;i++){ dp[i] = dp[i-1]; if (i > 3) dp[i] = dp[i-1] + 1; } printf(\"%d\", dp[n-1]); return 0;}");
    let b = body_of(&p, Label::Update);
    assert_eq!(b.stmts.len(), 2);
    assert_eq!(b.stmts[0].guard, e("i > 3"));
    assert_eq!(final_value(&b.stmts[0].effects, &Cell::Elem("dp".into(), vec![e("i")])), e("dp[i-1] + 1"));
    assert_eq!(final_value(&b.stmts[1].effects, &Cell::Elem("dp".into(), vec![e("i")])), e("dp[i-1]"));
    // A cell nobody writes keeps its pre-state value.
    assert_eq!(final_value(&b.stmts[1].effects, &Cell::Elem("dp".into(), vec![e("0")])), e("0 == i ? dp[i-1] : dp[0]"));
}

#[test]
fn reads_after_writes_see_the_write() {
    let p = lp("int main(){int n, i; int dp[10]; scanf(\"%d\", &n); dp[0] = 0;\
                for(i=1;i<n;i++){ dp[i] = dp[i-1] + 1; dp[i] = dp[i] * 2; } printf(\"%d\", dp[n-1]); return 0;}");
    let b = body_of(&p, Label::Update);
    let v = final_value(&b.stmts[0].effects, &Cell::Elem("dp".into(), vec![e("i")]));
    assert_eq!(v, e("(dp[i-1] + 1) * 2"));
}

#[test]
fn input_modification_fails() {
    let p = lp("int main(){int n, i; int dp[10]; scanf(\"%d\", &n); dp[0] = 0;\
                for(i=1;i<n;i++){ dp[i] = dp[i-1] + n; n = n - 1; } printf(\"%d\", dp[n-1]); return 0;}");
    let s = segment(&p, Label::Update);
    let (h, items) = loop_nest_of(&p, &s.stmts[0], &[]).unwrap();
    let err = encode_body(&p, items, &h.iter().map(|h| h.index.clone()).collect()).unwrap_err();
    assert!(err.to_string().contains("input variable 'n'"), "{err}");
}

#[test]
fn guards_are_disjoint_and_exhaustive() {
    for b in [body_of(&fig2(), Label::Update), body_of(&fig3(), Label::Update)] {
        for (x, g) in b.stmts.iter().enumerate() {
            for h in &b.stmts[x + 1..] {
                let mut s = Scalarizer::default();
                let f = Expr::not(Expr::and(s.pre(Side::Ref, &g.guard), s.pre(Side::Ref, &h.guard)));
                assert!(valid(&f));
            }
        }
        let mut s = Scalarizer::default();
        assert!(valid(&s.pre(Side::Ref, &Expr::or_all(b.stmts.iter().map(|g| g.guard.clone())))));
    }
}

#[test]
fn commutative_operands_sort() {
    let id = |n: &str| n.to_string();
    assert_eq!(normalize_commutative(&e("b + a"), &id), e("a + b"));
    assert_eq!(normalize_commutative(&e("a - b"), &id), e("a - b"));
    assert_eq!(normalize_commutative(&e("1 + j + i"), &id), e("i + j + 1"));
    // i+j on one side and b+a on the other, with i->a and j->b.
    let sigma = VariableMap { pairs: [("i", "a"), ("j", "b")].iter().map(|(x, y)| (x.to_string(), y.to_string())).collect() };
    let s = Scalarizer::new(&sigma, Default::default(), Default::default());
    let l = s.normalize(Side::Ref, &e("i + j"));
    let r = s.normalize(Side::Cand, &e("b + a"));
    assert_eq!(r, e("a + b"));
    assert_eq!(l.rename(&|n| sigma.get(n).map(str::to_string)), r);
}

#[test]
fn corresponding_accesses_are_equated() {
    let sigma = VariableMap {
        pairs: [("dp", "D"), ("i", "i"), ("j", "j")].iter().map(|(x, y)| (x.to_string(), y.to_string())).collect(),
    };
    let mut s = Scalarizer::new(&sigma, Default::default(), Default::default());
    let a = s.pre(Side::Ref, &e("dp[i-1][j]"));
    let b = s.pre(Side::Cand, &e("D[i-1][j]"));
    assert_eq!(a, Expr::var("r!dp[i-1][j]"));
    assert_eq!(b, Expr::var("c!D[i-1][j]"));
    assert_eq!(s.consistency(), vec![Expr::bin(BinOp::Eq, b, a)]);
    // Array-free formulas scalarize to themselves apart from prefixes.
    let mut t = Scalarizer::default();
    assert_eq!(t.pre(Side::Ref, &e("1 + 2")), e("1 + 2"));
    assert!(t.consistency().is_empty());
}

#[test]
fn figure_headers_are_equivalent() {
    let mut q = queries(&fig2(), &fig3(), Label::Update, "1 <= n && n <= 100").remove(0);
    assert!(valid(&q.iter_only()));
    assert!(valid(&q.phi()));
}

#[test]
fn extra_guarded_iteration_is_equivalent() {
    let r = lp("int main(){int n, i; int dp[10]; scanf(\"%d\", &n); dp[0] = 0;\
                for(i=1;i<=n;i++) dp[i] = dp[i-1] + 1; printf(\"%d\", dp[n]); return 0;}");
    let c = lp("int main(){int n, k; int f[10]; scanf(\"%d\", &n); f[0] = 0;\
                for(k=0;k<=n;k++) if (k > 0) f[k] = f[k-1] + 1; printf(\"%d\", f[n]); return 0;}");
    let mut q = queries(&r, &c, Label::Update, "").remove(0);
    assert!(valid(&q.phi()));
    assert!(!valid(&q.iter_only()));
    assert!(valid(&q.psi().formula()));
}

#[test]
fn short_bound_is_invalid() {
    let r = lp("int main(){int n, i; int dp[10]; scanf(\"%d\", &n); dp[0] = 0;\
                for(i=1;i<n;i++) dp[i] = dp[i-1] + 1; printf(\"%d\", dp[n-1]); return 0;}");
    let c = lp("int main(){int n, i; int dp[10]; scanf(\"%d\", &n); dp[0] = 0;\
                for(i=1;i<n-1;i++) dp[i] = dp[i-1] + 1; printf(\"%d\", dp[n-1]); return 0;}");
    let mut q = queries(&r, &c, Label::Update, "").remove(0);
    let v = check_validity(&q.phi(), &SolverConfig::default());
    assert_eq!(v.kind, VerdictKind::Counterexample);
    let m = v.model.unwrap();
    assert_eq!(m["r!i"], m["r!n"] - 1);
}

#[test]
fn figure_bodies_differ_and_self_check_passes() {
    let (r, c) = (fig2(), fig3());
    let mut q = queries(&r, &c, Label::Update, "1 <= n && n <= 100").remove(0);
    assert_eq!(check_validity(&q.psi().formula(), &SolverConfig::default()).kind, VerdictKind::Counterexample);
    let mut same = queries(&r, &r, Label::Update, "1 <= n && n <= 100").remove(0);
    assert!(valid(&same.psi().formula()));
}

#[test]
fn straight_line_pairs_have_trivial_phi() {
    let mut q = queries(&fig2(), &fig3(), Label::Init, "").remove(0);
    assert_eq!(q.phi(), Expr::Bool(true));
    assert!(valid(&q.psi().formula()));
}

#[test]
fn literal_bounds_catch_negative_index() {
    let mut q = queries(&fig2(), &fig3(), Label::Update, "1 <= n && n <= 100").remove(0);
    let dims: BTreeMap<String, Vec<Expr>> =
        [("D".to_string(), vec![e("101"), e("101")]), ("A".to_string(), vec![e("101"), e("101")])].into();
    let checks = q.bounds_checks(&dims);
    let bad: Vec<String> = checks
        .iter()
        .filter(|c| check_validity(&c.formula, &SolverConfig::default()).kind == VerdictKind::Counterexample)
        .map(|c| crate::frontend::expr_to_compact(&c.access))
        .collect();
    assert_eq!(bad, vec!["D[i-1][j-1]".to_string()]);
}
