use std::collections::BTreeMap;

use proptest::prelude::*;

use dpfeedback::clustering::{add_member, cluster};
use dpfeedback::constraints;
use dpfeedback::corpus::{mutate, problems};
use dpfeedback::feedback::prepare;
use dpfeedback::features::{FeatureVector, UpdateLoopFeature};
use dpfeedback::frontend::{expr_to_string, load, parse, parse_expr, preprocess, render_program, BinOp, Expr, Program, ScalarType, UnOp};
use dpfeedback::analysis::Direction;
use dpfeedback::oracle;
use dpfeedback::solver::{check_validity, fold, simplify, smt, SolverConfig};

const VARS: [&str; 3] = ["i", "j", "n"];

fn arith_ops() -> impl Strategy<Value = BinOp> {
    prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul)]
}

fn cmp_ops() -> impl Strategy<Value = BinOp> {
    prop_oneof![Just(BinOp::Lt), Just(BinOp::Le), Just(BinOp::Gt), Just(BinOp::Ge), Just(BinOp::Eq), Just(BinOp::Ne)]
}

/// Integer terms over i, j, n without division.
fn term() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![(0i64..20).prop_map(Expr::Int), proptest::sample::select(&VARS[..]).prop_map(Expr::var)];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (arith_ops(), inner.clone(), inner.clone()).prop_map(|(op, l, r)| Expr::bin(op, l, r)),
            inner.clone().prop_map(|x| Expr::Unary(UnOp::Neg, Box::new(x))),
        ]
    })
}

/// Boolean formulas over comparisons of terms.
fn formula() -> impl Strategy<Value = Expr> {
    let atom = (cmp_ops(), term(), term()).prop_map(|(op, l, r)| Expr::bin(op, l, r));
    atom.prop_recursive(3, 10, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Expr::bin(BinOp::And, l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Expr::bin(BinOp::Or, l, r)),
            inner.clone().prop_map(Expr::not),
            (inner.clone(), term(), term()).prop_map(|(c, a, b)| Expr::bin(BinOp::Lt, Expr::ite(c, a, b), Expr::var("n"))),
        ]
    })
}

/// Linear guards as they appear in DP loops.
fn linear_guard() -> impl Strategy<Value = Expr> {
    let side = prop_oneof![
        proptest::sample::select(&VARS[..]).prop_map(Expr::var),
        (proptest::sample::select(&VARS[..]), 0i64..3).prop_map(|(v, k)| Expr::bin(BinOp::Sub, Expr::var(v), Expr::Int(k))),
        (0i64..3).prop_map(Expr::Int),
    ];
    let atom = (cmp_ops(), side.clone(), side).prop_map(|(op, l, r)| Expr::bin(op, l, r));
    atom.prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Expr::bin(BinOp::And, l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Expr::bin(BinOp::Or, l, r)),
            inner.prop_map(Expr::not),
        ]
    })
}

fn env() -> impl Strategy<Value = BTreeMap<String, i64>> {
    (-30i64..30, -30i64..30, -30i64..30)
        .prop_map(|(i, j, n)| VARS.iter().map(|v| v.to_string()).zip([i, j, n]).collect())
}

/// Every program the corpus can produce: solutions and their mutants.
fn corpus_programs() -> Vec<Program> {
    let mut out = Vec::new();
    for p in problems() {
        for (_, src) in p.solutions {
            out.push(load(src).unwrap());
            out.extend(mutate(src).into_iter().map(|(_, m)| m));
        }
    }
    out
}

fn feature(k: usize) -> FeatureVector {
    FeatureVector {
        dp_type: ScalarType::Int,
        dp_dims: 1 + k % 2,
        input_reused_as_dp: k % 3 == 0,
        num_update_loops: 1,
        update_loops: vec![UpdateLoopFeature { depth: 1 + k % 2, directions: vec![Direction::Up], updated_element: "dp[i]".into() }],
    }
}

proptest! {
    #[test]
    fn expressions_print_and_parse_back(e in formula(), env in env()) {
        // The parser folds negated literals, so compare values and require
        // printing to be stable from the first reparse on.
        let back = parse_expr(&expr_to_string(&e)).unwrap();
        prop_assert_eq!(smt::eval(&back, &env), smt::eval(&e, &env));
        let text = expr_to_string(&back);
        prop_assert_eq!(expr_to_string(&parse_expr(&text).unwrap()), text);
    }

    #[test]
    fn c_and_solver_evaluation_agree_on_small_values(e in formula(), env in env()) {
        let c = constraints::eval(&e, &env);
        let s = smt::eval(&e, &env);
        prop_assert_eq!(c.map(i128::from), s);
    }

    #[test]
    fn folding_preserves_value(e in formula(), env in env()) {
        prop_assert_eq!(smt::eval(&fold(&e), &env), smt::eval(&e, &env));
    }

    #[test]
    fn clusters_partition_by_equal_vectors(picks in proptest::collection::vec(0usize..6, 0..24)) {
        let corpus: Vec<(String, FeatureVector)> = picks.iter().enumerate().map(|(n, k)| (format!("s{n}"), feature(*k))).collect();
        let cs = cluster(&corpus);
        let mut seen = 0;
        for c in &cs {
            for m in &c.members {
                let fv = &corpus.iter().find(|(id, _)| id == m).unwrap().1;
                prop_assert_eq!(fv, &c.feature_vector);
            }
            seen += c.members.len();
        }
        prop_assert_eq!(seen, corpus.len());
        prop_assert!(cs.windows(2).all(|w| w[0].members.len() >= w[1].members.len()));
        // Adding one at a time ends where batch clustering does.
        let mut inc = Vec::new();
        for (id, fv) in &corpus {
            add_member(&mut inc, id, fv);
        }
        prop_assert_eq!(inc, cs);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn preprocessing_is_idempotent_and_printing_round_trips(k in any::<prop::sample::Index>()) {
        let all = corpus_programs();
        let p = k.get(&all);
        let once = preprocess(p);
        prop_assert_eq!(&preprocess(&once), &once);
        let text = render_program(p);
        prop_assert_eq!(render_program(&parse(&text).unwrap()), text);
    }

    #[test]
    fn oracle_is_reflexive(k in any::<prop::sample::Index>()) {
        let all = corpus_programs();
        let p = k.get(&all);
        let c = constraints::InputConstraints::parse("1 <= n && n <= 20\n1 <= m && m <= 20").unwrap();
        prop_assert!(oracle::differential(p, p, 10, &c).agrees());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn canonicalization_preserves_behaviour(k in any::<prop::sample::Index>()) {
        let all: Vec<(Program, &str)> = problems()
            .into_iter()
            .flat_map(|p| p.solutions.iter().flat_map(move |(_, s)| mutate(s).into_iter().map(move |(_, m)| (m, p.constraints))))
            .collect();
        let (p, k) = k.get(&all);
        let text = render_program(p);
        if let Ok(c) = prepare(&text) {
            let k = constraints::InputConstraints::parse(k).unwrap();
            let v = oracle::differential(&load(&text).unwrap(), &c.lp.program, 20, &k);
            prop_assert!(v.agrees(), "{text}\n{v:?}");
        }
    }

    #[test]
    fn simplified_guards_are_equivalent_and_no_larger(g in linear_guard()) {
        let ctx = parse_expr("0 <= j && j <= i && i < n").unwrap();
        let cfg = SolverConfig::default();
        let s = simplify(&g, &ctx, &cfg);
        prop_assert!(s.size() <= g.size(), "{} -> {}", expr_to_string(&g), expr_to_string(&s));
        let same = Expr::bin(
            BinOp::Or,
            Expr::not(ctx.clone()),
            Expr::bin(BinOp::Or, Expr::and(g.clone(), s.clone()), Expr::and(Expr::not(g.clone()), Expr::not(s.clone()))),
        );
        prop_assert!(check_validity(&same, &cfg).is_valid(), "{} -> {}", expr_to_string(&g), expr_to_string(&s));
    }
}
