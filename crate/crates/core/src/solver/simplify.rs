//! Guard simplification: local rewriting, then solver-checked removal of
//! redundant conjuncts. The result is kept only if the solver confirms it is
//! equivalent and it is no larger.

use crate::frontend::{BinOp, Expr, UnOp};

use super::{check_validity, SolverConfig};

fn conjuncts(e: &Expr, out: &mut Vec<Expr>) {
    match e {
        Expr::Binary(BinOp::And, l, r) => {
            conjuncts(l, out);
            conjuncts(r, out);
        }
        other => out.push(other.clone()),
    }
}

fn disjuncts(e: &Expr, out: &mut Vec<Expr>) {
    match e {
        Expr::Binary(BinOp::Or, l, r) => {
            disjuncts(l, out);
            disjuncts(r, out);
        }
        other => out.push(other.clone()),
    }
}

fn negate(e: &Expr) -> Expr {
    match e {
        Expr::Bool(b) => Expr::Bool(!b),
        Expr::Unary(UnOp::Not, x) => (**x).clone(),
        Expr::Binary(op, l, r) if op.is_comparison() => {
            Expr::Binary(op.negated().expect("comparisons negate"), l.clone(), r.clone())
        }
        other => Expr::not(other.clone()),
    }
}

fn is_boolean(e: &Expr) -> bool {
    match e {
        Expr::Bool(_) | Expr::Unary(UnOp::Not, _) => true,
        Expr::Binary(op, _, _) => op.is_comparison() || op.is_logical(),
        _ => false,
    }
}

fn rebuild_and(items: Vec<Expr>) -> Expr {
    let mut kept: Vec<Expr> = Vec::new();
    for it in items {
        match it {
            Expr::Bool(true) => {}
            Expr::Bool(false) => return Expr::Bool(false),
            it if kept.contains(&it) => {}
            it => {
                if kept.iter().any(|k| is_boolean(k) && *k == negate(&it)) {
                    return Expr::Bool(false);
                }
                kept.push(it)
            }
        }
    }
    kept.into_iter().reduce(|a, b| Expr::bin(BinOp::And, a, b)).unwrap_or(Expr::Bool(true))
}

fn rebuild_or(items: Vec<Expr>) -> Expr {
    let mut kept: Vec<Expr> = Vec::new();
    for it in items {
        match it {
            Expr::Bool(false) => {}
            Expr::Bool(true) => return Expr::Bool(true),
            it if kept.contains(&it) => {}
            it => {
                if kept.iter().any(|k| is_boolean(k) && *k == negate(&it)) {
                    return Expr::Bool(true);
                }
                kept.push(it)
            }
        }
    }
    kept.into_iter().reduce(|a, b| Expr::bin(BinOp::Or, a, b)).unwrap_or(Expr::Bool(false))
}

fn fold_node(e: Expr) -> Expr {
    match e {
        Expr::Unary(UnOp::Neg, x) => match *x {
            Expr::Int(k) => k.checked_neg().map(Expr::Int).unwrap_or(Expr::Unary(UnOp::Neg, Box::new(Expr::Int(k)))),
            Expr::Unary(UnOp::Neg, y) => *y,
            other => Expr::Unary(UnOp::Neg, Box::new(other)),
        },
        Expr::Unary(UnOp::Not, x) if is_boolean(&x) => negate(&x),
        Expr::Ternary(c, a, b) => match *c {
            Expr::Bool(true) => *a,
            Expr::Bool(false) => *b,
            _ if a == b => *a,
            c => Expr::Ternary(Box::new(c), a, b),
        },
        Expr::Binary(BinOp::And, l, r) => {
            let mut items = Vec::new();
            conjuncts(&l, &mut items);
            conjuncts(&r, &mut items);
            rebuild_and(items)
        }
        Expr::Binary(BinOp::Or, l, r) => {
            let mut items = Vec::new();
            disjuncts(&l, &mut items);
            disjuncts(&r, &mut items);
            rebuild_or(items)
        }
        Expr::Binary(op, l, r) => match (op, *l, *r) {
            (op, Expr::Int(a), Expr::Int(b)) => {
                let v = match op {
                    BinOp::Add => a.checked_add(b).map(Expr::Int),
                    BinOp::Sub => a.checked_sub(b).map(Expr::Int),
                    BinOp::Mul => a.checked_mul(b).map(Expr::Int),
                    BinOp::Div if b != 0 => a.checked_div(b).map(Expr::Int),
                    BinOp::Mod if b != 0 => a.checked_rem(b).map(Expr::Int),
                    BinOp::Lt => Some(Expr::Bool(a < b)),
                    BinOp::Le => Some(Expr::Bool(a <= b)),
                    BinOp::Gt => Some(Expr::Bool(a > b)),
                    BinOp::Ge => Some(Expr::Bool(a >= b)),
                    BinOp::Eq => Some(Expr::Bool(a == b)),
                    BinOp::Ne => Some(Expr::Bool(a != b)),
                    _ => None,
                };
                v.unwrap_or_else(|| Expr::bin(op, Expr::Int(a), Expr::Int(b)))
            }
            (BinOp::Add, x, Expr::Int(0)) | (BinOp::Add, Expr::Int(0), x) | (BinOp::Sub, x, Expr::Int(0)) => x,
            (BinOp::Mul, x, Expr::Int(1)) | (BinOp::Mul, Expr::Int(1), x) | (BinOp::Div, x, Expr::Int(1)) => x,
            // `x + -c` reads better as `x - c`.
            (BinOp::Add, x, Expr::Int(k)) if k < 0 && k != i64::MIN => Expr::bin(BinOp::Sub, x, Expr::Int(-k)),
            (BinOp::Sub, x, Expr::Int(k)) if k < 0 && k != i64::MIN => Expr::bin(BinOp::Add, x, Expr::Int(-k)),
            (op, a, b) if op.is_comparison() && a == b => {
                Expr::Bool(matches!(op, BinOp::Le | BinOp::Ge | BinOp::Eq))
            }
            (op, a, b) => Expr::bin(op, a, b),
        },
        other => other,
    }
}

/// Solver-free local simplification: constant folding, unit laws, negation
/// pushed into comparisons, duplicate and complementary operand removal.
pub fn fold(e: &Expr) -> Expr {
    e.map(&mut fold_node)
}

/// Simplifies `f` under the assumption `ctx`. On any solver failure, or if the
/// candidate is not proved equivalent or is larger, returns `f` unchanged.
pub fn simplify(f: &Expr, ctx: &Expr, cfg: &SolverConfig) -> Expr {
    let implies = |a: Expr, b: Expr| Expr::bin(BinOp::Or, Expr::not(a), b);
    let valid = |g: &Expr| check_validity(g, cfg).is_valid();
    let folded = fold(f);
    let candidate = if valid(&implies(ctx.clone(), folded.clone())) {
        Expr::Bool(true)
    } else if valid(&implies(ctx.clone(), negate(&folded))) {
        Expr::Bool(false)
    } else {
        let mut items = Vec::new();
        conjuncts(&folded, &mut items);
        let mut k = 0;
        while items.len() > 1 && k < items.len() {
            let rest: Vec<Expr> = items.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, e)| e.clone()).collect();
            let premise = Expr::and(ctx.clone(), Expr::and_all(rest));
            if valid(&implies(premise, items[k].clone())) {
                items.remove(k);
            } else {
                k += 1;
            }
        }
        rebuild_and(items)
    };
    if candidate.size() > f.size() {
        return f.clone();
    }
    if candidate == *f {
        return candidate;
    }
    let equiv = Expr::bin(
        BinOp::And,
        implies(Expr::and(ctx.clone(), f.clone()), candidate.clone()),
        implies(Expr::and(ctx.clone(), candidate.clone()), f.clone()),
    );
    if valid(&equiv) {
        candidate
    } else {
        f.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_expr;

    fn e(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    #[test]
    fn folds_locally() {
        assert_eq!(fold(&e("c && true")), e("c"));
        assert_eq!(fold(&e("!(j == 0) && j == i")), e("j != 0 && j == i"));
        assert_eq!(fold(&e("100 - 1")), e("99"));
        assert_eq!(fold(&e("x > 0 && !(x > 0)")), Expr::Bool(false));
        assert_eq!(fold(&e("a - b")), e("a - b"));
    }

    #[test]
    fn drops_redundant_bound() {
        let cfg = SolverConfig::default();
        assert_eq!(simplify(&e("x > 0 && x > 1"), &Expr::Bool(true), &cfg), e("x > 1"));
    }

    #[test]
    fn uses_context() {
        let cfg = SolverConfig::default();
        // With i >= 1, j == i already excludes j == 0.
        let got = simplify(&e("j != 0 && j == i && i >= 1 && j >= 0"), &e("i >= 1"), &cfg);
        assert_eq!(got, e("j == i"));
    }

    #[test]
    fn never_grows() {
        let cfg = SolverConfig::default();
        let f = e("x == 1 || y == 2");
        assert!(simplify(&f, &Expr::Bool(true), &cfg).size() <= f.size());
    }
}
