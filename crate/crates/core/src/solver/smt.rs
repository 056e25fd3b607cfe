//! Translation of scalar formulas to SMT-LIB 2 and direct evaluation under a
//! model. Every variable has sort Int; C truthiness is `x != 0`.

use std::collections::{BTreeMap, BTreeSet};

use crate::frontend::{BinOp, Expr, UnOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sort {
    Int,
    Bool,
}

pub fn quote(sym: &str) -> String {
    format!("|{}|", sym.replace(['|', '\\'], "_"))
}

fn lit(k: i64) -> String {
    if k < 0 { format!("(- {})", k.unsigned_abs()) } else { k.to_string() }
}

fn coerce((s, t): (Sort, String), want: Sort) -> String {
    match (s, want) {
        (Sort::Int, Sort::Bool) => format!("(not (= {t} 0))"),
        (Sort::Bool, Sort::Int) => format!("(ite {t} 1 0)"),
        _ => t,
    }
}

/// C division truncating toward zero, from SMT-LIB's Euclidean `div`.
fn c_div(a: &str, b: &str) -> String {
    format!(
        "(ite (>= {a} 0) (ite (>= {b} 0) (div {a} {b}) (- (div {a} (- {b})))) (ite (>= {b} 0) (- (div (- {a}) {b})) (div (- {a}) (- {b}))))"
    )
}

fn tr(e: &Expr) -> Result<(Sort, String), String> {
    Ok(match e {
        Expr::Int(k) => (Sort::Int, lit(*k)),
        Expr::Bool(b) => (Sort::Bool, b.to_string()),
        Expr::Var(v) => (Sort::Int, quote(v)),
        Expr::Index(..) | Expr::Call(..) => return Err(format!("unscalarized term {e:?}")),
        Expr::Unary(UnOp::Neg, x) => (Sort::Int, format!("(- {})", coerce(tr(x)?, Sort::Int))),
        Expr::Unary(UnOp::Not, x) => (Sort::Bool, format!("(not {})", coerce(tr(x)?, Sort::Bool))),
        Expr::Ternary(c, a, b) => {
            let c = coerce(tr(c)?, Sort::Bool);
            let (a, b) = (tr(a)?, tr(b)?);
            let s = if a.0 == Sort::Bool && b.0 == Sort::Bool { Sort::Bool } else { Sort::Int };
            (s, format!("(ite {c} {} {})", coerce(a, s), coerce(b, s)))
        }
        Expr::Binary(op, l, r) => {
            let (l, r) = (tr(l)?, tr(r)?);
            match op {
                BinOp::And | BinOp::Or => {
                    let f = if *op == BinOp::And { "and" } else { "or" };
                    (Sort::Bool, format!("({f} {} {})", coerce(l, Sort::Bool), coerce(r, Sort::Bool)))
                }
                BinOp::Eq | BinOp::Ne if l.0 == Sort::Bool && r.0 == Sort::Bool => {
                    let eq = format!("(= {} {})", l.1, r.1);
                    (Sort::Bool, if *op == BinOp::Eq { eq } else { format!("(not {eq})") })
                }
                _ => {
                    let (a, b) = (coerce(l, Sort::Int), coerce(r, Sort::Int));
                    match op {
                        BinOp::Add => (Sort::Int, format!("(+ {a} {b})")),
                        BinOp::Sub => (Sort::Int, format!("(- {a} {b})")),
                        BinOp::Mul => (Sort::Int, format!("(* {a} {b})")),
                        BinOp::Div => (Sort::Int, c_div(&a, &b)),
                        BinOp::Mod => (Sort::Int, format!("(- {a} (* {b} {}))", c_div(&a, &b))),
                        BinOp::Lt => (Sort::Bool, format!("(< {a} {b})")),
                        BinOp::Le => (Sort::Bool, format!("(<= {a} {b})")),
                        BinOp::Gt => (Sort::Bool, format!("(> {a} {b})")),
                        BinOp::Ge => (Sort::Bool, format!("(>= {a} {b})")),
                        BinOp::Eq => (Sort::Bool, format!("(= {a} {b})")),
                        BinOp::Ne => (Sort::Bool, format!("(not (= {a} {b}))")),
                        BinOp::And | BinOp::Or => unreachable!(),
                    }
                }
            }
        }
    })
}

/// SMT-LIB text of `e` as a Bool term.
pub fn to_smt_bool(e: &Expr) -> Result<String, String> {
    Ok(coerce(tr(e)?, Sort::Bool))
}

/// Free scalar symbols.
pub fn symbols(e: &Expr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    e.walk(&mut |x| {
        if let Expr::Var(v) = x {
            out.insert(v.clone());
        }
    });
    out
}

fn is_numeral(e: &Expr) -> bool {
    match e {
        Expr::Int(_) => true,
        Expr::Unary(UnOp::Neg, x) => is_numeral(x),
        _ => false,
    }
}

/// Whether the formula needs nonlinear integer arithmetic.
pub fn is_nonlinear(e: &Expr) -> bool {
    let mut found = false;
    e.walk(&mut |x| match x {
        Expr::Binary(BinOp::Mul, a, b) if !is_numeral(a) && !is_numeral(b) => found = true,
        Expr::Binary(BinOp::Div | BinOp::Mod, _, b) if !is_numeral(b) => found = true,
        _ => {}
    });
    found
}

/// Value of `e` under `model` with unbounded-integer semantics matching the
/// SMT translation. Unassigned symbols default to 0. `None` on division by
/// zero or overflow of i128.
pub fn eval(e: &Expr, model: &BTreeMap<String, i64>) -> Option<i128> {
    Some(match e {
        Expr::Int(k) => *k as i128,
        Expr::Bool(b) => *b as i128,
        Expr::Var(v) => model.get(v).copied().unwrap_or(0) as i128,
        Expr::Index(..) | Expr::Call(..) => return None,
        Expr::Unary(UnOp::Neg, x) => eval(x, model)?.checked_neg()?,
        Expr::Unary(UnOp::Not, x) => (eval(x, model)? == 0) as i128,
        Expr::Ternary(c, a, b) => {
            if eval(c, model)? != 0 {
                eval(a, model)?
            } else {
                eval(b, model)?
            }
        }
        Expr::Binary(op, l, r) => {
            let a = eval(l, model)?;
            // Short-circuiting is irrelevant for total terms, but keeps
            // division by zero in a dead branch from poisoning the result.
            match op {
                BinOp::And if a == 0 => return Some(0),
                BinOp::Or if a != 0 => return Some(1),
                _ => {}
            }
            let b = eval(r, model)?;
            match op {
                BinOp::Add => a.checked_add(b)?,
                BinOp::Sub => a.checked_sub(b)?,
                BinOp::Mul => a.checked_mul(b)?,
                BinOp::Div => a.checked_div(b)?,
                BinOp::Mod => a.checked_rem(b)?,
                BinOp::Lt => (a < b) as i128,
                BinOp::Le => (a <= b) as i128,
                BinOp::Gt => (a > b) as i128,
                BinOp::Ge => (a >= b) as i128,
                BinOp::Eq => (a == b) as i128,
                BinOp::Ne => (a != b) as i128,
                BinOp::And | BinOp::Or => (b != 0) as i128,
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_expr;

    #[test]
    fn translates_mixed_sorts() {
        let e = parse_expr("(a > 0) + 1 == b && !c").unwrap();
        assert_eq!(
            to_smt_bool(&e).unwrap(),
            "(and (= (+ (ite (> |a| 0) 1 0) 1) |b|) (not (not (= |c| 0))))"
        );
    }

    #[test]
    fn negative_literals() {
        assert_eq!(to_smt_bool(&parse_expr("x == -3").unwrap()).unwrap(), "(= |x| (- 3))");
    }

    #[test]
    fn truncating_division_in_eval() {
        let m = BTreeMap::from([("a".to_string(), -7), ("b".to_string(), 2)]);
        assert_eq!(eval(&parse_expr("a / b").unwrap(), &m), Some(-3));
        assert_eq!(eval(&parse_expr("a % b").unwrap(), &m), Some(-1));
    }

    #[test]
    fn nonlinearity() {
        assert!(!is_nonlinear(&parse_expr("2 * x + y / 3").unwrap()));
        assert!(is_nonlinear(&parse_expr("x * y").unwrap()));
        assert!(is_nonlinear(&parse_expr("x % y").unwrap()));
    }
}
