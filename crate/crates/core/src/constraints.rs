//! Instructor-supplied input constraints: one boolean expression per line over
//! the reference's input names, e.g. `1 <= n && n <= 100`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::frontend::{parse_expr, BinOp, Expr, FrontendError, UnOp};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputConstraints {
    pub exprs: Vec<Expr>,
}

impl InputConstraints {
    /// Blank lines and lines starting with `#` or `//` are ignored.
    pub fn parse(text: &str) -> Result<InputConstraints, FrontendError> {
        let mut exprs = Vec::new();
        for line in text.lines() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') || t.starts_with("//") {
                continue;
            }
            exprs.push(parse_expr(t)?);
        }
        Ok(InputConstraints { exprs })
    }

    pub fn is_empty(&self) -> bool {
        self.exprs.is_empty()
    }

    pub fn conjunction(&self) -> Expr {
        Expr::and_all(self.exprs.iter().cloned())
    }

    /// `Some(true/false)` when every mentioned name is bound.
    pub fn holds(&self, env: &BTreeMap<String, i64>) -> Option<bool> {
        for e in &self.exprs {
            if eval(e, env)? == 0 {
                return Some(false);
            }
        }
        Some(true)
    }

    /// Inclusive bounds on `name` implied by top-level conjuncts comparing it
    /// against a literal.
    pub fn bounds(&self, name: &str) -> (Option<i64>, Option<i64>) {
        let (mut lo, mut hi): (Option<i64>, Option<i64>) = (None, None);
        let mut conj = Vec::new();
        for e in &self.exprs {
            flatten_and(e, &mut conj);
        }
        for c in conj {
            let Expr::Binary(op, l, r) = c else { continue };
            let (op, k) = match (&**l, &**r) {
                (Expr::Var(v), Expr::Int(k)) if v == name => (*op, *k),
                (Expr::Int(k), Expr::Var(v)) if v == name => (op.swapped(), *k),
                _ => continue,
            };
            let (l2, h2) = match op {
                BinOp::Lt => (None, Some(k - 1)),
                BinOp::Le => (None, Some(k)),
                BinOp::Gt => (Some(k + 1), None),
                BinOp::Ge => (Some(k), None),
                BinOp::Eq => (Some(k), Some(k)),
                _ => (None, None),
            };
            if let Some(v) = l2 {
                lo = Some(lo.map_or(v, |x| x.max(v)));
            }
            if let Some(v) = h2 {
                hi = Some(hi.map_or(v, |x| x.min(v)));
            }
        }
        (lo, hi)
    }
}

fn flatten_and<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
    match e {
        Expr::Binary(BinOp::And, l, r) => {
            flatten_and(l, out);
            flatten_and(r, out);
        }
        other => out.push(other),
    }
}

/// Evaluate a scalar-only expression with C semantics.
pub fn eval(e: &Expr, env: &BTreeMap<String, i64>) -> Option<i64> {
    Some(match e {
        Expr::Int(v) => *v,
        Expr::Bool(b) => *b as i64,
        Expr::Var(v) => *env.get(v)?,
        Expr::Binary(op, l, r) => {
            let a = eval(l, env)?;
            match op {
                BinOp::And => return Some((a != 0 && eval(r, env)? != 0) as i64),
                BinOp::Or => return Some((a != 0 || eval(r, env)? != 0) as i64),
                _ => {}
            }
            let b = eval(r, env)?;
            match op {
                BinOp::Add => a.wrapping_add(b),
                BinOp::Sub => a.wrapping_sub(b),
                BinOp::Mul => a.wrapping_mul(b),
                BinOp::Div => a.checked_div(b)?,
                BinOp::Mod => a.checked_rem(b)?,
                BinOp::Lt => (a < b) as i64,
                BinOp::Le => (a <= b) as i64,
                BinOp::Gt => (a > b) as i64,
                BinOp::Ge => (a >= b) as i64,
                BinOp::Eq => (a == b) as i64,
                BinOp::Ne => (a != b) as i64,
                BinOp::And | BinOp::Or => unreachable!(),
            }
        }
        Expr::Unary(UnOp::Neg, x) => eval(x, env)?.wrapping_neg(),
        Expr::Unary(UnOp::Not, x) => (eval(x, env)? == 0) as i64,
        Expr::Ternary(c, t, f) => {
            if eval(c, env)? != 0 {
                eval(t, env)?
            } else {
                eval(f, env)?
            }
        }
        Expr::Index(..) | Expr::Call(..) => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lines_and_extracts_bounds() {
        let c = InputConstraints::parse("# sizes\n1 <= n && n <= 100\n\nk < 7\n").unwrap();
        assert_eq!(c.exprs.len(), 2);
        assert_eq!(c.bounds("n"), (Some(1), Some(100)));
        assert_eq!(c.bounds("k"), (None, Some(6)));
        let env: BTreeMap<String, i64> = [("n".to_string(), 3), ("k".to_string(), 9)].into();
        assert_eq!(c.holds(&env), Some(false));
    }
}
