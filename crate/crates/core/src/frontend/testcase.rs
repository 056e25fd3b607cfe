//! Removal of the "number of test cases" wrapper loop around `main`.

use super::ast::*;

/// If `main` reads a count `t` and then runs its whole computation inside a
/// single loop driven only by `t`, drop the read and the loop and promote the
/// body. Anything ambiguous is left untouched.
pub fn strip_testcase_loop(p: &Program) -> Program {
    let mut out = p.clone();
    let main = out.main_mut();
    if let Some(body) = try_strip(&main.body) {
        main.body = body;
        out.renumber();
    }
    out
}

fn is_trailing_return(s: &Stmt) -> bool {
    matches!(s.kind, StmtKind::Return(_))
}

fn try_strip(body: &[Stmt]) -> Option<Vec<Stmt>> {
    let loops: Vec<usize> = (0..body.len()).filter(|&k| body[k].is_loop()).collect();
    let [li] = loops[..] else { return None };
    // Nothing but declarations, reads, and a final return around the loop.
    for (k, s) in body.iter().enumerate() {
        let ok = k == li
            || matches!(s.kind, StmtKind::Decl { .. } | StmtKind::Read { .. })
            || (k + 1 == body.len() && is_trailing_return(s));
        if !ok || (k > li && !is_trailing_return(s)) {
            return None;
        }
    }
    let (count, counter, inner) = match &body[li].kind {
        StmtKind::CountDown { var, body } => (var.clone(), None, body.as_ref()),
        StmtKind::For { init: Some(init), cond: Some(cond), step: Some(step), body } => {
            let k = match &init.kind {
                StmtKind::Assign { target, value: Expr::Int(0) } if target.is_scalar() => target.name.clone(),
                StmtKind::Decl { vars, .. }
                    if vars.len() == 1 && vars[0].dims.is_empty() && vars[0].init == Some(Expr::Int(0)) =>
                {
                    vars[0].name.clone()
                }
                _ => return None,
            };
            let t = match cond {
                Expr::Binary(BinOp::Lt, l, r) if **l == Expr::var(&k) => match &**r {
                    Expr::Var(t) => t.clone(),
                    _ => return None,
                },
                _ => return None,
            };
            let steps_by_one = match &step.kind {
                StmtKind::Assign { target, value } => {
                    target.name == k
                        && target.is_scalar()
                        && *value == Expr::bin(BinOp::Add, Expr::var(&k), Expr::Int(1))
                }
                StmtKind::IncDec { target, delta: 1 } => target.name == k && target.is_scalar(),
                StmtKind::CompoundAssign { target, op: BinOp::Add, value: Expr::Int(1) } => {
                    target.name == k && target.is_scalar()
                }
                _ => false,
            };
            if !steps_by_one {
                return None;
            }
            (t, Some(k), body.as_ref())
        }
        _ => return None,
    };
    // The count must be read right here, exactly once, and used by nothing else.
    let read_at: Vec<usize> = (0..li)
        .filter(|&k| matches!(&body[k].kind, StmtKind::Read { target, .. } if target.is_scalar() && target.name == count))
        .collect();
    let [ri] = read_at[..] else { return None };
    let mentions_anywhere = |name: &str, skip: &[usize]| {
        body.iter().enumerate().any(|(k, s)| {
            !skip.contains(&k) && (s.reads().contains(name) || s.writes().contains(name))
        })
    };
    if mentions_anywhere(&count, &[ri, li]) || inner.reads().contains(&count) || inner.writes().contains(&count) {
        return None;
    }
    if let Some(k) = &counter {
        if mentions_anywhere(k, &[li]) || inner.reads().contains(k) || inner.writes().contains(k) {
            return None;
        }
    }
    let promoted: Vec<Stmt> = match &inner.kind {
        StmtKind::Block(items) => items.clone(),
        _ => vec![inner.clone()],
    };
    // Promoted declarations must not clash with those already in main.
    let outer_decls: Vec<&str> = body
        .iter()
        .filter_map(|s| match &s.kind {
            StmtKind::Decl { vars, .. } => Some(vars.iter().map(|d| d.name.as_str())),
            _ => None,
        })
        .flatten()
        .collect();
    for s in &promoted {
        if let StmtKind::Decl { vars, .. } = &s.kind {
            if vars.iter().any(|d| outer_decls.contains(&d.name.as_str())) {
                return None;
            }
        }
    }
    let mut out = Vec::new();
    for (k, s) in body.iter().enumerate() {
        if k == ri {
            continue;
        }
        if k == li {
            out.extend(promoted.iter().cloned());
        } else {
            out.push(s.clone());
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    #[test]
    fn countdown_wrapper_is_removed() {
        let p = parse(
            "int main(){int t; scanf(\"%d\", &t); while(t--){ int n; scanf(\"%d\", &n); printf(\"%d\", n); } return 0;}",
        )
        .unwrap();
        let s = strip_testcase_loop(&p);
        let expected = parse("int main(){int t; int n; scanf(\"%d\", &n); printf(\"%d\", n); return 0;}").unwrap();
        assert!(s.same_shape(&expected));
    }

    #[test]
    fn for_wrapper_is_removed() {
        let p = parse(
            "int main(){int t, q; scanf(\"%d\", &t); for(q=0;q<t;q++){ int n; scanf(\"%d\", &n); printf(\"%d\", n); } return 0;}",
        )
        .unwrap();
        let s = strip_testcase_loop(&p);
        assert!(!s.main().body.iter().any(|s| s.is_loop()));
    }

    #[test]
    fn bound_used_later_keeps_loop() {
        let p = parse(
            "int main(){int n, i, s; s = 0; scanf(\"%d\", &n); for(i=0;i<n;i++){ s = s + 1; } printf(\"%d\", n); return 0;}",
        )
        .unwrap();
        assert!(strip_testcase_loop(&p).same_shape(&p));
    }
}
