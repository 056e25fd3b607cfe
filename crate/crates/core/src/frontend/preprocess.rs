//! Semantics-preserving rewrites that bring common student idioms into the
//! shapes the analysis expects.

use std::collections::BTreeSet;

use super::ast::*;

/// Apply every rewrite once. Rewrites that do not match are skipped, and the
/// result is a fixpoint: running it again changes nothing.
pub fn preprocess(p: &Program) -> Program {
    let mut out = p.clone();
    for f in &mut out.functions {
        for s in &mut f.body {
            desugar(s);
        }
    }
    let mut notes = Vec::new();
    for k in 0..out.functions.len() {
        let fname = out.functions[k].name.clone();
        let reads = read_counts(&out.functions[k].body);
        let mut used: BTreeSet<String> = BTreeSet::new();
        for s in &out.functions[k].body {
            s.walk(&mut |s| {
                if let StmtKind::Decl { vars, .. } = &s.kind {
                    used.extend(vars.iter().map(|d| d.name.clone()));
                }
            });
        }
        let body = &mut out.functions[k].body;
        for_each_list(body, &mut |items| lift_read_store(items, &reads));
        for_each_list(body, &mut merge_read_loops);
        let mut lifted = Vec::new();
        for_each_list(body, &mut |items| lift_stream_reads(items, &mut used, &mut lifted));
        for (scalar, arr) in lifted {
            notes.push(format!(
                "in '{fname}', input '{scalar}' was read inside a loop; declared array '{arr}' to hold the values"
            ));
        }
    }
    out.notes.extend(notes);
    out.renumber();
    out
}

/// `x op= e` → `x = x op e`, `x++` → `x = x + 1`.
fn desugar(s: &mut Stmt) {
    let replacement = match &s.kind {
        StmtKind::CompoundAssign { target, op, value } => Some(StmtKind::Assign {
            target: target.clone(),
            value: Expr::bin(*op, target.to_expr(), value.clone()),
        }),
        StmtKind::IncDec { target, delta } => Some(StmtKind::Assign {
            target: target.clone(),
            value: if *delta >= 0 {
                Expr::bin(BinOp::Add, target.to_expr(), Expr::Int(*delta))
            } else {
                Expr::bin(BinOp::Sub, target.to_expr(), Expr::Int(-*delta))
            },
        }),
        _ => None,
    };
    if let Some(k) = replacement {
        s.kind = k;
    }
    for c in s.children_mut() {
        desugar(c);
    }
}

fn for_each_list(items: &mut Vec<Stmt>, f: &mut impl FnMut(&mut Vec<Stmt>)) {
    f(items);
    for s in items.iter_mut() {
        visit_lists(s, f);
    }
}

fn visit_lists(s: &mut Stmt, f: &mut impl FnMut(&mut Vec<Stmt>)) {
    if let StmtKind::Block(items) = &mut s.kind {
        for_each_list(items, f);
        return;
    }
    for c in s.children_mut() {
        visit_lists(c, f);
    }
}

/// How many statements read each name.
fn read_counts(body: &[Stmt]) -> std::collections::BTreeMap<String, usize> {
    let mut m = std::collections::BTreeMap::new();
    for s in body {
        s.walk(&mut |s| {
            let mut here = BTreeSet::new();
            for e in s.own_exprs() {
                here.extend(e.names());
            }
            for n in here {
                *m.entry(n).or_insert(0) += 1;
            }
        });
    }
    m
}

/// `scanf(&x); a[i] = x;` → `scanf(&a[i]);` when `x` is read nowhere else.
fn lift_read_store(items: &mut Vec<Stmt>, reads: &std::collections::BTreeMap<String, usize>) {
    let mut k = 0;
    while k + 1 < items.len() {
        let lifted = match (&items[k].kind, &items[k + 1].kind) {
            (
                StmtKind::Read { format, target: x },
                StmtKind::Assign { target, value: Expr::Var(v) },
            ) if x.is_scalar()
                && *v == x.name
                && !target.is_scalar()
                && reads.get(v).copied() == Some(1)
                && !target.indices.iter().any(|i| i.mentions(v)) =>
            {
                Some(StmtKind::Read { format: format.clone(), target: target.clone() })
            }
            _ => None,
        };
        if let Some(kind) = lifted {
            let loc = items[k].loc;
            items[k] = Stmt::at(loc, kind);
            items.remove(k + 1);
        }
        k += 1;
    }
}

/// A counting loop `for (i = lo; i < hi | i <= hi; i = i + 1)`.
struct Counting<'a> {
    var: &'a str,
    lo: &'a Expr,
    body: &'a Stmt,
}

fn counting_loop(s: &Stmt) -> Option<Counting<'_>> {
    let StmtKind::For { init: Some(init), cond: Some(cond), step: Some(step), body } = &s.kind else {
        return None;
    };
    let (var, lo) = match &init.kind {
        StmtKind::Assign { target, value } if target.is_scalar() => (target.name.as_str(), value),
        StmtKind::Decl { vars, .. } if vars.len() == 1 && vars[0].dims.is_empty() => {
            (vars[0].name.as_str(), vars[0].init.as_ref()?)
        }
        _ => return None,
    };
    match cond {
        Expr::Binary(BinOp::Lt | BinOp::Le, l, _) if **l == Expr::var(var) => {}
        _ => return None,
    }
    match &step.kind {
        StmtKind::Assign { target, value }
            if target.is_scalar()
                && target.name == var
                && *value == Expr::bin(BinOp::Add, Expr::var(var), Expr::Int(1)) => {}
        _ => return None,
    }
    Some(Counting { var, lo, body })
}

fn single_stmt(s: &Stmt) -> &Stmt {
    match &s.kind {
        StmtKind::Block(items) if items.len() == 1 => single_stmt(&items[0]),
        _ => s,
    }
}

/// `scanf(&a[c]); for (i = c + 1; …) scanf(&a[i]);` → `for (i = c; …) scanf(&a[i]);`
fn merge_read_loops(items: &mut Vec<Stmt>) {
    let mut k = 0;
    while k + 1 < items.len() {
        let merged_lo = match (&items[k].kind, counting_loop(&items[k + 1])) {
            (StmtKind::Read { target: first, .. }, Some(lp)) if first.indices.len() == 1 => {
                let body = single_stmt(lp.body);
                let reads_elem = matches!(
                    &body.kind,
                    StmtKind::Read { target, .. }
                        if target.name == first.name
                            && target.indices == vec![Expr::var(lp.var)]
                );
                match (&first.indices[0], lp.lo) {
                    (Expr::Int(c), Expr::Int(lo)) if reads_elem && *lo == c + 1 => Some(*c),
                    _ => None,
                }
            }
            _ => None,
        };
        if let Some(c) = merged_lo {
            items.remove(k);
            if let StmtKind::For { init: Some(init), .. } = &mut items[k].kind {
                match &mut init.kind {
                    StmtKind::Assign { value, .. } => *value = Expr::Int(c),
                    StmtKind::Decl { vars, .. } => vars[0].init = Some(Expr::Int(c)),
                    _ => unreachable!("counting_loop checked the init shape"),
                }
            }
        }
        k += 1;
    }
}

/// A scalar read inside a counting loop that also writes an array, and used
/// only inside that loop, becomes an element of a fresh input array indexed by
/// the loop variable.
fn lift_stream_reads(items: &mut Vec<Stmt>, used: &mut BTreeSet<String>, lifted: &mut Vec<(String, String)>) {
    let mut idx = 0;
    while idx < items.len() {
        if lift_in_loop(items, idx, used, lifted) {
            // Skip over the inserted declaration.
            idx += 1;
        }
        idx += 1;
    }
}

fn lift_in_loop(
    items: &mut Vec<Stmt>,
    idx: usize,
    used: &mut BTreeSet<String>,
    lifted: &mut Vec<(String, String)>,
) -> bool {
    {
        let Some(lp) = counting_loop(&items[idx]) else { return false };
        let StmtKind::For { cond: Some(cond), .. } = &items[idx].kind else { return false };
        let StmtKind::Block(body) = &lp.body.kind else { return false };
        let bound = match cond {
            Expr::Binary(BinOp::Lt, _, hi) => (**hi).clone(),
            Expr::Binary(BinOp::Le, _, hi) => Expr::bin(BinOp::Add, (**hi).clone(), Expr::Int(1)),
            _ => return false,
        };
        let loop_writes = items[idx].writes();
        if bound.names().iter().any(|n| loop_writes.contains(n)) || !matches!(lp.lo, Expr::Int(v) if *v >= 0) {
            return false;
        }
        let writes_array = {
            let mut found = false;
            lp.body.walk(&mut |s| {
                if let StmtKind::Assign { target, .. } = &s.kind {
                    found |= !target.is_scalar();
                }
            });
            found
        };
        if !writes_array {
            return false;
        }
        let var = lp.var.to_string();
        let candidates: Vec<(usize, String)> = body
            .iter()
            .enumerate()
            .filter_map(|(pos, s)| match &s.kind {
                StmtKind::Read { target, .. } if target.is_scalar() && target.name != var => {
                    Some((pos, target.name.clone()))
                }
                _ => None,
            })
            .collect();
        for (pos, x) in candidates {
            // The scalar must be written only by this read and not live outside the loop.
            let outside = items
                .iter()
                .enumerate()
                .any(|(j, s)| j != idx && (s.reads().contains(&x) || s.writes().contains(&x)));
            let StmtKind::For { body: b, .. } = &items[idx].kind else { unreachable!() };
            let StmtKind::Block(inner) = &b.kind else { unreachable!() };
            let other_writes = inner
                .iter()
                .enumerate()
                .any(|(j, s)| j != pos && s.writes().contains(&x));
            let used_before = inner[..pos].iter().any(|s| s.reads().contains(&x));
            if outside || other_writes || used_before {
                continue;
            }
            let mut arr = format!("{x}_in");
            while used.contains(&arr) {
                arr.push('_');
            }
            used.insert(arr.clone());
            let elem = Expr::Index(arr.clone(), vec![Expr::var(var.clone())]);
            let StmtKind::For { body: b, .. } = &mut items[idx].kind else { unreachable!() };
            let StmtKind::Block(inner) = &mut b.kind else { unreachable!() };
            for (j, s) in inner.iter_mut().enumerate() {
                if j == pos {
                    if let StmtKind::Read { target, .. } = &mut s.kind {
                        *target = LValue { name: arr.clone(), indices: vec![Expr::var(var.clone())] };
                    }
                } else {
                    replace_var(s, &x, &elem);
                }
            }
            lifted.push((x, arr.clone()));
            let decl = Stmt::new(StmtKind::Decl {
                ty: ScalarType::Int,
                vars: vec![Declarator { name: arr, dims: vec![bound.clone()], init: None }],
            });
            items.insert(idx, decl);
            return true;
        }
    }
    false
}

fn replace_var(s: &mut Stmt, name: &str, with: &Expr) {
    let sub = |e: &Expr| e.substitute(name, with);
    match &mut s.kind {
        StmtKind::Decl { vars, .. } => {
            for d in vars {
                d.dims = d.dims.iter().map(sub).collect();
                d.init = d.init.as_ref().map(sub);
            }
        }
        StmtKind::Assign { target, value } => {
            target.indices = target.indices.iter().map(sub).collect();
            *value = sub(value);
        }
        StmtKind::Read { target, .. } => target.indices = target.indices.iter().map(sub).collect(),
        StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => *cond = sub(cond),
        StmtKind::For { cond, .. } => *cond = cond.as_ref().map(sub),
        StmtKind::Write { args, .. } | StmtKind::Call { args, .. } => {
            *args = args.iter().map(sub).collect()
        }
        StmtKind::Return(e) => *e = e.as_ref().map(sub),
        _ => {}
    }
    for c in s.children_mut() {
        replace_var(c, name, with);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse, render_program};

    fn pp(src: &str) -> String {
        render_program(&preprocess(&parse(src).unwrap()))
    }

    #[test]
    fn compound_and_increment_become_assignments() {
        let out = pp("int main(){int x, y; x = 1; y = 2; x += y; y--; return 0;}");
        assert!(out.contains("x = x + y;"));
        assert!(out.contains("y = y - 1;"));
    }

    #[test]
    fn leading_read_merges_into_loop() {
        let out = pp(
            "int main(){int n, i; int a[10]; scanf(\"%d\", &n); scanf(\"%d\", &a[0]);\
             for(i=1;i<n;i++) scanf(\"%d\", &a[i]); return 0;}",
        );
        assert!(out.contains("for (i = 0; i < n; i = i + 1)"), "{out}");
        assert_eq!(out.matches("scanf").count(), 2);
    }

    #[test]
    fn scalar_read_then_store_is_lifted() {
        let out = pp(
            "int main(){int n, i, x; int a[10]; scanf(\"%d\", &n);\
             for(i=0;i<n;i++){ scanf(\"%d\", &x); a[i] = x; } return 0;}",
        );
        assert!(out.contains("scanf(\"%d\", &a[i]);"), "{out}");
        assert!(!out.contains("a[i] = x"));
    }

    #[test]
    fn stream_read_in_dp_loop_gets_an_array() {
        let p = preprocess(
            &parse(
                "int main(){int n, i, x; int dp[10]; scanf(\"%d\", &n); dp[0] = 0;\
                 for(i=1;i<=n;i++){ scanf(\"%d\", &x); dp[i] = dp[i-1] + x; }\
                 printf(\"%d\", dp[n]); return 0;}",
            )
            .unwrap(),
        );
        let out = render_program(&p);
        assert!(out.contains("int x_in[n+1];"), "{out}");
        assert!(out.contains("dp[i] = dp[i-1] + x_in[i];"), "{out}");
        assert_eq!(p.notes.len(), 1);
    }

    #[test]
    fn untouched_program_is_a_fixpoint() {
        let src = "int main(){int n; scanf(\"%d\", &n); printf(\"%d\", n); return 0;}";
        let p = parse(src).unwrap();
        assert!(preprocess(&p).same_shape(&p));
    }
}
