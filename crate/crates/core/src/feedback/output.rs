//! Recognition of aggregate-and-print output idioms and their comparison.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Correction, CorrectionKind, Section};
use crate::analysis::loops::constant_step;
use crate::correspondence::{Segment, VariableMap};
use crate::encoder::implies;
use crate::frontend::{expr_to_compact, BinOp, Declarator, Expr, LValue, Program, ScalarType, Stmt, StmtKind};
use crate::solver::{check_validity, fold, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Aggregate {
    Max,
    Min,
    Sum,
}

impl Aggregate {
    fn word(self) -> &'static str {
        match self {
            Aggregate::Max => "maximum",
            Aggregate::Min => "minimum",
            Aggregate::Sum => "sum",
        }
    }
}

/// `agg` over `array[prefix..][lo..=hi]`, printed with `format`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputPattern {
    pub agg: Aggregate,
    pub array: String,
    pub prefix: Vec<Expr>,
    pub lo: Expr,
    pub hi: Expr,
    pub format: String,
}

impl OutputPattern {
    fn elem(&self, last: Expr) -> Expr {
        let mut idx = self.prefix.clone();
        idx.push(last);
        Expr::Index(self.array.clone(), idx)
    }

    /// `D[n-1][0],...,D[n-1][99]`.
    pub fn range_text(&self) -> String {
        format!("{},...,{}", expr_to_compact(&self.elem(self.lo.clone())), expr_to_compact(&self.elem(self.hi.clone())))
    }

    pub fn describe(&self) -> String {
        format!("{} over {}", self.agg.word(), self.range_text())
    }

    pub fn rename(&self, f: &impl Fn(&str) -> Option<String>) -> OutputPattern {
        OutputPattern {
            agg: self.agg,
            array: f(&self.array).unwrap_or_else(|| self.array.clone()),
            prefix: self.prefix.iter().map(|e| e.rename(f)).collect(),
            lo: self.lo.rename(f),
            hi: self.hi.rename(f),
            format: self.format.clone(),
        }
    }

    /// Straight-line code computing and printing the aggregate, using the
    /// scalars `acc` and `k`.
    pub fn generate(&self, acc: &str, k: &str) -> Vec<Stmt> {
        let a = Expr::var(acc);
        let kv = Expr::var(k);
        let elem = self.elem(kv.clone());
        let set = |v: Expr| Stmt::new(StmtKind::Assign { target: LValue::scalar(acc), value: v });
        let (init, start, body) = match self.agg {
            Aggregate::Sum => (set(Expr::Int(0)), self.lo.clone(), set(Expr::bin(BinOp::Add, a.clone(), elem))),
            agg => {
                let op = if agg == Aggregate::Max { BinOp::Gt } else { BinOp::Lt };
                (
                    set(self.elem(self.lo.clone())),
                    fold(&Expr::bin(BinOp::Add, self.lo.clone(), Expr::Int(1))),
                    Stmt::new(StmtKind::If {
                        cond: Expr::bin(op, elem.clone(), a.clone()),
                        then_branch: Box::new(set(elem)),
                        else_branch: None,
                    }),
                )
            }
        };
        let step = Expr::bin(BinOp::Add, kv.clone(), Expr::Int(1));
        let lp = Stmt::new(StmtKind::For {
            init: Some(Box::new(Stmt::new(StmtKind::Assign { target: LValue::scalar(k), value: start }))),
            cond: Some(Expr::bin(BinOp::Le, kv, self.hi.clone())),
            step: Some(Box::new(Stmt::new(StmtKind::Assign { target: LValue::scalar(k), value: step }))),
            body: Box::new(body),
        });
        let print = Stmt::new(StmtKind::Write { format: self.format.clone(), args: vec![a] });
        vec![init, lp, print]
    }
}

impl fmt::Display for OutputPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.agg {
            Aggregate::Max => "_max",
            Aggregate::Min => "_min",
            Aggregate::Sum => "_sum",
        };
        write!(f, "{name}({}, {})", expr_to_compact(&self.elem(self.lo.clone())), expr_to_compact(&self.elem(self.hi.clone())))
    }
}

fn flatten(stmts: &[Stmt]) -> Vec<&Stmt> {
    let mut out = Vec::new();
    for s in stmts {
        match &s.kind {
            StmtKind::Block(items) => out.extend(flatten(items)),
            _ => out.push(s),
        }
    }
    out
}

/// `acc = e` or `int acc = e`.
fn assignment(s: &Stmt) -> Option<(&str, &Expr)> {
    match &s.kind {
        StmtKind::Assign { target, value } if target.is_scalar() => Some((&target.name, value)),
        StmtKind::Decl { vars, .. } => match vars.as_slice() {
            [Declarator { name, dims, init: Some(v) }] if dims.is_empty() => Some((name, v)),
            _ => None,
        },
        _ => None,
    }
}

/// Element `array[prefix..][v]` whose last index is exactly `v`.
fn element_at<'e>(e: &'e Expr, v: &str) -> Option<(&'e str, &'e [Expr])> {
    let Expr::Index(a, idx) = e else { return None };
    let (last, prefix) = idx.split_last()?;
    (*last == Expr::var(v) && !prefix.iter().any(|p| p.mentions(v))).then_some((a.as_str(), prefix))
}

struct Scan<'e> {
    agg: Aggregate,
    array: &'e str,
    prefix: &'e [Expr],
    start: Expr,
    hi: Expr,
}

/// `for (v = s; v < e | v <= e; v++) <aggregate step into acc>`.
fn scan_loop<'e>(s: &'e Stmt, acc: &str) -> Option<Scan<'e>> {
    let StmtKind::For { init: Some(init), cond: Some(cond), step: Some(step), body } = &s.kind else { return None };
    let (v, start) = assignment(init)?;
    if constant_step(step, v)? != 1 {
        return None;
    }
    let hi = match cond {
        Expr::Binary(BinOp::Lt, l, r) if **l == Expr::var(v) => fold(&Expr::bin(BinOp::Sub, (**r).clone(), Expr::Int(1))),
        Expr::Binary(BinOp::Le, l, r) if **l == Expr::var(v) => (**r).clone(),
        _ => return None,
    };
    if hi.mentions(v) || hi.mentions(acc) {
        return None;
    }
    let body = match flatten(std::slice::from_ref(body.as_ref())).as_slice() {
        [one] => *one,
        _ => return None,
    };
    let a = Expr::var(acc);
    let (agg, x) = match &body.kind {
        StmtKind::If { cond, then_branch, else_branch: None } => {
            let (target, value) = match flatten(std::slice::from_ref(then_branch.as_ref())).as_slice() {
                [one] => assignment(one)?,
                _ => return None,
            };
            if target != acc {
                return None;
            }
            let Expr::Binary(op, l, r) = cond else { return None };
            let (agg, x) = match op {
                BinOp::Gt | BinOp::Ge if **r == a => (Aggregate::Max, &**l),
                BinOp::Lt | BinOp::Le if **l == a => (Aggregate::Max, &**r),
                BinOp::Lt | BinOp::Le if **r == a => (Aggregate::Min, &**l),
                BinOp::Gt | BinOp::Ge if **l == a => (Aggregate::Min, &**r),
                _ => return None,
            };
            if x != value {
                return None;
            }
            (agg, x)
        }
        _ => {
            let (target, value) = assignment(body)?;
            let Expr::Binary(BinOp::Add, l, r) = value else { return None };
            let x = if **l == a { &**r } else if **r == a { &**l } else { return None };
            if target != acc {
                return None;
            }
            (Aggregate::Sum, x)
        }
    };
    let (array, prefix) = element_at(x, v)?;
    Some(Scan { agg, array, prefix, start: start.clone(), hi })
}

/// Lowest index covered, given the accumulator's initial value.
fn range_start(scan: &Scan, init: &Expr) -> Option<Expr> {
    match scan.agg {
        Aggregate::Sum => (*init == Expr::Int(0)).then(|| scan.start.clone()),
        _ => {
            let Expr::Index(a, idx) = init else { return None };
            let (c, prefix) = idx.split_last()?;
            if a != scan.array || prefix != scan.prefix {
                return None;
            }
            match (c, &scan.start) {
                (Expr::Int(x), Expr::Int(y)) => Some(Expr::Int((*x).min(*y))),
                _ if *c == scan.start => Some(c.clone()),
                _ if fold(&Expr::bin(BinOp::Sub, scan.start.clone(), Expr::Int(1))) == *c => Some(c.clone()),
                _ => None,
            }
        }
    }
}

/// `acc = init; for (...) step; [return acc | printf(fmt, acc)]` inside
/// `stmts`, skipping leading scalar declarations.
fn inline_pattern(stmts: &[&Stmt]) -> Option<(OutputPattern, String)> {
    let rest: Vec<&Stmt> = stmts
        .iter()
        .copied()
        .skip_while(|s| matches!(&s.kind, StmtKind::Decl { vars, .. } if vars.iter().all(|d| d.dims.is_empty() && d.init.is_none())))
        .collect();
    let [init, lp, tail] = rest.as_slice() else { return None };
    let (acc, init) = assignment(init)?;
    let scan = scan_loop(lp, acc)?;
    let lo = range_start(&scan, init)?;
    let format = match &tail.kind {
        StmtKind::Write { format, args } if args.as_slice() == [Expr::var(acc)] => format.clone(),
        StmtKind::Return(Some(e)) if *e == Expr::var(acc) => String::new(),
        _ => return None,
    };
    if scan.prefix.iter().chain([&lo, &scan.hi]).any(|e| e.mentions(acc)) {
        return None;
    }
    let pat = OutputPattern {
        agg: scan.agg,
        array: scan.array.to_string(),
        prefix: scan.prefix.to_vec(),
        lo,
        hi: scan.hi,
        format,
    };
    Some((pat, acc.to_string()))
}

/// The same idiom inside a helper `f(int a[])`, called on a row of an array.
fn helper_pattern(p: &Program, stmts: &[&Stmt]) -> Option<OutputPattern> {
    let [call, print] = stmts else { return None };
    let (var, value) = assignment(call)?;
    let StmtKind::Write { format, args } = &print.kind else { return None };
    if args.as_slice() != [Expr::var(var)] {
        return None;
    }
    let Expr::Call(name, cargs) = value else { return None };
    let [Expr::Index(array, row)] = cargs.as_slice() else { return None };
    let f = p.function(name)?;
    let [param] = f.params.as_slice() else { return None };
    if param.dims.len() != 1 || param.ty != ScalarType::Int {
        return None;
    }
    let body: Vec<&Stmt> = flatten(&f.body);
    let (inner, _) = inline_pattern(&body)?;
    if inner.array != param.name || !inner.prefix.is_empty() {
        return None;
    }
    // Bounds may only use literals once moved out of the helper.
    if !inner.lo.names().is_empty() || !inner.hi.names().is_empty() {
        return None;
    }
    Some(OutputPattern {
        agg: inner.agg,
        array: array.clone(),
        prefix: row.clone(),
        lo: inner.lo,
        hi: inner.hi,
        format: format.clone(),
    })
}

/// Aggregate-and-print idiom of an output segment, if it is one.
pub fn lift_output_pattern(p: &Program, seg: &Segment) -> Option<OutputPattern> {
    let stmts = flatten(&seg.stmts);
    if let Some((pat, _)) = inline_pattern(&stmts) {
        if !pat.format.is_empty() {
            return Some(pat);
        }
    }
    helper_pattern(p, &stmts)
}

fn same(a: &Expr, b: &Expr, ctx: &Expr, cfg: &SolverConfig) -> bool {
    let (fa, fb) = (fold(a), fold(b));
    if fa == fb {
        return true;
    }
    let eq = Expr::bin(BinOp::Eq, fa, fb);
    // Inputs are scalars here; no scalarization needed.
    let has_arrays = |e: &Expr| {
        let mut found = false;
        e.walk(&mut |x| found |= matches!(x, Expr::Index(..) | Expr::Call(..)));
        found
    };
    !has_arrays(&eq) && check_validity(&implies(ctx.clone(), eq), cfg).is_valid()
}

/// Corrections turning the candidate's output into the reference's. `ctx`
/// holds the input constraints in candidate names.
pub fn compare_outputs(
    r: &OutputPattern,
    c: &OutputPattern,
    sigma: &VariableMap,
    ctx: &Expr,
    cfg: &SolverConfig,
    line: Option<u32>,
) -> Vec<Correction> {
    let want = r.rename(&|n| sigma.get(n).map(str::to_string));
    let equal = want.agg == c.agg
        && want.array == c.array
        && want.prefix.len() == c.prefix.len()
        && want.prefix.iter().zip(&c.prefix).all(|(a, b)| same(a, b, ctx, cfg))
        && same(&want.lo, &c.lo, ctx, cfg)
        && same(&want.hi, &c.hi, ctx, cfg);
    if equal {
        return Vec::new();
    }
    vec![Correction {
        kind: CorrectionKind::OutputPattern,
        section: Section::Output,
        guard: Some(Expr::Bool(true)),
        raw_guard: Some(Expr::Bool(true)),
        suggested: want.describe(),
        replaced: Some(if want.agg == c.agg { c.range_text() } else { c.describe() }),
        line,
    }]
}

/// A scalar name not in `taken`, starting from `base`.
pub fn fresh(base: &str, taken: &mut BTreeSet<String>) -> String {
    let mut name = base.to_string();
    let mut k = 1;
    while taken.contains(&name) {
        name = format!("{base}{k}");
        k += 1;
    }
    taken.insert(name.clone());
    name
}
