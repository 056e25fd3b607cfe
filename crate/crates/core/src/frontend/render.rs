//! Pretty-printer producing mini-C source that re-parses to the same tree.

use super::ast::*;
use std::fmt::Write;

/// Render an expression with spaces around binary operators, except inside
/// array subscripts where the compact `dp[i-1][j]` form is used.
pub fn expr_to_string(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, false);
    s
}

/// Compact rendering everywhere (`a+b`), used for canonical keys.
pub fn expr_to_compact(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, true);
    s
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Ternary(..) => 0,
        Expr::Binary(op, ..) => op.precedence(),
        Expr::Unary(..) => 7,
        Expr::Int(v) if *v < 0 => 7,
        _ => 8,
    }
}

fn write_expr(out: &mut String, e: &Expr, compact: bool) {
    match e {
        Expr::Int(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::Var(v) => out.push_str(v),
        Expr::Index(a, idx) => {
            out.push_str(a);
            for i in idx {
                out.push('[');
                write_expr(out, i, true);
                out.push(']');
            }
        }
        Expr::Call(n, args) => {
            out.push_str(n);
            out.push('(');
            for (k, a) in args.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a, compact);
            }
            out.push(')');
        }
        Expr::Binary(op, l, r) => {
            let p = op.precedence();
            wrap(out, l, prec(l) < p, compact);
            if compact {
                out.push_str(op.symbol());
            } else {
                let _ = write!(out, " {} ", op.symbol());
            }
            // Right operands of equal precedence need parentheses (a - (b - c)),
            // and negative literals would otherwise lex as `--`.
            wrap(
                out,
                r,
                prec(r) <= p
                    || matches!(**r, Expr::Int(v) if v < 0)
                    || matches!(**r, Expr::Unary(UnOp::Neg, _)),
                compact,
            );
        }
        Expr::Unary(op, x) => {
            out.push_str(match op {
                UnOp::Neg => "-",
                UnOp::Not => "!",
            });
            let need = prec(x) < 7 || matches!(**x, Expr::Int(v) if v < 0) || matches!(**x, Expr::Unary(..));
            wrap(out, x, need, compact);
        }
        Expr::Ternary(c, t, f) => {
            wrap(out, c, prec(c) == 0, compact);
            out.push_str(if compact { "?" } else { " ? " });
            write_expr(out, t, compact);
            out.push_str(if compact { ":" } else { " : " });
            write_expr(out, f, compact);
        }
    }
}

fn wrap(out: &mut String, e: &Expr, paren: bool, compact: bool) {
    if paren {
        out.push('(');
        write_expr(out, e, compact);
        out.push(')');
    } else {
        write_expr(out, e, compact);
    }
}

pub fn lvalue_to_string(lv: &LValue) -> String {
    expr_to_string(&lv.to_expr())
}

fn escape(s: &str) -> String {
    // Format strings are stored with their escape sequences intact.
    s.replace('"', "\\\"")
}

/// Single-line rendering of a simple statement (no trailing `;`).
pub fn simple_to_string(s: &Stmt) -> String {
    match &s.kind {
        StmtKind::Assign { target, value } => {
            format!("{} = {}", lvalue_to_string(target), expr_to_string(value))
        }
        StmtKind::CompoundAssign { target, op, value } => {
            format!("{} {}= {}", lvalue_to_string(target), op.symbol(), expr_to_string(value))
        }
        StmtKind::IncDec { target, delta } => {
            format!("{}{}", lvalue_to_string(target), if *delta > 0 { "++" } else { "--" })
        }
        StmtKind::Call { name, args } => expr_to_string(&Expr::Call(name.clone(), args.clone())),
        StmtKind::Decl { ty, vars } => {
            let parts: Vec<String> = vars
                .iter()
                .map(|d| {
                    let mut t = d.name.clone();
                    for dim in &d.dims {
                        let _ = write!(t, "[{}]", expr_to_compact(dim));
                    }
                    if let Some(i) = &d.init {
                        let _ = write!(t, " = {}", expr_to_string(i));
                    }
                    t
                })
                .collect();
            format!("{ty} {}", parts.join(", "))
        }
        StmtKind::Read { format, target } => {
            format!("scanf(\"{}\", &{})", escape(format), lvalue_to_string(target))
        }
        StmtKind::Write { format, args } => {
            let mut t = format!("printf(\"{}\"", escape(format));
            for a in args {
                let _ = write!(t, ", {}", expr_to_string(a));
            }
            t.push(')');
            t
        }
        StmtKind::Return(e) => match e {
            Some(e) => format!("return {}", expr_to_string(e)),
            None => "return".into(),
        },
        _ => {
            let mut out = String::new();
            write_stmt(&mut out, s, 0);
            out.trim().to_string()
        }
    }
}

pub fn stmt_to_string(s: &Stmt) -> String {
    let mut out = String::new();
    write_stmt(&mut out, s, 0);
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_stmt(out: &mut String, s: &Stmt, level: usize) {
    match &s.kind {
        StmtKind::Block(items) => {
            indent(out, level);
            out.push_str("{\n");
            for i in items {
                write_stmt(out, i, level + 1);
            }
            indent(out, level);
            out.push_str("}\n");
        }
        StmtKind::If { cond, then_branch, else_branch } => {
            indent(out, level);
            let _ = writeln!(out, "if ({})", expr_to_string(cond));
            write_stmt(out, then_branch, level + 1);
            if let Some(e) = else_branch {
                indent(out, level);
                out.push_str("else\n");
                write_stmt(out, e, level + 1);
            }
        }
        StmtKind::For { init, cond, step, body } => {
            indent(out, level);
            let _ = writeln!(
                out,
                "for ({}; {}; {})",
                init.as_ref().map(|i| simple_to_string(i)).unwrap_or_default(),
                cond.as_ref().map(expr_to_string).unwrap_or_default(),
                step.as_ref().map(|i| simple_to_string(i)).unwrap_or_default(),
            );
            write_stmt(out, body, level + 1);
        }
        StmtKind::While { cond, body } => {
            indent(out, level);
            let _ = writeln!(out, "while ({})", expr_to_string(cond));
            write_stmt(out, body, level + 1);
        }
        StmtKind::CountDown { var, body } => {
            indent(out, level);
            let _ = writeln!(out, "while ({var}--)");
            write_stmt(out, body, level + 1);
        }
        _ => {
            indent(out, level);
            out.push_str(&simple_to_string(s));
            out.push_str(";\n");
        }
    }
}

pub fn render_program(p: &Program) -> String {
    let mut out = String::new();
    for (k, f) in p.functions.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        let ret = match &f.ret {
            ReturnType::Void => "void".to_string(),
            ReturnType::Scalar(t) => t.to_string(),
        };
        let params: Vec<String> = f
            .params
            .iter()
            .map(|p| {
                let mut t = format!("{} {}", p.ty, p.name);
                for d in &p.dims {
                    match d {
                        Some(e) => {
                            let _ = write!(t, "[{}]", expr_to_compact(e));
                        }
                        None => t.push_str("[]"),
                    }
                }
                t
            })
            .collect();
        let _ = writeln!(out, "{ret} {}({}) {{", f.name, params.join(", "));
        for s in &f.body {
            write_stmt(&mut out, s, 1);
        }
        out.push_str("}\n");
    }
    out
}
