use std::collections::HashMap;

use super::ast::*;
use super::FrontendError;

#[derive(Clone, Copy)]
struct VarInfo {
    ty: ScalarType,
    rank: usize,
}

struct Checker<'a> {
    funcs: HashMap<&'a str, &'a FunctionDef>,
    scopes: Vec<HashMap<String, VarInfo>>,
}

fn type_err(loc: Location, msg: impl Into<String>) -> FrontendError {
    FrontendError::Type { line: loc.line, column: loc.column, message: msg.into() }
}

pub(crate) fn check_program(p: &Program) -> Result<(), FrontendError> {
    let mut funcs = HashMap::new();
    for f in &p.functions {
        if funcs.insert(f.name.as_str(), f).is_some() {
            return Err(type_err(f.loc, format!("function '{}' defined twice", f.name)));
        }
    }
    if !funcs.contains_key("main") {
        return Err(type_err(Location::default(), "no function named 'main'"));
    }
    let mut ck = Checker { funcs, scopes: Vec::new() };
    for f in &p.functions {
        ck.scopes.clear();
        let mut top = HashMap::new();
        for prm in &f.params {
            if prm.dims.len() > 2 {
                return Err(type_err(f.loc, "arrays with more than two dimensions"));
            }
            top.insert(prm.name.clone(), VarInfo { ty: prm.ty, rank: prm.dims.len() });
        }
        ck.scopes.push(top);
        for s in &f.body {
            ck.stmt(s)?;
        }
    }
    Ok(())
}

impl<'a> Checker<'a> {
    fn lookup(&self, name: &str) -> Option<VarInfo> {
        self.scopes.iter().rev().find_map(|s| s.get(name).copied())
    }

    fn declare(&mut self, name: &str, info: VarInfo) {
        self.scopes.last_mut().unwrap().insert(name.to_string(), info);
    }

    fn scalar(&self, e: &Expr, loc: Location) -> Result<ScalarType, FrontendError> {
        let (ty, rank) = self.expr(e, loc)?;
        if rank != 0 {
            return Err(type_err(loc, "array used where a scalar is required"));
        }
        Ok(ty)
    }

    fn index_expr(&self, e: &Expr, loc: Location) -> Result<(), FrontendError> {
        match self.scalar(e, loc)? {
            ScalarType::Int => Ok(()),
            ScalarType::Bool => Err(type_err(loc, "array index must be an integer")),
        }
    }

    /// Returns (element type, remaining rank).
    fn expr(&self, e: &Expr, loc: Location) -> Result<(ScalarType, usize), FrontendError> {
        match e {
            Expr::Int(_) => Ok((ScalarType::Int, 0)),
            Expr::Bool(_) => Ok((ScalarType::Bool, 0)),
            Expr::Var(v) => {
                let info = self
                    .lookup(v)
                    .ok_or_else(|| type_err(loc, format!("undeclared variable '{v}'")))?;
                Ok((info.ty, info.rank))
            }
            Expr::Index(a, idx) => {
                let info = self
                    .lookup(a)
                    .ok_or_else(|| type_err(loc, format!("undeclared array '{a}'")))?;
                if idx.len() > info.rank {
                    return Err(type_err(loc, format!("too many indices for '{a}'")));
                }
                for i in idx {
                    self.index_expr(i, loc)?;
                }
                Ok((info.ty, info.rank - idx.len()))
            }
            Expr::Binary(op, l, r) => {
                self.scalar(l, loc)?;
                self.scalar(r, loc)?;
                Ok((
                    if op.is_comparison() || op.is_logical() { ScalarType::Bool } else { ScalarType::Int },
                    0,
                ))
            }
            Expr::Unary(op, x) => {
                self.scalar(x, loc)?;
                Ok((if *op == UnOp::Not { ScalarType::Bool } else { ScalarType::Int }, 0))
            }
            Expr::Ternary(c, t, f) => {
                self.scalar(c, loc)?;
                let tt = self.scalar(t, loc)?;
                let ft = self.scalar(f, loc)?;
                Ok((if tt == ft { tt } else { ScalarType::Int }, 0))
            }
            Expr::Call(name, args) => match self.call(name, args, loc)? {
                ReturnType::Scalar(t) => Ok((t, 0)),
                ReturnType::Void => Err(type_err(loc, format!("void function '{name}' used as a value"))),
            },
        }
    }

    fn call(&self, name: &str, args: &[Expr], loc: Location) -> Result<ReturnType, FrontendError> {
        let f = self
            .funcs
            .get(name)
            .ok_or_else(|| type_err(loc, format!("call to undefined function '{name}'")))?;
        if f.params.len() != args.len() {
            return Err(type_err(loc, format!("'{name}' expects {} arguments", f.params.len())));
        }
        for (p, a) in f.params.iter().zip(args) {
            let (_, rank) = self.expr(a, loc)?;
            if rank != p.dims.len() {
                return Err(type_err(loc, format!("argument for '{}' has the wrong rank", p.name)));
            }
        }
        Ok(f.ret.clone())
    }

    fn lvalue(&self, lv: &LValue, loc: Location) -> Result<(), FrontendError> {
        let info = self
            .lookup(&lv.name)
            .ok_or_else(|| type_err(loc, format!("undeclared variable '{}'", lv.name)))?;
        if lv.indices.len() != info.rank {
            return Err(type_err(loc, format!("'{}' must be fully indexed here", lv.name)));
        }
        for i in &lv.indices {
            self.index_expr(i, loc)?;
        }
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), FrontendError> {
        let loc = s.loc;
        match &s.kind {
            StmtKind::Decl { ty, vars } => {
                for d in vars {
                    for dim in &d.dims {
                        self.index_expr(dim, loc)?;
                    }
                    if let Some(init) = &d.init {
                        if !d.dims.is_empty() {
                            return Err(type_err(loc, "array initializers are not supported"));
                        }
                        self.scalar(init, loc)?;
                    }
                    self.declare(&d.name, VarInfo { ty: *ty, rank: d.dims.len() });
                }
            }
            StmtKind::Assign { target, value } | StmtKind::CompoundAssign { target, value, .. } => {
                self.lvalue(target, loc)?;
                self.scalar(value, loc)?;
            }
            StmtKind::IncDec { target, .. } | StmtKind::Read { target, .. } => self.lvalue(target, loc)?,
            StmtKind::If { cond, then_branch, else_branch } => {
                self.scalar(cond, loc)?;
                self.scoped(then_branch)?;
                if let Some(e) = else_branch {
                    self.scoped(e)?;
                }
            }
            StmtKind::For { init, cond, step, body } => {
                self.scopes.push(HashMap::new());
                if let Some(i) = init {
                    self.stmt(i)?;
                }
                if let Some(c) = cond {
                    self.scalar(c, loc)?;
                }
                if let Some(st) = step {
                    self.stmt(st)?;
                }
                self.scoped(body)?;
                self.scopes.pop();
            }
            StmtKind::While { cond, body } => {
                self.scalar(cond, loc)?;
                self.scoped(body)?;
            }
            StmtKind::CountDown { var, body } => {
                self.lvalue(&LValue::scalar(var.clone()), loc)?;
                self.scoped(body)?;
            }
            StmtKind::Write { args, .. } => {
                for a in args {
                    self.scalar(a, loc)?;
                }
            }
            StmtKind::Call { name, args } => {
                self.call(name, args, loc)?;
            }
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    self.scalar(e, loc)?;
                }
            }
            StmtKind::Block(items) => {
                self.scopes.push(HashMap::new());
                for i in items {
                    self.stmt(i)?;
                }
                self.scopes.pop();
            }
        }
        Ok(())
    }

    fn scoped(&mut self, s: &Stmt) -> Result<(), FrontendError> {
        self.scopes.push(HashMap::new());
        let r = self.stmt(s);
        self.scopes.pop();
        r
    }
}
