//! Big-step reference interpreter for mini-C.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::frontend::{BinOp, Expr, FunctionDef, LValue, Program, ScalarType, Stmt, StmtKind, UnOp};

pub const DEFAULT_STEP_BUDGET: u64 = 10_000_000;

/// Upper bound on the number of cells a single array declaration may allocate.
const MAX_ARRAY_CELLS: usize = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Ok,
    OutOfBounds,
    DivByZero,
    /// The step budget ran out.
    NonTermination,
    /// A `scanf` found no more input.
    InputExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub outputs: Vec<i64>,
    pub status: Status,
    pub warnings: Vec<String>,
}

/// What a `scanf` is about to fill.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReadRequest<'a> {
    pub name: &'a str,
    pub is_element: bool,
}

pub trait InputSource {
    fn next(&mut self, req: &ReadRequest<'_>) -> Option<i64>;
}

impl InputSource for std::vec::IntoIter<i64> {
    fn next(&mut self, _: &ReadRequest<'_>) -> Option<i64> {
        Iterator::next(self)
    }
}

/// Run `main` on a fixed input sequence.
pub fn interpret(p: &Program, input: &[i64], step_budget: u64) -> ExecutionResult {
    let mut src = input.to_vec().into_iter();
    interpret_with(p, &mut src, step_budget)
}

pub fn interpret_with(p: &Program, input: &mut dyn InputSource, step_budget: u64) -> ExecutionResult {
    let mut m = Machine::new(p, input, step_budget);
    let status = match m.call_function(p.main(), Vec::new()) {
        Ok(_) => Status::Ok,
        Err(f) => f,
    };
    ExecutionResult { outputs: m.outputs, status, warnings: m.warnings }
}

#[derive(Debug, Clone)]
pub struct ArrayRef {
    data: Rc<RefCell<Vec<Option<i64>>>>,
    offset: usize,
    dims: Vec<usize>,
    ty: ScalarType,
}

impl ArrayRef {
    pub fn new(ty: ScalarType, dims: Vec<usize>) -> ArrayRef {
        let n = dims.iter().product();
        ArrayRef { data: Rc::new(RefCell::new(vec![None; n])), offset: 0, dims, ty }
    }

    pub fn from_values(ty: ScalarType, dims: Vec<usize>, values: &[i64]) -> ArrayRef {
        let a = ArrayRef::new(ty, dims);
        for (k, v) in values.iter().enumerate() {
            a.data.borrow_mut()[k] = Some(*v);
        }
        a
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn stride(&self, from: usize) -> usize {
        self.dims[from..].iter().product()
    }

    /// Sub-array view after fixing the leading indices.
    fn view(&self, idx: &[i64]) -> Option<ArrayRef> {
        let mut off = self.offset;
        for (k, &i) in idx.iter().enumerate() {
            if i < 0 || i as usize >= self.dims[k] {
                return None;
            }
            off += i as usize * self.stride(k + 1);
        }
        Some(ArrayRef { data: self.data.clone(), offset: off, dims: self.dims[idx.len()..].to_vec(), ty: self.ty })
    }

    fn cell(&self, idx: &[i64]) -> Option<usize> {
        if idx.len() != self.dims.len() {
            return None;
        }
        self.view(idx).map(|v| v.offset)
    }

    pub fn get(&self, idx: &[i64]) -> Option<Option<i64>> {
        self.cell(idx).map(|c| self.data.borrow()[c])
    }

    pub fn set(&self, idx: &[i64], v: i64) -> bool {
        match self.cell(idx) {
            Some(c) => {
                self.data.borrow_mut()[c] = Some(v);
                true
            }
            None => false,
        }
    }
}

#[derive(Debug, Clone)]
enum Slot {
    Scalar { ty: ScalarType, val: Option<i64> },
    Array(ArrayRef),
}

enum Flow {
    Normal,
    Return(Option<i64>),
}

type Exec<T> = Result<T, Status>;

fn coerce(ty: ScalarType, v: i64) -> i64 {
    match ty {
        ScalarType::Int => v,
        ScalarType::Bool => (v != 0) as i64,
    }
}

/// Interpreter state; exposed so tests can run a statement list from a chosen
/// state.
pub struct Machine<'p, 'i> {
    program: &'p Program,
    input: &'i mut dyn InputSource,
    budget: u64,
    scopes: Vec<HashMap<String, Slot>>,
    pub outputs: Vec<i64>,
    pub warnings: Vec<String>,
    depth: usize,
}

impl<'p, 'i> Machine<'p, 'i> {
    pub fn new(program: &'p Program, input: &'i mut dyn InputSource, budget: u64) -> Self {
        Machine {
            program,
            input,
            budget,
            scopes: vec![HashMap::new()],
            outputs: Vec::new(),
            warnings: Vec::new(),
            depth: 0,
        }
    }

    pub fn set_scalar(&mut self, name: &str, ty: ScalarType, v: i64) {
        self.scopes.last_mut().unwrap().insert(name.into(), Slot::Scalar { ty, val: Some(coerce(ty, v)) });
    }

    pub fn bind_array(&mut self, name: &str, a: ArrayRef) {
        self.scopes.last_mut().unwrap().insert(name.into(), Slot::Array(a));
    }

    pub fn scalar(&self, name: &str) -> Option<i64> {
        match self.lookup(name)? {
            Slot::Scalar { val, .. } => *val,
            Slot::Array(_) => None,
        }
    }

    pub fn array(&self, name: &str) -> Option<ArrayRef> {
        match self.lookup(name)? {
            Slot::Array(a) => Some(a.clone()),
            Slot::Scalar { .. } => None,
        }
    }

    /// Execute statements in the current scope.
    pub fn run(&mut self, stmts: &[Stmt]) -> Result<(), Status> {
        for s in stmts {
            if let Flow::Return(_) = self.stmt(s)? {
                break;
            }
        }
        Ok(())
    }

    pub fn eval(&mut self, e: &Expr) -> Result<i64, Status> {
        self.expr(e)
    }

    fn lookup(&self, name: &str) -> Option<&Slot> {
        self.scopes.iter().rev().find_map(|s| s.get(name))
    }

    fn lookup_mut(&mut self, name: &str) -> Option<&mut Slot> {
        self.scopes.iter_mut().rev().find_map(|s| s.get_mut(name))
    }

    fn tick(&mut self) -> Exec<()> {
        if self.budget == 0 {
            return Err(Status::NonTermination);
        }
        self.budget -= 1;
        Ok(())
    }

    fn warn_uninit(&mut self, what: &str) {
        if self.warnings.len() < 16 {
            self.warnings.push(format!("read of uninitialized '{what}' evaluated to 0"));
        }
    }

    fn call_function(&mut self, f: &'p FunctionDef, args: Vec<Slot>) -> Exec<Option<i64>> {
        // Deep recursion is treated as running out of budget.
        if self.depth > 200 {
            return Err(Status::NonTermination);
        }
        let mut frame = HashMap::new();
        for (p, a) in f.params.iter().zip(args) {
            let slot = match a {
                Slot::Scalar { val, .. } => Slot::Scalar { ty: p.ty, val: val.map(|v| coerce(p.ty, v)) },
                arr => arr,
            };
            frame.insert(p.name.clone(), slot);
        }
        let saved = std::mem::replace(&mut self.scopes, vec![frame]);
        self.depth += 1;
        let mut result = Ok(None);
        for s in &f.body {
            match self.stmt(s) {
                Ok(Flow::Normal) => {}
                Ok(Flow::Return(v)) => {
                    result = Ok(v);
                    break;
                }
                Err(e) => {
                    result = Err(e);
                    break;
                }
            }
        }
        self.depth -= 1;
        self.scopes = saved;
        result.map(|v| match (&f.ret, v) {
            (crate::frontend::ReturnType::Scalar(t), Some(v)) => Some(coerce(*t, v)),
            (_, v) => v,
        })
    }

    fn scoped(&mut self, s: &Stmt) -> Exec<Flow> {
        self.scopes.push(HashMap::new());
        let r = self.stmt(s);
        self.scopes.pop();
        r
    }

    fn store(&mut self, lv: &LValue, v: i64) -> Exec<()> {
        if lv.is_scalar() {
            match self.lookup_mut(&lv.name) {
                Some(Slot::Scalar { ty, val }) => {
                    *val = Some(coerce(*ty, v));
                    Ok(())
                }
                _ => panic!("type-checked program assigns unknown scalar {}", lv.name),
            }
        } else {
            let idx = lv.indices.iter().map(|e| self.expr(e)).collect::<Exec<Vec<_>>>()?;
            let a = self.array(&lv.name).expect("type-checked array");
            if a.set(&idx, coerce(a.ty, v)) {
                Ok(())
            } else {
                Err(Status::OutOfBounds)
            }
        }
    }

    fn stmt(&mut self, s: &Stmt) -> Exec<Flow> {
        self.tick()?;
        match &s.kind {
            StmtKind::Decl { ty, vars } => {
                for d in vars {
                    let slot = if d.dims.is_empty() {
                        let val = match &d.init {
                            Some(e) => Some(coerce(*ty, self.expr(e)?)),
                            None => None,
                        };
                        Slot::Scalar { ty: *ty, val }
                    } else {
                        let mut dims = Vec::new();
                        for e in &d.dims {
                            let v = self.expr(e)?;
                            if v < 0 {
                                return Err(Status::OutOfBounds);
                            }
                            dims.push(v as usize);
                        }
                        let cells = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
                        if cells.map_or(true, |c| c > MAX_ARRAY_CELLS) {
                            return Err(Status::NonTermination);
                        }
                        Slot::Array(ArrayRef::new(*ty, dims))
                    };
                    self.scopes.last_mut().unwrap().insert(d.name.clone(), slot);
                }
                Ok(Flow::Normal)
            }
            StmtKind::Assign { target, value } => {
                let v = self.expr(value)?;
                self.store(target, v)?;
                Ok(Flow::Normal)
            }
            StmtKind::CompoundAssign { target, op, value } => {
                let v = self.expr(&Expr::bin(*op, target.to_expr(), value.clone()))?;
                self.store(target, v)?;
                Ok(Flow::Normal)
            }
            StmtKind::IncDec { target, delta } => {
                let v = self.expr(&target.to_expr())?.wrapping_add(*delta);
                self.store(target, v)?;
                Ok(Flow::Normal)
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                if self.expr(cond)? != 0 {
                    self.scoped(then_branch)
                } else if let Some(e) = else_branch {
                    self.scoped(e)
                } else {
                    Ok(Flow::Normal)
                }
            }
            StmtKind::For { init, cond, step, body } => {
                self.scopes.push(HashMap::new());
                let r = self.run_for(init.as_deref(), cond.as_ref(), step.as_deref(), body);
                self.scopes.pop();
                r
            }
            StmtKind::While { cond, body } => {
                while self.expr(cond)? != 0 {
                    self.tick()?;
                    if let Flow::Return(v) = self.scoped(body)? {
                        return Ok(Flow::Return(v));
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::CountDown { var, body } => loop {
                let lv = LValue::scalar(var.clone());
                let v = self.expr(&lv.to_expr())?;
                self.store(&lv, v.wrapping_sub(1))?;
                if v == 0 {
                    return Ok(Flow::Normal);
                }
                self.tick()?;
                if let Flow::Return(r) = self.scoped(body)? {
                    return Ok(Flow::Return(r));
                }
            },
            StmtKind::Read { target, .. } => {
                let req = ReadRequest { name: &target.name, is_element: !target.is_scalar() };
                let v = self.input.next(&req).ok_or(Status::InputExhausted)?;
                self.store(target, v)?;
                Ok(Flow::Normal)
            }
            StmtKind::Write { args, .. } => {
                for a in args {
                    let v = self.expr(a)?;
                    self.outputs.push(v);
                }
                Ok(Flow::Normal)
            }
            StmtKind::Call { name, args } => {
                self.call(name, args)?;
                Ok(Flow::Normal)
            }
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => Some(self.expr(e)?),
                    None => None,
                };
                Ok(Flow::Return(v))
            }
            StmtKind::Block(items) => {
                self.scopes.push(HashMap::new());
                let mut r = Ok(Flow::Normal);
                for i in items {
                    match self.stmt(i) {
                        Ok(Flow::Normal) => {}
                        other => {
                            r = other;
                            break;
                        }
                    }
                }
                self.scopes.pop();
                r
            }
        }
    }

    fn run_for(
        &mut self,
        init: Option<&Stmt>,
        cond: Option<&Expr>,
        step: Option<&Stmt>,
        body: &Stmt,
    ) -> Exec<Flow> {
        if let Some(i) = init {
            self.stmt(i)?;
        }
        loop {
            if let Some(c) = cond {
                if self.expr(c)? == 0 {
                    return Ok(Flow::Normal);
                }
            }
            self.tick()?;
            if let Flow::Return(v) = self.scoped(body)? {
                return Ok(Flow::Return(v));
            }
            if let Some(s) = step {
                self.stmt(s)?;
            }
        }
    }

    fn call(&mut self, name: &str, args: &[Expr]) -> Exec<Option<i64>> {
        let f = self.program.function(name).expect("type-checked call");
        let mut vals = Vec::new();
        for (p, a) in f.params.iter().zip(args) {
            if p.dims.is_empty() {
                vals.push(Slot::Scalar { ty: p.ty, val: Some(self.expr(a)?) });
            } else {
                vals.push(Slot::Array(self.array_arg(a)?));
            }
        }
        self.call_function(f, vals)
    }

    fn array_arg(&mut self, a: &Expr) -> Exec<ArrayRef> {
        let (name, idx) = match a {
            Expr::Var(n) => (n, Vec::new()),
            Expr::Index(n, idx) => (n, idx.clone()),
            _ => panic!("type-checked array argument"),
        };
        let base = self.array(name).expect("type-checked array");
        let idx = idx.iter().map(|e| self.expr(e)).collect::<Exec<Vec<_>>>()?;
        base.view(&idx).ok_or(Status::OutOfBounds)
    }

    fn expr(&mut self, e: &Expr) -> Exec<i64> {
        match e {
            Expr::Int(v) => Ok(*v),
            Expr::Bool(b) => Ok(*b as i64),
            Expr::Var(n) => match self.lookup(n) {
                Some(Slot::Scalar { val: Some(v), .. }) => Ok(*v),
                Some(Slot::Scalar { val: None, .. }) => {
                    self.warn_uninit(n);
                    Ok(0)
                }
                _ => panic!("type-checked program reads unknown scalar {n}"),
            },
            Expr::Index(n, idx) => {
                let idx = idx.iter().map(|e| self.expr(e)).collect::<Exec<Vec<_>>>()?;
                let a = self.array(n).expect("type-checked array");
                match a.get(&idx) {
                    None => Err(Status::OutOfBounds),
                    Some(Some(v)) => Ok(v),
                    Some(None) => {
                        self.warn_uninit(n);
                        Ok(0)
                    }
                }
            }
            Expr::Binary(op, l, r) => {
                let a = self.expr(l)?;
                match op {
                    BinOp::And => {
                        return Ok((a != 0 && self.expr(r)? != 0) as i64);
                    }
                    BinOp::Or => {
                        return Ok((a != 0 || self.expr(r)? != 0) as i64);
                    }
                    _ => {}
                }
                let b = self.expr(r)?;
                Ok(match op {
                    BinOp::Add => a.wrapping_add(b),
                    BinOp::Sub => a.wrapping_sub(b),
                    BinOp::Mul => a.wrapping_mul(b),
                    BinOp::Div | BinOp::Mod if b == 0 => return Err(Status::DivByZero),
                    BinOp::Div => a.wrapping_div(b),
                    BinOp::Mod => a.wrapping_rem(b),
                    BinOp::Lt => (a < b) as i64,
                    BinOp::Le => (a <= b) as i64,
                    BinOp::Gt => (a > b) as i64,
                    BinOp::Ge => (a >= b) as i64,
                    BinOp::Eq => (a == b) as i64,
                    BinOp::Ne => (a != b) as i64,
                    BinOp::And | BinOp::Or => unreachable!(),
                })
            }
            Expr::Unary(UnOp::Neg, x) => Ok(self.expr(x)?.wrapping_neg()),
            Expr::Unary(UnOp::Not, x) => Ok((self.expr(x)? == 0) as i64),
            Expr::Ternary(c, t, f) => {
                if self.expr(c)? != 0 {
                    self.expr(t)
                } else {
                    self.expr(f)
                }
            }
            Expr::Call(n, args) => Ok(self.call(n, args)?.unwrap_or(0)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    fn fig2() -> Program {
        parse(include_str!("../../tests/fixtures/fig2.c")).unwrap()
    }

    #[test]
    fn single_cell_triangle() {
        let r = interpret(&fig2(), &[1, 1], DEFAULT_STEP_BUDGET);
        assert_eq!(r.status, Status::Ok);
        assert_eq!(r.outputs, vec![1]);
    }

    #[test]
    fn two_row_triangle() {
        let r = interpret(&fig2(), &[2, 1, 2, 3], DEFAULT_STEP_BUDGET);
        assert_eq!(r.outputs, vec![4]);
    }

    #[test]
    fn past_the_end_is_out_of_bounds() {
        let p = parse("int main(){int n, a[3]; n = 3; a[n] = 1; return 0;}").unwrap();
        assert_eq!(interpret(&p, &[], 100).status, Status::OutOfBounds);
    }

    #[test]
    fn budget_stops_infinite_loop() {
        let p = parse("int main(){int x; x = 0; while (x == 0) { x = 0; } return 0;}").unwrap();
        assert_eq!(interpret(&p, &[], 1000).status, Status::NonTermination);
    }

    #[test]
    fn division_follows_c_truncation() {
        let p = parse("int main(){printf(\"%d %d\", -7 / 2, -7 % 2); return 0;}").unwrap();
        assert_eq!(interpret(&p, &[], 100).outputs, vec![-3, -1]);
    }

    #[test]
    fn uninitialized_read_warns_and_yields_zero() {
        let p = parse("int main(){int x; printf(\"%d\", x); return 0;}").unwrap();
        let r = interpret(&p, &[], 100);
        assert_eq!(r.outputs, vec![0]);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn row_slices_are_passed_by_reference() {
        let p = parse(
            "void f(int r[]) { r[1] = 7; }\
             int main(){ int d[2][2]; f(d[1]); printf(\"%d\", d[1][1]); return 0;}",
        )
        .unwrap();
        assert_eq!(interpret(&p, &[], 100).outputs, vec![7]);
    }
}
