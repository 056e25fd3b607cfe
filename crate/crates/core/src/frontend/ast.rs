//! Typed syntax tree for the mini-C subset.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Source position of a statement. `ordinal` is a pre-order index that is
/// strictly increasing in source order across the whole program.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Location {
    pub ordinal: u32,
    pub line: u32,
    pub column: u32,
}

// Locations compare by ordinal only; line/column are informational.
impl PartialEq for Location {
    fn eq(&self, other: &Self) -> bool {
        self.ordinal == other.ordinal
    }
}
impl Eq for Location {}
impl PartialOrd for Location {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Location {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.ordinal.cmp(&other.ordinal)
    }
}
impl std::hash::Hash for Location {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.ordinal.hash(state)
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScalarType {
    Int,
    Bool,
}

impl fmt::Display for ScalarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarType::Int => f.write_str("int"),
            ScalarType::Bool => f.write_str("bool"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ReturnType {
    Void,
    Scalar(ScalarType),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne
        )
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }

    pub fn is_commutative(self) -> bool {
        matches!(
            self,
            BinOp::Add | BinOp::Mul | BinOp::Eq | BinOp::Ne | BinOp::And | BinOp::Or
        )
    }

    /// `a op b` ⟺ `b op.swap() a`, for comparisons.
    pub fn swapped(self) -> BinOp {
        match self {
            BinOp::Lt => BinOp::Gt,
            BinOp::Le => BinOp::Ge,
            BinOp::Gt => BinOp::Lt,
            BinOp::Ge => BinOp::Le,
            other => other,
        }
    }

    /// Logical negation of a comparison.
    pub fn negated(self) -> Option<BinOp> {
        Some(match self {
            BinOp::Lt => BinOp::Ge,
            BinOp::Le => BinOp::Gt,
            BinOp::Gt => BinOp::Le,
            BinOp::Ge => BinOp::Lt,
            BinOp::Eq => BinOp::Ne,
            BinOp::Ne => BinOp::Eq,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Var(String),
    /// Array access; fewer indices than the array's rank denotes a sub-array
    /// (only legal as a call argument).
    Index(String, Vec<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn not(e: Expr) -> Expr {
        Expr::Unary(UnOp::Not, Box::new(e))
    }

    pub fn ite(c: Expr, t: Expr, e: Expr) -> Expr {
        Expr::Ternary(Box::new(c), Box::new(t), Box::new(e))
    }

    /// Conjunction that drops literal `true` operands.
    pub fn and(l: Expr, r: Expr) -> Expr {
        match (l, r) {
            (Expr::Bool(true), x) | (x, Expr::Bool(true)) => x,
            (l, r) => Expr::bin(BinOp::And, l, r),
        }
    }

    pub fn and_all(items: impl IntoIterator<Item = Expr>) -> Expr {
        items.into_iter().fold(Expr::Bool(true), Expr::and)
    }

    pub fn or_all(items: impl IntoIterator<Item = Expr>) -> Expr {
        let mut acc: Option<Expr> = None;
        for e in items {
            acc = Some(match acc {
                None => e,
                Some(a) => Expr::bin(BinOp::Or, a, e),
            });
        }
        acc.unwrap_or(Expr::Bool(false))
    }

    /// Visit every sub-expression, pre-order.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) => {}
            Expr::Index(_, idx) | Expr::Call(_, idx) => idx.iter().for_each(|e| e.walk(f)),
            Expr::Binary(_, l, r) => {
                l.walk(f);
                r.walk(f);
            }
            Expr::Unary(_, e) => e.walk(f),
            Expr::Ternary(c, t, e) => {
                c.walk(f);
                t.walk(f);
                e.walk(f);
            }
        }
    }

    /// Bottom-up rewrite.
    pub fn map(&self, f: &mut impl FnMut(Expr) -> Expr) -> Expr {
        let rebuilt = match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) => self.clone(),
            Expr::Index(a, idx) => Expr::Index(a.clone(), idx.iter().map(|e| e.map(f)).collect()),
            Expr::Call(n, args) => Expr::Call(n.clone(), args.iter().map(|e| e.map(f)).collect()),
            Expr::Binary(op, l, r) => Expr::bin(*op, l.map(f), r.map(f)),
            Expr::Unary(op, e) => Expr::Unary(*op, Box::new(e.map(f))),
            Expr::Ternary(c, t, e) => Expr::ite(c.map(f), t.map(f), e.map(f)),
        };
        f(rebuilt)
    }

    /// Names of scalar variables and arrays mentioned.
    pub fn names(&self) -> std::collections::BTreeSet<String> {
        let mut out = std::collections::BTreeSet::new();
        self.walk(&mut |e| match e {
            Expr::Var(v) | Expr::Index(v, _) => {
                out.insert(v.clone());
            }
            _ => {}
        });
        out
    }

    pub fn mentions(&self, name: &str) -> bool {
        let mut found = false;
        self.walk(&mut |e| match e {
            Expr::Var(v) | Expr::Index(v, _) if v == name => found = true,
            _ => {}
        });
        found
    }

    pub fn has_call(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if matches!(e, Expr::Call(..)) {
                found = true
            }
        });
        found
    }

    /// Rename variables and arrays through `f` (names for which `f` returns
    /// `None` are kept).
    pub fn rename(&self, f: &impl Fn(&str) -> Option<String>) -> Expr {
        self.map(&mut |e| match e {
            Expr::Var(v) => Expr::Var(f(&v).unwrap_or(v)),
            Expr::Index(a, idx) => Expr::Index(f(&a).unwrap_or(a), idx),
            other => other,
        })
    }

    /// Replace scalar variable `name` by `with`.
    pub fn substitute(&self, name: &str, with: &Expr) -> Expr {
        self.map(&mut |e| match e {
            Expr::Var(v) if v == name => with.clone(),
            other => other,
        })
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LValue {
    pub name: String,
    pub indices: Vec<Expr>,
}

impl LValue {
    pub fn scalar(name: impl Into<String>) -> LValue {
        LValue { name: name.into(), indices: Vec::new() }
    }

    pub fn to_expr(&self) -> Expr {
        if self.indices.is_empty() {
            Expr::Var(self.name.clone())
        } else {
            Expr::Index(self.name.clone(), self.indices.clone())
        }
    }

    pub fn is_scalar(&self) -> bool {
        self.indices.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Declarator {
    pub name: String,
    pub dims: Vec<Expr>,
    pub init: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub ty: ScalarType,
    /// `None` for an unsized leading dimension (`int a[]`).
    pub dims: Vec<Option<Expr>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stmt {
    pub loc: Location,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum StmtKind {
    Decl { ty: ScalarType, vars: Vec<Declarator> },
    Assign { target: LValue, value: Expr },
    /// `x op= e`; removed by pre-processing.
    CompoundAssign { target: LValue, op: BinOp, value: Expr },
    /// `x++` / `x--`; removed by pre-processing.
    IncDec { target: LValue, delta: i64 },
    If { cond: Expr, then_branch: Box<Stmt>, else_branch: Option<Box<Stmt>> },
    For { init: Option<Box<Stmt>>, cond: Option<Expr>, step: Option<Box<Stmt>>, body: Box<Stmt> },
    While { cond: Expr, body: Box<Stmt> },
    /// `while (var--) body`, the usual test-case wrapper.
    CountDown { var: String, body: Box<Stmt> },
    Read { format: String, target: LValue },
    Write { format: String, args: Vec<Expr> },
    Call { name: String, args: Vec<Expr> },
    Return(Option<Expr>),
    Block(Vec<Stmt>),
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Stmt {
        Stmt { loc: Location::default(), kind }
    }

    pub fn at(loc: Location, kind: StmtKind) -> Stmt {
        Stmt { loc, kind }
    }

    pub fn is_loop(&self) -> bool {
        matches!(
            self.kind,
            StmtKind::For { .. } | StmtKind::While { .. } | StmtKind::CountDown { .. }
        )
    }

    /// Direct child statements (loop headers' init/step included).
    pub fn children(&self) -> Vec<&Stmt> {
        match &self.kind {
            StmtKind::If { then_branch, else_branch, .. } => {
                let mut v = vec![then_branch.as_ref()];
                if let Some(e) = else_branch {
                    v.push(e.as_ref());
                }
                v
            }
            StmtKind::For { init, step, body, .. } => {
                let mut v = Vec::new();
                if let Some(i) = init {
                    v.push(i.as_ref());
                }
                v.push(body.as_ref());
                if let Some(s) = step {
                    v.push(s.as_ref());
                }
                v
            }
            StmtKind::While { body, .. } | StmtKind::CountDown { body, .. } => vec![body.as_ref()],
            StmtKind::Block(items) => items.iter().collect(),
            _ => Vec::new(),
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut Stmt> {
        match &mut self.kind {
            StmtKind::If { then_branch, else_branch, .. } => {
                let mut v = vec![then_branch.as_mut()];
                if let Some(e) = else_branch {
                    v.push(e.as_mut());
                }
                v
            }
            StmtKind::For { init, step, body, .. } => {
                let mut v = Vec::new();
                if let Some(i) = init {
                    v.push(i.as_mut());
                }
                v.push(body.as_mut());
                if let Some(s) = step {
                    v.push(s.as_mut());
                }
                v
            }
            StmtKind::While { body, .. } | StmtKind::CountDown { body, .. } => vec![body.as_mut()],
            StmtKind::Block(items) => items.iter_mut().collect(),
            _ => Vec::new(),
        }
    }

    /// Pre-order traversal over this statement and all nested statements.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Stmt)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Expressions evaluated directly by this statement (not by children).
    pub fn own_exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::Decl { vars, .. } => vars
                .iter()
                .flat_map(|d| d.dims.iter().chain(d.init.iter()))
                .collect(),
            StmtKind::Assign { target, value } | StmtKind::CompoundAssign { target, value, .. } => {
                target.indices.iter().chain(std::iter::once(value)).collect()
            }
            StmtKind::IncDec { target, .. } | StmtKind::Read { target, .. } => {
                target.indices.iter().collect()
            }
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
            StmtKind::For { cond, .. } => cond.iter().collect(),
            StmtKind::Write { args, .. } | StmtKind::Call { args, .. } => args.iter().collect(),
            StmtKind::Return(e) => e.iter().collect(),
            StmtKind::CountDown { .. } | StmtKind::Block(_) => Vec::new(),
        }
    }

    /// Name written by this statement itself (not children), if any.
    pub fn written_name(&self) -> Option<&str> {
        match &self.kind {
            StmtKind::Assign { target, .. }
            | StmtKind::CompoundAssign { target, .. }
            | StmtKind::IncDec { target, .. }
            | StmtKind::Read { target, .. } => Some(&target.name),
            StmtKind::CountDown { var, .. } => Some(var),
            _ => None,
        }
    }

    /// All names written anywhere inside (including declarations with
    /// initializers).
    pub fn writes(&self) -> std::collections::BTreeSet<String> {
        let mut out = std::collections::BTreeSet::new();
        self.walk(&mut |s| {
            if let Some(n) = s.written_name() {
                out.insert(n.to_string());
            }
            if let StmtKind::Decl { vars, .. } = &s.kind {
                for d in vars {
                    if d.init.is_some() {
                        out.insert(d.name.clone());
                    }
                }
            }
        });
        out
    }

    /// All names read anywhere inside.
    pub fn reads(&self) -> std::collections::BTreeSet<String> {
        let mut out = std::collections::BTreeSet::new();
        self.walk(&mut |s| {
            for e in s.own_exprs() {
                out.extend(e.names());
            }
            match &s.kind {
                StmtKind::CompoundAssign { target, .. } | StmtKind::IncDec { target, .. } => {
                    out.insert(target.name.clone());
                }
                StmtKind::CountDown { var, .. } => {
                    out.insert(var.clone());
                }
                _ => {}
            }
        });
        out
    }

    pub fn contains_loop(&self) -> bool {
        let mut found = false;
        self.walk(&mut |s| {
            if s.is_loop() {
                found = true
            }
        });
        found
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionDef {
    pub name: String,
    pub ret: ReturnType,
    pub params: Vec<Param>,
    pub body: Vec<Stmt>,
    pub loc: Location,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Program {
    pub functions: Vec<FunctionDef>,
    /// Explanatory notes attached by pre-processing rewrites.
    #[serde(default)]
    pub notes: Vec<String>,
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn main(&self) -> &FunctionDef {
        self.function("main").expect("type-checked program has main")
    }

    pub fn main_mut(&mut self) -> &mut FunctionDef {
        self.functions
            .iter_mut()
            .find(|f| f.name == "main")
            .expect("type-checked program has main")
    }

    /// Reassign statement ordinals in pre-order across all functions.
    pub fn renumber(&mut self) {
        let mut next = 0u32;
        fn go(s: &mut Stmt, next: &mut u32) {
            s.loc.ordinal = *next;
            *next += 1;
            for c in s.children_mut() {
                go(c, next);
            }
        }
        for f in &mut self.functions {
            f.loc.ordinal = next;
            next += 1;
            for s in &mut f.body {
                go(s, &mut next);
            }
        }
    }

    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Stmt)) {
        for func in &self.functions {
            for s in &func.body {
                s.walk(f);
            }
        }
    }

    /// Structural equality ignoring locations.
    pub fn same_shape(&self, other: &Program) -> bool {
        let mut a = self.clone();
        let mut b = other.clone();
        a.clear_positions();
        b.clear_positions();
        a.functions == b.functions
    }

    fn clear_positions(&mut self) {
        fn go(s: &mut Stmt) {
            s.loc = Location::default();
            for c in s.children_mut() {
                go(c);
            }
        }
        for f in &mut self.functions {
            f.loc = Location::default();
            for s in &mut f.body {
                go(s);
            }
        }
    }
}
