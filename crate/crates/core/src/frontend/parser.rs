use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::FrontendError;

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, FrontendError>;

/// Parse a whole translation unit (no type checking).
pub(crate) fn parse_program(src: &str) -> PResult<Program> {
    let mut p = Parser { toks: tokenize(src)?, pos: 0 };
    let mut functions = Vec::new();
    while p.peek() != &Tok::Eof {
        functions.push(p.funcdef()?);
    }
    let mut prog = Program { functions, notes: Vec::new() };
    prog.renumber();
    Ok(prog)
}

/// Parse a standalone expression (used for input-constraint files).
pub fn parse_expr(src: &str) -> PResult<Expr> {
    let mut p = Parser { toks: tokenize(src)?, pos: 0 };
    let e = p.expr()?;
    if p.peek() != &Tok::Eof {
        return Err(p.err("trailing input after expression"));
    }
    Ok(e)
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn here(&self) -> Location {
        let t = &self.toks[self.pos];
        Location { ordinal: 0, line: t.line, column: t.column }
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> FrontendError {
        let t = &self.toks[self.pos];
        FrontendError::Syntax { line: t.line, column: t.column, message: msg.into() }
    }

    fn unsupported(&self, what: impl Into<String>) -> FrontendError {
        let t = &self.toks[self.pos];
        FrontendError::Unsupported { line: t.line, column: t.column, what: what.into() }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == k)
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> PResult<()> {
        if self.eat(p) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{p}'")))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.next();
                Ok(s)
            }
            _ => Err(self.err("expected identifier")),
        }
    }

    /// Recognize a type keyword sequence; `Ok(None)` if not at a type.
    fn type_name(&mut self) -> PResult<Option<ReturnType>> {
        match self.peek().clone() {
            Tok::Ident(s) => match s.as_str() {
                "int" => {
                    self.next();
                    Ok(Some(ReturnType::Scalar(ScalarType::Int)))
                }
                "bool" | "_Bool" => {
                    self.next();
                    Ok(Some(ReturnType::Scalar(ScalarType::Bool)))
                }
                "void" => {
                    self.next();
                    Ok(Some(ReturnType::Void))
                }
                "long" => {
                    self.next();
                    while self.is_kw("long") || self.is_kw("int") {
                        self.next();
                    }
                    Ok(Some(ReturnType::Scalar(ScalarType::Int)))
                }
                "char" | "float" | "double" | "struct" | "unsigned" | "short" | "union"
                | "enum" | "typedef" => Err(self.unsupported(format!("type '{s}'"))),
                _ => Ok(None),
            },
            _ => Ok(None),
        }
    }

    fn at_type(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if matches!(s.as_str(),
            "int" | "bool" | "_Bool" | "void" | "long" | "char" | "float" | "double" | "struct"
            | "unsigned" | "short" | "union" | "enum" | "typedef"))
    }

    fn funcdef(&mut self) -> PResult<FunctionDef> {
        let loc = self.here();
        let ret = self.type_name()?.ok_or_else(|| self.err("expected function definition"))?;
        if self.is_punct("*") {
            return Err(self.unsupported("pointer return type"));
        }
        let name = self.ident()?;
        self.expect("(")?;
        let mut params = Vec::new();
        if self.is_kw("void") && matches!(self.peek_at(1), Tok::Punct(")")) {
            self.next();
        }
        if !self.is_punct(")") {
            loop {
                let ty = match self.type_name()? {
                    Some(ReturnType::Scalar(t)) => t,
                    _ => return Err(self.err("expected parameter type")),
                };
                if self.is_punct("*") {
                    return Err(self.unsupported("pointer parameter"));
                }
                let pname = self.ident()?;
                let mut dims = Vec::new();
                while self.eat("[") {
                    if self.eat("]") {
                        dims.push(None);
                    } else {
                        dims.push(Some(self.expr()?));
                        self.expect("]")?;
                    }
                }
                params.push(Param { name: pname, ty, dims });
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        if !self.is_punct("{") {
            return Err(self.err("expected function body"));
        }
        let body = match self.stmt()?.kind {
            StmtKind::Block(items) => items,
            _ => unreachable!(),
        };
        Ok(FunctionDef { name, ret, params, body, loc })
    }

    /// Statements; a few source forms expand to several (e.g. multi-target
    /// `scanf`), hence the vector.
    fn stmts_one(&mut self) -> PResult<Vec<Stmt>> {
        let loc = self.here();
        if self.is_kw("scanf") {
            self.next();
            self.expect("(")?;
            let format = match self.next() {
                Tok::Str(s) => s,
                _ => return Err(self.err("expected format string")),
            };
            let mut out = Vec::new();
            while self.eat(",") {
                if !self.eat("&") {
                    return Err(self.unsupported("scanf target without '&'"));
                }
                let target = self.lvalue()?;
                out.push(Stmt::at(loc, StmtKind::Read { format: "%d".into(), target }));
            }
            self.expect(")")?;
            self.expect(";")?;
            if out.is_empty() {
                return Err(self.err("scanf without targets"));
            }
            if out.len() == 1 {
                if let StmtKind::Read { format: f, .. } = &mut out[0].kind {
                    *f = format;
                }
            }
            return Ok(out);
        }
        if self.at_type() {
            return Ok(vec![self.decl()?]);
        }
        Ok(vec![self.stmt()?])
    }

    fn decl(&mut self) -> PResult<Stmt> {
        let loc = self.here();
        let ty = match self.type_name()? {
            Some(ReturnType::Scalar(t)) => t,
            _ => return Err(self.err("expected variable type")),
        };
        let mut vars = Vec::new();
        loop {
            if self.is_punct("*") {
                return Err(self.unsupported("pointer arithmetic / pointer declarations"));
            }
            let name = self.ident()?;
            let mut dims = Vec::new();
            while self.eat("[") {
                dims.push(self.expr()?);
                self.expect("]")?;
            }
            if dims.len() > 2 {
                return Err(self.unsupported("arrays with more than two dimensions"));
            }
            let init = if self.eat("=") {
                if self.is_punct("{") {
                    return Err(self.unsupported("array initializer lists"));
                }
                if self.is_punct("&") {
                    return Err(self.unsupported("pointer arithmetic / address-of"));
                }
                Some(self.expr()?)
            } else {
                None
            };
            vars.push(Declarator { name, dims, init });
            if !self.eat(",") {
                break;
            }
        }
        self.expect(";")?;
        Ok(Stmt::at(loc, StmtKind::Decl { ty, vars }))
    }

    fn wrap(stmts: Vec<Stmt>, loc: Location) -> Stmt {
        if stmts.len() == 1 {
            stmts.into_iter().next().unwrap()
        } else {
            Stmt::at(loc, StmtKind::Block(stmts))
        }
    }

    fn body(&mut self) -> PResult<Box<Stmt>> {
        let loc = self.here();
        Ok(Box::new(Self::wrap(self.stmts_one()?, loc)))
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let loc = self.here();
        if self.eat("{") {
            let mut items = Vec::new();
            while !self.is_punct("}") {
                if self.peek() == &Tok::Eof {
                    return Err(self.err("unexpected end of input, expected '}'"));
                }
                items.extend(self.stmts_one()?);
            }
            self.next();
            return Ok(Stmt::at(loc, StmtKind::Block(items)));
        }
        if self.eat(";") {
            return Ok(Stmt::at(loc, StmtKind::Block(Vec::new())));
        }
        if let Tok::Ident(kw) = self.peek().clone() {
            match kw.as_str() {
                "if" => {
                    self.next();
                    self.expect("(")?;
                    let cond = self.expr()?;
                    self.expect(")")?;
                    let then_branch = self.body()?;
                    let else_branch = if self.is_kw("else") {
                        self.next();
                        Some(self.body()?)
                    } else {
                        None
                    };
                    return Ok(Stmt::at(loc, StmtKind::If { cond, then_branch, else_branch }));
                }
                "for" => {
                    self.next();
                    self.expect("(")?;
                    let init = if self.is_punct(";") {
                        self.next();
                        None
                    } else if self.at_type() {
                        Some(Box::new(self.decl()?))
                    } else {
                        let s = self.simple()?;
                        self.expect(";")?;
                        Some(Box::new(s))
                    };
                    let cond = if self.is_punct(";") { None } else { Some(self.expr()?) };
                    self.expect(";")?;
                    let step = if self.is_punct(")") { None } else { Some(Box::new(self.simple()?)) };
                    self.expect(")")?;
                    let body = self.body()?;
                    return Ok(Stmt::at(loc, StmtKind::For { init, cond, step, body }));
                }
                "while" => {
                    self.next();
                    self.expect("(")?;
                    if let (Tok::Ident(v), Tok::Punct("--"), Tok::Punct(")")) =
                        (self.peek().clone(), self.peek_at(1).clone(), self.peek_at(2).clone())
                    {
                        if !is_keyword(&v) {
                            self.pos += 3;
                            let body = self.body()?;
                            return Ok(Stmt::at(loc, StmtKind::CountDown { var: v, body }));
                        }
                    }
                    let cond = self.expr()?;
                    self.expect(")")?;
                    let body = self.body()?;
                    return Ok(Stmt::at(loc, StmtKind::While { cond, body }));
                }
                "return" => {
                    self.next();
                    let e = if self.is_punct(";") { None } else { Some(self.expr()?) };
                    self.expect(";")?;
                    return Ok(Stmt::at(loc, StmtKind::Return(e)));
                }
                "printf" => {
                    self.next();
                    self.expect("(")?;
                    let format = match self.next() {
                        Tok::Str(s) => s,
                        _ => return Err(self.err("expected format string")),
                    };
                    let mut args = Vec::new();
                    while self.eat(",") {
                        args.push(self.expr()?);
                    }
                    self.expect(")")?;
                    self.expect(";")?;
                    return Ok(Stmt::at(loc, StmtKind::Write { format, args }));
                }
                "break" | "continue" | "do" | "switch" | "goto" | "case" => {
                    return Err(self.unsupported(format!("'{kw}' statements")));
                }
                "scanf" => {
                    let mut v = self.stmts_one()?;
                    return Ok(if v.len() == 1 { v.remove(0) } else { Stmt::at(loc, StmtKind::Block(v)) });
                }
                _ => {}
            }
        }
        let s = self.simple()?;
        self.expect(";")?;
        Ok(s)
    }

    /// Assignment, compound assignment, increment/decrement or call.
    fn simple(&mut self) -> PResult<Stmt> {
        let loc = self.here();
        if self.is_punct("++") || self.is_punct("--") {
            let delta = if self.eat("++") { 1 } else {
                self.next();
                -1
            };
            let target = self.lvalue()?;
            return Ok(Stmt::at(loc, StmtKind::IncDec { target, delta }));
        }
        if self.is_punct("*") {
            return Err(self.unsupported("pointer dereference"));
        }
        let name = self.ident()?;
        if self.is_punct("(") {
            self.next();
            let args = self.args()?;
            return Ok(Stmt::at(loc, StmtKind::Call { name, args }));
        }
        let target = self.lvalue_rest(name)?;
        let op = match self.next() {
            Tok::Punct("=") => {
                if self.is_punct("&") {
                    return Err(self.unsupported("pointer arithmetic / address-of"));
                }
                let value = self.expr()?;
                return Ok(Stmt::at(loc, StmtKind::Assign { target, value }));
            }
            Tok::Punct("++") => return Ok(Stmt::at(loc, StmtKind::IncDec { target, delta: 1 })),
            Tok::Punct("--") => return Ok(Stmt::at(loc, StmtKind::IncDec { target, delta: -1 })),
            Tok::Punct("+=") => BinOp::Add,
            Tok::Punct("-=") => BinOp::Sub,
            Tok::Punct("*=") => BinOp::Mul,
            Tok::Punct("/=") => BinOp::Div,
            Tok::Punct("%=") => BinOp::Mod,
            _ => {
                self.pos -= 1;
                return Err(self.err("expected assignment"));
            }
        };
        let value = self.expr()?;
        Ok(Stmt::at(loc, StmtKind::CompoundAssign { target, op, value }))
    }

    fn lvalue(&mut self) -> PResult<LValue> {
        let name = self.ident()?;
        self.lvalue_rest(name)
    }

    fn lvalue_rest(&mut self, name: String) -> PResult<LValue> {
        let mut indices = Vec::new();
        while self.eat("[") {
            indices.push(self.expr()?);
            self.expect("]")?;
        }
        Ok(LValue { name, indices })
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        let mut args = Vec::new();
        if !self.eat(")") {
            loop {
                args.push(self.expr()?);
                if !self.eat(",") {
                    break;
                }
            }
            self.expect(")")?;
        }
        Ok(args)
    }

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        let c = self.binary(1)?;
        if self.eat("?") {
            let t = self.expr()?;
            self.expect(":")?;
            let e = self.expr()?;
            return Ok(Expr::ite(c, t, e));
        }
        Ok(c)
    }

    fn peek_binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Punct(p) => match *p {
                "+" => BinOp::Add,
                "-" => BinOp::Sub,
                "*" => BinOp::Mul,
                "/" => BinOp::Div,
                "%" => BinOp::Mod,
                "<" => BinOp::Lt,
                "<=" => BinOp::Le,
                ">" => BinOp::Gt,
                ">=" => BinOp::Ge,
                "==" => BinOp::Eq,
                "!=" => BinOp::Ne,
                "&&" => BinOp::And,
                "||" => BinOp::Or,
                _ => return None,
            },
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_binop() {
            if op.precedence() < min_prec {
                break;
            }
            self.next();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat("-") {
            let e = self.unary()?;
            return Ok(match e {
                Expr::Int(v) => Expr::Int(-v),
                e => Expr::Unary(UnOp::Neg, Box::new(e)),
            });
        }
        if self.eat("+") {
            return self.unary();
        }
        if self.eat("!") {
            return Ok(Expr::not(self.unary()?));
        }
        if self.is_punct("&") || self.is_punct("*") {
            return Err(self.unsupported("pointer arithmetic / address-of"));
        }
        if self.is_punct("++") || self.is_punct("--") {
            return Err(self.unsupported("increment inside expressions"));
        }
        let e = self.primary()?;
        if self.is_punct("++") || self.is_punct("--") {
            return Err(self.unsupported("increment inside expressions"));
        }
        if self.is_punct("->") || self.is_punct(".") {
            return Err(self.unsupported("struct member access"));
        }
        Ok(e)
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.next();
                Ok(Expr::Int(v))
            }
            Tok::Punct("(") => {
                self.next();
                if self.at_type() {
                    return Err(self.unsupported("type casts"));
                }
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.next();
                Ok(Expr::Bool(s == "true"))
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                if self.eat("(") {
                    return Ok(Expr::Call(name, self.args()?));
                }
                let mut idx = Vec::new();
                while self.eat("[") {
                    idx.push(self.expr()?);
                    self.expect("]")?;
                }
                Ok(if idx.is_empty() { Expr::Var(name) } else { Expr::Index(name, idx) })
            }
            Tok::Str(_) => Err(self.unsupported("string literals in expressions")),
            _ => Err(self.err("expected expression")),
        }
    }
}

pub(crate) fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "int" | "bool" | "_Bool" | "void" | "long" | "if" | "else" | "for" | "while" | "return"
            | "scanf" | "printf" | "true" | "false" | "break" | "continue" | "do" | "switch"
            | "char" | "float" | "double" | "struct" | "unsigned" | "short" | "goto" | "case"
    )
}
