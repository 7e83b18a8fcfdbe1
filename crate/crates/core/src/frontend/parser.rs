//! Recursive-descent parser for RRP.
//!
//! Syntax errors abort at the first offending token. Semantic errors
//! (duplicate declarations, undeclared identifiers, bad alphabets) are
//! collected so a single run reports all of them.

use super::ast::{Alphabet, BinOp, Expr, Global, Program, Stmt, UnOp, MAX_ALPHABET};
use super::diagnostic::{Diagnostic, Position};
use super::lexer::{tokenize, Token, TokenKind};

/// Result of parsing plus any non-fatal warnings.
#[derive(Debug, Clone)]
pub struct ParseOutcome {
    pub result: Result<Program, Vec<Diagnostic>>,
    pub warnings: Vec<Diagnostic>,
}

/// Parses and validates RRP source. Returns either a program or at least one
/// error diagnostic, never both.
pub fn parse_program(text: &str) -> Result<Program, Vec<Diagnostic>> {
    parse_with_warnings(text).result
}

pub fn parse_with_warnings(text: &str) -> ParseOutcome {
    let tokens = match tokenize(text) {
        Ok(tokens) => tokens,
        Err(diag) => return ParseOutcome { result: Err(vec![diag]), warnings: Vec::new() },
    };
    let mut parser = Parser { tokens, at: 0, globals: Vec::new(), input_name: None, errors: Vec::new(), warnings: Vec::new() };
    let result = match parser.program() {
        Ok(program) if parser.errors.is_empty() => Ok(program),
        Ok(_) => Err(parser.errors),
        Err(diag) => {
            let mut errors = parser.errors;
            errors.push(diag);
            errors.sort_by_key(|d| d.pos);
            Err(errors)
        }
    };
    ParseOutcome { result, warnings: parser.warnings }
}

type PResult<T> = Result<T, Diagnostic>;

struct Parser {
    tokens: Vec<Token>,
    at: usize,
    globals: Vec<Global>,
    input_name: Option<String>,
    errors: Vec<Diagnostic>,
    warnings: Vec<Diagnostic>,
}

impl Parser {
    fn peek(&self) -> &TokenKind {
        &self.tokens[self.at].kind
    }

    fn peek_at(&self, offset: usize) -> &TokenKind {
        let idx = (self.at + offset).min(self.tokens.len() - 1);
        &self.tokens[idx].kind
    }

    fn pos(&self) -> Position {
        self.tokens[self.at].pos
    }

    fn bump(&mut self) -> Token {
        let tok = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        tok
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == kind {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind) -> PResult<Token> {
        if *self.peek() == kind {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&kind.describe()))
        }
    }

    fn unexpected(&self, wanted: &str) -> Diagnostic {
        Diagnostic::error(
            self.pos(),
            format!("syntax error: expected {wanted}, found {}", self.peek().describe()),
        )
    }

    fn ident(&mut self) -> PResult<(String, Position)> {
        let pos = self.pos();
        match self.peek().clone() {
            TokenKind::Ident(name) => {
                self.bump();
                Ok((name, pos))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn signed_int(&mut self) -> PResult<i64> {
        let pos = self.pos();
        let negative = self.eat(&TokenKind::Minus);
        match *self.peek() {
            TokenKind::Int(mag) => {
                self.bump();
                apply_sign(mag, negative)
                    .ok_or_else(|| Diagnostic::error(pos, "integer literal out of range"))
            }
            _ => Err(self.unexpected("integer")),
        }
    }

    fn program(&mut self) -> PResult<Program> {
        let decl_pos = self.pos();
        self.expect(TokenKind::Inputs)?;
        let lo = self.signed_int()?;
        self.expect(TokenKind::DotDot)?;
        let hi = self.signed_int()?;
        self.expect(TokenKind::Semi)?;
        let alphabet = Alphabet::new(lo, hi);
        if alphabet.is_empty() {
            self.errors.push(Diagnostic::error(decl_pos, format!("empty alphabet {lo}..{hi}")));
        } else if alphabet.len() > MAX_ALPHABET {
            self.errors.push(Diagnostic::error(
                decl_pos,
                format!("alphabet too large: {} symbols (max {MAX_ALPHABET})", alphabet.len()),
            ));
        }

        while *self.peek() == TokenKind::Var {
            self.bump();
            let (name, pos) = self.ident()?;
            self.expect(TokenKind::Assign)?;
            let init = self.signed_int()?;
            self.expect(TokenKind::Semi)?;
            if self.globals.iter().any(|g| g.name == name) {
                self.errors.push(Diagnostic::error(pos, format!("duplicate declaration {name}")));
            } else {
                self.globals.push(Global { name, init });
            }
        }

        self.expect(TokenKind::Step)?;
        self.expect(TokenKind::LParen)?;
        let (input_name, pos) = self.ident()?;
        if self.globals.iter().any(|g| g.name == input_name) {
            self.errors.push(Diagnostic::error(pos, format!("duplicate declaration {input_name}")));
        }
        self.input_name = Some(input_name.clone());
        self.expect(TokenKind::RParen)?;
        let body = self.block()?;
        if *self.peek() != TokenKind::Eof {
            return Err(self.unexpected("end of input"));
        }
        Ok(Program { alphabet, globals: std::mem::take(&mut self.globals), input_name, body })
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect(TokenKind::LBrace)?;
        let mut stmts = Vec::new();
        let mut terminated = false;
        let mut warned = false;
        while *self.peek() != TokenKind::RBrace {
            let pos = self.pos();
            let stmt = self.stmt()?;
            if terminated && !warned {
                self.warnings.push(Diagnostic::warning(pos, "unreachable statement"));
                warned = true;
            }
            terminated |= always_terminates(&stmt);
            stmts.push(stmt);
        }
        self.expect(TokenKind::RBrace)?;
        Ok(stmts)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        match self.peek().clone() {
            TokenKind::If => self.if_stmt(),
            TokenKind::Emit => {
                self.bump();
                let v = self.signed_int()?;
                self.expect(TokenKind::Semi)?;
                Ok(Stmt::Emit(v))
            }
            TokenKind::Error => {
                self.bump();
                let v = self.signed_int()?;
                self.expect(TokenKind::Semi)?;
                Ok(Stmt::Error(v))
            }
            TokenKind::Reject => {
                self.bump();
                self.expect(TokenKind::Semi)?;
                Ok(Stmt::Reject)
            }
            TokenKind::Ident(_) => {
                let (name, pos) = self.ident()?;
                self.expect(TokenKind::Assign)?;
                let value = self.expr()?;
                self.expect(TokenKind::Semi)?;
                let target = match self.globals.iter().position(|g| g.name == name) {
                    Some(idx) => idx,
                    None => {
                        let msg = if self.input_name.as_deref() == Some(name.as_str()) {
                            format!("cannot assign to input parameter {name}")
                        } else {
                            format!("undeclared identifier {name}")
                        };
                        self.errors.push(Diagnostic::error(pos, msg));
                        0
                    }
                };
                Ok(Stmt::Assign { target, value })
            }
            _ => Err(self.unexpected("statement")),
        }
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        self.expect(TokenKind::If)?;
        self.expect(TokenKind::LParen)?;
        let cond = self.expr()?;
        self.expect(TokenKind::RParen)?;
        let then_body = self.block()?;
        let else_body = if self.eat(&TokenKind::Else) {
            if *self.peek() == TokenKind::If {
                Some(vec![self.if_stmt()?])
            } else {
                Some(self.block()?)
            }
        } else {
            None
        };
        Ok(Stmt::If { cond, then_body, else_body })
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.eat(&TokenKind::OrOr) {
            let rhs = self.and_expr()?;
            lhs = Expr::binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.cmp_expr()?;
        while self.eat(&TokenKind::AndAnd) {
            let rhs = self.cmp_expr()?;
            lhs = Expr::binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn cmp_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.add_expr()?;
        loop {
            let op = match self.peek() {
                TokenKind::EqEq => BinOp::Eq,
                TokenKind::NotEq => BinOp::Ne,
                TokenKind::Lt => BinOp::Lt,
                TokenKind::Le => BinOp::Le,
                TokenKind::Gt => BinOp::Gt,
                TokenKind::Ge => BinOp::Ge,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.add_expr()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn add_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                TokenKind::Plus => BinOp::Add,
                TokenKind::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.mul_expr()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn mul_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while self.eat(&TokenKind::Star) {
            let rhs = self.unary()?;
            lhs = Expr::binary(BinOp::Mul, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        match self.peek() {
            TokenKind::Minus if matches!(self.peek_at(1), TokenKind::Int(_)) => {
                Ok(Expr::Int(self.signed_int()?))
            }
            TokenKind::Minus => {
                self.bump();
                Ok(Expr::unary(UnOp::Neg, self.unary()?))
            }
            TokenKind::Bang => {
                self.bump();
                Ok(Expr::unary(UnOp::Not, self.unary()?))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            TokenKind::Int(_) => Ok(Expr::Int(self.signed_int()?)),
            TokenKind::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(e)
            }
            TokenKind::Ident(_) => {
                let (name, pos) = self.ident()?;
                if self.input_name.as_deref() == Some(name.as_str()) {
                    Ok(Expr::Input)
                } else if let Some(idx) = self.globals.iter().position(|g| g.name == name) {
                    Ok(Expr::Global(idx))
                } else {
                    self.errors.push(Diagnostic::error(pos, format!("undeclared identifier {name}")));
                    Ok(Expr::Int(0))
                }
            }
            _ => Err(self.unexpected("expression")),
        }
    }
}

fn apply_sign(mag: u64, negative: bool) -> Option<i64> {
    if negative {
        if mag == 1u64 << 63 {
            Some(i64::MIN)
        } else {
            i64::try_from(mag).ok().map(|v| -v)
        }
    } else {
        i64::try_from(mag).ok()
    }
}

fn always_terminates(stmt: &Stmt) -> bool {
    match stmt {
        Stmt::Error(_) | Stmt::Reject => true,
        Stmt::If { then_body, else_body: Some(else_body), .. } => {
            then_body.iter().any(always_terminates) && else_body.iter().any(always_terminates)
        }
        _ => false,
    }
}
