//! Abstract syntax for RRP programs.
//!
//! Identifiers are resolved during parsing: globals become indices into
//! [`Program::globals`] and the step parameter becomes [`Expr::Input`].

use std::collections::BTreeSet;
use std::fmt;

/// Maximum number of input symbols a program may declare.
pub const MAX_ALPHABET: u64 = 4096;

/// Inclusive range of input symbols accepted by a program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Alphabet {
    pub lo: i64,
    pub hi: i64,
}

impl Alphabet {
    pub fn new(lo: i64, hi: i64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, symbol: i64) -> bool {
        self.lo <= symbol && symbol <= self.hi
    }

    pub fn len(&self) -> u64 {
        if self.hi < self.lo {
            0
        } else {
            (self.hi as i128 - self.lo as i128 + 1) as u64
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn symbols(&self) -> impl Iterator<Item = i64> + Clone {
        self.lo..=self.hi
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Global {
    pub name: String,
    pub init: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(i64),
    Global(usize),
    Input,
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn unary(op: UnOp, operand: Expr) -> Self {
        Expr::Unary(op, Box::new(operand))
    }

    /// Evaluates with wrapping signed 64-bit arithmetic. Comparisons and
    /// logical operators yield 0 or 1; any nonzero value is true.
    pub fn eval(&self, globals: &[i64], input: i64) -> i64 {
        match self {
            Expr::Int(v) => *v,
            Expr::Global(g) => globals[*g],
            Expr::Input => input,
            Expr::Unary(UnOp::Neg, e) => e.eval(globals, input).wrapping_neg(),
            Expr::Unary(UnOp::Not, e) => (e.eval(globals, input) == 0) as i64,
            Expr::Binary(op, l, r) => {
                let a = l.eval(globals, input);
                match op {
                    BinOp::And => (a != 0 && r.eval(globals, input) != 0) as i64,
                    BinOp::Or => (a != 0 || r.eval(globals, input) != 0) as i64,
                    _ => {
                        let b = r.eval(globals, input);
                        match op {
                            BinOp::Add => a.wrapping_add(b),
                            BinOp::Sub => a.wrapping_sub(b),
                            BinOp::Mul => a.wrapping_mul(b),
                            BinOp::Eq => (a == b) as i64,
                            BinOp::Ne => (a != b) as i64,
                            BinOp::Lt => (a < b) as i64,
                            BinOp::Le => (a <= b) as i64,
                            BinOp::Gt => (a > b) as i64,
                            BinOp::Ge => (a >= b) as i64,
                            BinOp::And | BinOp::Or => unreachable!(),
                        }
                    }
                }
            }
        }
    }

    pub fn references_input(&self) -> bool {
        match self {
            Expr::Input => true,
            Expr::Int(_) | Expr::Global(_) => false,
            Expr::Unary(_, e) => e.references_input(),
            Expr::Binary(_, l, r) => l.references_input() || r.references_input(),
        }
    }

    /// Value of the expression if it mentions no variables.
    pub fn const_value(&self) -> Option<i64> {
        match self {
            Expr::Int(v) => Some(*v),
            Expr::Global(_) | Expr::Input => None,
            Expr::Unary(..) | Expr::Binary(..) => {
                if self.is_closed() {
                    Some(self.eval(&[], 0))
                } else {
                    None
                }
            }
        }
    }

    fn is_closed(&self) -> bool {
        match self {
            Expr::Int(_) => true,
            Expr::Global(_) | Expr::Input => false,
            Expr::Unary(_, e) => e.is_closed(),
            Expr::Binary(_, l, r) => l.is_closed() && r.is_closed(),
        }
    }

    /// Pre-order traversal over this expression and all subexpressions.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Unary(_, e) => e.walk(f),
            Expr::Binary(_, l, r) => {
                l.walk(f);
                r.walk(f);
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Stmt {
    Assign { target: usize, value: Expr },
    If { cond: Expr, then_body: Vec<Stmt>, else_body: Option<Vec<Stmt>> },
    Emit(i64),
    Error(i64),
    Reject,
}

/// Visits every statement of a body, depth first, in source order.
pub fn walk_stmts<'a>(body: &'a [Stmt], f: &mut impl FnMut(&'a Stmt)) {
    for stmt in body {
        f(stmt);
        if let Stmt::If { then_body, else_body, .. } = stmt {
            walk_stmts(then_body, f);
            if let Some(else_body) = else_body {
                walk_stmts(else_body, f);
            }
        }
    }
}

/// A parsed and validated reactive program.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Program {
    pub alphabet: Alphabet,
    pub globals: Vec<Global>,
    pub input_name: String,
    pub body: Vec<Stmt>,
}

impl Program {
    pub fn initial_state(&self) -> Vec<i64> {
        self.globals.iter().map(|g| g.init).collect()
    }

    pub fn global_index(&self, name: &str) -> Option<usize> {
        self.globals.iter().position(|g| g.name == name)
    }

    /// Ids of all `error k;` statements, deduplicated.
    pub fn error_ids(&self) -> BTreeSet<i64> {
        let mut ids = BTreeSet::new();
        walk_stmts(&self.body, &mut |s| {
            if let Stmt::Error(k) = s {
                ids.insert(*k);
            }
        });
        ids
    }

    /// Every expression in the body: assignment values and branch conditions.
    pub fn expressions(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        walk_stmts(&self.body, &mut |s| match s {
            Stmt::Assign { value, .. } => out.push(value),
            Stmt::If { cond, .. } => out.push(cond),
            _ => {}
        });
        out
    }
}

pub fn list_error_ids(program: &Program) -> BTreeSet<i64> {
    program.error_ids()
}
