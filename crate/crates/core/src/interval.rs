//! Interval abstract interpretation of the reactive step.
//!
//! The analysis bounds every global at step boundaries and collects the
//! literals the input parameter is compared against. Those literals seed the
//! weighted symbol pool that mutation draws from.
//!
//! Bounds are extended integers. Finite bounds are exact `i64` values; when an
//! operation on finite bounds leaves the `i64` range the concrete result
//! wraps, so the abstract result goes to top.

use std::collections::BTreeSet;
use std::fmt;

use crate::frontend::{Alphabet, BinOp, Expr, Program, Stmt, UnOp};

const NEG_INF: i128 = i128::MIN;
const POS_INF: i128 = i128::MAX;
const I64_LO: i128 = i64::MIN as i128;
const I64_HI: i128 = i64::MAX as i128;

pub const DEFAULT_WIDEN_AFTER: usize = 3;
pub const DEFAULT_CONST_WEIGHT: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bound {
    NegInf,
    Finite(i64),
    PosInf,
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::NegInf => f.write_str("-inf"),
            Bound::Finite(v) => write!(f, "{v}"),
            Bound::PosInf => f.write_str("+inf"),
        }
    }
}

/// A closed interval over extended integers, or the empty interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: i128,
    hi: i128,
}

impl Interval {
    pub const EMPTY: Interval = Interval { lo: POS_INF, hi: NEG_INF };
    pub const TOP: Interval = Interval { lo: NEG_INF, hi: POS_INF };
    const BOOL: Interval = Interval { lo: 0, hi: 1 };
    const FALSE: Interval = Interval { lo: 0, hi: 0 };
    const TRUE: Interval = Interval { lo: 1, hi: 1 };

    pub fn new(lo: i64, hi: i64) -> Self {
        Self::raw(lo as i128, hi as i128)
    }

    pub fn point(v: i64) -> Self {
        Self::new(v, v)
    }

    pub fn from_bounds(lo: Bound, hi: Bound) -> Self {
        let conv = |b: Bound| match b {
            Bound::NegInf => NEG_INF,
            Bound::Finite(v) => v as i128,
            Bound::PosInf => POS_INF,
        };
        Self::raw(conv(lo), conv(hi))
    }

    fn raw(lo: i128, hi: i128) -> Self {
        if lo > hi {
            Self::EMPTY
        } else {
            Interval { lo, hi }
        }
    }

    /// Builds the result of an arithmetic operation; finite bounds outside
    /// the `i64` range mean the concrete operation may wrap.
    fn arith(lo: i128, hi: i128) -> Self {
        let out_of_range = |b: i128| b != NEG_INF && b != POS_INF && !(I64_LO..=I64_HI).contains(&b);
        if out_of_range(lo) || out_of_range(hi) {
            Self::TOP
        } else {
            Self::raw(lo, hi)
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn lo(&self) -> Bound {
        to_bound(self.lo)
    }

    pub fn hi(&self) -> Bound {
        to_bound(self.hi)
    }

    pub fn contains(&self, v: i64) -> bool {
        self.lo <= v as i128 && v as i128 <= self.hi
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        self.is_empty() || (other.lo <= self.lo && self.hi <= other.hi)
    }

    fn as_point(&self) -> Option<i128> {
        (self.lo == self.hi && self.lo != NEG_INF && self.lo != POS_INF).then_some(self.lo)
    }

    pub fn join(&self, other: &Interval) -> Interval {
        if self.is_empty() {
            *other
        } else if other.is_empty() {
            *self
        } else {
            Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
        }
    }

    pub fn meet(&self, other: &Interval) -> Interval {
        Self::raw(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    /// Unstable bounds jump to infinity.
    pub fn widen(&self, next: &Interval) -> Interval {
        if self.is_empty() {
            return *next;
        }
        if next.is_empty() {
            return *self;
        }
        Interval {
            lo: if next.lo < self.lo { NEG_INF } else { self.lo },
            hi: if next.hi > self.hi { POS_INF } else { self.hi },
        }
    }

    /// Infinite bounds are replaced by the refined iterate's bounds.
    pub fn narrow(&self, next: &Interval) -> Interval {
        if self.is_empty() || next.is_empty() {
            return *self;
        }
        Interval {
            lo: if self.lo == NEG_INF { next.lo } else { self.lo },
            hi: if self.hi == POS_INF { next.hi } else { self.hi },
        }
    }

    pub fn add(&self, other: &Interval) -> Interval {
        if self.is_empty() || other.is_empty() {
            return Self::EMPTY;
        }
        if (self.hi == POS_INF && other.hi == POS_INF) || (self.lo == NEG_INF && other.lo == NEG_INF) {
            // Two unbounded operands can grow geometrically (x = x + x) and wrap.
            return Self::TOP;
        }
        let lo = if self.lo == NEG_INF || other.lo == NEG_INF { NEG_INF } else { self.lo + other.lo };
        let hi = if self.hi == POS_INF || other.hi == POS_INF { POS_INF } else { self.hi + other.hi };
        Self::arith(lo, hi)
    }

    pub fn neg(&self) -> Interval {
        if self.is_empty() {
            return Self::EMPTY;
        }
        let flip = |b: i128| match b {
            NEG_INF => POS_INF,
            POS_INF => NEG_INF,
            v => -v,
        };
        Self::arith(flip(self.hi), flip(self.lo))
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        if self.is_empty() || other.is_empty() {
            return Self::EMPTY;
        }
        let unbounded = |i: &Interval| i.lo == NEG_INF || i.hi == POS_INF;
        if unbounded(self) || unbounded(other) {
            let (fin, any) = if unbounded(self) { (other, self) } else { (self, other) };
            return match fin.as_point() {
                Some(0) => Self::FALSE,
                Some(1) => *any,
                Some(-1) => any.neg(),
                _ => Self::TOP,
            };
        }
        let products = [self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi];
        Self::arith(*products.iter().min().unwrap(), *products.iter().max().unwrap())
    }

    fn truthiness(&self) -> Interval {
        if self.is_empty() {
            Self::EMPTY
        } else if *self == Self::FALSE {
            Self::FALSE
        } else if !self.contains(0) {
            Self::TRUE
        } else {
            Self::BOOL
        }
    }

    fn compare(op: BinOp, a: &Interval, b: &Interval) -> Interval {
        if a.is_empty() || b.is_empty() {
            return Self::EMPTY;
        }
        let (always, never) = match op {
            BinOp::Eq => (a.as_point().is_some() && a.as_point() == b.as_point(), a.meet(b).is_empty()),
            BinOp::Ne => (a.meet(b).is_empty(), a.as_point().is_some() && a.as_point() == b.as_point()),
            BinOp::Lt => (a.hi < b.lo, a.lo >= b.hi),
            BinOp::Le => (a.hi <= b.lo, a.lo > b.hi),
            BinOp::Gt => (a.lo > b.hi, a.hi <= b.lo),
            BinOp::Ge => (a.lo >= b.hi, a.hi < b.lo),
            _ => unreachable!("not a comparison"),
        };
        if always {
            Self::TRUE
        } else if never {
            Self::FALSE
        } else {
            Self::BOOL
        }
    }
}

fn to_bound(b: i128) -> Bound {
    match b {
        NEG_INF => Bound::NegInf,
        POS_INF => Bound::PosInf,
        v => Bound::Finite(v as i64),
    }
}

fn dec(b: i128) -> i128 {
    if b == NEG_INF || b == POS_INF {
        b
    } else {
        b - 1
    }
}

fn inc(b: i128) -> i128 {
    if b == NEG_INF || b == POS_INF {
        b
    } else {
        b + 1
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("empty");
        }
        let open_lo = if self.lo == NEG_INF { "(" } else { "[" };
        let open_hi = if self.hi == POS_INF { ")" } else { "]" };
        write!(f, "{open_lo}{}, {}{open_hi}", self.lo(), self.hi())
    }
}

/// Abstract environment during one step: globals plus the input parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
struct AbsEnv {
    globals: Vec<Interval>,
    input: Interval,
}

impl AbsEnv {
    fn join(&self, other: &AbsEnv) -> AbsEnv {
        AbsEnv {
            globals: self.globals.iter().zip(&other.globals).map(|(a, b)| a.join(b)).collect(),
            input: self.input.join(&other.input),
        }
    }

    fn eval(&self, expr: &Expr) -> Interval {
        match expr {
            Expr::Int(v) => Interval::point(*v),
            Expr::Global(g) => self.globals[*g],
            Expr::Input => self.input,
            Expr::Unary(UnOp::Neg, e) => self.eval(e).neg(),
            Expr::Unary(UnOp::Not, e) => {
                let t = self.eval(e).truthiness();
                if t == Interval::TRUE {
                    Interval::FALSE
                } else if t == Interval::FALSE {
                    Interval::TRUE
                } else {
                    t
                }
            }
            Expr::Binary(op, l, r) => {
                let (a, b) = (self.eval(l), self.eval(r));
                match op {
                    BinOp::Add => a.add(&b),
                    BinOp::Sub => a.sub(&b),
                    BinOp::Mul => a.mul(&b),
                    BinOp::And | BinOp::Or => {
                        let (ta, tb) = (a.truthiness(), b.truthiness());
                        if ta.is_empty() || tb.is_empty() {
                            Interval::EMPTY
                        } else if *op == BinOp::And {
                            if ta == Interval::FALSE || tb == Interval::FALSE {
                                Interval::FALSE
                            } else if ta == Interval::TRUE && tb == Interval::TRUE {
                                Interval::TRUE
                            } else {
                                Interval::BOOL
                            }
                        } else if ta == Interval::TRUE || tb == Interval::TRUE {
                            Interval::TRUE
                        } else if ta == Interval::FALSE && tb == Interval::FALSE {
                            Interval::FALSE
                        } else {
                            Interval::BOOL
                        }
                    }
                    cmp => Interval::compare(*cmp, &a, &b),
                }
            }
        }
    }

    /// Narrows a variable operand; `false` if it becomes empty.
    fn constrain(&mut self, operand: &Expr, to: Interval) -> bool {
        let slot = match operand {
            Expr::Global(g) => &mut self.globals[*g],
            Expr::Input => &mut self.input,
            _ => return !to.is_empty(),
        };
        *slot = slot.meet(&to);
        !slot.is_empty()
    }

    /// Environment restricted to executions where `cond` evaluates to `want`;
    /// `None` when no such execution exists.
    fn refine(&self, cond: &Expr, want: bool) -> Option<AbsEnv> {
        match cond {
            Expr::Unary(UnOp::Not, e) => self.refine(e, !want),
            Expr::Binary(BinOp::And, a, b) if want => self.refine(a, true)?.refine(b, true),
            Expr::Binary(BinOp::Or, a, b) if !want => self.refine(a, false)?.refine(b, false),
            Expr::Binary(BinOp::And, a, b) => {
                let left = self.refine(a, false);
                let right = self.refine(a, true).and_then(|e| e.refine(b, false));
                join_opt(left, right)
            }
            Expr::Binary(BinOp::Or, a, b) => {
                let left = self.refine(a, true);
                let right = self.refine(a, false).and_then(|e| e.refine(b, true));
                join_opt(left, right)
            }
            Expr::Binary(op, l, r) if op.is_comparison() => {
                let op = if want { *op } else { negate(*op) };
                self.refine_comparison(op, l, r)
            }
            other => {
                let v = self.eval(other);
                let mut env = self.clone();
                let ok = if want {
                    if v == Interval::FALSE || v.is_empty() {
                        return None;
                    }
                    let trimmed = trim_point(&v, 0);
                    env.constrain(other, trimmed)
                } else {
                    env.constrain(other, Interval::FALSE)
                };
                ok.then_some(env)
            }
        }
    }

    fn refine_comparison(&self, op: BinOp, l: &Expr, r: &Expr) -> Option<AbsEnv> {
        let (a, b) = (self.eval(l), self.eval(r));
        if a.is_empty() || b.is_empty() {
            return None;
        }
        let (na, nb) = match op {
            BinOp::Eq => {
                let m = a.meet(&b);
                (m, m)
            }
            BinOp::Ne => {
                let na = b.as_point().map_or(a, |p| trim_point(&a, p));
                let nb = a.as_point().map_or(b, |p| trim_point(&b, p));
                (na, nb)
            }
            BinOp::Lt => (a.meet(&Interval::raw(NEG_INF, dec(b.hi))), b.meet(&Interval::raw(inc(a.lo), POS_INF))),
            BinOp::Le => (a.meet(&Interval::raw(NEG_INF, b.hi)), b.meet(&Interval::raw(a.lo, POS_INF))),
            BinOp::Gt => (a.meet(&Interval::raw(inc(b.lo), POS_INF)), b.meet(&Interval::raw(NEG_INF, dec(a.hi)))),
            BinOp::Ge => (a.meet(&Interval::raw(b.lo, POS_INF)), b.meet(&Interval::raw(NEG_INF, a.hi))),
            _ => unreachable!(),
        };
        let mut env = self.clone();
        (env.constrain(l, na) && env.constrain(r, nb)).then_some(env)
    }
}

fn trim_point(i: &Interval, p: i128) -> Interval {
    if i.lo == p {
        Interval::raw(p + 1, i.hi)
    } else if i.hi == p {
        Interval::raw(i.lo, p - 1)
    } else {
        *i
    }
}

fn negate(op: BinOp) -> BinOp {
    match op {
        BinOp::Eq => BinOp::Ne,
        BinOp::Ne => BinOp::Eq,
        BinOp::Lt => BinOp::Ge,
        BinOp::Le => BinOp::Gt,
        BinOp::Gt => BinOp::Le,
        BinOp::Ge => BinOp::Lt,
        other => other,
    }
}

fn join_opt(a: Option<AbsEnv>, b: Option<AbsEnv>) -> Option<AbsEnv> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.join(&b)),
        (a, b) => a.or(b),
    }
}

fn exec_block(body: &[Stmt], mut env: AbsEnv) -> Option<AbsEnv> {
    for stmt in body {
        match stmt {
            Stmt::Assign { target, value } => {
                let v = env.eval(value);
                if v.is_empty() {
                    return None;
                }
                env.globals[*target] = v;
            }
            Stmt::Emit(_) => {}
            Stmt::Error(_) | Stmt::Reject => return None,
            Stmt::If { cond, then_body, else_body } => {
                let then_out = env.refine(cond, true).and_then(|e| exec_block(then_body, e));
                let else_out = env
                    .refine(cond, false)
                    .and_then(|e| exec_block(else_body.as_deref().unwrap_or(&[]), e));
                env = join_opt(then_out, else_out)?;
            }
        }
    }
    Some(env)
}

/// Post-state of one abstract step from the given global bounds, with the
/// input ranging over the alphabet. `None` when no step completes normally.
pub fn abstract_step(program: &Program, globals: &[Interval]) -> Option<Vec<Interval>> {
    let input = Interval::new(program.alphabet.lo, program.alphabet.hi);
    exec_block(&program.body, AbsEnv { globals: globals.to_vec(), input }).map(|e| e.globals)
}

fn initial_bounds(program: &Program) -> Vec<Interval> {
    program.globals.iter().map(|g| Interval::point(g.init)).collect()
}

/// One application of `X ↦ init ⊔ step(X)`.
pub fn propagate(program: &Program, bounds: &[Interval]) -> Vec<Interval> {
    let init = initial_bounds(program);
    let stepped = abstract_step(program, bounds);
    let mut out: Vec<Interval> = match &stepped {
        Some(s) => init.iter().zip(s).map(|(a, b)| a.join(b)).collect(),
        None => init,
    };
    for (o, b) in out.iter_mut().zip(bounds) {
        *o = o.join(b);
    }
    out
}

/// True when one more propagation step changes nothing.
pub fn is_stable(program: &Program, bounds: &[Interval]) -> bool {
    propagate(program, bounds) == bounds
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalysisConfig {
    pub widen_after: usize,
    pub const_weight: u32,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { widen_after: DEFAULT_WIDEN_AFTER, const_weight: DEFAULT_CONST_WEIGHT }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalSummary {
    /// Step-boundary invariant per global, in declaration order.
    pub global_bounds: Vec<Interval>,
    pub input_constants: BTreeSet<i64>,
    /// `(symbol, weight)` in ascending symbol order.
    pub value_pool: Vec<(i64, u32)>,
    pub iterations: usize,
}

impl IntervalSummary {
    pub fn bound_of(&self, program: &Program, name: &str) -> Option<Interval> {
        program.global_index(name).map(|i| self.global_bounds[i])
    }
}

pub fn analyze(program: &Program) -> IntervalSummary {
    analyze_with(program, AnalysisConfig::default())
}

pub fn analyze_with(program: &Program, config: AnalysisConfig) -> IntervalSummary {
    let init = initial_bounds(program);
    let mut bounds = init.clone();
    let mut unstable = 0;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let next = propagate(program, &bounds);
        if next == bounds {
            break;
        }
        unstable += 1;
        bounds = if unstable > config.widen_after {
            bounds.iter().zip(&next).map(|(a, b)| a.widen(b)).collect()
        } else {
            next
        };
    }
    // Single narrowing pass.
    let refined = propagate_fresh(program, &bounds);
    bounds = bounds.iter().zip(&refined).map(|(a, b)| a.narrow(b)).collect();

    let input_constants = input_constants(program);
    let value_pool = weighted_pool(&input_constants, program.alphabet, config.const_weight);
    IntervalSummary { global_bounds: bounds, input_constants, value_pool, iterations }
}

/// `init ⊔ step(X)` without re-joining `X`, used for the narrowing pass.
fn propagate_fresh(program: &Program, bounds: &[Interval]) -> Vec<Interval> {
    let init = initial_bounds(program);
    match abstract_step(program, bounds) {
        Some(s) => init.iter().zip(&s).map(|(a, b)| a.join(b)).collect(),
        None => init,
    }
}

/// Literals compared against any expression mentioning the input parameter.
pub fn input_constants(program: &Program) -> BTreeSet<i64> {
    let mut out = BTreeSet::new();
    for expr in program.expressions() {
        expr.walk(&mut |e| {
            if let Expr::Binary(op, l, r) = e {
                if op.is_comparison() {
                    if l.references_input() {
                        out.extend(r.const_value());
                    }
                    if r.references_input() {
                        out.extend(l.const_value());
                    }
                }
            }
        });
    }
    out
}

pub fn input_value_pool(summary: &IntervalSummary, alphabet: Alphabet) -> Vec<(i64, u32)> {
    weighted_pool(&summary.input_constants, alphabet, DEFAULT_CONST_WEIGHT)
}

/// Every alphabet symbol with weight 1; compared constants and their
/// neighbours, clamped to the alphabet, get `const_weight`.
pub fn weighted_pool(constants: &BTreeSet<i64>, alphabet: Alphabet, const_weight: u32) -> Vec<(i64, u32)> {
    let mut pool: Vec<(i64, u32)> = alphabet.symbols().map(|s| (s, 1)).collect();
    for &c in constants {
        for v in [c.checked_sub(1), Some(c), c.checked_add(1)].into_iter().flatten() {
            if alphabet.contains(v) {
                pool[(v - alphabet.lo) as usize].1 = const_weight;
            }
        }
    }
    pool
}
