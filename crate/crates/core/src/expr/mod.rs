//! The expression language used to define spray components and Christoffel
//! entries.
//!
//! Expressions are immutable trees over chart coordinates `x1..xn` and fiber
//! coordinates `y1..yn`. Subtrees are reference counted so that symbolic
//! differentiation can share operands instead of deep-copying them.

pub(crate) mod diff;
mod eval;
mod parse;
mod print;

use std::sync::Arc;

pub use eval::{DomainKind, EvalError};
pub use parse::{parse, ParseError};

/// Which half of the tangent-bundle coordinates a variable refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    /// Chart coordinate `x_i`.
    Chart,
    /// Fiber coordinate `y_i` (the velocity / vector argument).
    Fiber,
}

/// A variable reference with a 1-based index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var {
    pub kind: VarKind,
    pub index: usize,
}

impl Var {
    pub fn x(index: usize) -> Self {
        Var {
            kind: VarKind::Chart,
            index,
        }
    }

    pub fn y(index: usize) -> Self {
        Var {
            kind: VarKind::Fiber,
            index,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    pub fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Tan,
    Atan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Sinh,
    Cosh,
    Tanh,
    /// Sign function with `sign(0) = 0`. Produced by differentiating `abs`.
    Sign,
}

impl UnaryOp {
    pub(crate) const FUNCTIONS: [(&'static str, UnaryOp); 12] = [
        ("sin", UnaryOp::Sin),
        ("cos", UnaryOp::Cos),
        ("tan", UnaryOp::Tan),
        ("atan", UnaryOp::Atan),
        ("exp", UnaryOp::Exp),
        ("log", UnaryOp::Log),
        ("sqrt", UnaryOp::Sqrt),
        ("abs", UnaryOp::Abs),
        ("sinh", UnaryOp::Sinh),
        ("cosh", UnaryOp::Cosh),
        ("tanh", UnaryOp::Tanh),
        ("sign", UnaryOp::Sign),
    ];

    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            other => {
                UnaryOp::FUNCTIONS
                    .iter()
                    .find(|(_, op)| *op == other)
                    .map(|(name, _)| *name)
                    .unwrap_or("?")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }
}

/// An expression tree node.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Const(Constant),
    Var(Var),
    Unary(UnaryOp, Arc<Expr>),
    Binary(BinaryOp, Arc<Expr>, Arc<Expr>),
}

impl Expr {
    pub fn num(value: f64) -> Self {
        Expr::Num(value)
    }

    pub fn x(index: usize) -> Self {
        Expr::Var(Var::x(index))
    }

    pub fn y(index: usize) -> Self {
        Expr::Var(Var::y(index))
    }

    pub fn unary(op: UnaryOp, arg: Expr) -> Self {
        Expr::Unary(op, Arc::new(arg))
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary(op, Arc::new(lhs), Arc::new(rhs))
    }

    pub fn add(lhs: Expr, rhs: Expr) -> Self {
        Expr::binary(BinaryOp::Add, lhs, rhs)
    }

    pub fn sub(lhs: Expr, rhs: Expr) -> Self {
        Expr::binary(BinaryOp::Sub, lhs, rhs)
    }

    pub fn mul(lhs: Expr, rhs: Expr) -> Self {
        Expr::binary(BinaryOp::Mul, lhs, rhs)
    }

    pub fn div(lhs: Expr, rhs: Expr) -> Self {
        Expr::binary(BinaryOp::Div, lhs, rhs)
    }

    pub fn pow(lhs: Expr, rhs: Expr) -> Self {
        Expr::binary(BinaryOp::Pow, lhs, rhs)
    }

    pub fn neg(arg: Expr) -> Self {
        Expr::unary(UnaryOp::Neg, arg)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }

    /// Whether `var` occurs anywhere in the tree.
    pub fn depends_on(&self, var: Var) -> bool {
        match self {
            Expr::Num(_) | Expr::Const(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Unary(_, a) => a.depends_on(var),
            Expr::Binary(_, a, b) => a.depends_on(var) || b.depends_on(var),
        }
    }

    /// Whether any fiber variable occurs in the tree.
    pub fn uses_fiber(&self) -> bool {
        self.max_index(VarKind::Fiber) > 0
    }

    /// Largest index of the given variable kind, or 0 if none occurs.
    pub fn max_index(&self, kind: VarKind) -> usize {
        match self {
            Expr::Num(_) | Expr::Const(_) => 0,
            Expr::Var(v) if v.kind == kind => v.index,
            Expr::Var(_) => 0,
            Expr::Unary(_, a) => a.max_index(kind),
            Expr::Binary(_, a, b) => a.max_index(kind).max(b.max_index(kind)),
        }
    }

    /// Check that every variable index lies in `1..=dimension`.
    pub fn fits_dimension(&self, dimension: usize) -> bool {
        match self {
            Expr::Num(_) | Expr::Const(_) => true,
            Expr::Var(v) => v.index >= 1 && v.index <= dimension,
            Expr::Unary(_, a) => a.fits_dimension(dimension),
            Expr::Binary(_, a, b) => a.fits_dimension(dimension) && b.fits_dimension(dimension),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Unary(_, a) => 1 + a.node_count(),
            Expr::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    /// Replace variables by expressions. `chart[i]` replaces `x{i+1}` and
    /// `fiber[i]` replaces `y{i+1}`; a `None` slice leaves that kind untouched.
    pub fn substitute(&self, chart: Option<&[Expr]>, fiber: Option<&[Expr]>) -> Expr {
        match self {
            Expr::Num(_) | Expr::Const(_) => self.clone(),
            Expr::Var(v) => {
                let table = match v.kind {
                    VarKind::Chart => chart,
                    VarKind::Fiber => fiber,
                };
                match table.and_then(|t| t.get(v.index.wrapping_sub(1))) {
                    Some(replacement) => replacement.clone(),
                    None => self.clone(),
                }
            }
            Expr::Unary(op, a) => Expr::unary(*op, a.substitute(chart, fiber)),
            Expr::Binary(op, a, b) => {
                Expr::binary(*op, a.substitute(chart, fiber), b.substitute(chart, fiber))
            }
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    /// Parses without a dimension bound; indices only need to be positive.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s, usize::MAX)
    }
}
