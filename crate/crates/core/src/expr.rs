//! Expression language for user-defined dynamics, disturbances, and
//! reference signals.
//!
//! Sources are plain text like `0.5*sin(pi/2*t)` or
//! `pw(t <= 6, 0.5*sin(pi/2*t), t <= 9, sin(pi*t), cos(pi*t) - 1)`.
//! Available names: the time variable `t`, state variables `x1..xn` (the
//! admissible `n` is fixed at parse time; `n = 0` makes an expression
//! time-only), the constant `pi`, unary functions `sin cos tan exp ln sqrt
//! abs sign`, binary functions `min max`, and the piecewise form
//! `pw(cond1, v1, ..., condk, vk, default)` whose conditions are tried in
//! order (first match wins) and whose branches are evaluated lazily.
//! Comparisons (`<`, `<=`, `>`, `>=`) exist only inside `pw` conditions.
//!
//! `^` is right-associative and binds tighter than `*`/`/`; unary minus
//! binds tighter still, so `-2^2` is `(-2)^2 = 4` — parenthesize when in
//! doubt. Evaluation is in `f64` and deterministic. `ln`/`sqrt` of negative
//! arguments and division by an exact zero are reported as errors naming
//! the offending subexpression; other IEEE edge cases (overflow to
//! infinity, `0^0 = 1`, `ln(0) = -inf`) follow `f64` semantics and are left
//! to the simulation layer's finiteness checks.

mod lexer;
mod parser;

use std::fmt;

use crate::surface::sign;

/// Binary arithmetic operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// One-argument functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func1 {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Sign,
}

/// Two-argument functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func2 {
    Min,
    Max,
}

/// Comparison operators, legal only in `pw` conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelOp {
    Lt,
    Le,
    Gt,
    Ge,
}

/// A `pw` condition: `lhs op rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cond {
    pub lhs: Expr,
    pub op: RelOp,
    pub rhs: Expr,
}

/// Parsed expression tree. Structural equality (`PartialEq`) is what the
/// pretty-print/parse round-trip preserves; parser output never contains
/// negative number literals (negation is an explicit [`Expr::Neg`] node).
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Time,
    /// 1-based state variable index (`x1` is the output).
    State(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call1(Func1, Box<Expr>),
    Call2(Func2, Box<Expr>, Box<Expr>),
    Piecewise {
        arms: Vec<(Cond, Expr)>,
        default: Box<Expr>,
    },
}

/// Variable bindings for one evaluation.
#[derive(Debug, Clone, Copy)]
pub struct EvalContext<'a> {
    pub t: f64,
    pub x: &'a [f64],
}

/// Syntax error with a 1-based source position.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(line: u32, col: u32, message: impl Into<String>) -> Self {
        ParseError {
            line,
            col,
            message: message.into(),
        }
    }
}

/// Runtime evaluation failure.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero in `{subexpr}`")]
    DivisionByZero { subexpr: String },
    #[error("{func}({arg}) is undefined (negative argument) in `{subexpr}`")]
    Domain {
        func: &'static str,
        arg: f64,
        subexpr: String,
    },
    #[error("state variable x{index} out of range (state vector has {len} entries)")]
    StateOutOfRange { index: usize, len: usize },
}

/// Parses `source` with state variables `x1..x{order}` admissible
/// (`order = 0` for time-only expressions).
pub fn parse(source: &str, order: usize) -> Result<Expr, ParseError> {
    parser::parse(source, order)
}

impl Expr {
    pub fn eval(&self, ctx: &EvalContext) -> Result<f64, EvalError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Pi => Ok(std::f64::consts::PI),
            Expr::Time => Ok(ctx.t),
            Expr::State(index) => ctx
                .x
                .get(index - 1)
                .copied()
                .ok_or(EvalError::StateOutOfRange {
                    index: *index,
                    len: ctx.x.len(),
                }),
            Expr::Neg(inner) => Ok(-inner.eval(ctx)?),
            Expr::Bin(op, lhs, rhs) => {
                let a = lhs.eval(ctx)?;
                let b = rhs.eval(ctx)?;
                match op {
                    BinOp::Add => Ok(a + b),
                    BinOp::Sub => Ok(a - b),
                    BinOp::Mul => Ok(a * b),
                    BinOp::Div => {
                        if b == 0.0 {
                            Err(EvalError::DivisionByZero {
                                subexpr: self.pretty(),
                            })
                        } else {
                            Ok(a / b)
                        }
                    }
                    BinOp::Pow => Ok(a.powf(b)),
                }
            }
            Expr::Call1(f, arg) => {
                let v = arg.eval(ctx)?;
                match f {
                    Func1::Sin => Ok(v.sin()),
                    Func1::Cos => Ok(v.cos()),
                    Func1::Tan => Ok(v.tan()),
                    Func1::Exp => Ok(v.exp()),
                    Func1::Ln => {
                        if v < 0.0 {
                            Err(EvalError::Domain {
                                func: "ln",
                                arg: v,
                                subexpr: self.pretty(),
                            })
                        } else {
                            Ok(v.ln())
                        }
                    }
                    Func1::Sqrt => {
                        if v < 0.0 {
                            Err(EvalError::Domain {
                                func: "sqrt",
                                arg: v,
                                subexpr: self.pretty(),
                            })
                        } else {
                            Ok(v.sqrt())
                        }
                    }
                    Func1::Abs => Ok(v.abs()),
                    Func1::Sign => Ok(f64::from(sign(v))),
                }
            }
            Expr::Call2(f, a, b) => {
                let a = a.eval(ctx)?;
                let b = b.eval(ctx)?;
                match f {
                    Func2::Min => Ok(a.min(b)),
                    Func2::Max => Ok(a.max(b)),
                }
            }
            Expr::Piecewise { arms, default } => {
                for (cond, value) in arms {
                    if cond.holds(ctx)? {
                        return value.eval(ctx);
                    }
                }
                default.eval(ctx)
            }
        }
    }

    /// Canonical text form: every operator application fully parenthesized,
    /// so the output reparses to a structurally identical tree.
    pub fn pretty(&self) -> String {
        self.to_string()
    }
}

impl Cond {
    pub fn holds(&self, ctx: &EvalContext) -> Result<bool, EvalError> {
        let a = self.lhs.eval(ctx)?;
        let b = self.rhs.eval(ctx)?;
        Ok(match self.op {
            RelOp::Lt => a < b,
            RelOp::Le => a <= b,
            RelOp::Gt => a > b,
            RelOp::Ge => a >= b,
        })
    }
}

impl fmt::Display for BinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        })
    }
}

impl fmt::Display for RelOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Gt => ">",
            RelOp::Ge => ">=",
        })
    }
}

impl Func1 {
    fn name(self) -> &'static str {
        match self {
            Func1::Sin => "sin",
            Func1::Cos => "cos",
            Func1::Tan => "tan",
            Func1::Exp => "exp",
            Func1::Ln => "ln",
            Func1::Sqrt => "sqrt",
            Func1::Abs => "abs",
            Func1::Sign => "sign",
        }
    }
}

impl Func2 {
    fn name(self) -> &'static str {
        match self {
            Func2::Min => "min",
            Func2::Max => "max",
        }
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.op, self.rhs)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Pi => f.write_str("pi"),
            Expr::Time => f.write_str("t"),
            Expr::State(i) => write!(f, "x{i}"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, a, b) => write!(f, "({a} {op} {b})"),
            Expr::Call1(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Call2(func, a, b) => write!(f, "{}({a}, {b})", func.name()),
            Expr::Piecewise { arms, default } => {
                f.write_str("pw(")?;
                for (cond, value) in arms {
                    write!(f, "{cond}, {value}, ")?;
                }
                write!(f, "{default})")
            }
        }
    }
}
