//! Scalar expressions over named coordinates.
//!
//! An [`Expression`] is parsed once from text and then evaluated either as a
//! plain real number ([`Expression::eval`]) or as a dual number carrying the
//! full gradient ([`Expression::eval_dual`]). Coordinates are written as a
//! prefix followed by a 1-based index, e.g. `x1`, `x2` for fields on the
//! ambient space or `u1`, `u2` for chart parameters.
//!
//! ```
//! use hausdorff::expr::Expression;
//!
//! let e = Expression::parse("x1^2 + x2^2", 2, "x").unwrap();
//! assert_eq!(e.eval(&[3.0, 4.0]).unwrap(), 25.0);
//!
//! let d = e.eval_dual(&[1.0, 2.0]).unwrap();
//! assert_eq!(d.value, 5.0);
//! assert_eq!(d.partials, vec![2.0, 4.0]);
//! ```

mod dual;
mod parse;

use std::fmt;

use thiserror::Error;

pub use dual::DualValue;
pub use parse::ParseError;

/// Named constants. Both are the nearest representable doubles.
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
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

/// Built-in unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

/// Expression tree node. Coordinate indices are stored 0-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Number(f64),
    Coord(usize),
    Const(Constant),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// Evaluation failure, carrying the canonical text of the offending
/// subexpression.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("point has {got} coordinates, expression expects {expected}")]
    Arity { expected: usize, got: usize },
    #[error("domain error in `{subexpr}`: {reason}")]
    Domain { subexpr: String, reason: String },
    #[error("`{subexpr}` is not differentiable here: {reason}")]
    NonDifferentiable { subexpr: String, reason: String },
}

/// A parsed, immutable scalar expression of fixed arity.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    arity: usize,
    prefix: String,
}

impl Expression {
    /// Parses `source` with coordinates `{prefix}1 ..= {prefix}{arity}`.
    ///
    /// An arity of zero is accepted and yields a constant expression.
    pub fn parse(source: &str, arity: usize, prefix: &str) -> Result<Self, ParseError> {
        let root = parse::Parser::new(source, arity, prefix)?.parse()?;
        Ok(Expression {
            root,
            arity,
            prefix: prefix.to_string(),
        })
    }

    /// The constant expression `value`.
    pub fn constant(value: f64, arity: usize, prefix: &str) -> Self {
        Expression {
            root: Node::Number(value),
            arity,
            prefix: prefix.to_string(),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn prefix(&self) -> &str {
        &self.prefix
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Sorted, deduplicated 0-based indices of the coordinates referenced.
    pub fn coordinates(&self) -> Vec<usize> {
        fn walk(n: &Node, out: &mut Vec<usize>) {
            match n {
                Node::Coord(i) => out.push(*i),
                Node::Number(_) | Node::Const(_) => {}
                Node::Neg(a) | Node::Call(_, a) => walk(a, out),
                Node::Binary(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        self.check_arity(point)?;
        self.eval_node(&self.root, point)
    }

    /// Value and exact gradient by forward-mode dual propagation.
    pub fn eval_dual(&self, point: &[f64]) -> Result<DualValue, EvalError> {
        self.check_arity(point)?;
        dual::eval(self, &self.root, point).map(DualValue::from)
    }

    fn check_arity(&self, point: &[f64]) -> Result<(), EvalError> {
        if point.len() != self.arity {
            return Err(EvalError::Arity {
                expected: self.arity,
                got: point.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn render(&self, node: &Node) -> String {
        let mut s = String::new();
        write_node(&mut s, node, &self.prefix).expect("writing to a String cannot fail");
        s
    }

    pub(crate) fn domain_error(&self, node: &Node, reason: impl Into<String>) -> EvalError {
        EvalError::Domain {
            subexpr: self.render(node),
            reason: reason.into(),
        }
    }

    fn eval_node(&self, node: &Node, x: &[f64]) -> Result<f64, EvalError> {
        let v = match node {
            Node::Number(v) => *v,
            Node::Coord(i) => x[*i],
            Node::Const(c) => c.value(),
            Node::Neg(a) => -self.eval_node(a, x)?,
            Node::Binary(op, a, b) => {
                let l = self.eval_node(a, x)?;
                let r = self.eval_node(b, x)?;
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r == 0.0 {
                            return Err(self.domain_error(node, "division by zero"));
                        }
                        l / r
                    }
                    BinOp::Pow => power(l, r).map_err(|why| self.domain_error(node, why))?,
                }
            }
            Node::Call(f, a) => {
                let v = self.eval_node(a, x)?;
                apply(*f, v).map_err(|why| self.domain_error(node, why))?
            }
        };
        if !v.is_finite() {
            return Err(self.domain_error(node, "non-finite result"));
        }
        Ok(v)
    }
}

/// Largest exponent magnitude handled by repeated multiplication.
const MAX_INT_EXPONENT: f64 = 1_048_576.0;

pub(crate) fn integer_exponent(r: f64) -> Option<i32> {
    (r.fract() == 0.0 && r.abs() <= MAX_INT_EXPONENT).then_some(r as i32)
}

pub(crate) fn power(l: f64, r: f64) -> Result<f64, &'static str> {
    if let Some(n) = integer_exponent(r) {
        if l == 0.0 && n < 0 {
            return Err("division by zero");
        }
        return Ok(l.powi(n));
    }
    if l < 0.0 {
        return Err("negative base with non-integer exponent");
    }
    Ok(l.powf(r))
}

pub(crate) fn apply(f: Func, v: f64) -> Result<f64, &'static str> {
    Ok(match f {
        Func::Sin => v.sin(),
        Func::Cos => v.cos(),
        Func::Exp => v.exp(),
        Func::Log => {
            if v <= 0.0 {
                return Err("log of non-positive value");
            }
            v.ln()
        }
        Func::Sqrt => {
            if v < 0.0 {
                return Err("sqrt of negative value");
            }
            v.sqrt()
        }
        Func::Abs => v.abs(),
    })
}

/// Canonical form: every compound node is parenthesized, numbers use the
/// shortest round-tripping representation.
fn write_node(out: &mut impl fmt::Write, node: &Node, prefix: &str) -> fmt::Result {
    match node {
        Node::Number(v) => write!(out, "{v:?}"),
        Node::Coord(i) => write!(out, "{prefix}{}", i + 1),
        Node::Const(Constant::Pi) => out.write_str("pi"),
        Node::Const(Constant::E) => out.write_str("e"),
        Node::Neg(a) => {
            out.write_str("(-")?;
            write_node(out, a, prefix)?;
            out.write_char(')')
        }
        Node::Binary(op, a, b) => {
            out.write_char('(')?;
            write_node(out, a, prefix)?;
            write!(out, " {} ", op.symbol())?;
            write_node(out, b, prefix)?;
            out.write_char(')')
        }
        Node::Call(f, a) => {
            write!(out, "{}(", f.name())?;
            write_node(out, a, prefix)?;
            out.write_char(')')
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.root, &self.prefix)
    }
}
