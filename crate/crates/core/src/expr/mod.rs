//! Closed-form expressions in the coordinate moduli `m0..mn`.
//!
//! Expressions are parsed once and then evaluated, differentiated
//! symbolically, or evaluated as second-order jets. Apart from constant
//! folding in the differentiation constructors no simplification is done.

mod jet;
mod parser;

pub use jet::JetValue;

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Rational exponent in lowest terms with a positive denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rational {
    num: i64,
    den: i64,
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Rational {
    /// Panics if `den == 0`.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        let g = gcd(num, den).max(1);
        let sign = if den < 0 { -1 } else { 1 };
        Self {
            num: sign * num / g,
            den: sign * den / g,
        }
    }

    pub fn integer(num: i64) -> Self {
        Self { num, den: 1 }
    }

    pub fn num(&self) -> i64 {
        self.num
    }

    pub fn den(&self) -> i64 {
        self.den
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    fn minus_one(&self) -> Self {
        Self::new(self.num - self.den, self.den)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Log,
}

impl Func {
    fn name(&self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
        }
    }
}

/// Expression tree node.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Rational),
    Func(Func, Box<Node>),
}

/// A parsed real function of `var_count` moduli.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    var_count: usize,
    root: Node,
}

/// Point in moduli space `(|x_0|, .., |x_n|)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModuliPoint(pub Vec<f64>);

impl ModuliPoint {
    pub fn new(m: Vec<f64>) -> Self {
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.0.iter().all(|&m| m > 0.0 && m.is_finite())
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self(self.0.iter().map(|m| t * m).collect())
    }
}

impl Expression {
    /// Parses `text` as an expression in `m0..m{var_count-1}`.
    pub fn parse(text: &str, var_count: usize) -> Result<Self> {
        let root = parser::parse(text, var_count)?;
        Ok(Self { var_count, root })
    }

    pub fn constant(value: f64, var_count: usize) -> Self {
        Self {
            var_count,
            root: Node::Const(value),
        }
    }

    pub fn from_node(root: Node, var_count: usize) -> Result<Self> {
        if let Some(index) = max_var(&root).filter(|&i| i >= var_count) {
            return Err(Error::VariableOutOfRange { index, var_count });
        }
        Ok(Self { var_count, root })
    }

    pub fn var_count(&self) -> usize {
        self.var_count
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.root, Node::Const(_))
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.var_count {
            return Err(Error::DimensionMismatch {
                expected: self.var_count,
                got: len,
            });
        }
        Ok(())
    }

    pub fn evaluate(&self, p: &[f64]) -> Result<f64> {
        self.check_dim(p.len())?;
        eval_node(&self.root, p)
    }

    pub fn evaluate_at(&self, p: &ModuliPoint) -> Result<f64> {
        self.evaluate(p.as_slice())
    }

    /// Symbolic partial derivative with respect to `m{var}`.
    pub fn differentiate(&self, var: usize) -> Result<Self> {
        if var >= self.var_count {
            return Err(Error::VariableOutOfRange {
                index: var,
                var_count: self.var_count,
            });
        }
        Ok(Self {
            var_count: self.var_count,
            root: diff_node(&self.root, var),
        })
    }

    /// Value, gradient and Hessian at `p`.
    pub fn eval_jet2(&self, p: &[f64]) -> Result<JetValue> {
        self.check_dim(p.len())?;
        jet_node(&self.root, p)
    }

    /// Tests `f(t m) = t^l f(m)` on random strictly positive `m` and
    /// `t ∈ {0.5, 2, 3}`.
    pub fn check_homogeneity(&self, l: f64, samples: usize, tol: f64) -> HomogeneityReport {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
        let mut worst = 0.0f64;
        for _ in 0..samples.max(1) {
            let m: Vec<f64> = (0..self.var_count)
                .map(|_| rng.gen_range(0.2..2.0))
                .collect();
            for &t in &[0.5, 2.0, 3.0] {
                let scaled: Vec<f64> = m.iter().map(|x| t * x).collect();
                let (base, at_scaled) = match (self.evaluate(&m), self.evaluate(&scaled)) {
                    (Ok(a), Ok(b)) => (a, b),
                    (Err(e), _) | (_, Err(e)) => {
                        return HomogeneityReport {
                            passed: false,
                            max_rel_violation: f64::INFINITY,
                            violation: Some(HomogeneityViolation {
                                moduli: m,
                                t,
                                expected: f64::NAN,
                                actual: f64::NAN,
                                message: Some(e.to_string()),
                            }),
                        };
                    }
                };
                let expected = t.powf(l) * base;
                let diff = (at_scaled - expected).abs();
                let rel = if expected != 0.0 {
                    diff / expected.abs()
                } else {
                    diff
                };
                worst = worst.max(rel);
                if !(diff <= tol * expected.abs()) {
                    return HomogeneityReport {
                        passed: false,
                        max_rel_violation: rel,
                        violation: Some(HomogeneityViolation {
                            moduli: m,
                            t,
                            expected,
                            actual: at_scaled,
                            message: None,
                        }),
                    };
                }
            }
        }
        HomogeneityReport {
            passed: true,
            max_rel_violation: worst,
            violation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneityViolation {
    pub moduli: Vec<f64>,
    pub t: f64,
    pub expected: f64,
    pub actual: f64,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneityReport {
    pub passed: bool,
    pub max_rel_violation: f64,
    pub violation: Option<HomogeneityViolation>,
}

fn max_var(node: &Node) -> Option<usize> {
    match node {
        Node::Const(_) => None,
        Node::Var(i) => Some(*i),
        Node::Neg(a) | Node::Pow(a, _) | Node::Func(_, a) => max_var(a),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            max_var(a).max(max_var(b))
        }
    }
}

fn domain_error(node: &Node, reason: &str) -> Error {
    Error::DomainError {
        node: node.to_string(),
        reason: reason.to_string(),
    }
}

/// Real power with the exponent kept rational so odd roots of negative
/// numbers stay real.
fn pow_value(base: f64, e: Rational, node: &Node) -> Result<f64> {
    if e.is_integer() {
        if base == 0.0 && e.num() < 0 {
            return Err(domain_error(node, "zero raised to a negative power"));
        }
        return Ok(match i32::try_from(e.num()) {
            Ok(k) => base.powi(k),
            Err(_) => base.powf(e.num() as f64),
        });
    }
    let r = e.to_f64();
    if base > 0.0 {
        Ok(base.powf(r))
    } else if base == 0.0 {
        if r > 0.0 {
            Ok(0.0)
        } else {
            Err(domain_error(node, "zero raised to a negative power"))
        }
    } else if e.den() % 2 == 1 {
        let magnitude = (-base).powf(r);
        Ok(if e.num() % 2 == 0 {
            magnitude
        } else {
            -magnitude
        })
    } else {
        Err(domain_error(node, "even root of a negative number"))
    }
}

fn eval_node(node: &Node, p: &[f64]) -> Result<f64> {
    Ok(match node {
        Node::Const(c) => *c,
        Node::Var(i) => p[*i],
        Node::Neg(a) => -eval_node(a, p)?,
        Node::Add(a, b) => eval_node(a, p)? + eval_node(b, p)?,
        Node::Sub(a, b) => eval_node(a, p)? - eval_node(b, p)?,
        Node::Mul(a, b) => eval_node(a, p)? * eval_node(b, p)?,
        Node::Div(a, b) => {
            let den = eval_node(b, p)?;
            if den == 0.0 {
                return Err(domain_error(node, "division by zero"));
            }
            eval_node(a, p)? / den
        }
        Node::Pow(a, e) => pow_value(eval_node(a, p)?, *e, node)?,
        Node::Func(f, a) => {
            let x = eval_node(a, p)?;
            match f {
                Func::Sqrt if x < 0.0 => {
                    return Err(domain_error(node, "sqrt of a negative number"))
                }
                Func::Sqrt => x.sqrt(),
                Func::Exp => x.exp(),
                Func::Log if x <= 0.0 => {
                    return Err(domain_error(node, "log of a nonpositive number"))
                }
                Func::Log => x.ln(),
            }
        }
    })
}

fn jet_node(node: &Node, p: &[f64]) -> Result<JetValue> {
    let d = p.len();
    Ok(match node {
        Node::Const(c) => JetValue::constant(*c, d),
        Node::Var(i) => JetValue::variable(p[*i], *i, d),
        Node::Neg(a) => -&jet_node(a, p)?,
        Node::Add(a, b) => &jet_node(a, p)? + &jet_node(b, p)?,
        Node::Sub(a, b) => &jet_node(a, p)? - &jet_node(b, p)?,
        Node::Mul(a, b) => &jet_node(a, p)? * &jet_node(b, p)?,
        Node::Div(a, b) => {
            let den = jet_node(b, p)?;
            if den.value() == 0.0 {
                return Err(domain_error(node, "division by zero"));
            }
            &jet_node(a, p)? / &den
        }
        Node::Pow(a, e) => {
            let base = jet_node(a, p)?;
            let x = base.value();
            let f0 = pow_value(x, *e, node)?;
            let r = e.to_f64();
            if e.is_integer() {
                base.powf(r)
            } else {
                let e1 = e.minus_one();
                let e2 = e1.minus_one();
                if x == 0.0 && (e1.to_f64() < 0.0 || e2.to_f64() < 0.0) {
                    return Err(domain_error(
                        node,
                        "derivative of a fractional power at zero",
                    ));
                }
                let f1 = r * pow_value(x, e1, node)?;
                let f2 = r * e1.to_f64() * pow_value(x, e2, node)?;
                base.chain(f0, f1, f2)
            }
        }
        Node::Func(f, a) => {
            let arg = jet_node(a, p)?;
            let x = arg.value();
            match f {
                Func::Sqrt => {
                    if x <= 0.0 {
                        return Err(domain_error(node, "sqrt jet at a nonpositive argument"));
                    }
                    arg.sqrt()
                }
                Func::Exp => arg.exp(),
                Func::Log => {
                    if x <= 0.0 {
                        return Err(domain_error(node, "log of a nonpositive number"));
                    }
                    arg.ln()
                }
            }
        }
    })
}

// Constructors with constant folding, used by differentiation.

fn c(v: f64) -> Node {
    Node::Const(v)
}

fn add(a: Node, b: Node) -> Node {
    match (a, b) {
        (Node::Const(x), Node::Const(y)) => c(x + y),
        (Node::Const(z), other) | (other, Node::Const(z)) if z == 0.0 => other,
        (a, b) => Node::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Node, b: Node) -> Node {
    match (a, b) {
        (Node::Const(x), Node::Const(y)) => c(x - y),
        (a, Node::Const(0.0)) => a,
        (Node::Const(0.0), b) => neg(b),
        (a, b) => Node::Sub(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Node) -> Node {
    match a {
        Node::Const(x) => c(-x),
        Node::Neg(inner) => *inner,
        other => Node::Neg(Box::new(other)),
    }
}

fn mul(a: Node, b: Node) -> Node {
    match (a, b) {
        (Node::Const(x), Node::Const(y)) => c(x * y),
        (Node::Const(z), _) | (_, Node::Const(z)) if z == 0.0 => c(0.0),
        (Node::Const(o), other) | (other, Node::Const(o)) if o == 1.0 => other,
        (a, b) => Node::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Node, b: Node) -> Node {
    match (a, b) {
        (Node::Const(0.0), _) => c(0.0),
        (a, Node::Const(1.0)) => a,
        (Node::Const(x), Node::Const(y)) if y != 0.0 => c(x / y),
        (a, b) => Node::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Node, e: Rational) -> Node {
    if e.num() == 0 {
        return c(1.0);
    }
    if e == Rational::integer(1) {
        return a;
    }
    match a {
        Node::Const(x) if e.is_integer() && (x != 0.0 || e.num() > 0) => c(x.powi(e.num() as i32)),
        a => Node::Pow(Box::new(a), e),
    }
}

fn diff_node(node: &Node, var: usize) -> Node {
    match node {
        Node::Const(_) => c(0.0),
        Node::Var(i) => c(if *i == var { 1.0 } else { 0.0 }),
        Node::Neg(a) => neg(diff_node(a, var)),
        Node::Add(a, b) => add(diff_node(a, var), diff_node(b, var)),
        Node::Sub(a, b) => sub(diff_node(a, var), diff_node(b, var)),
        Node::Mul(a, b) => add(
            mul(diff_node(a, var), (**b).clone()),
            mul((**a).clone(), diff_node(b, var)),
        ),
        Node::Div(a, b) => {
            let da = diff_node(a, var);
            let db = diff_node(b, var);
            let numerator = sub(mul(da, (**b).clone()), mul((**a).clone(), db));
            div(numerator, pow((**b).clone(), Rational::integer(2)))
        }
        Node::Pow(a, e) => {
            let da = diff_node(a, var);
            if matches!(da, Node::Const(z) if z == 0.0) {
                return c(0.0);
            }
            let coeff = c(e.to_f64());
            mul(mul(coeff, pow((**a).clone(), e.minus_one())), da)
        }
        Node::Func(f, a) => {
            let da = diff_node(a, var);
            if matches!(da, Node::Const(z) if z == 0.0) {
                return c(0.0);
            }
            match f {
                Func::Sqrt => div(da, mul(c(2.0), node.clone())),
                Func::Exp => mul(node.clone(), da),
                Func::Log => div(da, (**a).clone()),
            }
        }
    }
}

// Printing. Precedence: 1 additive, 2 multiplicative, 3 unary minus,
// 4 power, 5 atoms and function calls.

fn precedence(node: &Node) -> u8 {
    match node {
        Node::Add(..) | Node::Sub(..) => 1,
        Node::Mul(..) | Node::Div(..) => 2,
        Node::Neg(_) => 3,
        Node::Const(v) if v.is_sign_negative() => 3,
        Node::Pow(..) => 4,
        Node::Const(_) | Node::Var(_) | Node::Func(..) => 5,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Node, min_prec: u8) -> fmt::Result {
    if precedence(child) < min_prec {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(v) => write!(f, "{v}"),
            Node::Var(i) => write!(f, "m{i}"),
            Node::Neg(a) => {
                write!(f, "-")?;
                write_child(f, a, 3)
            }
            Node::Add(a, b) => {
                write_child(f, a, 1)?;
                write!(f, " + ")?;
                write_child(f, b, 2)
            }
            Node::Sub(a, b) => {
                write_child(f, a, 1)?;
                write!(f, " - ")?;
                write_child(f, b, 2)
            }
            Node::Mul(a, b) => {
                write_child(f, a, 2)?;
                write!(f, "*")?;
                write_child(f, b, 3)
            }
            Node::Div(a, b) => {
                write_child(f, a, 2)?;
                write!(f, "/")?;
                write_child(f, b, 3)
            }
            Node::Pow(a, e) => {
                write_child(f, a, 5)?;
                if e.is_integer() {
                    write!(f, "^{}", e.num())
                } else {
                    write!(f, "^({}/{})", e.num(), e.den())
                }
            }
            Node::Func(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}
