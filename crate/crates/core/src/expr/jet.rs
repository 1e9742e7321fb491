//! Second-order forward-mode jets over a fixed set of variables.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Value, gradient and Hessian of a scalar function at a point.
///
/// The Hessian is stored once per unordered pair `(i, j)`, `i <= j`, so it is
/// symmetric by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct JetValue {
    value: f64,
    grad: Vec<f64>,
    hess: Vec<f64>,
}

#[inline]
fn packed_index(i: usize, j: usize, dim: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    a * dim - a * (a + 1) / 2 + b
}

impl JetValue {
    pub fn constant(value: f64, dim: usize) -> Self {
        Self {
            value,
            grad: vec![0.0; dim],
            hess: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    /// The coordinate function `m_index` evaluated at `value`.
    pub fn variable(value: f64, index: usize, dim: usize) -> Self {
        let mut jet = Self::constant(value, dim);
        jet.grad[index] = 1.0;
        jet
    }

    pub fn from_parts(value: f64, grad: Vec<f64>, hess_full: &[Vec<f64>]) -> Self {
        let dim = grad.len();
        let mut jet = Self::constant(value, dim);
        jet.grad = grad;
        for i in 0..dim {
            for j in i..dim {
                jet.hess[packed_index(i, j, dim)] = hess_full[i][j];
            }
        }
        jet
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn gradient(&self) -> &[f64] {
        &self.grad
    }

    pub fn hessian(&self, i: usize, j: usize) -> f64 {
        self.hess[packed_index(i, j, self.dim())]
    }

    pub fn hessian_matrix(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..d)
            .map(|i| (0..d).map(|j| self.hessian(i, j)).collect())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().all(|h| h.is_finite())
    }

    /// Applies a scalar function given its value and first two derivatives at
    /// `self.value`.
    pub fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self {
        let d = self.dim();
        let mut out = Self::constant(f0, d);
        for i in 0..d {
            out.grad[i] = f1 * self.grad[i];
        }
        for i in 0..d {
            for j in i..d {
                let k = packed_index(i, j, d);
                out.hess[k] = f1 * self.hess[k] + f2 * self.grad[i] * self.grad[j];
            }
        }
        out
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            value: c * self.value,
            grad: self.grad.iter().map(|g| c * g).collect(),
            hess: self.hess.iter().map(|h| c * h).collect(),
        }
    }

    pub fn add_scalar(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.value += c;
        out
    }

    pub fn recip(&self) -> Self {
        let v = self.value;
        self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    /// `self^r` for real `r`; the caller guarantees the base is in the domain.
    pub fn powf(&self, r: f64) -> Self {
        let v = self.value;
        if r == 0.0 {
            return Self::constant(1.0, self.dim());
        }
        if r.fract() == 0.0 && r.abs() < i32::MAX as f64 {
            let n = r as i32;
            let f0 = v.powi(n);
            let f1 = r * v.powi(n - 1);
            let f2 = if n == 1 {
                0.0
            } else {
                r * (r - 1.0) * v.powi(n - 2)
            };
            return self.chain(f0, f1, f2);
        }
        self.chain(
            v.powf(r),
            r * v.powf(r - 1.0),
            r * (r - 1.0) * v.powf(r - 2.0),
        )
    }

    pub fn sqrt(&self) -> Self {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.value))
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> Self {
        let v = self.value;
        self.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
    }

    /// Composes `self`, a jet in variables `y`, with inner jets `y_k(m)`.
    ///
    /// `inner.len()` must equal `self.dim()`; the result is a jet in `m`.
    pub fn compose(&self, inner: &[JetValue]) -> Self {
        assert_eq!(inner.len(), self.dim());
        let d = inner.first().map(|j| j.dim()).unwrap_or(0);
        let mut out = Self::constant(self.value, d);
        for (k, yk) in inner.iter().enumerate() {
            let dk = self.grad[k];
            for i in 0..d {
                out.grad[i] += dk * yk.grad[i];
            }
            for (h, yh) in out.hess.iter_mut().zip(&yk.hess) {
                *h += dk * yh;
            }
        }
        for a in 0..inner.len() {
            for b in 0..inner.len() {
                let hab = self.hessian(a, b);
                if hab == 0.0 {
                    continue;
                }
                for i in 0..d {
                    for j in i..d {
                        out.hess[packed_index(i, j, d)] +=
                            hab * inner[a].grad[i] * inner[b].grad[j];
                    }
                }
            }
        }
        out
    }
}

impl Add for &JetValue {
    type Output = JetValue;
    fn add(self, rhs: &JetValue) -> JetValue {
        JetValue {
            value: self.value + rhs.value,
            grad: self
                .grad
                .iter()
                .zip(&rhs.grad)
                .map(|(a, b)| a + b)
                .collect(),
            hess: self
                .hess
                .iter()
                .zip(&rhs.hess)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &JetValue {
    type Output = JetValue;
    fn sub(self, rhs: &JetValue) -> JetValue {
        JetValue {
            value: self.value - rhs.value,
            grad: self
                .grad
                .iter()
                .zip(&rhs.grad)
                .map(|(a, b)| a - b)
                .collect(),
            hess: self
                .hess
                .iter()
                .zip(&rhs.hess)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &JetValue {
    type Output = JetValue;
    fn mul(self, rhs: &JetValue) -> JetValue {
        let d = self.dim();
        let mut out = JetValue::constant(self.value * rhs.value, d);
        for i in 0..d {
            out.grad[i] = self.grad[i] * rhs.value + self.value * rhs.grad[i];
        }
        for i in 0..d {
            for j in i..d {
                let k = packed_index(i, j, d);
                out.hess[k] = self.hess[k] * rhs.value
                    + self.value * rhs.hess[k]
                    + self.grad[i] * rhs.grad[j]
                    + self.grad[j] * rhs.grad[i];
            }
        }
        out
    }
}

impl Div for &JetValue {
    type Output = JetValue;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: &JetValue) -> JetValue {
        self * &rhs.recip()
    }
}

impl Neg for &JetValue {
    type Output = JetValue;
    fn neg(self) -> JetValue {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for JetValue {
            type Output = JetValue;
            fn $m(self, rhs: JetValue) -> JetValue {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule() {
        let x = JetValue::variable(2.0, 0, 2);
        let y = JetValue::variable(3.0, 1, 2);
        let p = &(&x * &x) * &y;
        assert_eq!(p.value(), 12.0);
        assert_eq!(p.gradient(), &[12.0, 4.0]);
        assert_eq!(p.hessian(0, 0), 6.0);
        assert_eq!(p.hessian(0, 1), 4.0);
        assert_eq!(p.hessian(1, 0), 4.0);
        assert_eq!(p.hessian(1, 1), 0.0);
    }

    #[test]
    fn compose_matches_direct() {
        // outer u(y) = y0 * y1^2 ; inner y0 = m0 + m1, y1 = m0 * m1
        let m0 = JetValue::variable(1.5, 0, 2);
        let m1 = JetValue::variable(0.5, 1, 2);
        let y0 = &m0 + &m1;
        let y1 = &m0 * &m1;
        let direct = &y0 * &(&y1 * &y1);

        let a = JetValue::variable(y0.value(), 0, 2);
        let b = JetValue::variable(y1.value(), 1, 2);
        let outer = &a * &(&b * &b);
        let composed = outer.compose(&[y0, y1]);
        assert!((composed.value() - direct.value()).abs() < 1e-14);
        for i in 0..2 {
            assert!((composed.gradient()[i] - direct.gradient()[i]).abs() < 1e-13);
            for j in 0..2 {
                assert!((composed.hessian(i, j) - direct.hessian(i, j)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn ln_of_exp_is_identity() {
        let x = JetValue::variable(0.7, 0, 1);
        let y = x.exp().ln();
        assert!((y.value() - 0.7).abs() < 1e-15);
        assert!((y.gradient()[0] - 1.0).abs() < 1e-15);
        assert!(y.hessian(0, 0).abs() < 1e-15);
    }
}
