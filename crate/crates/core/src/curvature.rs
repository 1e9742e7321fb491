//! Curvature of the hyperplane-bundle metric `h = psi^2` on the chart
//! `U_0 = {x_0 ≠ 0}` of projective space.
//!
//! Other charts are reached by permuting the moduli variables of the domain.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::domain::{ComplexPoint, ReinhardtDomain};
use crate::error::{Error, Result};
use crate::numeric::hermitian_eigenvalues;

/// Points whose matrix `A` is worse conditioned than this are rejected by
/// [`det_curvature_affine`].
pub const MAX_CONDITION: f64 = 1e12;

/// Affine coordinates `z_i = x_i / x_0` of the point `[1, z_1, .., z_n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint(pub Vec<Complex64>);

impl ChartPoint {
    pub fn new(z: Vec<Complex64>) -> Self {
        Self(z)
    }

    pub fn from_moduli(r: &[f64]) -> Self {
        Self(r.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    /// The homogeneous representative `(1, z_1, .., z_n)`.
    pub fn homogeneous(&self) -> ComplexPoint {
        let mut x = Vec::with_capacity(self.0.len() + 1);
        x.push(Complex64::new(1.0, 0.0));
        x.extend_from_slice(&self.0);
        ComplexPoint::new(x)
    }

    /// Chart coordinates of `x`; requires `x_0 ≠ 0`.
    pub fn from_homogeneous(x: &ComplexPoint) -> Result<Self> {
        let x0 = x.coords()[0];
        if x0.norm() == 0.0 {
            return Err(Error::AxisPoint { index: 0 });
        }
        Ok(Self(x.coords()[1..].iter().map(|xi| xi / x0).collect()))
    }
}

/// Coefficients of `Θ_h` in `dz_i ∧ dz̄_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureMatrix {
    pub theta: DMatrix<Complex64>,
}

impl CurvatureMatrix {
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.theta)
    }

    pub fn determinant(&self) -> f64 {
        self.theta.determinant().re
    }
}

struct ChartData {
    rho: f64,
    /// `∂rho/∂z̄_j`, j = 1..n
    grad_bar: Vec<Complex64>,
    /// `∂²rho/∂z_i∂z̄_j`, i, j = 1..n
    hess: DMatrix<Complex64>,
}

fn chart_data(domain: &ReinhardtDomain, z: &ChartPoint) -> Result<ChartData> {
    if z.coords().len() != domain.n() {
        return Err(Error::DimensionMismatch {
            expected: domain.n(),
            got: z.coords().len(),
        });
    }
    let x = z.homogeneous();
    let rho = domain.rho_value(x.moduli().as_slice())?;
    let grad = domain.complex_gradient(&x)?;
    let hess = domain.complex_hessian_axis_limit(&x)?;
    Ok(ChartData {
        rho,
        grad_bar: grad[1..].to_vec(),
        hess: hess.minor,
    })
}

/// `Θ_h = (2/l) (rho rho_{i j̄} − rho_i rho_{j̄}) / rho²` at `[1, z]`.
pub fn curvature_matrix(domain: &ReinhardtDomain, z: &ChartPoint) -> Result<CurvatureMatrix> {
    let data = chart_data(domain, z)?;
    let n = domain.n();
    let c = 2.0 / (domain.l() * data.rho * data.rho);
    let mut theta = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        // rho_i = ∂rho/∂z_i = conj(∂rho/∂z̄_i)
        let rho_i = data.grad_bar[i].conj();
        for j in i..n {
            let v = (data.hess[(i, j)] * data.rho - rho_i * data.grad_bar[j]) * c;
            theta[(i, j)] = v;
            theta[(j, i)] = v.conj();
        }
        theta[(i, i)].im = 0.0;
    }
    Ok(CurvatureMatrix { theta })
}

/// `det Θ_h = (2/(l rho²))^n det(A) (1 − v A⁻¹ v*)` with `A = rho (rho_{i j̄})`
/// and `v = (rho̅_1, .., rho̅_n)`.
pub fn det_curvature_affine(domain: &ReinhardtDomain, z: &ChartPoint) -> Result<f64> {
    let data = chart_data(domain, z)?;
    let n = domain.n() as i32;
    let a = data.hess.clone() * Complex64::new(data.rho, 0.0);
    let eig = hermitian_eigenvalues(&a);
    let max = eig.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let min = eig.iter().fold(f64::INFINITY, |m, e| m.min(e.abs()));
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularMatrix { condition });
    }
    // column vector a_i = rho_i, so v = a^*
    let col = nalgebra::DVector::from_iterator(
        data.grad_bar.len(),
        data.grad_bar.iter().map(|g| g.conj()),
    );
    let lu = a.clone().lu();
    let solved = lu.solve(&col).ok_or(Error::SingularMatrix { condition })?;
    let quad = col.adjoint() * solved;
    let det_a = lu.determinant().re;
    let prefactor = (2.0 / (domain.l() * data.rho * data.rho)).powi(n);
    Ok(prefactor * det_a * (1.0 - quad[(0, 0)].re))
}

/// `det Θ_h = (2/l)^(n+2) (|x_0|²/rho)^(n+1) det H(rho)`.
pub fn det_curvature_x(domain: &ReinhardtDomain, x: &ComplexPoint) -> Result<f64> {
    let x0 = x.coords()[0].norm();
    if x0 == 0.0 {
        return Err(Error::AxisPoint { index: 0 });
    }
    let n = domain.n() as i32;
    let h = domain.complex_hessian(x)?;
    let rho = domain.rho_value(x.moduli().as_slice())?;
    Ok((2.0 / domain.l()).powi(n + 2) * (x0 * x0 / rho).powi(n + 1) * h.determinant())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Positivity {
    pub positive: bool,
    pub min_eigenvalue: f64,
}

/// Whether `Θ_h` is positive definite at every given chart point.
pub fn positivity_check(domain: &ReinhardtDomain, points: &[ChartPoint]) -> Result<Positivity> {
    let mut min = f64::INFINITY;
    for z in points {
        let theta = curvature_matrix(domain, z)?;
        min = min.min(theta.eigenvalues()[0]);
    }
    Ok(Positivity {
        positive: min > 0.0,
        min_eigenvalue: min,
    })
}
