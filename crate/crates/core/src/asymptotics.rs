//! Closed-form expansion coefficients of the diagonal partial Szegő kernel
//!
//! `Π_k(x, x) ~ a0(x) k^n + a1(x) k^(n-1) + ...` at boundary points, and
//! their empirical recovery from a computed kernel sequence.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::domain::{ComplexPoint, ReinhardtDomain};
use crate::error::{Error, Result};
use crate::expr::{JetValue, ModuliPoint};
use crate::measure::{BoundaryIntegrator, QuadratureSpec, Route};
use crate::szego::{partial_szego, NormTable};

/// Allowed `|rho(x) − 1|` for a boundary point.
pub const BOUNDARY_TOL: f64 = 1e-10;
/// Allowed disagreement between the jet and finite-difference routes for the
/// Laplacian term of `a1`, relative to the term it is added to.
pub const ROUTE_TOL: f64 = 1e-4;

/// Notice attached to every report about the powers of `k` used.
pub const LEADING_POWER_NOTICE: &str = "expansion fitted and compared as a0*k^n + a1*k^(n-1); \
     a leading power of k^(n+1) is inconsistent with the exact sphere kernel (k+1)/(2π²)";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticCoefficients {
    pub a0: f64,
    pub a1: f64,
    pub leading_power: usize,
}

impl AsymptoticCoefficients {
    pub fn at(domain: &ReinhardtDomain, x: &ComplexPoint) -> Result<Self> {
        Ok(Self {
            a0: a0_closed_form(domain, x)?,
            a1: a1_closed_form(domain, x)?,
            leading_power: domain.n(),
        })
    }

    /// `a0 k^n + a1 k^(n-1)`.
    pub fn model(&self, k: f64) -> f64 {
        let n = self.leading_power as i32;
        self.a0 * k.powi(n) + self.a1 * k.powi(n - 1)
    }
}

fn boundary_moduli(domain: &ReinhardtDomain, x: &ComplexPoint) -> Result<ModuliPoint> {
    if x.dim() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            got: x.dim(),
        });
    }
    let m = x.moduli();
    if let Some(index) = m.as_slice().iter().position(|&v| v == 0.0) {
        return Err(Error::AxisPoint { index });
    }
    let rho = domain.rho_value(m.as_slice())?;
    if (rho - 1.0).abs() > BOUNDARY_TOL {
        return Err(Error::InvalidArgument(format!(
            "expansion point is not on the boundary: rho = {rho}"
        )));
    }
    Ok(m)
}

/// `a0 = (2/l)^(n+2) det H(rho) / (2π^(n+1) e^u psi^(2n − l(n+1)) |∇psi|)`
/// with `u` taken at the boundary projection.
pub fn a0_closed_form(domain: &ReinhardtDomain, x: &ComplexPoint) -> Result<f64> {
    let m = boundary_moduli(domain, x)?;
    let det = domain.complex_hessian(x)?.determinant();
    if !(det > 0.0) {
        return Err(Error::Degenerate(format!(
            "complex Hessian determinant {det:e} is not positive"
        )));
    }
    a0_extended(domain, m.as_slice(), det)
}

fn a0_extended(domain: &ReinhardtDomain, m: &[f64], det: f64) -> Result<f64> {
    let n = domain.n() as f64;
    let l = domain.l();
    let (psi, grad) = domain.psi_gradient(m)?;
    let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    let u = domain.u_at_projection(m)?;
    Ok((2.0 / l).powf(n + 2.0) * det
        / (2.0 * PI.powf(n + 1.0) * u.exp() * psi.powf(2.0 * n - l * (n + 1.0)) * grad_norm))
}

/// `det H(rho)` as a function of the moduli, through the real matrix with
/// diagonal `rho_ii/4 + rho_i/(4 m_i)` and off-diagonal `rho_ij/4`.
fn moduli_hessian_determinant(domain: &ReinhardtDomain, m: &[f64]) -> Result<f64> {
    let d = domain.dim();
    let g = domain.rho_gradient(m)?;
    let h = domain.rho_moduli_hessian(m)?;
    let mat = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            h[i][i] / 4.0 + g[i] / (4.0 * m[i])
        } else {
            h[i][j] / 4.0
        }
    });
    Ok(mat.determinant())
}

/// `ln a0` off the boundary, by the defining formula with all `psi` powers.
fn ln_a0_at(domain: &ReinhardtDomain, m: &[f64]) -> Result<f64> {
    let det = moduli_hessian_determinant(domain, m)?;
    if !(det > 0.0) {
        return Err(Error::Degenerate(format!(
            "complex Hessian determinant {det:e} is not positive near the point"
        )));
    }
    Ok(a0_extended(domain, m, det)?.ln())
}

/// Jet of `ln a0` in the moduli.
fn ln_a0_jet(domain: &ReinhardtDomain, m: &[f64]) -> Result<JetValue> {
    let d = domain.dim();
    let n = domain.n() as f64;
    let l = domain.l();
    let (rho, first, second) = domain.derivative_jets(m)?;
    if !(rho.value() > 0.0) {
        return Err(Error::NonPositiveRho { value: rho.value() });
    }

    let mut mat: Vec<Vec<JetValue>> = vec![Vec::with_capacity(d); d];
    for i in 0..d {
        for j in 0..d {
            let quarter = second[i][j].scale(0.25);
            let entry = if i == j {
                let mi = JetValue::variable(m[i], i, d);
                &quarter + &(&first[i] / &mi).scale(0.25)
            } else {
                quarter
            };
            mat[i].push(entry);
        }
    }
    let det = jet_determinant(mat);
    if !(det.value() > 0.0) {
        return Err(Error::Degenerate(format!(
            "complex Hessian determinant {:e} is not positive",
            det.value()
        )));
    }

    let psi = rho.powf(-1.0 / l);
    // ∂psi/∂m_i = −(1/l) rho^(−1/l − 1) rho_i
    let dpsi_factor = rho.powf(-1.0 / l - 1.0).scale(-1.0 / l);
    let mut grad_sq = JetValue::constant(0.0, d);
    for fi in &first {
        let gi = &dpsi_factor * fi;
        grad_sq = &grad_sq + &(&gi * &gi);
    }
    let ln_grad_norm = grad_sq.ln().scale(0.5);

    let u = if domain.u().is_constant() {
        JetValue::constant(domain.u().evaluate(m)?, d)
    } else {
        let projected: Vec<JetValue> = (0..d)
            .map(|i| &JetValue::variable(m[i], i, d) * &psi)
            .collect();
        let at: Vec<f64> = projected.iter().map(|p| p.value()).collect();
        domain.u().eval_jet2(&at)?.compose(&projected)
    };

    let constant = (n + 2.0) * (2.0 / l).ln() - (2.0 * PI.powf(n + 1.0)).ln();
    let ln_psi_power = psi.ln().scale(2.0 * n - l * (n + 1.0));
    Ok((&(&det.ln() - &u) - &(&ln_psi_power + &ln_grad_norm)).add_scalar(constant))
}

/// Determinant of a small matrix of jets by Gaussian elimination with
/// partial pivoting on the values.
fn jet_determinant(mut a: Vec<Vec<JetValue>>) -> JetValue {
    let d = a.len();
    let dim = a[0][0].dim();
    let mut det = JetValue::constant(1.0, dim);
    for col in 0..d {
        let pivot = (col..d)
            .max_by(|&p, &q| a[p][col].value().abs().total_cmp(&a[q][col].value().abs()))
            .unwrap_or(col);
        if pivot != col {
            a.swap(pivot, col);
            det = -&det;
        }
        let p = a[col][col].clone();
        det = &det * &p;
        if p.value() == 0.0 {
            return det;
        }
        for row in col + 1..d {
            let factor = &a[row][col] / &p;
            for c in col..d {
                let sub = &factor * &a[col][c];
                a[row][c] = &a[row][c] - &sub;
            }
        }
    }
    det
}

/// The Laplacian term `Σ_μ ∂²ln a0/∂x_μ∂x̄_μ = Σ_μ (G_μμ + G_μ/m_μ)/4` of
/// `a1` by both routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaplacianRoutes {
    pub jet: f64,
    pub finite_difference: f64,
}

pub fn ln_a0_laplacian(domain: &ReinhardtDomain, x: &ComplexPoint) -> Result<LaplacianRoutes> {
    let m = boundary_moduli(domain, x)?;
    let m = m.as_slice();
    let jet = ln_a0_jet(domain, m)?;
    let jet_sum: f64 = (0..m.len())
        .map(|i| (jet.hessian(i, i) + jet.gradient()[i] / m[i]) / 4.0)
        .sum();

    let mut fd_sum = 0.0;
    let g0 = ln_a0_at(domain, m)?;
    for i in 0..m.len() {
        let h = 1e-4 * m[i];
        let (d1_h, d2_h) = central_differences(domain, m, i, h, g0)?;
        let (d1_half, d2_half) = central_differences(domain, m, i, h / 2.0, g0)?;
        let d1 = (4.0 * d1_half - d1_h) / 3.0;
        let d2 = (4.0 * d2_half - d2_h) / 3.0;
        fd_sum += (d2 + d1 / m[i]) / 4.0;
    }
    Ok(LaplacianRoutes {
        jet: jet_sum,
        finite_difference: fd_sum,
    })
}

fn central_differences(
    domain: &ReinhardtDomain,
    m: &[f64],
    i: usize,
    h: f64,
    g0: f64,
) -> Result<(f64, f64)> {
    let mut p = m.to_vec();
    p[i] = m[i] + h;
    let gp = ln_a0_at(domain, &p)?;
    p[i] = m[i] - h;
    let gm = ln_a0_at(domain, &p)?;
    Ok(((gp - gm) / (2.0 * h), (gp - 2.0 * g0 + gm) / (h * h)))
}

/// `a1 = (a0/4) (2n(n+1) + 2|x|² Σ_μ ∂²ln a0/∂x_μ∂x̄_μ)`.
///
/// The Laplacian is taken from the jet route after checking it against
/// finite differences.
pub fn a1_closed_form(domain: &ReinhardtDomain, x: &ComplexPoint) -> Result<f64> {
    let a0 = a0_closed_form(domain, x)?;
    let n = domain.n() as f64;
    let norm_sqr = x.norm_sqr();
    let routes = ln_a0_laplacian(domain, x)?;
    let scale = routes.jet.abs().max(n * (n + 1.0) / norm_sqr);
    if (routes.jet - routes.finite_difference).abs() > ROUTE_TOL * scale {
        return Err(Error::RouteDisagreement {
            jet: routes.jet,
            finite_difference: routes.finite_difference,
        });
    }
    Ok(a0 / 4.0 * (2.0 * n * (n + 1.0) + 2.0 * norm_sqr * routes.jet))
}

/// Expansion coefficients recovered from a kernel sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub power: f64,
    pub a0: f64,
    pub a1: f64,
}

/// Fits `Π_k ≈ a0 k^n + a1 k^(n-1)` using the upper half of the k-range.
///
/// The power is the limit `p` of a fit `s = p + c/k` to the log-log slopes
/// of consecutive pairs, so the `1/k` drift of the slope caused by the
/// second term does not bias it. `a0` and `a1` are one-step Richardson
/// limits between the first and last `k` of the upper half: for
/// `y_k = a + b/k + O(k^-2)`, `(k_b y_b − k_a y_a)/(k_b − k_a) = a + O(k^-2)`.
pub fn fit_expansion(pairs: &[(usize, f64)], n: usize) -> Result<FitResult> {
    let mut pts: Vec<(f64, f64)> = pairs.iter().map(|&(k, p)| (k as f64, p)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    if pts.len() < 6 {
        return Err(Error::Degenerate(format!(
            "at least 6 distinct k values are needed, got {}",
            pts.len()
        )));
    }
    if let Some(&(k, p)) = pts
        .iter()
        .find(|(k, p)| !(*p > 0.0) || *k < 1.0 || !p.is_finite())
    {
        return Err(Error::Degenerate(format!(
            "unusable kernel value {p} at k = {k}"
        )));
    }

    let top = &pts[pts.len() / 2..];
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    let pairs = top.len() - 1;
    for w in top.windows(2) {
        let (k1, p1) = w[0];
        let (k2, p2) = w[1];
        let slope = (p2.ln() - p1.ln()) / (k2.ln() - k1.ln());
        let x = 1.0 / (k1 * k2).sqrt();
        sx += x;
        sy += slope;
        sxx += x * x;
        sxy += x * slope;
    }
    let count = pairs as f64;
    let denom = count * sxx - sx * sx;
    let power = if denom.abs() > 0.0 {
        (sy * sxx - sx * sxy) / denom
    } else {
        sy / count
    };

    let nf = n as i32;
    let richardson = |f: &dyn Fn(f64, f64) -> f64| {
        let (ka, pa) = top[0];
        let (kb, pb) = top[top.len() - 1];
        (kb * f(kb, pb) - ka * f(ka, pa)) / (kb - ka)
    };
    let a0 = richardson(&|k, p| p / k.powi(nf));
    let a1 = richardson(&|k, p| (p - a0 * k.powi(nf)) / k.powi(nf - 1));
    Ok(FitResult { power, a0, a1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualPoint {
    pub k: usize,
    pub pi_k: f64,
    pub model: f64,
    pub residual: f64,
}

/// Computed kernel sequence, fitted and closed-form coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionReport {
    pub ks: Vec<usize>,
    pub pi_values: Vec<f64>,
    pub fitted_power: f64,
    pub fitted_a0: f64,
    pub fitted_a1: f64,
    pub closed_a0: f64,
    pub closed_a1: f64,
    pub rel_err_a0: f64,
    pub rel_err_a1: f64,
    /// `Π_k − (a0 k^n + a1 k^(n-1))` with the closed-form coefficients.
    pub residual_curve: Vec<ResidualPoint>,
    pub warnings: Vec<String>,
}

/// Kernel values `Π_k(x, x)` for each `k`, all norm tables sharing the
/// integrator's node sets.
pub fn kernel_sequence(
    integrator: &BoundaryIntegrator<'_>,
    x: &ComplexPoint,
    ks: &[usize],
) -> Result<Vec<f64>> {
    let domain = integrator.domain();
    ks.iter()
        .map(|&k| {
            let table = NormTable::compute(integrator, k)?;
            if let Some((_, e)) = table.failures().first() {
                return Err(e.clone());
            }
            partial_szego(domain, k, x, &table)
        })
        .collect()
}

/// Computes `Π_k` over `ks`, fits the expansion and compares with the
/// closed forms at the boundary point `x`.
pub fn verify_expansion(
    domain: &ReinhardtDomain,
    x: &ComplexPoint,
    ks: &[usize],
    q: &QuadratureSpec,
    route: Route,
) -> Result<ExpansionReport> {
    let closed = AsymptoticCoefficients::at(domain, x)?;
    let integrator = BoundaryIntegrator::new(domain, route, *q)?;
    let pi_values = kernel_sequence(&integrator, x, ks)?;
    expansion_report(&closed, ks, pi_values)
}

/// Fits an already computed kernel sequence and compares it with `closed`.
pub fn expansion_report(
    closed: &AsymptoticCoefficients,
    ks: &[usize],
    pi_values: Vec<f64>,
) -> Result<ExpansionReport> {
    if ks.len() != pi_values.len() {
        return Err(Error::DimensionMismatch {
            expected: ks.len(),
            got: pi_values.len(),
        });
    }
    let pairs: Vec<(usize, f64)> = ks.iter().copied().zip(pi_values.iter().copied()).collect();
    let fit = fit_expansion(&pairs, closed.leading_power)?;
    let residual_curve = pairs
        .iter()
        .map(|&(k, pi_k)| {
            let model = closed.model(k as f64);
            ResidualPoint {
                k,
                pi_k,
                model,
                residual: pi_k - model,
            }
        })
        .collect();
    Ok(ExpansionReport {
        ks: ks.to_vec(),
        pi_values,
        fitted_power: fit.power,
        fitted_a0: fit.a0,
        fitted_a1: fit.a1,
        closed_a0: closed.a0,
        closed_a1: closed.a1,
        rel_err_a0: (fit.a0 - closed.a0).abs() / closed.a0.abs(),
        rel_err_a1: (fit.a1 - closed.a1).abs() / closed.a1.abs(),
        residual_curve,
        warnings: vec![LEADING_POWER_NOTICE.to_string()],
    })
}
