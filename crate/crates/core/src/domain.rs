//! Homogeneous Reinhardt domains `{rho < 1}` and their complex derivatives.
//!
//! `rho` is a function of the moduli `m_i = |x_i|`. Complex derivatives are
//! obtained from moduli derivatives by the chain rule
//! `∂m_i/∂x̄_i = x_i / (2 m_i)`, which is singular on coordinate axes; those
//! points are rejected.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::curvature::{positivity_check, ChartPoint};
use crate::error::{Error, Result};
use crate::expr::{Expression, JetValue, ModuliPoint};
use crate::numeric::hermitian_eigenvalues;

/// Point of `C^{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPoint(pub Vec<Complex64>);

impl ComplexPoint {
    pub fn new(x: Vec<Complex64>) -> Self {
        Self(x)
    }

    /// Point with the given moduli and zero phases.
    pub fn from_moduli(m: &[f64]) -> Self {
        Self(m.iter().map(|&r| Complex64::new(r, 0.0)).collect())
    }

    pub fn from_polar(moduli: &[f64], phases: &[f64]) -> Self {
        Self(
            moduli
                .iter()
                .zip(phases)
                .map(|(&r, &t)| Complex64::from_polar(r, t))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.0
    }

    pub fn moduli(&self) -> ModuliPoint {
        ModuliPoint(self.0.iter().map(|z| z.norm()).collect())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|z| z * c).collect())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    fn first_axis(&self) -> Option<usize> {
        self.0.iter().position(|z| z.norm() == 0.0)
    }
}

/// `H(rho) = (∂²rho/∂x_i∂x̄_j)` and its lower-right block `H_0(rho)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexHessian {
    pub full: DMatrix<Complex64>,
    pub minor: DMatrix<Complex64>,
}

impl ComplexHessian {
    fn from_full(full: DMatrix<Complex64>) -> Self {
        let d = full.nrows();
        let minor = full.view((1, 1), (d - 1, d - 1)).into_owned();
        Self { full, minor }
    }

    /// Real determinant of the Hermitian matrix.
    pub fn determinant(&self) -> f64 {
        self.full.determinant().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.full)
    }
}

/// Residuals of the Euler identities satisfied by a homogeneous `rho`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EulerResiduals {
    /// `|Σ x_i ∂rho/∂x_i − l rho / 2|`
    pub holomorphic: f64,
    /// `|Σ x̄_i ∂rho/∂x̄_i − l rho / 2|`
    pub antiholomorphic: f64,
    /// `|Σ_i x_i H_{i j̄} − (l/2) ∂rho/∂x̄_j|` for each `j`.
    pub rows: Vec<f64>,
    /// Magnitude scales used for the relative residual.
    pub scales: Vec<f64>,
}

impl EulerResiduals {
    pub fn max_absolute(&self) -> f64 {
        self.rows
            .iter()
            .copied()
            .chain([self.holomorphic, self.antiholomorphic])
            .fold(0.0, f64::max)
    }

    pub fn max_relative(&self) -> f64 {
        let abs = [self.holomorphic, self.antiholomorphic]
            .into_iter()
            .chain(self.rows.iter().copied());
        abs.zip(&self.scales)
            .map(|(r, s)| if *s > 0.0 { r / s } else { r })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Homogeneity tolerance used when validating user domains.
pub const HOMOGENEITY_TOL: f64 = 1e-9;

/// Domain `{rho(|x_0|, .., |x_n|) < 1}` in `C^{n+1}` with boundary weight
/// `e^u` relative to the induced Euclidean volume.
#[derive(Debug, Clone)]
pub struct ReinhardtDomain {
    n: usize,
    l: f64,
    rho: Expression,
    u: Expression,
    drho: Vec<Expression>,
    d2rho: Vec<Vec<Expression>>,
}

impl ReinhardtDomain {
    /// Builds a domain after structural checks only; the analytic invariants
    /// (homogeneity, monotonicity, plurisubharmonicity) are reported by
    /// [`ReinhardtDomain::validate`].
    pub fn new(n: usize, l: f64, rho: Expression, u: Expression) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidDomain("n must be at least 1".into()));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidDomain(format!(
                "homogeneity order must be positive, got {l}"
            )));
        }
        for (name, e) in [("rho", &rho), ("u", &u)] {
            if e.var_count() != n + 1 {
                return Err(Error::InvalidDomain(format!(
                    "{name} has {} variables, expected {}",
                    e.var_count(),
                    n + 1
                )));
            }
        }
        let drho = (0..=n)
            .map(|i| rho.differentiate(i))
            .collect::<Result<Vec<_>>>()?;
        let mut d2rho = Vec::with_capacity(n + 1);
        for (i, di) in drho.iter().enumerate() {
            let mut row = Vec::with_capacity(n + 1);
            for j in 0..=n {
                if j < i {
                    row.push(d2rho_get(&d2rho, j, i));
                } else {
                    row.push(di.differentiate(j)?);
                }
            }
            d2rho.push(row);
        }
        Ok(Self {
            n,
            l,
            rho,
            u,
            drho,
            d2rho,
        })
    }

    pub fn from_text(n: usize, l: f64, rho: &str, u: &str) -> Result<Self> {
        let rho = Expression::parse(rho, n + 1)?;
        let u = Expression::parse(u, n + 1)?;
        Self::new(n, l, rho, u)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Ambient complex dimension `n + 1`.
    pub fn dim(&self) -> usize {
        self.n + 1
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn rho(&self) -> &Expression {
        &self.rho
    }

    pub fn u(&self) -> &Expression {
        &self.u
    }

    pub fn rho_derivative(&self, i: usize) -> &Expression {
        &self.drho[i]
    }

    pub fn rho_second_derivative(&self, i: usize, j: usize) -> &Expression {
        &self.d2rho[i][j]
    }

    pub fn rho_value(&self, m: &[f64]) -> Result<f64> {
        self.rho.evaluate(m)
    }

    pub fn rho_gradient(&self, m: &[f64]) -> Result<Vec<f64>> {
        self.drho.iter().map(|d| d.evaluate(m)).collect()
    }

    pub fn rho_moduli_hessian(&self, m: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.d2rho
            .iter()
            .map(|row| row.iter().map(|e| e.evaluate(m)).collect())
            .collect()
    }

    fn positive_rho(&self, m: &[f64]) -> Result<f64> {
        let r = self.rho_value(m)?;
        if !(r > 0.0) {
            return Err(Error::NonPositiveRho { value: r });
        }
        Ok(r)
    }

    /// `psi = rho^(-1/l)`.
    pub fn psi_value(&self, m: &[f64]) -> Result<f64> {
        Ok(self.positive_rho(m)?.powf(-1.0 / self.l))
    }

    /// Value and moduli gradient of `psi`.
    pub fn psi_gradient(&self, m: &[f64]) -> Result<(f64, Vec<f64>)> {
        let r = self.positive_rho(m)?;
        let psi = r.powf(-1.0 / self.l);
        let factor = -psi / (self.l * r);
        let grad = self
            .drho
            .iter()
            .map(|d| d.evaluate(m).map(|g| factor * g))
            .collect::<Result<Vec<_>>>()?;
        Ok((psi, grad))
    }

    /// Jet of `psi = rho^(-1/l)` over the moduli, through the power rule.
    pub fn psi_jet(&self, p: &ModuliPoint) -> Result<JetValue> {
        let jet = self.rho.eval_jet2(p.as_slice())?;
        if !(jet.value() > 0.0) {
            return Err(Error::NonPositiveRho { value: jet.value() });
        }
        Ok(jet.powf(-1.0 / self.l))
    }

    /// `u` evaluated at the boundary projection `m psi(m)`.
    pub fn u_at_projection(&self, m: &[f64]) -> Result<f64> {
        if self.u.is_constant() {
            return self.u.evaluate(m);
        }
        let psi = self.psi_value(m)?;
        let y: Vec<f64> = m.iter().map(|v| v * psi).collect();
        self.u.evaluate(&y)
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: len,
            });
        }
        Ok(())
    }

    /// `(∂rho/∂x̄_0, .., ∂rho/∂x̄_n)`.
    ///
    /// On an axis (`m_i = 0`) the entry is zero when `∂rho/∂m_i` vanishes
    /// there; otherwise the point is rejected.
    pub fn complex_gradient(&self, x: &ComplexPoint) -> Result<Vec<Complex64>> {
        self.check_dim(x.dim())?;
        let m = x.moduli();
        let g = self.rho_gradient(m.as_slice())?;
        x.coords()
            .iter()
            .zip(m.as_slice())
            .zip(&g)
            .enumerate()
            .map(|(i, ((xi, &mi), &gi))| {
                if mi == 0.0 {
                    if gi == 0.0 {
                        Ok(Complex64::new(0.0, 0.0))
                    } else {
                        Err(Error::AxisPoint { index: i })
                    }
                } else {
                    Ok(xi * (gi / (2.0 * mi)))
                }
            })
            .collect()
    }

    /// `H(rho)` at a point with all moduli strictly positive.
    pub fn complex_hessian(&self, x: &ComplexPoint) -> Result<ComplexHessian> {
        self.check_dim(x.dim())?;
        if let Some(i) = x.first_axis() {
            return Err(Error::AxisPoint { index: i });
        }
        self.hessian_impl(x, false)
    }

    /// As [`Self::complex_hessian`], but on axes takes the limit
    /// `(∂rho/∂m_i)/m_i → ∂²rho/∂m_i²`, valid when `rho` is smooth in `x_i`
    /// (first derivative vanishing, mixed second derivatives vanishing).
    pub(crate) fn complex_hessian_axis_limit(&self, x: &ComplexPoint) -> Result<ComplexHessian> {
        self.check_dim(x.dim())?;
        self.hessian_impl(x, true)
    }

    fn hessian_impl(&self, x: &ComplexPoint, allow_axis: bool) -> Result<ComplexHessian> {
        let d = self.dim();
        let m = x.moduli();
        let m = m.as_slice();
        let g = self.rho_gradient(m)?;
        let h = self.rho_moduli_hessian(m)?;
        // unit phases x_i / m_i; zero on axes
        let phase: Vec<Complex64> = x
            .coords()
            .iter()
            .zip(m)
            .map(|(xi, &mi)| {
                if mi > 0.0 {
                    xi / mi
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        let mut full = DMatrix::<Complex64>::zeros(d, d);
        for i in 0..d {
            let diag = if m[i] > 0.0 {
                h[i][i] / 4.0 + g[i] / (4.0 * m[i])
            } else if allow_axis && g[i] == 0.0 {
                h[i][i] / 2.0
            } else {
                return Err(Error::AxisPoint { index: i });
            };
            full[(i, i)] = Complex64::new(diag, 0.0);
            for j in (i + 1)..d {
                let entry = if m[i] > 0.0 && m[j] > 0.0 {
                    phase[i].conj() * phase[j] * (h[i][j] / 4.0)
                } else if allow_axis && h[i][j] == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    return Err(Error::AxisPoint {
                        index: if m[i] > 0.0 { j } else { i },
                    });
                };
                full[(i, j)] = entry;
                full[(j, i)] = entry.conj();
            }
        }
        Ok(ComplexHessian::from_full(full))
    }

    /// Residuals of the homogeneity identities at `x`.
    pub fn euler_residuals(&self, x: &ComplexPoint) -> Result<EulerResiduals> {
        let hess = self.complex_hessian(x)?;
        let grad_bar = self.complex_gradient(x)?;
        let rho = self.rho_value(x.moduli().as_slice())?;
        let half_l = self.l / 2.0;
        let xs = x.coords();

        // ∂rho/∂x_i = conj(∂rho/∂x̄_i) for real rho
        let hol: Complex64 = xs.iter().zip(&grad_bar).map(|(xi, g)| xi * g.conj()).sum();
        let anti: Complex64 = xs.iter().zip(&grad_bar).map(|(xi, g)| xi.conj() * g).sum();
        let target = half_l * rho;
        let mut scales = vec![target.abs(), target.abs()];
        let rows = (0..self.dim())
            .map(|j| {
                let mut acc = Complex64::new(0.0, 0.0);
                let mut scale = half_l * grad_bar[j].norm();
                for (i, xi) in xs.iter().enumerate() {
                    let term = xi * hess.full[(i, j)];
                    scale += term.norm();
                    acc += term;
                }
                scales.push(scale);
                (acc - grad_bar[j] * half_l).norm()
            })
            .collect();
        Ok(EulerResiduals {
            holomorphic: (hol - target).norm(),
            antiholomorphic: (anti - target).norm(),
            rows,
            scales,
        })
    }

    /// Samples the domain invariants; failures become report entries.
    pub fn validate(&self, samples: usize) -> ValidationReport {
        let samples = samples.max(1);
        let mut checks = Vec::new();

        let hom = self.rho.check_homogeneity(self.l, samples, HOMOGENEITY_TOL);
        checks.push(CheckResult {
            name: "homogeneity".into(),
            passed: hom.passed,
            detail: match &hom.violation {
                None => format!("max relative violation {:.3e}", hom.max_rel_violation),
                Some(v) => format!(
                    "violated at m = {:?}, t = {}: expected {}, got {}",
                    v.moduli, v.t, v.expected, v.actual
                ),
            },
        });

        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
        let points: Vec<ComplexPoint> = (0..samples)
            .map(|_| {
                let m: Vec<f64> = (0..self.dim()).map(|_| rng.gen_range(0.05..2.0)).collect();
                let t: Vec<f64> = (0..self.dim())
                    .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
                    .collect();
                ComplexPoint::from_polar(&m, &t)
            })
            .collect();

        let mut positivity = Ok(());
        let mut monotone = Ok(());
        let mut psh = Ok(());
        for x in &points {
            let m = x.moduli();
            let m = m.as_slice();
            if positivity.is_ok() {
                match self.rho_value(m) {
                    Ok(r) if r > 0.0 && r.is_finite() => {}
                    Ok(r) => positivity = Err(format!("rho = {r} at m = {m:?}")),
                    Err(e) => positivity = Err(e.to_string()),
                }
            }
            if monotone.is_ok() {
                match self.rho_gradient(m) {
                    Ok(g) => {
                        if let Some(i) = g.iter().position(|&gi| !(gi > 0.0)) {
                            monotone = Err(format!("∂rho/∂m{i} = {} at m = {m:?}", g[i]));
                        }
                    }
                    Err(e) => monotone = Err(e.to_string()),
                }
            }
            if psh.is_ok() {
                match self.complex_hessian(x) {
                    Ok(h) => {
                        let eig = h.eigenvalues();
                        let scale = eig.iter().fold(0.0f64, |a, e| a.max(e.abs()));
                        if eig[0] < -1e-10 * scale.max(f64::MIN_POSITIVE) {
                            psh = Err(format!("H(rho) eigenvalue {:.3e} at m = {m:?}", eig[0]));
                        }
                    }
                    Err(e) => psh = Err(e.to_string()),
                }
            }
        }
        for (name, result, ok_detail) in [
            ("positivity", positivity, "rho > 0 at all samples"),
            ("monotonicity", monotone, "∂rho/∂m_i > 0 at all samples"),
            (
                "plurisubharmonicity",
                psh,
                "H(rho) positive semidefinite at all samples",
            ),
        ] {
            checks.push(CheckResult {
                name: name.into(),
                passed: result.is_ok(),
                detail: result.err().unwrap_or_else(|| ok_detail.into()),
            });
        }

        let chart_points: Vec<ChartPoint> = (0..samples)
            .map(|_| {
                let z: Vec<Complex64> = (0..self.n)
                    .map(|_| {
                        Complex64::from_polar(
                            rng.gen_range(0.05..3.0),
                            rng.gen_range(0.0..std::f64::consts::TAU),
                        )
                    })
                    .collect();
                ChartPoint::new(z)
            })
            .collect();
        let curvature = match positivity_check(self, &chart_points) {
            Ok(p) => CheckResult {
                name: "curvature".into(),
                passed: p.positive,
                detail: format!("minimum curvature eigenvalue {:.6e}", p.min_eigenvalue),
            },
            Err(e) => CheckResult {
                name: "curvature".into(),
                passed: false,
                detail: e.to_string(),
            },
        };
        checks.push(curvature);
        ValidationReport { checks }
    }

    /// Evaluates the moduli derivatives of `rho` needed by `a0` as jets:
    /// `(rho, [∂_i rho], [[∂_ij rho]])`, each a jet in the moduli.
    pub(crate) fn derivative_jets(
        &self,
        m: &[f64],
    ) -> Result<(JetValue, Vec<JetValue>, Vec<Vec<JetValue>>)> {
        let rho = self.rho.eval_jet2(m)?;
        let first = self
            .drho
            .iter()
            .map(|e| e.eval_jet2(m))
            .collect::<Result<Vec<_>>>()?;
        let second = self
            .d2rho
            .iter()
            .map(|row| row.iter().map(|e| e.eval_jet2(m)).collect())
            .collect::<Result<Vec<_>>>()?;
        Ok((rho, first, second))
    }
}

fn d2rho_get(rows: &[Vec<Expression>], i: usize, j: usize) -> Expression {
    rows[i][j].clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(n: usize) -> ReinhardtDomain {
        let rho = (0..=n)
            .map(|i| format!("m{i}^2"))
            .collect::<Vec<_>>()
            .join(" + ");
        ReinhardtDomain::from_text(n, 2.0, &rho, "0").unwrap()
    }

    #[test]
    fn psi_of_sphere() {
        let d = sphere(1);
        let j = d.psi_jet(&ModuliPoint::new(vec![3.0, 4.0])).unwrap();
        assert!((j.value() - 0.2).abs() < 1e-16);
    }

    #[test]
    fn psi_of_fermat_quartic() {
        let d = ReinhardtDomain::from_text(1, 4.0, "m0^4 + m1^4", "0").unwrap();
        let a = 2f64.powf(-0.25);
        let j = d.psi_jet(&ModuliPoint::new(vec![a, a])).unwrap();
        assert!((j.value() - 1.0).abs() < 1e-15);
        for g in j.gradient() {
            assert!((g + 2f64.powf(-0.75)).abs() < 1e-15);
        }
    }

    #[test]
    fn sphere_gradient_and_hessian() {
        let d = sphere(1);
        let x = ComplexPoint::new(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)]);
        let g = d.complex_gradient(&x).unwrap();
        assert!((g[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((g[1] - Complex64::new(0.0, 2.0)).norm() < 1e-15);
        let h = d.complex_hessian(&x).unwrap();
        assert!((h.full.clone() - DMatrix::identity(2, 2)).norm() < 1e-15);
        assert_eq!(h.minor.nrows(), 1);
    }

    #[test]
    fn axis_points_are_rejected() {
        let d = sphere(1);
        let x = ComplexPoint::from_moduli(&[1.0, 0.0]);
        assert!(matches!(
            d.complex_hessian(&x),
            Err(Error::AxisPoint { index: 1 })
        ));
        // the gradient is fine: the moduli derivative vanishes on the axis
        let g = d.complex_gradient(&x).unwrap();
        assert_eq!(g[1], Complex64::new(0.0, 0.0));
        let cone = ReinhardtDomain::from_text(1, 1.0, "m0 + m1", "0").unwrap();
        assert!(cone.complex_gradient(&x).is_err());
    }

    #[test]
    fn fermat_hessian_is_diagonal() {
        let d = ReinhardtDomain::from_text(1, 4.0, "m0^4 + m1^4", "0").unwrap();
        let x = ComplexPoint::from_polar(&[0.7, 1.3], &[0.4, -2.0]);
        let h = d.complex_hessian(&x).unwrap();
        assert!((h.full[(0, 0)].re - 4.0 * 0.49).abs() < 1e-14);
        assert!((h.full[(1, 1)].re - 4.0 * 1.69).abs() < 1e-14);
        assert!(h.full[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn euler_residuals_of_sphere_vanish() {
        let d = sphere(1);
        let r = d
            .euler_residuals(&ComplexPoint::from_moduli(&[1.0, 2.0]))
            .unwrap();
        assert!(r.max_absolute() < 1e-14);
    }

    #[test]
    fn euler_residuals_detect_inhomogeneity() {
        let d = ReinhardtDomain::from_text(1, 2.0, "m0^2 + m1^3", "0").unwrap();
        let r = d
            .euler_residuals(&ComplexPoint::from_moduli(&[0.5, 0.7]))
            .unwrap();
        assert!(r.max_relative() > 1e-3);
    }

    #[test]
    fn validation_outcomes() {
        assert!(sphere(1).validate(50).passed());
        let saddle = ReinhardtDomain::from_text(1, 2.0, "m0^2 - m1^2", "0").unwrap();
        let report = saddle.validate(50);
        assert!(!report.passed());
        assert!(report.failures().contains(&"monotonicity"));
    }

    #[test]
    fn structural_errors() {
        assert!(ReinhardtDomain::from_text(1, 0.0, "m0^2 + m1^2", "0").is_err());
        assert!(ReinhardtDomain::from_text(0, 2.0, "m0^2", "0").is_err());
        let rho = Expression::parse("m0^2 + m1^2", 2).unwrap();
        let u = Expression::parse("0", 3).unwrap();
        assert!(ReinhardtDomain::new(1, 2.0, rho, u).is_err());
    }
}
