//! Boundary measure `mu = e^u mu_ind` and its two integral representations.
//!
//! Torus-invariant integrals over the boundary `M = {rho = 1}` are computed
//! either
//!
//! - on the boundary side, over the moduli domain
//!   `D = {(R_1, .., R_n) : rho(0, R) < 1}` with `R_0 = f(R)` the boundary
//!   height over each node, or
//! - on the projective side, over the affine chart `C^n` of projective
//!   space against `h_E · ω_FS^n / n!`.
//!
//! Both sides use a radial variable times a direction in the positive
//! orthant (hyperspherical angles) and tensor Gauss–Legendre rules on open
//! intervals, so no node sits on an axis. Angular torus variables are
//! integrated exactly as powers of `2π`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::ChartPoint;
use crate::domain::ReinhardtDomain;
use crate::error::{Error, Result};
use crate::expr::ModuliPoint;
use crate::numeric::{gauss_legendre_unit, log_sum_exp, pairwise_sum};

/// Residual accepted by [`solve_boundary_radius`].
pub const ROOT_TOL: f64 = 1e-13;
const ROOT_MAX_ITER: usize = 200;

/// Radial map from `t ∈ (0, 1)` onto `(0, ∞)` for chart integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mapping {
    /// `r = t / (1 − t)`
    Algebraic,
    /// `r = tan(π t / 2)`
    Tangent,
}

impl Mapping {
    fn radius(&self, t: f64) -> (f64, f64) {
        match self {
            Mapping::Algebraic => {
                let s = 1.0 - t;
                (t / s, 1.0 / (s * s))
            }
            Mapping::Tangent => {
                let a = FRAC_PI_2 * t;
                let c = a.cos();
                (a.tan(), FRAC_PI_2 / (c * c))
            }
        }
    }
}

impl std::str::FromStr for Mapping {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "algebraic" => Ok(Mapping::Algebraic),
            "tangent" => Ok(Mapping::Tangent),
            other => Err(Error::InvalidArgument(format!("unknown mapping '{other}'"))),
        }
    }
}

/// Which integral representation computes a boundary integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Boundary,
    Projective,
}

impl Route {
    pub fn name(&self) -> &'static str {
        match self {
            Route::Boundary => "boundary",
            Route::Projective => "projective",
        }
    }
}

impl std::str::FromStr for Route {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boundary" => Ok(Route::Boundary),
            "projective" => Ok(Route::Projective),
            other => Err(Error::InvalidArgument(format!("unknown route '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub nodes_per_dim: usize,
    pub mapping: Mapping,
    /// Number of node doublings after the base level (at least one is done).
    pub refinement_levels: usize,
    pub target_rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            nodes_per_dim: 128,
            mapping: Mapping::Algebraic,
            refinement_levels: 2,
            target_rel_tol: 1e-10,
        }
    }
}

impl QuadratureSpec {
    pub fn new(
        nodes_per_dim: usize,
        mapping: Mapping,
        refinement_levels: usize,
        target_rel_tol: f64,
    ) -> Result<Self> {
        let spec = Self {
            nodes_per_dim,
            mapping,
            refinement_levels,
            target_rel_tol,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_dim < 8 {
            return Err(Error::InvalidArgument(format!(
                "nodes_per_dim must be at least 8, got {}",
                self.nodes_per_dim
            )));
        }
        if !(self.target_rel_tol > 0.0) {
            return Err(Error::InvalidArgument(
                "target_rel_tol must be positive".into(),
            ));
        }
        Ok(())
    }

    fn levels(&self) -> usize {
        self.refinement_levels.max(1) + 1
    }

    fn nodes_at(&self, level: usize) -> usize {
        self.nodes_per_dim << level
    }
}

/// A boundary point given by its moduli, `rho(moduli) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryChartPoint {
    moduli: ModuliPoint,
}

impl BoundaryChartPoint {
    pub fn new(domain: &ReinhardtDomain, moduli: ModuliPoint) -> Result<Self> {
        let r = domain.rho_value(moduli.as_slice())?;
        if (r - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "point is not on the boundary: rho = {r}"
            )));
        }
        Ok(Self { moduli })
    }

    pub fn moduli(&self) -> &ModuliPoint {
        &self.moduli
    }
}

/// Solves `rho(R_0, r_rest) = 1` for `R_0 > 0`.
pub fn solve_boundary_radius(domain: &ReinhardtDomain, r_rest: &[f64]) -> Result<f64> {
    if r_rest.len() != domain.n() {
        return Err(Error::DimensionMismatch {
            expected: domain.n(),
            got: r_rest.len(),
        });
    }
    let mut m = Vec::with_capacity(domain.dim());
    m.push(0.0);
    m.extend_from_slice(r_rest);
    let f = |m: &mut Vec<f64>, r0: f64| -> Result<f64> {
        m[0] = r0;
        Ok(domain.rho_value(m)? - 1.0)
    };

    let at_axis = f(&mut m, 0.0)?;
    if !(at_axis < 0.0) {
        return Err(Error::OutsideDomain {
            rho_at_axis: at_axis + 1.0,
        });
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut f_hi = f(&mut m, hi)?;
    let mut grow = 0;
    while f_hi < 0.0 {
        lo = hi;
        hi *= 2.0;
        f_hi = f(&mut m, hi)?;
        grow += 1;
        if grow > 1000 {
            return Err(Error::RootNonConvergence {
                iterations: grow,
                residual: f_hi,
            });
        }
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }

    let d0 = domain.rho_derivative(0);
    let mut x = 0.5 * (lo + hi);
    let mut residual = f64::INFINITY;
    for it in 0..ROOT_MAX_ITER {
        let fx = f(&mut m, x)?;
        residual = fx.abs();
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let slope = d0.evaluate(&m)?;
        let newton = x - fx / slope;
        let next = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs() || hi - lo <= 4.0 * f64::EPSILON * hi {
            let fn_ = f(&mut m, next)?;
            if fn_.abs() <= ROOT_TOL {
                return Ok(next);
            }
            return Err(Error::RootNonConvergence {
                iterations: it + 1,
                residual: fn_.abs(),
            });
        }
        x = next;
    }
    Err(Error::RootNonConvergence {
        iterations: ROOT_MAX_ITER,
        residual,
    })
}

/// Density of `mu_ind` against `Π_{i≥1} R_i dR_i dΘ_i` (the `dΘ_0`
/// integral contributes a separate `2π`): `R_0 |∇psi| / |∂psi/∂R_0|`.
pub fn induced_density(domain: &ReinhardtDomain, b: &BoundaryChartPoint) -> Result<f64> {
    let m = b.moduli().as_slice();
    let (_, grad) = domain.psi_gradient(m)?;
    let normal = grad[0].abs();
    if normal == 0.0 {
        return Err(Error::VanishingNormal);
    }
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    Ok(m[0] * norm / normal)
}

/// `h_E([y]) = 2π e^{u(y psi(y))} |y|^(2n+2) (psi(y)²/2)^n |∇psi(y)|`.
pub fn h_e_weight(domain: &ReinhardtDomain, y: &ModuliPoint) -> Result<f64> {
    Ok(log_h_e_weight(domain, y.as_slice())?.exp())
}

fn log_h_e_weight(domain: &ReinhardtDomain, y: &[f64]) -> Result<f64> {
    if y.len() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            got: y.len(),
        });
    }
    let n = domain.n() as f64;
    let (psi, grad) = domain.psi_gradient(y)?;
    let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if !(grad_norm > 0.0) {
        return Err(Error::VanishingNormal);
    }
    let y_norm_sqr: f64 = y.iter().map(|v| v * v).sum();
    let u = domain.u_at_projection(y)?;
    Ok(TAU.ln() + u + (n + 1.0) * y_norm_sqr.ln() + n * (psi * psi / 2.0).ln() + grad_norm.ln())
}

/// Density of `ω_FS^n / n!` against Lebesgue measure on the chart:
/// `2^n / (1 + |z|²)^(n+1)`.
pub fn fs_volume_density(z: &ChartPoint) -> f64 {
    let n = z.coords().len() as i32;
    2f64.powi(n) / (1.0 + z.norm_sqr()).powi(n + 1)
}

/// Quadrature nodes on the boundary: moduli of a point of `M` and the log of
/// the weight (quadrature weight × Jacobians × density × `2π` powers).
#[derive(Debug, Clone)]
pub struct NodeSet {
    dim: usize,
    moduli: Vec<f64>,
    log_moduli: Vec<f64>,
    log_weight: Vec<f64>,
}

impl NodeSet {
    pub fn len(&self) -> usize {
        self.log_weight.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weight.is_empty()
    }

    pub fn moduli(&self, i: usize) -> &[f64] {
        &self.moduli[i * self.dim..(i + 1) * self.dim]
    }

    pub fn log_moduli(&self, i: usize) -> &[f64] {
        &self.log_moduli[i * self.dim..(i + 1) * self.dim]
    }

    pub fn log_weight(&self, i: usize) -> f64 {
        self.log_weight[i]
    }

    /// `Σ w_i F(m_i)` with a fixed summation order.
    pub fn integrate<F>(&self, f: F) -> f64
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let terms: Vec<f64> = (0..self.len())
            .into_par_iter()
            .map(|i| self.log_weight[i].exp() * f(self.moduli(i)))
            .collect();
        pairwise_sum(&terms)
    }

    /// `log Σ w_i exp(G(log m_i))`, evaluated sequentially.
    pub fn integrate_log<G>(&self, log_integrand: G) -> f64
    where
        G: Fn(&[f64]) -> f64,
    {
        let terms: Vec<f64> = (0..self.len())
            .map(|i| self.log_weight[i] + log_integrand(self.log_moduli(i)))
            .collect();
        log_sum_exp(&terms)
    }

    fn from_nodes(dim: usize, nodes: Vec<(Vec<f64>, f64)>) -> Self {
        let mut moduli = Vec::with_capacity(nodes.len() * dim);
        let mut log_weight = Vec::with_capacity(nodes.len());
        for (m, w) in nodes {
            moduli.extend(m);
            log_weight.push(w);
        }
        let log_moduli = moduli.iter().map(|m: &f64| m.ln()).collect();
        Self {
            dim,
            moduli,
            log_moduli,
            log_weight,
        }
    }
}

/// Tensor grid of `dims` Gauss–Legendre rules on (0, 1), flattened.
fn tensor_grid(nodes: usize, dims: usize) -> (Vec<f64>, Vec<f64>, usize) {
    let (x, w) = gauss_legendre_unit(nodes);
    let total = nodes.pow(dims as u32);
    (x, w, total)
}

fn grid_coords(mut index: usize, nodes: usize, dims: usize, out: &mut [usize]) {
    for d in (0..dims).rev() {
        out[d] = index % nodes;
        index /= nodes;
    }
}

/// Direction in the positive orthant of `R^n` from hyperspherical angles
/// `φ_k ∈ (0, π/2)`, with the surface Jacobian.
fn orthant_direction(angles: &[f64]) -> (Vec<f64>, f64) {
    let n = angles.len() + 1;
    let mut dir = Vec::with_capacity(n);
    let mut sin_prod = 1.0;
    let mut jac = 1.0;
    for (k, &phi) in angles.iter().enumerate() {
        dir.push(sin_prod * phi.cos());
        sin_prod *= phi.sin();
        jac *= phi.sin().powi((n - 2 - k) as i32);
    }
    dir.push(sin_prod);
    (dir, jac)
}

/// Builds the boundary-side node set with `nodes` points per dimension.
///
/// `D` is swept by the polar angle `θ` of the boundary curve in the
/// `(R_0, |R|)` quarter plane and an orthant direction `ω` for `R = |R| ω`.
/// Along each ray the boundary radius is `t = rho(cos θ, sin θ ω)^(-1/l)`,
/// and implicit differentiation with Euler's identity gives
/// `d|R|/dθ = t² ∂rho/∂R_0 / l`. The induced density `R_0 |∇psi|/|∂psi/∂R_0|`
/// times this Jacobian is `R_0 t² |∇rho| / l`, which stays bounded where the
/// boundary meets `R_0 = 0` (there `D` is ill-conditioned in `|R|`).
pub fn boundary_nodes(domain: &ReinhardtDomain, nodes: usize) -> Result<NodeSet> {
    let n = domain.n();
    let l = domain.l();
    let (x, w, total) = tensor_grid(nodes, n);
    let log_const = (n as f64 + 1.0) * TAU.ln() + n as f64 * FRAC_PI_2.ln() - l.ln();

    let built: Vec<Result<(Vec<f64>, f64)>> = (0..total)
        .into_par_iter()
        .map(|index| {
            let mut idx = vec![0; n];
            grid_coords(index, nodes, n, &mut idx);
            let mut log_w: f64 = idx.iter().map(|&i| w[i].ln()).sum();
            let theta = FRAC_PI_2 * x[idx[0]];
            let angles: Vec<f64> = idx[1..].iter().map(|&i| FRAC_PI_2 * x[i]).collect();
            let (dir, jac) = orthant_direction(&angles);

            let (sin, cos) = theta.sin_cos();
            let mut ray = Vec::with_capacity(n + 1);
            ray.push(cos);
            ray.extend(dir.iter().map(|d| sin * d));
            let t = domain.psi_value(&ray)?;
            let m: Vec<f64> = ray.iter().map(|v| t * v).collect();
            let r = t * sin;

            let grad = domain.rho_gradient(&m)?;
            let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if !(grad[0] > 0.0) {
                return Err(Error::VanishingNormal);
            }
            let u = domain.u().evaluate(&m)?;
            log_w += log_const
                + m[0].ln()
                + 2.0 * t.ln()
                + grad_norm.ln()
                + (n as f64 - 1.0) * r.ln()
                + jac.ln()
                + m[1..].iter().map(|v| v.ln()).sum::<f64>()
                + u;
            Ok((m, log_w))
        })
        .collect();
    let nodes_vec = built.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(NodeSet::from_nodes(n + 1, nodes_vec))
}

/// Builds the projective-side node set with `nodes` points per dimension.
pub fn projective_nodes(
    domain: &ReinhardtDomain,
    nodes: usize,
    mapping: Mapping,
) -> Result<NodeSet> {
    let n = domain.n();
    let (x, w, total) = tensor_grid(nodes, n);
    let nf = n as f64;
    let log_const = nf * TAU.ln() + (nf - 1.0) * FRAC_PI_2.ln() + nf * 2f64.ln();

    let built: Vec<Result<(Vec<f64>, f64)>> = (0..total)
        .into_par_iter()
        .map(|index| {
            let mut idx = vec![0; n];
            grid_coords(index, nodes, n, &mut idx);
            let mut log_w: f64 = idx.iter().map(|&i| w[i].ln()).sum();
            let (radius, dr_dt) = mapping.radius(x[idx[0]]);
            let angles: Vec<f64> = idx[1..].iter().map(|&i| FRAC_PI_2 * x[i]).collect();
            let (dir, jac) = orthant_direction(&angles);

            let mut y = Vec::with_capacity(n + 1);
            y.push(1.0);
            y.extend(dir.iter().map(|d| radius * d));
            let psi = domain.psi_value(&y)?;
            let log_he = log_h_e_weight(domain, &y)?;
            // log of 2^n / (1 + R²)^(n+1); the 2^n sits in log_const
            let log_fs = -(nf + 1.0) * radius.mul_add(radius, 1.0).ln();
            log_w += log_const
                + log_he
                + log_fs
                + y[1..].iter().map(|v| v.ln()).sum::<f64>()
                + (nf - 1.0) * radius.ln()
                + jac.ln()
                + dr_dt.ln();
            let m: Vec<f64> = y.iter().map(|v| v * psi).collect();
            Ok((m, log_w))
        })
        .collect();
    let nodes_vec = built.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(NodeSet::from_nodes(n + 1, nodes_vec))
}

/// A quadrature result with the difference between the last two levels as
/// error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Integral {
    pub value: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub nodes_per_dim: usize,
}

/// A logarithmic quadrature result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogIntegral {
    pub log_value: f64,
    pub rel_err: f64,
    pub nodes_per_dim: usize,
}

/// Adaptive integrator over one route with lazily built, cached node sets.
pub struct BoundaryIntegrator<'a> {
    domain: &'a ReinhardtDomain,
    route: Route,
    spec: QuadratureSpec,
    levels: Vec<OnceLock<Result<NodeSet>>>,
}

impl<'a> BoundaryIntegrator<'a> {
    pub fn new(domain: &'a ReinhardtDomain, route: Route, spec: QuadratureSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            domain,
            route,
            spec,
            levels: (0..spec.levels()).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn route(&self) -> Route {
        self.route
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    pub fn domain(&self) -> &ReinhardtDomain {
        self.domain
    }

    /// Node set at refinement `level`.
    pub fn nodes(&self, level: usize) -> Result<&NodeSet> {
        let cell = &self.levels[level];
        let built = cell.get_or_init(|| {
            let count = self.spec.nodes_at(level);
            match self.route {
                Route::Boundary => boundary_nodes(self.domain, count),
                Route::Projective => projective_nodes(self.domain, count, self.spec.mapping),
            }
        });
        built.as_ref().map_err(Clone::clone)
    }

    /// `∫_M F mu`, refining until successive levels agree to the target.
    pub fn integrate<F>(&self, f: F) -> Result<Integral>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let mut previous: Option<f64> = None;
        for level in 0..self.levels.len() {
            let value = self.nodes(level)?.integrate(&f);
            if let Some(prev) = previous {
                let abs_err = (value - prev).abs();
                let rel_err = if value != 0.0 {
                    abs_err / value.abs()
                } else {
                    abs_err
                };
                if rel_err <= self.spec.target_rel_tol {
                    return Ok(Integral {
                        value,
                        abs_err,
                        rel_err,
                        nodes_per_dim: self.spec.nodes_at(level),
                    });
                }
                if level + 1 == self.levels.len() {
                    return Err(Error::QuadratureNonConvergence {
                        previous: prev,
                        last: value,
                    });
                }
            }
            previous = Some(value);
        }
        unreachable!("at least two levels are evaluated")
    }

    /// `log ∫_M exp(G(log m)) mu`, with the integrand given in log space.
    pub fn integrate_log<G>(&self, log_integrand: G) -> Result<LogIntegral>
    where
        G: Fn(&[f64]) -> f64,
    {
        let mut previous: Option<f64> = None;
        for level in 0..self.levels.len() {
            let value = self.nodes(level)?.integrate_log(&log_integrand);
            if let Some(prev) = previous {
                let rel_err = (value - prev).exp_m1().abs();
                if rel_err <= self.spec.target_rel_tol {
                    return Ok(LogIntegral {
                        log_value: value,
                        rel_err,
                        nodes_per_dim: self.spec.nodes_at(level),
                    });
                }
                if level + 1 == self.levels.len() {
                    return Err(Error::QuadratureNonConvergence {
                        previous: prev.exp(),
                        last: value.exp(),
                    });
                }
            }
            previous = Some(value);
        }
        unreachable!("at least two levels are evaluated")
    }

    /// Many log-space integrals at once, refined level by level.
    ///
    /// Node sets are built between levels, outside the parallel map, and
    /// every integral is summed sequentially, so results do not depend on
    /// the number of worker threads.
    pub fn integrate_log_many<G>(&self, count: usize, log_integrand: G) -> Vec<Result<LogIntegral>>
    where
        G: Fn(usize, &[f64]) -> f64 + Sync,
    {
        let mut results: Vec<Option<Result<LogIntegral>>> = (0..count).map(|_| None).collect();
        let mut previous: Vec<f64> = vec![f64::NAN; count];
        let last_level = self.levels.len() - 1;
        for level in 0..=last_level {
            let nodes = match self.nodes(level) {
                Ok(nodes) => nodes,
                Err(e) => {
                    for r in results.iter_mut().filter(|r| r.is_none()) {
                        *r = Some(Err(e.clone()));
                    }
                    break;
                }
            };
            let pending: Vec<usize> = (0..count).filter(|&i| results[i].is_none()).collect();
            let values: Vec<f64> = pending
                .par_iter()
                .map(|&i| nodes.integrate_log(|log_m| log_integrand(i, log_m)))
                .collect();
            for (&i, &value) in pending.iter().zip(&values) {
                if level > 0 {
                    let prev = previous[i];
                    let rel_err = (value - prev).exp_m1().abs();
                    if rel_err <= self.spec.target_rel_tol {
                        results[i] = Some(Ok(LogIntegral {
                            log_value: value,
                            rel_err,
                            nodes_per_dim: self.spec.nodes_at(level),
                        }));
                    } else if level == last_level {
                        results[i] = Some(Err(Error::QuadratureNonConvergence {
                            previous: prev.exp(),
                            last: value.exp(),
                        }));
                    }
                }
                previous[i] = value;
            }
        }
        results
            .into_iter()
            .map(|r| r.expect("every integral is resolved by the last level"))
            .collect()
    }
}

/// `∫_M F mu` over the moduli domain `D` with a boundary solve per node.
pub fn integrate_boundary<F>(domain: &ReinhardtDomain, f: F, q: &QuadratureSpec) -> Result<Integral>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    BoundaryIntegrator::new(domain, Route::Boundary, *q)?.integrate(f)
}

/// `∫_{CP^n} π*(F) h_E ω_FS^n / n!` over the affine chart.
pub fn integrate_projective<F>(
    domain: &ReinhardtDomain,
    f: F,
    q: &QuadratureSpec,
) -> Result<Integral>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    BoundaryIntegrator::new(domain, Route::Projective, *q)?.integrate(f)
}

/// Volume of the unit sphere `S^(2n+1)`, `2π^(n+1)/n!`.
pub fn unit_sphere_volume(n: usize) -> f64 {
    2.0 * PI.powi(n as i32 + 1) / (1..=n).map(|k| k as f64).product::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn sphere(n: usize) -> ReinhardtDomain {
        let rho = (0..=n)
            .map(|i| format!("m{i}^2"))
            .collect::<Vec<_>>()
            .join(" + ");
        ReinhardtDomain::from_text(n, 2.0, &rho, "0").unwrap()
    }

    #[test]
    fn boundary_radius_examples() {
        assert!((solve_boundary_radius(&sphere(1), &[0.6]).unwrap() - 0.8).abs() < 1e-15);
        let fermat = ReinhardtDomain::from_text(1, 4.0, "m0^4 + m1^4", "0").unwrap();
        let r = solve_boundary_radius(&fermat, &[0.5]).unwrap();
        assert!((r - (1.0f64 - 0.0625).powf(0.25)).abs() < 1e-15);
        assert!(matches!(
            solve_boundary_radius(&sphere(1), &[1.5]),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn sphere_induced_density_is_one() {
        let d = sphere(1);
        let b = BoundaryChartPoint::new(&d, ModuliPoint::new(vec![0.8, 0.6])).unwrap();
        assert!((induced_density(&d, &b).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn h_e_examples() {
        let d = sphere(1);
        let y = ModuliPoint::new(vec![0.6, 0.8]);
        assert!((h_e_weight(&d, &y).unwrap() - PI).abs() < 1e-14);
        assert!((h_e_weight(&d, &y.scaled(2.0)).unwrap() - PI).abs() < 1e-14);
        let weighted = ReinhardtDomain::from_text(1, 2.0, "m0^2 + m1^2", "log(2)").unwrap();
        assert!((h_e_weight(&weighted, &y).unwrap() - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn fs_density_at_origin() {
        assert_eq!(
            fs_volume_density(&ChartPoint::new(vec![Complex64::new(0.0, 0.0)])),
            2.0
        );
    }

    #[test]
    fn spec_rejects_too_few_nodes() {
        assert!(QuadratureSpec::new(4, Mapping::Algebraic, 1, 1e-8).is_err());
        assert!(QuadratureSpec::new(16, Mapping::Algebraic, 1, 0.0).is_err());
    }

    #[test]
    fn orthant_direction_is_unit() {
        let (d, _) = orthant_direction(&[0.3, 1.1]);
        assert!((d.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(d.iter().all(|v| *v > 0.0));
    }
}
