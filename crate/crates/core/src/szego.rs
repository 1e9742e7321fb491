//! Degree-`k` monomial norms and the diagonal partial Szegő kernel
//!
//! `Π_k(x, x) = Σ_{|J| = k} |x^J|² / ⟨x^J, x^J⟩_mu`.
//!
//! Norms are stored as logarithms and every sum is evaluated with a
//! max-shift, so the kernel is usable far beyond the range where the norms
//! themselves over- or underflow.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::curvature::ChartPoint;
use crate::domain::{ComplexPoint, ReinhardtDomain};
use crate::error::{Error, Result};
use crate::expr::ModuliPoint;
use crate::measure::{h_e_weight, BoundaryIntegrator, Mapping, QuadratureSpec, Route};
use crate::numeric::log_sum_exp;

/// Exponent vector `J = (j_0, .., j_n)` of the monomial `x^J`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn new(j: Vec<u32>) -> Self {
        Self(j)
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&j| j as usize).sum()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// `log |x^J|²` from the log-moduli; `-∞` if a used modulus is zero.
    pub fn log_abs_sqr(&self, log_moduli: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(log_moduli)
            .filter(|(&j, _)| j > 0)
            .map(|(&j, &lm)| 2.0 * j as f64 * lm)
            .sum()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|j| j.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// All compositions of `k` into `n + 1` parts, in descending lexicographic
/// order: `(k, 0, .., 0)` first, `(0, .., 0, k)` last.
pub fn enumerate_multi_indices(n: usize, k: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut current = vec![0u32; n + 1];
    fill(&mut current, 0, k, &mut out);
    out
}

fn fill(current: &mut Vec<u32>, pos: usize, remaining: usize, out: &mut Vec<MultiIndex>) {
    if pos + 1 == current.len() {
        current[pos] = remaining as u32;
        out.push(MultiIndex(current.clone()));
        return;
    }
    for j in (0..=remaining).rev() {
        current[pos] = j as u32;
        fill(current, pos + 1, remaining - j, out);
    }
}

/// Log-norm of one monomial with its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormEntry {
    pub log_norm: f64,
    pub rel_err: f64,
}

/// Norms of all degree-`k` monomials computed along one route.
#[derive(Debug, Clone, PartialEq)]
pub struct NormTable {
    n: usize,
    k: usize,
    route: Route,
    entries: BTreeMap<MultiIndex, NormEntry>,
    failures: Vec<(MultiIndex, Error)>,
}

impl NormTable {
    /// Computes every norm of degree `k`; failed quadratures are recorded and
    /// leave the table incomplete.
    pub fn compute(integrator: &BoundaryIntegrator<'_>, k: usize) -> Result<Self> {
        let domain = integrator.domain();
        if integrator.route() == Route::Projective && k == 0 {
            // degree zero has no decaying factor on the chart
            let spec = QuadratureSpec {
                nodes_per_dim: 2 * integrator.spec().nodes_per_dim,
                mapping: Mapping::Tangent,
                ..*integrator.spec()
            };
            let constant = BoundaryIntegrator::new(domain, Route::Projective, spec)?;
            return Self::compute_with(&constant, k);
        }
        Self::compute_with(integrator, k)
    }

    fn compute_with(integrator: &BoundaryIntegrator<'_>, k: usize) -> Result<Self> {
        let n = integrator.domain().n();
        let indices = enumerate_multi_indices(n, k);
        let results =
            integrator.integrate_log_many(indices.len(), |i, log_m| indices[i].log_abs_sqr(log_m));
        let mut table = Self::empty(n, k, integrator.route());
        for (index, result) in indices.into_iter().zip(results) {
            match result {
                Ok(r) => {
                    table.entries.insert(
                        index,
                        NormEntry {
                            log_norm: r.log_value,
                            rel_err: r.rel_err,
                        },
                    );
                }
                Err(e) => table.failures.push((index, e)),
            }
        }
        Ok(table)
    }

    /// An empty table to be filled with [`NormTable::insert`].
    pub fn empty(n: usize, k: usize, route: Route) -> Self {
        Self {
            n,
            k,
            route,
            entries: BTreeMap::new(),
            failures: Vec::new(),
        }
    }

    pub fn insert(&mut self, index: MultiIndex, entry: NormEntry) -> Result<()> {
        if index.0.len() != self.n + 1 {
            return Err(Error::DimensionMismatch {
                expected: self.n + 1,
                got: index.0.len(),
            });
        }
        if index.degree() != self.k {
            return Err(Error::DegreeMismatch {
                table: self.k,
                requested: index.degree(),
            });
        }
        if !entry.log_norm.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "non-finite log-norm for {index}"
            )));
        }
        self.entries.insert(index, entry);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn route(&self) -> Route {
        self.route
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Whether every one of the `C(n + k, n)` norms is present.
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty() && self.entries.len() == binomial(self.n + self.k, self.n)
    }

    pub fn get(&self, index: &MultiIndex) -> Option<&NormEntry> {
        self.entries.get(index)
    }

    /// Entries in enumeration order.
    pub fn entries(&self) -> impl Iterator<Item = (&MultiIndex, &NormEntry)> {
        self.entries.iter().rev()
    }

    pub fn failures(&self) -> &[(MultiIndex, Error)] {
        &self.failures
    }

    /// Largest quadrature error estimate in the table.
    pub fn max_rel_err(&self) -> f64 {
        self.entries.values().map(|e| e.rel_err).fold(0.0, f64::max)
    }

    /// `log Σ_J exp(G_J − log‖x^J‖²)` over all degree-`k` indices, skipping
    /// terms whose `G_J` is `-∞`.
    fn log_sum<F>(&self, k: usize, log_term: F) -> Result<f64>
    where
        F: Fn(&MultiIndex) -> f64,
    {
        if k != self.k {
            return Err(Error::DegreeMismatch {
                table: self.k,
                requested: k,
            });
        }
        let mut terms = Vec::new();
        for index in enumerate_multi_indices(self.n, k) {
            let g = log_term(&index);
            if g == f64::NEG_INFINITY {
                continue;
            }
            let entry = self
                .entries
                .get(&index)
                .ok_or_else(|| Error::MissingEntry(index.0.clone()))?;
            terms.push(g - entry.log_norm);
        }
        Ok(log_sum_exp(&terms))
    }
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// `log ⟨x^J, x^J⟩_mu` by one route, with the relative error estimate.
pub fn monomial_norm(
    domain: &ReinhardtDomain,
    index: &MultiIndex,
    q: &QuadratureSpec,
    route: Route,
) -> Result<NormEntry> {
    if index.0.len() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            got: index.0.len(),
        });
    }
    let mut spec = *q;
    if route == Route::Projective && index.degree() == 0 {
        spec.nodes_per_dim *= 2;
        spec.mapping = Mapping::Tangent;
    }
    let integrator = BoundaryIntegrator::new(domain, route, spec)?;
    let r = integrator.integrate_log(|log_m| index.log_abs_sqr(log_m))?;
    Ok(NormEntry {
        log_norm: r.log_value,
        rel_err: r.rel_err,
    })
}

fn log_moduli(x: &ComplexPoint) -> Vec<f64> {
    x.coords().iter().map(|c| c.norm().ln()).collect()
}

/// `log Π_k(x, x)`.
pub fn log_partial_szego(
    domain: &ReinhardtDomain,
    k: usize,
    x: &ComplexPoint,
    table: &NormTable,
) -> Result<f64> {
    if x.dim() != domain.dim() || table.n() != domain.n() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            got: x.dim(),
        });
    }
    let lm = log_moduli(x);
    table.log_sum(k, |index| index.log_abs_sqr(&lm))
}

/// `Π_k(x, x) = Σ_{|J| = k} |x^J|² / ⟨x^J, x^J⟩_mu`.
///
/// On a coordinate axis the terms that vanish there are skipped.
pub fn partial_szego(
    domain: &ReinhardtDomain,
    k: usize,
    x: &ComplexPoint,
    table: &NormTable,
) -> Result<f64> {
    Ok(log_partial_szego(domain, k, x, table)?.exp())
}

/// Boundary projection of an interior point and the exact scaling
/// `Π_k(x) = rho(x)^(2k/l) Π_k(x psi(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorRescale {
    pub projection: ComplexPoint,
    pub rho: f64,
    pub l: f64,
}

impl InteriorRescale {
    pub fn factor(&self, k: usize) -> f64 {
        self.log_factor(k).exp()
    }

    pub fn log_factor(&self, k: usize) -> f64 {
        2.0 * k as f64 / self.l * self.rho.ln()
    }
}

pub fn interior_rescale(domain: &ReinhardtDomain, x: &ComplexPoint) -> Result<InteriorRescale> {
    if x.norm_sqr() == 0.0 {
        return Err(Error::InvalidArgument(
            "zero vector has no boundary projection".into(),
        ));
    }
    let m = x.moduli();
    let rho = domain.rho_value(m.as_slice())?;
    let psi = domain.psi_value(m.as_slice())?;
    Ok(InteriorRescale {
        projection: x.scaled(psi),
        rho,
        l: domain.l(),
    })
}

/// Diagonal Bergman kernel `B_k([x], [x])` for `O(k) ⊗ E` at the chart point
/// `[1, z]`, summed directly over the chart monomials.
pub fn bergman_diag(
    domain: &ReinhardtDomain,
    k: usize,
    z: &ChartPoint,
    table: &NormTable,
) -> Result<f64> {
    let y = z.homogeneous().moduli();
    let psi = domain.psi_value(y.as_slice())?;
    let h_e = h_e_weight(domain, &y)?;
    let log_y: Vec<f64> = y.as_slice().iter().map(|v| v.ln()).collect();
    let log_psi_power = 2.0 * k as f64 * psi.ln();
    let log_sum = table.log_sum(k, |index| index.log_abs_sqr(&log_y) + log_psi_power)?;
    Ok(h_e * log_sum.exp())
}

/// Boundary point over the chart point `[1, z]`, with `z`'s phases.
pub fn boundary_point_over(domain: &ReinhardtDomain, z: &ChartPoint) -> Result<ComplexPoint> {
    let x = z.homogeneous();
    let psi = domain.psi_value(x.moduli().as_slice())?;
    Ok(x.scaled(psi))
}

/// Moduli of the boundary point over `[1, z]`.
pub fn boundary_moduli_over(domain: &ReinhardtDomain, z: &ChartPoint) -> Result<ModuliPoint> {
    Ok(boundary_point_over(domain, z)?.moduli())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sphere1() -> ReinhardtDomain {
        ReinhardtDomain::from_text(1, 2.0, "m0^2 + m1^2", "0").unwrap()
    }

    #[test]
    fn enumeration_examples() {
        let idx = enumerate_multi_indices(1, 2);
        let got: Vec<Vec<u32>> = idx.into_iter().map(|m| m.0).collect();
        assert_eq!(got, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(enumerate_multi_indices(2, 3).len(), 10);
        assert_eq!(enumerate_multi_indices(2, 0)[0].0, vec![0, 0, 0]);
    }

    #[test]
    fn sphere_norms_by_both_routes() {
        let d = sphere1();
        let q = QuadratureSpec::new(64, Mapping::Algebraic, 2, 1e-12).unwrap();
        for route in [Route::Boundary, Route::Projective] {
            let e = monomial_norm(&d, &MultiIndex::new(vec![1, 1]), &q, route).unwrap();
            assert!(
                (e.log_norm - (PI * PI / 3.0).ln()).abs() < 1e-12,
                "{route:?}"
            );
            let e = monomial_norm(&d, &MultiIndex::new(vec![0, 0]), &q, route).unwrap();
            assert!(
                (e.log_norm - (2.0 * PI * PI).ln()).abs() < 1e-12,
                "{route:?}"
            );
        }
    }

    #[test]
    fn kernel_on_unit_sphere() {
        let d = sphere1();
        let q = QuadratureSpec::new(64, Mapping::Algebraic, 2, 1e-12).unwrap();
        let integrator = BoundaryIntegrator::new(&d, Route::Boundary, q).unwrap();
        let k = 7;
        let table = NormTable::compute(&integrator, k).unwrap();
        assert!(table.is_complete());
        let x = ComplexPoint::from_polar(&[0.6, 0.8], &[0.3, -1.2]);
        let pi = partial_szego(&d, k, &x, &table).unwrap();
        assert!((pi / ((k as f64 + 1.0) / (2.0 * PI * PI)) - 1.0).abs() < 1e-12);
        assert!(matches!(
            partial_szego(&d, k + 1, &x, &table),
            Err(Error::DegreeMismatch { .. })
        ));
    }

    #[test]
    fn axis_points_skip_vanishing_terms() {
        let d = sphere1();
        let q = QuadratureSpec::new(32, Mapping::Algebraic, 2, 1e-12).unwrap();
        let integrator = BoundaryIntegrator::new(&d, Route::Boundary, q).unwrap();
        let table = NormTable::compute(&integrator, 3).unwrap();
        let pi = partial_szego(&d, 3, &ComplexPoint::from_moduli(&[1.0, 0.0]), &table).unwrap();
        assert!((pi - 4.0 / (2.0 * PI * PI)).abs() < 1e-12);
    }

    #[test]
    fn interior_rescale_example() {
        let d = sphere1();
        let r = interior_rescale(&d, &ComplexPoint::from_moduli(&[0.3, 0.4])).unwrap();
        let m = r.projection.moduli();
        assert!((m.0[0] - 0.6).abs() < 1e-15 && (m.0[1] - 0.8).abs() < 1e-15);
        assert!((r.factor(3) - 0.25f64.powi(3)).abs() < 1e-15);
        assert!(interior_rescale(&d, &ComplexPoint::from_moduli(&[0.0, 0.0])).is_err());
    }
}
