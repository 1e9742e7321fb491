//! Partial Szegő kernels of homogeneous pseudoconvex Reinhardt domains.
//!
//! A domain is given by a defining function `rho(|x_0|, .., |x_n|)`,
//! homogeneous of order `l`, together with a boundary log-weight `u`. The
//! crate computes monomial norms on the boundary `rho = 1` by quadrature
//! (two independent integral representations), assembles the diagonal
//! partial Szegő kernel `Π_k`, evaluates the closed-form coefficients of its
//! large-`k` expansion, and fits those coefficients back out of the computed
//! kernel sequence.
//!
//! Module map:
//!
//! - [`expr`]: expression parsing, evaluation, symbolic derivatives, jets.
//! - [`domain`]: the domain, `psi = rho^(-1/l)`, complex gradients/Hessians.
//! - [`curvature`]: curvature of the induced metric on the hyperplane bundle.
//! - [`measure`]: boundary measure, weight `h_E`, quadrature on both sides.
//! - [`szego`]: multi-indices, norm tables, `Π_k`, Bergman diagonal.
//! - [`asymptotics`]: closed-form `a0`, `a1`, expansion fitting and reports.

// `!(x > 0.0)` is used on purpose so that NaN is rejected with the bad values
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// index loops mirror the matrix formulas they implement
#![allow(clippy::needless_range_loop)]

pub mod asymptotics;
pub mod curvature;
pub mod domain;
pub mod error;
pub mod expr;
pub mod measure;
mod numeric;
pub mod szego;

pub use asymptotics::{
    a0_closed_form, a1_closed_form, expansion_report, fit_expansion, verify_expansion,
    AsymptoticCoefficients, ExpansionReport, FitResult,
};
pub use curvature::{ChartPoint, CurvatureMatrix};
pub use domain::{ComplexHessian, ComplexPoint, ReinhardtDomain, ValidationReport};
pub use error::{Error, Result};
pub use expr::{Expression, JetValue, ModuliPoint};
pub use measure::{Mapping, QuadratureSpec, Route};
pub use szego::{MultiIndex, NormTable};

pub use num_complex::Complex64;
