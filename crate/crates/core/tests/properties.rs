use std::sync::OnceLock;

use proptest::prelude::*;
use szego_core::curvature::{curvature_matrix, det_curvature_affine, det_curvature_x, ChartPoint};
use szego_core::expr::{Func, Node, Rational};
use szego_core::measure::{h_e_weight, BoundaryIntegrator, Mapping, QuadratureSpec, Route};
use szego_core::szego::{partial_szego, NormTable};
use szego_core::{Complex64, ComplexPoint, Expression, ModuliPoint, ReinhardtDomain};

fn cubic_quartic() -> ReinhardtDomain {
    ReinhardtDomain::from_text(
        2,
        4.0,
        "m0^4 + m1^4 + m2^4 + (m0^2*m1^2 + m0^2*m2^2 + m1^2*m2^2)",
        "0",
    )
    .unwrap()
}

fn golden_domains() -> Vec<ReinhardtDomain> {
    vec![
        ReinhardtDomain::from_text(1, 2.0, "m0^2 + m1^2", "0").unwrap(),
        ReinhardtDomain::from_text(1, 2.0, "m0^2 + 4*m1^2", "0").unwrap(),
        ReinhardtDomain::from_text(1, 4.0, "m0^4 + m1^4", "0").unwrap(),
        cubic_quartic(),
    ]
}

const VARS: usize = 3;

fn any_expr() -> impl Strategy<Value = Node> {
    let leaf = prop_oneof![
        (1u32..40).prop_map(|c| Node::Const(c as f64 / 4.0)),
        (0..VARS).prop_map(Node::Var),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Node::Add(a.into(), b.into())),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Node::Sub(a.into(), b.into())),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Node::Mul(a.into(), b.into())),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Node::Div(a.into(), b.into())),
            inner.clone().prop_map(|a| Node::Neg(a.into())),
            (inner.clone(), -3i64..4, 1i64..4)
                .prop_map(|(a, p, q)| Node::Pow(a.into(), Rational::new(p, q))),
            (inner, 0..3usize)
                .prop_map(|(a, f)| { Node::Func([Func::Sqrt, Func::Exp, Func::Log][f], a.into()) }),
        ]
    })
}

/// Expressions that stay positive and smooth on positive moduli.
fn positive_expr() -> impl Strategy<Value = Node> {
    let leaf = prop_oneof![
        (2u32..12).prop_map(|c| Node::Const(c as f64 / 4.0)),
        (0..VARS).prop_map(Node::Var),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Node::Add(a.into(), b.into())),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Node::Mul(a.into(), b.into())),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Node::Div(a.into(), b.into())),
            (inner.clone(), -2i64..4, 1i64..4)
                .prop_map(|(a, p, q)| Node::Pow(a.into(), Rational::new(p, q))),
            inner.clone().prop_map(|a| Node::Func(Func::Sqrt, a.into())),
            inner.clone().prop_map(|a| Node::Func(
                Func::Exp,
                Node::Div(a.into(), Node::Const(4.0).into()).into()
            )),
            inner.prop_map(|a| Node::Func(
                Func::Log,
                Node::Add(Node::Const(1.0).into(), a.into()).into()
            )),
        ]
    })
}

fn moduli() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.5f64..2.0, VARS)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn print_parse_is_a_fixed_point(node in any_expr()) {
        // parsing folds signs into constants, so the first round trip may
        // normalize; after that printing and parsing must be stable
        let e = Expression::from_node(node, VARS).unwrap();
        let once = Expression::parse(&e.to_string(), VARS).unwrap();
        let printed = once.to_string();
        let twice = Expression::parse(&printed, VARS).unwrap();
        prop_assert_eq!(twice.to_string(), printed);
        prop_assert_eq!(twice, once);
    }

    #[test]
    fn jets_match_finite_differences(node in positive_expr(), m in moduli()) {
        let e = Expression::from_node(node, VARS).unwrap();
        let jet = e.eval_jet2(&m).unwrap();
        let f = |p: &[f64]| e.evaluate(p).unwrap();
        let h = 1e-4;
        let scale = 1.0 + jet.value().abs()
            + jet.hessian_matrix().iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        for i in 0..VARS {
            let shifted = |di: f64, j: usize, dj: f64| {
                let mut p = m.clone();
                p[i] += di;
                p[j] += dj;
                f(&p)
            };
            let grad = (shifted(h, i, 0.0) - shifted(-h, i, 0.0)) / (2.0 * h);
            prop_assert!((grad - jet.gradient()[i]).abs() <= 1e-6 * scale);
            for j in 0..VARS {
                let fd = (shifted(h, j, h) - shifted(h, j, -h) - shifted(-h, j, h)
                    + shifted(-h, j, -h))
                    / (4.0 * h * h);
                prop_assert!(
                    (fd - jet.hessian(i, j)).abs() <= 1e-6 * scale,
                    "∂{}∂{}: {} vs {}", i, j, fd, jet.hessian(i, j)
                );
            }
        }
    }

    #[test]
    fn differentiation_is_linear(a in positive_expr(), b in positive_expr(), c in 0.5f64..3.0, m in moduli()) {
        let combo = Node::Add(Node::Mul(Node::Const(c).into(), a.clone().into()).into(), b.clone().into());
        let combo = Expression::from_node(combo, VARS).unwrap();
        let a = Expression::from_node(a, VARS).unwrap();
        let b = Expression::from_node(b, VARS).unwrap();
        for i in 0..VARS {
            let lhs = combo.differentiate(i).unwrap().evaluate(&m).unwrap();
            let rhs = c * a.differentiate(i).unwrap().evaluate(&m).unwrap()
                + b.differentiate(i).unwrap().evaluate(&m).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        }
    }
}

fn point3() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        proptest::collection::vec(0.2f64..2.0, 3),
        proptest::collection::vec(-3.1f64..3.1, 3),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn euler_residuals_vanish((m, phases) in point3()) {
        let d = cubic_quartic();
        let r = d.euler_residuals(&ComplexPoint::from_polar(&m, &phases)).unwrap();
        prop_assert!(r.max_relative() <= 1e-10);
    }

    #[test]
    fn h_e_weight_is_scale_invariant(m in proptest::collection::vec(0.2f64..2.0, 3), c in 0.1f64..10.0) {
        let d = cubic_quartic();
        let y = ModuliPoint::new(m);
        let a = h_e_weight(&d, &y).unwrap();
        let b = h_e_weight(&d, &y.scaled(c)).unwrap();
        prop_assert!((a / b - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn x_determinant_is_scale_and_phase_invariant((m, phases) in point3(), c in 0.1f64..10.0) {
        let d = cubic_quartic();
        let x = ComplexPoint::from_polar(&m, &phases);
        let a = det_curvature_x(&d, &x).unwrap();
        let b = det_curvature_x(&d, &x.scaled(c)).unwrap();
        let rotated = det_curvature_x(&d, &ComplexPoint::from_moduli(&m)).unwrap();
        prop_assert!((a / b - 1.0).abs() <= 1e-12);
        prop_assert!((a / rotated - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn curvature_determinants_agree((m, phases) in point3()) {
        let d = cubic_quartic();
        let z = ChartPoint::new(vec![
            Complex64::from_polar(m[1] / m[0], phases[1]),
            Complex64::from_polar(m[2] / m[0], phases[2]),
        ]);
        let direct = curvature_matrix(&d, &z).unwrap().determinant();
        let affine = det_curvature_affine(&d, &z).unwrap();
        let x = det_curvature_x(&d, &z.homogeneous()).unwrap();
        prop_assert!((direct / affine - 1.0).abs() <= 1e-10);
        prop_assert!((affine / x - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn curvature_is_positive_on_golden_domains(r in proptest::collection::vec(0.05f64..5.0, 2), phases in proptest::collection::vec(-3.1f64..3.1, 2)) {
        for d in golden_domains() {
            let z = ChartPoint::new(
                (0..d.n()).map(|i| Complex64::from_polar(r[i], phases[i])).collect(),
            );
            let eig = curvature_matrix(&d, &z).unwrap().eigenvalues();
            prop_assert!(eig[0] > 0.0);
        }
    }
}

fn sphere_table() -> &'static (ReinhardtDomain, NormTable) {
    static TABLE: OnceLock<(ReinhardtDomain, NormTable)> = OnceLock::new();
    TABLE.get_or_init(|| {
        let d = ReinhardtDomain::from_text(1, 2.0, "m0^2 + m1^2", "0").unwrap();
        let q = QuadratureSpec::new(32, Mapping::Algebraic, 1, 1e-12).unwrap();
        let table = {
            let integrator = BoundaryIntegrator::new(&d, Route::Boundary, q).unwrap();
            NormTable::compute(&integrator, 9).unwrap()
        };
        (d, table)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_scales_with_degree(m in proptest::collection::vec(0.1f64..1.0, 2), c in 0.2f64..3.0) {
        let (d, table) = sphere_table();
        let x = ComplexPoint::from_moduli(&m);
        let a = partial_szego(d, 9, &x, table).unwrap();
        let b = partial_szego(d, 9, &x.scaled(c), table).unwrap();
        prop_assert!((b / (c.powi(18) * a) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn kernel_depends_only_on_moduli(m in proptest::collection::vec(0.1f64..1.0, 2), phases in proptest::collection::vec(-3.1f64..3.1, 2)) {
        let (d, table) = sphere_table();
        let a = partial_szego(d, 9, &ComplexPoint::from_moduli(&m), table).unwrap();
        let b = partial_szego(d, 9, &ComplexPoint::from_polar(&m, &phases), table).unwrap();
        prop_assert!((a / b - 1.0).abs() <= 1e-14);
    }
}
