//! Chain-rule identities checked against finite differences of `rho` as a
//! function of the real and imaginary parts of the coordinates.

#![allow(clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use szego_core::{Complex64, ComplexPoint, ReinhardtDomain};

fn rho_real(d: &ReinhardtDomain, re_im: &[f64]) -> f64 {
    let m: Vec<f64> = re_im.chunks(2).map(|c| c[0].hypot(c[1])).collect();
    d.rho_value(&m).unwrap()
}

fn domains() -> Vec<ReinhardtDomain> {
    vec![
        ReinhardtDomain::from_text(1, 2.0, "m0^2 + 4*m1^2", "0").unwrap(),
        ReinhardtDomain::from_text(1, 4.0, "m0^4 + m1^4", "0").unwrap(),
        ReinhardtDomain::from_text(
            2,
            4.0,
            "m0^4 + m1^4 + m2^4 + (m0^2*m1^2 + m0^2*m2^2 + m1^2*m2^2)",
            "0",
        )
        .unwrap(),
    ]
}

#[test]
fn complex_derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = 1e-4;
    for d in domains() {
        let dim = d.dim();
        for _ in 0..10 {
            let x: Vec<Complex64> = (0..dim)
                .map(|_| Complex64::from_polar(rng.gen_range(0.3..1.5), rng.gen_range(-3.0..3.0)))
                .collect();
            let v: Vec<f64> = x.iter().flat_map(|c| [c.re, c.im]).collect();
            let f = |p: &[f64]| rho_real(&d, p);
            let partial = |a: usize| {
                let mut p = v.clone();
                p[a] += h;
                let fp = f(&p);
                p[a] -= 2.0 * h;
                (fp - f(&p)) / (2.0 * h)
            };
            let second = |a: usize, b: usize| {
                let eval = |sa: f64, sb: f64| {
                    let mut p = v.clone();
                    p[a] += sa;
                    p[b] += sb;
                    f(&p)
                };
                (eval(h, h) - eval(h, -h) - eval(-h, h) + eval(-h, -h)) / (4.0 * h * h)
            };

            let point = ComplexPoint::new(x.clone());
            let grad = d.complex_gradient(&point).unwrap();
            let hess = d.complex_hessian(&point).unwrap();
            let scale = hess.full.iter().map(|c| c.norm()).fold(0.0, f64::max);
            for i in 0..dim {
                let fd = Complex64::new(partial(2 * i), partial(2 * i + 1)) * 0.5;
                assert!((fd - grad[i]).norm() <= 1e-6 * grad[i].norm().max(1.0));
                for j in 0..dim {
                    let (ai, bi, aj, bj) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
                    let fd = Complex64::new(
                        second(ai, aj) + second(bi, bj),
                        second(ai, bj) - second(bi, aj),
                    ) * 0.25;
                    let rel = (fd - hess.full[(i, j)]).norm() / scale;
                    assert!(rel <= 1e-6, "entry ({i},{j}): rel {rel:e}");
                }
            }
        }
    }
}
