use fene::grid::quadrature;
use fene::model::{equilibrium_density, potential_gradient, potential_value};
use fene::{ConfigGrid, PotentialParams};
use proptest::prelude::*;

fn interior_point() -> impl Strategy<Value = [f64; 2]> {
    (0.0..0.9f64, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| [r * t.cos(), r * t.sin()])
}

fn central_diff(f: impl Fn([f64; 2]) -> f64, r: [f64; 2], h: f64) -> [f64; 2] {
    [
        (f([r[0] + h, r[1]]) - f([r[0] - h, r[1]])) / (2.0 * h),
        (f([r[0], r[1] + h]) - f([r[0], r[1] - h])) / (2.0 * h),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradient_matches_finite_differences(r in interior_point(), k in 0.3..4.0f64) {
        let p = PotentialParams::new(k, 1.0).unwrap();
        let g = potential_gradient(r, &p).unwrap();
        let scale = 1.0 / (1.0 - (r[0] * r[0] + r[1] * r[1]));
        // error is O(h^2) with a constant growing like the third derivative near the wall
        let errs: Vec<f64> = [1e-3, 5e-4].iter().map(|&h| {
            let fd = central_diff(|x| potential_value(x, &p).unwrap(), r, h);
            (fd[0] - g[0]).abs().max((fd[1] - g[1]).abs())
        }).collect();
        prop_assert!(errs[0] <= 20.0 * k * scale.powi(3) * 1e-6, "err {} at {:?}", errs[0], r);
        if errs[0] > 1e-9 {
            prop_assert!(errs[1] < 0.3 * errs[0], "not second order: {:?}", errs);
        }
    }

    #[test]
    fn equilibrium_gradient_identity(r in interior_point(), k in 0.3..4.0f64) {
        let p = PotentialParams::new(k, 1.0).unwrap();
        let psi = equilibrium_density(r, &p);
        let gu = potential_gradient(r, &p).unwrap();
        let fd = central_diff(|x| equilibrium_density(x, &p), r, 1e-4);
        let scale = 1.0 / (1.0 - (r[0] * r[0] + r[1] * r[1]));
        for i in 0..2 {
            prop_assert!((fd[i] + psi * gu[i]).abs() <= 1e-5 * (1.0 + k).powi(3) * scale.powi(3));
        }
    }

    #[test]
    fn quadrature_is_linear_and_positive(
        seed in prop::collection::vec(0.0..10.0f64, 64),
        other in prop::collection::vec(-5.0..5.0f64, 64),
        a in -3.0..3.0f64,
    ) {
        let g = ConfigGrid::new(8, 8).unwrap();
        let q = quadrature(&seed, &g).unwrap();
        prop_assert!(q >= 0.0);
        let combo: Vec<f64> = seed.iter().zip(&other).map(|(x, y)| x + a * y).collect();
        let lhs = quadrature(&combo, &g).unwrap();
        let rhs = q + a * quadrature(&other, &g).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }
}

#[test]
fn equilibrium_quadrature_converges_at_second_order() {
    for k in [2.0, 3.5] {
        let p = PotentialParams::new(k, 1.0).unwrap();
        let err = |n: usize| {
            let g = ConfigGrid::new(n, n).unwrap();
            let v = g.sample(|r| equilibrium_density(r, &p));
            (quadrature(&v, &g).unwrap() - 1.0).abs()
        };
        let (e1, e2) = (err(32), err(64));
        assert!((e1 / e2).log2() >= 1.9, "k = {k}: {e1} -> {e2}");
    }
}
