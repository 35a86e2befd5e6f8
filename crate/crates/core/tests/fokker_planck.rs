use fene::diagnostics::{entropy_dissipation, free_energy, relative_entropy};
use fene::stress::{equilibrium_stress, kramers_stress};
use fene::{ConfigGrid, DiscreteEquilibrium, FokkerPlanck, PhaseDensity, PotentialParams, VelocityGradient};
use proptest::prelude::*;

fn solver(n: usize, k: f64, dt: f64) -> FokkerPlanck {
    FokkerPlanck::new(ConfigGrid::new(n, n).unwrap(), PotentialParams::new(k, 1.0).unwrap(), dt).unwrap()
}

fn density(grid: &ConfigGrid, raw: &[f64]) -> PhaseDensity {
    PhaseDensity::new(raw.to_vec(), grid).unwrap().normalized_to(1.0, grid)
}

/// Trace-free gradient scaled so its Courant number is `courant`.
fn gradient_at(fp: &FokkerPlanck, a: f64, b: f64, c: f64, courant: f64) -> VelocityGradient {
    let raw = VelocityGradient::new([[a, b], [c, -a]]).unwrap();
    let cn = fp.courant_number(&raw);
    if cn == 0.0 {
        return raw;
    }
    let s = courant / cn;
    VelocityGradient::new([[a * s, b * s], [c * s, -a * s]]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn step_conserves_mass_and_positivity(
        raw in prop::collection::vec(0.0..1.0f64, 256),
        a in -1.0..1.0f64, b in -1.0..1.0f64, c in -1.0..1.0f64,
        courant in 0.0..1.0f64,
        k in 0.5..3.0f64,
    ) {
        let fp = solver(16, k, 1e-2);
        let psi = density(fp.grid(), &raw);
        let kappa = gradient_at(&fp, a, b, c, courant);
        let out = fp.step(&psi, &kappa).unwrap();
        prop_assert!((out.mass() - psi.mass()).abs() <= 1e-12 * psi.mass());
        prop_assert!(out.values().iter().all(|&v| v >= -1e-13));
    }

    #[test]
    fn relaxation_decreases_free_energy(raw in prop::collection::vec(0.01..1.0f64, 256)) {
        let fp = solver(16, 1.0, 5e-3);
        let (g, eq) = (fp.grid(), fp.equilibrium());
        let mut psi = density(g, &raw);
        let mut f = relative_entropy(psi.values(), 1.0, g, eq);
        for _ in 0..20 {
            psi = fp.step(&psi, &VelocityGradient::ZERO).unwrap();
            let next = relative_entropy(psi.values(), 1.0, g, eq);
            prop_assert!(next <= f + 1e-12 * (1.0 + f), "{f} -> {next}");
            f = next;
        }
    }

    #[test]
    fn stress_is_symmetric_psd(raw in prop::collection::vec(0.0..1.0f64, 256), k in 0.5..3.0f64) {
        let g = ConfigGrid::new(16, 16).unwrap();
        let p = PotentialParams::new(k, 1.0).unwrap();
        let tau = kramers_stress(&PhaseDensity::new(raw, &g).unwrap(), &g, &p).unwrap();
        prop_assert_eq!(tau.tau[0][1], tau.tau[1][0]);
        prop_assert!(tau.eigenvalues()[0] >= -1e-12);
    }

    #[test]
    fn free_energy_is_convex(
        r1 in prop::collection::vec(0.0..1.0f64, 256),
        r2 in prop::collection::vec(0.0..1.0f64, 256),
    ) {
        let g = ConfigGrid::new(16, 16).unwrap();
        let eq = DiscreteEquilibrium::new(&g, &PotentialParams::new(1.0, 1.0).unwrap());
        let (p1, p2) = (density(&g, &r1), density(&g, &r2));
        let mid: Vec<f64> = p1.values().iter().zip(p2.values()).map(|(a, b)| 0.5 * (a + b)).collect();
        let mid = PhaseDensity::new(mid, &g).unwrap();
        let f = |p: &PhaseDensity| free_energy(std::slice::from_ref(p), None, &g, &eq).unwrap();
        prop_assert!(f(&mid) <= 0.5 * (f(&p1) + f(&p2)) + 1e-13);
    }

    #[test]
    fn entropy_dissipation_is_one_homogeneous(raw in prop::collection::vec(0.01..1.0f64, 256), c in 0.01..100.0f64) {
        let g = ConfigGrid::new(16, 16).unwrap();
        let eq = DiscreteEquilibrium::new(&g, &PotentialParams::new(1.0, 1.0).unwrap());
        let psi = density(&g, &raw);
        let scaled = PhaseDensity::new(psi.values().iter().map(|v| c * v).collect(), &g).unwrap();
        let d1 = entropy_dissipation(&psi, &g, &eq).unwrap().value;
        let dc = entropy_dissipation(&scaled, &g, &eq).unwrap().value;
        prop_assert!((dc - c * d1).abs() <= 1e-10 * c * d1.max(1e-300));
    }
}

#[test]
fn equilibrium_is_preserved_under_rest() {
    for k in [0.5, 1.0, 2.0] {
        let fp = solver(32, k, 1e-2);
        let psi = fp.equilibrium().density(1.0, fp.grid());
        let out = fp.run(&psi, &VelocityGradient::ZERO, 50).unwrap();
        assert!(out.l1_distance(&psi, fp.grid()) < 1e-11, "k = {k}");
    }
}

#[test]
fn scaled_equilibrium_stress_is_mass_times_identity() {
    let p = PotentialParams::new(1.0, 1.0).unwrap();
    for n in [32, 64] {
        let g = ConfigGrid::new(n, n).unwrap();
        let eq = DiscreteEquilibrium::new(&g, &p);
        for m in [0.25, 3.0] {
            let tau = kramers_stress(&eq.density(m, &g), &g, &p).unwrap();
            assert!(tau.max_abs_diff(&equilibrium_stress(&eq, m, &g, &p)) < 1e-12);
            assert!((tau.tau[0][0] - m).abs() < 1e-10 * m && tau.tau[0][1].abs() < 1e-12);
        }
    }
}

#[test]
fn shear_steady_state_has_positive_shear_stress() {
    let fp = solver(32, 1.0, 1e-2);
    let psi = fp.steady_state(&VelocityGradient::shear(1.0), 1e-9, None, 100_000).unwrap();
    let tau = kramers_stress(&psi, fp.grid(), fp.params()).unwrap();
    assert!(tau.tau[0][1] > 0.0 && tau.tau[0][0] > 1.0, "{tau:?}");
}
