use fene::macro_flow::{advect_field, FaceVelocities, Hyperviscosity, MacroState, NavierStokes, SpectralGrid};
use fene::stress::StressTensor;
use fene::{ConfigGrid, PhaseDensity};
use proptest::prelude::*;

fn stress_field(grid: &SpectralGrid, amp: f64) -> Vec<StressTensor> {
    (0..grid.len())
        .map(|p| {
            let [x, y] = grid.point(p);
            StressTensor::from_components(
                1.0 + amp * (x + 2.0 * y).cos(),
                amp * x.sin() * y.cos(),
                1.0 + amp * (2.0 * x).sin(),
            )
        })
        .collect()
}

fn random_state(grid: &SpectralGrid, coeffs: &[f64]) -> MacroState {
    let (ux, uy): (Vec<f64>, Vec<f64>) = (0..grid.len())
        .map(|p| {
            let [x, y] = grid.point(p);
            (
                coeffs[0] * x.sin() * y.cos() + coeffs[1] * (2.0 * y).sin() + coeffs[2],
                -coeffs[0] * x.cos() * y.sin() + coeffs[3] * (x - y).cos() + coeffs[4],
            )
        })
        .unzip();
    MacroState::from_velocity(grid, &ux, &uy).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn steps_stay_divergence_free_and_keep_the_mean(coeffs in prop::collection::vec(-1.0..1.0f64, 5), amp in 0.0..2.0f64) {
        let grid = SpectralGrid::new(16, 16).unwrap();
        let ns = NavierStokes::new(grid.clone(), 0.1, None).unwrap();
        let tau = stress_field(&grid, amp);
        let mut s = random_state(&grid, &coeffs);
        let mean = [s.uhat[0][0], s.uhat[1][0]];
        for _ in 0..10 {
            s = ns.step(&s, &tau, 1e-2).unwrap();
            prop_assert!(s.max_divergence(&grid) < 1e-12);
        }
        prop_assert!((s.uhat[0][0] - mean[0]).norm() < 1e-14 && (s.uhat[1][0] - mean[1]).norm() < 1e-14);
    }

    #[test]
    fn transport_respects_the_maximum_principle(coeffs in prop::collection::vec(-1.0..1.0f64, 5)) {
        let grid = SpectralGrid::new(8, 8).unwrap();
        let config = ConfigGrid::new(4, 4).unwrap();
        let flow = random_state(&grid, &coeffs);
        let faces = FaceVelocities::new(&flow, &grid);
        let mut field: Vec<PhaseDensity> = (0..grid.len())
            .map(|p| {
                let [x, y] = grid.point(p);
                let m = 1.0 + 0.5 * (x + y).sin();
                PhaseDensity::new(vec![m; config.len()], &config).unwrap().normalized_to(m, &config)
            })
            .collect();
        let bounds = |f: &[PhaseDensity]| f.iter().map(|p| p.mass()).fold((f64::INFINITY, 0.0f64), |(lo, hi), m| (lo.min(m), hi.max(m)));
        let (lo, hi) = bounds(&field);
        let total: f64 = field.iter().map(|p| p.mass()).sum();
        let dt: f64 = 0.5 / faces.courant_rate(&grid).max(1e-12);
        for _ in 0..20 {
            field = advect_field(&field, &faces, &grid, &config, dt.min(0.1)).unwrap();
            let (a, b) = bounds(&field);
            prop_assert!(a >= lo - 1e-12 && b <= hi + 1e-12);
        }
        let after: f64 = field.iter().map(|p| p.mass()).sum();
        prop_assert!((after - total).abs() < 1e-11 * total);
    }
}

/// Largest per-step `|dKE + dt (D(u_n) + P(u_n))|` up to `t = 0.2`.
fn energy_residual(dt: f64) -> f64 {
    let grid = SpectralGrid::new(16, 16).unwrap();
    let ns = NavierStokes::new(grid.clone(), 0.2, None).unwrap();
    let tau = stress_field(&grid, 0.8);
    let mut s = random_state(&grid, &[1.0, 0.5, 0.0, -0.4, 0.0]);
    let mut worst: f64 = 0.0;
    for _ in 0..(0.2 / dt).round() as usize {
        let next = ns.step(&s, &tau, dt).unwrap();
        let rate = s.viscous_dissipation(&grid, ns.nu, None) + s.stress_power(&grid, &tau);
        worst = worst.max((next.kinetic_energy() - s.kinetic_energy() + dt * rate).abs());
        s = next;
    }
    worst
}

#[test]
fn energy_identity_residual_converges() {
    let r: Vec<f64> = [4e-3, 2e-3, 1e-3].iter().map(|&dt| energy_residual(dt)).collect();
    for w in r.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.8, "per-step residuals {r:?}");
    }
}

#[test]
fn taylor_green_decays_at_the_viscous_rate() {
    let grid = SpectralGrid::new(32, 32).unwrap();
    let nu = 0.5;
    let ns = NavierStokes::new(grid.clone(), nu, None).unwrap();
    let tau = vec![StressTensor::ZERO; grid.len()];
    let mut s = MacroState::taylor_green(&grid, 1.0);
    let e0 = s.kinetic_energy();
    for _ in 0..100 {
        s = ns.step(&s, &tau, 1e-2).unwrap();
    }
    let expected = e0 * (-4.0 * nu * 1.0f64).exp();
    assert!((s.kinetic_energy() / expected - 1.0).abs() < 1e-8);
}

#[test]
fn hyperviscosity_damps_high_modes_faster() {
    let grid = SpectralGrid::new(32, 32).unwrap();
    let kmax = ((grid.nx - 1) / 3) as f64;
    let (ux, uy): (Vec<f64>, Vec<f64>) = (0..grid.len())
        .map(|p| {
            let [_, y] = grid.point(p);
            ((kmax * y).sin(), 0.0)
        })
        .unzip();
    let init = MacroState::from_velocity(&grid, &ux, &uy).unwrap();
    let tau = vec![StressTensor::ZERO; grid.len()];
    let run = |hyper: Option<Hyperviscosity>| {
        let ns = NavierStokes::new(grid.clone(), 0.01, hyper).unwrap();
        let mut s = init.clone();
        for _ in 0..10 {
            s = ns.step(&s, &tau, 1e-3).unwrap();
        }
        s.kinetic_energy()
    };
    let plain = run(None);
    let damped = run(Some(Hyperviscosity::new(1e-6, 1).unwrap()));
    assert!(init.kinetic_energy() > plain && plain > damped, "{plain} vs {damped}");
}
