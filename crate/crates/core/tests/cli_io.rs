use std::path::{Path, PathBuf};
use std::process::Command;

use fene::cli_io::{
    checkpoint_read, checkpoint_read_expecting, checkpoint_write, execute, parse_config, Checkpoint, Initial, Mode,
    RunSpec,
};
use fene::macro_flow::{MacroState, SpectralGrid};
use fene::stochastic::BdScheme;
use fene::{ConfigGrid, DiscreteEquilibrium, Error, PotentialParams};
use proptest::prelude::*;

fn golden(name: &str) -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

fn first_line(csv: &str) -> String {
    format!("{}\n", csv.lines().next().unwrap())
}

fn fene() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fene"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn any_spec() -> impl Strategy<Value = RunSpec> {
    let mode = prop::sample::select(vec![Mode::Simulate, Mode::BdOracle, Mode::ValidateInequalities]);
    let flow = prop::sample::select(vec!["rest", "shear", "extension", "oscillatory"]);
    let ineq = prop::sample::select(vec!["all", "hardy_inter", "wsi"]);
    (
        (mode, 0.1..5.0f64, 0.01..10.0f64, 8.0..50.0f64, 4usize..200, 4usize..200, 2usize..40, 2usize..40),
        (1e-6..1e-1f64, 0.01..100.0f64, 1usize..100, flow, -5.0..5.0f64, 0.01..10.0f64),
        (prop::option::of(1e-8..1.0f64), 1u32..4, any::<bool>(), 0.0..0.99f64, 2usize..100_000, any::<bool>()),
        (ineq, 2u32..6, 2.01..6.0f64, any::<u64>(), prop::option::of("[a-z]{1,8}\\.csv")),
    )
        .prop_map(|(a, b, c, d)| {
            let mut s = RunSpec::with_mode(a.0);
            (s.k, s.nu, s.a, s.nr, s.ntheta, s.nx, s.ny) = (a.1, a.2, a.3, a.4, a.5, 2 * a.6, 2 * a.7);
            (s.dt, s.t_end, s.record_every, s.rate, s.frequency) = (b.0, b.1, b.2, b.4, b.5);
            s.flow = b.3.to_string();
            s.hyper_strength = c.0.unwrap_or(0.0);
            s.hyper_exponent = c.1;
            s.initial = if c.2 { Initial::Perturbed } else { Initial::Equilibrium };
            s.perturbation = c.3;
            s.paths = c.4;
            s.scheme = if c.5 { BdScheme::SemiImplicit } else { BdScheme::EulerMaruyama };
            s.inequality = d.0.to_string();
            s.levels = d.1;
            s.p = d.2;
            s.seed = d.3;
            s.output = d.4.map(PathBuf::from);
            s
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn parse_inverts_serialize(spec in any_spec()) {
        prop_assume!(spec.validate().is_ok());
        prop_assert_eq!(parse_config(&spec.serialize()).unwrap(), spec);
    }

    #[test]
    fn checkpoint_bytes_round_trip(
        seed in any::<u64>(),
        amp in 0.0..0.99f64,
        coeffs in prop::collection::vec(-1e3..1e3f64, 128),
        time in -1e6..1e6f64,
    ) {
        let grid = ConfigGrid::new(4, 6).unwrap();
        let eq = DiscreteEquilibrium::new(&grid, &PotentialParams::new(1.0, 1.0).unwrap());
        let field: Vec<_> = (0..16).map(|i| eq.perturbed(amp, seed.wrapping_add(i), &grid)).collect();
        let mut flow = MacroState::at_rest(4, 4);
        for (i, c) in flow.uhat.iter_mut().flatten().enumerate() {
            *c = num_complex::Complex64::new(coeffs[2 * i], coeffs[2 * i + 1]);
        }
        flow.time = time;
        let ck = Checkpoint::new(&field, &flow, &grid).unwrap();
        let bytes = ck.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        prop_assert_eq!(&back, &ck);
        prop_assert_eq!(back.to_bytes(), bytes.clone());
        let cut = bytes.len() / 2;
        prop_assert!(matches!(Checkpoint::from_bytes(&bytes[..cut]), Err(Error::Format(_))));
    }
}

#[test]
fn checkpoint_files_round_trip_and_check_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.bin");
    let grid = ConfigGrid::new(8, 8).unwrap();
    let sg = SpectralGrid::new(4, 4).unwrap();
    let eq = DiscreteEquilibrium::new(&grid, &PotentialParams::new(2.0, 1.0).unwrap());
    let field: Vec<_> = (0..16).map(|i| eq.perturbed(0.3, i, &grid)).collect();
    let flow = MacroState::taylor_green(&sg, 0.7);
    checkpoint_write(&field, &flow, &grid, &path).unwrap();
    let ck = checkpoint_read(&path).unwrap();
    assert_eq!(ck.flow, flow);
    assert_eq!(ck.field(&grid).unwrap(), field);
    let err = checkpoint_read_expecting(&path, [8, 8, 8, 8]).unwrap_err();
    assert!(err.to_string().contains("[8, 8, 4, 4]"), "{err}");

    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
    assert!(matches!(checkpoint_read(&path), Err(Error::Format(_))));
    std::fs::write(&path, b"NOPE1").unwrap();
    assert!(matches!(checkpoint_read(&path), Err(Error::Format(_))));
}

#[test]
fn csv_headers_match_golden_files() {
    let sim = execute(&parse_config("mode = simulate\nnr = 8\nntheta = 8\nt_end = 0.01").unwrap()).unwrap();
    assert_eq!(first_line(&sim.csv), golden("timeseries_header.csv"));
    let bd = execute(&parse_config("mode = bd-oracle\npaths = 50\nt_end = 0.01").unwrap()).unwrap();
    assert_eq!(first_line(&bd.csv), golden("bd_header.csv"));
    let ineq = execute(&parse_config("mode = validate-inequalities\ninequality = hardy_inter\nlevels = 2").unwrap()).unwrap();
    assert_eq!(first_line(&ineq.csv), golden("inequality_header.csv"));
}

#[test]
fn csv_floats_round_trip_exactly() {
    let out = execute(&parse_config("mode = simulate\nflow = shear\nrate = 1\nnr = 8\nntheta = 8\nt_end = 0.01").unwrap()).unwrap();
    for field in out.csv.lines().skip(1).flat_map(|l| l.split(',')) {
        let v: f64 = field.parse().unwrap();
        assert_eq!(format!("{v:.16e}").parse::<f64>().unwrap().to_bits(), v.to_bits());
        assert_eq!(format!("{v:.16e}"), field);
    }
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(dir.path(), "ok.cfg", "nr = 8\nntheta = 8\nt_end = 0.01\n");
    let out = dir.path().join("out.csv");
    let status = fene().args(["simulate", "--config"]).arg(&ok).arg("--out").arg(&out).output().unwrap().status;
    assert_eq!(status.code(), Some(0));
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("t,free_energy"));

    let bad = write(dir.path(), "bad.cfg", "nr = 8\nwhat = 1\n");
    let o = fene().args(["simulate", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    assert_eq!(fene().arg("nonsense").output().unwrap().status.code(), Some(1));
    assert_eq!(fene().arg("--help").output().unwrap().status.code(), Some(0));

    let conflict = write(dir.path(), "c.cfg", "mode = bd-oracle\n");
    assert_eq!(fene().args(["simulate", "--config"]).arg(&conflict).output().unwrap().status.code(), Some(1));

    // strong shear on a fine grid with a large step violates the Courant limit
    let cfl = write(dir.path(), "cfl.cfg", "flow = shear\nrate = 1000\nnr = 64\nntheta = 64\ndt = 0.1\nt_end = 0.1\n");
    let o = fene().args(["simulate", "--config"]).arg(&cfl).output().unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn seeded_cli_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str, mode: &str, cfg: &str| {
        let csv = dir.path().join(format!("{tag}.csv"));
        let ck = dir.path().join(format!("{tag}.bin"));
        let text = format!("{cfg}\ncheckpoint = {}\n", ck.display());
        let c = write(dir.path(), &format!("{tag}.cfg"), &text);
        let status = fene().arg(mode).arg("--config").arg(&c).arg("--out").arg(&csv).args(["--seed", "17"]).output().map(|o| o.status);
        assert_eq!(status.unwrap().code(), Some(0));
        (std::fs::read(&csv).unwrap(), std::fs::read(&ck).ok())
    };
    let cfg = "flow = shear\nrate = 1\ninitial = perturbed\nnr = 8\nntheta = 8\nt_end = 0.02";
    assert_eq!(run("a", "simulate", cfg), run("b", "simulate", cfg));
    let bd = "flow = shear\nrate = 0.5\npaths = 300\nt_end = 0.02";
    assert_eq!(run("c", "bd-oracle", bd), run("d", "bd-oracle", bd));
}
