use nsk_core::cip::{InitialCondition, SimConfig};
use nsk_core::config::parse_config;
use nsk_core::diagnostics::{interface_position, MID_LEVEL};
use nsk_core::elliptic::{exact_solution, k_from_eps};
use nsk_core::energy::{DoubleWell, EnergyModel};
use nsk_core::io::{read_snapshot, read_table, write_profile, write_series, write_snapshot};
use nsk_core::run::run;
use nsk_core::twave::{galilean_assemble, solve_periodic_orbit};

fn tmp(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("nsk-pipeline-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn base() -> SimConfig {
    SimConfig {
        nx: 150,
        dt: 1.0 / 60_000.0,
        t_end: 0.05,
        eps: 1e-4,
        mu_bar: 0.1,
        ..SimConfig::default()
    }
}

#[test]
fn moving_frame_agrees_with_shifted_rest_frame() {
    let p = k_from_eps(1e-4).unwrap();
    let exact = SimConfig {
        init: InitialCondition::Cnoidal,
        ubar: 2.0,
        ..base()
    };
    let out = run(&exact, |_| Ok(())).unwrap();
    let g = out.state.grid();
    let reg = (0..g.nx)
        .map(|j| (out.state.rho.values[j] - exact_solution(&p, 2.0, g.x(j), out.state.t).0).abs())
        .fold(0.0, f64::max);

    let c = 1.0;
    let rest = run(&base(), |_| Ok(())).unwrap().state;
    let moving = run(&SimConfig { ubar: c, ..base() }, |_| Ok(())).unwrap().state;
    let t = rest.t;
    let d = (0..g.nx)
        .map(|j| (moving.rho.values[j] - rest.rho.interp(g.x(j) - c * t).0).abs())
        .fold(0.0, f64::max);
    assert!(d <= 3.0 * reg, "galilean defect {d:e}, regression error {reg:e}");
}

#[test]
fn config_to_files_and_back() {
    let cfg = parse_config("nx = 64\ndt = 1e-5\nt_end = 2e-3\neps = 1e-3\nsnapshot_every = 100\n").unwrap();
    let mut written = Vec::new();
    let out = run(&cfg.sim, |s| {
        let p = tmp(&format!("snap{}.csv", s.step));
        write_snapshot(&p, s)?;
        written.push((p, s.clone()));
        Ok(())
    })
    .unwrap();
    assert_eq!(written.len(), 3);
    for (p, s) in &written {
        let back = read_snapshot(p).unwrap();
        assert_eq!(&back, s);
        assert_eq!(
            interface_position(&back.rho, MID_LEVEL, None).unwrap(),
            interface_position(&s.rho, MID_LEVEL, None).unwrap()
        );
    }
    let sp = tmp("series.csv");
    write_series(&sp, &out.series).unwrap();
    let t = read_table(&sp).unwrap();
    assert_eq!(t.rows.len(), out.series.len());
    assert_eq!(t.column("mass").unwrap(), out.series.mass);
}

#[test]
fn traveling_wave_profile_file() {
    let e = EnergyModel::quartic(0.05);
    let dw = DoubleWell::new(&e).unwrap();
    let prof = solve_periodic_orbit(&e, 1e-3, 1.0, dw.bit.mid()).unwrap();
    let wave = galilean_assemble(&prof, &dw, 0.05, 0.3).unwrap();
    assert!(wave.phase_transition);
    let p = tmp("wave.csv");
    write_profile(&p, &wave).unwrap();
    let t = read_table(&p).unwrap();
    let (rho, u) = (t.column("rho").unwrap(), t.column("u").unwrap());
    // Mass flux ρ(u − c) is the same everywhere.
    for (r, v) in rho.iter().zip(&u) {
        assert!((r * (v - wave.c) - 0.05).abs() < 1e-12);
    }
    assert_eq!(t.meta_f64("m"), Some(0.05));
}
