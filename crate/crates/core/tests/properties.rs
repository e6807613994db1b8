//! Invariants checked on random inputs.

use nsk_core::cip::{FluidState, InitialCondition, SimConfig};
use nsk_core::config::{parse_config, render_config};
use nsk_core::diagnostics::{interface_position, stationarity_identity};
use nsk_core::energy::{DoubleWell, EnergyModel};
use nsk_core::hermite::{HermiteField, PeriodicGrid};
use nsk_core::io::{read_snapshot, write_snapshot};
use nsk_core::twave::{minimize_periodic_with, modica_mortola, Method, MinimizeOptions, WaveProfile};
use proptest::prelude::*;
use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};

fn trig_field(nx: usize, modes: &[(f64, f64)]) -> HermiteField {
    let w = 2.0 * PI;
    let f = |x: f64| {
        1.5 + modes
            .iter()
            .enumerate()
            .map(|(k, (a, p))| a * (w * (k + 1) as f64 * x + p).sin())
            .sum::<f64>()
    };
    let df = |x: f64| {
        modes
            .iter()
            .enumerate()
            .map(|(k, (a, p))| a * w * (k + 1) as f64 * (w * (k + 1) as f64 * x + p).cos())
            .sum::<f64>()
    };
    HermiteField::sample(PeriodicGrid::new(nx), f, df)
}

fn modes() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-0.1f64..0.1, 0.0f64..std::f64::consts::TAU), 1..5)
}

fn tmp(tag: &str) -> std::path::PathBuf {
    static N: AtomicUsize = AtomicUsize::new(0);
    let dir = std::env::temp_dir().join(format!("nsk-props-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(format!("{tag}-{}.csv", N.fetch_add(1, Ordering::Relaxed)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stationarity_boundary_term_vanishes(
        nx in 48usize..200,
        m in -0.5f64..0.5,
        mu in 0.0f64..0.3,
        eps in 1e-5f64..1e-2,
        modes in modes(),
    ) {
        let rho = trig_field(nx, &modes);
        let (boundary, dissipation) = stationarity_identity(&rho, m, mu, eps, &EnergyModel::quartic(0.0)).unwrap();
        prop_assert!(boundary.abs() <= 1e-10, "{boundary}");
        prop_assert!(dissipation >= 0.0);
    }

    #[test]
    fn modica_mortola_slack_is_nonnegative(
        eps in 1e-5f64..1e-2,
        m in -0.2f64..0.2,
        raw in prop::collection::vec(0.8f64..2.2, 8..80),
        periodic in any::<bool>(),
    ) {
        let energy = EnergyModel::quartic(m);
        let dw = DoubleWell::new(&energy).unwrap();
        let n = raw.len();
        let h = 1.0 / n as f64;
        let p = WaveProfile {
            x: (0..n).map(|i| i as f64 * h).collect(),
            rho: raw,
            omega: if periodic { Some(1.0) } else { None },
            lambda: 0.0,
            m,
            average: 1.5,
            c: None,
            eps,
            method: Method::Minimize,
        };
        let mm = modica_mortola(&p, &dw);
        prop_assert!(mm.slack() >= -1e-12 * mm.scaled_energy.max(1.0), "{mm:?}");
    }

    #[test]
    fn double_well_is_nonnegative(m in -0.3f64..0.3, rho in 0.3f64..3.0) {
        let dw = DoubleWell::new(&EnergyModel::quartic(m)).unwrap();
        prop_assert!(dw.value(rho) >= -1e-12);
    }

    #[test]
    fn interface_tracking_is_translation_equivariant(nx in 64usize..256, shift in 0usize..64) {
        let g = PeriodicGrid::new(nx);
        let w = 2.0 * PI;
        let a = HermiteField::sample(g, |x| 1.5 + 0.4 * (w * x).sin(), |x| 0.4 * w * (w * x).cos());
        let s = shift % nx;
        let b = HermiteField::new(
            g,
            (0..nx).map(|j| a.values[(j + nx - s) % nx]).collect(),
            (0..nx).map(|j| a.derivs[(j + nx - s) % nx]).collect(),
        );
        let xa = interface_position(&a, 1.5, None).unwrap();
        let xb = interface_position(&b, 1.5, None).unwrap();
        let d = (xb - xa - s as f64 / nx as f64).rem_euclid(1.0);
        prop_assert!(d.min(1.0 - d) < 1e-9, "{xa} {xb} {s}");
    }

    #[test]
    fn snapshot_round_trip(nx in 8usize..64, modes in modes(), ubar in -2.0f64..2.0, t in 0.0f64..10.0) {
        let mut s = FluidState::new(trig_field(nx, &modes), HermiteField::constant(PeriodicGrid::new(nx), ubar));
        s.t = t;
        s.step = 17;
        let path = tmp("snap");
        write_snapshot(&path, &s).unwrap();
        prop_assert_eq!(read_snapshot(&path).unwrap(), s);
    }

    #[test]
    fn config_render_round_trip(
        nx in 8usize..1000,
        dt in 1e-7f64..1e-3,
        t_end in 0.0f64..30.0,
        eps in 1e-6f64..1e-2,
        mu in 0.0f64..1.0,
        amp in -1.0f64..1.0,
        ubar in -3.0f64..3.0,
        every in 0usize..100_000,
        flags in any::<(bool, bool)>(),
        flux in any::<bool>(),
    ) {
        let sim = SimConfig {
            nx,
            dt,
            t_end,
            eps,
            mu_bar: mu,
            init: if flux { InitialCondition::SineFlux { amplitude: amp } } else { InitialCondition::Sine { amplitude: amp } },
            ubar,
            snapshot_every: every,
            cfl_check: flags.0,
            mass_fix: flags.1,
            ..SimConfig::default()
        };
        let back = parse_config(&render_config(&sim, Some("out/x"))).unwrap();
        prop_assert_eq!(format!("{:?}", back.sim), format!("{:?}", sim));
        prop_assert_eq!(back.outdir.as_deref(), Some("out/x"));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn minimizer_energy_never_increases(a in 1.2f64..1.8, omega in 1.0f64..3.0) {
        let opts = MinimizeOptions { n: Some(256), ..MinimizeOptions::default() };
        let (p, stats) = minimize_periodic_with(&EnergyModel::quartic(0.0), 1e-3, omega, a, &opts).unwrap();
        let e = &stats.energies;
        // Accepted steps may change E by λ times the roundoff drift of the mean.
        let floor = 256.0 * f64::EPSILON * a * p.lambda.abs();
        prop_assert!(e.windows(2).all(|w| w[1] <= w[0] + 1e-15 * w[0].abs() + floor));
        prop_assert!((p.mean() - a).abs() < 1e-12);
        prop_assert!(p.min() >= 1.0 - 1e-12 && p.max() <= 2.0 + 1e-12);
    }
}
