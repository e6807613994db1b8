use crate::{CliResult, Failure};
use clap::{Args, ValueEnum};
use nsk_core::elliptic::{cnoidal_profile_printed, exact_solution, k_from_eps};
use nsk_core::energy::{DoubleWell, EnergyModel};
use nsk_core::hermite::PeriodicGrid;
use nsk_core::io::{fmt, write_kv, write_profile, write_table, PROFILE_COLUMNS};
use nsk_core::twave::{
    galilean_assemble, kink_limit_check, kink_profile, lambda_decay, minimize_periodic_with, modica_mortola,
    solve_periodic_orbit, MinimizeOptions, KINK_WINDOW_FACTOR,
};
use std::path::{Path, PathBuf};

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodArg {
    Minimize,
    Orbit,
    Kink,
}

#[derive(Args, Debug)]
pub struct TwaveArgs {
    #[arg(long)]
    pub eps: f64,
    /// Period; ignored by the kink.
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    /// Mean density over a period.
    #[arg(long, default_value_t = 1.5)]
    pub avg: f64,
    /// Mass flux through the interfaces.
    #[arg(long, default_value_t = 0.0)]
    pub m: f64,
    /// Velocity on the vapor side.
    #[arg(long, default_value_t = 0.0)]
    pub u1: f64,
    #[arg(long, value_enum, default_value = "orbit")]
    pub method: MethodArg,
    /// Half-width of the kink window (default 40√ε).
    #[arg(long)]
    pub window: Option<f64>,
    /// Also tabulate λ over these increasing periods (`lambda_decay.csv`).
    #[arg(long, value_delimiter = ',')]
    pub decay: Vec<f64>,
    /// Also measure the distance to the kink over these periods (`kink_limit.csv`).
    #[arg(long, value_delimiter = ',')]
    pub kink_limit: Vec<f64>,
    #[arg(long, default_value = ".")]
    pub outdir: PathBuf,
}

#[derive(Args, Debug)]
pub struct ExactArgs {
    #[arg(long, default_value_t = 1e-4)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.0)]
    pub ubar: f64,
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    #[arg(long, default_value_t = 300)]
    pub nx: usize,
    /// Evaluate `sn(4K x/π)` instead of `sn(4K x)`.
    #[arg(long)]
    pub printed_argument: bool,
    #[arg(long, default_value = ".")]
    pub outdir: PathBuf,
}

fn make_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))
}

fn finite(name: &str, v: f64) -> CliResult<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Failure::Input(format!("--{name} must be finite")))
    }
}

pub fn twave(a: TwaveArgs) -> CliResult<()> {
    if !(a.eps > 0.0 && a.eps.is_finite()) {
        return Err(Failure::Input("--eps must be positive".into()));
    }
    if a.method != MethodArg::Kink && !(a.omega > 0.0 && a.omega.is_finite()) {
        return Err(Failure::Input("--omega must be positive".into()));
    }
    finite("avg", a.avg)?;
    finite("m", a.m)?;
    finite("u1", a.u1)?;
    let energy = EnergyModel::quartic(a.m);
    let dw = DoubleWell::new(&energy)?;
    let mut report = Vec::new();
    let profile = match a.method {
        MethodArg::Minimize => {
            let (p, stats) = minimize_periodic_with(&energy, a.eps, a.omega, a.avg, &MinimizeOptions::default())?;
            report.push(("iterations".to_string(), stats.iterations.to_string()));
            report.push(("residual".to_string(), fmt(stats.residual)));
            p
        }
        MethodArg::Orbit => solve_periodic_orbit(&energy, a.eps, a.omega, a.avg)?,
        MethodArg::Kink => {
            let window = a.window.unwrap_or(KINK_WINDOW_FACTOR * a.eps.sqrt());
            if !(window > 0.0 && window.is_finite()) {
                return Err(Failure::Input("--window must be positive".into()));
            }
            kink_profile(&energy, a.eps, window)?
        }
    };
    let wave = galilean_assemble(&profile, &dw, a.m, a.u1)?;
    let mm = modica_mortola(&profile, &dw);
    make_dir(&a.outdir)?;
    write_profile(&a.outdir.join("profile.csv"), &wave)?;

    let mut pairs = vec![
        ("method".to_string(), profile.method.name().to_string()),
        ("eps".to_string(), fmt(a.eps)),
        ("omega".to_string(), profile.omega.map_or("inf".to_string(), fmt)),
        ("average".to_string(), fmt(profile.average)),
        ("m".to_string(), fmt(a.m)),
        ("lambda".to_string(), fmt(profile.lambda)),
        ("c".to_string(), fmt(wave.c)),
        ("u1".to_string(), fmt(wave.u1)),
        ("u2".to_string(), fmt(wave.u2)),
        ("phase_transition".to_string(), wave.phase_transition.to_string()),
        ("rho_g".to_string(), fmt(dw.bit.rho_g)),
        ("rho_l".to_string(), fmt(dw.bit.rho_l)),
        ("rho_min".to_string(), fmt(profile.min())),
        ("rho_max".to_string(), fmt(profile.max())),
        ("samples".to_string(), profile.len().to_string()),
        ("el_residual".to_string(), fmt(profile.el_residual(&dw))),
        ("mm_energy".to_string(), fmt(mm.scaled_energy)),
        ("mm_total_variation".to_string(), fmt(mm.total_variation)),
        ("mm_slack".to_string(), fmt(mm.slack())),
    ];
    pairs.extend(report);
    if !a.decay.is_empty() {
        let rows = lambda_decay(&energy, a.eps, a.avg, &a.decay)?;
        write_table(
            &a.outdir.join("lambda_decay.csv"),
            &[("eps", fmt(a.eps)), ("average", fmt(a.avg))],
            &["omega", "lambda"],
            rows.into_iter().map(|(w, l)| vec![w, l]),
        )?;
    }
    if !a.kink_limit.is_empty() {
        let r = kink_limit_check(&energy, a.eps, &a.kink_limit)?;
        pairs.push(("kink_limit_decreasing".to_string(), r.strictly_decreasing().to_string()));
        write_table(
            &a.outdir.join("kink_limit.csv"),
            &[("eps", fmt(a.eps))],
            &["omega", "distance"],
            r.distances.into_iter().map(|(w, d)| vec![w, d]),
        )?;
    }
    write_kv(&a.outdir.join("twave.txt"), &pairs)?;
    for (k, v) in &pairs {
        println!("{k}={v}");
    }
    Ok(())
}

pub fn exact(a: ExactArgs) -> CliResult<()> {
    finite("ubar", a.ubar)?;
    finite("t", a.t)?;
    if a.nx < 2 {
        return Err(Failure::Input("--nx must be at least 2".into()));
    }
    let p = k_from_eps(a.eps)?;
    let grid = PeriodicGrid::new(a.nx);
    let rows = (0..a.nx).map(|j| {
        let x = grid.x(j);
        let rho = if a.printed_argument {
            cnoidal_profile_printed(&p, x - a.ubar * a.t)
        } else {
            exact_solution(&p, a.ubar, x, a.t).0
        };
        vec![x, rho, a.ubar]
    });
    make_dir(&a.outdir)?;
    let meta = [
        ("t", fmt(a.t)),
        ("eps", fmt(a.eps)),
        ("ubar", fmt(a.ubar)),
        ("k", fmt(p.k)),
        ("argument", if a.printed_argument { "printed" } else { "corrected" }.to_string()),
    ];
    write_table(&a.outdir.join("exact.csv"), &meta, &PROFILE_COLUMNS, rows)?;
    println!("k={}", fmt(p.k));
    println!("amplitude={}", fmt(p.amplitude));
    Ok(())
}
