use crate::{CliResult, Failure};
use clap::Args;
use nsk_core::cip::{InitialCondition, SimConfig};
use nsk_core::config::{read_config, render_config, RunConfig};
use nsk_core::diagnostics::{bitangency_check, mass_flux, FluxStats};
use nsk_core::elliptic::{exact_solution, k_from_eps};
use nsk_core::io::{fmt, snapshot_name, write_kv, write_series, write_snapshot, write_table};
use nsk_core::run::run;
use nsk_core::NskError;
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// L∞ tolerance of the exact-solution regression.
pub const REGRESSION_TOL: f64 = 2e-2;

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Config file (`key = value` lines).
    pub config: PathBuf,
    /// Output directory; overrides `outdir` in the config.
    #[arg(long)]
    pub outdir: Option<PathBuf>,
    /// Validate the config and print the step-size bounds without running.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Template config; the grid overrides `mu_bar` and `eps`.
    pub config: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub mu_bar: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<f64>,
    #[arg(long, default_value = "sweep")]
    pub outdir: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
}

/// Final state of one run.
#[derive(Debug, Clone)]
pub struct Summary {
    pub failure: Option<String>,
    pub t: f64,
    pub steps: usize,
    pub mass_drift: f64,
    pub c: f64,
    pub m: f64,
    pub flux_rel_std: f64,
    pub rhomin: f64,
    pub rhomax: f64,
    pub tangents: Option<(f64, f64)>,
    /// `(L∞ error, pass)` for cnoidal initial data.
    pub regression: Option<(f64, bool)>,
}

impl Summary {
    fn pairs(&self) -> Vec<(String, String)> {
        let mut v = vec![(
            "status".to_string(),
            if self.failure.is_some() { "failed" } else { "ok" }.to_string(),
        )];
        if let Some(f) = &self.failure {
            v.push(("failure".into(), f.clone()));
        }
        v.push(("steps".into(), self.steps.to_string()));
        let mut put = |k: &str, x: f64| v.push((k.to_string(), fmt(x)));
        put("t", self.t);
        put("mass_drift", self.mass_drift);
        put("c", self.c);
        put("m", self.m);
        put("flux_rel_std", self.flux_rel_std);
        put("rhomin", self.rhomin);
        put("rhomax", self.rhomax);
        if let Some((s, i)) = self.tangents {
            put("slope_diff", s);
            put("intercept_diff", i);
        }
        if let Some((e, pass)) = self.regression {
            put("regression_linf", e);
            put("regression_tol", REGRESSION_TOL);
            v.push(("regression".into(), if pass { "pass" } else { "fail" }.into()));
        }
        v.into_iter().map(|(k, x)| (format!("summary.{k}"), x)).collect()
    }
}

fn io_fail(path: &Path, e: std::io::Error) -> Failure {
    Failure::Input(format!("{}: {e}", path.display()))
}

/// Runs `sim` into `dir`: snapshots, `series.csv`, an optional
/// `regression.txt`, and `manifest.txt` last.
pub fn run_case(sim: &SimConfig, dir: &Path, source: &str) -> CliResult<Summary> {
    let start = Instant::now();
    std::fs::create_dir_all(dir).map_err(|e| io_fail(dir, e))?;
    let mut files = Vec::new();
    let out = run(sim, |s| {
        let name = snapshot_name(s.step);
        write_snapshot(&dir.join(&name), s)?;
        files.push(name);
        Ok(())
    });
    let out = match out {
        Ok(o) => o,
        Err(e @ NskError::Io(_)) => return Err(Failure::Runtime(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    write_series(&dir.join("series.csv"), &out.series)?;
    files.push("series.csv".into());

    let series = &out.series;
    let state = &out.state;
    let c = series.tail_mean(&series.c_interface, 0.1);
    let m = series.m_estimate();
    let flux = FluxStats::of(&mass_flux(state, if c.is_finite() { c } else { 0.0 }));
    let (rhomin, rhomax) = (state.rho.min_value(), state.rho.max_value());
    let tangents = if m.is_finite() {
        bitangency_check(state, &sim.energy, m)
            .ok()
            .map(|r| (r.slope_diff(), r.intercept_diff()))
    } else {
        None
    };
    let regression = match (sim.init == InitialCondition::Cnoidal, &out.failure) {
        (true, None) => {
            let p = k_from_eps(sim.eps)?;
            let g = state.grid();
            let err = (0..g.nx)
                .map(|j| (state.rho.values[j] - exact_solution(&p, sim.ubar, g.x(j), state.t).0).abs())
                .fold(0.0, f64::max);
            let pass = err <= REGRESSION_TOL;
            write_kv(
                &dir.join("regression.txt"),
                &[
                    ("t".into(), fmt(state.t)),
                    ("linf".into(), fmt(err)),
                    ("tolerance".into(), fmt(REGRESSION_TOL)),
                    ("result".into(), if pass { "pass" } else { "fail" }.into()),
                ],
            )?;
            files.push("regression.txt".into());
            Some((err, pass))
        }
        _ => None,
    };
    let summary = Summary {
        failure: out.failure.as_ref().map(|e| e.to_string()),
        t: state.t,
        steps: state.step,
        mass_drift: series.mass_drift(),
        c,
        m,
        flux_rel_std: flux.relative_std(),
        rhomin,
        rhomax,
        tangents,
        regression,
    };

    let mut manifest = vec![
        ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("source".to_string(), source.to_string()),
        ("wall_clock_s".to_string(), format!("{:.3}", start.elapsed().as_secs_f64())),
    ];
    for line in render_config(sim, None).lines() {
        if let Some((k, v)) = line.split_once(" = ") {
            manifest.push((format!("config.{k}"), v.to_string()));
        }
    }
    manifest.extend(summary.pairs());
    for (i, f) in files.iter().enumerate() {
        manifest.push((format!("file.{i}"), f.clone()));
    }
    write_kv(&dir.join("manifest.txt"), &manifest)?;
    Ok(summary)
}

fn print_summary(s: &Summary) {
    for (k, v) in s.pairs() {
        println!("{}={v}", k.trim_start_matches("summary."));
    }
}

pub fn simulate(a: SimulateArgs) -> CliResult<()> {
    let RunConfig { sim, outdir } = read_config(&a.config)?;
    if a.dry_run {
        let state = sim.initial_state()?;
        let b = sim.cfl_bounds(&state);
        println!("steps={}", sim.steps());
        println!("dt={}", fmt(sim.dt));
        println!("advective={}", fmt(b.advective));
        println!("dispersive={}", fmt(b.dispersive));
        println!("viscous={}", fmt(b.viscous));
        println!("dt_max={}", fmt(b.min()));
        println!("cfl_ok={}", sim.dt <= b.min());
        return Ok(());
    }
    let dir = a.outdir.or(outdir.map(PathBuf::from)).unwrap_or_else(|| {
        let stem = a.config.file_stem().map_or("run".into(), |s| s.to_string_lossy().into_owned());
        PathBuf::from("out").join(stem)
    });
    let s = run_case(&sim, &dir, &a.config.display().to_string())?;
    print_summary(&s);
    match (&s.failure, s.regression) {
        (Some(f), _) => Err(Failure::Runtime(format!("run stopped at t = {}: {f}", s.t))),
        (None, Some((e, false))) => Err(Failure::Runtime(format!(
            "exact-solution regression failed: L∞ = {e:e} > {REGRESSION_TOL:e}"
        ))),
        _ => Ok(()),
    }
}

pub fn sweep(a: SweepArgs) -> CliResult<()> {
    let RunConfig { sim, .. } = read_config(&a.config)?;
    let mus = if a.mu_bar.is_empty() { vec![sim.mu_bar] } else { a.mu_bar.clone() };
    let epss = if a.eps.is_empty() { vec![sim.eps] } else { a.eps.clone() };
    let cells: Vec<(f64, f64)> = mus.iter().flat_map(|m| epss.iter().map(move |e| (*m, *e))).collect();
    for &(mu, eps) in &cells {
        SimConfig { mu_bar: mu, eps, ..sim.clone() }.validate()?;
    }
    std::fs::create_dir_all(&a.outdir).map_err(|e| io_fail(&a.outdir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Input(e.to_string()))?;
    let source = a.config.display().to_string();
    let results: Vec<CliResult<Summary>> = pool.install(|| {
        cells
            .par_iter()
            .enumerate()
            .map(|(i, &(mu, eps))| {
                let cfg = SimConfig { mu_bar: mu, eps, ..sim.clone() };
                run_case(&cfg, &a.outdir.join(cell_name(i)), &source)
            })
            .collect()
    });

    let mut rows = Vec::new();
    let mut ok = 0;
    for (i, (r, &(mu, eps))) in results.iter().zip(&cells).enumerate() {
        let row = match r {
            Ok(s) => {
                if s.failure.is_none() {
                    ok += 1;
                } else {
                    log::warn!("cell {i} (mu_bar {mu:e}, eps {eps:e}) stopped: {}", s.failure.as_deref().unwrap_or(""));
                }
                let ok = if s.failure.is_none() { 1.0 } else { 0.0 };
                vec![i as f64, mu, eps, ok, s.t, s.c, s.m, s.flux_rel_std, s.mass_drift, s.rhomin, s.rhomax]
            }
            Err(Failure::Input(e) | Failure::Runtime(e)) => {
                log::warn!("cell {i} (mu_bar {mu:e}, eps {eps:e}) failed: {e}");
                let nan = f64::NAN;
                vec![i as f64, mu, eps, 0.0, nan, nan, nan, nan, nan, nan, nan]
            }
        };
        rows.push(row);
    }
    write_table(
        &a.outdir.join("summary.csv"),
        &[],
        &["cell", "mu_bar", "eps", "ok", "t", "c", "m", "flux_rel_std", "mass_drift", "rhomin", "rhomax"],
        rows.into_iter(),
    )?;
    let mut manifest = vec![
        ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("source".to_string(), source),
        ("cells".to_string(), cells.len().to_string()),
        ("cells_ok".to_string(), ok.to_string()),
        ("file.0".to_string(), "summary.csv".to_string()),
    ];
    let written = results.iter().enumerate().filter(|(_, r)| r.is_ok());
    for (k, (i, _)) in written.enumerate() {
        manifest.push((format!("file.{}", k + 1), format!("{}/manifest.txt", cell_name(i))));
    }
    write_kv(&a.outdir.join("manifest.txt"), &manifest)?;
    println!("cells={} ok={ok}", cells.len());
    if ok == 0 {
        return Err(Failure::Runtime("every cell failed".into()));
    }
    Ok(())
}

pub fn cell_name(i: usize) -> String {
    format!("cell_{i:02}")
}
