use crate::{CliResult, Failure};
use clap::Args;
use nsk_core::diagnostics::{
    bitangency_check, interface_position, mass_flux, stationarity_identity, FluxStats, MID_LEVEL,
};
use nsk_core::energy::EnergyModel;
use nsk_core::io::{fmt, read_snapshot, read_table, write_table};
use nsk_core::NskError;
use std::path::PathBuf;

#[derive(Args, Debug)]
pub struct DiagnoseArgs {
    /// Snapshot CSV (`x, rho, rho_x, u, u_x`).
    pub snapshot: PathBuf,
    /// `series.csv` of the run; its late-time interface speed is used for `c`.
    #[arg(long)]
    pub series: Option<PathBuf>,
    /// Frame speed (overrides the series).
    #[arg(long)]
    pub c: Option<f64>,
    /// Flux for `Ψ^m` (default: the mean of `ρ(u − c)`).
    #[arg(long)]
    pub m: Option<f64>,
    /// With `--eps`, also evaluate the stationarity identity.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub mu_bar: f64,
    #[arg(long, default_value_t = MID_LEVEL)]
    pub level: f64,
    /// Write `Ψ^m` and both tangent lines on a density grid.
    #[arg(long)]
    pub psi_out: Option<PathBuf>,
}

pub fn diagnose(a: DiagnoseArgs) -> CliResult<()> {
    let state = read_snapshot(&a.snapshot)?;
    let mut out: Vec<(String, String)> = vec![("t".into(), fmt(state.t))];
    match interface_position(&state.rho, a.level, None) {
        Ok(x) => out.push(("interface".into(), fmt(x))),
        Err(NskError::NoInterface { .. }) => out.push(("interface".into(), "none".into())),
        Err(e) => return Err(e.into()),
    }

    let (c, source) = match (a.c, &a.series) {
        (Some(c), _) => (c, "flag"),
        (None, Some(p)) => {
            let t = read_table(p)?;
            let (ts, cs) = match (t.column("t"), t.column("c_interface")) {
                (Some(ts), Some(cs)) => (ts, cs),
                _ => return Err(Failure::Input(format!("{}: missing t or c_interface column", p.display()))),
            };
            let t_end = ts.last().copied().unwrap_or(0.0);
            let t0 = ts.first().copied().unwrap_or(0.0);
            let cut = t0 + 0.9 * (t_end - t0);
            let tail: Vec<f64> = ts
                .iter()
                .zip(&cs)
                .filter(|(t, c)| **t >= cut && c.is_finite())
                .map(|(_, c)| *c)
                .collect();
            if tail.is_empty() {
                (0.0, "none")
            } else {
                (tail.iter().sum::<f64>() / tail.len() as f64, "series")
            }
        }
        (None, None) => (0.0, "none"),
    };
    let flux = FluxStats::of(&mass_flux(&state, c));
    let m = a.m.unwrap_or(flux.mean);
    out.push(("c".into(), fmt(c)));
    out.push(("c_source".into(), source.into()));
    out.push(("flux_mean".into(), fmt(flux.mean)));
    out.push(("flux_std".into(), fmt(flux.std)));
    out.push(("flux_min".into(), fmt(flux.min)));
    out.push(("flux_max".into(), fmt(flux.max)));
    out.push(("flux_rel_std".into(), fmt(flux.relative_std())));
    out.push(("m".into(), fmt(m)));

    let energy = EnergyModel::quartic(0.0);
    match bitangency_check(&state, &energy, m) {
        Ok(r) => {
            out.push(("rho_min".into(), fmt(r.rho_min)));
            out.push(("rho_max".into(), fmt(r.rho_max)));
            out.push(("slope_min".into(), fmt(r.slope_min)));
            out.push(("intercept_min".into(), fmt(r.intercept_min)));
            out.push(("slope_max".into(), fmt(r.slope_max)));
            out.push(("intercept_max".into(), fmt(r.intercept_max)));
            out.push(("slope_diff".into(), fmt(r.slope_diff())));
            out.push(("intercept_diff".into(), fmt(r.intercept_diff())));
            if let Some(p) = &a.psi_out {
                let model = energy.with_m(m);
                let (lo, hi) = (r.rho_min, r.rho_max);
                let pad = 0.25 * (hi - lo).max(0.1);
                let n = 401;
                let rows = (0..n)
                    .map(|i| (lo - pad + (hi - lo + 2.0 * pad) * i as f64 / (n - 1) as f64).max(1e-3))
                    .map(|rho| {
                        let psi = model.psi_m(rho).unwrap_or(f64::NAN);
                        vec![
                            rho,
                            psi,
                            r.slope_min * rho + r.intercept_min,
                            r.slope_max * rho + r.intercept_max,
                        ]
                    });
                write_table(
                    p,
                    &[("m", fmt(m)), ("rho_min", fmt(lo)), ("rho_max", fmt(hi))],
                    &["rho", "psi_m", "tangent_min", "tangent_max"],
                    rows,
                )?;
            }
        }
        Err(e) => out.push(("bitangency".into(), format!("unavailable ({e})"))),
    }

    if let Some(eps) = a.eps {
        let (boundary, dissipation) = stationarity_identity(&state.rho, m, a.mu_bar, eps, &energy)?;
        out.push(("stationarity_boundary".into(), fmt(boundary)));
        out.push(("stationarity_dissipation".into(), fmt(dissipation)));
    }
    for (k, v) in out {
        println!("{k}={v}");
    }
    Ok(())
}
