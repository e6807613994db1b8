//! Simulation driver: steps a configuration to its end time while sampling
//! diagnostics and handing snapshots to the caller.

use crate::cip::{advance, FluidState, SimConfig};
use crate::diagnostics::{DiagnosticSeries, MID_LEVEL};
use crate::energy::bitangent;
use crate::error::{NskError, Result};

/// Target number of diagnostic samples per run.
const DIAG_SAMPLES: usize = 2000;

/// Diagnostic stride in steps.
pub fn diag_every(cfg: &SimConfig) -> usize {
    let base = (cfg.steps() / DIAG_SAMPLES).max(1);
    if cfg.snapshot_every > 0 {
        base.min(cfg.snapshot_every)
    } else {
        base
    }
}

/// Density level used for interface tracking: the midpoint of the
/// `m = 0` bitangent contact points.
pub fn interface_level(cfg: &SimConfig) -> f64 {
    bitangent(&cfg.energy.with_m(0.0)).map_or(MID_LEVEL, |b| b.mid())
}

#[derive(Debug)]
pub struct RunOutput {
    /// Last state reached (the failing state if the run aborted).
    pub state: FluidState,
    pub series: DiagnosticSeries,
    /// Set when the run stopped before `t_end`.
    pub failure: Option<NskError>,
}

/// Runs `cfg`, calling `on_snapshot` at step 0 and every
/// `snapshot_every` steps. Fails only if the configuration or the initial
/// data are invalid; later failures are reported in [`RunOutput::failure`]
/// together with the diagnostics gathered so far.
pub fn run<F>(cfg: &SimConfig, mut on_snapshot: F) -> Result<RunOutput>
where
    F: FnMut(&FluidState) -> Result<()>,
{
    cfg.validate()?;
    let mut state = cfg.initial_state()?;
    let level = interface_level(cfg);
    let every = diag_every(cfg);
    let steps = cfg.steps();
    let mut series = DiagnosticSeries::new();
    series.record(&state, cfg.eps, &cfg.energy, level);
    if cfg.snapshot_every > 0 {
        on_snapshot(&state)?;
    }
    let outcome = advance(&mut state, cfg, |s| {
        if s.step % every == 0 || s.step == steps {
            series.record(s, cfg.eps, &cfg.energy, level);
        }
        if cfg.snapshot_every > 0 && s.step % cfg.snapshot_every == 0 {
            on_snapshot(s)?;
        }
        Ok(())
    });
    if outcome.is_err() && series.t.last() != Some(&state.t) && state.rho.is_finite() && state.u.is_finite() {
        series.record(&state, cfg.eps, &cfg.energy, level);
    }
    series.finalize();
    Ok(RunOutput {
        state,
        series,
        failure: outcome.err(),
    })
}
