//! Flat `key = value` run configuration.
//!
//! ```text
//! # comment
//! nx = 300
//! dt = 1/120000
//! init = sine
//! ```
//!
//! Unknown or repeated keys are errors; `dt` and the other reals accept a
//! fraction `a/b`.

use crate::cip::{InitialCondition, SimConfig};
use crate::error::{NskError, Result};
use std::path::Path;

pub const KEYS: [&str; 13] = [
    "nx",
    "dt",
    "t_end",
    "eps",
    "mu_bar",
    "init",
    "init_amplitude",
    "rho0",
    "ubar",
    "snapshot_every",
    "cfl_check",
    "mass_fix",
    "outdir",
];

/// Parsed configuration file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub outdir: Option<String>,
}

fn err(line: usize, message: impl Into<String>) -> NskError {
    NskError::Config {
        line,
        message: message.into(),
    }
}

/// Real number or fraction `a/b`.
pub fn parse_real(s: &str) -> std::result::Result<f64, String> {
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("not a number: {t:?}"));
    match s.split_once('/') {
        Some((a, b)) => {
            let d = parse(b)?;
            if d == 0.0 {
                return Err("division by zero".into());
            }
            Ok(parse(a)? / d)
        }
        None => parse(s),
    }
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(format!("not a boolean: {s:?}")),
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut sim = SimConfig::default();
    let mut outdir = None;
    let mut seen: Vec<&str> = Vec::new();
    let mut init_name: Option<(usize, String)> = None;
    let mut amplitude = None;
    let mut rho0 = None;
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(ln, format!("expected key = value, got {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        let known = KEYS
            .iter()
            .find(|k| **k == key)
            .ok_or_else(|| err(ln, format!("unknown key {key:?}")))?;
        if seen.contains(known) {
            return Err(err(ln, format!("duplicate key {key:?}")));
        }
        seen.push(known);
        let real = || parse_real(value).map_err(|m| err(ln, format!("{key}: {m}")));
        let count = || {
            value
                .parse::<usize>()
                .map_err(|_| err(ln, format!("{key}: not a non-negative integer: {value:?}")))
        };
        let boolean = || parse_bool(value).map_err(|m| err(ln, format!("{key}: {m}")));
        match key {
            "nx" => sim.nx = count()?,
            "dt" => sim.dt = real()?,
            "t_end" => sim.t_end = real()?,
            "eps" => sim.eps = real()?,
            "mu_bar" => sim.mu_bar = real()?,
            "init" => init_name = Some((ln, value.to_string())),
            "init_amplitude" => amplitude = Some(real()?),
            "rho0" => rho0 = Some(real()?),
            "ubar" => sim.ubar = real()?,
            "snapshot_every" => sim.snapshot_every = count()?,
            "cfl_check" => sim.cfl_check = boolean()?,
            "mass_fix" => sim.mass_fix = boolean()?,
            "outdir" => outdir = Some(value.to_string()),
            _ => unreachable!(),
        }
    }
    let a = amplitude.unwrap_or(0.3);
    sim.init = match init_name {
        None => InitialCondition::Sine { amplitude: a },
        Some((ln, name)) => match name.as_str() {
            "sine" => InitialCondition::Sine { amplitude: a },
            "sine-flux" => InitialCondition::SineFlux { amplitude: a },
            "cnoidal" => InitialCondition::Cnoidal,
            "uniform" => InitialCondition::Uniform {
                rho: rho0.unwrap_or(1.5),
            },
            other => {
                return Err(err(
                    ln,
                    format!("unknown init {other:?} (sine, sine-flux, cnoidal, uniform)"),
                ))
            }
        },
    };
    sim.validate().map_err(|e| err(0, e.to_string()))?;
    Ok(RunConfig { sim, outdir })
}

pub fn read_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| NskError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Renders a configuration that [`parse_config`] reads back unchanged.
pub fn render_config(sim: &SimConfig, outdir: Option<&str>) -> String {
    let mut out = String::new();
    let mut put = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    put("nx", sim.nx.to_string());
    put("dt", format!("{:e}", sim.dt));
    put("t_end", format!("{:e}", sim.t_end));
    put("eps", format!("{:e}", sim.eps));
    put("mu_bar", format!("{:e}", sim.mu_bar));
    put("init", sim.init.name().to_string());
    match sim.init {
        InitialCondition::Sine { amplitude } | InitialCondition::SineFlux { amplitude } => {
            put("init_amplitude", format!("{amplitude:e}"))
        }
        InitialCondition::Uniform { rho } => put("rho0", format!("{rho:e}")),
        InitialCondition::Cnoidal => {}
    }
    put("ubar", format!("{:e}", sim.ubar));
    put("snapshot_every", sim.snapshot_every.to_string());
    put("cfl_check", sim.cfl_check.to_string());
    put("mass_fix", sim.mass_fix.to_string());
    if let Some(d) = outdir {
        put("outdir", d.to_string());
    }
    out
}
