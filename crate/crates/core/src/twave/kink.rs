//! Heteroclinic kink `x(ρ) = ∫_{ρ_mid}^{ρ} √(ε/(2W))` and the long-period
//! limit of periodic waves.

use super::orbit::{orbit_profile, solve_orbit_params};
use super::{grid_size, Method, WaveProfile};
use crate::energy::{DoubleWell, EnergyModel, Well};
use crate::error::Result;
use crate::quadrature::gl8;

/// Default half-window of [`kink_profile`] in units of `√ε`.
pub const KINK_WINDOW_FACTOR: f64 = 40.0;

/// Smallest well offset tabulated; beyond it the kink equals the well.
const TINY: f64 = 1e-300;

/// One side of the kink in the variable `s`, offset from the well
/// `= off₀ e^{−s}`.
#[derive(Debug, Clone)]
struct Side {
    anchor: f64,
    sign: f64,
    off0: f64,
    panel: f64,
    /// Distance from the centre at panel ends.
    xs: Vec<f64>,
}

impl Side {
    fn new(dw: &DoubleWell, eps: f64, well: Well, off0: f64) -> Side {
        let sign = match well {
            Well::Vapor => 1.0,
            Well::Liquid => -1.0,
        };
        let mut side = Side {
            anchor: dw.anchor(well),
            sign,
            off0,
            panel: 0.5,
            xs: vec![0.0],
        };
        let s_max = (off0 / TINY).ln();
        let np = (s_max / side.panel).ceil() as usize;
        side.panel = s_max / np as f64;
        let rule = gl8();
        let mut x = 0.0;
        for k in 0..np {
            let a = k as f64 * side.panel;
            for (t, w) in rule.nodes.iter().zip(&rule.weights) {
                x += w * side.panel * side.rate(dw, eps, a + t * side.panel);
            }
            side.xs.push(x);
        }
        side
    }

    /// `|dx/ds| = √(ε/2) y / √W(y)`, written without forming `y²`.
    fn rate(&self, dw: &DoubleWell, eps: f64, s: f64) -> f64 {
        let y = self.sign * self.off0 * (-s).exp();
        let c = gl8().integrate(0.0, 1.0, |t| (1.0 - t) * dw.second(self.anchor + t * y));
        (0.5 * eps / c).sqrt()
    }

    fn value(&self, dw: &DoubleWell, eps: f64, dist: f64) -> f64 {
        let np = self.xs.len() - 1;
        if dist >= self.xs[np] {
            return self.anchor;
        }
        let k = self.xs.partition_point(|v| *v <= dist).clamp(1, np) - 1;
        let a = k as f64 * self.panel;
        let b = a + self.panel;
        let mut s = a + self.panel * (dist - self.xs[k]) / (self.xs[k + 1] - self.xs[k]);
        for _ in 0..8 {
            let xs = self.xs[k] + gl8().integrate(a, s, |u| self.rate(dw, eps, u));
            let step = (xs - dist) / self.rate(dw, eps, s);
            s = (s - step).clamp(a, b);
            if step.abs() < 1e-15 * (1.0 + s) {
                break;
            }
        }
        self.anchor + self.sign * self.off0 * (-s).exp()
    }
}

/// Monotone kink from `ρ_g` at `−∞` to `ρ_l` at `+∞`, centred at the
/// midpoint density.
#[derive(Debug, Clone)]
pub struct Kink {
    dw: DoubleWell,
    eps: f64,
    vapor: Side,
    liquid: Side,
}

impl Kink {
    pub fn new(energy: &EnergyModel, eps: f64) -> Result<Kink> {
        let dw = DoubleWell::new(energy)?;
        let mid = dw.bit.mid();
        let vapor = Side::new(&dw, eps, Well::Vapor, mid - dw.bit.rho_g);
        let liquid = Side::new(&dw, eps, Well::Liquid, dw.bit.rho_l - mid);
        Ok(Kink { dw, eps, vapor, liquid })
    }

    pub fn value(&self, x: f64) -> f64 {
        if x < 0.0 {
            self.vapor.value(&self.dw, self.eps, -x)
        } else {
            self.liquid.value(&self.dw, self.eps, x)
        }
    }

    pub fn well(&self) -> &DoubleWell {
        &self.dw
    }
}

/// Kink sampled on `[−window, window]`; the centre is a sample.
pub fn kink_profile(energy: &EnergyModel, eps: f64, window: f64) -> Result<WaveProfile> {
    let k = Kink::new(energy, eps)?;
    let half = ((20.0 * window / eps.sqrt()).ceil() as usize).max(128);
    let h = window / half as f64;
    let x: Vec<f64> = (0..=2 * half).map(|i| (i as f64 - half as f64) * h).collect();
    let rho = x.iter().map(|x| k.value(*x)).collect();
    Ok(WaveProfile {
        x,
        rho,
        omega: None,
        lambda: 0.0,
        m: energy.m,
        average: k.dw.bit.mid(),
        c: None,
        eps,
        method: Method::Kink,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinkLimitReport {
    pub eps: f64,
    /// `(ω, L∞ distance on [−ω/4, ω/4])`.
    pub distances: Vec<(f64, f64)>,
}

impl KinkLimitReport {
    pub fn strictly_decreasing(&self) -> bool {
        self.distances.windows(2).all(|w| w[1].1 < w[0].1)
    }

    pub fn last(&self) -> Option<f64> {
        self.distances.last().map(|d| d.1)
    }
}

/// Distance between the periodic wave of mean `ρ_mid` and the kink, after
/// moving the upcrossing of `ρ_mid` to the origin.
pub fn kink_limit_check(energy: &EnergyModel, eps: f64, omegas: &[f64]) -> Result<KinkLimitReport> {
    let kink = Kink::new(energy, eps)?;
    let mid = kink.dw.bit.mid();
    let mut distances = Vec::with_capacity(omegas.len());
    for &omega in omegas {
        let params = solve_orbit_params(energy, eps, omega, mid, None)?;
        let prof = orbit_profile(energy, eps, &params, grid_size(eps, omega))?;
        let period = prof.omega.unwrap_or(omega);
        let up = prof.upcrossing(mid).ok_or(crate::error::NskError::NoInterface { level: mid })?;
        let mut d = 0.0f64;
        for (x, r) in prof.x.iter().zip(&prof.rho) {
            let s = (x - up + 0.5 * period).rem_euclid(period) - 0.5 * period;
            if s.abs() <= 0.25 * omega {
                d = d.max((r - kink.value(s)).abs());
            }
        }
        distances.push((omega, d));
    }
    Ok(KinkLimitReport { eps, distances })
}
