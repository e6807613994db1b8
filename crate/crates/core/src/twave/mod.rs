//! Traveling waves of the Euler–Korteweg system: periodic profiles by
//! constrained energy minimisation and by phase-plane orbits, the
//! heteroclinic kink, and the Galilean assembly `u = c + m/ρ`.
//!
//! All profiles live in density coordinates and solve
//! `ε ρ'' − W'(ρ) = λ` with the double well `W` of `Ψ^m`.

mod kink;
mod minimize;
mod orbit;

pub use kink::{kink_limit_check, kink_profile, Kink, KinkLimitReport, KINK_WINDOW_FACTOR};
pub use minimize::{minimize_periodic, minimize_periodic_with, MinimizeOptions, MinimizeStats};
pub use orbit::{
    lambda_decay, orbit_period_and_average, orbit_profile, solve_orbit_params, solve_periodic_orbit, OrbitParams,
};

use crate::energy::DoubleWell;
use crate::error::{NskError, Result};
use crate::quadrature::gl8;

/// Ratio `ε/ω²` above which plateaus may not form.
pub const EPS_OMEGA_THRESHOLD: f64 = 1e-2;

/// Number of samples per period used by the solvers.
pub fn grid_size(eps: f64, omega: f64) -> usize {
    let n = (20.0 * omega / eps.sqrt()).ceil() as usize;
    let n = n.max(256);
    n + n % 2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Minimize,
    Orbit,
    Kink,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Minimize => "minimize",
            Method::Orbit => "orbit",
            Method::Kink => "kink",
        }
    }
}

/// Sampled wave profile over one period `[0, ω)` or, for the kink, over a
/// window `[−L, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveProfile {
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    /// Period; `None` for the kink.
    pub omega: Option<f64>,
    pub lambda: f64,
    pub m: f64,
    pub average: f64,
    /// Wave speed once assembled.
    pub c: Option<f64>,
    pub eps: f64,
    pub method: Method,
}

impl WaveProfile {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    pub fn mean(&self) -> f64 {
        self.rho.iter().sum::<f64>() / self.rho.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.rho.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.rho.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    fn sample(&self, i: isize) -> f64 {
        let n = self.rho.len() as isize;
        match self.omega {
            Some(_) => self.rho[i.rem_euclid(n) as usize],
            None => self.rho[i.clamp(0, n - 1) as usize],
        }
    }

    /// Four-point Lagrange interpolation; periodic unless this is a kink,
    /// which is held constant beyond its window.
    pub fn value_at(&self, x: f64) -> f64 {
        let h = self.spacing();
        let s = (x - self.x[0]) / h;
        let i = s.floor();
        let t = s - i;
        let i = i as isize;
        let p = [self.sample(i - 1), self.sample(i), self.sample(i + 1), self.sample(i + 2)];
        let w = [
            -t * (t - 1.0) * (t - 2.0) / 6.0,
            (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
            -(t + 1.0) * t * (t - 2.0) / 2.0,
            (t + 1.0) * t * (t - 1.0) / 6.0,
        ];
        p.iter().zip(&w).map(|(a, b)| a * b).sum()
    }

    /// First upcrossing of `level` (linear location refined on the cubic).
    pub fn upcrossing(&self, level: f64) -> Option<f64> {
        let n = self.rho.len();
        let last = if self.omega.is_some() { n } else { n - 1 };
        let h = self.spacing();
        for i in 0..last {
            let a = self.sample(i as isize) - level;
            let b = self.sample(i as isize + 1) - level;
            if a < 0.0 && b >= 0.0 {
                let (mut lo, mut hi) = (0.0, 1.0);
                let x0 = self.x[0] + i as f64 * h;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if self.value_at(x0 + mid * h) < level {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Some(x0 + 0.5 * (lo + hi) * h);
            }
        }
        None
    }

    /// `max_j |ε δ²ρ_j − W'(ρ_j) − λ|` with the centred second difference.
    pub fn el_residual(&self, dw: &DoubleWell) -> f64 {
        let h = self.spacing();
        let n = self.rho.len() as isize;
        let range = match self.omega {
            Some(_) => 0..n,
            None => 1..n - 1,
        };
        range
            .map(|i| {
                let d2 = (self.sample(i + 1) - 2.0 * self.sample(i) + self.sample(i - 1)) / (h * h);
                (self.eps * d2 - dw.deriv(self.sample(i)) - self.lambda).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Smallest L∞ distance between two periodic profiles over translations,
/// with the translation attaining it.
pub fn translation_distance(a: &WaveProfile, b: &WaveProfile) -> (f64, f64) {
    let dist = |s: f64| {
        a.x.iter()
            .zip(&a.rho)
            .map(|(x, r)| (r - b.value_at(x + s)).abs())
            .fold(0.0, f64::max)
    };
    best_shift(dist, b.omega.unwrap_or(1.0), b.spacing())
}

/// Like [`translation_distance`] against a closed-form profile.
pub fn translation_distance_to<F: Fn(f64) -> f64>(a: &WaveProfile, f: F, period: f64) -> (f64, f64) {
    let dist = |s: f64| {
        a.x.iter()
            .zip(&a.rho)
            .map(|(x, r)| (r - f(x + s)).abs())
            .fold(0.0, f64::max)
    };
    best_shift(dist, period, a.spacing())
}

fn best_shift<D: Fn(f64) -> f64>(dist: D, period: f64, h: f64) -> (f64, f64) {
    let coarse = 400;
    let (mut s0, mut d0) = (0.0, f64::INFINITY);
    for k in 0..coarse {
        let s = period * k as f64 / coarse as f64;
        let d = dist(s);
        if d < d0 {
            s0 = s;
            d0 = d;
        }
    }
    // Golden section around the coarse optimum.
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let span = (period / coarse as f64).max(h);
    let (mut lo, mut hi) = (s0 - span, s0 + span);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (dist(x1), dist(x2));
    for _ in 0..100 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = dist(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = dist(x2);
        }
        if hi - lo < 1e-15 * period.max(1.0) {
            break;
        }
    }
    let (s, d) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    if d < d0 {
        (d, s)
    } else {
        (d0, s0)
    }
}

/// Scaled energy against the total variation of `G = ∫√(2W)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModicaMortola {
    /// `E_ε/√ε` of the piecewise-linear interpolant.
    pub scaled_energy: f64,
    pub total_variation: f64,
}

impl ModicaMortola {
    pub fn slack(&self) -> f64 {
        self.scaled_energy - self.total_variation
    }
}

/// Evaluates `𝓔_ε(w) = ε^{-1/2} ∫ (½ε|w'|² + W(w))` on the piecewise-linear
/// interpolant of the samples and `TV(G(w))`, both with the same 8-point
/// Gauss rule per segment, so that the pointwise bound
/// `½√ε s² + W/√ε ≥ |s|√(2W)` carries over to the sums.
pub fn modica_mortola(profile: &WaveProfile, dw: &DoubleWell) -> ModicaMortola {
    let rule = gl8();
    let se = profile.eps.sqrt();
    let n = profile.rho.len();
    let segments = if profile.omega.is_some() { n } else { n - 1 };
    let h = profile.spacing();
    let (mut energy, mut tv) = (0.0, 0.0);
    for i in 0..segments {
        let a = profile.rho[i];
        let b = profile.rho[(i + 1) % n];
        let s = (b - a) / h;
        let mut e = 0.0;
        let mut g = 0.0;
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            let wv = dw.value(a + t * (b - a)).max(0.0);
            e += w * (0.5 * se * s * s + wv / se);
            g += w * (2.0 * wv).sqrt();
        }
        energy += e * h;
        tv += g * (b - a).abs();
    }
    ModicaMortola {
        scaled_energy: energy,
        total_variation: tv,
    }
}

/// Traveling wave `ρ(x − ct)`, `u = c + m/ρ` built from a profile.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelingWave {
    pub profile: WaveProfile,
    pub c: f64,
    /// Velocity at the vapor density.
    pub u1: f64,
    /// Velocity at the liquid density.
    pub u2: f64,
    /// `m ≠ 0`: fluid crosses the interfaces.
    pub phase_transition: bool,
}

impl TravelingWave {
    pub fn eval(&self, x: f64, t: f64) -> (f64, f64) {
        let r = self.profile.value_at(x - self.c * t);
        (r, self.c + self.profile.m / r)
    }
}

/// Assembles the traveling wave with flux `m` whose velocity on the vapor
/// side is `u1`: `c = u1 − m/ρ_g^m`, and then `u2 = c + m/ρ_l^m`.
pub fn galilean_assemble(profile: &WaveProfile, dw: &DoubleWell, m: f64, u1: f64) -> Result<TravelingWave> {
    if (m - profile.m).abs() > 1e-12 * m.abs().max(1.0) || (dw.model.m - m).abs() > 1e-12 * m.abs().max(1.0) {
        return Err(NskError::InvalidArgument(format!(
            "flux m = {m} does not match the profile (m = {}) or energy (m = {})",
            profile.m, dw.model.m
        )));
    }
    let c = u1 - m / dw.bit.rho_g;
    let u2 = c + m / dw.bit.rho_l;
    let mut p = profile.clone();
    p.c = Some(c);
    Ok(TravelingWave {
        profile: p,
        c,
        u1,
        u2,
        phase_transition: m != 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::EnergyModel;

    fn tanh_profile(eps: f64, n: usize, l: f64) -> WaveProfile {
        let h = 2.0 * l / (n - 1) as f64;
        let x: Vec<f64> = (0..n).map(|i| -l + i as f64 * h).collect();
        let rho = x.iter().map(|x| 1.5 + 0.5 * (x / (2.0 * (2.0 * eps).sqrt())).tanh()).collect();
        WaveProfile {
            x,
            rho,
            omega: None,
            lambda: 0.0,
            m: 0.0,
            average: 1.5,
            c: None,
            eps,
            method: Method::Kink,
        }
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(grid_size(1e-3, 1.0), 634);
        assert_eq!(grid_size(1e-2, 1.0), 256);
        assert_eq!(grid_size(1e-4, 1.0), 2000);
    }

    #[test]
    fn interpolation_is_exact_for_cubics() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let p = WaveProfile {
            rho: x.iter().map(|x| x * x * x - x).collect(),
            x,
            omega: None,
            lambda: 0.0,
            m: 0.0,
            average: 0.0,
            c: None,
            eps: 1.0,
            method: Method::Kink,
        };
        for &y in &[0.33, 0.71, 1.234] {
            assert!((p.value_at(y) - (y * y * y - y)).abs() < 1e-12);
        }
    }

    #[test]
    fn modica_mortola_is_sharp_for_the_kink() {
        // The kink is an equipartition profile, ½ερ'² = W, so the bound is
        // attained up to discretisation.
        let eps = 1e-3;
        let dw = DoubleWell::new(&EnergyModel::quartic(0.0)).unwrap();
        let p = tanh_profile(eps, 4001, 40.0 * eps.sqrt());
        let mm = modica_mortola(&p, &dw);
        assert!(mm.slack() >= -1e-12);
        assert!(mm.slack() < 1e-4, "{mm:?}");
        assert!((mm.total_variation - dw.sigma()).abs() < 1e-10);
    }

    #[test]
    fn shift_search_recovers_translation() {
        let p = WaveProfile {
            x: (0..200).map(|i| i as f64 / 200.0).collect(),
            rho: (0..200)
                .map(|i| 1.5 + 0.3 * (2.0 * std::f64::consts::PI * (i as f64 / 200.0 - 0.1234)).sin())
                .collect(),
            omega: Some(1.0),
            lambda: 0.0,
            m: 0.0,
            average: 1.5,
            c: None,
            eps: 1e-3,
            method: Method::Orbit,
        };
        let (d, s) = translation_distance_to(&p, |x| 1.5 + 0.3 * (2.0 * std::f64::consts::PI * x).sin(), 1.0);
        assert!(d < 1e-12, "{d}");
        assert!((s.rem_euclid(1.0) - (1.0 - 0.1234)).abs() < 1e-9, "{s}");
    }

    #[test]
    fn galilean_examples() {
        let eps = 1e-3;
        let zero = tanh_profile(eps, 101, 1.0);
        let dw0 = DoubleWell::new(&EnergyModel::quartic(0.0)).unwrap();
        let w = galilean_assemble(&zero, &dw0, 0.0, 0.7).unwrap();
        assert_eq!(w.c, 0.7);
        assert_eq!(w.u2, 0.7);
        assert!(!w.phase_transition);
        assert_eq!(w.eval(0.3, 2.0).1, 0.7);

        let dw = DoubleWell::new(&EnergyModel::quartic(0.1)).unwrap();
        let mut p = zero.clone();
        p.m = 0.1;
        let w = galilean_assemble(&p, &dw, 0.1, 0.0).unwrap();
        assert!(w.phase_transition);
        let (g, l) = (dw.bit.rho_g, dw.bit.rho_l);
        assert!((w.c - (w.u1 - 0.1 / g)).abs() < 1e-10);
        assert!((w.c - (w.u2 - 0.1 / l)).abs() < 1e-10);
        assert!((w.u2 - w.u1 + 0.05).abs() < 0.01, "{}", w.u2 - w.u1);
        assert!(galilean_assemble(&p, &dw, 0.2, 0.0).is_err());
    }
}
