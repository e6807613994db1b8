//! Periodic orbits of `ε q'' = W'(q) + λ` in the phase plane.
//!
//! The potential `G = W + λq` has a critical point `h₋` near `ρ_g` and
//! `h₊` near `ρ_l`. Orbits are parameterised by the distances `d₋`, `d₊`
//! of their turning points from these critical points: for long periods
//! they fall to 1e−20 and below, far under the spacing of doubles near 1,
//! and for an asymmetric mean `h₋` itself moves off the well by `λ/W''`,
//! which is still much larger than `d₋`. On each half of the orbit the
//! substitution `q − h₋ = d₋ cosh τ` (resp. `h₊ − q = d₊ cosh τ`) removes
//! the inverse square root at the turning point and turns the logarithmic
//! growth of the period into a finite `τ` range with an almost constant
//! integrand.

use super::minimize::minimize_periodic;
use super::{grid_size, Method, WaveProfile};
use crate::energy::{DoubleWell, EnergyModel, Well};
use crate::error::{NskError, Result};
use crate::quadrature::gl8;

/// `G(c + z) − G(c)` for a critical point `c` of `G`.
fn rise(dw: &DoubleWell, c: f64, z: f64) -> f64 {
    z * z * gl8().integrate(0.0, 1.0, |t| (1.0 - t) * dw.second(c + t * z))
}

/// `G'(c + z)` for a critical point `c` of `G`.
fn rise_slope(dw: &DoubleWell, c: f64, z: f64) -> f64 {
    z * gl8().integrate(0.0, 1.0, |t| dw.second(c + t * z))
}

fn sign(well: Well) -> f64 {
    match well {
        Well::Vapor => 1.0,
        Well::Liquid => -1.0,
    }
}

/// Offset `y` of the critical point of `W + λq` near `well`:
/// `W'(anchor + y) = −λ`.
fn critical_offset(dw: &DoubleWell, well: Well, lambda: f64) -> Result<f64> {
    let a = dw.anchor(well);
    let mut y = -lambda / dw.second(a);
    for _ in 0..50 {
        let f = dw.slope_near(well, y) + lambda;
        let step = f / dw.second(a + y);
        y -= step;
        if step.abs() <= 1e-17 * y.abs() || f == 0.0 {
            break;
        }
    }
    let width = dw.bit.rho_l - dw.bit.rho_g;
    if !(y.abs() < 0.25 * width) || !(dw.second(a + y) > 0.0) {
        return Err(NskError::InvalidOrbit(format!("no critical point near the well for lambda = {lambda:e}")));
    }
    Ok(y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitParams {
    /// Hamiltonian level: `εp²/2 = H0 + W(q) + λq`.
    pub h0: f64,
    pub lambda: f64,
    pub q_minus: f64,
    pub q_plus: f64,
    /// `q_minus − h₋`.
    pub d_minus: f64,
    /// `h₊ − q_plus`.
    pub d_plus: f64,
    /// `h₋ − ρ_g`.
    pub y_minus: f64,
    /// `h₊ − ρ_l`.
    pub y_plus: f64,
}

impl OrbitParams {
    /// Orbit whose turning points lie `d_minus`, `d_plus` inside the
    /// critical points of `W + λq`; `λ` follows from equal potential at
    /// both turning points.
    pub fn from_offsets(dw: &DoubleWell, d_minus: f64, d_plus: f64) -> Result<Self> {
        let width = dw.bit.rho_l - dw.bit.rho_g;
        if !(d_minus > 0.0 && d_plus > 0.0 && d_minus + d_plus < width) {
            return Err(NskError::InvalidOrbit(format!(
                "turning-point offsets {d_minus:e}, {d_plus:e} do not bracket the barrier"
            )));
        }
        let (mut lambda, mut ym, mut yp) = (0.0, 0.0, 0.0);
        for it in 0..60 {
            let cm = dw.bit.rho_g + ym;
            let cp = dw.bit.rho_l + yp;
            let num = dw.value_near(Well::Liquid, yp) - dw.value_near(Well::Vapor, ym) + rise(dw, cp, -d_plus)
                - rise(dw, cm, d_minus);
            let next = -num / (width + yp - ym);
            let done = (next - lambda).abs() <= 1e-16 * next.abs() || next == lambda;
            lambda = next;
            ym = critical_offset(dw, Well::Vapor, lambda)?;
            yp = critical_offset(dw, Well::Liquid, lambda)?;
            if done && it > 0 {
                break;
            }
        }
        let gap = width + yp - ym - d_minus - d_plus;
        if !(gap > 0.0) {
            return Err(NskError::InvalidOrbit("turning points cross".into()));
        }
        let q_minus = dw.bit.rho_g + (ym + d_minus);
        let q_plus = dw.bit.rho_l + (yp - d_plus);
        Ok(OrbitParams {
            h0: -dw.value_near(Well::Vapor, ym + d_minus) - lambda * q_minus,
            lambda,
            q_minus,
            q_plus,
            d_minus,
            d_plus,
            y_minus: ym,
            y_plus: yp,
        })
    }

    /// `εp²/2 − W(q) − λq − H0`.
    pub fn hamiltonian_defect(&self, dw: &DoubleWell, eps: f64, q: f64, p: f64) -> f64 {
        0.5 * eps * p * p - (dw.value(q) - dw.value(self.q_minus) + self.lambda * (q - self.q_minus))
    }

    fn span(&self, dw: &DoubleWell) -> f64 {
        dw.bit.rho_l - dw.bit.rho_g + self.y_plus - self.y_minus - self.d_minus - self.d_plus
    }
}

/// One half of the orbit, from a turning point to the midpoint.
struct Half<'a> {
    dw: &'a DoubleWell,
    well: Well,
    /// Offset of the critical point from the well.
    y: f64,
    /// Distance of the turning point from the critical point, positive.
    d: f64,
    eps: f64,
    tau_max: f64,
}

impl Half<'_> {
    fn centre(&self) -> f64 {
        self.dw.anchor(self.well) + self.y
    }

    fn density(&self, tau: f64) -> f64 {
        self.dw.anchor(self.well) + (self.y + sign(self.well) * self.d * tau.cosh())
    }

    /// `dx/dτ`.
    fn rate(&self, tau: f64) -> f64 {
        let s = sign(self.well);
        let c = self.centre();
        let z0 = s * self.d;
        let sh = (0.5 * tau).sinh();
        let delta = s * 2.0 * self.d * sh * sh;
        // Mean slope of G over [q₀, q(τ)].
        let slope = if delta.abs() >= 0.5 * self.d {
            (rise(self.dw, c, z0 + delta) - rise(self.dw, c, z0)) / delta
        } else {
            gl8().integrate(0.0, 1.0, |t| rise_slope(self.dw, c, z0 + t * delta))
        };
        (self.eps * self.d).sqrt() * (0.5 * tau).cosh() / (s * slope).sqrt()
    }

    fn panels(&self) -> usize {
        ((self.tau_max / 0.25).ceil() as usize).max(16)
    }

    /// Cumulative `x` at panel ends and `∫ q dx` over the half.
    fn table(&self) -> (Vec<f64>, f64) {
        let np = self.panels();
        let w = self.tau_max / np as f64;
        let rule = gl8();
        let mut xs = Vec::with_capacity(np + 1);
        xs.push(0.0);
        let (mut x, mut q) = (0.0, 0.0);
        for k in 0..np {
            let a = k as f64 * w;
            for (t, wt) in rule.nodes.iter().zip(&rule.weights) {
                let tau = a + t * w;
                let r = self.rate(tau) * wt * w;
                x += r;
                q += r * self.density(tau);
            }
            xs.push(x);
        }
        (xs, q)
    }

    /// `τ` at which the half has advanced by `x`.
    fn invert(&self, xs: &[f64], x: f64) -> f64 {
        let np = xs.len() - 1;
        let w = self.tau_max / np as f64;
        let k = xs.partition_point(|v| *v <= x).clamp(1, np) - 1;
        let a = k as f64 * w;
        let mut tau = a + w * ((x - xs[k]) / (xs[k + 1] - xs[k])).clamp(0.0, 1.0);
        for _ in 0..8 {
            let xt = xs[k] + gl8().integrate(a, tau, |s| self.rate(s));
            let step = (xt - x) / self.rate(tau);
            tau = (tau - step).clamp(a, a + w);
            if step.abs() < 1e-15 * (1.0 + tau) {
                break;
            }
        }
        tau
    }
}

fn halves<'a>(dw: &'a DoubleWell, eps: f64, p: &OrbitParams) -> [Half<'a>; 2] {
    let span = p.span(dw);
    [
        Half {
            dw,
            well: Well::Vapor,
            y: p.y_minus,
            d: p.d_minus,
            eps,
            tau_max: (1.0 + 0.5 * span / p.d_minus).acosh(),
        },
        Half {
            dw,
            well: Well::Liquid,
            y: p.y_plus,
            d: p.d_plus,
            eps,
            tau_max: (1.0 + 0.5 * span / p.d_plus).acosh(),
        },
    ]
}

fn period_and_average(dw: &DoubleWell, eps: f64, p: &OrbitParams) -> (f64, f64) {
    let [v, l] = halves(dw, eps, p);
    let (xv, qv) = v.table();
    let (xl, ql) = l.table();
    let half = xv[xv.len() - 1] + xl[xl.len() - 1];
    (2.0 * half, (qv + ql) / half)
}

/// Period `T` and mean density of the orbit.
pub fn orbit_period_and_average(energy: &EnergyModel, eps: f64, params: &OrbitParams) -> Result<(f64, f64)> {
    let dw = DoubleWell::new(energy)?;
    // Re-derive from the offsets: they must describe an actual oscillation.
    let p = OrbitParams::from_offsets(&dw, params.d_minus, params.d_plus)?;
    Ok(period_and_average(&dw, eps, &p))
}

/// Damped Newton on `(ln d₋, ln d₊)` for `T = ω`, mean `= a`.
fn newton(dw: &DoubleWell, eps: f64, omega: f64, a: f64, seed: (f64, f64)) -> Result<OrbitParams> {
    let resid = |u: [f64; 2]| -> Result<([f64; 2], OrbitParams)> {
        let p = OrbitParams::from_offsets(dw, u[0].exp(), u[1].exp())?;
        let (t, avg) = period_and_average(dw, eps, &p);
        Ok(([(t - omega) / omega, avg - a], p))
    };
    let norm = |r: [f64; 2]| r[0].abs().max(r[1].abs());
    let mut u = [seed.0.ln(), seed.1.ln()];
    let (mut r, mut p) = resid(u)?;
    let max_iter = 60;
    for _ in 0..max_iter {
        if norm(r) <= 1e-12 {
            return Ok(p);
        }
        let h = 1e-6;
        let mut jac = [[0.0; 2]; 2];
        for c in 0..2 {
            let mut up = u;
            let mut um = u;
            up[c] += h;
            um[c] -= h;
            let (rp, _) = resid(up)?;
            let (rm, _) = resid(um)?;
            jac[0][c] = (rp[0] - rm[0]) / (2.0 * h);
            jac[1][c] = (rp[1] - rm[1]) / (2.0 * h);
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let du = [
            -(jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
            -(-jac[1][0] * r[0] + jac[0][0] * r[1]) / det,
        ];
        // Cap the step at a factor e³ in either offset.
        let cap = (3.0 / du[0].abs().max(du[1].abs())).min(1.0);
        let mut step = cap;
        let mut improved = false;
        for _ in 0..40 {
            let un = [u[0] + step * du[0], u[1] + step * du[1]];
            if let Ok((rn, pn)) = resid(un) {
                if norm(rn) < norm(r) {
                    u = un;
                    r = rn;
                    p = pn;
                    improved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if norm(r) <= 1e-12 {
        Ok(p)
    } else {
        Err(NskError::NoConvergence {
            method: "periodic orbit Newton (refresh the minimizer seed)",
            iterations: max_iter,
            residual: norm(r),
        })
    }
}

/// Offsets expected when the orbit lingers near the wells for the
/// sharp-interface fractions of the period.
fn asymptotic_seed(dw: &DoubleWell, eps: f64, omega: f64, a: f64) -> (f64, f64) {
    let width = dw.bit.rho_l - dw.bit.rho_g;
    let theta = (a - dw.bit.rho_g) / width;
    let kv = dw.second(dw.bit.rho_g).sqrt();
    let kl = dw.second(dw.bit.rho_l).sqrt();
    let se = eps.sqrt();
    // Each plateau takes about 2(√ε/κ) ln(width/d) of the period.
    let d = width * (-kv * omega * (1.0 - theta) / (2.0 * se)).exp();
    let e = width * (-kl * omega * theta / (2.0 * se)).exp();
    (d.clamp(1e-300, 0.25 * width), e.clamp(1e-300, 0.25 * width))
}

/// Orbit with period `omega` and mean `a`; `seed` gives starting offsets
/// `(d₋, d₊)`. Without a seed the sharp-interface estimate is tried first
/// and then the turning points of the energy minimiser.
pub fn solve_orbit_params(
    energy: &EnergyModel,
    eps: f64,
    omega: f64,
    a: f64,
    seed: Option<(f64, f64)>,
) -> Result<OrbitParams> {
    let dw = DoubleWell::new(energy)?;
    let (lo, hi) = (dw.bit.rho_g, dw.bit.rho_l);
    if !(a > lo && a < hi) {
        return Err(NskError::InvalidArgument(format!(
            "average {a} must lie strictly between {lo} and {hi}"
        )));
    }
    if let Some(s) = seed {
        return newton(&dw, eps, omega, a, s);
    }
    match newton(&dw, eps, omega, a, asymptotic_seed(&dw, eps, omega, a)) {
        Ok(p) => Ok(p),
        Err(first) => {
            let m = minimize_periodic(energy, eps, omega, a)?;
            let ym = critical_offset(&dw, Well::Vapor, m.lambda)?;
            let yp = critical_offset(&dw, Well::Liquid, m.lambda)?;
            let (d, e) = (m.min() - lo - ym, hi + yp - m.max());
            if d > 1e-10 && e > 1e-10 {
                newton(&dw, eps, omega, a, (d, e))
            } else {
                Err(first)
            }
        }
    }
}

/// Samples the orbit on `n` points of `[0, T)`, starting at `q₋`.
pub fn orbit_profile(energy: &EnergyModel, eps: f64, params: &OrbitParams, n: usize) -> Result<WaveProfile> {
    let dw = DoubleWell::new(energy)?;
    let p = OrbitParams::from_offsets(&dw, params.d_minus, params.d_plus)?;
    let [v, l] = halves(&dw, eps, &p);
    let (xv, qv) = v.table();
    let (xl, ql) = l.table();
    let xv_end = xv[xv.len() - 1];
    let half = xv_end + xl[xl.len() - 1];
    let period = 2.0 * half;
    let h = period / n as f64;
    let mut x = Vec::with_capacity(n);
    let mut rho = Vec::with_capacity(n);
    for j in 0..n {
        let xj = j as f64 * h;
        let s = if xj > half { period - xj } else { xj };
        let r = if s <= xv_end {
            v.density(v.invert(&xv, s))
        } else {
            l.density(l.invert(&xl, half - s))
        };
        x.push(xj);
        rho.push(r);
    }
    Ok(WaveProfile {
        x,
        rho,
        omega: Some(period),
        lambda: p.lambda,
        m: energy.m,
        average: (qv + ql) / half,
        c: None,
        eps,
        method: Method::Orbit,
    })
}

/// Periodic traveling-wave profile from the phase plane.
pub fn solve_periodic_orbit(energy: &EnergyModel, eps: f64, omega: f64, a: f64) -> Result<WaveProfile> {
    let p = solve_orbit_params(energy, eps, omega, a, None)?;
    let mut prof = orbit_profile(energy, eps, &p, grid_size(eps, omega))?;
    prof.omega = Some(omega);
    prof.average = a;
    Ok(prof)
}

/// `(ω, λ)` along increasing periods.
pub fn lambda_decay(energy: &EnergyModel, eps: f64, a: f64, omegas: &[f64]) -> Result<Vec<(f64, f64)>> {
    if omegas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(NskError::InvalidArgument("periods must be increasing".into()));
    }
    omegas
        .iter()
        .map(|&w| solve_orbit_params(energy, eps, w, a, None).map(|p| (w, p.lambda)))
        .collect()
}
