//! Measured quantities: interface position and speed, mass flux, total
//! energy, the tangent-line comparison for `Ψ^m`, and the stationarity
//! identity behind the non-existence of viscous periodic waves with phase
//! transition.

use crate::cip::FluidState;
use crate::energy::EnergyModel;
use crate::error::{NskError, Result};
use crate::hermite::{HermiteField, Stencil};
use crate::quadrature::gl5;

/// Density level that marks an interface for the quartic energy.
pub const MID_LEVEL: f64 = 1.5;

const ROOT_TOL: f64 = 1e-12;
const SUBDIV: usize = 4;

/// All upcrossings of `level` by the Hermite interpolant, in `[0, 1)`.
pub fn upcrossings(rho: &HermiteField, level: f64) -> Vec<f64> {
    let h = rho.h();
    let mut out = Vec::new();
    for j in 0..rho.nx() {
        let f = |t: f64| rho.eval_cell(j, t).0 - level;
        let mut t0 = 0.0;
        let mut f0 = f(0.0);
        for k in 1..=SUBDIV {
            let t1 = k as f64 / SUBDIV as f64;
            let f1 = f(t1);
            // Half-open convention: a root exactly at a node belongs to the
            // cell on its right.
            if f0 < 0.0 && f1 >= 0.0 {
                if k == SUBDIV && f1 == 0.0 {
                    break;
                }
                let t = refine_root(&f, |t| rho.eval_cell(j, t).1 * h, t0, t1);
                out.push(rho.grid.x(j) + h * t);
            }
            t0 = t1;
            f0 = f1;
        }
        if f(0.0) == 0.0 && rho.eval_cell(j, 0.0).1 > 0.0 {
            out.push(rho.grid.x(j));
        }
    }
    out.sort_by(|a, b| a.total_cmp(b));
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    out
}

/// Safeguarded Newton on a bracket with `f(a) < 0 ≤ f(b)`.
fn refine_root<F, D>(f: &F, df: D, mut a: f64, mut b: f64) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut t = 0.5 * (a + b);
    for _ in 0..100 {
        let ft = f(t);
        if ft < 0.0 {
            a = t;
        } else {
            b = t;
        }
        let d = df(t);
        let newton = t - ft / d;
        let next = if d != 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        if (next - t).abs() < ROOT_TOL * 1e-3 || b - a < ROOT_TOL * 1e-3 {
            return next;
        }
        t = next;
    }
    t
}

fn torus_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Interface position: the leftmost upcrossing of `level`, or, when a
/// previous position is given, the upcrossing nearest to it on the torus.
pub fn interface_position(rho: &HermiteField, level: f64, prev: Option<f64>) -> Result<f64> {
    let ups = upcrossings(rho, level);
    if ups.is_empty() {
        return Err(NskError::NoInterface { level });
    }
    Ok(match prev {
        None => ups[0],
        Some(p) => *ups
            .iter()
            .min_by(|a, b| torus_distance(**a, p).total_cmp(&torus_distance(**b, p)))
            .unwrap(),
    })
}

/// Lifts `x` (mod 1) to the representative closest to `prev`.
pub fn unwrap_next(prev: f64, x: f64) -> f64 {
    let base = x - x.floor();
    base + (prev - base).round()
}

/// Removes jumps larger than 1/2 by adding whole periods.
pub fn unwrap(xs: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(xs.len());
    for (i, &x) in xs.iter().enumerate() {
        if i == 0 || !x.is_finite() || !out[i - 1].is_finite() {
            out.push(x);
        } else {
            out.push(unwrap_next(out[i - 1], x));
        }
    }
    out
}

/// Centered differences of `x(t)`, one-sided at the ends.
pub fn interface_velocity(t: &[f64], x: &[f64]) -> Vec<f64> {
    let n = t.len();
    assert_eq!(n, x.len());
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..n)
            .map(|i| {
                let (a, b) = if i == 0 {
                    (0, 1)
                } else if i == n - 1 {
                    (n - 2, n - 1)
                } else {
                    (i - 1, i + 1)
                };
                (x[b] - x[a]) / (t[b] - t[a])
            })
            .collect(),
    }
}

/// Five-point moving average, shrinking the window at the ends.
pub fn smooth5(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(2);
            let hi = (i + 2).min(n.saturating_sub(1));
            let s: f64 = v[lo..=hi].iter().sum();
            s / (hi - lo + 1) as f64
        })
        .collect()
}

/// Nodal mass flux `ρ(u − c)`.
pub fn mass_flux(state: &FluidState, c: f64) -> Vec<f64> {
    state
        .rho
        .values
        .iter()
        .zip(&state.u.values)
        .map(|(r, u)| r * (u - c))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    /// Mean of `|ρ(u − c)|`.
    pub mean_abs: f64,
}

impl FluxStats {
    pub fn of(flux: &[f64]) -> Self {
        let n = flux.len() as f64;
        let mean = flux.iter().sum::<f64>() / n;
        let var = flux.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>() / n;
        FluxStats {
            mean,
            std: var.sqrt(),
            min: flux.iter().cloned().fold(f64::INFINITY, f64::min),
            max: flux.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            mean_abs: flux.iter().map(|f| f.abs()).sum::<f64>() / n,
        }
    }

    /// `std / |mean|`.
    pub fn relative_std(&self) -> f64 {
        self.std / self.mean.abs()
    }
}

/// `∫ (Ψ(ρ) + ½ρu² + ½ερ_x²) dx` with a 5-point Gauss rule per cell.
pub fn total_energy(state: &FluidState, eps: f64, energy: &EnergyModel) -> f64 {
    let rule = gl5();
    let h = state.rho.h();
    let mut acc = 0.0;
    for j in 0..state.rho.nx() {
        let mut cell = 0.0;
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            let (r, rx, _) = state.rho.eval_cell(j, *t);
            let (u, _, _) = state.u.eval_cell(j, *t);
            cell += w * (energy.psi(r) + 0.5 * r * u * u + 0.5 * eps * rx * rx);
        }
        acc += h * cell;
    }
    acc
}

/// Extremes of the piecewise cubic, including interior critical points.
pub fn field_extrema(f: &HermiteField) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for j in 0..f.nx() {
        let mut consider = |t: f64| {
            let v = f.eval_cell(j, t).0;
            lo = lo.min(v);
            hi = hi.max(v);
        };
        consider(0.0);
        // Roots of the derivative quadratic a t² + b t + c on (0, 1).
        let v0 = f.eval_cell(j, 0.0).1;
        let v1 = f.eval_cell(j, 1.0).1;
        let vm = f.eval_cell(j, 0.5).1;
        let a = 2.0 * v0 + 2.0 * v1 - 4.0 * vm;
        let b = -3.0 * v0 - v1 + 4.0 * vm;
        let c = v0;
        if a.abs() > 1e-300 {
            let disc = b * b - 4.0 * a * c;
            if disc >= 0.0 {
                let s = disc.sqrt();
                for t in [(-b - s) / (2.0 * a), (-b + s) / (2.0 * a)] {
                    if t > 0.0 && t < 1.0 {
                        consider(t);
                    }
                }
            }
        } else if b.abs() > 1e-300 {
            let t = -c / b;
            if t > 0.0 && t < 1.0 {
                consider(t);
            }
        }
    }
    (lo, hi)
}

/// Tangent lines of `Ψ^m` at the smallest and largest density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitangencyReport {
    pub m: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub slope_min: f64,
    pub intercept_min: f64,
    pub slope_max: f64,
    pub intercept_max: f64,
}

impl BitangencyReport {
    pub fn slope_diff(&self) -> f64 {
        (self.slope_max - self.slope_min).abs()
    }
    pub fn intercept_diff(&self) -> f64 {
        (self.intercept_max - self.intercept_min).abs()
    }
}

/// Compares the tangents of `Ψ^m` (with `m = m_est`) at the extreme
/// densities of the state.
pub fn bitangency_check(state: &FluidState, energy: &EnergyModel, m_est: f64) -> Result<BitangencyReport> {
    let (lo, hi) = field_extrema(&state.rho);
    bitangency_at(lo, hi, energy, m_est)
}

pub fn bitangency_at(rho_min: f64, rho_max: f64, energy: &EnergyModel, m: f64) -> Result<BitangencyReport> {
    let model = energy.with_m(m);
    let tangent = |r: f64| -> Result<(f64, f64)> {
        let s = model.d_psi_m(r)?;
        Ok((s, model.psi_m(r)? - s * r))
    };
    let (slope_min, intercept_min) = tangent(rho_min)?;
    let (slope_max, intercept_max) = tangent(rho_max)?;
    Ok(BitangencyReport {
        m,
        rho_min,
        rho_max,
        slope_min,
        intercept_min,
        slope_max,
        intercept_max,
    })
}

/// The two integrals of the stationarity identity for `v = 1/ρ`:
///
/// * `∮ ∂ₓ F dx` with `F = m²v²/2 + Ψ'(ρ) − m μ̄ v v_x − ε ρ_xx`, evaluated
///   on the Hermite interpolant of `F` (vanishes by periodicity);
/// * `μ̄ ∮ |v_x|² dx`, which must vanish for a stationary viscous wave with
///   `m ≠ 0`.
pub fn stationarity_identity(
    rho: &HermiteField,
    m: f64,
    mu_bar: f64,
    eps: f64,
    energy: &EnergyModel,
) -> Result<(f64, f64)> {
    if let Some(&r) = rho.values.iter().find(|r| !(**r > 0.0)) {
        return Err(NskError::NonPositiveDensity(r));
    }
    let d2 = rho.apply_all(Stencil::D2);
    let d3 = rho.apply_all(Stencil::D3);
    let n = rho.nx();
    let mut fv = Vec::with_capacity(n);
    let mut fd = Vec::with_capacity(n);
    for j in 0..n {
        let r = rho.values[j];
        let rx = rho.derivs[j];
        let v = 1.0 / r;
        let vx = -rx / (r * r);
        let vxx = 2.0 * rx * rx / (r * r * r) - d2[j] / (r * r);
        fv.push(0.5 * m * m * v * v + energy.dpsi(r) - m * mu_bar * v * vx - eps * d2[j]);
        fd.push(
            m * m * v * vx + energy.d2psi(r) * rx - m * mu_bar * (vx * vx + v * vxx) - eps * d3[j],
        );
    }
    let field = HermiteField::new(rho.grid, fv, fd);
    let rule = gl5();
    let h = rho.h();
    let mut boundary = 0.0;
    for j in 0..n {
        let mut cell = 0.0;
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            cell += w * field.eval_cell(j, *t).1;
        }
        boundary += h * cell;
    }
    let dissipation = mu_bar
        * rho.integrate_with(rule, |_, r, rx| {
            let vx = -rx / (r * r);
            vx * vx
        });
    Ok((boundary, dissipation))
}

/// Time series sampled during a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticSeries {
    pub t: Vec<f64>,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    /// Interface position, unwrapped; NaN when no interface exists.
    pub xbar: Vec<f64>,
    /// Smoothed interface speed.
    pub c_interface: Vec<f64>,
    /// Interface speed before smoothing.
    pub c_raw: Vec<f64>,
    pub flux_mean: Vec<f64>,
    pub flux_std: Vec<f64>,
    pub umax: Vec<f64>,
    pub rhomin: Vec<f64>,
    pub rhomax: Vec<f64>,
    // Spatial moments from which the flux statistics follow for any c.
    m_ru: Vec<f64>,
    m_r: Vec<f64>,
    m_ru2: Vec<f64>,
    m_r2u: Vec<f64>,
    m_r2: Vec<f64>,
}

impl DiagnosticSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Appends one sample; speeds and flux statistics are filled by
    /// [`DiagnosticSeries::finalize`].
    pub fn record(&mut self, state: &FluidState, eps: f64, energy: &EnergyModel, level: f64) {
        let prev = self.xbar.iter().rev().find(|x| x.is_finite()).copied();
        let x = match interface_position(&state.rho, level, prev) {
            Ok(x) => match prev {
                Some(p) => unwrap_next(p, x),
                None => x,
            },
            Err(_) => f64::NAN,
        };
        let n = state.rho.nx() as f64;
        let (mut ru, mut r1, mut ru2, mut r2u, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (r, u) in state.rho.values.iter().zip(&state.u.values) {
            ru += r * u;
            r1 += r;
            ru2 += r * u * r * u;
            r2u += r * r * u;
            r2 += r * r;
        }
        self.t.push(state.t);
        self.mass.push(state.mass());
        self.energy.push(total_energy(state, eps, energy));
        self.xbar.push(x);
        self.umax.push(state.u.max_abs());
        self.rhomin.push(state.rho.min_value());
        self.rhomax.push(state.rho.max_value());
        self.m_ru.push(ru / n);
        self.m_r.push(r1 / n);
        self.m_ru2.push(ru2 / n);
        self.m_r2u.push(r2u / n);
        self.m_r2.push(r2 / n);
    }

    /// Computes interface speeds and the flux statistics relative to them.
    pub fn finalize(&mut self) {
        self.c_raw = if self.len() >= 2 {
            interface_velocity(&self.t, &self.xbar)
        } else {
            vec![0.0; self.len()]
        };
        self.c_interface = smooth5(&self.c_raw);
        self.flux_mean.clear();
        self.flux_std.clear();
        for i in 0..self.len() {
            let c = if self.c_interface[i].is_finite() {
                self.c_interface[i]
            } else {
                0.0
            };
            let mean = self.m_ru[i] - c * self.m_r[i];
            let second = self.m_ru2[i] - 2.0 * c * self.m_r2u[i] + c * c * self.m_r2[i];
            self.flux_mean.push(mean);
            self.flux_std.push((second - mean * mean).max(0.0).sqrt());
        }
    }

    /// Largest relative deviation of the mass from its first sample.
    pub fn mass_drift(&self) -> f64 {
        let m0 = match self.mass.first() {
            Some(m) => *m,
            None => return 0.0,
        };
        self.mass.iter().fold(0.0, |d, m| d.max((m - m0).abs() / m0.abs()))
    }

    /// Average of `v` over samples with `t` in the last `frac` of the run.
    pub fn tail_mean(&self, v: &[f64], frac: f64) -> f64 {
        let t_end = match self.t.last() {
            Some(t) => *t,
            None => return f64::NAN,
        };
        let t0 = self.t[0] + (1.0 - frac) * (t_end - self.t[0]);
        let (s, k) = self
            .t
            .iter()
            .zip(v)
            .filter(|(t, x)| **t >= t0 && x.is_finite())
            .fold((0.0, 0usize), |(s, k), (_, x)| (s + x, k + 1));
        if k == 0 {
            f64::NAN
        } else {
            s / k as f64
        }
    }

    /// Time-averaged mean flux over the last tenth of the run.
    pub fn m_estimate(&self) -> f64 {
        self.tail_mean(&self.flux_mean, 0.1)
    }

    pub const COLUMNS: [&'static str; 10] = [
        "t",
        "mass",
        "energy",
        "xbar",
        "c_interface",
        "flux_mean",
        "flux_std",
        "umax",
        "rhomin",
        "rhomax",
    ];

    /// Row `i` in the order of [`DiagnosticSeries::COLUMNS`].
    pub fn row(&self, i: usize) -> [f64; 10] {
        let get = |v: &Vec<f64>| v.get(i).copied().unwrap_or(f64::NAN);
        [
            self.t[i],
            self.mass[i],
            self.energy[i],
            self.xbar[i],
            get(&self.c_interface),
            get(&self.flux_mean),
            get(&self.flux_std),
            self.umax[i],
            self.rhomin[i],
            self.rhomax[i],
        ]
    }
}
