//! Thermodynamic model: available energy, the momentum-modified energy,
//! pressure, the common-tangent (bitangent) construction and the double-well
//! potential it induces.
//!
//! All densities are dimensionless. The momentum `m` is the constant mass
//! flux in the frame moving with a traveling wave; it enters only through
//! the modified energy `Ψ^m(ρ) = Ψ(ρ) − m²/(2ρ)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{NskError, Result};
use crate::quadrature::{self, gl8};

/// A volume-specific available energy with analytic derivatives.
pub trait AvailableEnergy: Send + Sync {
    fn psi(&self, rho: f64) -> f64;
    fn dpsi(&self, rho: f64) -> f64;
    fn d2psi(&self, rho: f64) -> f64;
    /// Third derivative, used by the derivative update of the source step.
    fn d3psi(&self, rho: f64) -> f64;
    /// Approximate well locations for `m = 0`; seeds the bitangent solve.
    fn well_hint(&self) -> (f64, f64);
    fn name(&self) -> &str {
        "custom"
    }
}

/// `Ψ(ρ) = ¼ (ρ − a)² (ρ − b)²` with wells at `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quartic {
    pub a: f64,
    pub b: f64,
}

impl Default for Quartic {
    fn default() -> Self {
        Quartic { a: 1.0, b: 2.0 }
    }
}

impl AvailableEnergy for Quartic {
    #[inline]
    fn psi(&self, rho: f64) -> f64 {
        let q = (rho - self.a) * (rho - self.b);
        0.25 * q * q
    }
    #[inline]
    fn dpsi(&self, rho: f64) -> f64 {
        let q = (rho - self.a) * (rho - self.b);
        0.5 * q * (2.0 * rho - self.a - self.b)
    }
    #[inline]
    fn d2psi(&self, rho: f64) -> f64 {
        let c = 0.5 * (self.a + self.b);
        let half = 0.5 * (self.b - self.a);
        let s = rho - c;
        3.0 * s * s - half * half
    }
    #[inline]
    fn d3psi(&self, rho: f64) -> f64 {
        6.0 * (rho - 0.5 * (self.a + self.b))
    }
    fn well_hint(&self) -> (f64, f64) {
        (self.a, self.b)
    }
    fn name(&self) -> &str {
        "quartic"
    }
}

/// Available energy plus the moving-frame momentum `m`.
#[derive(Clone)]
pub struct EnergyModel {
    energy: Arc<dyn AvailableEnergy>,
    pub m: f64,
}

impl fmt::Debug for EnergyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EnergyModel")
            .field("energy", &self.energy.name())
            .field("m", &self.m)
            .finish()
    }
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel::quartic(0.0)
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(NskError::NonPositiveDensity(rho))
    }
}

impl EnergyModel {
    pub fn new(energy: Arc<dyn AvailableEnergy>, m: f64) -> Self {
        EnergyModel { energy, m }
    }

    /// The compiled-in default `¼(ρ−1)²(ρ−2)²`.
    pub fn quartic(m: f64) -> Self {
        EnergyModel::new(Arc::new(Quartic::default()), m)
    }

    /// Same energy, different momentum.
    pub fn with_m(&self, m: f64) -> Self {
        EnergyModel {
            energy: Arc::clone(&self.energy),
            m,
        }
    }

    pub fn available(&self) -> &dyn AvailableEnergy {
        self.energy.as_ref()
    }

    #[inline]
    pub fn psi(&self, rho: f64) -> f64 {
        self.energy.psi(rho)
    }
    #[inline]
    pub fn dpsi(&self, rho: f64) -> f64 {
        self.energy.dpsi(rho)
    }
    #[inline]
    pub fn d2psi(&self, rho: f64) -> f64 {
        self.energy.d2psi(rho)
    }
    #[inline]
    pub fn d3psi(&self, rho: f64) -> f64 {
        self.energy.d3psi(rho)
    }

    /// `Ψ^m(ρ) = Ψ(ρ) − m²/(2ρ)`.
    pub fn psi_m(&self, rho: f64) -> Result<f64> {
        check_rho(rho)?;
        Ok(self.psi_m_unchecked(rho))
    }

    pub fn d_psi_m(&self, rho: f64) -> Result<f64> {
        check_rho(rho)?;
        Ok(self.d_psi_m_unchecked(rho))
    }

    pub fn d2_psi_m(&self, rho: f64) -> Result<f64> {
        check_rho(rho)?;
        Ok(self.d2_psi_m_unchecked(rho))
    }

    #[inline]
    pub(crate) fn psi_m_unchecked(&self, rho: f64) -> f64 {
        self.energy.psi(rho) - 0.5 * self.m * self.m / rho
    }
    #[inline]
    pub(crate) fn d_psi_m_unchecked(&self, rho: f64) -> f64 {
        self.energy.dpsi(rho) + 0.5 * self.m * self.m / (rho * rho)
    }
    #[inline]
    pub(crate) fn d2_psi_m_unchecked(&self, rho: f64) -> f64 {
        self.energy.d2psi(rho) - self.m * self.m / (rho * rho * rho)
    }

    /// `p(ρ) = ρ Ψ'(ρ) − Ψ(ρ)`.
    pub fn pressure(&self, rho: f64) -> Result<f64> {
        check_rho(rho)?;
        Ok(rho * self.energy.dpsi(rho) - self.energy.psi(rho))
    }

    /// `p'(ρ) = ρ Ψ''(ρ)`.
    pub fn d_pressure(&self, rho: f64) -> Result<f64> {
        check_rho(rho)?;
        Ok(rho * self.energy.d2psi(rho))
    }
}

/// The line tangent to `Ψ^m` at both phase densities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bitangent {
    pub rho_g: f64,
    pub rho_l: f64,
    pub slope: f64,
    pub intercept: f64,
}

impl Bitangent {
    #[inline]
    pub fn line(&self, rho: f64) -> f64 {
        self.slope * rho + self.intercept
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.rho_g + self.rho_l)
    }

    pub fn width(&self) -> f64 {
        self.rho_l - self.rho_g
    }

    /// Maps density to the normalized phase variable, `ρ_g ↦ −1`, `ρ_l ↦ +1`.
    pub fn to_phase(&self, rho: f64) -> f64 {
        2.0 * (rho - self.rho_g) / (self.rho_l - self.rho_g) - 1.0
    }

    pub fn from_phase(&self, w: f64) -> f64 {
        self.rho_g + 0.5 * (w + 1.0) * (self.rho_l - self.rho_g)
    }

    /// Largest of the four tangency residuals.
    pub fn residual(&self, model: &EnergyModel) -> f64 {
        let r1 = (model.d_psi_m_unchecked(self.rho_g) - self.slope).abs();
        let r2 = (model.d_psi_m_unchecked(self.rho_l) - self.slope).abs();
        let r3 = (model.psi_m_unchecked(self.rho_g) - self.line(self.rho_g)).abs();
        let r4 = (model.psi_m_unchecked(self.rho_l) - self.line(self.rho_l)).abs();
        r1.max(r2).max(r3).max(r4)
    }
}

const BITANGENT_TOL: f64 = 1e-12;
const BITANGENT_MAX_ITER: usize = 100;

/// Common tangent of `Ψ^m` by damped Newton seeded from the `m = 0` wells.
pub fn bitangent(model: &EnergyModel) -> Result<Bitangent> {
    let fail = |reason: String| NskError::NoBitangent { m: model.m, reason };
    let (mut g, mut l) = model.available().well_hint();

    let residual = |g: f64, l: f64| -> Option<[f64; 2]> {
        if !(g > 0.0 && l > g) {
            return None;
        }
        let dg = model.d_psi_m_unchecked(g);
        let dl = model.d_psi_m_unchecked(l);
        let f1 = dg - dl;
        let f2 = dg * (l - g) - (model.psi_m_unchecked(l) - model.psi_m_unchecked(g));
        Some([f1, f2])
    };
    let norm = |r: [f64; 2]| r[0].abs().max(r[1].abs());

    let mut r = residual(g, l).ok_or_else(|| fail("invalid seed".into()))?;
    for _ in 0..BITANGENT_MAX_ITER {
        if norm(r) <= 1e-15 {
            break;
        }
        let d2g = model.d2_psi_m_unchecked(g);
        let d2l = model.d2_psi_m_unchecked(l);
        let dg = model.d_psi_m_unchecked(g);
        let dl = model.d_psi_m_unchecked(l);
        // Jacobian of (f1, f2) with respect to (g, l).
        let j11 = d2g;
        let j12 = -d2l;
        let j21 = d2g * (l - g);
        let j22 = dg - dl;
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            return Err(fail("singular Newton system".into()));
        }
        let sg = -(r[0] * j22 - j12 * r[1]) / det;
        let sl = -(j11 * r[1] - j21 * r[0]) / det;

        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let (gn, ln) = (g + step * sg, l + step * sl);
            if let Some(rn) = residual(gn, ln) {
                if norm(rn) < norm(r) || norm(rn) <= 1e-15 {
                    g = gn;
                    l = ln;
                    r = rn;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            // Stalled; the residual check below decides.
            break;
        }
    }

    let (g0, l0) = model.available().well_hint();
    if !(g > 0.0 && l - g > 1e-3 * (l0 - g0)) {
        return Err(fail(format!("degenerate pair ({g}, {l})")));
    }
    let slope = model.d_psi_m_unchecked(g);
    let bit = Bitangent {
        rho_g: g,
        rho_l: l,
        slope,
        intercept: model.psi_m_unchecked(g) - slope * g,
    };
    let res = bit.residual(model);
    if !(res <= BITANGENT_TOL) {
        return Err(fail(format!("Newton residual {res:e}")));
    }
    // Ψ^m must lie above the line between the contact points.
    let n = 2000;
    let scale = model.psi_m_unchecked(bit.mid()).abs().max(1e-3);
    let mut positive = false;
    for i in 1..n {
        let rho = g + (l - g) * i as f64 / n as f64;
        let gap = model.psi_m_unchecked(rho) - bit.line(rho);
        if gap < -1e-12 * scale {
            return Err(fail(format!("Ψ^m dips below the tangent line at ρ = {rho}")));
        }
        if gap > 0.0 {
            positive = true;
        }
    }
    if !positive {
        return Err(fail("tangent line coincides with Ψ^m".into()));
    }
    Ok(bit)
}

/// Which contact point a well-relative evaluation is anchored at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Well {
    Vapor,
    Liquid,
}

/// `W = Ψ^m − ℓ_m` on a window around `[ρ_g, ρ_l]`, extended outside by
/// its second-order Taylor polynomial at the window edge.
#[derive(Debug, Clone)]
pub struct DoubleWell {
    pub model: EnergyModel,
    pub bit: Bitangent,
    lo: f64,
    hi: f64,
    lo_jet: [f64; 3],
    hi_jet: [f64; 3],
}

/// Relative width of the window on which `W` is the raw `Ψ^m − ℓ_m`.
pub const EXTENSION_DELTA: f64 = 0.1;

impl DoubleWell {
    pub fn new(model: &EnergyModel) -> Result<Self> {
        let bit = bitangent(model)?;
        Ok(Self::with_bitangent(model, bit))
    }

    pub fn with_bitangent(model: &EnergyModel, bit: Bitangent) -> Self {
        let pad = EXTENSION_DELTA * bit.width();
        let lo = bit.rho_g - pad;
        let hi = bit.rho_l + pad;
        let jet = |rho: f64| {
            let w = model.psi_m_unchecked(rho) - bit.line(rho);
            let dw = model.d_psi_m_unchecked(rho) - bit.slope;
            // A non-convex edge would break coercivity; floor the curvature.
            let d2w = model.d2_psi_m_unchecked(rho).max(1e-3);
            [w, dw, d2w]
        };
        DoubleWell {
            model: model.clone(),
            bit,
            lo,
            hi,
            lo_jet: jet(lo),
            hi_jet: jet(hi),
        }
    }

    pub fn window(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn value(&self, rho: f64) -> f64 {
        if rho < self.lo {
            let d = rho - self.lo;
            self.lo_jet[0] + self.lo_jet[1] * d + 0.5 * self.lo_jet[2] * d * d
        } else if rho > self.hi {
            let d = rho - self.hi;
            self.hi_jet[0] + self.hi_jet[1] * d + 0.5 * self.hi_jet[2] * d * d
        } else {
            self.model.psi_m_unchecked(rho) - self.bit.line(rho)
        }
    }

    pub fn deriv(&self, rho: f64) -> f64 {
        if rho < self.lo {
            self.lo_jet[1] + self.lo_jet[2] * (rho - self.lo)
        } else if rho > self.hi {
            self.hi_jet[1] + self.hi_jet[2] * (rho - self.hi)
        } else {
            self.model.d_psi_m_unchecked(rho) - self.bit.slope
        }
    }

    pub fn second(&self, rho: f64) -> f64 {
        if rho < self.lo {
            self.lo_jet[2]
        } else if rho > self.hi {
            self.hi_jet[2]
        } else {
            self.model.d2_psi_m_unchecked(rho)
        }
    }

    pub fn anchor(&self, well: Well) -> f64 {
        match well {
            Well::Vapor => self.bit.rho_g,
            Well::Liquid => self.bit.rho_l,
        }
    }

    /// `W(anchor + y)` computed as `y² ∫₀¹ (1−t) W''(anchor + t y) dt`.
    ///
    /// Keeps full relative precision for tiny offsets, where the direct
    /// difference `Ψ^m − ℓ` would be pure cancellation noise.
    pub fn value_near(&self, well: Well, y: f64) -> f64 {
        let a = self.anchor(well);
        y * y * gl8().integrate(0.0, 1.0, |t| (1.0 - t) * self.second(a + t * y))
    }

    /// `W'(anchor + y)` computed as `y ∫₀¹ W''(anchor + t y) dt`.
    pub fn slope_near(&self, well: Well, y: f64) -> f64 {
        let a = self.anchor(well);
        y * gl8().integrate(0.0, 1.0, |t| self.second(a + t * y))
    }

    /// Interfacial constant `σ = ∫_{ρ_g}^{ρ_l} √(2W) dρ`.
    pub fn sigma(&self) -> f64 {
        quadrature::adaptive(
            |rho| (2.0 * self.value(rho).max(0.0)).sqrt(),
            self.bit.rho_g,
            self.bit.rho_l,
            1e-12,
        )
    }

    /// Primitive `G(ρ) = ∫_{ρ_g}^{ρ} √(2W)`.
    pub fn primitive(&self, rho: f64) -> f64 {
        let g = self.bit.rho_g;
        if rho == g {
            return 0.0;
        }
        quadrature::adaptive(|s| (2.0 * self.value(s).max(0.0)).sqrt(), g, rho, 1e-13)
    }
}

/// Free-function form of [`DoubleWell::value`].
pub fn double_well(model: &EnergyModel, bit: &Bitangent, rho: f64) -> f64 {
    DoubleWell::with_bitangent(model, *bit).value(rho)
}

/// Free-function form of [`DoubleWell::sigma`].
pub fn sigma(model: &EnergyModel, bit: &Bitangent) -> f64 {
    DoubleWell::with_bitangent(model, *bit).sigma()
}
