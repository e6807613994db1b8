//! Complete elliptic integral `K`, Jacobi `sn` and the cnoidal wave that is
//! an exact stationary solution of the Euler–Korteweg system with the
//! quartic energy.
//!
//! Near `k = 1` the modulus itself carries no information in double
//! precision (for `ε = 1e-5` the complementary modulus is about `3e-12`, so
//! `k` rounds to one). Everything here is therefore parameterised by the
//! pair `(k, k')` with `k' = √(1 − k²)` kept as the primary quantity.

use std::f64::consts::PI;

use crate::error::{NskError, Result};

const AGM_MAX_ITER: usize = 64;

/// Below this complementary modulus `sn` is replaced by `tanh`; the
/// difference is `O(k'²)`, i.e. under `2e-12`.
const TANH_KP: f64 = 1.4e-6;

fn complementary(k: f64) -> f64 {
    ((1.0 - k) * (1.0 + k)).max(0.0).sqrt()
}

/// `K(k)` by the arithmetic–geometric mean.
pub fn elliptic_k(k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&k) {
        return Err(NskError::InvalidModulus(k));
    }
    elliptic_k_comp(complementary(k))
}

/// `K` as a function of the complementary modulus `k' ∈ (0, 1]`.
pub fn elliptic_k_comp(kp: f64) -> Result<f64> {
    if !(kp > 0.0 && kp <= 1.0) {
        return Err(NskError::InvalidModulus(complementary(kp)));
    }
    let (mut a, mut b) = (1.0f64, kp);
    for _ in 0..AGM_MAX_ITER {
        if (a - b).abs() <= 4.0 * f64::EPSILON * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    Ok(PI / (2.0 * a))
}

/// `(sn, cn, dn)` at `(u, k)`.
pub fn jacobi_sncndn(u: f64, k: f64) -> Result<(f64, f64, f64)> {
    if !(0.0..=1.0).contains(&k) || k.is_nan() {
        return Err(NskError::InvalidModulus(k));
    }
    Ok(sncndn_comp(u, k, complementary(k)))
}

/// Jacobi `sn(u, k)`.
pub fn jacobi_sn(u: f64, k: f64) -> Result<f64> {
    jacobi_sncndn(u, k).map(|t| t.0)
}

/// `(sn, cn, dn)` with the complementary modulus supplied by the caller.
pub fn sncndn_comp(u: f64, k: f64, kp: f64) -> (f64, f64, f64) {
    if k == 0.0 {
        return (u.sin(), u.cos(), 1.0);
    }
    if kp < TANH_KP {
        return sncndn_tanh(u, kp);
    }
    let quarter = elliptic_k_comp(kp).expect("kp in (0, 1]");
    // Reduce into (−2K, 2K]; the recurrence is accurate on any argument but
    // a bounded phase keeps the doubled angles well scaled.
    let period = 4.0 * quarter;
    let ur = u - period * (u / period).round();
    landen(ur, k, kp)
}

fn sncndn_tanh(u: f64, kp: f64) -> (f64, f64, f64) {
    // The period is finite even here, so fold into [−K, K] first.
    let quarter = if kp > 0.0 {
        elliptic_k_comp(kp).unwrap_or(f64::INFINITY)
    } else {
        f64::INFINITY
    };
    let mut ur = u;
    let mut cn_sign = 1.0;
    if quarter.is_finite() {
        let period = 4.0 * quarter;
        ur = u - period * (u / period).round();
        if ur > quarter {
            ur = 2.0 * quarter - ur;
            cn_sign = -1.0;
        } else if ur < -quarter {
            ur = -2.0 * quarter - ur;
            cn_sign = -1.0;
        }
    }
    let sech = 1.0 / ur.cosh();
    (ur.tanh(), cn_sign * sech, sech)
}

/// Descending Landen transformation (the AGM scale recurrence for the
/// amplitude).
fn landen(u: f64, k: f64, kp: f64) -> (f64, f64, f64) {
    let mut a = [0.0f64; AGM_MAX_ITER + 1];
    let mut c = [0.0f64; AGM_MAX_ITER + 1];
    a[0] = 1.0;
    c[0] = k;
    let mut b = kp;
    let mut n = 0;
    while n < AGM_MAX_ITER && c[n].abs() > f64::EPSILON * a[n] {
        a[n + 1] = 0.5 * (a[n] + b);
        c[n + 1] = 0.5 * (a[n] - b);
        b = (a[n] * b).sqrt();
        n += 1;
    }
    let mut phi = (1u64 << n) as f64 * a[n] * u;
    let mut prev = phi;
    while n > 0 {
        prev = phi;
        phi = 0.5 * (phi + (c[n] / a[n] * phi.sin()).asin());
        n -= 1;
    }
    let sn = phi.sin();
    let cn = phi.cos();
    let dn = if prev == phi {
        1.0
    } else {
        cn / (prev - phi).cos()
    };
    (sn, cn, dn)
}

/// Upper bound of the admissible `ε`, the `k → 0` limit `1/(16π²)`.
pub fn eps_upper() -> f64 {
    1.0 / (16.0 * PI * PI)
}

/// Parameters of the period-one cnoidal wave.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnoidalParams {
    pub k: f64,
    /// Complementary modulus `√(1 − k²)`.
    pub kp: f64,
    pub eps: f64,
    /// `K(k)`.
    pub quarter: f64,
    pub amplitude: f64,
    /// `4K(k)`, so the profile has period one.
    pub wavenumber: f64,
}

impl CnoidalParams {
    /// `64 (1 + k²) K² ε − 1`.
    pub fn residual(&self) -> f64 {
        64.0 * (1.0 + self.k * self.k) * self.quarter * self.quarter * self.eps - 1.0
    }
}

fn relation(eps: f64, kp: f64) -> (f64, f64, f64) {
    let k = (1.0 - kp * kp).sqrt();
    let kk = elliptic_k_comp(kp).expect("kp in (0, 1]");
    (64.0 * (1.0 + k * k) * kk * kk * eps - 1.0, k, kk)
}

/// Solves `ε · 64 (1 + k²) K(k)² = 1` for the modulus.
pub fn k_from_eps(eps: f64) -> Result<CnoidalParams> {
    let upper = eps_upper();
    let bad = || NskError::InadmissibleEps { eps, upper };
    if !(eps > 0.0 && eps < upper) {
        return Err(bad());
    }
    // Bisect in t = ln k'; the relation is monotone and nearly linear there.
    let mut lo = -700.0f64; // k' tiny, residual > 0
    let mut hi = 0.0f64; // k' = 1, residual < 0
    if relation(eps, lo.exp()).0 <= 0.0 {
        return Err(bad());
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if relation(eps, mid.exp()).0 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Newton polish with a difference quotient; keeps the better iterate.
    let mut t = 0.5 * (lo + hi);
    let mut best = relation(eps, t.exp()).0;
    for _ in 0..4 {
        let dt = 1e-7 * t.abs().max(1.0);
        let slope = (relation(eps, (t + dt).exp()).0 - relation(eps, (t - dt).exp()).0) / (2.0 * dt);
        if slope == 0.0 || !slope.is_finite() {
            break;
        }
        let tn = t - best / slope;
        let rn = relation(eps, tn.exp()).0;
        if rn.abs() < best.abs() {
            t = tn;
            best = rn;
        } else {
            break;
        }
    }
    let kp = t.exp();
    if kp >= 1.0 {
        return Err(bad());
    }
    let (_, k, kk) = relation(eps, kp);
    Ok(CnoidalParams {
        k,
        kp,
        eps,
        quarter: kk,
        amplitude: 0.5 * (2.0 * k * k / (1.0 + k * k)).sqrt(),
        wavenumber: 4.0 * kk,
    })
}

/// Phase of `x` within one period, as the `sn` argument.
fn phase(p: &CnoidalParams, x: f64) -> f64 {
    p.wavenumber * (x - x.floor())
}

/// `ρ̃(x) = 3/2 + A sn(4K x, k)`, period one.
pub fn cnoidal_profile(p: &CnoidalParams, x: f64) -> f64 {
    1.5 + p.amplitude * sncndn_comp(phase(p, x), p.k, p.kp).0
}

/// `ρ̃'(x)`.
pub fn cnoidal_slope(p: &CnoidalParams, x: f64) -> f64 {
    let (_, cn, dn) = sncndn_comp(phase(p, x), p.k, p.kp);
    p.amplitude * p.wavenumber * cn * dn
}

/// `ρ̃''(x)` from `sn'' = −(1 + k²) sn + 2k² sn³`.
pub fn cnoidal_second(p: &CnoidalParams, x: f64) -> f64 {
    let sn = sncndn_comp(phase(p, x), p.k, p.kp).0;
    let k2 = p.k * p.k;
    p.amplitude * p.wavenumber * p.wavenumber * (-(1.0 + k2) * sn + 2.0 * k2 * sn * sn * sn)
}

/// The profile with the argument `4K x / π` as printed in some sources.
/// Its period is `π`, not one; kept only for comparison.
pub fn cnoidal_profile_printed(p: &CnoidalParams, x: f64) -> f64 {
    1.5 + p.amplitude * sncndn_comp(p.wavenumber * x / PI, p.k, p.kp).0
}

/// Exact Euler–Korteweg solution `(ρ̃(x − ū t), ū)`.
pub fn exact_solution(p: &CnoidalParams, ubar: f64, x: f64, t: f64) -> (f64, f64) {
    (cnoidal_profile(p, x - ubar * t), ubar)
}

/// Density slope of [`exact_solution`].
pub fn exact_solution_slope(p: &CnoidalParams, ubar: f64, x: f64, t: f64) -> f64 {
    cnoidal_slope(p, x - ubar * t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{AvailableEnergy, Quartic};
    use crate::quadrature::adaptive;
    use std::f64::consts::FRAC_PI_2;

    fn k_quadrature(k: f64) -> f64 {
        adaptive(
            |th: f64| 1.0 / (1.0 - k * k * th.sin().powi(2)).sqrt(),
            0.0,
            FRAC_PI_2,
            1e-15,
        )
    }

    #[test]
    fn k_examples() {
        assert!((elliptic_k(0.0).unwrap() - FRAC_PI_2).abs() <= 1e-15);
        assert!((elliptic_k(0.5).unwrap() - k_quadrature(0.5)).abs() <= 1e-12);
        let k: f64 = 0.999999;
        let ratio = elliptic_k(k).unwrap() / (4.0 / (1.0 - k * k).sqrt()).ln();
        assert!((0.99..=1.01).contains(&ratio), "{ratio}");
        assert!(elliptic_k(1.0).is_err());
        assert!(elliptic_k(-0.1).is_err());
    }

    #[test]
    fn k_is_increasing() {
        let mut prev = 0.0;
        for i in 0..1000 {
            let kv = elliptic_k(i as f64 / 1000.0).unwrap();
            assert!(kv > prev);
            prev = kv;
        }
    }

    #[test]
    fn sn_degenerate_moduli() {
        for i in 0..100 {
            let u = -10.0 + 20.0 * i as f64 / 99.0;
            assert!((jacobi_sn(u, 0.0).unwrap() - u.sin()).abs() < 1e-14);
        }
        for i in 0..20 {
            let u = -5.0 + 10.0 * i as f64 / 19.0;
            assert!((jacobi_sn(u, 1.0).unwrap() - u.tanh()).abs() < 1e-14);
        }
        for k in [0.0, 0.3, 0.9, 1.0] {
            assert_eq!(jacobi_sn(0.0, k).unwrap(), 0.0);
        }
    }

    #[test]
    fn sn_quarter_period() {
        for k in [0.3, 0.7, 0.95] {
            let kk = elliptic_k(k).unwrap();
            assert!((jacobi_sn(kk, k).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sn_against_amplitude_quadrature() {
        // sn(F(φ), k) = sin φ with F the incomplete integral of the first kind.
        for &k in &[0.1, 0.5, 0.8, 0.99] {
            for i in 0..25 {
                let phi = -3.0 + 6.0 * i as f64 / 24.0;
                let u = adaptive(
                    |th: f64| 1.0 / (1.0 - k * k * th.sin().powi(2)).sqrt(),
                    0.0,
                    phi,
                    1e-15,
                );
                let (sn, cn, dn) = jacobi_sncndn(u, k).unwrap();
                assert!((sn - phi.sin()).abs() < 1e-12, "k={k} phi={phi}");
                assert!((cn - phi.cos()).abs() < 1e-12);
                assert!((dn - (1.0 - k * k * phi.sin().powi(2)).sqrt()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sn_tanh_branch_is_periodic() {
        let kp: f64 = 1e-9;
        let k = (1.0 - kp * kp).sqrt();
        let kk = elliptic_k_comp(kp).unwrap();
        for &u in &[0.3, 2.0, 7.5] {
            let a = sncndn_comp(u, k, kp).0;
            let b = sncndn_comp(u + 4.0 * kk, k, kp).0;
            let c = sncndn_comp(2.0 * kk - u, k, kp).0;
            assert!((a - b).abs() < 1e-12 && (a - c).abs() < 1e-12);
        }
    }

    #[test]
    fn landen_and_tanh_agree_at_the_switch() {
        let kp = 2.0 * TANH_KP;
        let k = (1.0 - kp * kp).sqrt();
        let kk = elliptic_k_comp(kp).unwrap();
        for i in 0..50 {
            let u = kk * i as f64 / 49.0;
            let a = landen(u, k, kp).0;
            let b = sncndn_tanh(u, kp).0;
            assert!((a - b).abs() < 1e-10, "u={u}: {a} {b}");
        }
    }

    #[test]
    fn k_from_eps_round_trip() {
        for eps in [1e-3, 1e-4, 1e-5] {
            let p = k_from_eps(eps).unwrap();
            assert!(p.residual().abs() <= 1e-12, "eps={eps}: {}", p.residual());
            // At eps = 1e-5 the modulus rounds to one and A to exactly 1/2.
            assert!(p.amplitude > 0.0 && p.amplitude <= 0.5);
        }
        let p4 = k_from_eps(1e-4).unwrap();
        assert!((p4.quarter * (1.0 + p4.k * p4.k).sqrt() - 12.5).abs() < 1e-10);
        let p5 = k_from_eps(1e-5).unwrap();
        assert!(p5.kp < p4.kp);
        assert!(k_from_eps(eps_upper()).is_err());
        assert!(k_from_eps(0.01).is_err());
        assert!(k_from_eps(0.0).is_err());
    }

    #[test]
    fn profile_examples() {
        let p = k_from_eps(1e-4).unwrap();
        assert_eq!(cnoidal_profile(&p, 0.0), 1.5);
        assert!((cnoidal_profile(&p, 0.25) - 1.5 - p.amplitude).abs() < 1e-12);
        let n = 4000;
        let mean: f64 = (0..n).map(|i| cnoidal_profile(&p, i as f64 / n as f64)).sum::<f64>() / n as f64;
        assert!((mean - 1.5).abs() < 1e-12);
    }

    #[test]
    fn profile_solves_the_stationary_equation() {
        let q = Quartic::default();
        for eps in [1e-3, 1e-4, 1e-5] {
            let p = k_from_eps(eps).unwrap();
            let mut worst: f64 = 0.0;
            for i in 0..10_000 {
                let x = i as f64 / 10_000.0;
                let r = eps * cnoidal_second(&p, x) - q.dpsi(cnoidal_profile(&p, x));
                worst = worst.max(r.abs());
            }
            assert!(worst <= 1e-8, "eps={eps}: {worst}");
        }
    }

    #[test]
    fn printed_argument_fails_the_residual() {
        let q = Quartic::default();
        let p = k_from_eps(1e-4).unwrap();
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for i in 1..200 {
            let x = i as f64 / 200.0;
            let f = |y| cnoidal_profile_printed(&p, y);
            let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
            worst = worst.max((1e-4 * d2 - q.dpsi(f(x))).abs());
        }
        assert!(worst > 1e-3);
    }

    #[test]
    fn slope_matches_difference_quotient() {
        let p = k_from_eps(1e-3).unwrap();
        let h = 1e-6;
        for i in 0..50 {
            let x = i as f64 / 50.0 + 0.003;
            let fd = (cnoidal_profile(&p, x + h) - cnoidal_profile(&p, x - h)) / (2.0 * h);
            assert!((fd - cnoidal_slope(&p, x)).abs() < 1e-6);
        }
    }

    #[test]
    fn exact_solution_examples() {
        let p = k_from_eps(1e-4).unwrap();
        for i in 0..20 {
            let x = i as f64 / 20.0;
            assert_eq!(exact_solution(&p, 2.0, x, 0.0).0, cnoidal_profile(&p, x));
            let a = exact_solution(&p, 2.0, x, 0.5).0;
            assert!((a - cnoidal_profile(&p, x)).abs() < 1e-12);
        }
        let (rho, u) = exact_solution(&p, 2.0, 0.0, 0.25);
        assert!((rho - 1.5).abs() < 1e-12);
        assert_eq!(u, 2.0);
    }
}
