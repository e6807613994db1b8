//! Gauss–Legendre rules and a globally adaptive integrator.
//!
//! Rules are mapped to the unit interval `[0, 1]` so callers can rescale
//! without worrying about the reference cell.

use std::collections::BinaryHeap;
use std::sync::OnceLock;

/// A Gauss–Legendre rule on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `n`-point rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // map [-1, 1] -> [0, 1]
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Integrates `f` over `[a, b]` with this rule.
    #[inline]
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let len = b - a;
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(a + len * x);
        }
        acc * len
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Shared 3-point rule (exact through degree 5).
pub fn gl3() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    R.get_or_init(|| GaussLegendre::new(3))
}

/// Shared 5-point rule.
pub fn gl5() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    R.get_or_init(|| GaussLegendre::new(5))
}

/// Shared 8-point rule.
pub fn gl8() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    R.get_or_init(|| GaussLegendre::new(8))
}

/// Shared 10-point rule used by the adaptive driver.
pub fn gl10() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    R.get_or_init(|| GaussLegendre::new(10))
}

/// Most panels [`adaptive`] will create.
const MAX_PANELS: usize = 20_000;

/// Globally adaptive composite Gauss–Legendre: the panel with the largest
/// error estimate (10-point rule on the panel against the sum over its
/// halves) is split until the estimates sum to at most `tol`, or the
/// panel budget is spent. Panels that agree to roundoff count as exact.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if b < a {
        return -adaptive(f, b, a, tol);
    }
    let rule = gl10();
    let mut heap = BinaryHeap::new();
    let root = Panel::new(&mut f, rule, a, b);
    let mut err = root.err;
    heap.push(root);
    while err > tol && heap.len() < MAX_PANELS {
        let p = match heap.pop() {
            Some(p) if p.err > 0.0 => p,
            Some(p) => {
                heap.push(p);
                break;
            }
            None => break,
        };
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            heap.push(Panel { err: 0.0, ..p });
            err -= p.err;
            continue;
        }
        let l = Panel::new(&mut f, rule, p.a, m);
        let r = Panel::new(&mut f, rule, m, p.b);
        err += l.err + r.err - p.err;
        heap.push(l);
        heap.push(r);
    }
    let mut panels = heap.into_vec();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    panels.iter().map(|p| p.value).sum()
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl Panel {
    fn new<F: FnMut(f64) -> f64>(f: &mut F, rule: &GaussLegendre, a: f64, b: f64) -> Panel {
        let m = 0.5 * (a + b);
        let whole = rule.integrate(a, b, &mut *f);
        let left = rule.integrate(a, m, &mut *f);
        let right = rule.integrate(m, b, &mut *f);
        let value = left + right;
        let err = (value - whole).abs();
        let floor = 8.0 * f64::EPSILON * (left.abs() + right.abs());
        Panel {
            a,
            b,
            value,
            err: if err <= floor { 0.0 } else { err },
        }
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err).is_eq()
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_integrate_polynomials_exactly() {
        for n in 1..=12 {
            let rule = GaussLegendre::new(n);
            for p in 0..(2 * n) {
                let got = rule.integrate(0.0, 1.0, |x| x.powi(p as i32));
                let want = 1.0 / (p as f64 + 1.0);
                assert!((got - want).abs() < 1e-14, "n={n} p={p}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn adaptive_handles_sqrt_endpoint() {
        let got = adaptive(|x| x.sqrt(), 0.0, 1.0, 1e-13);
        assert!((got - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn adaptive_reversed_interval() {
        let got = adaptive(|x| x.cos(), 0.0, -3.0, 1e-14);
        assert!((got - (-3.0f64).sin()).abs() < 1e-13);
    }

    #[test]
    fn adaptive_handles_sharp_peak() {
        let w = 1e-6_f64;
        let got = adaptive(|x| 1.0 / (w * w + x * x).sqrt(), 0.0, 1.0, 1e-12);
        let want = (1.0 / w).asinh();
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn tolerance_below_roundoff_terminates() {
        let k = 0.999_f64;
        let f = |t: f64| 1.0 / (1.0 - k * k * t.sin().powi(2)).sqrt();
        let mut calls = 0usize;
        let got = adaptive(
            |t| {
                calls += 1;
                f(t)
            },
            0.0,
            3.0,
            1e-18,
        );
        let rule = GaussLegendre::new(10);
        let want: f64 = (0..3000).map(|i| rule.integrate(i as f64 * 1e-3, (i + 1) as f64 * 1e-3, f)).sum();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        assert!(calls <= 30 * (2 * MAX_PANELS + 1), "{calls}");
    }
}
