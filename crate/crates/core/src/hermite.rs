//! Periodic grids, nodal Hermite fields (values plus first derivatives),
//! cubic Hermite interpolation and the compact difference stencils for the
//! second, third and fourth derivative.

use crate::quadrature::GaussLegendre;

/// Uniform grid of `nx` cells on the unit torus; node `j` sits at `j / nx`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeriodicGrid {
    pub nx: usize,
}

impl PeriodicGrid {
    pub fn new(nx: usize) -> Self {
        assert!(nx >= 1, "grid needs at least one cell");
        PeriodicGrid { nx }
    }

    #[inline]
    pub fn h(&self) -> f64 {
        1.0 / self.nx as f64
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        j as f64 / self.nx as f64
    }

    #[inline]
    pub fn wrap(&self, j: isize) -> usize {
        j.rem_euclid(self.nx as isize) as usize
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.nx).map(|j| self.x(j)).collect()
    }

    /// Cell index and local coordinate `t ∈ [0, 1)` of a point on the torus.
    #[inline]
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let xr = x - x.floor();
        let s = xr * self.nx as f64;
        let mut j = s.floor();
        let mut t = s - j;
        if j >= self.nx as f64 {
            j = 0.0;
            t = 0.0;
        }
        (j as usize, t)
    }
}

/// Cubic Hermite basis values `(H00, H01, H10, H11)` at `t`.
#[inline]
pub fn basis(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        2.0 * t3 - 3.0 * t2 + 1.0,
        -2.0 * t3 + 3.0 * t2,
        t3 - 2.0 * t2 + t,
        t3 - t2,
    ]
}

/// First derivatives of the basis with respect to `t`.
#[inline]
pub fn basis_d1(t: f64) -> [f64; 4] {
    let t2 = t * t;
    [
        6.0 * t2 - 6.0 * t,
        -6.0 * t2 + 6.0 * t,
        3.0 * t2 - 4.0 * t + 1.0,
        3.0 * t2 - 2.0 * t,
    ]
}

/// Second derivatives of the basis with respect to `t`.
#[inline]
pub fn basis_d2(t: f64) -> [f64; 4] {
    [
        12.0 * t - 6.0,
        -12.0 * t + 6.0,
        6.0 * t - 4.0,
        6.0 * t - 2.0,
    ]
}

/// A periodic piecewise-cubic `C¹` function stored by its nodal values and
/// nodal derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteField {
    pub grid: PeriodicGrid,
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
}

impl HermiteField {
    pub fn new(grid: PeriodicGrid, values: Vec<f64>, derivs: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.nx);
        assert_eq!(derivs.len(), grid.nx);
        HermiteField {
            grid,
            values,
            derivs,
        }
    }

    pub fn constant(grid: PeriodicGrid, c: f64) -> Self {
        HermiteField::new(grid, vec![c; grid.nx], vec![0.0; grid.nx])
    }

    /// Nodal projection: `values[j] = f(x_j)`, `derivs[j] = df(x_j)`.
    pub fn sample<F, D>(grid: PeriodicGrid, f: F, df: D) -> Self
    where
        F: Fn(f64) -> f64,
        D: Fn(f64) -> f64,
    {
        let values = (0..grid.nx).map(|j| f(grid.x(j))).collect();
        let derivs = (0..grid.nx).map(|j| df(grid.x(j))).collect();
        HermiteField::new(grid, values, derivs)
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.grid.nx
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.grid.h()
    }

    /// Hermite data of cell `j`: `(v_j, v_{j+1}, h v_{x,j}, h v_{x,j+1})`.
    #[inline]
    fn cell(&self, j: usize) -> [f64; 4] {
        let n = self.grid.nx;
        let j1 = if j + 1 == n { 0 } else { j + 1 };
        let h = self.h();
        [
            self.values[j],
            self.values[j1],
            h * self.derivs[j],
            h * self.derivs[j1],
        ]
    }

    /// Value and first and second derivative at local coordinate `t` of cell `j`.
    #[inline]
    pub fn eval_cell(&self, j: usize, t: f64) -> (f64, f64, f64) {
        let c = self.cell(j);
        let (b, b1, b2) = (basis(t), basis_d1(t), basis_d2(t));
        let h = self.h();
        let dot = |w: &[f64; 4]| c[0] * w[0] + c[1] * w[1] + c[2] * w[2] + c[3] * w[3];
        (dot(&b), dot(&b1) / h, dot(&b2) / (h * h))
    }

    /// Interpolated value and derivative at `x` (wrapped onto the torus).
    #[inline]
    pub fn interp(&self, x: f64) -> (f64, f64) {
        let (j, t) = self.grid.locate(x);
        let c = self.cell(j);
        let (b, b1) = (basis(t), basis_d1(t));
        let v = c[0] * b[0] + c[1] * b[1] + c[2] * b[2] + c[3] * b[3];
        let d = c[0] * b1[0] + c[1] * b1[1] + c[2] * b1[2] + c[3] * b1[3];
        (v, d / self.h())
    }

    /// Value, first and second derivative at `x`.
    pub fn interp2(&self, x: f64) -> (f64, f64, f64) {
        let (j, t) = self.grid.locate(x);
        self.eval_cell(j, t)
    }

    /// `∫₀¹ v dx`. For a Hermite cubic the derivative terms telescope,
    /// leaving `h Σ v_j`.
    pub fn integral(&self) -> f64 {
        self.h() * self.values.iter().sum::<f64>()
    }

    /// `∫₀¹ g(x, v, v_x) dx` by a Gauss rule on every cell.
    pub fn integrate_with<G>(&self, rule: &GaussLegendre, mut g: G) -> f64
    where
        G: FnMut(f64, f64, f64) -> f64,
    {
        let h = self.h();
        let mut acc = 0.0;
        for j in 0..self.nx() {
            let x0 = self.grid.x(j);
            let mut cell = 0.0;
            for (t, w) in rule.nodes.iter().zip(&rule.weights) {
                let (v, d, _) = self.eval_cell(j, *t);
                cell += w * g(x0 + h * t, v, d);
            }
            acc += cell * h;
        }
        acc
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().chain(&self.derivs).all(|v| v.is_finite())
    }

    /// Neighbourhood `(v_{j-2..=j+2}, v_{x,j-2..=j+2})`.
    #[inline]
    fn stencil_data(&self, j: usize) -> ([f64; 5], [f64; 5]) {
        let mut v = [0.0; 5];
        let mut d = [0.0; 5];
        for (k, off) in (-2isize..=2).enumerate() {
            let i = self.grid.wrap(j as isize + off);
            v[k] = self.values[i];
            d[k] = self.derivs[i];
        }
        (v, d)
    }

    pub fn d2(&self, j: usize) -> f64 {
        let (v, d) = self.stencil_data(j);
        Stencil::D2.apply(&v, &d, self.h())
    }

    pub fn d3(&self, j: usize) -> f64 {
        let (v, d) = self.stencil_data(j);
        Stencil::D3.apply(&v, &d, self.h())
    }

    pub fn d4(&self, j: usize) -> f64 {
        let (v, d) = self.stencil_data(j);
        Stencil::D4.apply(&v, &d, self.h())
    }

    /// Applies `stencil` at every node.
    pub fn apply_all(&self, stencil: Stencil) -> Vec<f64> {
        let h = self.h();
        (0..self.nx())
            .map(|j| {
                let (v, d) = self.stencil_data(j);
                stencil.apply(&v, &d, h)
            })
            .collect()
    }
}

/// The compact Hermite difference stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    D2,
    D3,
    /// Fourth derivative with coefficients re-solved for polynomial exactness.
    D4,
    /// Fourth derivative with the coefficients as printed; not consistent.
    D4Printed,
}

impl Stencil {
    pub fn order(&self) -> usize {
        match self {
            Stencil::D2 => 2,
            Stencil::D3 => 3,
            Stencil::D4 | Stencil::D4Printed => 4,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Stencil::D2 => "D2",
            Stencil::D3 => "D3",
            Stencil::D4 => "D4",
            Stencil::D4Printed => "D4-printed",
        }
    }

    /// Evaluates the stencil on values `v` and derivatives `d` at offsets
    /// `-2..=2` (index 2 is the centre).
    #[inline]
    pub fn apply(&self, v: &[f64; 5], d: &[f64; 5], h: f64) -> f64 {
        match self {
            Stencil::D2 => {
                let s1 = 0.5 * (v[3] + v[1]) - v[2];
                let s2 = 0.5 * (v[4] + v[0]) - v[2];
                (128.0 / 27.0 * s1 + 7.0 / 27.0 * s2
                    - 8.0 * h / 9.0 * (d[3] - d[1])
                    - h / 36.0 * (d[4] - d[0]))
                    / (h * h)
            }
            Stencil::D3 => {
                let a1 = 0.5 * (v[3] - v[1]) - h * d[2];
                let a2 = 0.5 * (v[4] - v[0]) - 2.0 * h * d[2];
                let b1 = 0.5 * (d[3] + d[1]) - d[2];
                let b2 = 0.5 * (d[4] + d[0]) - d[2];
                (176.0 / 9.0 * a1 + 31.0 / 72.0 * a2 - 16.0 * h / 3.0 * b1 - h / 12.0 * b2)
                    / (h * h * h)
            }
            Stencil::D4 => {
                let s1 = 0.5 * (v[3] + v[1]) - v[2];
                let s2 = 0.5 * (v[4] + v[0]) - v[2];
                (-128.0 / 3.0 * s1 - 41.0 / 6.0 * s2
                    + 16.0 * h * (d[3] - d[1])
                    + 0.75 * h * (d[4] - d[0]))
                    / (h * h * h * h)
            }
            Stencil::D4Printed => {
                let s1 = 0.5 * (v[3] + v[1]) - h * v[2];
                let s2 = 0.5 * (v[4] + v[0]) - 2.0 * h * v[2];
                (-128.0 / 3.0 * s1 - 41.0 / 3.0 * s2
                    + 16.0 * h * (d[3] - d[1])
                    + 0.75 * h * (d[4] - d[0]))
                    / (h * h * h * h)
            }
        }
    }
}

/// Result of probing a stencil on monomials.
#[derive(Debug, Clone, PartialEq)]
pub struct GateReport {
    pub stencil: Stencil,
    /// Relative error for each degree `0..=max_degree`.
    pub errors: Vec<f64>,
    /// Highest degree `p` such that all degrees `≤ p` pass; `None` if even
    /// constants fail.
    pub certified: Option<usize>,
}

impl GateReport {
    pub fn passes(&self, degree: usize) -> bool {
        self.certified.is_some_and(|c| c >= degree)
    }
}

/// Relative-error threshold of the exactness gate.
pub const GATE_TOL: f64 = 1e-10;

/// Applies `stencil` to exact Hermite samples of `x^p` on a window centred
/// at `x = 1` with `h = 1/2`, for `p = 0..=max_degree`.
pub fn exactness_gate(stencil: Stencil, max_degree: usize) -> GateReport {
    let xc = 1.0;
    let h = 0.5;
    let q = stencil.order();
    let mut errors = Vec::with_capacity(max_degree + 1);
    let mut certified = None;
    let mut ok = true;
    for p in 0..=max_degree {
        let mut v = [0.0; 5];
        let mut d = [0.0; 5];
        for (k, off) in (-2i32..=2).enumerate() {
            let x: f64 = xc + off as f64 * h;
            v[k] = x.powi(p as i32);
            d[k] = if p == 0 { 0.0 } else { p as f64 * x.powi(p as i32 - 1) };
        }
        let exact = if p < q {
            0.0
        } else {
            let falling: f64 = (0..q).map(|i| (p - i) as f64).product();
            falling * xc.powi((p - q) as i32)
        };
        let got = stencil.apply(&v, &d, h);
        let err = (got - exact).abs() / exact.abs().max(1.0);
        errors.push(err);
        if ok && err <= GATE_TOL {
            certified = Some(p);
        } else {
            ok = false;
        }
    }
    GateReport {
        stencil,
        errors,
        certified,
    }
}
