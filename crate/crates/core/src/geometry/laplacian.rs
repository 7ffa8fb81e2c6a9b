//! Finite-difference Laplace–Beltrami operator (nonnegative sign convention)
//! on polar tensor grids over the collar.

use crate::error::{Error, Result};
use crate::geometry::metric::{ConicMetric, FdOrder};

/// Uniform tensor grid `x_i = x0 + i·dx`, `θ_j = j·period/ntheta`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    pub x0: f64,
    pub dx: f64,
    pub nx: usize,
    pub ntheta: usize,
    pub period: f64,
}

impl PolarGrid {
    pub fn new(x0: f64, x1: f64, nx: usize, ntheta: usize, period: f64) -> Result<Self> {
        if nx < 2 || !(x1 > x0) || !(period > 0.0) || ntheta == 0 {
            return Err(Error::Config("invalid polar grid".into()));
        }
        Ok(Self { x0, dx: (x1 - x0) / (nx - 1) as f64, nx, ntheta, period })
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn dtheta(&self) -> f64 {
        self.period / self.ntheta as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.dtheta()
    }

    pub fn len(&self) -> usize {
        self.nx * self.ntheta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.nx {
            for j in 0..self.ntheta {
                out.push(f(self.x(i), self.theta(j)));
            }
        }
        out
    }

    /// The grid with `k` rows removed from each radial end.
    pub fn trimmed(&self, k: usize) -> Self {
        Self { x0: self.x(k), nx: self.nx - 2 * k, ..self.clone() }
    }
}

#[derive(Debug, Clone)]
pub struct PolarField {
    pub grid: PolarGrid,
    pub values: Vec<f64>,
}

fn half_width(order: FdOrder) -> usize {
    match order {
        FdOrder::Second => 1,
        FdOrder::Fourth => 2,
    }
}

fn d1(order: FdOrder, f: impl Fn(isize) -> f64, h: f64) -> f64 {
    match order {
        FdOrder::Second => (f(1) - f(-1)) / (2.0 * h),
        FdOrder::Fourth => (8.0 * (f(1) - f(-1)) - (f(2) - f(-2))) / (12.0 * h),
    }
}

fn d2(order: FdOrder, f: impl Fn(isize) -> f64, h: f64) -> f64 {
    match order {
        FdOrder::Second => (f(1) - 2.0 * f(0) + f(-1)) / (h * h),
        FdOrder::Fourth => {
            (16.0 * (f(1) + f(-1)) - (f(2) + f(-2)) - 30.0 * f(0)) / (12.0 * h * h)
        }
    }
}

/// Applies `Δ = −∂²_x − ((n−1)/x + e)∂_x + Δ_h/x²`, `e = ½∂_x log det h`,
/// with `Δ_h u = −h^{-1/2}∂_θ(h^{-1/2}∂_θ u)`.
///
/// The result lives on the grid trimmed by the stencil half-width in `x`.
pub fn laplacian_apply(metric: &ConicMetric, field: &[f64], grid: &PolarGrid) -> Result<PolarField> {
    let order = metric.fd_order;
    let k = half_width(order);
    if grid.nx < 2 * k + 1 || grid.ntheta < 2 * k + 1 {
        return Err(Error::Config(format!(
            "grid {}x{} too coarse for an order-{} stencil",
            grid.nx,
            grid.ntheta,
            order.as_int()
        )));
    }
    if field.len() != grid.len() {
        return Err(Error::Config(format!("field has {} samples, grid has {}", field.len(), grid.len())));
    }
    if !(grid.x0 > 0.0) {
        return Err(Error::Domain("laplacian grid must stay away from the tip".into()));
    }
    if (grid.period - metric.period()).abs() > 1e-12 * metric.period() {
        return Err(Error::Config("grid period differs from the cross-section period".into()));
    }
    let nt = grid.ntheta as isize;
    let u = |i: usize, j: isize| field[i * grid.ntheta + j.rem_euclid(nt) as usize];
    let out_grid = grid.trimmed(k);
    let n1 = (metric.n - 1) as f64;
    let (dx, dt) = (grid.dx, grid.dtheta());
    let mut values = Vec::with_capacity(out_grid.len());
    for i in k..grid.nx - k {
        let x = grid.x(i);
        for j in 0..grid.ntheta {
            let th = grid.theta(j);
            let ji = j as isize;
            let ux = d1(order, |o| u((i as isize + o) as usize, ji), dx);
            let uxx = d2(order, |o| u((i as isize + o) as usize, ji), dx);
            let ut = d1(order, |o| u(i, ji + o), dt);
            let utt = d2(order, |o| u(i, ji + o), dt);
            let h = metric.h(x, th);
            let e = metric.log_det_rate(x, th);
            let h_t = metric.dh_dtheta(x, th);
            let lap_h = -utt / h + 0.5 * h_t / (h * h) * ut;
            values.push(-uxx - (n1 / x + e) * ux + lap_h / (x * x));
        }
    }
    Ok(PolarField { grid: out_grid, values })
}

/// Discrete Dirichlet form `∫⟨du, dv⟩ dg` and pairing `∫(Δu) v dg` on the
/// trimmed grid, using the same difference stencils.
pub fn dirichlet_pairing(metric: &ConicMetric, u: &[f64], v: &[f64], grid: &PolarGrid) -> Result<(f64, f64)> {
    let lap = laplacian_apply(metric, u, grid)?;
    let order = metric.fd_order;
    let k = half_width(order);
    let nt = grid.ntheta as isize;
    let (dx, dt) = (grid.dx, grid.dtheta());
    let at = |f: &[f64], i: usize, j: isize| f[i * grid.ntheta + j.rem_euclid(nt) as usize];
    let (mut form, mut pairing) = (0.0, 0.0);
    for i in k..grid.nx - k {
        let x = grid.x(i);
        for j in 0..grid.ntheta {
            let th = grid.theta(j);
            let ji = j as isize;
            let h = metric.h(x, th);
            let w = x.powi(metric.n as i32 - 1) * h.sqrt() * dx * dt;
            let ux = d1(order, |o| at(u, (i as isize + o) as usize, ji), dx);
            let vx = d1(order, |o| at(v, (i as isize + o) as usize, ji), dx);
            let ut = d1(order, |o| at(u, i, ji + o), dt);
            let vt = d1(order, |o| at(v, i, ji + o), dt);
            form += (ux * vx + ut * vt / (x * x * h)) * w;
            pairing += lap.values[(i - k) * grid.ntheta + j] * at(v, i, ji) * w;
        }
    }
    Ok((form, pairing))
}
