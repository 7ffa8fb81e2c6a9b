//! Second-order discrete wave operator, cross-section Laplacian and scaling
//! generator on space-time polar grids, for checking the commutation
//! relations of the model cone.
//!
//! `□ = D_t² - Δ = -∂_t² - Δ`, `Δ_Y` is the Laplacian of the frozen
//! cross-section metric `h₀`, and `R = x D_x + (t - t̄) D_t` with `D = -i∂`.
//! On an exact product cone `[□, Δ_Y] = 0` and `[□, R] = -2i□`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{ConicMetric, CrossSection, PolarGrid};

/// Uniform Cartesian grid on a developed (unrolled) flat region of the
/// cone, with the tip at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianGrid {
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl CartesianGrid {
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpatialGrid {
    Polar(PolarGrid),
    Cartesian(CartesianGrid),
}

impl SpatialGrid {
    fn dims(&self) -> (usize, usize) {
        match self {
            SpatialGrid::Polar(g) => (g.nx, g.ntheta),
            SpatialGrid::Cartesian(g) => (g.nx, g.ny),
        }
    }

    fn periodic(&self) -> bool {
        matches!(self, SpatialGrid::Polar(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub nt: usize,
    pub space: SpatialGrid,
}

impl SpaceTimeGrid {
    pub fn new(t0: f64, t1: f64, nt: usize, space: SpatialGrid) -> Result<Self> {
        if nt < 5 || !(t1 > t0) {
            return Err(Error::Config("space-time grid needs at least 5 time levels".into()));
        }
        match &space {
            SpatialGrid::Polar(p) => {
                if p.nx < 5 || p.ntheta < 4 || p.x0 <= 0.0 {
                    return Err(Error::Config("polar grid must stay off the tip with 5+ radial nodes".into()));
                }
            }
            SpatialGrid::Cartesian(c) => {
                if c.nx < 5 || c.ny < 5 || !(c.h > 0.0) {
                    return Err(Error::Config("Cartesian grid needs 5+ nodes per axis".into()));
                }
            }
        }
        Ok(Self { t0, dt: (t1 - t0) / (nt - 1) as f64, nt, space })
    }

    pub fn t(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn len(&self) -> usize {
        let (a, b) = self.space.dims();
        self.nt * a * b
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn index(&self, k: usize, i: usize, j: usize) -> usize {
        let (a, b) = self.space.dims();
        (k * a + i) * b + j
    }
}

#[derive(Debug, Clone)]
pub struct SpaceTimeField {
    pub grid: SpaceTimeGrid,
    pub values: Vec<Complex64>,
}

impl SpaceTimeField {
    /// Samples `f(t, a, b)` with `(a, b) = (x, θ)` on polar grids and the
    /// developed coordinates `(X, Y)` on Cartesian ones.
    pub fn sample(grid: &SpaceTimeGrid, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let (na, nb) = grid.space.dims();
        let mut values = Vec::with_capacity(grid.len());
        for k in 0..grid.nt {
            for i in 0..na {
                for j in 0..nb {
                    let (a, b) = match &grid.space {
                        SpatialGrid::Polar(p) => (p.x(i), p.theta(j)),
                        SpatialGrid::Cartesian(c) => (c.x(i), c.y(j)),
                    };
                    values.push(Complex64::new(f(grid.t(k), a, b), 0.0));
                }
            }
        }
        Self { grid: grid.clone(), values }
    }

    fn zeros_like(&self) -> Self {
        Self { grid: self.grid.clone(), values: vec![Complex64::new(0.0, 0.0); self.values.len()] }
    }

    fn combine(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect();
        Self { grid: self.grid.clone(), values }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| v * c).collect() }
    }
}

/// Metric coefficients of `Δ` at every polar node.
struct LaplaceCoeffs {
    first_x: Vec<f64>,
    inv_x2h: Vec<f64>,
    theta_drift: Vec<f64>,
}

fn laplace_coeffs(metric: &ConicMetric, grid: &PolarGrid) -> LaplaceCoeffs {
    let n = grid.len();
    let mut c = LaplaceCoeffs { first_x: vec![0.0; n], inv_x2h: vec![0.0; n], theta_drift: vec![0.0; n] };
    for i in 0..grid.nx {
        let x = grid.x(i);
        for j in 0..grid.ntheta {
            let th = grid.theta(j);
            let h = metric.h(x, th);
            let p = i * grid.ntheta + j;
            c.first_x[p] = (metric.n as f64 - 1.0) / x + 0.5 * metric.dh_dx(x, th) / h;
            c.inv_x2h[p] = 1.0 / (x * x * h);
            c.theta_drift[p] = 0.5 * metric.dh_dtheta(x, th) / (h * h * x * x);
        }
    }
    c
}

fn check_grid(metric: &ConicMetric, f: &SpaceTimeField) -> Result<()> {
    match &f.grid.space {
        SpatialGrid::Polar(g) => {
            if (g.period - metric.period()).abs() > 1e-12 * metric.period() {
                return Err(Error::Config(format!(
                    "grid period {} differs from the cross-section period {}",
                    g.period,
                    metric.period()
                )));
            }
            if g.x(g.nx - 1) > metric.x_max {
                return Err(Error::Config("space-time grid leaves the collar".into()));
            }
        }
        SpatialGrid::Cartesian(_) => {
            let round = matches!(metric.cross_section, CrossSection::AnalyticCircle { .. });
            if metric.n != 2 || !metric.is_product() || !round {
                return Err(Error::Config("developed Cartesian grids need a flat two-dimensional cone".into()));
            }
        }
    }
    Ok(())
}

type Probe<'a> = &'a dyn Fn(isize, isize, isize) -> Complex64;

/// Applies `op` at every node off the outer layer (first and last time
/// level and first and last row of each non-periodic axis), which is zero.
fn stencil(f: &SpaceTimeField, op: impl Fn(Probe, usize, usize, usize) -> Complex64) -> SpaceTimeField {
    let g = &f.grid;
    let (na, nb) = g.space.dims();
    let periodic = g.space.periodic();
    let (jlo, jhi) = if periodic { (0, nb) } else { (1, nb - 1) };
    let mut out = f.zeros_like();
    for k in 1..g.nt - 1 {
        for i in 1..na - 1 {
            for j in jlo..jhi {
                let at = |dk: isize, di: isize, dj: isize| -> Complex64 {
                    let jj = if periodic {
                        (j as isize + dj).rem_euclid(nb as isize) as usize
                    } else {
                        (j as isize + dj) as usize
                    };
                    f.values[g.index((k as isize + dk) as usize, (i as isize + di) as usize, jj)]
                };
                out.values[g.index(k, i, j)] = op(&at, k, i, j);
            }
        }
    }
    out
}

/// `□f = -f_tt - Δf` for the metric's Laplacian.
pub fn apply_box(metric: &ConicMetric, f: &SpaceTimeField) -> Result<SpaceTimeField> {
    check_grid(metric, f)?;
    let g = &f.grid;
    let dt = g.dt;
    match &g.space {
        SpatialGrid::Polar(p) => {
            let (dx, dth) = (p.dx, p.dtheta());
            let c = laplace_coeffs(metric, p);
            let nth = p.ntheta;
            Ok(stencil(f, |at, _k, i, j| {
                let q = i * nth + j;
                let u = at(0, 0, 0);
                let utt = (at(1, 0, 0) - u * 2.0 + at(-1, 0, 0)) / (dt * dt);
                let uxx = (at(0, 1, 0) - u * 2.0 + at(0, -1, 0)) / (dx * dx);
                let ux = (at(0, 1, 0) - at(0, -1, 0)) / (2.0 * dx);
                let uyy = (at(0, 0, 1) - u * 2.0 + at(0, 0, -1)) / (dth * dth);
                let uy = (at(0, 0, 1) - at(0, 0, -1)) / (2.0 * dth);
                let lap = -uxx - ux * c.first_x[q] - uyy * c.inv_x2h[q] + uy * c.theta_drift[q];
                -utt - lap
            }))
        }
        SpatialGrid::Cartesian(c) => {
            let h2 = c.h * c.h;
            Ok(stencil(f, |at, _k, _i, _j| {
                let u = at(0, 0, 0);
                let utt = (at(1, 0, 0) - u * 2.0 + at(-1, 0, 0)) / (dt * dt);
                let lap = -(at(0, 1, 0) + at(0, -1, 0) + at(0, 0, 1) + at(0, 0, -1) - u * 4.0) / h2;
                -utt - lap
            }))
        }
    }
}

/// `(X ∂_Y - Y ∂_X) f`, the rotation generator on a developed grid.
fn rotation(f: &SpaceTimeField, c: &CartesianGrid) -> SpaceTimeField {
    let c = c.clone();
    stencil(f, move |at, _k, i, j| {
        let ux = (at(0, 1, 0) - at(0, -1, 0)) / (2.0 * c.h);
        let uy = (at(0, 0, 1) - at(0, 0, -1)) / (2.0 * c.h);
        uy * c.x(i) - ux * c.y(j)
    })
}

/// `Δ_Y f` for the frozen cross-section metric `h₀`.
pub fn apply_lap_y(metric: &ConicMetric, f: &SpaceTimeField) -> Result<SpaceTimeField> {
    check_grid(metric, f)?;
    let g = &f.grid;
    match &g.space {
        SpatialGrid::Polar(p) => {
            let dth = p.dtheta();
            let coeff: Vec<(f64, f64)> = (0..p.ntheta)
                .map(|j| {
                    let th = p.theta(j);
                    let h0 = metric.h0(th);
                    (1.0 / h0, 0.5 * metric.cross_section.h0_deriv(th) / (h0 * h0))
                })
                .collect();
            Ok(stencil(f, |at, _k, _i, j| {
                let u = at(0, 0, 0);
                let uyy = (at(0, 0, 1) - u * 2.0 + at(0, 0, -1)) / (dth * dth);
                let uy = (at(0, 0, 1) - at(0, 0, -1)) / (2.0 * dth);
                -uyy * coeff[j].0 + uy * coeff[j].1
            }))
        }
        SpatialGrid::Cartesian(c) => {
            // expanded -(X²∂_Y² - 2XY∂_X∂_Y + Y²∂_X² - X∂_X - Y∂_Y), one stencil
            let c = c.clone();
            Ok(stencil(f, move |at, _k, i, j| {
                let (x, y, h) = (c.x(i), c.y(j), c.h);
                let u = at(0, 0, 0);
                let uxx = (at(0, 1, 0) - u * 2.0 + at(0, -1, 0)) / (h * h);
                let uyy = (at(0, 0, 1) - u * 2.0 + at(0, 0, -1)) / (h * h);
                let uxy = (at(0, 1, 1) - at(0, 1, -1) - at(0, -1, 1) + at(0, -1, -1)) / (4.0 * h * h);
                let ux = (at(0, 1, 0) - at(0, -1, 0)) / (2.0 * h);
                let uy = (at(0, 0, 1) - at(0, 0, -1)) / (2.0 * h);
                -(uyy * (x * x) - uxy * (2.0 * x * y) + uxx * (y * y) - ux * x - uy * y)
            }))
        }
    }
}

/// `D_θ f = -i ∂_θ f`.
pub fn apply_d_theta(f: &SpaceTimeField) -> SpaceTimeField {
    let mi = Complex64::new(0.0, -1.0);
    match &f.grid.space {
        SpatialGrid::Polar(p) => {
            let dth = p.dtheta();
            stencil(f, |at, _k, _i, _j| (at(0, 0, 1) - at(0, 0, -1)) / (2.0 * dth) * mi)
        }
        SpatialGrid::Cartesian(c) => rotation(f, c).scale(mi),
    }
}

/// `R f = -i (x ∂_x + (t - t̄) ∂_t) f`; on developed grids `x ∂_x` is
/// `X ∂_X + Y ∂_Y`.
pub fn apply_r(f: &SpaceTimeField, t_bar: f64) -> SpaceTimeField {
    let g = f.grid.clone();
    let mi = Complex64::new(0.0, -1.0);
    stencil(f, |at, k, i, j| {
        let ut = (at(1, 0, 0) - at(-1, 0, 0)) / (2.0 * g.dt);
        let radial = match &g.space {
            SpatialGrid::Polar(p) => (at(0, 1, 0) - at(0, -1, 0)) / (2.0 * p.dx) * p.x(i),
            SpatialGrid::Cartesian(c) => {
                let ux = (at(0, 1, 0) - at(0, -1, 0)) / (2.0 * c.h);
                let uy = (at(0, 0, 1) - at(0, 0, -1)) / (2.0 * c.h);
                ux * c.x(i) + uy * c.y(j)
            }
        };
        (radial + ut * (g.t(k) - t_bar)) * mi
    })
}

/// Discrete `L²` norm with the metric volume (`x^{n-1} √h dx dθ dt` on
/// polar grids, `dX dY dt` on developed ones), over nodes at least
/// `margin` layers from the non-periodic edges.
pub fn metric_norm(metric: &ConicMetric, f: &SpaceTimeField, margin: usize) -> f64 {
    let g = &f.grid;
    let (na, nb) = g.space.dims();
    let (jlo, jhi) = if g.space.periodic() { (0, nb) } else { (margin, nb.saturating_sub(margin)) };
    let mut acc = 0.0;
    for i in margin..na.saturating_sub(margin) {
        for j in jlo..jhi {
            let w = match &g.space {
                SpatialGrid::Polar(p) => {
                    let (x, th) = (p.x(i), p.theta(j));
                    x.powi(metric.n as i32 - 1) * metric.h(x, th).sqrt() * p.dx * p.dtheta()
                }
                SpatialGrid::Cartesian(c) => c.h * c.h,
            } * g.dt;
            for k in margin..g.nt.saturating_sub(margin) {
                acc += w * f.values[g.index(k, i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// `‖[A, B]f - expected(f)‖` in the metric norm, ignoring the three outer
/// layers where nested stencils see the zero padding.
pub fn commutator_residual(
    metric: &ConicMetric,
    a: &dyn Fn(&SpaceTimeField) -> Result<SpaceTimeField>,
    b: &dyn Fn(&SpaceTimeField) -> Result<SpaceTimeField>,
    expected: &dyn Fn(&SpaceTimeField) -> Result<SpaceTimeField>,
    f: &SpaceTimeField,
) -> Result<f64> {
    let ab = a(&b(f)?)?;
    let ba = b(&a(f)?)?;
    let e = expected(f)?;
    let r = ab.combine(&ba, |x, y| x - y).combine(&e, |x, y| x - y);
    Ok(metric_norm(metric, &r, 3))
}

/// `‖[□, Δ_Y] f‖`.
pub fn box_lap_y_residual(metric: &ConicMetric, f: &SpaceTimeField) -> Result<f64> {
    commutator_residual(
        metric,
        &|u| apply_box(metric, u),
        &|u| apply_lap_y(metric, u),
        &|u| Ok(u.zeros_like()),
        f,
    )
}

/// `‖[□, R] f + 2i □f‖`.
pub fn box_r_residual(metric: &ConicMetric, f: &SpaceTimeField, t_bar: f64) -> Result<f64> {
    commutator_residual(
        metric,
        &|u| apply_box(metric, u),
        &|u| Ok(apply_r(u, t_bar)),
        &|u| Ok(apply_box(metric, u)?.scale(Complex64::new(0.0, -2.0))),
        f,
    )
}

/// `‖[□, D_θ] f‖`.
pub fn box_d_theta_residual(metric: &ConicMetric, f: &SpaceTimeField) -> Result<f64> {
    commutator_residual(
        metric,
        &|u| apply_box(metric, u),
        &|u| Ok(apply_d_theta(u)),
        &|u| Ok(u.zeros_like()),
        f,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Perturbation;
    use std::f64::consts::PI;

    fn angular_bump(t: f64, x: f64, th: f64) -> f64 {
        let r2 = ((t - 0.5) / 0.15).powi(2) + ((x - 1.0) / 0.15).powi(2);
        (-r2).exp() * (1.0 + 0.5 * (th - 1.0).cos() + 0.25 * (2.0 * th).sin())
    }

    fn cart_bump(t: f64, x: f64, y: f64) -> f64 {
        let r2 = ((t - 0.5) / 0.15).powi(2) + ((x - 1.0) / 0.15).powi(2) + ((y - 0.2) / 0.2).powi(2);
        (-r2).exp()
    }

    fn polar(n: usize) -> SpaceTimeGrid {
        let space = PolarGrid::new(0.4, 1.6, n, 2 * n, 2.0 * PI).unwrap();
        SpaceTimeGrid::new(0.0, 1.0, n, SpatialGrid::Polar(space)).unwrap()
    }

    fn cartesian(n: usize) -> SpaceTimeGrid {
        let h = 1.2 / (n - 1) as f64;
        let space = CartesianGrid { x0: 0.4, y0: -0.4, h, nx: n, ny: n };
        SpaceTimeGrid::new(0.0, 1.0, n, SpatialGrid::Cartesian(space)).unwrap()
    }

    #[test]
    fn box_of_radial_quadratic() {
        // f = t² - x²/2 on the plane: -f_tt = -2, Δf = 2 (n = 2), so □f = -4
        let m = ConicMetric::model(2.0 * PI, 3.0).unwrap();
        for g in [polar(12), cartesian(12)] {
            let f = SpaceTimeField::sample(&g, |t, a, b| match g.space {
                SpatialGrid::Polar(_) => t * t - 0.5 * a * a,
                SpatialGrid::Cartesian(_) => t * t - 0.5 * (a * a + b * b),
            });
            let b = apply_box(&m, &f).unwrap();
            for k in 1..g.nt - 1 {
                for i in 1..11 {
                    assert!((b.values[g.index(k, i, 3)].re + 4.0).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn developed_commutators_converge_at_second_order() {
        let m = ConicMetric::model(2.0 * PI, 3.0).unwrap();
        let mut lap = Vec::new();
        let mut r = Vec::new();
        for n in [24usize, 48] {
            let f = SpaceTimeField::sample(&cartesian(n), cart_bump);
            lap.push(box_lap_y_residual(&m, &f).unwrap());
            r.push(box_r_residual(&m, &f, 0.3).unwrap());
        }
        for v in [&lap, &r] {
            let order = (v[0] / v[1]).log2();
            assert!((order - 2.0).abs() < 0.3, "{v:?}");
        }
    }

    #[test]
    fn polar_product_commutators_vanish() {
        let m = ConicMetric::model(2.0 * PI, 3.0).unwrap();
        let f = SpaceTimeField::sample(&polar(20), angular_bump);
        assert!(box_lap_y_residual(&m, &f).unwrap() < 1e-8);
        assert!(box_d_theta_residual(&m, &f).unwrap() < 1e-8);
    }

    #[test]
    fn angular_perturbation_leaves_a_floor() {
        let m = ConicMetric::new(
            2,
            CrossSection::AnalyticCircle { circumference: 2.0 * PI },
            Perturbation::Angular { a: 0.3, m: 1 },
            3.0,
        )
        .unwrap();
        let a = box_lap_y_residual(&m, &SpaceTimeField::sample(&polar(20), angular_bump)).unwrap();
        let b = box_lap_y_residual(&m, &SpaceTimeField::sample(&polar(40), angular_bump)).unwrap();
        assert!(a > 0.1 && ((a - b) / b).abs() < 0.15, "{a} {b}");
    }

    #[test]
    fn developed_grid_requires_flat_cone() {
        let m = ConicMetric::new(
            2,
            CrossSection::AnalyticCircle { circumference: 2.0 * PI },
            Perturbation::Radial { a: 0.3 },
            3.0,
        )
        .unwrap();
        let f = SpaceTimeField::sample(&cartesian(8), cart_bump);
        assert!(matches!(apply_box(&m, &f), Err(Error::Config(_))));
    }
}
