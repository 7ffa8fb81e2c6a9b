//! Conic metrics `dx² + x² h(x, θ) dθ²` over a one-dimensional cross-section.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::periodic::TrigInterpolant;

/// Metric on the cross-section circle, `h₀(θ) dθ²` with `θ ∈ [0, period)`.
#[derive(Debug, Clone)]
pub enum CrossSection {
    /// Round circle of the given circumference; `h₀ ≡ 1`.
    AnalyticCircle { circumference: f64 },
    /// `h₀` sampled on an equispaced periodic grid.
    Tabulated1D(TabulatedCircle),
}

#[derive(Debug, Clone)]
pub struct TabulatedCircle {
    samples: Vec<f64>,
    h0: TrigInterpolant,
    sqrt_h0: TrigInterpolant,
}

impl TabulatedCircle {
    pub fn new(samples: Vec<f64>, period: f64) -> Result<Self> {
        if samples.len() < 4 {
            return Err(Error::Config("h0_samples needs at least 4 samples".into()));
        }
        if !(period > 0.0) {
            return Err(Error::Config(format!("cross-section period must be positive, got {period}")));
        }
        if let Some(bad) = samples.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::Config(format!("h0 samples must be positive, found {bad}")));
        }
        let h0 = TrigInterpolant::new(&samples, period);
        let fine = 8 * samples.len();
        let mut root = Vec::with_capacity(fine);
        for i in 0..fine {
            let v = h0.eval(period * i as f64 / fine as f64);
            if !(v > 0.0) {
                return Err(Error::Config("interpolated h0 is not positive".into()));
            }
            root.push(v.sqrt());
        }
        let sqrt_h0 = TrigInterpolant::new(&root, period);
        Ok(Self { samples, h0, sqrt_h0 })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn period(&self) -> f64 {
        self.h0.period()
    }

    pub fn h0(&self, theta: f64) -> f64 {
        self.h0.eval(theta)
    }

    pub fn h0_deriv(&self, theta: f64) -> f64 {
        self.h0.deriv(theta)
    }

    /// `∫_0^θ √h₀`.
    pub fn arc_length(&self, theta: f64) -> f64 {
        self.sqrt_h0.integral(theta)
    }

    pub fn sqrt_h0(&self, theta: f64) -> f64 {
        self.sqrt_h0.eval(theta)
    }
}

impl CrossSection {
    pub fn circle(circumference: f64) -> Self {
        CrossSection::AnalyticCircle { circumference }
    }

    /// Length of the coordinate interval for θ.
    pub fn period(&self) -> f64 {
        match self {
            CrossSection::AnalyticCircle { circumference } => *circumference,
            CrossSection::Tabulated1D(t) => t.period(),
        }
    }

    pub fn h0(&self, theta: f64) -> f64 {
        match self {
            CrossSection::AnalyticCircle { .. } => 1.0,
            CrossSection::Tabulated1D(t) => t.h0(theta),
        }
    }

    pub fn h0_deriv(&self, theta: f64) -> f64 {
        match self {
            CrossSection::AnalyticCircle { .. } => 0.0,
            CrossSection::Tabulated1D(t) => t.h0_deriv(theta),
        }
    }

    /// `h₀`-arc length from 0 to θ.
    pub fn arc_length(&self, theta: f64) -> f64 {
        match self {
            CrossSection::AnalyticCircle { .. } => theta,
            CrossSection::Tabulated1D(t) => t.arc_length(theta),
        }
    }

    /// Total `h₀`-length of the cross-section.
    pub fn total_length(&self) -> f64 {
        self.arc_length(self.period())
    }
}

/// How `h(x, θ)` departs from `h₀(θ)` away from the tip.
#[derive(Debug, Clone)]
pub enum Perturbation {
    /// `h = h₀`.
    Product,
    /// `h = h₀ (1 + a x)²`.
    Radial { a: f64 },
    /// `h = h₀ (1 + a x cos(2π m θ / period))²`.
    Angular { a: f64, m: u32 },
    /// `h` tabulated on an `(x, θ)` grid.
    Grid(GridPerturbation),
}

/// Finite-difference order for metric derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FdOrder {
    Second,
    Fourth,
}

impl FdOrder {
    pub fn from_int(order: u32) -> Result<Self> {
        match order {
            2 => Ok(FdOrder::Second),
            4 => Ok(FdOrder::Fourth),
            _ => Err(Error::Config(format!("finite-difference order must be 2 or 4, got {order}"))),
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            FdOrder::Second => 2,
            FdOrder::Fourth => 4,
        }
    }

    /// Centred first derivative of `f` at `z` with step `d`.
    pub fn diff(self, f: impl Fn(f64) -> f64, z: f64, d: f64) -> f64 {
        match self {
            FdOrder::Second => (f(z + d) - f(z - d)) / (2.0 * d),
            FdOrder::Fourth => {
                (8.0 * (f(z + d) - f(z - d)) - (f(z + 2.0 * d) - f(z - 2.0 * d))) / (12.0 * d)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConicMetric {
    /// Ambient dimension; the cross-section slot is one-dimensional here.
    pub n: usize,
    pub cross_section: CrossSection,
    pub perturbation: Perturbation,
    pub x_max: f64,
    pub fd_order: FdOrder,
}

impl ConicMetric {
    pub fn new(n: usize, cross_section: CrossSection, perturbation: Perturbation, x_max: f64) -> Result<Self> {
        let m = Self { n, cross_section, perturbation, x_max, fd_order: FdOrder::Fourth };
        m.validate()?;
        Ok(m)
    }

    /// Flat model cone `dx² + x² dθ²`, `θ ∈ [0, L)`.
    pub fn model(circumference: f64, x_max: f64) -> Result<Self> {
        Self::new(2, CrossSection::circle(circumference), Perturbation::Product, x_max)
    }

    pub fn with_fd_order(mut self, order: FdOrder) -> Self {
        self.fd_order = order;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("dimension n must be at least 2, got {}", self.n)));
        }
        if !(self.x_max > 0.0) {
            return Err(Error::Config(format!("x_max must be positive, got {}", self.x_max)));
        }
        if let CrossSection::AnalyticCircle { circumference } = self.cross_section {
            if !(circumference > 0.0) || !circumference.is_finite() {
                return Err(Error::Config(format!("circumference must be positive, got {circumference}")));
            }
        }
        let p = self.period();
        if let Perturbation::Grid(g) = &self.perturbation {
            if (g.period - p).abs() > 1e-12 * p {
                return Err(Error::Config("grid perturbation period differs from the cross-section".into()));
            }
            if g.x_max < self.x_max * (1.0 - 1e-12) {
                return Err(Error::Config("grid perturbation does not cover the collar".into()));
            }
            for j in 0..g.ntheta {
                let th = p * j as f64 / g.ntheta as f64;
                let (v, h0) = (g.at(0, j), self.h0(th));
                if (v - h0).abs() > 1e-8 * h0 {
                    return Err(Error::Config(format!("grid h(0, θ={th}) = {v} differs from h0 = {h0}")));
                }
            }
        }
        for i in 0..=64 {
            let x = self.x_max * i as f64 / 64.0;
            for j in 0..128 {
                let th = p * j as f64 / 128.0;
                let v = self.h(x, th);
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::Config(format!("h({x}, {th}) = {v} is not positive")));
                }
            }
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        self.cross_section.period()
    }

    pub fn h0(&self, theta: f64) -> f64 {
        self.cross_section.h0(theta)
    }

    /// Cross-section metric coefficient at radius `x`.
    pub fn h(&self, x: f64, theta: f64) -> f64 {
        let h0 = self.cross_section.h0(theta);
        match &self.perturbation {
            Perturbation::Product => h0,
            Perturbation::Radial { a } => h0 * (1.0 + a * x).powi(2),
            Perturbation::Angular { a, m } => {
                let c = (2.0 * PI * *m as f64 * theta / self.period()).cos();
                h0 * (1.0 + a * x * c).powi(2)
            }
            Perturbation::Grid(g) => g.eval(x, theta),
        }
    }

    pub fn is_product(&self) -> bool {
        match &self.perturbation {
            Perturbation::Product => true,
            Perturbation::Radial { a } | Perturbation::Angular { a, .. } => *a == 0.0,
            Perturbation::Grid(_) => false,
        }
    }

    fn fd_step(&self) -> (f64, f64) {
        (1e-4 * self.x_max.max(1e-3), 1e-4 * self.period())
    }

    pub fn dh_dx(&self, x: f64, theta: f64) -> f64 {
        if self.is_product() {
            return 0.0;
        }
        let (dx, _) = self.fd_step();
        self.fd_order.diff(|s| self.h(s, theta), x, dx)
    }

    pub fn dh_dtheta(&self, x: f64, theta: f64) -> f64 {
        if self.is_product() {
            return self.cross_section.h0_deriv(theta);
        }
        let (_, dt) = self.fd_step();
        self.fd_order.diff(|s| self.h(x, s), theta, dt)
    }

    /// `½ ∂_x log det h`.
    pub fn log_det_rate(&self, x: f64, theta: f64) -> f64 {
        0.5 * self.dh_dx(x, theta) / self.h(x, theta)
    }
}

/// Dual metric `a² + b²/(x² h(x,θ))` of the covector `a dx + b dθ`.
pub fn dual_metric(metric: &ConicMetric, x: f64, theta: f64, a: f64, b: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("dual metric is singular at x={x}")));
    }
    if x > metric.x_max * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("x={x} outside the collar (x_max={})", metric.x_max)));
    }
    Ok(a * a + b * b / (x * x * metric.h(x, theta)))
}

const GRID_MAGIC: &[u8; 8] = b"CONEGRD1";

/// `h(x, θ)` tabulated on `nx × ntheta` nodes, `x_i = i·x_max/(nx−1)`,
/// `θ_j = j·period/ntheta`, interpolated by Catmull–Rom cubics.
#[derive(Debug, Clone)]
pub struct GridPerturbation {
    pub nx: usize,
    pub ntheta: usize,
    pub x_max: f64,
    pub period: f64,
    /// Row-major, `values[i * ntheta + j] = h(x_i, θ_j)`.
    pub values: Vec<f64>,
}

impl GridPerturbation {
    pub fn from_fn(nx: usize, ntheta: usize, x_max: f64, period: f64, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(nx * ntheta);
        for i in 0..nx {
            for j in 0..ntheta {
                values.push(f(x_max * i as f64 / (nx - 1) as f64, period * j as f64 / ntheta as f64));
            }
        }
        Self { nx, ntheta, x_max, period, values }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ntheta + j]
    }

    pub fn eval(&self, x: f64, theta: f64) -> f64 {
        let hx = self.x_max / (self.nx - 1) as f64;
        let fx = (x / hx).clamp(-1.0, self.nx as f64);
        let ix = (fx.floor() as isize).clamp(1, self.nx as isize - 3);
        let tx = fx - ix as f64;
        let ht = self.period / self.ntheta as f64;
        let ft = theta.rem_euclid(self.period) / ht;
        let jt = ft.floor() as isize;
        let tt = ft - jt as f64;
        let n = self.ntheta as isize;
        let mut rows = [0.0; 4];
        for (r, row) in rows.iter_mut().enumerate() {
            let i = (ix - 1 + r as isize) as usize;
            let mut p = [0.0; 4];
            for (c, v) in p.iter_mut().enumerate() {
                let j = (jt - 1 + c as isize).rem_euclid(n) as usize;
                *v = self.at(i, j);
            }
            *row = catmull_rom(p, tt);
        }
        catmull_rom(rows, tx)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(40 + 8 * self.values.len());
        buf.extend_from_slice(GRID_MAGIC);
        buf.extend_from_slice(&(self.nx as u64).to_le_bytes());
        buf.extend_from_slice(&(self.ntheta as u64).to_le_bytes());
        buf.extend_from_slice(&self.x_max.to_le_bytes());
        buf.extend_from_slice(&self.period.to_le_bytes());
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::File::create(path)?.write_all(&buf)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        if buf.len() < 40 || &buf[..8] != GRID_MAGIC {
            return Err(Error::Parse(format!("{}: not a perturbation grid file", path.display())));
        }
        let u = |o: usize| u64::from_le_bytes(buf[o..o + 8].try_into().unwrap());
        let f = |o: usize| f64::from_le_bytes(buf[o..o + 8].try_into().unwrap());
        let (nx, ntheta) = (u(8) as usize, u(16) as usize);
        let (x_max, period) = (f(24), f(32));
        if nx < 4 || ntheta < 4 || buf.len() != 40 + 8 * nx * ntheta {
            return Err(Error::Parse(format!("{}: inconsistent grid header", path.display())));
        }
        let values = (0..nx * ntheta).map(|k| f(40 + 8 * k)).collect();
        Ok(Self { nx, ntheta, x_max, period, values })
    }
}

fn catmull_rom(p: [f64; 4], t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    0.5 * (2.0 * p[1]
        + (p[2] - p[0]) * t
        + (2.0 * p[0] - 5.0 * p[1] + 4.0 * p[2] - p[3]) * t2
        + (3.0 * p[1] - p[0] - 3.0 * p[2] + p[3]) * t3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_metric_examples() {
        let m = ConicMetric::model(2.0 * PI, 4.0).unwrap();
        assert!((dual_metric(&m, 2.0, 0.3, 1.0, 1.0).unwrap() - 1.25).abs() < 1e-15);
        let p = ConicMetric::new(2, CrossSection::circle(2.0 * PI), Perturbation::Radial { a: 1.0 }, 2.0).unwrap();
        assert!((dual_metric(&p, 1.0, 0.0, 0.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(matches!(dual_metric(&m, 0.0, 0.0, 1.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn rejects_bad_metrics() {
        assert!(ConicMetric::model(-1.0, 1.0).is_err());
        assert!(ConicMetric::model(1.0, 0.0).is_err());
        let neg = ConicMetric::new(2, CrossSection::circle(1.0), Perturbation::Radial { a: -2.0 }, 1.0);
        assert!(neg.is_err());
        assert!(TabulatedCircle::new(vec![1.0, -1.0, 1.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn derivatives_converge_at_declared_order() {
        let m = ConicMetric::new(2, CrossSection::circle(2.0 * PI), Perturbation::Angular { a: 0.3, m: 1 }, 1.0)
            .unwrap();
        let exact = |x: f64, t: f64| 2.0 * (1.0 + 0.3 * x * t.cos()) * 0.3 * t.cos();
        for order in [FdOrder::Second, FdOrder::Fourth] {
            let mm = m.clone().with_fd_order(order);
            assert!((mm.dh_dx(0.5, 0.7) - exact(0.5, 0.7)).abs() < 1e-7);
        }
        let f = |s: f64| s.sin();
        let e1 = (FdOrder::Second.diff(f, 1.0, 0.1) - 1f64.cos()).abs();
        let e2 = (FdOrder::Second.diff(f, 1.0, 0.05) - 1f64.cos()).abs();
        assert!((e1 / e2 - 4.0).abs() < 0.05);
        let e1 = (FdOrder::Fourth.diff(f, 1.0, 0.1) - 1f64.cos()).abs();
        let e2 = (FdOrder::Fourth.diff(f, 1.0, 0.05) - 1f64.cos()).abs();
        assert!((e1 / e2 - 16.0).abs() < 0.3);
    }

    #[test]
    fn grid_file_round_trip() {
        let g = GridPerturbation::from_fn(16, 24, 1.0, 2.0 * PI, |x, t| (1.0 + 0.2 * x * t.cos()).powi(2));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.grid");
        g.write(&path).unwrap();
        let back = GridPerturbation::read(&path).unwrap();
        assert_eq!(back.values, g.values);
        let m = ConicMetric::new(2, CrossSection::circle(2.0 * PI), Perturbation::Grid(back), 1.0).unwrap();
        let want = (1.0 + 0.2 * 0.37 * 1.1f64.cos()).powi(2);
        assert!((m.h(0.37, 1.1) - want).abs() < 1e-3);
        // nodes are reproduced exactly
        assert!((m.h(1.0 / 15.0 * 3.0, 2.0 * PI / 24.0 * 5.0) - g.values[3 * 24 + 5]).abs() < 1e-14);
    }

    #[test]
    fn tabulated_circle_length() {
        let t = TabulatedCircle::new((0..32).map(|i| (1.0 + 0.1 * (2.0 * PI * i as f64 / 32.0).cos()).powi(2)).collect(), 2.0 * PI)
            .unwrap();
        // √h₀ = 1 + 0.1 cos θ integrates to 2π
        assert!((CrossSection::Tabulated1D(t).total_length() - 2.0 * PI).abs() < 1e-12);
    }
}
