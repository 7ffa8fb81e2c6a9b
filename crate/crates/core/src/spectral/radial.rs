//! Dirichlet radial eigenfunctions of one angular mode and exact evolution
//! of radial data in that basis.

use crate::error::{Error, Result};
use crate::numerics::quad::gauss_legendre;

use super::bessel::{bessel_j_pair, bessel_zeros};

/// Largest tail (squared norm left outside the basis, relative to the
/// squared norm of the data) accepted when projecting initial data.
pub const PROJECTION_TAIL: f64 = 1e-8;

/// Radial basis `R_k(x) = x^{-(n-2)/2} J_ν(μ_k x) / N_k` with `μ_k = j_{ν,k}/X`,
/// orthonormal in `L²([0, X], x^{n-1} dx)`.
#[derive(Debug, Clone)]
pub struct RadialMode {
    pub nu: f64,
    pub dim: usize,
    pub x_max: f64,
    pub mu: Vec<f64>,
    pub inv_norm: Vec<f64>,
}

impl RadialMode {
    pub fn new(nu: f64, dim: usize, x_max: f64, count: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Config(format!("dimension must be at least 2 (got {dim})")));
        }
        if !(x_max > 0.0) || !x_max.is_finite() {
            return Err(Error::Config(format!("x_max must be positive (got {x_max})")));
        }
        let zeros = bessel_zeros(nu, count)?;
        let mu = zeros.iter().map(|j| j / x_max).collect();
        // ∫_0^X J_ν(μx)² x dx = (X²/2) J_{ν+1}(j)²
        let inv_norm = zeros
            .iter()
            .map(|&j| {
                let jp = bessel_j_pair(nu + 1.0, j).0;
                1.0 / (x_max * jp.abs() / std::f64::consts::SQRT_2)
            })
            .collect();
        Ok(Self { nu, dim, x_max, mu, inv_norm })
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    fn weight_power(&self) -> f64 {
        -0.5 * (self.dim as f64 - 2.0)
    }

    /// `R_k(x)`.
    pub fn eval(&self, k: usize, x: f64) -> f64 {
        if x == 0.0 {
            return if self.nu == 0.0 && self.dim == 2 { self.inv_norm[k] } else { 0.0 };
        }
        x.powf(self.weight_power()) * bessel_j_pair(self.nu, self.mu[k] * x).0 * self.inv_norm[k]
    }

    /// Quadrature nodes and weights (including `x^{n-1}`) fine enough to
    /// integrate products of two basis functions and smooth data.
    pub fn quadrature(&self) -> (Vec<f64>, Vec<f64>) {
        let panels = self.len() + 16;
        let (gx, gw) = gauss_legendre(24);
        let h = self.x_max / panels as f64;
        let mut xs = Vec::with_capacity(panels * gx.len());
        let mut ws = Vec::with_capacity(panels * gx.len());
        for p in 0..panels {
            let a = p as f64 * h;
            for (x, w) in gx.iter().zip(&gw) {
                let xx = a + 0.5 * h * (x + 1.0);
                xs.push(xx);
                ws.push(0.5 * h * w * xx.powi(self.dim as i32 - 1));
            }
        }
        (xs, ws)
    }

    /// Coefficients of `f` and the relative squared-norm tail.
    pub fn project(&self, f: impl Fn(f64) -> f64) -> (Vec<f64>, f64) {
        let (xs, ws) = self.quadrature();
        let fv: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let norm2: f64 = fv.iter().zip(&ws).map(|(v, w)| v * v * w).sum();
        let mut coeffs = Vec::with_capacity(self.len());
        for k in 0..self.len() {
            let c: f64 = xs.iter().zip(&ws).zip(&fv).map(|((&x, w), v)| v * w * self.eval(k, x)).sum();
            coeffs.push(c);
        }
        let captured: f64 = coeffs.iter().map(|c| c * c).sum();
        let tail = if norm2 > 0.0 { ((norm2 - captured) / norm2).max(0.0) } else { 0.0 };
        (coeffs, tail)
    }
}

/// Exact evolution `c_k(t) = a_k cos μ_k t + b_k sin(μ_k t)/μ_k`.
#[derive(Debug, Clone)]
pub struct SpectralEvolution {
    pub mode: RadialMode,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// worst projection tail of the two initial data
    pub tail: f64,
}

impl SpectralEvolution {
    pub fn coefficients(&self, t: f64) -> Vec<f64> {
        self.mode
            .mu
            .iter()
            .zip(self.a.iter().zip(&self.b))
            .map(|(&m, (&a, &b))| a * (m * t).cos() + b * (m * t).sin() / m)
            .collect()
    }

    pub fn velocities(&self, t: f64) -> Vec<f64> {
        self.mode
            .mu
            .iter()
            .zip(self.a.iter().zip(&self.b))
            .map(|(&m, (&a, &b))| -a * m * (m * t).sin() + b * (m * t).cos())
            .collect()
    }

    pub fn value(&self, t: f64, x: f64) -> f64 {
        self.coefficients(t).iter().enumerate().map(|(k, c)| c * self.mode.eval(k, x)).sum()
    }

    pub fn values(&self, t: f64, xs: &[f64]) -> Vec<f64> {
        let c = self.coefficients(t);
        xs.iter()
            .map(|&x| c.iter().enumerate().map(|(k, ck)| ck * self.mode.eval(k, x)).sum())
            .collect()
    }

    /// `½ Σ (ċ_k² + μ_k² c_k²)`, the energy of the mode.
    pub fn energy(&self, t: f64) -> f64 {
        let c = self.coefficients(t);
        let v = self.velocities(t);
        0.5 * c
            .iter()
            .zip(&v)
            .zip(&self.mode.mu)
            .map(|((c, v), m)| v * v + m * m * c * c)
            .sum::<f64>()
    }
}

/// Projects `(u, u_t)` at time zero onto `mode` and returns the exact
/// evolution; fails when either datum leaves more than
/// [`PROJECTION_TAIL`] of its squared norm outside the basis.
pub fn evolve_mode_spectral(
    mode: &RadialMode,
    u0: impl Fn(f64) -> f64,
    u1: impl Fn(f64) -> f64,
) -> Result<SpectralEvolution> {
    let (a, tail0) = mode.project(u0);
    let (b, tail1) = mode.project(u1);
    let tail = tail0.max(tail1);
    if tail > PROJECTION_TAIL {
        return Err(Error::Truncation { tail, limit: PROJECTION_TAIL });
    }
    Ok(SpectralEvolution { mode: mode.clone(), a, b, tail })
}
