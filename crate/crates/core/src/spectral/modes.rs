//! Eigendata of the cross-section Laplacian `Δ_h₀`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::metric::{ConicMetric, CrossSection, TabulatedCircle};
use crate::numerics::periodic::TrigInterpolant;

/// One eigenfunction, orthonormal in `L²(√h₀ dθ)`.
#[derive(Debug, Clone)]
pub enum AngularFunction {
    Constant { value: f64 },
    Cos { omega: f64, norm: f64 },
    Sin { omega: f64, norm: f64 },
    Sampled(TrigInterpolant),
}

impl AngularFunction {
    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            AngularFunction::Constant { value } => *value,
            AngularFunction::Cos { omega, norm } => norm * (omega * theta).cos(),
            AngularFunction::Sin { omega, norm } => norm * (omega * theta).sin(),
            AngularFunction::Sampled(p) => p.eval(theta),
        }
    }
}

/// An eigenvalue with its eigenspace.
#[derive(Debug, Clone)]
pub struct BoundaryMode {
    pub lambda: f64,
    pub functions: Vec<AngularFunction>,
}

impl BoundaryMode {
    pub fn multiplicity(&self) -> usize {
        self.functions.len()
    }
}

#[derive(Debug, Clone)]
pub struct ModeBasis {
    pub period: f64,
    /// Distinct eigenvalues in nondecreasing order.
    pub modes: Vec<BoundaryMode>,
    /// Largest eigen-residual `‖Δφ − λφ‖` (zero for analytic spectra).
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModeSummary {
    pub lambda: f64,
    pub multiplicity: usize,
}

impl ModeBasis {
    pub fn lambdas(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.lambda).collect()
    }

    pub fn summary(&self) -> Vec<ModeSummary> {
        self.modes.iter().map(|m| ModeSummary { lambda: m.lambda, multiplicity: m.multiplicity() }).collect()
    }
}

/// Analytic eigenvalue of the `j`-th frequency on a round circle.
pub fn circle_eigenvalue(circumference: f64, j: usize) -> f64 {
    (2.0 * PI * j as f64 / circumference).powi(2)
}

/// The first `j_max` eigenspaces of the cross-section Laplacian.
///
/// Round circles use the analytic spectrum (eigenspace `j` spanned by
/// `cos`, `sin` of frequency `2πj/L`). Tabulated cross-sections each
/// eigenvalue separately, from a dense symmetric eigensolve of the
/// Fourier-collocation operator.
pub fn boundary_modes(metric: &ConicMetric, j_max: usize) -> Result<ModeBasis> {
    if j_max == 0 {
        return Err(Error::Config("need at least one boundary mode".into()));
    }
    match &metric.cross_section {
        CrossSection::AnalyticCircle { circumference } => Ok(circle_modes(*circumference, j_max)),
        CrossSection::Tabulated1D(t) => tabulated_modes(t, j_max),
    }
}

fn circle_modes(l: f64, j_max: usize) -> ModeBasis {
    let mut modes = Vec::with_capacity(j_max);
    modes.push(BoundaryMode { lambda: 0.0, functions: vec![AngularFunction::Constant { value: 1.0 / l.sqrt() }] });
    let norm = (2.0 / l).sqrt();
    for j in 1..j_max {
        let omega = 2.0 * PI * j as f64 / l;
        modes.push(BoundaryMode {
            lambda: omega * omega,
            functions: vec![AngularFunction::Cos { omega, norm }, AngularFunction::Sin { omega, norm }],
        });
    }
    ModeBasis { period: l, modes, residual: 0.0 }
}

/// Fourier differentiation matrix on `n` equispaced points of `[0, period)`.
fn fourier_diff_matrix(n: usize, period: f64) -> DMatrix<f64> {
    let h = 2.0 * PI / n as f64;
    let scale = 2.0 * PI / period;
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            return 0.0;
        }
        let k = i as f64 - j as f64;
        let sign = if (i + j).is_multiple_of(2) { 1.0 } else { -1.0 };
        let v = if n.is_multiple_of(2) { 0.5 / (0.5 * k * h).tan() } else { 0.5 / (0.5 * k * h).sin() };
        scale * sign * v
    })
}

fn tabulated_modes(t: &TabulatedCircle, j_max: usize) -> Result<ModeBasis> {
    let n = t.samples().len();
    if j_max > n / 3 {
        return Err(Error::Config(format!(
            "{j_max} modes requested but {n} h0 samples resolve at most {}",
            n / 3
        )));
    }
    let period = t.period();
    // collocate on an odd grid: even grids carry a spurious Nyquist null vector
    let n = 2 * n + 1;
    let dt = period / n as f64;
    let w: Vec<f64> = (0..n).map(|i| t.sqrt_h0(i as f64 * dt)).collect();
    let d = fourier_diff_matrix(n, period);
    // Δ = -W⁻¹ D W⁻¹ D; conjugating by W^{1/2} gives the symmetric W^{-1/2} Dᵀ W⁻¹ D W^{-1/2}
    let mut b = d.clone();
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] /= w[j].sqrt() * w[i].sqrt();
        }
    }
    // b = W^{-1/2}·D·W^{-1/2}; then M = bᵀ b
    let m = b.transpose() * &b;
    let m = 0.5 * (&m + m.transpose());
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lap = |phi: &[f64]| -> Vec<f64> {
        let p = nalgebra::DVector::from_column_slice(phi);
        let mut q = &d * p;
        for i in 0..n {
            q[i] /= w[i];
        }
        let mut r = &d * q;
        for i in 0..n {
            r[i] = -r[i] / w[i];
        }
        r.iter().copied().collect()
    };
    let mut modes = Vec::with_capacity(j_max);
    let mut residual: f64 = 0.0;
    for &k in order.iter().take(j_max) {
        let lambda = eig.eigenvalues[k].max(0.0);
        let v = eig.eigenvectors.column(k);
        let mut phi: Vec<f64> = (0..n).map(|i| v[i] / (w[i].sqrt() * dt.sqrt())).collect();
        // fix the sign so the output is deterministic
        let pivot = phi.iter().copied().fold(0.0, |a: f64, b| if b.abs() > a.abs() { b } else { a });
        if pivot < 0.0 {
            phi.iter_mut().for_each(|p| *p = -*p);
        }
        let r = lap(&phi);
        let num: f64 = r.iter().zip(&phi).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        let den: f64 = phi.iter().map(|p| p * p).sum::<f64>().sqrt() * (1.0 + lambda);
        residual = residual.max(num / den);
        modes.push(BoundaryMode { lambda, functions: vec![AngularFunction::Sampled(TrigInterpolant::new(&phi, period))] });
    }
    if !(residual <= 1e-8) {
        return Err(Error::Eigensolve { residual });
    }
    Ok(ModeBasis { period, modes, residual })
}
