//! Mode-sum solutions of the wave equation on a flat cone of circumference
//! `L` with a Dirichlet wall at `x = X`.
//!
//! A state stores, for every angular frequency `ω_m = 2πm/L` and every
//! radial Dirichlet eigenfunction `R_{mk}`, the displacement and velocity
//! coefficients at `t = 0`:
//! `u(t) = Σ φ(θ) R_{mk}(x) (a cos μ_{mk} t + b sin(μ_{mk} t)/μ_{mk})`.

use std::f64::consts::PI;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ConicMetric, CrossSection};
use crate::numerics::quad::gauss_legendre;

use super::table::{BesselTable, BesselTables};

/// Mollified point source: `e^{-σ²Δ/2} δ` at `(x, θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub x: f64,
    pub theta: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// relative size of the discarded Gaussian weights
    pub tol: f64,
    /// latest time the state will be evaluated at
    pub t_final: f64,
    /// free-space distance kept between the wall and the source's
    /// domain of influence, in units of the source width
    pub margin_widths: f64,
    /// refuse to build more mode pairs than this
    pub max_pairs: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-12, t_final: 1.0, margin_widths: 12.0, max_pairs: 4_000_000 }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Coeffs {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Coeffs {
    fn zeros(n: usize) -> Self {
        Self { a: vec![0.0; n], b: vec![0.0; n] }
    }
}

/// All radial modes of one angular frequency. For `m = 0` only `cos` is
/// used (the constant function).
#[derive(Debug, Clone, PartialEq)]
pub struct ModeBlock {
    pub m: usize,
    pub nu: f64,
    pub omega: f64,
    pub mu: Vec<f64>,
    pub inv_norm: Vec<f64>,
    pub cos: Coeffs,
    pub sin: Coeffs,
}

impl ModeBlock {
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }
}

/// How far the truncated sums are from the full ones.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub mu_max: f64,
    pub nu_max: f64,
    pub modes: usize,
    pub pairs: usize,
    /// Gaussian weight at the first discarded radial eigenvalue
    pub radial_tail: f64,
    /// source norm in the last kept angular block relative to the largest
    pub angular_tail: f64,
    /// integral of the mollified source (1 for a point source), or the
    /// squared-norm tail for projected data
    pub source_mass: f64,
}

#[derive(Debug, Clone)]
pub struct WaveState {
    pub circumference: f64,
    pub x_max: f64,
    pub source: Option<SourceSpec>,
    pub certificate: Certificate,
    pub blocks: Vec<ModeBlock>,
    tables: BesselTables,
}

/// `2π/L`, snapped to a nearby small-denominator rational so that orders
/// with equal fractional parts share a recurrence family.
fn frequency_ratio(circumference: f64) -> (f64, Option<(u64, u64)>) {
    let ratio = 2.0 * PI / circumference;
    for q in 1..=12u64 {
        let p = (ratio * q as f64).round();
        if p >= 1.0 && (ratio * q as f64 - p).abs() < 1e-11 * p {
            return (p / q as f64, Some((p as u64, q)));
        }
    }
    (ratio, None)
}

fn order_of(m: usize, ratio: f64, rational: Option<(u64, u64)>) -> f64 {
    match rational {
        Some((p, q)) => (m as u64 * p) as f64 / q as f64,
        None => m as f64 * ratio,
    }
}

fn check_model(metric: &ConicMetric) -> Result<f64> {
    if metric.n != 2 {
        return Err(Error::Config(format!("mode-sum solver needs n = 2 (got {})", metric.n)));
    }
    if !metric.is_product() {
        return Err(Error::Config("mode-sum solver needs an exact product cone".into()));
    }
    match &metric.cross_section {
        CrossSection::AnalyticCircle { circumference } => Ok(*circumference),
        _ => Err(Error::Config("mode-sum solver needs a round cross-section".into())),
    }
}

/// Angular normalisation `1/√L` for `m = 0`, `√(2/L)` otherwise.
pub fn angular_norm(m: usize, circumference: f64) -> f64 {
    if m == 0 {
        1.0 / circumference.sqrt()
    } else {
        (2.0 / circumference).sqrt()
    }
}

/// Zeros, inverse norms for one order, from its table.
fn radial_spectrum(table: &BesselTable, x_max: f64, mu_max: f64) -> (Vec<f64>, Vec<f64>) {
    let zeros = table.zeros_below(mu_max * x_max);
    let mu = zeros.iter().map(|j| j / x_max).collect();
    let inv_norm = zeros
        .iter()
        .map(|&j| std::f64::consts::SQRT_2 / (x_max * table.eval_with_deriv(j).1.abs()))
        .collect();
    (mu, inv_norm)
}

/// Estimated number of Dirichlet pairs with `μ ≤ μ_max` over `m ≤ m_max`.
fn estimated_pairs(m_max: usize, ratio: f64, x_max: f64, mu_max: f64) -> usize {
    (0..=m_max)
        .map(|m| ((mu_max * x_max - m as f64 * ratio).max(0.0) / PI) as usize + 1)
        .sum()
}

/// Mode-sum fundamental solution `sin(t√Δ)/√Δ` applied to the mollified
/// point source on the model cone `metric` (wall at `metric.x_max`).
pub fn fundamental_solution(metric: &ConicMetric, source: SourceSpec, opts: &SolverOptions) -> Result<WaveState> {
    let circumference = check_model(metric)?;
    let x_max = metric.x_max;
    if !(source.sigma > 0.0) || !(source.x >= 0.0) || source.x >= x_max || !source.theta.is_finite() {
        return Err(Error::Config(format!(
            "source must sit inside the cone with positive width (x={}, sigma={})",
            source.x, source.sigma
        )));
    }
    if !(opts.tol > 0.0 && opts.tol < 1.0) {
        return Err(Error::Config(format!("tolerance must lie in (0, 1) (got {})", opts.tol)));
    }
    let margin = opts.margin_widths * source.sigma;
    if opts.t_final + source.x + margin > x_max {
        return Err(Error::CausalMargin {
            t_final: opts.t_final,
            suggested_x_max: (opts.t_final + source.x + margin) * 1.25,
        });
    }
    let (ratio, rational) = frequency_ratio(circumference);
    let gauss = (2.0 * (1.0 / opts.tol).ln()).sqrt();
    let mu_max = gauss / source.sigma;
    // J_ν(μ x̄) is negligible once ν exceeds μ x̄ past the Airy transition
    let z_src = mu_max * source.x;
    let nu_cut = if source.x == 0.0 { 0.0 } else { z_src + 12.0 * z_src.cbrt() + 15.0 };
    let m_max = (nu_cut / ratio).floor() as usize;
    let pairs = estimated_pairs(m_max, ratio, x_max, mu_max);
    if pairs > opts.max_pairs {
        return Err(Error::Truncation { tail: pairs as f64, limit: opts.max_pairs as f64 });
    }
    let nus: Vec<f64> = (0..=m_max).map(|m| order_of(m, ratio, rational)).collect();
    let tables = BesselTables::build(&nus, mu_max * x_max + 8.0)?;

    let mut blocks = Vec::with_capacity(nus.len());
    let mut block_norms = Vec::with_capacity(nus.len());
    let mut radial_tail: f64 = 0.0;
    for (m, &nu) in nus.iter().enumerate() {
        let table = tables.get(nu).expect("table built for every order");
        let (mu, inv_norm) = radial_spectrum(table, x_max, mu_max);
        let n = mu.len();
        let omega = m as f64 * 2.0 * PI / circumference;
        let an = angular_norm(m, circumference);
        let (wc, ws) = if m == 0 {
            (an, 0.0)
        } else {
            (an * (omega * source.theta).cos(), an * (omega * source.theta).sin())
        };
        let mut cos = Coeffs::zeros(n);
        let mut sin = if m == 0 { Coeffs::default() } else { Coeffs::zeros(n) };
        let mut norm2 = 0.0;
        for k in 0..n {
            let r_src = if source.x == 0.0 {
                if nu == 0.0 { inv_norm[k] } else { 0.0 }
            } else {
                inv_norm[k] * table.eval(mu[k] * source.x)
            };
            let weight = (-0.5 * (source.sigma * mu[k]).powi(2)).exp() * r_src;
            cos.b[k] = wc * weight;
            if m > 0 {
                sin.b[k] = ws * weight;
            }
            norm2 += weight * weight;
        }
        // first discarded eigenvalue lies within π/X of the last kept one
        let next_mu = mu.last().map_or(mu_max, |v| v + PI / x_max).max(mu_max);
        radial_tail = radial_tail.max((-0.5 * (source.sigma * next_mu).powi(2)).exp());
        block_norms.push(norm2.sqrt());
        blocks.push(ModeBlock { m, nu, omega, mu, inv_norm, cos, sin });
    }
    let peak = block_norms.iter().copied().fold(0.0, f64::max);
    let angular_tail = if peak > 0.0 { block_norms.last().copied().unwrap_or(0.0) / peak } else { 0.0 };

    // ∫ R_{0k} x dx = inv_norm X J_1(j_k)/μ_k and J_1(j) = -J_0'(j)
    let b0 = &blocks[0];
    let t0 = tables.get(0.0).expect("order zero present");
    let mut mass = 0.0;
    for k in 0..b0.len() {
        let j = b0.mu[k] * x_max;
        let j1 = -t0.eval_with_deriv(j).1;
        mass += b0.cos.b[k] * circumference.sqrt() * b0.inv_norm[k] * x_max * j1 / b0.mu[k];
    }
    let pairs = blocks.iter().map(|b| b.len()).sum();
    let certificate = Certificate {
        mu_max,
        nu_max: *nus.last().unwrap_or(&0.0),
        modes: blocks.len(),
        pairs,
        radial_tail,
        angular_tail,
        source_mass: mass,
    };
    Ok(WaveState { circumference, x_max, source: Some(source), certificate, blocks, tables })
}

#[derive(Debug, Clone, Copy)]
pub struct ProjectionOptions {
    pub m_max: usize,
    pub mu_max: f64,
    /// largest accepted relative squared-norm tail
    pub tail_limit: f64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self { m_max: 32, mu_max: 60.0, tail_limit: 1e-8 }
    }
}

/// Projects initial data `(u, u_t)` on the model cone onto the mode basis.
pub fn project_initial_data(
    metric: &ConicMetric,
    u0: impl Fn(f64, f64) -> f64,
    u1: impl Fn(f64, f64) -> f64,
    opts: &ProjectionOptions,
) -> Result<WaveState> {
    let circumference = check_model(metric)?;
    let x_max = metric.x_max;
    let (ratio, rational) = frequency_ratio(circumference);
    let nus: Vec<f64> = (0..=opts.m_max).map(|m| order_of(m, ratio, rational)).collect();
    let tables = BesselTables::build(&nus, opts.mu_max * x_max + 8.0)?;

    let panels = (opts.mu_max * x_max / 2.0).ceil() as usize + 16;
    let (gx, gw) = gauss_legendre(16);
    let h = x_max / panels as f64;
    let mut xq = Vec::new();
    let mut wq = Vec::new();
    for p in 0..panels {
        for (x, w) in gx.iter().zip(&gw) {
            let xx = p as f64 * h + 0.5 * h * (x + 1.0);
            xq.push(xx);
            wq.push(0.5 * h * w * xx);
        }
    }
    let ntheta = (4 * opts.m_max + 64).max(128);
    let dth = circumference / ntheta as f64;
    let thetas: Vec<f64> = (0..ntheta).map(|j| j as f64 * dth).collect();
    // angular coefficients at each quadrature radius: [q][m] for cos and sin
    let nm = nus.len();
    let mut norm2 = [0.0f64; 2];
    let mut ang = [vec![0.0; xq.len() * nm], vec![0.0; xq.len() * nm]];
    let mut ang_s = [vec![0.0; xq.len() * nm], vec![0.0; xq.len() * nm]];
    for (q, &x) in xq.iter().enumerate() {
        for (d, f) in [&u0 as &dyn Fn(f64, f64) -> f64, &u1].into_iter().enumerate() {
            let vals: Vec<f64> = thetas.iter().map(|&th| f(x, th)).collect();
            norm2[d] += wq[q] * vals.iter().map(|v| v * v).sum::<f64>() * dth;
            for m in 0..nm {
                let omega = m as f64 * 2.0 * PI / circumference;
                let an = angular_norm(m, circumference);
                let mut c = 0.0;
                let mut s = 0.0;
                for (v, &th) in vals.iter().zip(&thetas) {
                    c += v * (omega * th).cos();
                    s += v * (omega * th).sin();
                }
                ang[d][q * nm + m] = c * an * dth;
                ang_s[d][q * nm + m] = s * an * dth;
            }
        }
    }
    let mut blocks = Vec::with_capacity(nm);
    let mut captured = [0.0f64; 2];
    for (m, &nu) in nus.iter().enumerate() {
        let table = tables.get(nu).expect("table built for every order");
        let (mu, inv_norm) = radial_spectrum(table, x_max, opts.mu_max);
        let n = mu.len();
        let mut cos = Coeffs::zeros(n);
        let mut sin = if m == 0 { Coeffs::default() } else { Coeffs::zeros(n) };
        for k in 0..n {
            let mut acc = [0.0f64; 4];
            for (q, &x) in xq.iter().enumerate() {
                let r = wq[q] * inv_norm[k] * table.eval(mu[k] * x);
                acc[0] += r * ang[0][q * nm + m];
                acc[1] += r * ang[1][q * nm + m];
                acc[2] += r * ang_s[0][q * nm + m];
                acc[3] += r * ang_s[1][q * nm + m];
            }
            cos.a[k] = acc[0];
            cos.b[k] = acc[1];
            captured[0] += acc[0] * acc[0];
            captured[1] += acc[1] * acc[1];
            if m > 0 {
                sin.a[k] = acc[2];
                sin.b[k] = acc[3];
                captured[0] += acc[2] * acc[2];
                captured[1] += acc[3] * acc[3];
            }
        }
        let omega = m as f64 * 2.0 * PI / circumference;
        blocks.push(ModeBlock { m, nu, omega, mu, inv_norm, cos, sin });
    }
    let tail = (0..2)
        .map(|d| if norm2[d] > 0.0 { ((norm2[d] - captured[d]) / norm2[d]).max(0.0) } else { 0.0 })
        .fold(0.0, f64::max);
    if tail > opts.tail_limit {
        return Err(Error::Truncation { tail, limit: opts.tail_limit });
    }
    let pairs = blocks.iter().map(|b| b.len()).sum();
    let certificate = Certificate {
        mu_max: opts.mu_max,
        nu_max: *nus.last().unwrap_or(&0.0),
        modes: blocks.len(),
        pairs,
        radial_tail: tail,
        angular_tail: 0.0,
        source_mass: tail,
    };
    Ok(WaveState { circumference, x_max, source: None, certificate, blocks, tables })
}

/// Interpolation grid for [`WaveState::values_at`].
#[derive(Debug, Clone, Copy)]
pub struct ProfileGrid {
    pub step: f64,
}

#[derive(Serialize, Deserialize)]
struct BlockMeta {
    m: usize,
    nu: f64,
    omega: f64,
    len: usize,
    file: String,
}

#[derive(Serialize, Deserialize)]
struct StateMeta {
    format: String,
    circumference: f64,
    x_max: f64,
    source: Option<SourceSpec>,
    certificate: Certificate,
    table_range: f64,
    blocks: Vec<BlockMeta>,
}

const STATE_FORMAT: &str = "conelab-wave-state-1";

impl WaveState {
    fn table(&self, block: &ModeBlock) -> &BesselTable {
        self.tables.get(block.nu).expect("table built for every order")
    }

    fn angular(&self, block: &ModeBlock, theta: f64) -> (f64, f64) {
        let an = angular_norm(block.m, self.circumference);
        if block.m == 0 {
            (an, 0.0)
        } else {
            (an * (block.omega * theta).cos(), an * (block.omega * theta).sin())
        }
    }

    /// Per-pair coefficients `(p, q)` with `u(t) = Σ p cos μt + q sin μt`
    /// at the point `(x, θ)`, in a fixed block-major order.
    fn point_factors(&self, x: f64, theta: f64) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.certificate.pairs);
        for block in &self.blocks {
            let table = self.table(block);
            let (fc, fs) = self.angular(block, theta);
            for k in 0..block.len() {
                let r = if x == 0.0 {
                    if block.nu == 0.0 { block.inv_norm[k] } else { 0.0 }
                } else {
                    block.inv_norm[k] * table.eval(block.mu[k] * x)
                };
                if r == 0.0 {
                    continue;
                }
                let mut a = fc * block.cos.a[k];
                let mut b = fc * block.cos.b[k];
                if block.m > 0 {
                    a += fs * block.sin.a[k];
                    b += fs * block.sin.b[k];
                }
                out.push((block.mu[k], r * a, r * b / block.mu[k]));
            }
        }
        out
    }

    pub fn value(&self, t: f64, x: f64, theta: f64) -> f64 {
        self.point_factors(x, theta)
            .iter()
            .map(|&(mu, p, q)| p * (mu * t).cos() + q * (mu * t).sin())
            .sum()
    }

    /// `u(t0 + j dt, x, θ)` for `j < count`.
    pub fn time_series(&self, x: f64, theta: f64, t0: f64, dt: f64, count: usize) -> Vec<f64> {
        let mut out = vec![0.0; count];
        for (mu, p, q) in self.point_factors(x, theta) {
            let (mut s, mut c) = (mu * t0).sin_cos();
            let (sd, cd) = (mu * dt).sin_cos();
            for v in out.iter_mut() {
                *v += p * c + q * s;
                let cn = c * cd - s * sd;
                s = s * cd + c * sd;
                c = cn;
            }
        }
        out
    }

    /// Radial coefficient of every basis pair at time `t` as
    /// `(block, k, cos-part, sin-part)`.
    fn coefficients_at(&self, t: f64) -> Vec<(Vec<f64>, Vec<f64>)> {
        self.blocks
            .iter()
            .map(|b| {
                let eval = |c: &Coeffs| -> Vec<f64> {
                    c.a.iter()
                        .zip(&c.b)
                        .zip(&b.mu)
                        .map(|((a, bb), mu)| a * (mu * t).cos() + bb * (mu * t).sin() / mu)
                        .collect()
                };
                (eval(&b.cos), if b.m == 0 { Vec::new() } else { eval(&b.sin) })
            })
            .collect()
    }

    /// `Σ c(t)²`, the squared `L²` norm of the field by Parseval.
    pub fn coefficient_norm2(&self, t: f64) -> f64 {
        self.coefficients_at(t)
            .iter()
            .map(|(c, s)| c.iter().chain(s.iter()).map(|v| v * v).sum::<f64>())
            .sum()
    }

    /// `½ Σ (ċ² + μ² c²)`.
    pub fn energy(&self, t: f64) -> f64 {
        let mut e = 0.0;
        for b in &self.blocks {
            for part in [&b.cos, &b.sin] {
                for ((a, bb), mu) in part.a.iter().zip(&part.b).zip(&b.mu) {
                    let c = a * (mu * t).cos() + bb * (mu * t).sin() / mu;
                    let v = -a * mu * (mu * t).sin() + bb * (mu * t).cos();
                    e += 0.5 * (v * v + mu * mu * c * c);
                }
            }
        }
        e
    }

    /// Angular profiles `(F_cos, F_sin)` of every block at time `t` on the
    /// radial grid `xs`, with their radial derivatives.
    fn profiles(&self, t: f64, xs: &[f64]) -> Vec<[Vec<f64>; 4]> {
        let coeffs = self.coefficients_at(t);
        self.blocks
            .iter()
            .zip(&coeffs)
            .map(|(b, (cc, cs))| {
                let table = self.table(b);
                let mut out = [vec![0.0; xs.len()], vec![0.0; xs.len()], vec![0.0; xs.len()], vec![0.0; xs.len()]];
                for (i, &x) in xs.iter().enumerate() {
                    for k in 0..b.len() {
                        let (j, dj) = if x == 0.0 {
                            (if b.nu == 0.0 { 1.0 } else { 0.0 }, 0.0)
                        } else {
                            table.eval_with_deriv(b.mu[k] * x)
                        };
                        let r = b.inv_norm[k] * j;
                        let dr = b.inv_norm[k] * b.mu[k] * dj;
                        out[0][i] += cc[k] * r;
                        out[2][i] += cc[k] * dr;
                        if b.m > 0 {
                            out[1][i] += cs[k] * r;
                            out[3][i] += cs[k] * dr;
                        }
                    }
                }
                out
            })
            .collect()
    }

    /// Angular profiles `(m, F_cos, F_sin)` at time `t` on the radial grid
    /// `xs`, with `u = Σ φ_m^c(θ) F_cos + φ_m^s(θ) F_sin` in the orthonormal
    /// angular basis (`F_sin` is zero for `m = 0`).
    pub fn angular_profiles(&self, t: f64, xs: &[f64]) -> Vec<(usize, Vec<f64>, Vec<f64>)> {
        self.profiles(t, xs)
            .into_iter()
            .zip(&self.blocks)
            .map(|([c, s, _, _], b)| (b.m, c, s))
            .collect()
    }

    /// `u(t)` at many points `(x, θ)`: radial profiles are tabulated on a
    /// grid of spacing `grid.step` and interpolated by cubic Hermite
    /// polynomials; points within two cells of the tip are summed exactly.
    pub fn values_at(&self, t: f64, points: &[(f64, f64)], grid: ProfileGrid) -> Result<Vec<f64>> {
        if !(grid.step > 0.0) {
            return Err(Error::Config(format!("profile step must be positive (got {})", grid.step)));
        }
        let x_hi = points.iter().fold(0.0f64, |m, p| m.max(p.0));
        if x_hi > self.x_max {
            return Err(Error::Domain(format!("point at x={x_hi} lies beyond the wall x={}", self.x_max)));
        }
        let cells = ((x_hi / grid.step).ceil() as usize).max(2);
        let h = grid.step;
        let xs: Vec<f64> = (0..=cells).map(|i| i as f64 * h).collect();
        let profiles = self.profiles(t, &xs);
        let base = 2.0 * PI / self.circumference;
        let mut out = Vec::with_capacity(points.len());
        for &(x, theta) in points {
            if x < 2.0 * h {
                out.push(self.value(t, x, theta));
                continue;
            }
            let i = ((x / h).floor() as usize).min(cells - 1);
            let s = (x - xs[i]) / h;
            let (h00, h10, h01, h11) = (
                (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
                s * (1.0 - s) * (1.0 - s),
                s * s * (3.0 - 2.0 * s),
                s * s * (s - 1.0),
            );
            let interp = |v: &[f64], d: &[f64]| h00 * v[i] + h10 * h * d[i] + h01 * v[i + 1] + h11 * h * d[i + 1];
            // cos/sin of mαθ by rotation
            let (sa, ca) = (base * theta).sin_cos();
            let (mut sm, mut cm) = (0.0f64, 1.0f64);
            let mut acc = 0.0;
            let mut m_prev = 0usize;
            for (b, p) in self.blocks.iter().zip(&profiles) {
                while m_prev < b.m {
                    let cn = cm * ca - sm * sa;
                    sm = sm * ca + cm * sa;
                    cm = cn;
                    m_prev += 1;
                }
                let an = angular_norm(b.m, self.circumference);
                acc += an * cm * interp(&p[0], &p[2]);
                if b.m > 0 {
                    acc += an * sm * interp(&p[1], &p[3]);
                }
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// The state evolved by `shift` (negative shifts run backwards).
    pub fn time_shifted(&self, shift: f64) -> WaveState {
        let mut out = self.clone();
        for b in out.blocks.iter_mut() {
            let mu = b.mu.clone();
            for part in [&mut b.cos, &mut b.sin] {
                for ((a, bb), m) in part.a.iter_mut().zip(part.b.iter_mut()).zip(&mu) {
                    let (s, c) = (m * shift).sin_cos();
                    let na = *a * c + *bb * s / m;
                    let nb = -*a * m * s + *bb * c;
                    *a = na;
                    *bb = nb;
                }
            }
        }
        out.source = None;
        out
    }

    /// `u(-t)`: velocities change sign.
    pub fn time_reversed(&self) -> WaveState {
        let mut out = self.clone();
        for b in out.blocks.iter_mut() {
            for part in [&mut b.cos, &mut b.sin] {
                part.b.iter_mut().for_each(|v| *v = -*v);
            }
        }
        out.source = None;
        out
    }

    fn table_range(&self) -> f64 {
        let mu_top = self.blocks.iter().filter_map(|b| b.mu.last()).fold(0.0f64, |m, v| m.max(*v));
        mu_top * self.x_max + 8.0
    }

    /// Writes `state.json` and one little-endian `f64` file per block
    /// (`mu, inv_norm, cos.a, cos.b, sin.a, sin.b`, each of block length;
    /// the sine arrays are zero for `m = 0`).
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut metas = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let file = format!("mode_{:05}.bin", b.m);
            let n = b.len();
            let zeros = vec![0.0; n];
            let sin_a = if b.m == 0 { &zeros } else { &b.sin.a };
            let sin_b = if b.m == 0 { &zeros } else { &b.sin.b };
            let mut bytes = Vec::with_capacity(6 * n * 8);
            for arr in [&b.mu, &b.inv_norm, &b.cos.a, &b.cos.b, sin_a, sin_b] {
                for v in arr.iter() {
                    bytes.extend_from_slice(&v.to_le_bytes());
                }
            }
            let mut f = fs::File::create(dir.join(&file))?;
            f.write_all(&bytes)?;
            metas.push(BlockMeta { m: b.m, nu: b.nu, omega: b.omega, len: n, file });
        }
        let meta = StateMeta {
            format: STATE_FORMAT.into(),
            circumference: self.circumference,
            x_max: self.x_max,
            source: self.source,
            certificate: self.certificate,
            table_range: self.table_range(),
            blocks: metas,
        };
        fs::write(dir.join("state.json"), serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<WaveState> {
        let meta: StateMeta = serde_json::from_str(&fs::read_to_string(dir.join("state.json"))?)?;
        if meta.format != STATE_FORMAT {
            return Err(Error::Parse(format!("unknown state format '{}'", meta.format)));
        }
        let mut blocks = Vec::with_capacity(meta.blocks.len());
        for bm in &meta.blocks {
            let bytes = fs::read(dir.join(&bm.file))?;
            if bytes.len() != 6 * bm.len * 8 {
                return Err(Error::Parse(format!(
                    "{}: expected {} bytes, found {}",
                    bm.file,
                    6 * bm.len * 8,
                    bytes.len()
                )));
            }
            let vals: Vec<f64> =
                bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
            let part = |i: usize| vals[i * bm.len..(i + 1) * bm.len].to_vec();
            let sin = if bm.m == 0 { Coeffs::default() } else { Coeffs { a: part(4), b: part(5) } };
            blocks.push(ModeBlock {
                m: bm.m,
                nu: bm.nu,
                omega: bm.omega,
                mu: part(0),
                inv_norm: part(1),
                cos: Coeffs { a: part(2), b: part(3) },
                sin,
            });
        }
        let nus: Vec<f64> = blocks.iter().map(|b| b.nu).collect();
        let tables = BesselTables::build(&nus, meta.table_range)?;
        Ok(WaveState {
            circumference: meta.circumference,
            x_max: meta.x_max,
            source: meta.source,
            certificate: meta.certificate,
            blocks,
            tables,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::kernels::{mollified_plane_kernel, polar_distance};

    fn plane(x_max: f64) -> ConicMetric {
        ConicMetric::model(2.0 * PI, x_max).unwrap()
    }

    #[test]
    fn matches_mollified_plane_kernel() {
        let src = SourceSpec { x: 1.0, theta: 0.3, sigma: 0.08 };
        let opts = SolverOptions { t_final: 1.2, ..Default::default() };
        let st = fundamental_solution(&plane(4.0), src, &opts).unwrap();
        assert!((st.certificate.source_mass - 1.0).abs() < 1e-10, "mass {}", st.certificate.source_mass);
        for &(x, th) in &[(0.5, 0.1), (1.5, 2.0), (0.2, 3.5), (2.1, 0.3)] {
            let t = 1.0;
            let d = polar_distance(x, th, src.x, src.theta);
            let expect = mollified_plane_kernel(t, d, src.sigma);
            let got = st.value(t, x, th);
            assert!((got - expect).abs() < 1e-9, "({x},{th}): {got} vs {expect}");
        }
    }

    #[test]
    fn rejects_wall_inside_domain_of_influence() {
        let src = SourceSpec { x: 1.0, theta: 0.0, sigma: 0.05 };
        let opts = SolverOptions { t_final: 3.0, ..Default::default() };
        match fundamental_solution(&plane(3.5), src, &opts) {
            Err(Error::CausalMargin { suggested_x_max, .. }) => assert!(suggested_x_max > 4.6),
            other => panic!("expected causal margin error, got {other:?}"),
        }
    }

    #[test]
    fn interpolated_values_and_series_agree_with_direct_sum() {
        let src = SourceSpec { x: 1.0, theta: 0.0, sigma: 0.1 };
        let metric = ConicMetric::model(4.0 * PI, 4.0).unwrap();
        let st = fundamental_solution(&metric, src, &SolverOptions { t_final: 1.5, ..Default::default() }).unwrap();
        let pts = [(0.05, 1.0), (0.5, 6.2), (1.3, 0.4), (2.0, 9.0)];
        let vals = st.values_at(0.9, &pts, ProfileGrid { step: 0.005 }).unwrap();
        for (p, v) in pts.iter().zip(&vals) {
            let direct = st.value(0.9, p.0, p.1);
            assert!((v - direct).abs() < 1e-6 * (1.0 + direct.abs()), "{p:?}: {v} vs {direct}");
        }
        let ts = st.time_series(0.5, 6.2, 0.2, 0.01, 120);
        for j in [0usize, 37, 119] {
            let direct = st.value(0.2 + j as f64 * 0.01, 0.5, 6.2);
            assert!((ts[j] - direct).abs() < 1e-11);
        }
    }

    #[test]
    fn persistence_round_trip_is_exact() {
        let src = SourceSpec { x: 0.8, theta: 1.0, sigma: 0.2 };
        let st = fundamental_solution(&plane(4.5), src, &SolverOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        st.save(dir.path()).unwrap();
        let back = WaveState::load(dir.path()).unwrap();
        assert_eq!(back.blocks, st.blocks);
        assert_eq!(back.certificate, st.certificate);
        assert_eq!(back.value(0.7, 1.1, 0.4), st.value(0.7, 1.1, 0.4));
    }

    #[test]
    fn time_shift_composes() {
        let src = SourceSpec { x: 0.0, theta: 0.0, sigma: 0.15 };
        let st = fundamental_solution(&plane(4.0), src, &SolverOptions::default()).unwrap();
        let shifted = st.time_shifted(0.6);
        assert!((shifted.value(0.3, 0.7, 0.0) - st.value(0.9, 0.7, 0.0)).abs() < 1e-12);
        let rev = st.time_reversed();
        assert!((rev.value(0.5, 0.2, 0.0) + st.value(0.5, 0.2, 0.0)).abs() < 1e-14);
    }

    #[test]
    fn projection_reproduces_a_bump() {
        let metric = ConicMetric::model(4.0 * PI, 4.0).unwrap();
        let bump = |x: f64, th: f64| {
            let d2 = x * x + 1.0 - 2.0 * x * (th - 1.0).cos();
            (-d2 / (2.0 * 0.3f64.powi(2))).exp()
        };
        let opts = ProjectionOptions { m_max: 40, mu_max: 40.0, tail_limit: 1e-8 };
        let st = project_initial_data(&metric, bump, |_, _| 0.0, &opts).unwrap();
        for &(x, th) in &[(1.0, 1.0), (1.2, 0.8), (0.5, 2.0)] {
            assert!((st.value(0.0, x, th) - bump(x, th)).abs() < 1e-5);
        }
    }
}
