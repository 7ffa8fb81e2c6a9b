//! Distance-to-tip coordinates for collar metrics.
//!
//! The short geodesic from a point to the tip is found by shooting in the
//! b-rescaled unit cosphere bundle, where the tip becomes a hyperbolic rest
//! point and tip-reaching geodesics form its stable manifold.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::collar::CollarMetric;
use crate::numerics::ode::{integrate, locate_event, Control, OdeOptions};

#[derive(Debug, Clone, Copy)]
pub struct NormalFormOptions {
    /// Bound on `|g_ρρ − 1|` and `|g_ρυ|/ρ` over the collar.
    pub smallness_bound: f64,
    /// Coarse scan points for the initial angular covector.
    pub scan_points: usize,
    /// Step of the finite-difference Jacobian in the Gauss-lemma check.
    pub jacobian_step: f64,
    pub rtol: f64,
}

impl Default for NormalFormOptions {
    fn default() -> Self {
        Self { smallness_bound: 1e-2, scan_points: 41, jacobian_step: 1e-3, rtol: 1e-13 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalFormDiagnostics {
    /// `g(∂_x, ∂_y)` of the metric re-expressed in `(x, y)`.
    pub cross_term: f64,
    /// `|g(∂_x, ∂_x) − 1|`.
    pub radial_defect: f64,
    /// Residual closest approach of the selected geodesic.
    pub closest_approach: f64,
    pub effective_rho_max: f64,
    pub shooting_parameter: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalFormPoint {
    pub x: f64,
    pub y: f64,
    pub diagnostics: NormalFormDiagnostics,
}

struct Shot {
    objective: f64,
    /// `(υ, arc)` at the two recording radii, if reached.
    records: [Option<(f64, f64)>; 2],
}

/// Coefficients `(A, B, C)` and their `ρ`, `υ` derivatives.
fn coefficients(metric: &CollarMetric, rho: f64, ups: f64) -> ([f64; 3], [f64; 3], [f64; 3]) {
    let base = metric.b_inverse(rho, ups);
    let d = 1e-4;
    let diff = |f: &dyn Fn(f64) -> [f64; 3]| {
        let (p1, m1, p2, m2) = (f(d), f(-d), f(2.0 * d), f(-2.0 * d));
        let mut out = [0.0; 3];
        for k in 0..3 {
            out[k] = (8.0 * (p1[k] - m1[k]) - (p2[k] - m2[k])) / (12.0 * d);
        }
        out
    };
    let dr = diff(&|o| metric.b_inverse(rho + o, ups));
    let du = diff(&|o| metric.b_inverse(rho, ups + o));
    (base, dr, du)
}

fn field(metric: &CollarMetric, s: &[f64; 5]) -> [f64; 5] {
    let [rho, ups, xi, eta, _] = *s;
    let ([a, b, c], [ar, br, cr], [au, bu, cu]) = coefficients(metric, rho, ups);
    let q = a * xi * xi + 2.0 * b * xi * eta + c * eta * eta;
    let g = a * xi + b * eta;
    let q_r = ar * xi * xi + 2.0 * br * xi * eta + cr * eta * eta;
    let q_u = au * xi * xi + 2.0 * bu * xi * eta + cu * eta * eta;
    [rho * g, b * xi + c * eta, q - 0.5 * rho * q_r - xi * g, -0.5 * q_u - eta * g, rho]
}

fn initial_xi(metric: &CollarMetric, rho: f64, ups: f64, eta: f64) -> Option<f64> {
    let [a, b, c] = metric.b_inverse(rho, ups);
    let disc = b * b * eta * eta - a * (c * eta * eta - 1.0);
    (disc >= 0.0).then(|| (-b * eta - disc.sqrt()) / a)
}

fn eta_limit(metric: &CollarMetric, rho: f64, ups: f64) -> f64 {
    let [a, b, c] = metric.b_inverse(rho, ups);
    (a / (a * c - b * b)).sqrt()
}

fn shoot(metric: &CollarMetric, rho0: f64, ups0: f64, eta: f64, rtol: f64) -> Shot {
    let Some(xi) = initial_xi(metric, rho0, ups0, eta) else {
        return Shot { objective: rho0, records: [None, None] };
    };
    let levels = [2e-6 * rho0, 1e-6 * rho0];
    let stop = 1e-9 * rho0;
    let opts = OdeOptions { rtol, atol: rtol * 1e-2, h_init: 1e-2, h_max: 0.5, ..OdeOptions::default() };
    let mut records = [None, None];
    let mut objective = f64::NAN;
    let mut min_rho = rho0;
    let f = |_s: f64, y: &[f64; 5]| field(metric, y);
    let out = integrate(f, 0.0, [rho0, ups0, xi, eta, 0.0], 200.0, &opts, |step| {
        for (k, &lv) in levels.iter().enumerate() {
            if records[k].is_none() && step.y0[0] > lv && step.y1[0] <= lv {
                let (_, y) = locate_event(step, |y| y[0] - lv);
                records[k] = Some((y[1], y[4]));
            }
        }
        let g0 = field(metric, &step.y0)[0];
        let g1 = field(metric, &step.y1)[0];
        if g0 < 0.0 && g1 >= 0.0 {
            // turned around before reaching the tip
            let (_, y) = locate_event(step, |y| field(metric, y)[0]);
            objective = y[0];
            return Control::Stop;
        }
        min_rho = min_rho.min(step.y1[0]);
        if step.y1[0] <= stop {
            let [_, _, c] = metric.b_inverse(step.y1[0], step.y1[1]);
            // distance at which a geodesic with this angular momentum would turn
            objective = (step.y1[3] * step.y1[0]).abs() * c.sqrt();
            return Control::Stop;
        }
        if step.y1[0] > 4.0 * rho0 {
            objective = min_rho;
            return Control::Stop;
        }
        Control::Continue
    });
    if objective.is_nan() {
        objective = out.y[0].min(min_rho);
    }
    Shot { objective, records }
}

/// Shrinks the collar until the smallness bound holds.
pub fn effective_collar(metric: &CollarMetric, bound: f64) -> f64 {
    let mut r = metric.rho_max;
    for _ in 0..60 {
        if metric.smallness(r) <= bound {
            return r;
        }
        r *= 0.5;
    }
    r
}

/// Distance-to-tip `x` and limiting boundary coordinate `y` of `(ρ, υ)`,
/// without the Gauss-lemma diagnostic.
pub fn normal_form_coordinates(
    metric: &CollarMetric,
    rho: f64,
    upsilon: f64,
    opts: &NormalFormOptions,
) -> Result<(f64, f64, f64, f64)> {
    if !(rho > 0.0) {
        return Err(Error::Domain(format!("normal form needs ρ > 0, got {rho}")));
    }
    let lim = 0.5 * eta_limit(metric, rho, upsilon);
    let n = opts.scan_points.max(5) | 1;
    let grid: Vec<f64> = (0..n).map(|k| lim * (2.0 * k as f64 / (n - 1) as f64 - 1.0)).collect();
    let objective = |eta: f64| shoot(metric, rho, upsilon, eta, opts.rtol).objective;
    let values: Vec<f64> = grid.iter().map(|&e| objective(e)).collect();
    // best scan point; ties go to the smallest |η|
    let mut best = 0;
    for k in 1..n {
        let better = values[k] < values[best]
            || (values[k] == values[best] && grid[k].abs() < grid[best].abs());
        if better {
            best = k;
        }
    }
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(n - 1)]);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    for _ in 0..200 {
        if (b - a).abs() <= 4e-16 * lim.max(1.0) {
            break;
        }
        if fc < fd || (fc == fd && c.abs() <= d.abs()) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = objective(d);
        }
    }
    let eta = if fc <= fd { c } else { d };
    let shot = shoot(metric, rho, upsilon, eta, opts.rtol);
    let closest = shot.objective;
    match shot.records {
        [Some((u1, a1)), Some((u2, a2))] => {
            let (r1, r2) = (2e-6 * rho, 1e-6 * rho);
            // remaining length to the tip is ≈ ρ; extrapolate the O(ρ) error away
            let x1 = a1 + r1;
            let x2 = a2 + r2;
            let x = 2.0 * x2 - x1;
            let y = 2.0 * u2 - u1;
            Ok((x, y, closest, eta))
        }
        _ => Err(Error::NoConvergence {
            message: format!("no tip-reaching geodesic from (ρ={rho}, υ={upsilon})"),
            closest_approach: closest,
        }),
    }
}

/// Normal-form coordinates with the Gauss-lemma diagnostic.
pub fn normal_form(
    metric: &CollarMetric,
    rho: f64,
    upsilon: f64,
    opts: &NormalFormOptions,
) -> Result<NormalFormPoint> {
    let eff = effective_collar(metric, opts.smallness_bound);
    if rho > eff {
        return Err(Error::Domain(format!(
            "ρ={rho} lies outside the effective collar ρ ≤ {eff:.4e}"
        )));
    }
    let (x, y, closest, eta) = normal_form_coordinates(metric, rho, upsilon, opts)?;
    let d = opts.jacobian_step * rho;
    let du = opts.jacobian_step;
    let eval = |r: f64, u: f64| normal_form_coordinates(metric, r, u, opts).map(|v| (v.0, v.1));
    let fd = |p1: (f64, f64), m1: (f64, f64), p2: (f64, f64), m2: (f64, f64), h: f64| {
        (
            (8.0 * (p1.0 - m1.0) - (p2.0 - m2.0)) / (12.0 * h),
            (8.0 * (p1.1 - m1.1) - (p2.1 - m2.1)) / (12.0 * h),
        )
    };
    let (x_r, y_r) = fd(eval(rho + d, upsilon)?, eval(rho - d, upsilon)?, eval(rho + 2.0 * d, upsilon)?, eval(rho - 2.0 * d, upsilon)?, d);
    let (x_u, y_u) = fd(eval(rho, upsilon + du)?, eval(rho, upsilon - du)?, eval(rho, upsilon + 2.0 * du)?, eval(rho, upsilon - 2.0 * du)?, du);
    // metric in (x, y): g̃ = J⁻ᵀ g J⁻¹ with J = ∂(x, y)/∂(ρ, υ)
    let jac = nalgebra::Matrix2::new(x_r, x_u, y_r, y_u);
    let inv = jac.try_inverse().ok_or_else(|| Error::NoConvergence {
        message: "singular normal-form Jacobian".into(),
        closest_approach: closest,
    })?;
    let g = metric.as_matrix(rho, upsilon);
    let gt = inv.transpose() * g * inv;
    Ok(NormalFormPoint {
        x,
        y,
        diagnostics: NormalFormDiagnostics {
            cross_term: gt[(0, 1)].abs(),
            radial_defect: (gt[(0, 0)] - 1.0).abs(),
            closest_approach: closest,
            effective_rho_max: eff,
            shooting_parameter: eta,
        },
    })
}
