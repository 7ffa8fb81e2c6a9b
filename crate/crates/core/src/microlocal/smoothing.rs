//! Tangential smoothing `(1 + Δ_Y)^{-N}` on mode-sum states, and the
//! weighted near-tip mass used to compare raw and smoothed states.

use crate::error::{Error, Result};
use crate::numerics::quad::gauss_legendre;
use crate::spectral::state::WaveState;

/// Multiplies every angular block by `(1 + ω_m²)^{-N}`.
pub fn tangential_smooth(state: &WaveState, order: u32) -> WaveState {
    let mut out = state.clone();
    for b in out.blocks.iter_mut() {
        let f = (1.0 + b.omega * b.omega).powi(-(order as i32));
        for part in [&mut b.cos, &mut b.sin] {
            part.a.iter_mut().chain(part.b.iter_mut()).for_each(|v| *v *= f);
        }
    }
    out
}

/// Options for [`weighted_norm_profile`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileOptions {
    /// radial panel width; should resolve the state's finest feature
    pub panel: f64,
    pub nodes: usize,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self { panel: 0.005, nodes: 12 }
    }
}

/// `M(r) = ∫_{x < r} x^{-2α} |u(t)|² dA` for each radius in `radii`
/// (increasing), summed block by block with angular Parseval.
///
/// The first panel uses `x = h v^{1/(1-α)}`, which removes the weight's
/// singularity, so any `α < 1` is admissible.
pub fn weighted_norm_profile(
    state: &WaveState,
    t: f64,
    alpha: f64,
    radii: &[f64],
    opts: &ProfileOptions,
) -> Result<Vec<f64>> {
    if !(alpha < 1.0) || !(alpha >= 0.0) {
        return Err(Error::Config(format!("weight exponent must lie in [0, 1) (got {alpha})")));
    }
    if radii.windows(2).any(|w| w[1] < w[0]) || radii.iter().any(|&r| !(r >= 0.0)) {
        return Err(Error::Config("radii must be non-negative and increasing".into()));
    }
    let r_max = radii.last().copied().unwrap_or(0.0);
    if r_max > state.x_max {
        return Err(Error::Domain(format!("radius {r_max} beyond the wall {}", state.x_max)));
    }
    if r_max == 0.0 {
        return Ok(vec![0.0; radii.len()]);
    }
    // panel edges: uniform, plus every requested radius
    let mut edges: Vec<f64> = (0..=((r_max / opts.panel).ceil() as usize))
        .map(|i| (i as f64 * opts.panel).min(r_max))
        .chain(radii.iter().copied())
        .collect();
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let (gx, gw) = gauss_legendre(opts.nodes);
    let p = 1.0 / (1.0 - alpha);
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    let mut panel_of = Vec::new();
    for (k, e) in edges.windows(2).enumerate() {
        let (a, b) = (e[0], e[1]);
        for (&z, &w) in gx.iter().zip(&gw) {
            let v = 0.5 * (z + 1.0);
            if k == 0 {
                // ∫_0^h x^{1-2α} f dx = h^{2-2α} p ∫_0^1 v f(h v^p) dv
                xs.push(b * v.powf(p));
                ws.push(0.5 * w * b.powf(2.0 - 2.0 * alpha) * p * v);
            } else {
                let x = a + (b - a) * v;
                xs.push(x);
                ws.push(0.5 * w * (b - a) * x.powf(1.0 - 2.0 * alpha));
            }
            panel_of.push(k);
        }
    }
    let mut density = vec![0.0; xs.len()];
    for (_, c, s) in state.angular_profiles(t, &xs) {
        for (i, d) in density.iter_mut().enumerate() {
            *d += c[i] * c[i] + s.get(i).map_or(0.0, |v| v * v);
        }
    }
    let mut panel_mass = vec![0.0; edges.len() - 1];
    for ((d, w), &k) in density.iter().zip(&ws).zip(&panel_of) {
        panel_mass[k] += d * w;
    }
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        let m: f64 = edges
            .windows(2)
            .zip(&panel_mass)
            .filter(|(e, _)| e[1] <= r + 1e-14)
            .map(|(_, m)| m)
            .sum();
        out.push(m);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConicMetric;
    use crate::spectral::state::{fundamental_solution, SolverOptions, SourceSpec};
    use std::f64::consts::PI;

    fn state(l: f64) -> WaveState {
        let metric = ConicMetric::model(l, 3.2).unwrap();
        let src = SourceSpec { x: 1.0, theta: 0.0, sigma: 0.12 };
        fundamental_solution(&metric, src, &SolverOptions { t_final: 0.5, ..Default::default() }).unwrap()
    }

    #[test]
    fn smoothing_factors_are_exact() {
        let s = state(4.0 * PI);
        let sm = tangential_smooth(&s, 2);
        for (a, b) in s.blocks.iter().zip(&sm.blocks) {
            let f = (1.0 + a.omega * a.omega).powi(-2);
            if a.m == 0 {
                assert_eq!(a.cos, b.cos);
            }
            for k in 0..a.len() {
                assert!((b.cos.b[k] - f * a.cos.b[k]).abs() <= 1e-15 * a.cos.b[k].abs());
            }
        }
    }

    #[test]
    fn unweighted_profile_is_local_mass() {
        // whole disc: coefficient Parseval
        let s = state(2.0 * PI);
        let t = 0.3;
        let total = weighted_norm_profile(&s, t, 0.0, &[s.x_max], &ProfileOptions { panel: 0.02, nodes: 12 }).unwrap()[0];
        let parseval = s.coefficient_norm2(t);
        assert!(((total - parseval) / parseval).abs() < 1e-8, "{total} vs {parseval}");
    }

    #[test]
    fn weighted_profile_matches_direct_quadrature() {
        let s = state(4.0 * PI);
        let (t, alpha, r) = (0.4, 0.5, 0.8);
        let got = weighted_norm_profile(&s, t, alpha, &[r], &ProfileOptions::default()).unwrap()[0];
        // brute force on a polar grid
        let (nx, nth) = (160, 256);
        let mut brute = 0.0;
        for i in 0..nx {
            let x = (i as f64 + 0.5) * r / nx as f64;
            for j in 0..nth {
                let th = j as f64 * 4.0 * PI / nth as f64;
                brute += s.value(t, x, th).powi(2) * x.powf(1.0 - 2.0 * alpha);
            }
        }
        brute *= (r / nx as f64) * (4.0 * PI / nth as f64);
        assert!(((got - brute) / brute).abs() < 1e-3, "{got} vs {brute}");
    }
}
