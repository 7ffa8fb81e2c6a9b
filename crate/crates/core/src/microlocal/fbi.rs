//! FBI transform in the time variable with the radial variable rescaled by
//! the frequency, `x̃ = τx`:
//!
//! `Su(t, τ, x̃, y) = ∫ e^{iφ(t, τ, t')} a(τ) χ(x̃/τ) u(t', x̃/τ, y) dt'`,
//! `φ = i(t - t')²⟨τ⟩/2 + (t - t')τ`, `⟨τ⟩ = √(1 + τ²)`.
//!
//! With `a² = ⟨τ⟩^{1/2} / (2π^{3/2})` on `τ ≥ 2` the composition `S*S` in
//! `t` has symbol `∫ a² (2π/⟨τ⟩) e^{-(τ-ω)²/⟨τ⟩} dτ = 1 + O(ω^{-1})`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::state::WaveState;

/// Something that can be sampled along time at a fixed point `(x, y)`.
pub trait TimeField {
    fn series(&self, x: f64, y: f64, t0: f64, dt: f64, count: usize) -> Vec<Complex64>;
}

impl TimeField for WaveState {
    fn series(&self, x: f64, y: f64, t0: f64, dt: f64, count: usize) -> Vec<Complex64> {
        self.time_series(x, y, t0, dt, count).into_iter().map(|v| Complex64::new(v, 0.0)).collect()
    }
}

/// Adapter for closures `u(t, x, y)`.
pub struct FnField<F>(pub F);

impl<F: Fn(f64, f64, f64) -> Complex64> TimeField for FnField<F> {
    fn series(&self, x: f64, y: f64, t0: f64, dt: f64, count: usize) -> Vec<Complex64> {
        (0..count).map(|i| (self.0)(t0 + i as f64 * dt, x, y)).collect()
    }
}

/// Gaussian half-widths (in `1/√⟨τ⟩`) kept in the `t'` integral.
const WINDOW_WIDTHS: f64 = 8.0;
/// Phase-resolution margin in the Nyquist test, in `√⟨τ⟩`.
const NYQUIST_WIDTHS: f64 = 6.0;

pub fn japanese(tau: f64) -> f64 {
    (1.0 + tau * tau).sqrt()
}

/// Smooth step, 0 for `r ≤ 0` and 1 for `r ≥ 1`.
fn smooth_step(r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if r >= 1.0 {
        return 1.0;
    }
    let f = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    f(r) / (f(r) + f(1.0 - r))
}

/// Largest `τ` whose phase is resolved at sample spacing `dt`.
pub fn max_resolved_tau(dt: f64) -> f64 {
    let limit = std::f64::consts::PI / dt;
    let g = |t: f64| t + NYQUIST_WIDTHS * japanese(t).sqrt() - limit;
    if g(0.0) >= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, limit);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid
        } else {
            lo = mid
        }
    }
    lo
}

#[derive(Debug, Clone, PartialEq)]
pub struct FbiFrame {
    /// sample grid of `t'`, reused for the output times
    pub t0: f64,
    pub dt: f64,
    pub count: usize,
    /// frequencies, all `≥ 1`, increasing
    pub taus: Vec<f64>,
    pub x_scaled: Vec<f64>,
    pub ys: Vec<f64>,
    /// `χ = 1` on `x ≤ collar/2`, `0` for `x ≥ collar`
    pub collar: f64,
}

impl FbiFrame {
    pub fn new(
        t0: f64,
        dt: f64,
        count: usize,
        taus: Vec<f64>,
        x_scaled: Vec<f64>,
        ys: Vec<f64>,
        collar: f64,
    ) -> Result<Self> {
        if !(dt > 0.0) || count < 2 || !(collar > 0.0) {
            return Err(Error::Config(format!("invalid FBI frame (dt={dt}, count={count}, collar={collar})")));
        }
        if taus.iter().any(|&t| !(t >= 1.0)) || taus.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("tau grid must be increasing and >= 1".into()));
        }
        let max_tau = max_resolved_tau(dt);
        if taus.last().is_some_and(|&t| t > max_tau) {
            return Err(Error::Nyquist { max_tau });
        }
        Ok(Self { t0, dt, count, taus, x_scaled, ys, collar })
    }

    /// Uniform `τ` grid `[lo, hi]` of spacing close to `step`.
    pub fn tau_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step).ceil().max(1.0) as usize;
        (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
    }

    /// `a(τ)`, vanishing for `τ ≤ 1`.
    pub fn amplitude(tau: f64) -> f64 {
        let pi = std::f64::consts::PI;
        japanese(tau).powf(0.25) / (2f64.sqrt() * pi.powf(0.75)) * smooth_step(tau - 1.0)
    }

    pub fn cutoff(&self, x: f64) -> f64 {
        1.0 - smooth_step(2.0 * x / self.collar - 1.0)
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    /// Trapezoid weights on the `τ` grid.
    fn tau_weights(&self) -> Vec<f64> {
        let n = self.taus.len();
        (0..n)
            .map(|k| {
                let left = if k > 0 { self.taus[k] - self.taus[k - 1] } else { 0.0 };
                let right = if k + 1 < n { self.taus[k + 1] - self.taus[k] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect()
    }

    /// `e^{iφ}` at lag `j dt`, for `|j| ≤ J`.
    fn kernel(&self, tau: f64) -> (usize, Vec<Complex64>) {
        let jt = japanese(tau);
        let reach = ((WINDOW_WIDTHS / jt.sqrt()) / self.dt).ceil() as usize;
        let reach = reach.min(self.count);
        let k = (0..=2 * reach)
            .map(|i| {
                let s = (i as f64 - reach as f64) * self.dt;
                Complex64::from_polar((-0.5 * s * s * jt).exp(), s * tau)
            })
            .collect();
        (reach, k)
    }
}

/// `Su` on the frame, laid out `[t][τ][x̃][y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FbiTransform {
    pub frame: FbiFrame,
    pub values: Vec<Complex64>,
}

impl FbiTransform {
    fn index(&self, it: usize, k: usize, ix: usize, iy: usize) -> usize {
        let f = &self.frame;
        ((it * f.taus.len() + k) * f.x_scaled.len() + ix) * f.ys.len() + iy
    }

    pub fn get(&self, it: usize, k: usize, ix: usize, iy: usize) -> Complex64 {
        self.values[self.index(it, k, ix, iy)]
    }
}

pub fn fbi_transform(field: &impl TimeField, frame: &FbiFrame) -> FbiTransform {
    let f = frame;
    let (nt, ntau, nx, ny) = (f.count, f.taus.len(), f.x_scaled.len(), f.ys.len());
    let mut out = FbiTransform { frame: f.clone(), values: vec![Complex64::new(0.0, 0.0); nt * ntau * nx * ny] };
    for (k, &tau) in f.taus.iter().enumerate() {
        let amp = FbiFrame::amplitude(tau);
        if amp == 0.0 {
            continue;
        }
        let (reach, kern) = f.kernel(tau);
        for (ix, &xs) in f.x_scaled.iter().enumerate() {
            let x = xs / tau;
            let chi = f.cutoff(x);
            if chi == 0.0 {
                continue;
            }
            for (iy, &y) in f.ys.iter().enumerate() {
                let u = field.series(x, y, f.t0, f.dt, nt);
                let scale = amp * chi * f.dt;
                for it in 0..nt {
                    let lo = it.saturating_sub(reach);
                    let hi = (it + reach).min(nt - 1);
                    // lag t - t' = (it - j) dt
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (j, uj) in u.iter().enumerate().take(hi + 1).skip(lo) {
                        acc += kern[it + reach - j] * uj;
                    }
                    let idx = out.index(it, k, ix, iy);
                    out.values[idx] = acc * scale;
                }
            }
        }
    }
    out
}

/// Adjoint of [`fbi_transform`] in `(t, τ) ↦ t'` at each fixed `(x̃, y)`:
/// returns one series on the frame's time grid per `(x̃, y)`, `y` fastest.
pub fn fbi_adjoint(v: &FbiTransform) -> Vec<Vec<Complex64>> {
    let f = &v.frame;
    let nt = f.count;
    let weights = f.tau_weights();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); nt]; f.x_scaled.len() * f.ys.len()];
    for (k, &tau) in f.taus.iter().enumerate() {
        let amp = FbiFrame::amplitude(tau);
        if amp == 0.0 {
            continue;
        }
        let (reach, kern) = f.kernel(tau);
        let scale = amp * weights[k] * f.dt;
        for ix in 0..f.x_scaled.len() {
            for iy in 0..f.ys.len() {
                let series = &mut out[ix * f.ys.len() + iy];
                for (j, s) in series.iter_mut().enumerate() {
                    let lo = j.saturating_sub(reach);
                    let hi = (j + reach).min(nt - 1);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for it in lo..=hi {
                        acc += kern[it + reach - j].conj() * v.get(it, k, ix, iy);
                    }
                    *s += acc * scale;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn one_d(t0: f64, dt: f64, count: usize, taus: Vec<f64>) -> FbiFrame {
        FbiFrame::new(t0, dt, count, taus, vec![0.0], vec![0.0], 1.0).unwrap()
    }

    #[test]
    fn tone_has_gaussian_profile() {
        let tau0 = 20.0;
        let frame = one_d(-3.0, 0.01, 601, FbiFrame::tau_grid(2.0, 40.0, 0.5));
        let field = FnField(|t: f64, _: f64, _: f64| Complex64::from_polar(1.0, tau0 * t));
        let s = fbi_transform(&field, &frame);
        let it = 300; // t = 0, far from the sampled edges
        for (k, &tau) in frame.taus.iter().enumerate() {
            let jt = japanese(tau);
            let exact = FbiFrame::amplitude(tau) * (2.0 * PI / jt).sqrt() * (-(tau - tau0).powi(2) / (2.0 * jt)).exp();
            let local = FbiFrame::amplitude(tau) * (2.0 * PI / jt).sqrt();
            let err = (s.get(it, k, 0, 0).norm() - exact).abs();
            assert!(err <= 1e-6 * local, "tau={tau}: err {err}");
        }
    }

    #[test]
    fn gaussian_pulse_decays_rapidly() {
        let frame = one_d(-6.0, 0.01, 1201, vec![8.0, 16.0, 32.0, 64.0]);
        let field = FnField(|t: f64, _: f64, _: f64| Complex64::new((-0.5 * t * t).exp(), 0.0));
        let s = fbi_transform(&field, &frame);
        let it = 600;
        let mags: Vec<f64> = (0..4)
            .map(|k| {
                let tau = frame.taus[k];
                let a = japanese(tau) + 1.0;
                // closed form at t = 0
                let exact = FbiFrame::amplitude(tau) * (2.0 * PI / a).sqrt() * (-tau * tau / (2.0 * a)).exp();
                let got = s.get(it, k, 0, 0).norm();
                assert!((got - exact).abs() <= 1e-12 + 1e-6 * exact, "tau={tau}: {got} vs {exact}");
                exact
            })
            .collect();
        // log-log slopes steepen octave by octave: faster than any power
        let slopes: Vec<f64> = mags.windows(2).map(|w| (w[1] / w[0]).log2()).collect();
        assert!(slopes.windows(2).all(|w| w[1] < 1.5 * w[0]), "{slopes:?}");
        assert!(slopes[0] < -2.0);
    }

    #[test]
    fn nyquist_is_refused() {
        let r = FbiFrame::new(0.0, 0.05, 10, vec![1.0, 70.0], vec![0.0], vec![0.0], 1.0);
        match r {
            Err(Error::Nyquist { max_tau }) => {
                assert!(max_tau < 70.0 && max_tau > 10.0);
                assert!(FbiFrame::new(0.0, 0.05, 10, vec![1.0, max_tau], vec![0.0], vec![0.0], 1.0).is_ok());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rescaled_radial_samples() {
        // field depending on x only through the cutoff region
        let frame = FbiFrame::new(-1.0, 0.01, 201, vec![4.0, 8.0], vec![1.0, 6.0], vec![0.0], 1.0).unwrap();
        let field = FnField(|t: f64, x: f64, _: f64| Complex64::new(x * (-t * t).exp(), 0.0));
        let s = fbi_transform(&field, &frame);
        // x̃ = 6, τ = 4 lies beyond the collar: zero
        assert_eq!(s.get(100, 0, 1, 0), Complex64::new(0.0, 0.0));
        // x̃ = 1 at τ = 8 samples x = 1/8, where χ = 1
        let plain = fbi_transform(&FnField(|t: f64, _: f64, _: f64| Complex64::new((-t * t).exp() / 8.0, 0.0)), &frame);
        assert!((s.get(100, 1, 0, 0) - plain.get(100, 1, 0, 0)).norm() < 1e-15);
    }

    #[test]
    fn near_inversion_on_band_limited_signal() {
        let frame = one_d(-10.0, 0.015, 1334, FbiFrame::tau_grid(1.0, 130.0, 0.25));
        let tones = [(12.0, 1.0, 0.0), (25.5, 0.7, 1.0), (40.0, -0.4, 0.5), (55.0, 0.9, -2.0)];
        let u = move |t: f64| -> Complex64 {
            let env = (-t * t / 8.0).exp();
            tones.iter().map(|&(w, c, ph)| Complex64::from_polar(c * env, w * t + ph)).sum()
        };
        let field = FnField(move |t: f64, _: f64, _: f64| u(t));
        let back = &fbi_adjoint(&fbi_transform(&field, &frame))[0];
        let (mut num, mut den) = (0.0, 0.0);
        for (i, b) in back.iter().enumerate() {
            let v = u(frame.time(i));
            num += (b - v).norm_sqr();
            den += v.norm_sqr();
        }
        let rel = (num / den).sqrt();
        assert!(rel <= 1e-3, "{rel}");
    }
}
