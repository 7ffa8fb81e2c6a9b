//! Order-shifting Fourier multiplier in time, `(ω² + ω₀²)^{s/2}`.
//!
//! The regularisation `ω₀` keeps the symbol smooth at zero frequency, so
//! `theta_smooth(·, s)` and `theta_smooth(·, -s)` are exact inverses on the
//! discrete spectrum and differ from `|D_t|^s` only by an operator of order
//! `s - 2`.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplierOptions {
    /// low-frequency regularisation `ω₀`
    pub omega0: f64,
    /// the series is zero padded to at least `pad` times its length
    pub pad: usize,
}

impl Default for MultiplierOptions {
    fn default() -> Self {
        Self { omega0: 1.0, pad: 2 }
    }
}

pub fn multiplier_symbol(omega: f64, s: f64, omega0: f64) -> f64 {
    (omega * omega + omega0 * omega0).powf(0.5 * s)
}

/// Applies the multiplier to complex samples taken at spacing `dt`.
pub fn theta_smooth_complex(u: &[Complex<f64>], dt: f64, s: f64, opts: &MultiplierOptions) -> Vec<Complex<f64>> {
    let n = u.len();
    if n == 0 || s == 0.0 {
        return u.to_vec();
    }
    let mut len = 1;
    while len < opts.pad.max(1) * n {
        len *= 2;
    }
    let mut buf = vec![Complex::new(0.0, 0.0); len];
    buf[..n].copy_from_slice(u);
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    let dw = 2.0 * std::f64::consts::PI / (len as f64 * dt);
    for (j, c) in buf.iter_mut().enumerate() {
        let k = if j <= len / 2 { j as f64 } else { j as f64 - len as f64 };
        *c *= multiplier_symbol(k * dw, s, opts.omega0) / len as f64;
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    buf.truncate(n);
    buf
}

/// Real-valued [`theta_smooth_complex`]; the symbol is even so real input
/// stays real.
pub fn theta_smooth(u: &[f64], dt: f64, s: f64, opts: &MultiplierOptions) -> Vec<f64> {
    let c: Vec<Complex<f64>> = u.iter().map(|&v| Complex::new(v, 0.0)).collect();
    theta_smooth_complex(&c, dt, s, opts).into_iter().map(|c| c.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band_limited(t: f64) -> f64 {
        (-(t * t) / 0.08).exp() * ((40.0 * t).cos() + 0.5 * (70.0 * t + 0.3).sin())
    }

    fn rel(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        let den: f64 = b.iter().map(|y| y * y).sum();
        (num / den).sqrt()
    }

    #[test]
    fn inverse_orders_cancel() {
        let dt = 0.004;
        let u: Vec<f64> = (0..1000).map(|i| band_limited(-2.0 + i as f64 * dt)).collect();
        let o = MultiplierOptions::default();
        for s in [0.5, 1.0, -1.5] {
            let v = theta_smooth(&theta_smooth(&u, dt, -s, &o), dt, s, &o);
            assert!(rel(&v, &u) < 1e-3, "s={s}: {}", rel(&v, &u));
        }
    }

    #[test]
    fn tone_is_scaled_by_power() {
        // periodic tone on an exact number of cycles, no padding
        let n = 1024;
        let dt = 2.0 * std::f64::consts::PI / (n as f64 * 1.0);
        let w = 50.0;
        let u: Vec<Complex<f64>> = (0..n).map(|i| Complex::from_polar(1.0, w * i as f64 * dt)).collect();
        let o = MultiplierOptions { pad: 1, ..Default::default() };
        for s in [-1.0, 0.5, 2.0] {
            let v = theta_smooth_complex(&u, dt, s, &o);
            let ratio = v[17].norm() / w.powf(s);
            assert!((ratio - 1.0).abs() < 1.0 / w, "s={s}: {ratio}");
        }
    }

    #[test]
    fn zero_order_is_identity() {
        let dt = 0.004;
        let u: Vec<f64> = (0..500).map(|i| band_limited(-1.0 + i as f64 * dt)).collect();
        assert_eq!(theta_smooth(&u, dt, 0.0, &MultiplierOptions::default()), u);
    }
}
