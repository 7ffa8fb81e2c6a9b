//! Trigonometric interpolation of periodic samples.

use std::f64::consts::PI;

/// Real trigonometric interpolant of `N` equispaced samples on `[0, period)`.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    period: f64,
    mean: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl TrigInterpolant {
    pub fn new(samples: &[f64], period: f64) -> Self {
        let n = samples.len();
        let nf = n as f64;
        let kmax = n / 2;
        let mean = samples.iter().sum::<f64>() / nf;
        let mut cos = Vec::with_capacity(kmax);
        let mut sin = Vec::with_capacity(kmax);
        for k in 1..=kmax {
            let (mut a, mut b) = (0.0, 0.0);
            for (i, v) in samples.iter().enumerate() {
                let phase = 2.0 * PI * ((k * i) % n) as f64 / nf;
                a += v * phase.cos();
                b += v * phase.sin();
            }
            // the Nyquist term of an even-length grid is shared by +k and -k
            let w = if n.is_multiple_of(2) && k == kmax { 1.0 / nf } else { 2.0 / nf };
            cos.push(a * w);
            sin.push(if n.is_multiple_of(2) && k == kmax { 0.0 } else { b * w });
        }
        Self { period, mean, cos, sin }
    }

    /// Builds the interpolant of `f` sampled at `n` points.
    pub fn from_fn(f: impl Fn(f64) -> f64, n: usize, period: f64) -> Self {
        let samples: Vec<f64> = (0..n).map(|i| f(period * i as f64 / n as f64)).collect();
        Self::new(&samples, period)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    fn omega(&self) -> f64 {
        2.0 * PI / self.period
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let w = self.omega();
        let mut v = self.mean;
        for (k, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let ph = (k + 1) as f64 * w * theta;
            v += a * ph.cos() + b * ph.sin();
        }
        v
    }

    pub fn deriv(&self, theta: f64) -> f64 {
        let w = self.omega();
        let mut v = 0.0;
        for (k, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let kw = (k + 1) as f64 * w;
            let ph = kw * theta;
            v += kw * (b * ph.cos() - a * ph.sin());
        }
        v
    }

    /// `∫_0^θ f`, exact for the interpolant (θ may exceed one period).
    pub fn integral(&self, theta: f64) -> f64 {
        let w = self.omega();
        let mut v = self.mean * theta;
        for (k, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let kw = (k + 1) as f64 * w;
            let ph = kw * theta;
            v += (a * ph.sin() - b * (ph.cos() - 1.0)) / kw;
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_band_limited_functions() {
        let f = |t: f64| 2.0 + 0.3 * (t).cos() - 0.2 * (3.0 * t).sin();
        for n in [16, 17] {
            let p = TrigInterpolant::from_fn(f, n, 2.0 * PI);
            for &t in &[0.1, 1.7, 4.0, 9.0] {
                assert!((p.eval(t) - f(t)).abs() < 1e-13);
                let d = -0.3 * t.sin() - 0.6 * (3.0 * t).cos();
                assert!((p.deriv(t) - d).abs() < 1e-12);
                let i = 2.0 * t + 0.3 * t.sin() + 0.2 / 3.0 * ((3.0 * t).cos() - 1.0);
                assert!((p.integral(t) - i).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn respects_period() {
        let p = TrigInterpolant::from_fn(|t| (t * PI / 2.0).cos(), 12, 4.0);
        assert!((p.eval(1.0)).abs() < 1e-13);
        assert!((p.eval(5.0) - p.eval(1.0)).abs() < 1e-13);
    }
}
