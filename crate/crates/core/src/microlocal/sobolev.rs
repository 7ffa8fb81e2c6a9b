//! Local Sobolev order from the decay of windowed dyadic-shell energies.
//!
//! A sampled signal is multiplied by the taper `(1 - τ²)^8` centred at the
//! point of interest, Fourier transformed, and the mean spectral density on
//! octaves `[ω_lo 2^k, ω_lo 2^{k+1})` is fitted by
//! `log₂ E_k = -2(s + d/2) k + c`. A density behaving like `|ω|^{-2β}`
//! gives `s = β - d/2`, the borderline exponent of `H^s`.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Tapered window `(1 - τ²)^8` on `|τ| < 1`.
pub fn taper(tau: f64) -> f64 {
    if tau.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - tau * tau).powi(8)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOptions {
    /// dimension of the windowed slice
    pub dim: usize,
    /// lowest shell edge in cycles of the half-width: `ω_lo = low_cycles / half_width`
    pub low_cycles: f64,
    pub min_shells: usize,
    pub max_shells: usize,
    /// orders at or above this are reported as smooth
    pub s_cap: f64,
    /// width of the Gaussian mollifier applied to the data, if any
    pub mollifier_sigma: Option<f64>,
    /// largest admissible exponent `σ²ω²` of the mollifier correction
    pub max_correction: f64,
    /// shells whose raw density falls below this fraction of the peak
    /// density are treated as noise
    pub noise_floor: f64,
    /// fraction of the Nyquist frequency usable for shells
    pub nyquist_fraction: f64,
    /// windows whose tapered samples never exceed this amplitude carry no
    /// measurable signal and are reported smooth
    #[serde(default)]
    pub signal_floor: f64,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            dim: 1,
            low_cycles: 16.0,
            min_shells: 3,
            max_shells: 6,
            s_cap: 4.0,
            mollifier_sigma: None,
            max_correction: 16.0,
            noise_floor: 1e-20,
            nyquist_fraction: 0.8,
            signal_floor: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shell {
    pub lo: f64,
    pub hi: f64,
    /// mollifier-corrected mean spectral density
    pub energy: f64,
    /// uncorrected mean spectral density
    pub raw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Location {
    pub t: f64,
    pub x: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityEstimate {
    pub location: Location,
    pub half_width: f64,
    pub s: f64,
    /// 95% confidence interval from the slope's standard error;
    /// unbounded ends are written as `null`
    #[serde(with = "interval")]
    pub ci: (f64, f64),
    pub residual: f64,
    pub smooth: bool,
    pub shells: Vec<Shell>,
}

/// Power spectrum of the tapered samples: `(ω_j, |F(ω_j)|²)` for `ω ≥ 0`.
mod interval {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(ci: &(f64, f64), s: S) -> Result<S::Ok, S::Error> {
        let end = |v: f64| v.is_finite().then_some(v);
        (end(ci.0), end(ci.1)).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(f64, f64), D::Error> {
        let (lo, hi) = <(Option<f64>, Option<f64>)>::deserialize(d)?;
        Ok((lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY)))
    }
}

pub fn windowed_spectrum(samples: &[f64], dt: f64, center: f64, t0: f64, half_width: f64) -> Vec<(f64, f64)> {
    let n = samples.len();
    let mut len = 1;
    while len < 4 * n {
        len *= 2;
    }
    let mut buf: Vec<Complex<f64>> = (0..len)
        .map(|i| {
            if i < n {
                let t = t0 + i as f64 * dt;
                Complex::new(samples[i] * taper((t - center) / half_width), 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        })
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    let dw = 2.0 * std::f64::consts::PI / (len as f64 * dt);
    buf[..len / 2].iter().enumerate().map(|(j, c)| (j as f64 * dw, c.norm_sqr() * dt * dt)).collect()
}

/// Estimates the local Sobolev order of `samples` (taken at `t0 + i·dt`)
/// at `center`, using a window of half-width `half_width`.
pub fn sobolev_estimate(
    samples: &[f64],
    t0: f64,
    dt: f64,
    center: f64,
    half_width: f64,
    opts: &EstimatorOptions,
) -> Result<RegularityEstimate> {
    if !(dt > 0.0) || !(half_width > 0.0) {
        return Err(Error::Config(format!("invalid sampling (dt={dt}, half_width={half_width})")));
    }
    let t_end = t0 + (samples.len().max(1) - 1) as f64 * dt;
    if center - half_width < t0 - 1e-9 * dt.max(1.0) || center + half_width > t_end + 1e-9 * dt.max(1.0) {
        return Err(Error::Domain(format!(
            "window [{}, {}] leaves the sampled interval [{t0}, {t_end}]",
            center - half_width,
            center + half_width
        )));
    }
    let location = Location { t: center, ..Default::default() };
    let windowed_peak = samples
        .iter()
        .enumerate()
        .map(|(i, u)| (u * taper((t0 + i as f64 * dt - center) / half_width)).abs())
        .fold(0.0, f64::max);
    if windowed_peak <= opts.signal_floor {
        return Ok(RegularityEstimate {
            location,
            half_width,
            s: opts.s_cap,
            ci: (opts.s_cap, f64::INFINITY),
            residual: 0.0,
            smooth: true,
            shells: Vec::new(),
        });
    }
    let spectrum = windowed_spectrum(samples, dt, center, t0, half_width);
    let peak = spectrum.iter().map(|p| p.1).fold(0.0, f64::max);
    let lo = opts.low_cycles / half_width;
    let mut top = opts.nyquist_fraction * std::f64::consts::PI / dt;
    if let Some(sigma) = opts.mollifier_sigma {
        top = top.min(opts.max_correction.sqrt() / sigma);
    }
    let mut shells = Vec::new();
    let mut hit_floor = false;
    for k in 0..opts.max_shells {
        let (a, b) = (lo * 2f64.powi(k as i32), lo * 2f64.powi(k as i32 + 1));
        if b > top * (1.0 + 1e-9) {
            break;
        }
        let bins: Vec<&(f64, f64)> = spectrum.iter().filter(|(w, _)| *w >= a && *w < b).collect();
        if bins.is_empty() {
            break;
        }
        let raw = bins.iter().map(|p| p.1).sum::<f64>() / bins.len() as f64;
        if peak == 0.0 || raw < opts.noise_floor * peak {
            hit_floor = true;
            break;
        }
        let energy = match opts.mollifier_sigma {
            Some(sigma) => bins.iter().map(|(w, p)| p * (sigma * w).powi(2).exp()).sum::<f64>() / bins.len() as f64,
            None => raw,
        };
        shells.push(Shell { lo: a, hi: b, energy, raw });
    }
    if shells.len() < opts.min_shells {
        if hit_floor || peak == 0.0 {
            return Ok(RegularityEstimate {
                location,
                half_width,
                s: opts.s_cap,
                ci: (opts.s_cap, f64::INFINITY),
                residual: 0.0,
                smooth: true,
                shells,
            });
        }
        return Err(Error::InsufficientResolution { usable: shells.len() });
    }
    let (s, ci, residual) = fit_order(&shells, opts.dim);
    let smooth = s >= opts.s_cap;
    Ok(RegularityEstimate { location, half_width, s, ci, residual, smooth, shells })
}

/// Least-squares slope of `log₂ E_k` against `k`, converted to an order.
fn fit_order(shells: &[Shell], dim: usize) -> (f64, (f64, f64), f64) {
    let n = shells.len() as f64;
    let ys: Vec<f64> = shells.iter().map(|s| s.energy.log2()).collect();
    let xm = (n - 1.0) / 2.0;
    let ym = ys.iter().sum::<f64>() / n;
    let sxx: f64 = (0..shells.len()).map(|k| (k as f64 - xm).powi(2)).sum();
    let sxy: f64 = ys.iter().enumerate().map(|(k, y)| (k as f64 - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let resid2: f64 = ys
        .iter()
        .enumerate()
        .map(|(k, y)| (y - ym - slope * (k as f64 - xm)).powi(2))
        .sum();
    let s = -slope / 2.0 - dim as f64 / 2.0;
    let dof = n - 2.0;
    let half = if dof >= 1.0 {
        let se = (resid2 / dof / sxx).sqrt();
        let q = StudentsT::new(0.0, 1.0, dof).map(|d| d.inverse_cdf(0.975)).unwrap_or(f64::INFINITY);
        q * se / 2.0
    } else {
        f64::INFINITY
    };
    (s, (s - half, s + half), resid2.sqrt())
}
