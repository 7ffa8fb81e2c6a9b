//! Closed-form fundamental solutions used as exact references: the free
//! plane and cones of angle `2π/k`, where the method of images applies.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::quad::adaptive;

use super::bessel::bessel_i0_scaled;

/// `H(t - d) / (2π √(t² - d²))`, odd in `t`. The integrable singularity at
/// `t = d` is sampled as zero; comparisons across the front go through
/// [`mollified_plane_kernel`].
pub fn free_plane_kernel(t: f64, d: f64) -> f64 {
    let s = t.abs();
    if s <= d {
        return 0.0;
    }
    t.signum() / (2.0 * PI * ((s - d) * (s + d)).sqrt())
}

/// Plane distance between polar points.
pub fn polar_distance(x1: f64, th1: f64, x2: f64, th2: f64) -> f64 {
    (x1 * x1 + x2 * x2 - 2.0 * x1 * x2 * (th1 - th2).cos()).max(0.0).sqrt()
}

fn image_distances(k: usize, x: f64, theta: f64, xs: f64, ths: f64) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::Config("image count must be at least 1".into()));
    }
    let step = 2.0 * PI / k as f64;
    Ok((0..k).map(|m| polar_distance(x, theta, xs, ths + m as f64 * step)).collect())
}

/// Fundamental solution on the cone of angle `2π/k` (pole at `(xs, ths)`),
/// as a sum over the `k` rotated images of the pole in the plane.
pub fn image_kernel(k: usize, t: f64, x: f64, theta: f64, xs: f64, ths: f64) -> Result<f64> {
    Ok(image_distances(k, x, theta, xs, ths)?.into_iter().map(|d| free_plane_kernel(t, d)).sum())
}

/// Free plane kernel convolved with the Gaussian of width `sigma` (the heat
/// kernel at time `σ²/2`), at distance `d` from the pole.
///
/// Writing the kernel in polar coordinates about the field point and
/// substituting `r = t sin α` removes the endpoint singularity:
/// `∫_0^{π/2} (t sin α / 2π σ²) e^{-(r²+d²)/2σ²} I_0(r d/σ²) dα`.
pub fn mollified_plane_kernel(t: f64, d: f64, sigma: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let s = t.abs();
    let s2 = sigma * sigma;
    let f = |a: f64| {
        let r = s * a.sin();
        let arg = r * d / s2;
        s * a.sin() / (2.0 * PI * s2) * (-(r - d) * (r - d) / (2.0 * s2)).exp() * bessel_i0_scaled(arg)
    };
    // split at the peak r = d so the adaptive rule sees it
    let half_pi = 0.5 * PI;
    let mut cuts = vec![0.0, half_pi];
    if d < s {
        let peak = (d / s).asin();
        let width = (sigma / s).min(0.5);
        for c in [peak - 8.0 * width, peak - width, peak, peak + width, peak + 8.0 * width] {
            if c > 0.0 && c < half_pi {
                cuts.push(c);
            }
        }
    } else {
        let width = (sigma / s).sqrt().min(0.5);
        for c in [half_pi - 8.0 * width, half_pi - width] {
            if c > 0.0 {
                cuts.push(c);
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let total: f64 = cuts.windows(2).map(|w| adaptive(f, w[0], w[1], 1e-15, 1e-12)).sum();
    t.signum() * total
}

/// [`image_kernel`] with each image mollified.
pub fn mollified_image_kernel(k: usize, t: f64, x: f64, theta: f64, xs: f64, ths: f64, sigma: f64) -> Result<f64> {
    Ok(image_distances(k, x, theta, xs, ths)?
        .into_iter()
        .map(|d| mollified_plane_kernel(t, d, sigma))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_kernel_values() {
        assert_eq!(free_plane_kernel(1.0, 2.0), 0.0);
        assert_eq!(free_plane_kernel(1.0, 1.0), 0.0);
        let v = free_plane_kernel(2.0, 0.0);
        assert!((v - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert_eq!(free_plane_kernel(-2.0, 0.0), -v);
    }

    #[test]
    fn mollified_kernel_approaches_raw_kernel_away_from_front() {
        for &(t, d) in &[(2.0, 0.5), (3.0, 1.0), (1.0, 0.0)] {
            let raw = free_plane_kernel(t, d);
            let m = mollified_plane_kernel(t, d, 1e-3);
            assert!(((m - raw) / raw).abs() < 1e-4, "t={t} d={d}: {m} vs {raw}");
        }
        assert!(mollified_plane_kernel(1.0, 2.0, 0.02).abs() < 1e-30);
    }

    #[test]
    fn mollified_kernel_matches_brute_force_convolution() {
        // direct 2-d quadrature of the Gaussian against the raw kernel,
        // in polar coordinates about the field point
        let (t, d, sigma) = (1.0f64, 0.9f64, 0.1f64);
        let g = |r: f64, phi: f64| {
            let dist2 = r * r + d * d - 2.0 * r * d * phi.cos();
            (-dist2 / (2.0 * sigma * sigma)).exp() / (2.0 * PI * sigma * sigma)
        };
        let inner = |r: f64| adaptive(|phi| g(r, phi), 0.0, 2.0 * PI, 1e-14, 1e-12);
        // r = t sin α
        let brute = adaptive(
            |a: f64| {
                let r = t * a.sin();
                r / (2.0 * PI) * inner(r)
            },
            0.0,
            0.5 * PI,
            1e-13,
            1e-10,
        );
        let m = mollified_plane_kernel(t, d, sigma);
        assert!(((m - brute) / brute).abs() < 1e-8, "{m} vs {brute}");
    }

    #[test]
    fn one_image_is_the_plane() {
        let a = image_kernel(1, 2.0, 1.0, 0.3, 0.5, 1.0).unwrap();
        let b = free_plane_kernel(2.0, polar_distance(1.0, 0.3, 0.5, 1.0));
        assert_eq!(a, b);
        assert!(image_kernel(0, 1.0, 1.0, 0.0, 1.0, 0.0).is_err());
    }
}
