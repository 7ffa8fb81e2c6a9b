//! Indicial roots of the Laplacian at the tip and the radial behaviour the
//! Friedrichs extension admits in each boundary mode.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::geometry::metric::ConicMetric;
use crate::spectral::modes::boundary_modes;

/// Radial behaviour kept by the Friedrichs extension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Admitted {
    /// `x^{ν − (n−2)/2}` near the tip.
    RegularPower { exponent: f64 },
    /// `n = 2`, zero mode: constants (the `log x` partner is excluded).
    Constant,
}

#[derive(Debug, Clone, Serialize)]
pub struct IndicialData {
    pub mode: usize,
    pub lambda: f64,
    pub multiplicity: usize,
    /// Roots `s±` of `I(Δ, s) = s² − i(n−2)s + λ`.
    pub roots: [Complex64; 2],
    /// `(n−2)/2 ± ½·sqrt((n−2)² + λ²)`, the alternative closed form, kept
    /// for comparison only.
    pub alternative_im: [f64; 2],
    pub bessel_order: f64,
    /// The regular branch is the one selected.
    pub friedrichs_selected: bool,
    pub admitted: Admitted,
}

/// `I(Δ, s)` for dimension `n` and cross-section eigenvalue `λ`.
pub fn indicial_polynomial(n: usize, lambda: f64, s: Complex64) -> Complex64 {
    let i = Complex64::i();
    s * s - i * (n as f64 - 2.0) * s + lambda
}

/// Solves `s² − i(n−2)s + λ = 0`; roots ordered by decreasing imaginary part.
pub fn indicial_roots(n: usize, lambda: f64) -> [Complex64; 2] {
    let b = -Complex64::i() * (n as f64 - 2.0);
    let disc = (b * b - 4.0 * lambda).sqrt();
    let r1 = (-b + disc) / 2.0;
    let r2 = (-b - disc) / 2.0;
    if r1.im >= r2.im { [r1, r2] } else { [r2, r1] }
}

pub fn indicial_data(metric: &ConicMetric, j_max: usize) -> Result<Vec<IndicialData>> {
    let basis = boundary_modes(metric, j_max)?;
    let n = metric.n;
    let half = (n as f64 - 2.0) / 2.0;
    Ok(basis
        .modes
        .iter()
        .enumerate()
        .map(|(j, m)| {
            let roots = indicial_roots(n, m.lambda);
            // s± = i((n−2)/2 ± ν)
            let nu = (0.5 * (roots[0].im - roots[1].im)).max(0.0);
            let alt = 0.5 * ((n as f64 - 2.0).powi(2) + m.lambda * m.lambda).sqrt();
            let admitted = if n == 2 && j == 0 {
                Admitted::Constant
            } else {
                Admitted::RegularPower { exponent: nu - half }
            };
            IndicialData {
                mode: j,
                lambda: m.lambda,
                multiplicity: m.multiplicity(),
                roots,
                alternative_im: [half + alt, half - alt],
                bessel_order: nu,
                friedrichs_selected: true,
                admitted,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn plane_and_double_cover() {
        let d = indicial_data(&ConicMetric::model(2.0 * PI, 1.0).unwrap(), 6).unwrap();
        for (j, e) in d.iter().enumerate() {
            assert!((e.bessel_order - j as f64).abs() < 1e-12);
            assert!((e.roots[0] - Complex64::new(0.0, j as f64)).norm() < 1e-12);
            assert!((e.roots[1] - Complex64::new(0.0, -(j as f64))).norm() < 1e-12);
        }
        assert_eq!(d[0].admitted, Admitted::Constant);
        let d = indicial_data(&ConicMetric::model(4.0 * PI, 1.0).unwrap(), 6).unwrap();
        for (j, e) in d.iter().enumerate() {
            assert!((e.bessel_order - j as f64 / 2.0).abs() < 1e-12);
        }
        assert!((d[1].bessel_order - 0.5).abs() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn roots_solve_the_indicial_equation(n in 2usize..6, lambda in 0.0f64..400.0) {
            let r = indicial_roots(n, lambda);
            for s in r {
                proptest::prop_assert!(indicial_polynomial(n, lambda, s).norm() < 1e-9 * (1.0 + lambda));
            }
            // Vieta: the imaginary parts sum to n − 2 for I as written
            proptest::prop_assert!((r[0].im + r[1].im - (n as f64 - 2.0)).abs() < 1e-9);
            let nu = ((n as f64 - 2.0).powi(2) / 4.0 + lambda).sqrt();
            proptest::prop_assert!((0.5 * (r[0].im - r[1].im) - nu).abs() < 1e-9);
        }
    }
}
