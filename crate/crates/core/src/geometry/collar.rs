//! General collar metrics `g = g_ρρ dρ² + 2 g_ρυ dρ dυ + g_υυ dυ²` before
//! they are put in normal form.

use nalgebra::Matrix2;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub enum CollarFamily {
    /// `dρ² + ρ² dυ²`.
    Product,
    /// `dρ² + ρ²(1 + aρ)² dυ²`.
    Radial { a: f64 },
    /// `dρ² + c ρ^power dρ dυ + ρ² dυ²`; note the symmetric component is `c ρ^power / 2`.
    CrossTerm { c: f64, power: i32 },
    /// The inner metric pulled back by `ρ = r(1 + r)`.
    Reparametrized(Box<CollarMetric>),
}

#[derive(Debug, Clone)]
pub struct CollarMetric {
    pub family: CollarFamily,
    /// Period of υ.
    pub period: f64,
    pub rho_max: f64,
}

impl CollarMetric {
    pub fn new(family: CollarFamily, period: f64, rho_max: f64) -> Result<Self> {
        if !(period > 0.0) || !(rho_max > 0.0) {
            return Err(Error::Config("collar period and radius must be positive".into()));
        }
        let m = Self { family, period, rho_max };
        for i in 1..=32 {
            let rho = rho_max * i as f64 / 32.0;
            for j in 0..32 {
                let [a, b, c] = m.components(rho, period * j as f64 / 32.0);
                if !(a > 0.0 && a * c - b * b > 0.0) {
                    return Err(Error::Config(format!("collar metric degenerate at ρ={rho}")));
                }
            }
        }
        Ok(m)
    }

    /// Composes with `ρ = r(1 + r)`; the new radius covers the same region.
    pub fn reparametrized(inner: CollarMetric) -> Self {
        let rho_max = 0.5 * ((1.0 + 4.0 * inner.rho_max).sqrt() - 1.0);
        let period = inner.period;
        Self { family: CollarFamily::Reparametrized(Box::new(inner)), period, rho_max }
    }

    /// `[g_ρρ, g_ρυ, g_υυ]` at `(ρ, υ)`.
    // the bundled families are υ-independent; the argument is part of the interface
    #[allow(clippy::only_used_in_recursion)]
    pub fn components(&self, rho: f64, upsilon: f64) -> [f64; 3] {
        match &self.family {
            CollarFamily::Product => [1.0, 0.0, rho * rho],
            CollarFamily::Radial { a } => [1.0, 0.0, (rho * (1.0 + a * rho)).powi(2)],
            CollarFamily::CrossTerm { c, power } => [1.0, 0.5 * c * rho.powi(*power), rho * rho],
            CollarFamily::Reparametrized(inner) => {
                let r = rho;
                let (p, dp) = (r * (1.0 + r), 1.0 + 2.0 * r);
                let [a, b, c] = inner.components(p, upsilon);
                [a * dp * dp, b * dp, c]
            }
        }
    }

    /// Inverse metric `[g^ρρ, g^ρυ, g^υυ]`.
    pub fn inverse(&self, rho: f64, upsilon: f64) -> [f64; 3] {
        let [a, b, c] = self.components(rho, upsilon);
        let det = a * c - b * b;
        [c / det, -b / det, a / det]
    }

    /// Full quadratic form of the inverse metric on `a dρ + b dυ`.
    pub fn dual(&self, rho: f64, upsilon: f64, a: f64, b: f64) -> Result<f64> {
        if !(rho > 0.0) {
            return Err(Error::Domain(format!("dual metric is singular at ρ={rho}")));
        }
        let [i11, i12, i22] = self.inverse(rho, upsilon);
        Ok(i11 * a * a + 2.0 * i12 * a * b + i22 * b * b)
    }

    /// Rescaled inverse coefficients `(A, B, C) = (g^ρρ, ρ g^ρυ, ρ² g^υυ)`,
    /// bounded up to `ρ = 0`.
    pub fn b_inverse(&self, rho: f64, upsilon: f64) -> [f64; 3] {
        let [a, b, c] = self.components(rho, upsilon);
        // divide through by ρ² before inverting to stay finite at the tip
        let r2 = rho * rho;
        let (a, b, c) = if r2 > 0.0 { (a, b / rho, c / r2) } else { (a, 0.0, self.tip_c(upsilon)) };
        let det = a * c - b * b;
        [c / det, -b / det, a / det]
    }

    fn tip_c(&self, upsilon: f64) -> f64 {
        let r = 1e-12;
        self.components(r, upsilon)[2] / (r * r)
    }

    pub fn as_matrix(&self, rho: f64, upsilon: f64) -> Matrix2<f64> {
        let [a, b, c] = self.components(rho, upsilon);
        Matrix2::new(a, b, b, c)
    }

    /// Largest departure of `g_ρρ` from 1 and of `g_ρυ/ρ` from 0 over `ρ ≤ r`.
    pub fn smallness(&self, r: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 1..=64 {
            let rho = r * i as f64 / 64.0;
            for j in 0..32 {
                let [a, b, _] = self.components(rho, self.period * j as f64 / 32.0);
                worst = worst.max((a - 1.0).abs()).max((b / rho).abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn dual_matches_dense_inverse() {
        let eps = 0.05;
        // 2ρ²ε dρ dθ cross term
        let m = CollarMetric::new(CollarFamily::CrossTerm { c: 2.0 * eps, power: 2 }, 2.0 * PI, 1.0).unwrap();
        for &(rho, a, b) in &[(0.3, 1.0, 0.5), (0.8, -0.2, 2.0), (0.05, 1.0, 1.0)] {
            let inv = m.as_matrix(rho, 0.0).try_inverse().unwrap();
            let want = inv[(0, 0)] * a * a + 2.0 * inv[(0, 1)] * a * b + inv[(1, 1)] * b * b;
            let got = m.dual(rho, 0.0, a, b).unwrap();
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }

    #[test]
    fn b_inverse_is_finite_at_tip() {
        let m = CollarMetric::new(CollarFamily::Radial { a: 1.0 }, 2.0 * PI, 1.0).unwrap();
        let [a, b, c] = m.b_inverse(0.0, 0.0);
        assert_eq!((a, b), (1.0, 0.0));
        assert!((c - 1.0).abs() < 1e-9);
    }
}
