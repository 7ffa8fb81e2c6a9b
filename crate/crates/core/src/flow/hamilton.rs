//! The rescaled Hamilton vector field `(x²/2) H_g` on the edge cotangent bundle.

use serde::Serialize;

use crate::flow::covector::EdgeCovector;
use crate::geometry::metric::ConicMetric;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowTangent {
    pub t: f64,
    pub x: f64,
    pub theta: f64,
    pub lambda: f64,
    pub xi: f64,
    pub eta: f64,
}

impl FlowTangent {
    pub fn to_array(&self) -> [f64; 6] {
        [self.t, self.x, self.theta, self.lambda, self.xi, self.eta]
    }
}

/// `(x²/2)H_g` for `p = λ² − ξ² − η²/h(x, θ)`:
/// `ṫ = −λx`, `ẋ = ξx`, `θ̇ = η/h`, `λ̇ = λξ`,
/// `ξ̇ = ξ² + k − (x/2)∂_x k` with `k = η²/h`, `η̇ = ½η² ∂_θh/h²`.
pub fn hamilton_field(metric: &ConicMetric, q: &EdgeCovector) -> FlowTangent {
    let h = metric.h(q.x, q.theta);
    let k = q.eta * q.eta / h;
    let (hx, ht) = if metric.is_product() {
        (0.0, metric.cross_section.h0_deriv(q.theta))
    } else {
        (metric.dh_dx(q.x, q.theta), metric.dh_dtheta(q.x, q.theta))
    };
    let dk_dx = -q.eta * q.eta * hx / (h * h);
    FlowTangent {
        t: -q.lambda * q.x,
        x: q.xi * q.x,
        theta: q.eta / h,
        lambda: q.lambda * q.xi,
        xi: q.xi * q.xi + k - 0.5 * q.x * dk_dx,
        eta: 0.5 * q.eta * q.eta * ht / (h * h),
    }
}

/// The perturbation part `W`: full field minus the model field built from `h₀`.
pub fn perturbation_field(metric: &ConicMetric, q: &EdgeCovector) -> FlowTangent {
    let full = hamilton_field(metric, q);
    let h0 = metric.h0(q.theta);
    let h0t = metric.cross_section.h0_deriv(q.theta);
    let k0 = q.eta * q.eta / h0;
    FlowTangent {
        t: 0.0,
        x: 0.0,
        theta: full.theta - q.eta / h0,
        lambda: 0.0,
        xi: full.xi - (q.xi * q.xi + k0),
        eta: full.eta - 0.5 * q.eta * q.eta * h0t / (h0 * h0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::metric::{CrossSection, Perturbation};
    use std::f64::consts::PI;

    #[test]
    fn model_example() {
        let m = ConicMetric::model(2.0 * PI, 4.0).unwrap();
        let q = EdgeCovector { t: 0.0, x: 1.0, theta: 0.0, lambda: 2f64.sqrt(), xi: 1.0, eta: 1.0 };
        let f = hamilton_field(&m, &q).to_array();
        let want = [-(2f64.sqrt()), 1.0, 1.0, 2f64.sqrt(), 2.0, 0.0];
        for (a, b) in f.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn radial_rays_do_not_turn() {
        let m = ConicMetric::model(3.0, 4.0).unwrap();
        let q = EdgeCovector { t: 0.0, x: 0.7, theta: 1.0, lambda: 1.0, xi: -1.0, eta: 0.0 };
        let f = hamilton_field(&m, &q);
        assert_eq!((f.theta, f.eta), (0.0, 0.0));
    }

    #[test]
    fn perturbation_is_small_near_the_tip() {
        let m = ConicMetric::new(2, CrossSection::circle(2.0 * PI), Perturbation::Radial { a: 1.0 }, 0.5).unwrap();
        let mut worst: f64 = 0.0;
        for i in 1..=20 {
            let x = 0.5 * i as f64 / 20.0;
            for j in 0..16 {
                let th = 2.0 * PI * j as f64 / 16.0;
                for &(xi, eta) in &[(0.3, 0.8), (-0.6, 0.5), (0.0, 1.0)] {
                    let q = EdgeCovector { t: 0.0, x, theta: th, lambda: 1.0, xi, eta };
                    let w = perturbation_field(&m, &q);
                    let size = w.theta.abs().max(w.xi.abs()).max(w.eta.abs());
                    worst = worst.max(size / (x * q.h0_eta(&m).sqrt()));
                }
            }
        }
        // W = O(x h₀(η)^{1/2}) with a modest constant
        assert!(worst < 5.0, "{worst}");
    }
}
