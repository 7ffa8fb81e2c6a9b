//! Geodesics that narrowly miss the tip and how they leave.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::covector::EdgeCovector;
use crate::flow::hamilton::hamilton_field;
use crate::flow::upsilon::transport;
use crate::geometry::metric::{ConicMetric, CrossSection};
use crate::numerics::ode::{integrate, locate_event, Control, OdeOptions};

#[derive(Debug, Clone, Serialize)]
pub struct NearMiss {
    pub impact: f64,
    /// Unwrapped angle of the exit point on the circle `x = exit_radius`.
    pub exit_angle: f64,
    /// Asymptotic angular direction of the outgoing ray (model-cone formula
    /// evaluated at the exit point); unwrapped on round circles.
    pub exit_direction: f64,
    pub exit_radius: f64,
    pub closest_approach: f64,
    /// The geodesic left the collar before its closest approach.
    pub inconclusive: bool,
}

/// Traces the geodesic arriving parallel to the radial ray over `y` with
/// signed impact parameter `eps`, starting at radius `start_radius`, until it
/// leaves the disc of that radius again.
pub fn near_miss_deflection(metric: &ConicMetric, y: f64, eps: f64, start_radius: f64, tol: f64) -> Result<NearMiss> {
    if eps == 0.0 || !(eps.abs() < start_radius) {
        return Err(Error::Domain(format!("impact parameter {eps} must be nonzero and below the start radius")));
    }
    if start_radius >= metric.x_max {
        return Err(Error::Domain("start radius must lie inside the collar".into()));
    }
    // in the unrolled picture: a point offset by eps from the radial line,
    // moving parallel to it towards the tip
    let x0 = (start_radius * start_radius + eps * eps).sqrt();
    let delta = (eps / start_radius).atan();
    let theta0 = y + delta;
    let h = metric.h(x0, theta0).sqrt();
    let xi = -x0 * delta.cos();
    let eta = x0 * delta.sin() * x0 * h / x0;
    let lambda = -(xi * xi + eta * eta / (h * h)).sqrt();
    let start = EdgeCovector { t: 0.0, x: x0, theta: theta0, lambda, xi, eta }.normalized(metric);
    let exit_radius = x0;
    let opts = OdeOptions { rtol: tol, atol: tol * 1e-3, h_init: 1e-4, ..OdeOptions::default() };
    let f = |_s: f64, q: &[f64; 6]| hamilton_field(metric, &EdgeCovector::from_array(*q)).to_array();
    let mut closest: Option<f64> = None;
    let mut exit: Option<[f64; 6]> = None;
    let mut inconclusive = false;
    integrate(f, 0.0, start.to_array(), 1e6, &opts, |step| {
        if closest.is_none() && step.y0[4] < 0.0 && step.y1[4] >= 0.0 {
            let (_, q) = locate_event(step, |q| q[4]);
            closest = Some(q[1]);
        }
        if step.y1[1] > metric.x_max * (1.0 - 1e-12) && closest.is_none() {
            inconclusive = true;
            return Control::Stop;
        }
        if closest.is_some() && step.y1[1] >= exit_radius {
            let (_, q) = locate_event(step, |q| q[1] - exit_radius);
            exit = Some(q);
            return Control::Stop;
        }
        Control::Continue
    });
    let Some(q) = exit else {
        return Ok(NearMiss {
            impact: eps,
            exit_angle: f64::NAN,
            exit_direction: f64::NAN,
            exit_radius,
            closest_approach: closest.unwrap_or(f64::NAN),
            inconclusive: true,
        });
    };
    let q = EdgeCovector::from_array(q);
    let c = q.h0_eta(metric).sqrt();
    // forward-in-time outgoing asymptote (λ < 0 orients s with t)
    let arc = FRAC_PI_2 - (q.xi / c).atan();
    let exit_direction = match metric.cross_section {
        CrossSection::AnalyticCircle { .. } => q.theta + q.eta.signum() * arc,
        CrossSection::Tabulated1D(_) => transport(&metric.cross_section, q.theta, q.eta.signum() * arc),
    };
    Ok(NearMiss {
        impact: eps,
        exit_angle: q.theta,
        exit_direction,
        exit_radius,
        closest_approach: closest.unwrap_or(f64::NAN),
        inconclusive,
    })
}
