//! Points of the edge cotangent bundle and integrated ray segments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::metric::ConicMetric;

/// `(t, x, θ; λ, ξ, η)` with canonical form `λ dt/x + ξ dx/x + η dθ`.
///
/// θ is kept unwrapped along trajectories; use [`EdgeCovector::wrapped_theta`]
/// for the point on the cross-section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeCovector {
    pub t: f64,
    pub x: f64,
    pub theta: f64,
    pub lambda: f64,
    pub xi: f64,
    pub eta: f64,
}

impl EdgeCovector {
    pub fn to_array(&self) -> [f64; 6] {
        [self.t, self.x, self.theta, self.lambda, self.xi, self.eta]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self { t: a[0], x: a[1], theta: a[2], lambda: a[3], xi: a[4], eta: a[5] }
    }

    /// Covector on the characteristic variety, `λ = sign·sqrt(ξ² + η²/h)`,
    /// scaled so that `λ² + ξ² + h₀(η) = 1`.
    pub fn on_characteristic(metric: &ConicMetric, t: f64, x: f64, theta: f64, xi: f64, eta: f64, sign: f64) -> Result<Self> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!("covector base point needs x > 0, got {x}")));
        }
        let k = eta * eta / metric.h(x, theta);
        let lambda = sign.signum() * (xi * xi + k).sqrt();
        if lambda == 0.0 {
            return Err(Error::Domain("zero covector".into()));
        }
        Ok(Self { t, x, theta, lambda, xi, eta }.normalized(metric))
    }

    /// Dual cross-section metric `h₀(η) = η²/h₀(θ)`.
    pub fn h0_eta(&self, metric: &ConicMetric) -> f64 {
        self.eta * self.eta / metric.h0(self.theta)
    }

    /// `η²/h(x, θ)`.
    pub fn h_eta(&self, metric: &ConicMetric) -> f64 {
        self.eta * self.eta / metric.h(self.x, self.theta)
    }

    /// Principal symbol `λ² − ξ² − η²/h(x, θ)`, zero on the characteristic variety.
    pub fn symbol(&self, metric: &ConicMetric) -> f64 {
        self.lambda * self.lambda - self.xi * self.xi - self.h_eta(metric)
    }

    /// Rescales the fiber to the unit sphere `λ² + ξ² + h₀(η) = 1`.
    pub fn normalized(&self, metric: &ConicMetric) -> Self {
        let r = (self.lambda * self.lambda + self.xi * self.xi + self.h0_eta(metric)).sqrt();
        if r == 0.0 {
            return *self;
        }
        Self { lambda: self.lambda / r, xi: self.xi / r, eta: self.eta / r, ..*self }
    }

    pub fn wrapped_theta(&self, period: f64) -> f64 {
        self.theta.rem_euclid(period)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Endpoint {
    Interior,
    HitsTip,
    LeavesCollar,
}

#[derive(Debug, Clone, Serialize)]
pub struct RaySegment {
    pub params: Vec<f64>,
    pub samples: Vec<EdgeCovector>,
    pub end: Endpoint,
    /// `max |p(s) − p(0)|` over the samples.
    pub symbol_drift: f64,
    /// `max |h₀(η)(s) − h₀(η)(0)|`; conserved for product metrics only.
    pub h0_eta_drift: f64,
}

impl RaySegment {
    pub fn last(&self) -> &EdgeCovector {
        self.samples.last().expect("segments hold at least the start point")
    }
}
