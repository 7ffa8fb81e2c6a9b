//! Adaptive integration of the rescaled bicharacteristic flow.

use crate::error::{Error, Result};
use crate::flow::covector::{Endpoint, EdgeCovector, RaySegment};
use crate::flow::hamilton::hamilton_field;
use crate::geometry::metric::ConicMetric;
use crate::numerics::ode::{integrate, locate_event, Control, OdeOptions, Termination};

#[derive(Debug, Clone)]
pub struct FlowOptions {
    pub tol: f64,
    /// Tip-approach cutoff; defaults to `1e-6·x_max`.
    pub x_stop: Option<f64>,
    /// Sample at these parameters (sorted in the direction of integration)
    /// instead of at every accepted step.
    pub outputs: Option<Vec<f64>>,
    pub max_steps: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { tol: 1e-10, x_stop: None, outputs: None, max_steps: 2_000_000 }
    }
}

impl FlowOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// Integrates the flow from `start` (at parameter 0) towards `s_end`,
/// stopping at the tip cutoff or when leaving the collar.
pub fn integrate_flow(metric: &ConicMetric, start: &EdgeCovector, s_end: f64, opts: &FlowOptions) -> Result<RaySegment> {
    if !(start.x > 0.0) {
        return Err(Error::Domain(format!("flow start needs x > 0, got {}", start.x)));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Config(format!("flow tolerance must be positive, got {}", opts.tol)));
    }
    let x_stop = opts.x_stop.unwrap_or(1e-6 * metric.x_max);
    let x_max = metric.x_max;
    let ode = OdeOptions {
        rtol: opts.tol,
        atol: opts.tol,
        h_init: 1e-3,
        h_min: 1e-13,
        max_steps: opts.max_steps,
        ..OdeOptions::default()
    };
    let f = |_s: f64, y: &[f64; 6]| hamilton_field(metric, &EdgeCovector::from_array(*y)).to_array();
    let mut params = vec![0.0];
    let mut samples = vec![*start];
    let outputs = opts.outputs.clone();
    let mut next_out = 0usize;
    if let Some(o) = &outputs {
        params.clear();
        samples.clear();
        while next_out < o.len() && o[next_out] == 0.0 {
            params.push(0.0);
            samples.push(*start);
            next_out += 1;
        }
    }
    let mut end = Endpoint::Interior;
    let dir = if s_end >= 0.0 { 1.0 } else { -1.0 };
    let outcome = integrate(f, 0.0, start.to_array(), s_end, &ode, |step| {
        let crossing = if step.y1[1] < x_stop {
            Some((Endpoint::HitsTip, x_stop))
        } else if step.y1[1] > x_max {
            Some((Endpoint::LeavesCollar, x_max))
        } else {
            None
        };
        let (s_hi, y_hi) = match crossing {
            Some((_, level)) => locate_event(step, |y| y[1] - level),
            None => (step.s1, step.y1),
        };
        match &outputs {
            Some(o) => {
                while next_out < o.len() && (o[next_out] - s_hi) * dir <= 0.0 {
                    let s = o[next_out];
                    params.push(s);
                    samples.push(EdgeCovector::from_array(step.eval(s)));
                    next_out += 1;
                }
            }
            None => {
                params.push(s_hi);
                samples.push(EdgeCovector::from_array(y_hi));
            }
        }
        if let Some((kind, _)) = crossing {
            if outputs.is_some() {
                params.push(s_hi);
                samples.push(EdgeCovector::from_array(y_hi));
            }
            end = kind;
            return Control::Stop;
        }
        Control::Continue
    });
    if outcome.termination == Termination::StepUnderflow {
        end = Endpoint::HitsTip;
    }
    if outcome.termination == Termination::MaxSteps {
        return Err(Error::NoConvergence {
            message: format!("flow integration exhausted {} steps", opts.max_steps),
            closest_approach: outcome.y[1],
        });
    }
    let p0 = start.symbol(metric);
    let g0 = start.h0_eta(metric);
    let mut symbol_drift: f64 = 0.0;
    let mut h0_eta_drift: f64 = 0.0;
    for q in &samples {
        symbol_drift = symbol_drift.max((q.symbol(metric) - p0).abs());
        h0_eta_drift = h0_eta_drift.max((q.h0_eta(metric) - g0).abs());
    }
    Ok(RaySegment { params, samples, end, symbol_drift, h0_eta_drift })
}

/// Closed-form model-cone trajectory through `start` (round circle, `h₀ ≡ 1`):
/// `x = E sec(Cs + φ₀)`, `ξ = C tan(Cs + φ₀)`, `λ = λ₀ cos φ₀ sec(Cs + φ₀)`,
/// `t = t₀ − (λ₀ x₀ cos²φ₀ / C)(tan(Cs + φ₀) − tan φ₀)` with `C = |η|`.
pub fn model_closed_form(start: &EdgeCovector, s: f64) -> EdgeCovector {
    let c = start.eta.abs();
    if c == 0.0 {
        // radial: ξ' = ξ², x' = ξx, λ' = λξ
        let d = 1.0 - start.xi * s;
        let x = start.x / d;
        let lambda = start.lambda / d;
        let t = start.t - start.lambda * start.x * s / d;
        return EdgeCovector { t, x, theta: start.theta, lambda, xi: start.xi / d, eta: 0.0 };
    }
    let phi0 = (start.xi / c).atan();
    let e = start.x * phi0.cos();
    let phi = c * s + phi0;
    let sec = 1.0 / phi.cos();
    EdgeCovector {
        t: start.t - start.lambda * start.x * phi0.cos().powi(2) / c * (phi.tan() - phi0.tan()),
        x: e * sec,
        theta: start.theta + start.eta * s,
        lambda: start.lambda * phi0.cos() * sec,
        xi: c * phi.tan(),
        eta: start.eta,
    }
}
