//! The map Υ sending a covector to the boundary point its flow line
//! approaches radially, and arc-length transport on the cross-section.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::flow::covector::EdgeCovector;
use crate::geometry::metric::{ConicMetric, CrossSection};

/// Point reached from `theta` after `h₀`-arc length `s` (signed).
pub fn transport(cross: &CrossSection, theta: f64, s: f64) -> f64 {
    match cross {
        CrossSection::AnalyticCircle { circumference } => (theta + s).rem_euclid(*circumference),
        CrossSection::Tabulated1D(_) => {
            let target = cross.arc_length(theta) + s;
            invert_arc_length(cross, target)
        }
    }
}

/// θ in `[0, period)` with `arc_length(θ) ≡ target` modulo the total length.
pub fn invert_arc_length(cross: &CrossSection, target: f64) -> f64 {
    let period = cross.period();
    let total = cross.total_length();
    let s = target.rem_euclid(total);
    if let CrossSection::AnalyticCircle { .. } = cross {
        return s;
    }
    // arc_length is strictly increasing on [0, period]
    let (mut lo, mut hi) = (0.0, period);
    let mut th = s / total * period;
    for _ in 0..100 {
        let f = cross.arc_length(th) - s;
        if f > 0.0 {
            hi = th;
        } else {
            lo = th;
        }
        let speed = cross.h0(th).sqrt();
        let mut next = th - f / speed;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - th).abs() <= 1e-15 * period {
            th = next;
            break;
        }
        th = next;
    }
    th.rem_euclid(period)
}

/// `Υ(q) = y(exp(s_∞ H_Y) q)` with `s_∞ = C⁻¹(σπ/2 − arctan(ξ/C))`,
/// `C = h₀(η)^{1/2}` and `σ = sgn λ`; radial covectors map to their own θ.
///
/// The branch σ is constant on flow lines, so Υ is too.
pub fn upsilon(metric: &ConicMetric, q: &EdgeCovector) -> Result<f64> {
    let period = metric.period();
    if q.eta == 0.0 {
        return Ok(q.theta.rem_euclid(period));
    }
    if q.lambda == 0.0 {
        return Err(Error::Domain("Υ undefined for λ = 0: branch sign ambiguous".into()));
    }
    let c = q.h0_eta(metric).sqrt();
    let sigma = q.lambda.signum();
    // h₀-arc length swept by the H_Y flow: C·s_∞, in the direction of η
    let arc = sigma * FRAC_PI_2 - (q.xi / c).atan();
    Ok(transport(&metric.cross_section, q.theta, q.eta.signum() * arc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::integrate::{integrate_flow, FlowOptions};
    use crate::geometry::metric::{Perturbation, TabulatedCircle};
    use std::f64::consts::PI;

    #[test]
    fn examples() {
        let m = ConicMetric::model(2.0 * PI, 10.0).unwrap();
        let q = EdgeCovector { t: 0.0, x: 1.0, theta: 0.0, lambda: 1.0, xi: 0.0, eta: 1.0 };
        assert!((upsilon(&m, &q).unwrap() - PI / 2.0).abs() < 1e-15);
        let r = EdgeCovector { t: 0.0, x: 1.0, theta: 0.7, lambda: 1.0, xi: -1.0, eta: 0.0 };
        assert_eq!(upsilon(&m, &r).unwrap(), 0.7);
        let bad = EdgeCovector { lambda: 0.0, ..q };
        assert!(upsilon(&m, &bad).is_err());
    }

    #[test]
    fn constant_along_flow_lines() {
        let samples = (0..32).map(|i| (1.0 + 0.2 * (2.0 * PI * i as f64 / 32.0).sin()).powi(2)).collect();
        let tab = CrossSection::Tabulated1D(TabulatedCircle::new(samples, 2.0 * PI).unwrap());
        for cross in [CrossSection::circle(4.0 * PI), tab] {
            let m = ConicMetric::new(2, cross, Perturbation::Product, 50.0).unwrap();
            for sign in [1.0, -1.0] {
                let q = EdgeCovector::on_characteristic(&m, 0.0, 1.0, 0.4, 0.3, 0.8, sign).unwrap();
                let y0 = upsilon(&m, &q).unwrap();
                let seg = integrate_flow(&m, &q, 1.0, &FlowOptions::with_tol(1e-12)).unwrap();
                for p in &seg.samples {
                    let y = upsilon(&m, p).unwrap();
                    let d = (y - y0 + 0.5 * m.period()).rem_euclid(m.period()) - 0.5 * m.period();
                    assert!(d.abs() < 1e-8, "{d}");
                }
            }
        }
    }
}
