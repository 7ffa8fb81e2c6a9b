//! Geometric continuation through the tip: the relation `G(y)`, the
//! diffraction relation Γ on radial rays, and limiting geodesics.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::covector::RaySegment;
use crate::flow::upsilon::transport;
use crate::geometry::metric::ConicMetric;

/// Points at `h₀`-arc length exactly π from `y` in either direction,
/// reduced to `[0, period)`, duplicates merged, sorted.
pub fn geometric_continuations(metric: &ConicMetric, y: f64) -> Vec<f64> {
    let cross = &metric.cross_section;
    let period = metric.period();
    let mut pts = vec![transport(cross, y, PI), transport(cross, y, -PI)];
    pts.sort_by(f64::total_cmp);
    let tol = 1e-12 * period;
    let close = |a: f64, b: f64| {
        let d = (a - b).rem_euclid(period);
        d < tol || period - d < tol
    };
    if close(pts[0], pts[1]) {
        pts.truncate(1);
    }
    pts
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RayKind {
    Incoming,
    Outgoing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RaySign {
    Plus,
    Minus,
}

/// A radial ray reaching (or leaving) the tip at time `t_tip` over `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialRay {
    pub t_tip: f64,
    pub y: f64,
    pub sign: RaySign,
    pub kind: RayKind,
}

/// Incoming rays related to the outgoing ray `p` by diffraction with
/// geometric continuation: those arriving at the same time over `G(y_out)`.
pub fn gamma_relation(metric: &ConicMetric, p: &RadialRay) -> Result<Vec<RadialRay>> {
    if p.kind != RayKind::Outgoing {
        return Err(Error::Domain("gamma_relation expects an outgoing ray".into()));
    }
    Ok(geometric_continuations(metric, p.y)
        .into_iter()
        .map(|y| RadialRay { t_tip: p.t_tip, y, sign: p.sign, kind: RayKind::Incoming })
        .collect())
}

/// Checks that every sampled incoming ray lies in Γ(p) for some outgoing `p`.
/// Returns the largest angular miss over `n_rays` evenly spaced rays.
pub fn covering_defect(metric: &ConicMetric, n_rays: usize, t_tip: f64) -> Result<f64> {
    let period = metric.period();
    let mut worst: f64 = 0.0;
    for k in 0..n_rays {
        let y_in = period * k as f64 / n_rays as f64;
        let mut best = f64::INFINITY;
        // candidate outgoing rays: G is symmetric, so they sit over G(y_in)
        for y_out in geometric_continuations(metric, y_in) {
            for sign in [RaySign::Plus, RaySign::Minus] {
                let p = RadialRay { t_tip, y: y_out, sign, kind: RayKind::Outgoing };
                for q in gamma_relation(metric, &p)? {
                    let d = (q.y - y_in).rem_euclid(period);
                    best = best.min(d.min(period - d));
                }
            }
        }
        worst = worst.max(best);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub enum Piece {
    Interior(RaySegment),
    BoundaryArc { from: f64, to: f64, length: f64 },
}

/// Alternating interior segments and boundary arcs; non-terminal arcs have
/// `h₀`-length exactly π, terminal ones at most π.
#[derive(Debug, Clone, Serialize)]
pub struct LimitingGeodesic {
    pub pieces: Vec<Piece>,
}

impl LimitingGeodesic {
    pub fn new(pieces: Vec<Piece>, tol: f64) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Domain("empty limiting geodesic".into()));
        }
        let last = pieces.len() - 1;
        for (k, w) in pieces.windows(2).enumerate() {
            let same = matches!((&w[0], &w[1]), (Piece::Interior(_), Piece::Interior(_)))
                || matches!((&w[0], &w[1]), (Piece::BoundaryArc { .. }, Piece::BoundaryArc { .. }));
            if same {
                return Err(Error::Domain(format!("pieces {k} and {} do not alternate", k + 1)));
            }
        }
        for (k, p) in pieces.iter().enumerate() {
            if let Piece::BoundaryArc { length, .. } = p {
                let terminal = k == 0 || k == last;
                let ok = if terminal { *length <= PI + tol } else { (length - PI).abs() <= tol };
                if !ok {
                    return Err(Error::Domain(format!("boundary arc {k} has length {length}")));
                }
            }
        }
        Ok(Self { pieces })
    }

    /// Incoming segment into the tip, the arc over it, and the outgoing segment.
    pub fn through_tip(metric: &ConicMetric, incoming: RaySegment, outgoing: RaySegment, tol: f64) -> Result<Self> {
        let from = incoming.last().wrapped_theta(metric.period());
        let to = outgoing.samples[0].wrapped_theta(metric.period());
        let cross = &metric.cross_section;
        let total = cross.total_length();
        let fwd = (cross.arc_length(to) - cross.arc_length(from)).rem_euclid(total);
        let length = fwd.min(total - fwd);
        Self::new(vec![Piece::Interior(incoming), Piece::BoundaryArc { from, to, length }, Piece::Interior(outgoing)], tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::covector::EdgeCovector;
    use crate::flow::integrate::{integrate_flow, FlowOptions};
    use crate::geometry::metric::{CrossSection, Perturbation, TabulatedCircle};
    use crate::numerics::quad::adaptive;

    #[test]
    fn circle_continuations() {
        let m = ConicMetric::model(4.0 * PI, 1.0).unwrap();
        let g = geometric_continuations(&m, 0.0);
        assert_eq!(g.len(), 2);
        assert!((g[0] - PI).abs() < 1e-14 && (g[1] - 3.0 * PI).abs() < 1e-14);
        let m = ConicMetric::model(2.0 * PI, 1.0).unwrap();
        let g = geometric_continuations(&m, 0.0);
        assert_eq!(g.len(), 1);
        assert!((g[0] - PI).abs() < 1e-14);
    }

    #[test]
    fn tabulated_matches_quadrature() {
        // total length 4π, nonuniform speed
        let n = 48;
        let speed = |t: f64| 2.0 * (1.0 + 0.3 * t.cos() + 0.1 * (2.0 * t).sin());
        let samples = (0..n).map(|i| speed(2.0 * PI * i as f64 / n as f64).powi(2)).collect();
        let tab = TabulatedCircle::new(samples, 2.0 * PI).unwrap();
        let m = ConicMetric::new(2, CrossSection::Tabulated1D(tab), Perturbation::Product, 1.0).unwrap();
        assert!((m.cross_section.total_length() - 4.0 * PI).abs() < 1e-10);
        let y = 0.9;
        for z in geometric_continuations(&m, y) {
            // arc from y to z (either way round) by independent quadrature
            let fwd = adaptive(speed, y, if z > y { z } else { z + 2.0 * PI }, 1e-13, 1e-13);
            let ok = (fwd - PI).abs() < 1e-8 || (4.0 * PI - fwd - PI).abs() < 1e-8;
            assert!(ok, "z={z} fwd={fwd}");
        }
    }

    #[test]
    fn relation_is_symmetric_and_covers() {
        let m = ConicMetric::model(4.0 * PI, 1.0).unwrap();
        for k in 0..16 {
            let y = 0.37 * k as f64;
            for z in geometric_continuations(&m, y) {
                let back = geometric_continuations(&m, z);
                assert!(back.iter().any(|w| {
                    let d = (w - y).rem_euclid(4.0 * PI);
                    d.min(4.0 * PI - d) < 1e-12
                }));
            }
        }
        assert!(covering_defect(&m, 64, 1.0).unwrap() < 1e-12);
        let p = RadialRay { t_tip: 2.0, y: 0.0, sign: RaySign::Minus, kind: RayKind::Outgoing };
        let q = gamma_relation(&m, &p).unwrap();
        assert_eq!(q.len(), 2);
        assert!(q.iter().all(|r| r.sign == RaySign::Minus && r.t_tip == 2.0 && r.kind == RayKind::Incoming));
    }

    #[test]
    fn limiting_geodesic_validation() {
        let m = ConicMetric::model(4.0 * PI, 2.0).unwrap();
        let inc = EdgeCovector::on_characteristic(&m, 0.0, 1.0, 0.5, -1.0, 0.0, 1.0).unwrap();
        let seg_in = integrate_flow(&m, &inc, 1e9, &FlowOptions::default()).unwrap();
        let out = EdgeCovector::on_characteristic(&m, 0.0, 1e-3, 0.5 + PI, 1.0, 0.0, 1.0).unwrap();
        let seg_out = integrate_flow(&m, &out, 1.0, &FlowOptions::default()).unwrap();
        assert!(LimitingGeodesic::through_tip(&m, seg_in.clone(), seg_out.clone(), 1e-12).is_ok());
        let bad = EdgeCovector { theta: 0.5 + 2.0, ..out };
        let seg_bad = integrate_flow(&m, &bad, 1.0, &FlowOptions::default()).unwrap();
        assert!(LimitingGeodesic::through_tip(&m, seg_in.clone(), seg_bad, 1e-12).is_err());
        let two_interior = vec![Piece::Interior(seg_in.clone()), Piece::Interior(seg_out)];
        assert!(LimitingGeodesic::new(two_interior, 1e-12).is_err());
        let long_middle = vec![
            Piece::Interior(seg_in.clone()),
            Piece::BoundaryArc { from: 0.0, to: 2.0, length: 2.0 },
            Piece::Interior(seg_in),
        ];
        assert!(LimitingGeodesic::new(long_middle, 1e-12).is_err());
    }
}
