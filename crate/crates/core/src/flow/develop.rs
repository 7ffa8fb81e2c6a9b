//! Developing (unrolling) map of flat cones and geodesic distance on them.

use std::f64::consts::PI;

/// Unrolls `(x, θ)` with θ unwrapped onto the plane.
pub fn unroll(x: f64, theta: f64) -> (f64, f64) {
    (x * theta.cos(), x * theta.sin())
}

/// Lengths of the straight geodesics between two points of the flat cone of
/// circumference `l`: one per image with angular separation at most π.
/// Separation exactly π is the limit through the tip (a straight line when
/// `l = 2π`). Sorted ascending; empty in the shadow.
pub fn direct_distances(l: f64, x1: f64, th1: f64, x2: f64, th2: f64) -> Vec<f64> {
    let base = th1 - th2;
    let kmax = (PI / l).ceil() as i64 + 1;
    let mut out = Vec::new();
    for k in -kmax..=kmax {
        let d = (base + k as f64 * l).abs();
        if d <= PI + 1e-12 {
            out.push((x1 * x1 + x2 * x2 - 2.0 * x1 * x2 * d.cos()).max(0.0).sqrt());
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Geodesic distance on the flat cone: the shortest direct path, or the
/// path through the tip.
pub fn cone_distance(l: f64, x1: f64, th1: f64, x2: f64, th2: f64) -> f64 {
    direct_distances(l, x1, th1, x2, th2).first().copied().unwrap_or(x1 + x2).min(x1 + x2)
}

/// Largest distance of the unrolled samples from the straight line through
/// the first sample with direction `dir`.
pub fn line_deviation(points: &[(f64, f64)], dir: (f64, f64)) -> f64 {
    let n = (dir.0 * dir.0 + dir.1 * dir.1).sqrt();
    let (ux, uy) = (dir.0 / n, dir.1 / n);
    let (x0, y0) = points[0];
    points.iter().map(|(x, y)| ((x - x0) * uy - (y - y0) * ux).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_distance_is_euclidean() {
        let d = cone_distance(2.0 * PI, 1.0, 0.0, 1.0, PI / 2.0);
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(direct_distances(2.0 * PI, 1.0, 0.0, 2.0, 1.0).len(), 1);
    }

    #[test]
    fn shadow_and_images() {
        // 4π cone: points 2π apart only see each other through the tip
        assert!(direct_distances(4.0 * PI, 1.0, 0.0, 0.5, 2.0 * PI).is_empty());
        assert_eq!(cone_distance(4.0 * PI, 1.0, 0.0, 0.5, 2.0 * PI), 1.5);
        // L = π: two images within angle π
        assert_eq!(direct_distances(PI, 1.0, 0.0, 1.0, 0.5).len(), 2);
    }
}
