use std::f64::consts::PI;

use conelab::flow::develop::cone_distance;
use conelab::flow::{
    geometric_continuations, integrate_flow, model_closed_form, near_miss_deflection, upsilon, EdgeCovector, FlowOptions,
};
use conelab::geometry::collar::{CollarFamily, CollarMetric};
use conelab::geometry::laplacian::dirichlet_pairing;
use conelab::geometry::normal_form::{normal_form, normal_form_coordinates, NormalFormOptions};
use conelab::geometry::{ConicMetric, CrossSection, Perturbation, PolarGrid};
use proptest::prelude::*;

fn start(metric: &ConicMetric, x: f64, theta: f64, phi: f64) -> EdgeCovector {
    EdgeCovector::on_characteristic(metric, 0.0, x, theta, phi.cos(), phi.sin(), 1.0).unwrap()
}

fn wrapped_gap(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn symbol_is_conserved(
        l in 1.0f64..13.0,
        x in 0.4f64..2.0,
        theta in 0.0f64..6.0,
        phi in 0.3f64..2.8,
        perturbed in any::<bool>(),
    ) {
        let perturbation = if perturbed { Perturbation::Radial { a: 0.3 } } else { Perturbation::Product };
        let metric = ConicMetric::new(2, CrossSection::AnalyticCircle { circumference: l }, perturbation, 50.0).unwrap();
        let q = start(&metric, x, theta, phi);
        let tol = 1e-10;
        let seg = integrate_flow(&metric, &q, 1.5, &FlowOptions::with_tol(tol)).unwrap();
        // p is quadratic in the fiber, so compare it on the unit fiber sphere
        let p0 = q.normalized(&metric).symbol(&metric);
        for (s, p) in seg.params.iter().zip(&seg.samples) {
            let drift = (p.normalized(&metric).symbol(&metric) - p0).abs();
            prop_assert!(drift <= tol * (1.0 + s.abs()), "s={s}: {drift:e}");
        }
    }

    #[test]
    fn reversed_flow_retraces_the_trajectory(
        x in 0.5f64..2.0,
        theta in 0.0f64..6.0,
        phi in 0.3f64..2.8,
    ) {
        let metric = ConicMetric::model(4.0 * PI, 50.0).unwrap();
        let q = start(&metric, x, theta, phi);
        let outs: Vec<f64> = (0..=10).map(|k| 0.1 * k as f64).collect();
        let fwd = integrate_flow(&metric, &q, 1.0, &FlowOptions { outputs: Some(outs), ..FlowOptions::with_tol(1e-11) }).unwrap();
        // negating the fiber at the end point runs the same curve backwards
        let end = *fwd.last();
        let rev = EdgeCovector { lambda: -end.lambda, xi: -end.xi, eta: -end.eta, ..end };
        let outs: Vec<f64> = (0..=10).map(|k| 0.1 * k as f64).collect();
        let back = integrate_flow(&metric, &rev, 1.0, &FlowOptions { outputs: Some(outs), ..FlowOptions::with_tol(1e-11) }).unwrap();
        prop_assert_eq!(back.samples.len(), 11);
        // back[k] sits at forward parameter 1 - 0.1k
        for (k, b) in back.samples.iter().enumerate() {
            let f = &fwd.samples[10 - k];
            prop_assert!((b.x - f.x).abs() < 1e-8 && (b.theta - f.theta).abs() < 1e-8, "{b:?} vs {f:?}");
            prop_assert!((b.xi + f.xi).abs() < 1e-8 && (b.eta + f.eta).abs() < 1e-8);
        }
    }

    #[test]
    fn continuation_relation_is_symmetric(l in 1.5f64..20.0, y in 0.0f64..1.0) {
        let metric = ConicMetric::model(l, 1.0).unwrap();
        let y = y * l;
        for z in geometric_continuations(&metric, y) {
            let back = geometric_continuations(&metric, z);
            prop_assert!(back.iter().any(|&w| wrapped_gap(w, y, l) < 1e-9), "{y} -> {z} -> {back:?}");
        }
    }

    #[test]
    fn continuations_rotate_with_the_circle(l in 1.5f64..20.0, y in 0.0f64..1.0, c in 0.0f64..1.0) {
        let metric = ConicMetric::model(l, 1.0).unwrap();
        let (y, c) = (y * l, c * l);
        let mut moved: Vec<f64> = geometric_continuations(&metric, y).iter().map(|z| (z + c).rem_euclid(l)).collect();
        let mut direct = geometric_continuations(&metric, (y + c).rem_euclid(l));
        moved.sort_by(f64::total_cmp);
        direct.sort_by(f64::total_cmp);
        prop_assert_eq!(moved.len(), direct.len());
        for (a, b) in moved.iter().zip(&direct) {
            prop_assert!(wrapped_gap(*a, *b, l) < 1e-9);
        }
    }

    #[test]
    fn upsilon_is_the_incoming_radial_limit(
        l in 2.0f64..13.0,
        x in 0.5f64..2.0,
        theta in 0.0f64..6.0,
        phi in 0.3f64..2.8,
        s in -0.5f64..0.5,
    ) {
        // on the model cone x(s) = E sec(Cs + φ0); the radial limits sit at
        // Cs + φ0 = ±π/2, and Υ picks the one the bicharacteristic came from
        let metric = ConicMetric::model(l, 1e6).unwrap();
        let q = start(&metric, x, theta, phi);
        let c = q.eta.abs();
        let phase0 = (q.xi / c).atan();
        let p = model_closed_form(&q, s);
        let ups = upsilon(&metric, &p).unwrap();
        let limit = |edge: f64| model_closed_form(&q, (edge - phase0) / c).theta.rem_euclid(l);
        let edge = limit(q.lambda.signum() * PI / 2.0);
        prop_assert!(wrapped_gap(ups, edge, l) < 1e-9, "Υ={ups}, limit {edge}");
        // and it is the same limit from every point of the line
        prop_assert!((wrapped_gap(ups, upsilon(&metric, &q).unwrap(), l)) < 1e-9);
    }
}

#[test]
fn near_miss_on_the_other_side_exits_at_y_minus_pi() {
    let metric = ConicMetric::model(4.0 * PI, 2.0).unwrap();
    let y = 0.7;
    for eps in [1e-3, 1e-4] {
        let plus = near_miss_deflection(&metric, y, eps, 1.0, 1e-12).unwrap();
        let minus = near_miss_deflection(&metric, y, -eps, 1.0, 1e-12).unwrap();
        assert!((plus.exit_angle - (y + PI)).abs() < 10.0 * eps);
        assert!((minus.exit_angle - (y - PI)).abs() < 10.0 * eps);
        // mirror images of each other about y
        assert!(((plus.exit_angle - y) + (minus.exit_angle - y)).abs() < 1e-9);
    }
}

#[test]
fn plane_near_miss_is_a_straight_line() {
    // a line at distance ε from the origin, parallel to the ray over y, meets
    // the circle of radius R = sqrt(1 + ε²) at angles y + δ and y + π - δ with tan δ = ε
    let metric = ConicMetric::model(2.0 * PI, 2.0).unwrap();
    let y = 0.3;
    for eps in [1e-2, 1e-3, 1e-4] {
        let r = near_miss_deflection(&metric, y, eps, 1.0, 1e-12).unwrap();
        let exact = y + PI - eps.atan();
        assert!((r.exit_angle - exact).abs() < 1e-8, "{} vs {exact}", r.exit_angle);
    }
}

#[test]
fn developed_distance_is_symmetric_and_rotation_invariant() {
    let l = 4.0 * PI;
    for k in 0..20 {
        let (x1, t1, x2, t2) = (0.3 + 0.1 * k as f64, 0.7 * k as f64, 1.1, 2.0 + 0.3 * k as f64);
        let d = cone_distance(l, x1, t1, x2, t2);
        assert!((d - cone_distance(l, x2, t2, x1, t1)).abs() < 1e-14);
        assert!((d - cone_distance(l, x1, t1 + 1.234, x2, t2 + 1.234)).abs() < 1e-12);
        assert!(d <= x1 + x2 + 1e-14);
    }
}

#[test]
fn dirichlet_form_matches_laplacian_pairing_under_refinement() {
    // smooth bumps supported away from the tip and the wall, perturbed metric
    let metric = ConicMetric::new(
        2,
        CrossSection::AnalyticCircle { circumference: 3.0 * PI },
        Perturbation::Angular { a: 0.2, m: 1 },
        3.0,
    )
    .unwrap();
    let l = 3.0 * PI;
    let bump = |cx: f64, ct: f64, w: f64| {
        move |x: f64, t: f64| {
            let dt = wrapped_gap(t, ct, l);
            (-((x - cx) / w).powi(2) - (dt / 1.2).powi(2)).exp()
        }
    };
    let mut gaps = Vec::new();
    for n in [40usize, 80] {
        let grid = PolarGrid::new(0.3, 2.3, n, 2 * n, l).unwrap();
        let u = grid.sample(bump(1.2, 2.0, 0.2));
        let v = grid.sample(bump(1.4, 2.5, 0.25));
        let (form, pairing) = dirichlet_pairing(&metric, &u, &v, &grid).unwrap();
        gaps.push(((form - pairing) / form).abs());
    }
    assert!(gaps[1] < 1e-2, "{gaps:?}");
    assert!(gaps[1] < gaps[0] / 3.0, "{gaps:?}");
}

#[test]
fn normal_form_is_invariant_under_collar_reparametrization() {
    let opts = NormalFormOptions::default();
    for family in [CollarFamily::Radial { a: 1.0 }, CollarFamily::CrossTerm { c: 0.1, power: 3 }] {
        let inner = CollarMetric::new(family, 2.0 * PI, 0.4).unwrap();
        let outer = CollarMetric::reparametrized(inner.clone());
        for &(r, u) in &[(0.05, 0.3), (0.1, 2.0)] {
            let a = normal_form_coordinates(&inner, r * (1.0 + r), u, &opts).unwrap();
            let b = normal_form_coordinates(&outer, r, u, &opts).unwrap();
            assert!((a.0 - b.0).abs() < 1e-7, "x {} vs {}", a.0, b.0);
            assert!(wrapped_gap(a.1, b.1, 2.0 * PI) < 1e-7, "y {} vs {}", a.1, b.1);
        }
    }
}

#[test]
fn model_collar_is_already_normal() {
    let collar = CollarMetric::new(CollarFamily::Product, 2.0 * PI, 1.0).unwrap();
    for &(r, u) in &[(0.1, 0.0), (0.5, 3.0), (0.9, 6.0)] {
        let p = normal_form(&collar, r, u, &NormalFormOptions::default()).unwrap();
        assert!((p.x - r).abs() < 1e-8 && wrapped_gap(p.y, u, 2.0 * PI) < 1e-8);
    }
}
