use std::f64::consts::PI;

use conelab::geometry::ConicMetric;
use conelab::spectral::fd::{evolve_mode_fd, FdOptions};
use conelab::spectral::radial::{evolve_mode_spectral, RadialMode};
use conelab::spectral::state::{fundamental_solution, project_initial_data, ProjectionOptions, SolverOptions, SourceSpec, WaveState};

fn fundamental(l: f64, x_max: f64, source: SourceSpec, t_final: f64) -> WaveState {
    let metric = ConicMetric::model(l, x_max).unwrap();
    fundamental_solution(&metric, source, &SolverOptions { t_final, ..SolverOptions::default() }).unwrap()
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton on the Legendre recurrence.
fn gauss(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (mut xs, mut ws) = (Vec::new(), Vec::new());
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        xs.push(x);
        ws.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (xs, ws)
}

#[test]
fn spectral_and_finite_difference_modes_agree() {
    // a non-half-integer order, so neither route has a closed form
    let (nu, x_max, t) = (1.3, 4.0, 1.2);
    let u0 = |x: f64| (-((x - 2.0) / 0.3f64).powi(2)).exp();
    let u1 = |x: f64| -2.0 * (x - 2.0) / 0.09 * u0(x);
    let mode = RadialMode::new(nu, 2, x_max, 120).unwrap();
    let exact = evolve_mode_spectral(&mode, u0, u1).unwrap();
    let fd = evolve_mode_fd(nu, 2, x_max, u0, u1, t, &[t], &FdOptions { cells: 1600, courant: 0.5 }).unwrap();
    let snap = &fd.snapshots[0];
    let reference = exact.values(snap.time, &fd.x);
    let peak = reference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let err = snap.values.iter().zip(&reference).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(err / peak < 1e-3, "max error {err:e} against peak {peak}");
}

#[test]
fn kernel_is_symmetric_in_source_and_target() {
    let l = 4.0 * PI;
    let (a, b) = ((1.0, 0.4), (1.3, 3.9));
    let sigma = 0.1;
    let from_a = fundamental(l, 4.0, SourceSpec { x: a.0, theta: a.1, sigma }, 1.0);
    let from_b = fundamental(l, 4.0, SourceSpec { x: b.0, theta: b.1, sigma }, 1.0);
    for t in [0.3, 0.7, 1.0] {
        let ab = from_a.value(t, b.0, b.1);
        let ba = from_b.value(t, a.0, a.1);
        assert!((ab - ba).abs() < 1e-8, "t={t}: {ab} vs {ba}");
    }
}

#[test]
fn kernel_is_odd_in_time() {
    let st = fundamental(4.0 * PI, 4.0, SourceSpec { x: 1.0, theta: 0.0, sigma: 0.1 }, 1.0);
    let rev = st.time_reversed();
    for &(t, x, th) in &[(0.4, 1.2, 0.3), (0.9, 0.5, 5.0), (0.05, 1.0, 0.0)] {
        let u = st.value(t, x, th);
        assert!((st.value(-t, x, th) + u).abs() < 1e-12 * (1.0 + u.abs()));
        assert!((rev.value(t, x, th) + u).abs() < 1e-12 * (1.0 + u.abs()));
    }
    assert!(st.value(0.0, 1.0, 0.0).abs() < 1e-12);
}

#[test]
fn rotating_the_source_rotates_the_field() {
    let l = 4.0 * PI;
    let c = 2.345;
    let st = fundamental(l, 4.0, SourceSpec { x: 1.0, theta: 0.5, sigma: 0.1 }, 1.0);
    let turned = fundamental(l, 4.0, SourceSpec { x: 1.0, theta: 0.5 + c, sigma: 0.1 }, 1.0);
    for &(t, x, th) in &[(0.5, 0.8, 0.2), (1.0, 1.7, 7.0), (0.8, 0.1, 11.0)] {
        let u = st.value(t, x, th);
        let v = turned.value(t, x, (th + c).rem_euclid(l));
        assert!((u - v).abs() < 1e-10, "{u} vs {v}");
    }
}

#[test]
fn field_vanishes_outside_the_domain_of_influence() {
    let sigma = 0.05;
    let st = fundamental(4.0 * PI, 3.4, SourceSpec { x: 1.0, theta: 0.0, sigma }, 0.6);
    let t = 0.5;
    // cone distance from the source is |x - 1| along the ray θ = 0
    let near = st.value(t, 1.5, 0.0).abs();
    assert!(near > 1e-2, "front value {near}");
    for x in [2.0, 2.5, 3.0] {
        let far = st.value(t, x, 0.0).abs();
        assert!(far < 1e-8 * near, "x={x}: {far:e}");
    }
}

#[test]
fn moving_the_wall_outside_the_cone_of_influence_changes_nothing() {
    let src = SourceSpec { x: 1.0, theta: 0.2, sigma: 0.1 };
    let near = fundamental(4.0 * PI, 3.4, src, 1.0);
    let far = fundamental(4.0 * PI, 4.5, src, 1.0);
    for &(t, x, th) in &[(0.5, 1.3, 0.6), (1.0, 0.4, 6.5), (0.9, 1.9, 0.2)] {
        let (a, b) = (near.value(t, x, th), far.value(t, x, th));
        assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()), "{a} vs {b}");
    }
}

#[test]
fn coefficient_norm_matches_quadrature_of_the_field() {
    let l = 4.0 * PI;
    let metric = ConicMetric::model(l, 4.0).unwrap();
    let u0 = |x: f64, th: f64| (-((x - 1.5) / 0.3f64).powi(2)).exp() * (1.0 + 0.5 * (2.0 * PI * th / l).cos());
    let opts = ProjectionOptions { m_max: 3, mu_max: 40.0, tail_limit: 1e-10 };
    let st = project_initial_data(&metric, u0, |_, _| 0.0, &opts).unwrap();

    let (gx, gw) = gauss(16);
    let (panels, nth) = (40usize, 32usize);
    let h = 4.0 / panels as f64;
    let l2 = |f: &dyn Fn(f64, f64) -> f64| {
        let mut sum = 0.0;
        for p in 0..panels {
            for (z, w) in gx.iter().zip(&gw) {
                let x = h * (p as f64 + 0.5 * (z + 1.0));
                let ring: f64 = (0..nth).map(|j| f(x, l * j as f64 / nth as f64).powi(2)).sum::<f64>() * l / nth as f64;
                sum += 0.5 * h * w * x * ring;
            }
        }
        sum
    };
    let data = l2(&u0);
    assert!((st.coefficient_norm2(0.0) - data).abs() < 1e-10 * data);
    for t in [0.0, 0.7, 1.4] {
        let field = l2(&|x, th| st.value(t, x, th));
        let coeff = st.coefficient_norm2(t);
        assert!((field - coeff).abs() < 1e-10 * coeff, "t={t}: {field} vs {coeff}");
    }
}
