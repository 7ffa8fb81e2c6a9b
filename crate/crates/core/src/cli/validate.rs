//! The acceptance suite: thirteen end-to-end checks, each at its stated
//! tolerance and runtime budget. Shared by `conelab validate` and the
//! `acceptance` integration test.

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::develop::{line_deviation, unroll};
use crate::flow::relations::covering_defect;
use crate::flow::{geometric_continuations, integrate_flow, model_closed_form, near_miss_deflection, EdgeCovector, FlowOptions};
use crate::geometry::collar::{CollarFamily, CollarMetric};
use crate::geometry::normal_form::{normal_form, NormalFormOptions};
use crate::geometry::{indicial_data, ConicMetric, CrossSection, Perturbation, PolarGrid};
use crate::microlocal::fbi::{fbi_adjoint, fbi_transform, FbiFrame, FnField};
use crate::microlocal::multiplier::{theta_smooth, MultiplierOptions};
use crate::microlocal::scan::{wavefront_scan, Emission, FrontClass, ScanOptions};
use crate::microlocal::sobolev::{sobolev_estimate, EstimatorOptions};
use crate::spectral::bessel::{bessel_j, bessel_zeros};
use crate::spectral::commutators::{
    box_lap_y_residual, box_r_residual, CartesianGrid, SpaceTimeField, SpaceTimeGrid, SpatialGrid,
};
use crate::spectral::kernels::{mollified_image_kernel, mollified_plane_kernel, polar_distance};
use crate::spectral::radial::{evolve_mode_spectral, RadialMode};
use crate::spectral::state::{fundamental_solution, ProfileGrid, SolverOptions, SourceSpec, WaveState};

#[derive(Debug, Clone, Serialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub title: String,
    pub passed: bool,
    pub measured: String,
    pub seconds: f64,
    pub budget_seconds: Option<f64>,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} [{}] {}: {} ({:.1} s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.measured,
            self.seconds
        )
    }
}

struct Check {
    passed: bool,
    measured: String,
}

type CheckFn = fn() -> Result<Check>;

const CRITERIA: [(u32, &str, Option<f64>, CheckFn); 13] = [
    (1, "flow vs closed form", Some(5.0), flow_closed_form),
    (2, "developing map and near-miss deflection", Some(10.0), developing_map),
    (3, "geometric relation and covering", Some(1.0), geometric_relation),
    (4, "flat-plane kernel oracle", Some(120.0), flat_plane_oracle),
    (5, "method of images", Some(180.0), method_of_images),
    (6, "diffracted front and its order", Some(300.0), diffracted_front),
    (7, "regularity gap", None, regularity_gap),
    (8, "diffractive theorem near the tip", None, diffractive_theorem),
    (9, "commutator identities", Some(60.0), commutator_identities),
    (10, "FBI near-inversion and order shifts", None, fbi_and_shifts),
    (11, "indicial data and Bessel evaluator", None, indicial_and_bessel),
    (12, "normal form", Some(30.0), normal_form_check),
    (13, "determinism and conservation", None, determinism_and_conservation),
];

pub fn criterion_ids() -> Vec<u32> {
    CRITERIA.iter().map(|c| c.0).collect()
}

pub fn run_criterion(id: u32) -> Result<CriterionOutcome> {
    let (_, title, budget, check) = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .ok_or_else(|| Error::Config(format!("no acceptance criterion {id}")))?;
    let start = Instant::now();
    let result = check();
    let seconds = start.elapsed().as_secs_f64();
    let (mut passed, mut measured) = match result {
        Ok(c) => (c.passed, c.measured),
        Err(e) => (false, format!("error: {e}")),
    };
    if let Some(b) = budget {
        if seconds > *b {
            passed = false;
            measured.push_str(&format!("; over the {b} s budget"));
        }
    }
    Ok(CriterionOutcome { id, title: title.to_string(), passed, measured, seconds, budget_seconds: *budget })
}

pub fn run_all(ids: &[u32]) -> Result<Vec<CriterionOutcome>> {
    ids.iter().map(|&id| run_criterion(id)).collect()
}

fn rel_l2(got: &[f64], want: &[f64], weights: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((g, w), q) in got.iter().zip(want).zip(weights) {
        num += q * (g - w).powi(2);
        den += q * w * w;
    }
    (num / den).sqrt()
}

// 1 -------------------------------------------------------------------------

fn flow_closed_form() -> Result<Check> {
    let cases = [
        (2.0 * PI, 1.0, 0.0, 0.0, 1.0),
        (2.0 * PI, 2.0, 0.3, -0.4, 0.7),
        (4.0 * PI, 0.5, 1.0, 0.8, -0.3),
        (3.0, 1.5, 2.0, -0.9, 0.2),
        (9.0, 3.0, -1.0, 0.1, 1.3),
    ];
    let mut worst: f64 = 0.0;
    for (l, x, th, xi, eta) in cases {
        let m = ConicMetric::model(l, 1e3)?;
        let q = EdgeCovector::on_characteristic(&m, 0.0, x, th, xi, eta, 1.0)?;
        let c = q.eta.abs();
        let phase0 = (q.xi / c).atan();
        let s_end = (1.3 - phase0) / c;
        let outs: Vec<f64> = (0..=40).map(|k| s_end * k as f64 / 40.0).collect();
        let seg = integrate_flow(&m, &q, s_end, &FlowOptions { outputs: Some(outs), ..FlowOptions::with_tol(1e-12) })?;
        for (s, p) in seg.params.iter().zip(&seg.samples) {
            let exact = model_closed_form(&q, *s);
            for (a, b) in p.to_array().iter().zip(exact.to_array()) {
                worst = worst.max((a - b).abs() / b.abs().max(1.0));
            }
        }
    }
    Ok(Check { passed: worst <= 1e-8, measured: format!("max relative error {worst:.2e} (tol 1e-8)") })
}

// 2 -------------------------------------------------------------------------

fn developing_map() -> Result<Check> {
    let mut deviation: f64 = 0.0;
    for l in [1.0, 3.0, 2.0 * PI, 4.0 * PI, 9.0] {
        let m = ConicMetric::model(l, 1e3)?;
        let q = EdgeCovector::on_characteristic(&m, 0.0, 1.0, 0.4, -0.6, 0.5, 1.0)?;
        let outs: Vec<f64> = (0..=60).map(|k| 2.0 * k as f64 / 60.0).collect();
        let seg = integrate_flow(&m, &q, 2.0, &FlowOptions { outputs: Some(outs), ..FlowOptions::with_tol(1e-12) })?;
        let pts: Vec<(f64, f64)> = seg.samples.iter().map(|p| unroll(p.x, p.theta)).collect();
        let last = pts[pts.len() - 1];
        let dir = (last.0 - pts[0].0, last.1 - pts[0].1);
        deviation = deviation.max(line_deviation(&pts, dir));
    }
    let mut monotone = true;
    let mut final_err: f64 = 0.0;
    let y = 0.7;
    for l in [2.0 * PI, 3.0 * PI, 4.0 * PI] {
        let m = ConicMetric::model(l, 2.0)?;
        for sign in [1.0, -1.0] {
            let mut prev = f64::INFINITY;
            for eps in [1e-2, 1e-3, 1e-4] {
                let r = near_miss_deflection(&m, y, sign * eps, 1.0, 1e-12)?;
                let target = y + sign * PI;
                let err = (r.exit_angle - target).abs();
                // the plane is exact at every ε
                if l != 2.0 * PI && err >= prev {
                    monotone = false;
                }
                prev = err;
            }
            final_err = final_err.max(prev);
        }
    }
    let passed = deviation <= 1e-8 && monotone && final_err < 1e-3;
    Ok(Check {
        passed,
        measured: format!(
            "line deviation {deviation:.2e} (tol 1e-8); exit-angle error at eps=1e-4 {final_err:.2e}, monotone {monotone}"
        ),
    })
}

// 3 -------------------------------------------------------------------------

fn geometric_relation() -> Result<Check> {
    let l = 4.0 * PI;
    let m = ConicMetric::model(l, 1.0)?;
    let mut worst: f64 = 0.0;
    let mut exact_count = true;
    for k in 0..32 {
        let y = 0.39 * k as f64;
        let g = geometric_continuations(&m, y);
        let mut want = [(y + PI).rem_euclid(l), (y - PI).rem_euclid(l)];
        want.sort_by(f64::total_cmp);
        if g.len() != 2 {
            exact_count = false;
            continue;
        }
        for (a, b) in g.iter().zip(want) {
            worst = worst.max((a - b).abs());
        }
    }
    let defect = covering_defect(&m, 64, 1.0)?;
    let passed = exact_count && worst <= 1e-12 && defect <= 1e-12;
    Ok(Check {
        passed,
        measured: format!("continuation error {worst:.1e}, two points each {exact_count}, covering defect {defect:.1e} (64 rays)"),
    })
}

// 4 -------------------------------------------------------------------------

/// `L²` error of the flat-cone fundamental solution against the mollified
/// free kernel on an `n × n` developed grid.
pub fn flat_plane_error(state: &WaveState, t: f64, n: usize) -> Result<f64> {
    let src = state.source.ok_or_else(|| Error::Config("state has no source".into()))?;
    let (lo_x, lo_y, width) = (-0.25, -1.25, 2.5);
    let h = width / n as f64;
    let mut points = Vec::with_capacity(n * n);
    let mut exact = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let (px, py) = (lo_x + (i as f64 + 0.5) * h, lo_y + (j as f64 + 0.5) * h);
            let (x, th) = ((px * px + py * py).sqrt(), py.atan2(px));
            points.push((x, th));
            exact.push(mollified_plane_kernel(t, polar_distance(x, th, src.x, src.theta), src.sigma));
        }
    }
    let got = state.values_at(t, &points, ProfileGrid { step: h / 2.0 })?;
    Ok(rel_l2(&got, &exact, &vec![1.0; got.len()]))
}

fn flat_plane_oracle() -> Result<Check> {
    let sigma = 4.0 * 2.5 / 512.0;
    let t = 1.0;
    let metric = ConicMetric::model(2.0 * PI, 2.7)?;
    let state = fundamental_solution(
        &metric,
        SourceSpec { x: 1.0, theta: 0.0, sigma },
        &SolverOptions { t_final: t, ..Default::default() },
    )?;
    let errs: Vec<f64> = [128, 256, 512].iter().map(|&n| flat_plane_error(&state, t, n)).collect::<Result<_>>()?;
    let improving = errs.windows(2).all(|w| w[1] < w[0]);
    let passed = errs[2] <= 1e-2 && improving;
    Ok(Check {
        passed,
        measured: format!(
            "L2 rel error {:.2e} / {:.2e} / {:.2e} at 128/256/512 (tol 1e-2); {} pairs",
            errs[0], errs[1], errs[2], state.certificate.pairs
        ),
    })
}

// 5 -------------------------------------------------------------------------

pub fn image_error(k: usize, sigma: f64, t: f64) -> Result<f64> {
    let l = 2.0 * PI / k as f64;
    let metric = ConicMetric::model(l, 2.7)?;
    let src = SourceSpec { x: 1.0, theta: 0.3 * l, sigma };
    let state = fundamental_solution(&metric, src, &SolverOptions { t_final: t, ..Default::default() })?;
    let (nx, nth) = (256usize, 128usize);
    let x_hi = 2.3;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut exact = Vec::new();
    for i in 0..nx {
        let x = (i as f64 + 0.5) * x_hi / nx as f64;
        for j in 0..nth {
            let th = j as f64 * l / nth as f64;
            points.push((x, th));
            weights.push(x);
            exact.push(mollified_image_kernel(k, t, x, th, src.x, src.theta, sigma)?);
        }
    }
    let got = state.values_at(t, &points, ProfileGrid { step: x_hi / nx as f64 / 2.0 })?;
    Ok(rel_l2(&got, &exact, &weights))
}

fn method_of_images() -> Result<Check> {
    let e2 = image_error(2, 0.02, 1.0)?;
    let e3 = image_error(3, 0.02, 1.0)?;
    Ok(Check {
        passed: e2 <= 1e-2 && e3 <= 1e-2,
        measured: format!("L2 rel error {e2:.2e} (L=π), {e3:.2e} (L=2π/3) (tol 1e-2)"),
    })
}

// 6, 7 ----------------------------------------------------------------------

/// Measurements on the 4π-cone fundamental solution shared by criteria 6
/// and 7.
#[derive(Debug, Clone, Serialize)]
pub struct DiffractionMeasurements {
    pub sigma: f64,
    pub s_diffracted: f64,
    pub s_diffracted_ci: (f64, f64),
    pub s_direct: f64,
    pub s_direct_ci: (f64, f64),
    /// `(θ, u(t_f + 6σ) - u(t_f - 6σ))` along the front at `x = 0.5`
    pub jumps: Vec<(f64, f64)>,
    /// the same difference over a window ending before the front
    pub smooth_variation: f64,
    pub pairs: usize,
}

pub const DIFFRACTION_SIGMA: f64 = 0.015;

/// The 4π cone with a pole at `(1, 0)`, valid up to `t = 2.2`.
pub fn diffraction_state() -> Result<WaveState> {
    let metric = ConicMetric::model(4.0 * PI, 3.4)?;
    fundamental_solution(
        &metric,
        SourceSpec { x: 1.0, theta: 0.0, sigma: DIFFRACTION_SIGMA },
        &SolverOptions { t_final: 2.2, ..Default::default() },
    )
}

/// Local order of `state` at `(x, θ)` around time `centre`.
pub fn probe_order(state: &WaveState, x: f64, theta: f64, centre: f64, sigma: f64) -> Result<(f64, (f64, f64))> {
    let dt = sigma / 4.0;
    let hw = 0.6;
    let start = centre - hw - 4.0 * dt;
    let count = ((2.0 * hw) / dt).ceil() as usize + 9;
    let u = state.time_series(x, theta, start, dt, count);
    let opts = EstimatorOptions { mollifier_sigma: Some(sigma), ..Default::default() };
    let e = sobolev_estimate(&u, start, dt, centre, hw, &opts)?;
    Ok((e.s, e.ci))
}

pub fn measure_diffraction() -> Result<DiffractionMeasurements> {
    let sigma = DIFFRACTION_SIGMA;
    let state = diffraction_state()?;
    let (x, x_bar) = (0.5, 1.0);
    let t_front = x + x_bar;
    let (s_diffracted, s_diffracted_ci) = probe_order(&state, x, 2.0 * PI, t_front, sigma)?;
    let (s_direct, s_direct_ci) = probe_order(&state, x, 0.0, x_bar - x, sigma)?;
    let (delta, n) = (0.4, 33);
    let jumps: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let th = PI + delta + (2.0 * PI - 2.0 * delta) * k as f64 / (n - 1) as f64;
            let j = state.value(t_front + 6.0 * sigma, x, th) - state.value(t_front - 6.0 * sigma, x, th);
            (th, j)
        })
        .collect();
    let th = 2.0 * PI;
    let smooth_variation =
        (state.value(t_front - 6.0 * sigma, x, th) - state.value(t_front - 18.0 * sigma, x, th)).abs();
    Ok(DiffractionMeasurements {
        sigma,
        s_diffracted,
        s_diffracted_ci,
        s_direct,
        s_direct_ci,
        jumps,
        smooth_variation,
        pairs: state.certificate.pairs,
    })
}

fn diffraction() -> std::result::Result<&'static DiffractionMeasurements, String> {
    static CELL: OnceLock<std::result::Result<DiffractionMeasurements, String>> = OnceLock::new();
    CELL.get_or_init(|| measure_diffraction().map_err(|e| e.to_string())).as_ref().map_err(|e| e.clone())
}

/// Largest step between neighbours, on every sample and on every other one.
fn max_steps(values: &[f64]) -> (f64, f64) {
    let fine = values.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    let coarse: Vec<f64> = values.iter().step_by(2).copied().collect();
    let coarse = coarse.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    (fine, coarse)
}

fn diffracted_front() -> Result<Check> {
    let d = diffraction().map_err(Error::Domain)?;
    let js: Vec<f64> = d.jumps.iter().map(|p| p.1).collect();
    let j_mid = js[js.len() / 2];
    let smallest = js.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let (fine, coarse) = max_steps(&js);
    // a continuous profile has neighbour steps shrinking with the spacing
    let continuous = fine <= 0.6 * coarse && smallest > 0.0;
    let jump = j_mid.abs() > 10.0 * d.smooth_variation;
    let order_ok = (0.35..=0.65).contains(&d.s_diffracted);
    Ok(Check {
        passed: order_ok && jump && continuous,
        measured: format!(
            "s_diff {:.3} CI [{:.3}, {:.3}] (target [0.35, 0.65]); jump at θ=2π {:.3e} vs smooth variation {:.1e}; min |jump| {:.2e}, neighbour steps {:.2e} -> {:.2e} on refinement",
            d.s_diffracted, d.s_diffracted_ci.0, d.s_diffracted_ci.1, j_mid, d.smooth_variation, smallest, coarse, fine
        ),
    })
}

fn regularity_gap() -> Result<Check> {
    let d = diffraction().map_err(Error::Domain)?;
    let gap = d.s_diffracted - d.s_direct;
    Ok(Check {
        passed: (0.3..=0.7).contains(&gap),
        measured: format!("s_diff - s_direct = {:.3} - ({:.3}) = {gap:.3} (target [0.3, 0.7])", d.s_diffracted, d.s_direct),
    })
}

// 8 -------------------------------------------------------------------------

pub const TIP_PROBES: [f64; 3] = [0.05, 0.1, 0.2];

/// Pulses from the tip: `E(t + t0)` (outgoing throughout) and `E(t0 - t)`
/// (converging on the tip at `t0`), with `E` the tip fundamental solution.
pub fn tip_pulses(t0: f64, window: f64, sigma: f64) -> Result<(WaveState, WaveState)> {
    let metric = ConicMetric::model(4.0 * PI, t0 + window + 12.0 * sigma + 0.2)?;
    let e = fundamental_solution(
        &metric,
        SourceSpec { x: 0.0, theta: 0.0, sigma },
        &SolverOptions { t_final: t0 + window, ..Default::default() },
    )?;
    Ok((e.time_shifted(t0), e.time_reversed().time_shifted(-t0)))
}

fn diffractive_theorem() -> Result<Check> {
    let (t0, window, sigma) = (1.5, 3.6, DIFFRACTION_SIGMA);
    let (outgoing, inward) = tip_pulses(t0, window, sigma)?;
    let probes: Vec<(f64, f64)> = TIP_PROBES.iter().map(|&x| (x, 0.0)).collect();
    let mut opts = ScanOptions::new(0.0, window, sigma / 4.0, 0.6);
    opts.estimator.mollifier_sigma = Some(sigma);
    opts.emission = Some(Emission { x: 0.0, theta: 0.0, time: -t0 });
    let out = wavefront_scan(&outgoing, &probes, &opts)?;
    let out_singular = out.entries.iter().filter(|e| e.class != FrontClass::Smooth).count();
    let min_out = out.entries.iter().map(|e| e.estimate.s).fold(f64::INFINITY, f64::min);
    opts.emission = Some(Emission { x: 0.0, theta: 0.0, time: t0 });
    let inw = wavefront_scan(&inward, &probes, &opts)?;
    let anomalies = inw.count(FrontClass::Anomaly);
    let detections = inw.entries.iter().filter(|e| e.class != FrontClass::Smooth).count();
    let every_probe_detects = TIP_PROBES
        .iter()
        .all(|&x| inw.entries.iter().any(|e| e.estimate.location.x == x && e.class != FrontClass::Smooth));
    let quiet_windows = inw.entries.iter().filter(|e| e.direct_times.is_empty() && e.diffracted_times.is_empty());
    let quiet_total = quiet_windows.clone().count();
    let quiet_smooth = quiet_windows.filter(|e| e.class == FrontClass::Smooth).count();
    let passed = out_singular == 0 && anomalies == 0 && every_probe_detects && quiet_smooth == quiet_total && quiet_total > 0;
    Ok(Check {
        passed,
        measured: format!(
            "outgoing: {out_singular}/{} windows singular (min s {:.2}); inward: {detections} singular windows, all at arrivals ± window ({anomalies} off-locus), {quiet_smooth}/{quiet_total} windows away from arrivals smooth",
            out.entries.len(),
            min_out
        ),
    })
}

// 9 -------------------------------------------------------------------------

/// `[□,Δ_Y]` and `[□,R]+2i□` residuals (`R` centred at `t̄ = 0.3`) of a
/// space-time bump on the developed `n × n` grid of the flat cone.
pub fn product_residuals(n: usize) -> Result<(f64, f64)> {
    let flat = ConicMetric::model(2.0 * PI, 3.0)?;
    let bump = |t: f64, x: f64, y: f64| {
        let r2 = ((t - 0.5) / 0.15).powi(2) + ((x - 1.0) / 0.15).powi(2) + ((y - 0.2) / 0.2).powi(2);
        (-r2).exp()
    };
    let h = 1.2 / (n - 1) as f64;
    let grid =
        SpaceTimeGrid::new(0.0, 1.0, n, SpatialGrid::Cartesian(CartesianGrid { x0: 0.4, y0: -0.4, h, nx: n, ny: n }))?;
    let f = SpaceTimeField::sample(&grid, bump);
    Ok((box_lap_y_residual(&flat, &f)?, box_r_residual(&flat, &f, 0.3)?))
}

/// `[□,Δ_Y]` residual on the cone perturbed by `a cos(mθ)` at polar
/// resolution `n × 2n`.
pub fn perturbed_residual(n: usize, a: f64, m: u32) -> Result<f64> {
    let perturbed = ConicMetric::new(
        2,
        CrossSection::AnalyticCircle { circumference: 2.0 * PI },
        Perturbation::Angular { a, m },
        3.0,
    )?;
    let angular_bump = |t: f64, x: f64, th: f64| {
        let r2 = ((t - 0.5) / 0.15).powi(2) + ((x - 1.0) / 0.15).powi(2);
        (-r2).exp() * (1.0 + 0.5 * (th - 1.0).cos() + 0.25 * (2.0 * th).sin())
    };
    let g = SpaceTimeGrid::new(0.0, 1.0, n, SpatialGrid::Polar(PolarGrid::new(0.4, 1.6, n, 2 * n, 2.0 * PI)?))?;
    box_lap_y_residual(&perturbed, &SpaceTimeField::sample(&g, angular_bump))
}

fn commutator_identities() -> Result<Check> {
    let (lap0, r0) = product_residuals(24)?;
    let (lap1, r1) = product_residuals(48)?;
    let order_lap = (lap0 / lap1).log2();
    let order_r = (r0 / r1).log2();
    let floor = [perturbed_residual(20, 0.3, 1)?, perturbed_residual(40, 0.3, 1)?];
    let floor_change = ((floor[0] - floor[1]) / floor[1]).abs();
    let passed = (order_lap - 2.0).abs() <= 0.3 && (order_r - 2.0).abs() <= 0.3 && floor[1] > 0.1 && floor_change < 0.15;
    Ok(Check {
        passed,
        measured: format!(
            "orders {order_lap:.2} ([□,Δ_Y]) and {order_r:.2} ([□,R]+2i□) (target 2 ± 0.3); perturbed floor {:.3} -> {:.3}",
            floor[0], floor[1]
        ),
    })
}

// 10 ------------------------------------------------------------------------

/// `‖T*T u - u‖ / ‖u‖` for a complex signal with spectrum inside [8, 64].
pub fn fbi_inversion_error() -> Result<f64> {
    let frame = FbiFrame::new(-10.0, 0.015, 1334, FbiFrame::tau_grid(1.0, 130.0, 0.25), vec![0.0], vec![0.0], 1.0)?;
    let tones = [(12.0, 1.0, 0.0), (25.5, 0.7, 1.0), (40.0, -0.4, 0.5), (55.0, 0.9, -2.0)];
    let u = move |t: f64| -> Complex64 {
        let env = (-t * t / 8.0).exp();
        tones.iter().map(|&(w, c, ph)| Complex64::from_polar(c * env, w * t + ph)).sum()
    };
    let back = &fbi_adjoint(&fbi_transform(&FnField(move |t: f64, _: f64, _: f64| u(t)), &frame))[0];
    let (mut num, mut den) = (0.0, 0.0);
    for (i, b) in back.iter().enumerate() {
        let v = u(frame.time(i));
        num += (b - v).norm_sqr();
        den += v.norm_sqr();
    }
    Ok((num / den).sqrt())
}

fn fbi_and_shifts() -> Result<Check> {
    let tt = fbi_inversion_error()?;

    let dt = 0.004;
    let u: Vec<f64> = (0..1000)
        .map(|i| {
            let t = -2.0 + i as f64 * dt;
            (-(t * t) / 0.08).exp() * ((40.0 * t).cos() + 0.5 * (70.0 * t + 0.3).sin())
        })
        .collect();
    let mo = MultiplierOptions::default();
    let mut inverse: f64 = 0.0;
    for s in [0.5, 1.0, 2.0] {
        let v = theta_smooth(&theta_smooth(&u, dt, -s, &mo), dt, s, &mo);
        let num: f64 = v.iter().zip(&u).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = u.iter().map(|b| b * b).sum();
        inverse = inverse.max((num / den).sqrt());
    }

    let dt = 0.002;
    let step: Vec<f64> = (0..1000).map(|i| if -1.0 + i as f64 * dt >= 0.0 { 1.0 } else { 0.0 }).collect();
    let eo = EstimatorOptions::default();
    let base = sobolev_estimate(&step, -1.0, dt, 0.0, 0.6, &eo)?.s;
    let mut shift_err: f64 = 0.0;
    for s in [-1.0, -0.5, 0.5, 1.0] {
        let shifted = theta_smooth(&step, dt, s, &mo);
        let e = sobolev_estimate(&shifted, -1.0, dt, 0.0, 0.6, &eo)?.s;
        shift_err = shift_err.max((e - (base - s)).abs());
    }
    let passed = tt <= 1e-3 && inverse <= 1e-3 && shift_err <= 0.15;
    Ok(Check {
        passed,
        measured: format!(
            "‖T*Tu-u‖/‖u‖ {tt:.2e}; Θ_sΘ_-s error {inverse:.2e} (tol 1e-3); estimator shift error {shift_err:.3} (tol 0.15)"
        ),
    })
}

// 11 ------------------------------------------------------------------------

fn indicial_and_bessel() -> Result<Check> {
    let mut nu_err: f64 = 0.0;
    for (l, scale) in [(2.0 * PI, 1.0), (4.0 * PI, 0.5)] {
        for d in indicial_data(&ConicMetric::model(l, 1.0)?, 12)? {
            nu_err = nu_err.max((d.bessel_order - scale * d.mode as f64).abs());
        }
    }
    let mut half_err: f64 = 0.0;
    for z in [0.5, 1.0, 5.0, 20.0] {
        let c = (2.0 / (PI * z)).sqrt();
        let exact = [
            c * z.sin(),
            c * (z.sin() / z - z.cos()),
            c * ((3.0 / (z * z) - 1.0) * z.sin() - 3.0 * z.cos() / z),
        ];
        for (k, e) in exact.iter().enumerate() {
            let v = bessel_j(0.5 + k as f64, z, 1e-14)?;
            half_err = half_err.max((v - e).abs() / (1.0 + e.abs()));
        }
    }
    let zero = bessel_zeros(0.0, 1)?[0];
    let zero_err = (zero - 2.404_825_557_695_773).abs();
    Ok(Check {
        passed: nu_err <= 1e-12 && half_err <= 1e-10 && zero_err <= 1e-12,
        measured: format!("ν error {nu_err:.1e}; half-integer Bessel error {half_err:.1e} (tol 1e-10); first J0 zero error {zero_err:.1e} (tol 1e-12)"),
    })
}

// 12 ------------------------------------------------------------------------

fn normal_form_check() -> Result<Check> {
    let opts = NormalFormOptions::default();
    let radial = CollarMetric::new(CollarFamily::Radial { a: 1.0 }, 2.0 * PI, 1.0)?;
    let mut recover: f64 = 0.0;
    for &(r, u) in &[(0.2, 0.0), (0.5, 1.0), (0.7, 2.5), (0.9, 5.0)] {
        let p = normal_form(&radial, r, u, &opts)?;
        recover = recover.max((p.x - r).abs()).max((p.y - u).abs());
    }
    let cross = CollarMetric::new(CollarFamily::CrossTerm { c: 0.1, power: 3 }, 2.0 * PI, 0.4)?;
    let mut cross_term: f64 = 0.0;
    for &(r, u) in &[(0.1, 0.0), (0.3, 0.5), (0.35, 4.0)] {
        cross_term = cross_term.max(normal_form(&cross, r, u, &opts)?.diagnostics.cross_term);
    }
    Ok(Check {
        passed: recover <= 1e-8 && cross_term <= 1e-6,
        measured: format!("(x,y) recovery error {recover:.1e} (tol 1e-8); transformed cross term {cross_term:.1e} (tol 1e-6)"),
    })
}

// 13 ------------------------------------------------------------------------

fn state_bytes(state: &WaveState, tag: &str) -> Result<Vec<(String, Vec<u8>)>> {
    let dir = std::env::temp_dir().join(format!("conelab-determinism-{}-{tag}", std::process::id()));
    if dir.exists() {
        std::fs::remove_dir_all(&dir)?;
    }
    state.save(&dir)?;
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&dir)?
        .map(|e| {
            let e = e?;
            Ok((e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path())?))
        })
        .collect::<Result<_>>()?;
    files.sort();
    std::fs::remove_dir_all(&dir)?;
    Ok(files)
}

fn determinism_and_conservation() -> Result<Check> {
    let src = SourceSpec { x: 1.0, theta: 0.5, sigma: 0.05 };
    let build = |x_max: f64| -> Result<WaveState> {
        fundamental_solution(&ConicMetric::model(4.0 * PI, x_max)?, src, &SolverOptions { t_final: 1.5, ..Default::default() })
    };
    let a = build(3.2)?;
    let b = build(3.2)?;
    let identical = state_bytes(&a, "a")? == state_bytes(&b, "b")?;
    let mut drift: f64 = 0.0;
    let e0 = a.energy(0.0);
    for t in [0.5, 1.0, 1.5, 10.0] {
        drift = drift.max(((a.energy(t) - e0) / e0).abs());
    }
    let mode = RadialMode::new(2.5, 2, 4.0, 200)?;
    let ev = evolve_mode_spectral(&mode, |x| (-((x - 2.0) / 0.3f64).powi(2)).exp(), |x| x * (-((x - 1.5) / 0.4f64).powi(2)).exp())?;
    let m0 = ev.energy(0.0);
    for t in [0.3, 1.7, 9.1, 40.0] {
        drift = drift.max(((ev.energy(t) - m0) / m0).abs());
    }
    // the wall at 2X is invisible wherever the wall at X is
    let wide = build(6.4)?;
    let mut wall: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for t in [0.5, 1.0, 1.5] {
        for i in 0..40 {
            let x = 0.05 + 2.4 * i as f64 / 39.0;
            for th in [0.0, 0.5, 2.0, 6.0] {
                let (u, v) = (a.value(t, x, th), wide.value(t, x, th));
                wall = wall.max((u - v).abs());
                scale = scale.max(v.abs());
            }
        }
    }
    let wall_rel = wall / scale;
    Ok(Check {
        passed: identical && drift <= 1e-10 && wall_rel <= 1e-10,
        measured: format!(
            "repeated runs byte-identical {identical}; energy drift {drift:.1e} (tol 1e-10); wall-doubling change {wall_rel:.1e} of max |u| (tol 1e-10)"
        ),
    })
}
