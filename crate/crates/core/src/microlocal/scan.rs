//! Sliding-window regularity scans of a state along probe time series, with
//! each singular window matched against the predicted fronts.
//!
//! For a pulse emitted at time `t_s` from `(x̄, θ̄)` the direct front reaches
//! `(x, θ)` at `t_s ± d` for every straight-line distance `d` of the
//! developed cone, and the diffracted front at `t_s ± (x + x̄)`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::flow::develop::direct_distances;
use crate::spectral::state::WaveState;

use super::sobolev::{sobolev_estimate, EstimatorOptions, Location, RegularityEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Emission {
    pub x: f64,
    pub theta: f64,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// sampled interval `[t_start, t_end]`
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
    pub half_width: f64,
    /// spacing of window centres
    pub stride: f64,
    /// windows with `s` below this are singular
    pub threshold: f64,
    pub estimator: EstimatorOptions,
    /// where the fronts start; defaults to the state's source at `t = 0`
    pub emission: Option<Emission>,
    /// amplitude, relative to the largest sample over all probes, below
    /// which a window holds only solver residue
    pub relative_floor: f64,
}

impl ScanOptions {
    pub fn new(t_start: f64, t_end: f64, dt: f64, half_width: f64) -> Self {
        Self {
            t_start,
            t_end,
            dt,
            half_width,
            stride: half_width / 2.0,
            threshold: 2.0,
            estimator: EstimatorOptions::default(),
            emission: None,
            relative_floor: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrontClass {
    Smooth,
    Direct,
    Diffracted,
    DirectAndDiffracted,
    Anomaly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub estimate: RegularityEstimate,
    pub class: FrontClass,
    /// predicted arrivals inside the window
    pub direct_times: Vec<f64>,
    pub diffracted_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub emission: Option<Emission>,
    pub threshold: f64,
    pub entries: Vec<ScanEntry>,
}

impl RegularityReport {
    pub fn count(&self, class: FrontClass) -> usize {
        self.entries.iter().filter(|e| e.class == class).count()
    }
}

/// Predicted arrival times `(direct, diffracted)` of the fronts at `(x, θ)`.
pub fn predicted_arrivals(circumference: f64, e: &Emission, x: f64, theta: f64) -> (Vec<f64>, Vec<f64>) {
    let mut direct = Vec::new();
    for d in direct_distances(circumference, x, theta, e.x, e.theta) {
        direct.push(e.time + d);
        direct.push(e.time - d);
    }
    let r = x + e.x;
    (direct, vec![e.time + r, e.time - r])
}

/// Classifies a window from its estimate and the predicted arrivals inside.
pub fn classify(estimate: &RegularityEstimate, threshold: f64, direct: &[f64], diffracted: &[f64]) -> FrontClass {
    if estimate.smooth || estimate.s >= threshold {
        return FrontClass::Smooth;
    }
    match (direct.is_empty(), diffracted.is_empty()) {
        (false, false) => FrontClass::DirectAndDiffracted,
        (false, true) => FrontClass::Direct,
        (true, false) => FrontClass::Diffracted,
        (true, true) => FrontClass::Anomaly,
    }
}

/// Scans every probe `(x, θ)` with windows centred at
/// `t_start + hw + k·stride` while the window stays inside the interval.
/// Arrivals within `hw + 6σ` of a centre (σ the mollifier width) count as
/// inside its window.
pub fn wavefront_scan(state: &WaveState, probes: &[(f64, f64)], opts: &ScanOptions) -> Result<RegularityReport> {
    let emission = opts
        .emission
        .or_else(|| state.source.map(|s| Emission { x: s.x, theta: s.theta, time: 0.0 }));
    let mut est = opts.estimator;
    if est.mollifier_sigma.is_none() {
        est.mollifier_sigma = state.source.map(|s| s.sigma);
    }
    let count = ((opts.t_end - opts.t_start) / opts.dt).floor() as usize + 1;
    let hw = opts.half_width;
    let mut centres = Vec::new();
    let mut c = opts.t_start + hw;
    while c <= opts.t_end - hw + 1e-12 {
        centres.push(c);
        c += opts.stride;
    }
    let series: Vec<Vec<f64>> =
        probes.iter().map(|&(x, theta)| state.time_series(x, theta, opts.t_start, opts.dt, count)).collect();
    let scale = series.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    est.signal_floor = est.signal_floor.max(opts.relative_floor * scale);
    // a mollified front is smeared over a few σ either side of its arrival
    let reach = hw + 6.0 * est.mollifier_sigma.unwrap_or(0.0);
    let mut entries = Vec::new();
    for (&(x, theta), series) in probes.iter().zip(&series) {
        let (direct, diffracted) = match &emission {
            Some(e) => predicted_arrivals(state.circumference, e, x, theta),
            None => (Vec::new(), Vec::new()),
        };
        for &c in &centres {
            let mut estimate = sobolev_estimate(series, opts.t_start, opts.dt, c, hw, &est)?;
            estimate.location = Location { t: c, x, theta };
            let inside = |ts: &[f64]| -> Vec<f64> { ts.iter().copied().filter(|t| (t - c).abs() < reach).collect() };
            let (d, f) = (inside(&direct), inside(&diffracted));
            let class = classify(&estimate, opts.threshold, &d, &f);
            entries.push(ScanEntry { estimate, class, direct_times: d, diffracted_times: f });
        }
    }
    Ok(RegularityReport { emission, threshold: opts.threshold, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microlocal::sobolev::Shell;

    fn estimate(s: f64, smooth: bool) -> RegularityEstimate {
        RegularityEstimate {
            location: Location::default(),
            half_width: 0.5,
            s,
            ci: (s, s),
            residual: 0.0,
            smooth,
            shells: vec![Shell { lo: 1.0, hi: 2.0, energy: 1.0, raw: 1.0 }],
        }
    }

    #[test]
    fn classification_table() {
        assert_eq!(classify(&estimate(4.0, true), 2.0, &[1.0], &[]), FrontClass::Smooth);
        assert_eq!(classify(&estimate(0.5, false), 2.0, &[1.0], &[]), FrontClass::Direct);
        assert_eq!(classify(&estimate(0.5, false), 2.0, &[], &[1.0]), FrontClass::Diffracted);
        assert_eq!(classify(&estimate(0.5, false), 2.0, &[1.0], &[1.1]), FrontClass::DirectAndDiffracted);
        assert_eq!(classify(&estimate(0.5, false), 2.0, &[], &[]), FrontClass::Anomaly);
    }

    #[test]
    fn shadow_has_only_the_diffracted_front() {
        let e = Emission { x: 1.0, theta: 0.0, time: 0.0 };
        let l = 4.0 * std::f64::consts::PI;
        let (d, f) = predicted_arrivals(l, &e, 0.5, 2.0 * std::f64::consts::PI);
        assert!(d.is_empty());
        assert_eq!(f, vec![1.5, -1.5]);
        let (d, _) = predicted_arrivals(l, &e, 0.5, 0.0);
        assert!(d.contains(&0.5));
    }
}
