//! Second-order finite-difference evolution of one angular mode, used as an
//! independent check on the spectral solver.
//!
//! With `w = x^{(n-1)/2} u` the mode equation becomes
//! `w_tt = w_xx - (ν² - 1/4) w / x²` on `(0, X)` with `w = 0` at both ends.
//! Interior nodes use the three-point stencil; the first node instead
//! differentiates the local fit `a x^p + b x^{p+2}` (`p = ν + 1/2`), which
//! the operator maps to `(4p + 2) b x^p`, so the regular solution is not
//! polluted by the `1/x²` term.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct FdOptions {
    /// number of cells on `[0, X]`
    pub cells: usize,
    /// requested ratio `dt / h`
    pub courant: f64,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self { cells: 800, courant: 0.5 }
    }
}

#[derive(Debug, Clone)]
pub struct FdSnapshot {
    pub time: f64,
    /// `u` at the interior nodes
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FdEvolution {
    /// interior nodes `x_1 .. x_{N-1}`
    pub x: Vec<f64>,
    pub dt: f64,
    pub snapshots: Vec<FdSnapshot>,
    /// `(t, E)` at every step
    pub energy: Vec<(f64, f64)>,
}

struct Operator {
    h: f64,
    p: f64,
    potential: Vec<f64>,
}

impl Operator {
    fn new(nu: f64, h: f64, cells: usize) -> Self {
        let c = nu * nu - 0.25;
        let potential = (0..=cells).map(|i| if i == 0 { 0.0 } else { c / (i as f64 * h).powi(2) }).collect();
        Self { h, p: nu + 0.5, potential }
    }

    /// `L w` at the interior nodes; `w[0]` and `w[N]` are held at zero.
    fn apply(&self, w: &[f64], out: &mut [f64]) {
        let n = w.len() - 1;
        let h2 = self.h * self.h;
        let two_p = 2f64.powf(self.p);
        out[0] = 0.0;
        out[n] = 0.0;
        out[1] = (4.0 * self.p + 2.0) * (w[2] - two_p * w[1]) / (3.0 * two_p * h2);
        for i in 2..n {
            out[i] = (w[i + 1] - 2.0 * w[i] + w[i - 1]) / h2 - self.potential[i] * w[i];
        }
    }

    /// Gershgorin bound on the spectral radius of `-L`.
    fn stiffness(&self) -> f64 {
        let h2 = self.h * self.h;
        let two_p = 2f64.powf(self.p);
        let first = (4.0 * self.p + 2.0) * (1.0 + 1.0 / two_p) / (3.0 * h2);
        let rest = self.potential.iter().skip(2).fold(0.0f64, |m, v| m.max(4.0 / h2 + v));
        first.max(rest)
    }
}

/// Leapfrog evolution of `(u, u_t)` to `t_final`, recording `u` at the steps
/// nearest to `snapshot_times`.
#[allow(clippy::too_many_arguments)]
pub fn evolve_mode_fd(
    nu: f64,
    dim: usize,
    x_max: f64,
    u0: impl Fn(f64) -> f64,
    u1: impl Fn(f64) -> f64,
    t_final: f64,
    snapshot_times: &[f64],
    opts: &FdOptions,
) -> Result<FdEvolution> {
    if opts.cells < 8 {
        return Err(Error::Config(format!("need at least 8 cells (got {})", opts.cells)));
    }
    if !(nu >= 0.0) || dim < 2 || !(x_max > 0.0) || !(t_final >= 0.0) {
        return Err(Error::Config(format!(
            "invalid mode problem (nu={nu}, dim={dim}, x_max={x_max}, t_final={t_final})"
        )));
    }
    let n = opts.cells;
    let h = x_max / n as f64;
    let op = Operator::new(nu, h, n);
    let dt_limit = 2.0 / op.stiffness().sqrt();
    let steps = ((t_final / (opts.courant * h)).ceil() as usize).max(1);
    let dt = t_final / steps as f64;
    if !(opts.courant > 0.0) || dt > 0.999 * dt_limit {
        return Err(Error::Config(format!(
            "time step {dt:.3e} violates the stability limit {dt_limit:.3e}; lower courant or refine"
        )));
    }
    let half = 0.5 * (dim as f64 - 1.0);
    let xs: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    let to_w = |f: &dyn Fn(f64) -> f64| -> Vec<f64> {
        xs.iter()
            .enumerate()
            .map(|(i, &x)| if i == 0 || i == n { 0.0 } else { x.powf(half) * f(x) })
            .collect()
    };
    let w0 = to_w(&u0);
    let v0 = to_w(&u1);
    let mut lw = vec![0.0; n + 1];
    op.apply(&w0, &mut lw);
    let mut prev = w0.clone();
    let mut cur: Vec<f64> = (0..=n).map(|i| w0[i] + dt * v0[i] + 0.5 * dt * dt * lw[i]).collect();
    cur[0] = 0.0;
    cur[n] = 0.0;

    let energy_at = |wm: &[f64], w: &[f64], wp: &[f64], lw: &[f64]| -> f64 {
        let mut e = 0.0;
        for i in 1..n {
            let v = (wp[i] - wm[i]) / (2.0 * dt);
            e += 0.5 * h * (v * v - w[i] * lw[i]);
        }
        e
    };
    let to_u = |w: &[f64]| -> Vec<f64> { (1..n).map(|i| w[i] / xs[i].powf(half)).collect() };

    let mut wanted: Vec<(usize, f64)> = snapshot_times
        .iter()
        .map(|&t| (((t / dt).round() as usize).min(steps), t))
        .collect();
    wanted.sort_by_key(|w| w.0);
    let mut snapshots = Vec::with_capacity(wanted.len());
    let mut next_wanted = 0;
    while next_wanted < wanted.len() && wanted[next_wanted].0 == 0 {
        snapshots.push(FdSnapshot { time: 0.0, values: to_u(&w0) });
        next_wanted += 1;
    }
    let mut energy = Vec::with_capacity(steps);
    let mut next = vec![0.0; n + 1];
    for step in 1..=steps {
        op.apply(&cur, &mut lw);
        for i in 1..n {
            next[i] = 2.0 * cur[i] - prev[i] + dt * dt * lw[i];
        }
        energy.push((step as f64 * dt, energy_at(&prev, &cur, &next, &lw)));
        while next_wanted < wanted.len() && wanted[next_wanted].0 == step {
            snapshots.push(FdSnapshot { time: step as f64 * dt, values: to_u(&cur) });
            next_wanted += 1;
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(FdEvolution { x: xs[1..n].to_vec(), dt, snapshots, energy })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(x: f64) -> f64 {
        (-((x - 1.5) / 0.25f64).powi(2)).exp()
    }

    #[test]
    fn rejects_unstable_step() {
        let opts = FdOptions { cells: 100, courant: 1.5 };
        let r = evolve_mode_fd(0.0, 2, 4.0, bump, |_| 0.0, 1.0, &[], &opts);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn half_order_converges_at_second_order() {
        // ν = 1/2, n = 2: w = √x u obeys the free equation, exact by reflection
        let f = |x: f64| (-((x - 1.5) / 0.2f64).powi(2)).exp();
        let odd = |x: f64| if x >= 0.0 { f(x) } else { -f(-x) };
        let t = 1.0;
        let mut errs = Vec::new();
        for cells in [200usize, 400, 800] {
            let opts = FdOptions { cells, courant: 0.5 };
            let ev = evolve_mode_fd(0.5, 2, 4.0, |x| f(x) / x.sqrt(), |_| 0.0, t, &[t], &opts).unwrap();
            let s = &ev.snapshots[0];
            let h = 4.0 / cells as f64;
            let err: f64 = ev
                .x
                .iter()
                .zip(&s.values)
                .map(|(&x, u)| {
                    let w = 0.5 * (odd(x - s.time) + odd(x + s.time));
                    (u * x.sqrt() - w).powi(2) * h
                })
                .sum::<f64>()
                .sqrt();
            errs.push(err);
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 2.0).abs() < 0.2, "order {order} from {errs:?}");
        }
    }

    #[test]
    fn energy_drift_is_small() {
        let opts = FdOptions { cells: 800, courant: 0.5 };
        let ev = evolve_mode_fd(2.3, 2, 4.0, bump, |_| 0.0, 2.0, &[], &opts).unwrap();
        let e0 = ev.energy[0].1;
        let drift = ev.energy.iter().map(|(_, e)| ((e - e0) / e0).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-3, "drift {drift}");
    }
}
