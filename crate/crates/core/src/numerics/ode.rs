//! Dormand–Prince 5(4) integrator with dense output.

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            h_init: 1e-3,
            h_min: 1e-14,
            h_max: f64::INFINITY,
            max_steps: 1_000_000,
        }
    }
}

/// One accepted step together with its continuous extension.
#[derive(Debug, Clone)]
pub struct Step<const N: usize> {
    pub s0: f64,
    pub s1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    rc: [[f64; N]; 5],
}

impl<const N: usize> Step<N> {
    /// Dense output at `s` in `[s0, s1]`.
    pub fn eval(&self, s: f64) -> [f64; N] {
        let h = self.s1 - self.s0;
        let th = if h == 0.0 { 0.0 } else { (s - self.s0) / h };
        let th1 = 1.0 - th;
        let mut out = [0.0; N];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.rc[0][i]
                + th * (self.rc[1][i]
                    + th1 * (self.rc[2][i] + th * (self.rc[3][i] + th1 * self.rc[4][i])));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Reached the requested end of the span.
    Completed,
    /// The observer asked to stop.
    Stopped,
    /// Step size fell below `h_min`.
    StepUnderflow,
    /// `max_steps` exhausted.
    MaxSteps,
}

#[derive(Debug, Clone)]
pub struct OdeOutcome<const N: usize> {
    pub s: f64,
    pub y: [f64; N],
    pub termination: Termination,
    pub steps: usize,
    pub rejected: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        if *c == 0.0 {
            continue;
        }
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates `y' = f(s, y)` from `s0` towards `s_end` (either direction).
///
/// `observer` sees every accepted step and may stop the integration; the
/// returned state is the last accepted one.
pub fn integrate<const N: usize, F, O>(
    f: F,
    s0: f64,
    y0: [f64; N],
    s_end: f64,
    opts: &OdeOptions,
    mut observer: O,
) -> OdeOutcome<N>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    O: FnMut(&Step<N>) -> Control,
{
    let dir = if s_end >= s0 { 1.0 } else { -1.0 };
    let mut s = s0;
    let mut y = y0;
    let mut h = opts.h_init.abs().min(opts.h_max).min((s_end - s0).abs().max(f64::MIN_POSITIVE));
    let mut k1 = f(s, &y);
    let mut steps = 0usize;
    let mut rejected = 0usize;
    let mut last_err_ratio: f64 = 1e-4;

    loop {
        if (s_end - s) * dir <= 0.0 {
            return OdeOutcome { s, y, termination: Termination::Completed, steps, rejected };
        }
        if steps + rejected >= opts.max_steps {
            return OdeOutcome { s, y, termination: Termination::MaxSteps, steps, rejected };
        }
        if h < opts.h_min {
            return OdeOutcome { s, y, termination: Termination::StepUnderflow, steps, rejected };
        }
        let last = (s + dir * h - s_end) * dir >= 0.0;
        let hs = if last { s_end - s } else { dir * h };

        let k2 = f(s + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
        let k3 = f(s + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(s + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            s + C5 * hs,
            &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            s + hs,
            &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y1 = axpy(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(s + hs, &y1);

        let mut err = 0.0;
        let mut finite = true;
        for i in 0..N {
            let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y1[i].abs());
            err += (e / sc) * (e / sc);
            finite &= y1[i].is_finite();
        }
        let err = if finite { (err / N as f64).sqrt() } else { f64::INFINITY };

        if err <= 1.0 {
            steps += 1;
            let mut rc = [[0.0; N]; 5];
            for i in 0..N {
                let dy = y1[i] - y[i];
                let bspl = hs * k1[i] - dy;
                rc[0][i] = y[i];
                rc[1][i] = dy;
                rc[2][i] = bspl;
                rc[3][i] = dy - hs * k7[i] - bspl;
                rc[4][i] = hs
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let step = Step { s0: s, s1: s + hs, y0: y, y1, rc };
            s += hs;
            y = y1;
            k1 = k7;
            if observer(&step) == Control::Stop {
                return OdeOutcome { s, y, termination: Termination::Stopped, steps, rejected };
            }
            // PI step-size control
            let fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * last_err_ratio.powf(0.4 / 5.0);
            last_err_ratio = err.max(1e-4);
            h = (h * fac.clamp(0.2, 10.0)).min(opts.h_max);
        } else {
            rejected += 1;
            let fac = if err.is_finite() { 0.9 * err.powf(-0.2) } else { 0.1 };
            h *= fac.clamp(0.1, 0.9);
        }
    }
}

/// Locates a root of `g` inside an accepted step by bisection on the dense output.
pub fn locate_event<const N: usize>(step: &Step<N>, g: impl Fn(&[f64; N]) -> f64) -> (f64, [f64; N]) {
    let (mut a, mut b) = (step.s0, step.s1);
    let mut ga = g(&step.y0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let gm = g(&step.eval(m));
        if (gm < 0.0) == (ga < 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    let s = 0.5 * (a + b);
    (s, step.eval(s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_is_accurate() {
        let opts = OdeOptions { rtol: 1e-12, atol: 1e-12, ..Default::default() };
        let out = integrate(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], 10.0, &opts, |_| Control::Continue);
        assert_eq!(out.termination, Termination::Completed);
        assert!((out.y[0] - 10f64.cos()).abs() < 1e-10);
        assert!((out.y[1] + 10f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn backward_integration_and_dense_output() {
        let opts = OdeOptions { rtol: 1e-12, atol: 1e-12, ..Default::default() };
        let mut worst: f64 = 0.0;
        integrate(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], -3.0, &opts, |st| {
            let m = 0.5 * (st.s0 + st.s1);
            worst = worst.max((st.eval(m)[0] - m.exp()).abs());
            Control::Continue
        });
        assert!(worst < 1e-9, "dense output error {worst}");
    }

    #[test]
    fn event_location_finds_crossing() {
        let opts = OdeOptions::default();
        let mut hit = None;
        integrate(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [0.0, 1.0], 5.0, &opts, |st| {
            if st.y0[1] > 0.0 && st.y1[1] <= 0.0 {
                hit = Some(locate_event(st, |y| y[1]).0);
                return Control::Stop;
            }
            Control::Continue
        });
        assert!((hit.unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
    }
}
