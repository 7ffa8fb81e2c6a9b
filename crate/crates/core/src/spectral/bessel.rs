//! Bessel functions of the first kind for real order and argument, and
//! their positive zeros.
//!
//! Seeds `J_{ν0}`, `J_{ν0+1}` with `ν0 = ν - ⌊ν⌋` come from Miller's backward
//! recurrence (normalised with the Neumann series for `(z/2)^ν0`) when the
//! argument is moderate and from the Hankel expansion when it is large.
//! The requested order is then reached by forward recurrence below the
//! turning point `ν ≈ z` and by a second, matched Miller sweep above it.

use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const HANKEL_MIN_Z: f64 = 25.0;
const RESCALE: f64 = 1e250;

/// Estimated absolute accuracy (relative to `1 + |J|`) of [`bessel_j`].
pub fn achievable_tol(nu: f64, z: f64) -> f64 {
    2e-16 * (16.0 + nu + z)
}

/// `J_ν(z)` with `|err| ≤ tol·(1 + |J_ν(z)|)`.
pub fn bessel_j(nu: f64, z: f64, tol: f64) -> Result<f64> {
    if !(nu >= 0.0) || !(z >= 0.0) || !nu.is_finite() || !z.is_finite() {
        return Err(Error::Domain(format!("bessel_j requires nu >= 0, z >= 0 (nu={nu}, z={z})")));
    }
    if tol < achievable_tol(nu, z) {
        return Err(Error::Precision { nu, z, tol });
    }
    Ok(bessel_j_pair(nu, z).0)
}

/// `(J_ν(z), J_{ν+1}(z))` without argument checks.
pub fn bessel_j_pair(nu: f64, z: f64) -> (f64, f64) {
    if z == 0.0 {
        return (if nu == 0.0 { 1.0 } else { 0.0 }, 0.0);
    }
    let m = nu.floor() as usize;
    let nu0 = nu - m as f64;
    let (s0, s1) = seeds(nu0, z);
    if m == 0 {
        return (s0, s1);
    }
    // forward recurrence is stable while the order stays below z
    let stable = if z > nu0 { ((z - nu0).floor() as usize).max(1) } else { 1 };
    if m < stable {
        let (mut jm1, mut j) = (s0, s1);
        for k in 1..=m {
            let next = 2.0 * (nu0 + k as f64) / z * j - jm1;
            jm1 = j;
            j = next;
        }
        return (jm1, j);
    }
    // forward up to the turning order, then match a backward sweep there
    let (mut fa, mut fb) = (s0, s1);
    for k in 1..stable {
        let next = 2.0 * (nu0 + k as f64) / z * fb - fa;
        fa = fb;
        fb = next;
    }
    let turn = stable - 1; // fa = J_{nu0+turn}, fb = J_{nu0+turn+1}
    let top = m + 1 + 24 + (160.0 * (nu.max(z) + 1.0)).sqrt() as usize;
    let mut jp1 = 0.0;
    let mut j = 1e-300;
    let (mut at_m, mut at_m1) = (0.0, 0.0);
    let (mut ba, mut bb) = (0.0, 0.0);
    for k in (turn..top).rev() {
        // j = J_{nu0+k+1}, jp1 = J_{nu0+k+2}
        let prev = 2.0 * (nu0 + (k + 1) as f64) / z * j - jp1;
        jp1 = j;
        j = prev;
        // now j = J_{nu0+k}, jp1 = J_{nu0+k+1}
        if k == m {
            at_m = j;
            at_m1 = jp1;
        }
        if k == turn {
            ba = j;
            bb = jp1;
        }
        if j.abs() > RESCALE {
            j /= RESCALE;
            jp1 /= RESCALE;
            at_m /= RESCALE;
            at_m1 /= RESCALE;
        }
    }
    let norm = ba.hypot(bb);
    let scale = (fa * (ba / norm) + fb * (bb / norm)) / norm;
    (at_m * scale, at_m1 * scale)
}

/// `J_{ν0+m}(z)` for `m = 0..count`, from one recurrence sweep.
pub fn bessel_j_sequence(nu0: f64, z: f64, count: usize) -> Vec<f64> {
    let mut out = vec![0.0; count];
    if count == 0 {
        return out;
    }
    if z == 0.0 {
        if nu0 == 0.0 {
            out[0] = 1.0;
        }
        return out;
    }
    let skip = nu0.floor() as usize;
    let base = nu0 - skip as f64;
    let total = skip + count;
    let (s0, s1) = seeds(base, z);
    let stable = if z > base { ((z - base).floor() as usize).max(1) } else { 1 };
    // orders below the turning point by forward recurrence
    let forward_end = total.min(stable + 1);
    let mut fwd = Vec::with_capacity(forward_end.max(2));
    fwd.push(s0);
    fwd.push(s1);
    while fwd.len() < forward_end {
        let k = fwd.len() - 1;
        let next = 2.0 * (base + k as f64) / z * fwd[k] - fwd[k - 1];
        fwd.push(next);
    }
    out[..forward_end - skip].copy_from_slice(&fwd[skip..forward_end]);
    if total <= forward_end {
        return out;
    }
    // backward sweep for the rest, matched to the forward values at the turn
    let turn = stable - 1;
    let (fa, fb) = (fwd[turn], fwd[turn + 1]);
    let top = total + 24 + (160.0 * (total as f64 + base).max(z) + 160.0).sqrt() as usize;
    let mut back = vec![0.0; total - turn];
    let mut jp1 = 0.0;
    let mut j = 1e-300;
    for k in (turn..top).rev() {
        let prev = 2.0 * (base + (k + 1) as f64) / z * j - jp1;
        jp1 = j;
        j = prev;
        if k < total {
            back[k - turn] = j;
        }
        if j.abs() > RESCALE {
            j /= RESCALE;
            jp1 /= RESCALE;
            for v in back.iter_mut() {
                *v /= RESCALE;
            }
        }
    }
    let (ba, bb) = (back[0], back[1]);
    let norm = ba.hypot(bb);
    let scale = (fa * (ba / norm) + fb * (bb / norm)) / norm;
    for m in forward_end.max(skip)..total {
        out[m - skip] = back[m - turn] * scale;
    }
    out
}

fn seeds(nu0: f64, z: f64) -> (f64, f64) {
    if z >= HANKEL_MIN_Z {
        (hankel_asymptotic(nu0, z), hankel_asymptotic(nu0 + 1.0, z))
    } else {
        miller_seeds(nu0, z)
    }
}

fn hankel_asymptotic(nu: f64, z: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term: f64 = 1.0;
    let mut prev_abs = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        let next = term * (mu - odd * odd) / (k as f64 * 8.0 * z);
        let a = next.abs();
        // asymptotic series: stop before the terms start growing
        if a > prev_abs {
            break;
        }
        term = next;
        prev_abs = a;
        // P takes even k with sign (-1)^{k/2}, Q odd k with sign (-1)^{(k-1)/2}
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 1 {
            q += sign * term;
        } else {
            p += sign * term;
        }
        if a < 1e-18 {
            break;
        }
    }
    let chi = z - (0.5 * nu + 0.25) * PI;
    (2.0 / (PI * z)).sqrt() * (p * chi.cos() - q * chi.sin())
}

fn miller_seeds(nu0: f64, z: f64) -> (f64, f64) {
    let mut top = (z + 24.0 + (160.0 * z.max(1.0)).sqrt()) as usize;
    top += top % 2; // even index so the normalisation series ends on a term
    let mut jp1 = 0.0;
    let mut j = 1e-300;
    // weights c_k for J_{nu0+2k}; normalised by Γ(nu0+1)
    let weight = |k: usize| -> f64 {
        if k == 0 {
            return 1.0;
        }
        // g_k = Γ(nu0+k)/(k! Γ(nu0+1))
        let lg = ln_gamma(nu0 + k as f64) - ln_gamma(k as f64 + 1.0) - ln_gamma(nu0 + 1.0);
        (nu0 + 2.0 * k as f64) * lg.exp()
    };
    let mut sum = 0.0;
    let (mut j0, mut j1) = (0.0, 0.0);
    for k in (0..top).rev() {
        let prev = 2.0 * (nu0 + (k + 1) as f64) / z * j - jp1;
        jp1 = j;
        j = prev;
        if k % 2 == 0 {
            sum += weight(k / 2) * j;
        }
        if k == 0 {
            j0 = j;
            j1 = jp1;
        }
        if j.abs() > RESCALE {
            j /= RESCALE;
            jp1 /= RESCALE;
            sum /= RESCALE;
        }
    }
    let lhs = (nu0 * (0.5 * z).ln() - ln_gamma(nu0 + 1.0)).exp();
    let scale = lhs / sum;
    (j0 * scale, j1 * scale)
}

/// First `count` positive zeros of `J_ν`, each bracketed by a verified sign
/// change and refined by safeguarded Newton iteration.
pub fn bessel_zeros(nu: f64, count: usize) -> Result<Vec<f64>> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::Domain(format!("bessel_zeros requires nu >= 0 (nu={nu})")));
    }
    let f = |z: f64| bessel_j_pair(nu, z).0;
    let mut zeros: Vec<f64> = Vec::with_capacity(count);
    let step = 0.45 * PI;
    while zeros.len() < count {
        let k = zeros.len();
        let mut bracket = None;
        if k >= 2 {
            // spacing is monotone in k: decreasing for nu > 1/2, increasing below
            let (a, b) = (zeros[k - 2], zeros[k - 1]);
            let guess = 2.0 * b - a;
            let (lo, hi) = if nu > 0.5 {
                (b + 0.5 * (guess - b), guess + 1e-9 * guess)
            } else {
                (guess - 1e-9 * guess, b + PI * (1.0 + 1e-9))
            };
            let (flo, fhi) = (f(lo), f(hi));
            if lo > b && flo * fhi < 0.0 {
                bracket = Some((lo, hi, flo));
            }
        }
        if bracket.is_none() {
            let mut a = match zeros.last() {
                Some(&z) => z + 1e-6 * z.max(1.0),
                None => nu.max(1e-3),
            };
            let mut fa = f(a);
            for _ in 0..100_000 {
                let b = a + step;
                let fb = f(b);
                if fa * fb < 0.0 || fb == 0.0 {
                    bracket = Some((a, b, fa));
                    break;
                }
                a = b;
                fa = fb;
            }
        }
        let (mut lo, mut hi, flo) = bracket.ok_or_else(|| Error::NoConvergence {
            message: format!("no sign change found for zero {} of J_{nu}", k + 1),
            closest_approach: f64::NAN,
        })?;
        let lo_sign = flo.signum();
        let mut z = 0.5 * (lo + hi);
        for _ in 0..100 {
            let (j, jp1) = bessel_j_pair(nu, z);
            if j == 0.0 {
                break;
            }
            if j.signum() == lo_sign {
                lo = z;
            } else {
                hi = z;
            }
            let dj = nu / z * j - jp1;
            let mut next = z - j / dj;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let done = (next - z).abs() <= 4e-16 * z;
            z = next;
            if done || hi - lo <= 4e-16 * z {
                break;
            }
        }
        zeros.push(z);
    }
    Ok(zeros)
}

/// `e^{-x} I_0(x)` for `x ≥ 0`.
pub fn bessel_i0_scaled(x: f64) -> f64 {
    let x = x.abs();
    if x <= 30.0 {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            term *= q / (k as f64 * k as f64);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        sum * (-x).exp()
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            let odd = (2 * k - 1) as f64;
            let next = term * odd * odd / (k as f64 * 8.0 * x);
            if next > term {
                break;
            }
            term = next;
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        sum / (2.0 * PI * x).sqrt()
    }
}
