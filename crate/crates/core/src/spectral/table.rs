//! Piecewise Chebyshev tables of `J_ν` on `[0, z_max]`.
//!
//! Mode sums need `J_ν(μ_k x)` at millions of arguments; direct evaluation
//! costs `O(ν + z)` per call. Orders sharing a fractional part are filled
//! together from one recurrence sweep per Chebyshev node.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use super::bessel::bessel_j_sequence;
use crate::error::{Error, Result};

const PIECE: f64 = 4.0;
const DEGREE: usize = 17;
const NODES: usize = DEGREE + 1;

/// Chebyshev approximation of one `J_ν` with absolute error near 1e-14.
#[derive(Debug, Clone)]
pub struct BesselTable {
    nu: f64,
    /// index of the first stored piece; `J_ν` is below 1e-17 to its left
    first_piece: usize,
    z_max: f64,
    coeffs: Vec<[f64; NODES]>,
}

/// Below this argument `J_ν(z)` is negligible (Airy-type decay).
pub fn negligible_below(nu: f64) -> f64 {
    if nu < 30.0 {
        0.0
    } else {
        (nu - 12.0 * nu.cbrt() - 15.0).max(0.0)
    }
}

impl BesselTable {
    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    fn locate(&self, z: f64) -> Option<(usize, f64)> {
        let p = (z / PIECE).floor() as usize;
        if p < self.first_piece {
            return None;
        }
        let idx = (p - self.first_piece).min(self.coeffs.len() - 1);
        let left = (self.first_piece + idx) as f64 * PIECE;
        let s = (z - left) / PIECE * 2.0 - 1.0;
        Some((idx, s))
    }

    /// `J_ν(z)`; arguments beyond `z_max` extrapolate the last piece, so
    /// callers size the table to cover what they need.
    #[inline]
    pub fn eval(&self, z: f64) -> f64 {
        match self.locate(z) {
            None => 0.0,
            Some((idx, s)) => {
                let v = clenshaw(&self.coeffs[idx], s);
                if self.first_piece + idx == 0 {
                    v * origin_weight(self.nu, z)
                } else {
                    v
                }
            }
        }
    }

    /// `(J_ν(z), J_ν'(z))`.
    pub fn eval_with_deriv(&self, z: f64) -> (f64, f64) {
        match self.locate(z) {
            None => (0.0, 0.0),
            Some((idx, s)) => {
                let c = &self.coeffs[idx];
                let mut d = [0.0; NODES];
                // derivative series by the standard backward recurrence
                for k in (1..NODES).rev() {
                    let next = if k + 1 < NODES { d[k + 1] } else { 0.0 };
                    d[k - 1] = next + 2.0 * k as f64 * c[k];
                }
                d[0] *= 0.5;
                let (v, dv) = (clenshaw(c, s), clenshaw(&d[..NODES - 1], s) * 2.0 / PIECE);
                if self.first_piece + idx == 0 {
                    let w = origin_weight(self.nu, z);
                    let dw = if self.nu == 0.0 { 0.0 } else { self.nu / z * w };
                    (v * w, dv * w + v * dw)
                } else {
                    (v, dv)
                }
            }
        }
    }

    /// Positive zeros of `J_ν` below `z_limit`, in increasing order.
    pub fn zeros_below(&self, z_limit: f64) -> Vec<f64> {
        let mut zeros = Vec::new();
        let limit = z_limit.min(self.z_max);
        // first zero lies beyond ν; stepping by 1 cannot skip a zero
        // since consecutive zeros are more than 2.4 apart
        let mut a = if self.nu > 0.0 { self.nu } else { 1e-3 };
        let mut fa = self.eval(a);
        while a < limit {
            let b = (a + 1.0).min(limit);
            let fb = self.eval(b);
            if fa == 0.0 {
                zeros.push(a);
            } else if fa * fb < 0.0 {
                zeros.push(self.refine(a, b, fa));
            }
            a = b;
            fa = fb;
            if b >= limit {
                break;
            }
        }
        zeros
    }

    fn refine(&self, mut lo: f64, mut hi: f64, flo: f64) -> f64 {
        let mut z = 0.5 * (lo + hi);
        for _ in 0..60 {
            let (f, df) = self.eval_with_deriv(z);
            if f == 0.0 {
                return z;
            }
            if (f < 0.0) == (flo < 0.0) {
                lo = z;
            } else {
                hi = z;
            }
            let newton = z - f / df;
            let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if (next - z).abs() <= 4e-16 * z {
                return next;
            }
            z = next;
        }
        z
    }
}

// J_ν(z)/(z/PIECE)^ν is entire, so the first piece stores that quotient
fn origin_weight(nu: f64, z: f64) -> f64 {
    (z / PIECE).powf(nu)
}

fn clenshaw(c: &[f64], s: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &ck in c[1..].iter().rev() {
        let b0 = 2.0 * s * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    s * b1 - b2 + c[0]
}

fn chebyshev_nodes() -> [f64; NODES] {
    let mut x = [0.0; NODES];
    for (k, v) in x.iter_mut().enumerate() {
        *v = (PI * (k as f64 + 0.5) / NODES as f64).cos();
    }
    x
}

fn fit(values: &[f64; NODES]) -> [f64; NODES] {
    let mut c = [0.0; NODES];
    for (j, cj) in c.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, v) in values.iter().enumerate() {
            acc += v * (PI * j as f64 * (k as f64 + 0.5) / NODES as f64).cos();
        }
        *cj = acc * 2.0 / NODES as f64;
    }
    c[0] *= 0.5;
    c
}

/// Tables for a set of orders, keyed by the order's bit pattern.
#[derive(Debug, Clone, Default)]
pub struct BesselTables {
    tables: BTreeMap<u64, BesselTable>,
}

impl BesselTables {
    /// Builds tables for every order in `nus` on `[0, z_max]`.
    pub fn build(nus: &[f64], z_max: f64) -> Result<Self> {
        if !(z_max > 0.0) || !z_max.is_finite() {
            return Err(Error::Domain(format!("table range must be positive (z_max={z_max})")));
        }
        if let Some(bad) = nus.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::Domain(format!("Bessel order must be non-negative (nu={bad})")));
        }
        // group by fractional part so one sweep serves a whole family
        let mut families: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
        for &nu in nus {
            let frac = nu - nu.floor();
            families.entry(frac.to_bits()).or_default().push(nu);
        }
        let pieces = (z_max / PIECE).ceil() as usize;
        let nodes = chebyshev_nodes();
        let mut tables = BTreeMap::new();
        for (frac_bits, members) in families {
            let frac = f64::from_bits(frac_bits);
            let max_order = members.iter().map(|v| v.floor() as usize).max().unwrap_or(0);
            let mut coeffs: Vec<Vec<[f64; NODES]>> = vec![Vec::new(); members.len()];
            let firsts: Vec<usize> = members
                .iter()
                .map(|&nu| ((negligible_below(nu) / PIECE).floor() as usize).min(pieces - 1))
                .collect();
            let min_first = firsts.iter().copied().min().unwrap_or(0);
            for p in min_first..pieces {
                let left = p as f64 * PIECE;
                let mut samples = vec![[0.0; NODES]; members.len()];
                // highest order active on this piece bounds the sweep length
                let active_max = members
                    .iter()
                    .zip(&firsts)
                    .filter(|(_, f)| **f <= p)
                    .map(|(nu, _)| nu.floor() as usize)
                    .max()
                    .unwrap_or(0)
                    .min(max_order);
                for (k, s) in nodes.iter().enumerate() {
                    let z = left + (s + 1.0) * 0.5 * PIECE;
                    let seq = bessel_j_sequence(frac, z, active_max + 1);
                    for (i, nu) in members.iter().enumerate() {
                        if firsts[i] <= p {
                            let mut v = seq[nu.floor() as usize];
                            if p == 0 {
                                v /= origin_weight(*nu, z);
                            }
                            samples[i][k] = v;
                        }
                    }
                }
                for (i, smp) in samples.iter().enumerate() {
                    if firsts[i] <= p {
                        coeffs[i].push(fit(smp));
                    }
                }
            }
            for ((nu, first), c) in members.iter().zip(firsts).zip(coeffs) {
                tables.insert(
                    nu.to_bits(),
                    BesselTable { nu: *nu, first_piece: first, z_max, coeffs: c },
                );
            }
        }
        Ok(Self { tables })
    }

    pub fn get(&self, nu: f64) -> Option<&BesselTable> {
        self.tables.get(&nu.to_bits())
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::bessel::{bessel_j_pair, bessel_zeros};

    #[test]
    fn sequence_matches_pointwise_evaluation() {
        for &(nu0, z) in &[(0.0, 0.3), (0.5, 7.0), (0.25, 40.0), (0.0, 300.0), (0.75, 2.5)] {
            let seq = bessel_j_sequence(nu0, z, 400);
            for m in [0usize, 1, 5, 37, 120, 399] {
                let direct = bessel_j_pair(nu0 + m as f64, z).0;
                assert!(
                    (seq[m] - direct).abs() < 1e-13 * (1.0 + direct.abs()),
                    "nu={} z={z}: {} vs {direct}",
                    nu0 + m as f64,
                    seq[m]
                );
            }
        }
    }

    #[test]
    fn tables_match_direct_values() {
        let nus = [0.0, 1.0, 2.5, 40.0, 40.5, 133.0];
        let t = BesselTables::build(&nus, 400.0).unwrap();
        let mut worst: f64 = 0.0;
        for &nu in &nus {
            let tab = t.get(nu).unwrap();
            for i in 0..4000 {
                let z = 400.0 * (i as f64 + 0.37) / 4000.0;
                worst = worst.max((tab.eval(z) - bessel_j_pair(nu, z).0).abs());
            }
        }
        assert!(worst < 1e-13, "worst {worst}");
    }

    #[test]
    fn table_zeros_match_direct_zeros() {
        let t = BesselTables::build(&[0.0, 3.5, 61.0], 200.0).unwrap();
        for &nu in &[0.0, 3.5, 61.0] {
            let tz = t.get(nu).unwrap().zeros_below(190.0);
            let dz = bessel_zeros(nu, tz.len()).unwrap();
            assert!(dz.last().unwrap() < &190.0);
            for (a, b) in tz.iter().zip(&dz) {
                assert!((a - b).abs() < 1e-11 * b, "nu={nu}: {a} vs {b}");
            }
            let next = bessel_zeros(nu, tz.len() + 1).unwrap();
            assert!(next[tz.len()] > 190.0);
        }
    }

    #[test]
    fn derivative_matches_recurrence() {
        let t = BesselTables::build(&[7.0, 8.0], 60.0).unwrap();
        for i in 1..50 {
            let z = i as f64 * 1.17;
            let (j, dj) = t.get(7.0).unwrap().eval_with_deriv(z);
            let expect = 7.0 / z * j - t.get(8.0).unwrap().eval(z);
            assert!((dj - expect).abs() < 1e-12, "z={z}");
        }
    }
}
