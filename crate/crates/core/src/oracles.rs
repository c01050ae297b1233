//! Deliberately naive reference implementations.
//!
//! Nothing here calls into the rest of the crate beyond plain number
//! types, so agreement with the primary code is a meaningful check.

use std::fmt;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::quantale::{Ext, Rat};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{0} candidates exceed the guard {1}")]
    Guard(u128, u128),
    #[error("permutation groups are limited to n <= 8, got {0}")]
    TooLarge(usize),
}

/// One oracle comparison; the verdict depends only on the stored strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleReport {
    pub oracle: String,
    pub inputs: String,
    pub value: String,
    pub target: String,
    pub verdict: bool,
}

impl OracleReport {
    pub fn new(oracle: &str, inputs: impl fmt::Display, value: impl fmt::Display, target: impl fmt::Display) -> Self {
        let (value, target) = (value.to_string(), target.to_string());
        let verdict = value == target;
        OracleReport { oracle: oracle.into(), inputs: inputs.to_string(), value, target, verdict }
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{}",
            self.oracle,
            self.inputs,
            self.value,
            self.target,
            if self.verdict { "ok" } else { "MISMATCH" }
        )
    }
}

fn le(a: &Ext, b: &Ext) -> bool {
    match (a, b) {
        (_, Ext::Inf) => true,
        (Ext::Inf, Ext::Fin(_)) => false,
        (Ext::Fin(x), Ext::Fin(y)) => x <= y,
    }
}

/// Every total function `X -> Y` as an index table, kept when non-expansive.
pub fn enumerate_nonexpansive(dx: &[Vec<Ext>], dy: &[Vec<Ext>], guard: u128) -> Result<Vec<Vec<usize>>, OracleError> {
    let (nx, ny) = (dx.len(), dy.len());
    let total = (ny as u128).checked_pow(nx as u32).unwrap_or(u128::MAX);
    if total > guard {
        return Err(OracleError::Guard(total, guard));
    }
    let mut out = Vec::new();
    for code in 0..total {
        let mut f = Vec::with_capacity(nx);
        let mut c = code;
        for _ in 0..nx {
            f.push((c % ny as u128) as usize);
            c /= ny as u128;
        }
        let ok = (0..nx).all(|i| (0..nx).all(|j| le(&dy[f[i]][f[j]], &dx[i][j])));
        if ok {
            out.push(f);
        }
    }
    out.sort();
    Ok(out)
}

/// All permutations of `0..n` in lexicographic order.
pub fn perm_group(n: usize) -> Result<Vec<Vec<usize>>, OracleError> {
    if n > 8 {
        return Err(OracleError::TooLarge(n));
    }
    let mut p: Vec<usize> = (0..n).collect();
    let mut out = vec![p.clone()];
    loop {
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else { break };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).expect("successor exists");
        p.swap(i - 1, j);
        p[i..].reverse();
        out.push(p.clone());
    }
    Ok(out)
}

/// `σ ∘ τ`, i.e. `i ↦ σ(τ(i))`.
pub fn compose(s: &[usize], t: &[usize]) -> Vec<usize> {
    t.iter().map(|&i| s[i]).collect()
}

/// Half the L1 distance over the union of supports, by linear scans.
pub fn brute_tv(p: &[(Vec<Rat>, Rat)], q: &[(Vec<Rat>, Rat)]) -> Rat {
    let mut keys: Vec<&Vec<Rat>> = Vec::new();
    for (k, _) in p.iter().chain(q) {
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let mass = |d: &[(Vec<Rat>, Rat)], k: &Vec<Rat>| {
        d.iter().filter(|(x, _)| x == k).fold(Rat::zero(), |acc, (_, w)| acc + w)
    };
    let sum = keys.iter().fold(Rat::zero(), |acc, k| acc + (mass(p, k) - mass(q, k)).abs());
    sum / Rat::from_integer(2)
}

/// Interleavings of `parts` by filtering all permutations of the tagged
/// elements for those that keep each part in order.
pub fn brute_interleavings<T: Clone>(parts: &[Vec<T>]) -> Vec<Vec<T>> {
    let tags: Vec<(usize, usize)> =
        parts.iter().enumerate().flat_map(|(k, p)| (0..p.len()).map(move |i| (k, i))).collect();
    let mut out = Vec::new();
    for perm in perm_group(tags.len()).expect("total size at most 8") {
        let order: Vec<(usize, usize)> = perm.iter().map(|&i| tags[i]).collect();
        let in_order = parts.iter().enumerate().all(|(k, _)| {
            let idx: Vec<usize> = order.iter().filter(|(kk, _)| *kk == k).map(|&(_, i)| i).collect();
            idx.windows(2).all(|w| w[0] < w[1])
        });
        if in_order {
            out.push(order);
        }
    }
    out.sort();
    out.dedup();
    out.into_iter().map(|o| o.into_iter().map(|(k, i)| parts[k][i].clone()).collect()).collect()
}

/// `(1/2)∫|f1 - f2|` by a fixed fine midpoint rule over ±12σ.
pub fn brute_gaussian_tv(mu1: f64, s1: f64, mu2: f64, s2: f64) -> f64 {
    let pdf = |x: f64, mu: f64, s: f64| (-(x - mu) * (x - mu) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
    let lo = mu1.min(mu2) - 12.0 * s1.max(s2);
    let hi = mu1.max(mu2) + 12.0 * s1.max(s2);
    let steps = 400_000;
    let h = (hi - lo) / steps as f64;
    let mut sum = 0.0;
    for i in 0..steps {
        let x = lo + (i as f64 + 0.5) * h;
        sum += (pdf(x, mu1, s1) - pdf(x, mu2, s2)).abs();
    }
    0.5 * sum * h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(d: i64) -> Vec<Vec<Ext>> {
        vec![vec![Ext::int(0), Ext::int(d)], vec![Ext::int(d), Ext::int(0)]]
    }

    #[test]
    fn nonexpansive_counts() {
        let one = vec![vec![Ext::int(0)]];
        assert_eq!(enumerate_nonexpansive(&one, &space(1), 100).unwrap().len(), 2);
        // Shrinking target distances keeps every map.
        let half = vec![vec![Ext::int(0), Ext::Fin(Rat::new(1, 2))], vec![Ext::Fin(Rat::new(1, 2)), Ext::int(0)]];
        assert_eq!(enumerate_nonexpansive(&space(1), &half, 100).unwrap().len(), 4);
        // Stretching leaves only the constant maps.
        assert_eq!(enumerate_nonexpansive(&space(1), &space(2), 100).unwrap(), vec![vec![0, 0], vec![1, 1]]);
        assert_eq!(enumerate_nonexpansive(&space(2), &space(1), 100).unwrap().len(), 4);
        assert!(enumerate_nonexpansive(&space(1), &space(1), 3).is_err());
    }

    #[test]
    fn permutations() {
        assert_eq!(perm_group(1).unwrap(), vec![vec![0]]);
        assert_eq!(perm_group(3).unwrap().len(), 6);
        assert_eq!(perm_group(4).unwrap()[1], vec![0, 1, 3, 2]);
        for n in 0..=4 {
            let g = perm_group(n).unwrap();
            assert!(g.windows(2).all(|w| w[0] < w[1]));
            for s in &g {
                for t in &g {
                    assert!(g.contains(&compose(s, t)));
                }
            }
        }
        assert!(perm_group(9).is_err());
    }

    #[test]
    fn tv_and_interleavings() {
        let r = |n| Rat::from_integer(n);
        let p = vec![(vec![r(0)], Rat::new(1, 2)), (vec![r(1)], Rat::new(1, 2))];
        let q = vec![(vec![r(1)], r(1))];
        assert_eq!(brute_tv(&p, &q), Rat::new(1, 2));
        assert_eq!(brute_interleavings::<u8>(&[vec![], vec![]]), vec![Vec::<u8>::new()]);
        assert_eq!(brute_interleavings(&[vec!['x'], vec!['y']]).len(), 2);
    }

    #[test]
    fn gaussian_quadrature() {
        assert!(brute_gaussian_tv(0.0, 1.0, 0.0, 1.0).abs() < 1e-12);
        assert!((brute_gaussian_tv(0.0, 1.0, 1.0, 1.0) - 0.382_924_922_548_026).abs() < 1e-8);
    }
}
