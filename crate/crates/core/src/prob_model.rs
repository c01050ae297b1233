//! Finite-support probability: urn samplers, exact total variation, the
//! Gaussian bound and its numeric check, random-walk endpoints and tensor
//! symmetrisation.

use std::collections::BTreeMap;

use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::quantale::Rat;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProbError {
    #[error("urn is empty (m + n = 0)")]
    EmptyUrn,
    #[error("cannot draw {k} balls without replacement from {total}")]
    TooManyDraws { k: u64, total: u64 },
    #[error("outcome arity mismatch: {0} vs {1}")]
    Arity(usize, usize),
    #[error("standard deviation must be positive, got {0}")]
    Sigma(Rat),
    #[error("probability {0} outside [0, 1]")]
    Probability(Rat),
    #[error("probabilities sum to {0}, not 1")]
    Mass(Rat),
    #[error("tensor of {0} coefficients exceeds the guard {1}")]
    Guard(u128, u128),
    #[error("arithmetic overflow")]
    Overflow,
}

type PResult<T> = Result<T, ProbError>;

/// Finite distribution over equal-length rational tuples.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FinDist {
    pub probs: BTreeMap<Vec<Rat>, Rat>,
}

impl FinDist {
    pub fn point(outcome: Vec<Rat>) -> FinDist {
        FinDist { probs: BTreeMap::from([(outcome, Rat::one())]) }
    }

    /// Builds a distribution, merging repeated outcomes and dropping zeros.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Vec<Rat>, Rat)>) -> PResult<FinDist> {
        let mut probs: BTreeMap<Vec<Rat>, Rat> = BTreeMap::new();
        let mut arity = None;
        for (o, p) in pairs {
            if p.is_negative() || p > Rat::one() {
                return Err(ProbError::Probability(p));
            }
            match arity {
                None => arity = Some(o.len()),
                Some(a) if a != o.len() => return Err(ProbError::Arity(a, o.len())),
                _ => {}
            }
            *probs.entry(o).or_insert_with(Rat::zero) += p;
        }
        probs.retain(|_, p| !p.is_zero());
        let total: Rat = probs.values().sum();
        if total != Rat::one() {
            return Err(ProbError::Mass(total));
        }
        Ok(FinDist { probs })
    }

    pub fn arity(&self) -> usize {
        self.probs.keys().next().map_or(0, |o| o.len())
    }

    pub fn prob(&self, o: &[Rat]) -> Rat {
        self.probs.get(o).copied().unwrap_or_else(Rat::zero)
    }

    /// Independent product; outcomes are concatenated.
    pub fn product(&self, other: &FinDist) -> FinDist {
        let mut probs = BTreeMap::new();
        for (a, p) in &self.probs {
            for (b, q) in &other.probs {
                let mut o = a.clone();
                o.extend(b.iter().copied());
                probs.insert(o, p * q);
            }
        }
        FinDist { probs }
    }

    /// Push-forward along `f`.
    pub fn map(&self, f: impl Fn(&[Rat]) -> Vec<Rat>) -> FinDist {
        let mut probs: BTreeMap<Vec<Rat>, Rat> = BTreeMap::new();
        for (o, p) in &self.probs {
            *probs.entry(f(o)).or_insert_with(Rat::zero) += p;
        }
        FinDist { probs }
    }

    pub fn marginal(&self, i: usize) -> FinDist {
        self.map(|o| vec![o[i]])
    }

    /// Coordinates reordered so that coordinate `j` of the result is
    /// coordinate `perm[j]` of the input.
    pub fn permute(&self, perm: &[usize]) -> FinDist {
        self.map(|o| perm.iter().map(|&j| o[j]).collect())
    }
}

fn bernoulli_weights(m: u64, n: u64) -> PResult<(Rat, Rat)> {
    if m + n == 0 {
        return Err(ProbError::EmptyUrn);
    }
    let total = i64::try_from(m + n).map_err(|_| ProbError::Overflow)?;
    Ok((Rat::new(m as i64, total), Rat::new(n as i64, total)))
}

/// `k` draws with replacement from an urn of `m` zeros and `n` ones.
pub fn replace_sampler(k: u64, m: u64, n: u64) -> PResult<FinDist> {
    let (p0, p1) = bernoulli_weights(m, n)?;
    let mut dist = FinDist::point(vec![]);
    let step = FinDist::from_pairs([(vec![Rat::zero()], p0), (vec![Rat::one()], p1)])?;
    for _ in 0..k {
        dist = dist.product(&step);
    }
    dist.probs.retain(|_, p| !p.is_zero());
    Ok(dist)
}

/// `k` draws without replacement from an urn of `m` zeros and `n` ones.
pub fn no_replace_sampler(k: u64, m: u64, n: u64) -> PResult<FinDist> {
    bernoulli_weights(m, n)?;
    if k > m + n {
        return Err(ProbError::TooManyDraws { k, total: m + n });
    }
    let mut states: BTreeMap<Vec<Rat>, (Rat, u64, u64)> = BTreeMap::new();
    states.insert(vec![], (Rat::one(), m, n));
    for _ in 0..k {
        let mut next = BTreeMap::new();
        for (o, (p, zeros, ones)) in states {
            let left = (zeros + ones) as i64;
            for (ball, count) in [(0i64, zeros), (1, ones)] {
                if count == 0 {
                    continue;
                }
                let mut o2 = o.clone();
                o2.push(Rat::from_integer(ball));
                let (z2, n2) = if ball == 0 { (zeros - 1, ones) } else { (zeros, ones - 1) };
                next.insert(o2, (p * Rat::new(count as i64, left), z2, n2));
            }
        }
        states = next;
    }
    FinDist::from_pairs(states.into_iter().map(|(o, (p, _, _))| (o, p)))
}

/// Exact total variation: half the L1 distance over the merged support.
pub fn tv_distance(p: &FinDist, q: &FinDist) -> PResult<Rat> {
    if !p.probs.is_empty() && !q.probs.is_empty() && p.arity() != q.arity() {
        return Err(ProbError::Arity(p.arity(), q.arity()));
    }
    let mut sum = Rat::zero();
    for (o, a) in &p.probs {
        sum += (a - q.prob(o)).abs();
    }
    for (o, b) in &q.probs {
        if !p.probs.contains_key(o) {
            sum += b;
        }
    }
    Ok(sum / Rat::from_integer(2))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiaconisRow {
    pub k: u64,
    pub m: u64,
    pub n: u64,
    pub tv: Rat,
    pub bound: Rat,
    pub ok: bool,
}

pub fn check_diaconis(k: u64, m: u64, n: u64) -> PResult<DiaconisRow> {
    let tv = tv_distance(&replace_sampler(k, m, n)?, &no_replace_sampler(k, m, n)?)?;
    let bound = Rat::new(4 * k as i64, (m + n) as i64);
    Ok(DiaconisRow { k, m, n, tv, bound, ok: tv <= bound })
}

/// Every `(k, m, n)` with `1 <= k <= m + n <= max`.
pub fn diaconis_sweep(max: u64) -> PResult<Vec<DiaconisRow>> {
    let mut out = Vec::new();
    for total in 1..=max {
        for m in 0..=total {
            for k in 1..=total {
                out.push(check_diaconis(k, m, total - m)?);
            }
        }
    }
    Ok(out)
}

/// Value of the Gaussian bound with a guaranteed enclosure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phi {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    /// Set when the value is rational.
    pub exact: Option<Rat>,
}

pub fn rat_f64(r: &Rat) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

fn isqrt(n: i64) -> Option<i64> {
    if n < 0 {
        return None;
    }
    let mut r = (n as f64).sqrt() as i64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    (r * r == n).then_some(r)
}

/// Exact square root of a rational if it is a perfect square.
pub fn rat_sqrt(r: &Rat) -> Option<Rat> {
    Some(Rat::new(isqrt(*r.numer())?, isqrt(*r.denom())?))
}

/// `½·sqrt(k·((σ2² − σ1² + (μ1 − μ2)²)/σ1² − ln(σ2²/σ1²)))`
pub fn gaussian_phi(k: Rat, mu1: Rat, s1: Rat, mu2: Rat, s2: Rat) -> PResult<Phi> {
    for s in [s1, s2] {
        if !s.is_positive() {
            return Err(ProbError::Sigma(s));
        }
    }
    if k.is_negative() {
        return Err(ProbError::Probability(k));
    }
    let t = (s2 * s2) / (s1 * s1);
    let d = (mu1 - mu2) * (mu1 - mu2) / (s1 * s1);
    if t.is_one() {
        let exact = rat_sqrt(&(k * d)).map(|r| r / Rat::from_integer(2));
        let v = 0.5 * (rat_f64(&k) * rat_f64(&d)).sqrt();
        if let Some(e) = exact {
            let f = rat_f64(&e);
            return Ok(Phi { value: f, lo: f, hi: f, exact: Some(e) });
        }
        let w = v * 4.0 * f64::EPSILON;
        return Ok(Phi { value: v, lo: v - w, hi: v + w, exact: None });
    }
    // t − 1 − ln t computed as e − ln(1 + e) to keep precision near t = 1.
    let e = rat_f64(&(t - Rat::one()));
    let l = e.ln_1p();
    let df = rat_f64(&d);
    let radicand = (e - l) + df;
    let err = 8.0 * f64::EPSILON * (e.abs() + l.abs() + df.abs());
    let kf = rat_f64(&k);
    let value = 0.5 * (kf * radicand.max(0.0)).sqrt();
    let lo = 0.5 * (kf * (radicand - err).max(0.0)).sqrt() * (1.0 - 4.0 * f64::EPSILON);
    let hi = 0.5 * (kf * (radicand + err)).sqrt() * (1.0 + 4.0 * f64::EPSILON);
    Ok(Phi { value, lo, hi, exact: None })
}

fn normal_pdf(x: f64, mu: f64, s: f64) -> f64 {
    let z = (x - mu) / s;
    (-0.5 * z * z).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + adaptive(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    adaptive(f, a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol, 50)
}

/// Points where the two densities cross; between them `|f1 − f2|` is smooth.
fn crossings(mu1: f64, s1: f64, mu2: f64, s2: f64) -> Vec<f64> {
    let a = 0.5 / (s2 * s2) - 0.5 / (s1 * s1);
    let b = mu1 / (s1 * s1) - mu2 / (s2 * s2);
    let c = mu2 * mu2 / (2.0 * s2 * s2) - mu1 * mu1 / (2.0 * s1 * s1) + (s2 / s1).ln();
    if a.abs() < 1e-15 {
        return if b.abs() < 1e-15 { vec![] } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    let r = disc.sqrt();
    let mut xs = vec![(-b - r) / (2.0 * a), (-b + r) / (2.0 * a)];
    xs.sort_by(f64::total_cmp);
    xs
}

/// Total variation between two normal laws by adaptive quadrature.
pub fn gaussian_tv_numeric(mu1: Rat, s1: Rat, mu2: Rat, s2: Rat) -> PResult<f64> {
    for s in [s1, s2] {
        if !s.is_positive() {
            return Err(ProbError::Sigma(s));
        }
    }
    let (m1, sd1, m2, sd2) = (rat_f64(&mu1), rat_f64(&s1), rat_f64(&mu2), rat_f64(&s2));
    let f = move |x: f64| 0.5 * (normal_pdf(x, m1, sd1) - normal_pdf(x, m2, sd2)).abs();
    let spread = 10.0 * sd1.max(sd2);
    let (lo, hi) = (m1.min(m2) - spread, m1.max(m2) + spread);
    let mut cuts = vec![lo];
    cuts.extend(crossings(m1, sd1, m2, sd2).into_iter().filter(|x| *x > lo && *x < hi));
    cuts.push(hi);
    Ok(cuts.windows(2).map(|w| integrate(&f, w[0], w[1], 1e-11)).sum())
}

/// Law of `Σ (2·s_i − 1)·y_i` for independent signs `s` and magnitudes `y`.
pub fn walk_endpoint(sign: &FinDist, mag: &FinDist) -> PResult<FinDist> {
    if sign.arity() != mag.arity() {
        return Err(ProbError::Arity(sign.arity(), mag.arity()));
    }
    let k = sign.arity();
    let two = Rat::from_integer(2);
    Ok(sign.product(mag).map(|o| {
        let s: Rat = (0..k).map(|i| (two * o[i] - Rat::one()) * o[k + i]).sum();
        vec![s]
    }))
}

/// `k` independent magnitudes in `{1, 2}` with `P(2) = p`.
pub fn mag_sampler(k: u64, p: Rat) -> PResult<FinDist> {
    if p.is_negative() || p > Rat::one() {
        return Err(ProbError::Probability(p));
    }
    let step = FinDist::from_pairs([
        (vec![Rat::one()], Rat::one() - p),
        (vec![Rat::from_integer(2)], p),
    ])?;
    let mut dist = FinDist::point(vec![]);
    for _ in 0..k {
        dist = dist.product(&step);
    }
    Ok(dist)
}

/// Coefficients of an order-`n` tensor over a `d`-dimensional space, indexed
/// row-major by `(i_1, …, i_n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymTensor {
    pub d: usize,
    pub n: usize,
    pub coeffs: Vec<Rat>,
}

pub const TENSOR_GUARD: u128 = 1_000_000;

impl SymTensor {
    pub fn zeros(d: usize, n: usize) -> PResult<SymTensor> {
        let size = (d as u128).checked_pow(n as u32).ok_or(ProbError::Overflow)?;
        if size > TENSOR_GUARD {
            return Err(ProbError::Guard(size, TENSOR_GUARD));
        }
        Ok(SymTensor { d, n, coeffs: vec![Rat::zero(); size as usize] })
    }

    pub fn index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.d + i)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for slot in out.iter_mut().rev() {
            *slot = flat % self.d;
            flat /= self.d;
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        *self == symmetrise(self)
    }

    pub fn scale_add(&self, a: Rat, other: &SymTensor, b: Rat) -> SymTensor {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| a * x + b * y).collect();
        SymTensor { d: self.d, n: self.n, coeffs }
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Average of a tensor over all permutations of its index positions.
pub fn symmetrise(t: &SymTensor) -> SymTensor {
    let perms = permutations(t.n);
    let count = Rat::from_integer(perms.len() as i64);
    let mut out = t.clone();
    for (flat, c) in out.coeffs.iter_mut().enumerate() {
        let idx = t.multi_index(flat);
        let sum: Rat = perms
            .iter()
            .map(|p| t.coeffs[t.index(&p.iter().map(|&j| idx[j]).collect::<Vec<_>>())])
            .sum();
        *c = sum / count;
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymReport {
    pub checked: usize,
    pub failures: Vec<String>,
}

/// Idempotence, retraction onto symmetric tensors, and linearity of the
/// symmetrisation operator on seeded random rational tensors.
pub fn check_symmetrisation(d: usize, n: usize, trials: usize, seed: u64) -> PResult<SymReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random = |rng: &mut ChaCha8Rng| -> PResult<SymTensor> {
        let mut t = SymTensor::zeros(d, n)?;
        for c in t.coeffs.iter_mut() {
            *c = Rat::new(rng.gen_range(-9..=9), rng.gen_range(1..=6));
        }
        Ok(t)
    };
    let mut report = SymReport::default();
    for trial in 0..trials {
        let t = random(&mut rng)?;
        let u = random(&mut rng)?;
        let (a, b) = (Rat::new(rng.gen_range(-5..=5), 3), Rat::new(rng.gen_range(-5..=5), 2));
        let st = symmetrise(&t);
        if symmetrise(&st) != st {
            report.failures.push(format!("trial {}: not idempotent", trial));
        }
        if !st.is_symmetric() {
            report.failures.push(format!("trial {}: image not symmetric", trial));
        }
        let lin = symmetrise(&t.scale_add(a, &u, b));
        if lin != st.scale_add(a, &symmetrise(&u), b) {
            report.failures.push(format!("trial {}: not linear", trial));
        }
        report.checked += 1;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rat {
        Rat::new(n, d)
    }

    #[test]
    fn urn_examples() {
        let p = replace_sampler(2, 1, 1).unwrap();
        assert_eq!(p.probs.len(), 4);
        assert!(p.probs.values().all(|x| *x == r(1, 4)));
        let q = no_replace_sampler(2, 1, 1).unwrap();
        assert_eq!(q.probs.len(), 2);
        assert_eq!(tv_distance(&p, &q).unwrap(), r(1, 2));
        assert_eq!(replace_sampler(3, 2, 1).unwrap().prob(&[r(1, 1); 3]), r(1, 27));
        assert_eq!(no_replace_sampler(2, 2, 0).unwrap(), FinDist::point(vec![r(0, 1); 2]));
        assert!(matches!(no_replace_sampler(3, 1, 1), Err(ProbError::TooManyDraws { .. })));
    }

    #[test]
    fn phi_values() {
        let z = r(0, 1);
        let one = r(1, 1);
        assert_eq!(gaussian_phi(one, z, one, z, one).unwrap().exact, Some(z));
        assert_eq!(gaussian_phi(one, z, one, one, one).unwrap().exact, Some(r(1, 2)));
        assert_eq!(gaussian_phi(r(4, 1), z, one, one, one).unwrap().exact, Some(one));
        let p = gaussian_phi(one, z, one, z, r(2, 1)).unwrap();
        assert!(p.lo <= p.value && p.value <= p.hi && p.hi - p.lo < 1e-9);
    }

    #[test]
    fn equal_variance_tv_matches_closed_form() {
        let tv = gaussian_tv_numeric(r(0, 1), r(1, 1), r(1, 1), r(1, 1)).unwrap();
        assert!((tv - 0.38292492254802624).abs() < 1e-9, "{}", tv);
    }

    #[test]
    fn walk_with_one_up_one_down() {
        let sign = no_replace_sampler(2, 1, 1).unwrap();
        let mag = FinDist::point(vec![r(1, 1), r(1, 1)]);
        assert_eq!(walk_endpoint(&sign, &mag).unwrap(), FinDist::point(vec![r(0, 1)]));
    }

    #[test]
    fn symmetrise_basis_tensor() {
        let mut t = SymTensor::zeros(2, 2).unwrap();
        let i = t.index(&[0, 1]);
        t.coeffs[i] = r(1, 1);
        let s = symmetrise(&t);
        assert_eq!(s.coeffs, vec![r(0, 1), r(1, 2), r(1, 2), r(0, 1)]);
        assert!(check_symmetrisation(3, 3, 5, 7).unwrap().failures.is_empty());
    }
}
