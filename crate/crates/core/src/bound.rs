//! Equation bounds: a quantale value plus a non-negative combination of
//! Gaussian bound terms, which are irrational in general. Arithmetic stays
//! symbolic; comparisons fall back to interval enclosures and report an
//! error when the enclosure cannot decide.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::prob_model::{gaussian_phi, rat_f64, ProbError};
use crate::quantale::{Ext, Grade, QValue, Quantale, QuantaleError, QuantaleKind, Rat, Semiring};
use crate::syntax::{Env, Expr, ExprError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundError {
    #[error(transparent)]
    Quantale(#[from] QuantaleError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Phi(#[from] ProbError),
    #[error("cannot decide the order of {0} and {1}: enclosures overlap")]
    Indeterminate(String, String),
    #[error("bound {0} is negative")]
    Negative(String),
    #[error("irrational bound {0} is not a value of the boolean quantale")]
    NotBoolean(String),
    #[error("boolean bounds must be 0 or 1, got {0}")]
    BooleanLiteral(Rat),
    #[error("`{0}` is not linear in its phi terms")]
    NonLinear(String),
}

pub type BResult<T> = Result<T, BoundError>;

/// `phi(k, mu1, s1, mu2, s2)` with rational arguments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhiAtom {
    pub k: Rat,
    pub mu1: Rat,
    pub s1: Rat,
    pub mu2: Rat,
    pub s2: Rat,
}

impl PhiAtom {
    pub fn enclosure(&self) -> BResult<(f64, f64)> {
        let p = gaussian_phi(self.k, self.mu1, self.s1, self.mu2, self.s2)?;
        Ok((p.lo, p.hi))
    }

    pub fn value(&self) -> BResult<f64> {
        Ok(gaussian_phi(self.k, self.mu1, self.s1, self.mu2, self.s2)?.value)
    }
}

impl fmt::Display for PhiAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "phi({}, {}, {}, {}, {})", self.k, self.mu1, self.s1, self.mu2, self.s2)
    }
}

/// `exact + Σ c·atom` with every coefficient positive. An infinite `exact`
/// carries no atoms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bound {
    pub exact: QValue,
    pub atoms: BTreeMap<PhiAtom, Rat>,
}

fn pad(x: f64, down: bool) -> f64 {
    let w = x.abs() * 4.0 * f64::EPSILON + f64::MIN_POSITIVE;
    if down {
        x - w
    } else {
        x + w
    }
}

fn rat_interval(r: &Rat) -> (f64, f64) {
    let x = rat_f64(r);
    (pad(x, true), pad(x, false))
}

fn mul_interval(c: &Rat, (lo, hi): (f64, f64)) -> (f64, f64) {
    let (cl, ch) = rat_interval(c);
    let prods = [cl * lo, cl * hi, ch * lo, ch * hi];
    let min = prods.iter().copied().fold(f64::INFINITY, f64::min);
    let max = prods.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (pad(min, true), pad(max, false))
}

impl Bound {
    pub fn value(v: QValue) -> Bound {
        Bound { exact: v, atoms: BTreeMap::new() }
    }

    pub fn unit(q: &Quantale) -> Bound {
        Bound::value(q.unit())
    }

    pub fn bottom(q: &Quantale) -> Bound {
        Bound::value(q.bottom())
    }

    pub fn dist(r: Rat) -> Bound {
        Bound::value(QValue::dist(r))
    }

    /// A single Gaussian term, folded to a rational when its value is one.
    pub fn phi(atom: PhiAtom) -> BResult<Bound> {
        let p = gaussian_phi(atom.k, atom.mu1, atom.s1, atom.mu2, atom.s2)?;
        Ok(match p.exact {
            Some(r) => Bound::dist(r),
            None => Bound { exact: QValue::dist(Rat::zero()), atoms: BTreeMap::from([(atom, Rat::one())]) },
        })
    }

    pub fn is_exact(&self) -> bool {
        self.atoms.is_empty()
    }

    /// The quantale value, when the bound has no irrational part.
    pub fn as_value(&self) -> Option<QValue> {
        self.is_exact().then_some(self.exact)
    }

    fn finite_part(&self) -> Option<Rat> {
        match self.exact {
            QValue::Dist(Ext::Fin(r)) => Some(r),
            _ => None,
        }
    }

    /// Guaranteed numeric interval; `(inf, inf)` for the bottom of the
    /// metric quantales and `0/1` for booleans.
    pub fn enclosure(&self) -> BResult<(f64, f64)> {
        let r = match self.exact {
            QValue::Bool(b) => {
                let x = f64::from(u8::from(b));
                return Ok((x, x));
            }
            QValue::Dist(Ext::Inf) => return Ok((f64::INFINITY, f64::INFINITY)),
            QValue::Dist(Ext::Fin(r)) => r,
        };
        let (mut lo, mut hi) = if r.is_zero() { (0.0, 0.0) } else { rat_interval(&r) };
        for (a, c) in &self.atoms {
            let (l, h) = mul_interval(c, a.enclosure()?);
            lo = pad(lo + l, true);
            hi = pad(hi + h, false);
        }
        Ok((lo, hi))
    }

    /// Best floating-point estimate of the value.
    pub fn approx(&self) -> BResult<f64> {
        let base = match self.exact {
            QValue::Bool(b) => return Ok(f64::from(u8::from(b))),
            QValue::Dist(e) => e.to_f64(),
        };
        let mut total = base;
        for (a, c) in &self.atoms {
            total += rat_f64(c) * a.value()?;
        }
        Ok(total)
    }

    /// Numeric comparison (not the lattice order).
    pub fn num_cmp(&self, other: &Bound) -> BResult<Ordering> {
        if self.atoms == other.atoms {
            return Ok(match (self.exact, other.exact) {
                (QValue::Dist(a), QValue::Dist(b)) => a.cmp(&b),
                (QValue::Bool(a), QValue::Bool(b)) => a.cmp(&b),
                _ => {
                    return Err(BoundError::Indeterminate(self.to_string(), other.to_string()))
                }
            });
        }
        match (self.exact, other.exact) {
            (QValue::Dist(Ext::Inf), QValue::Dist(Ext::Inf)) => return Ok(Ordering::Equal),
            (QValue::Dist(Ext::Inf), _) => return Ok(Ordering::Greater),
            (_, QValue::Dist(Ext::Inf)) => return Ok(Ordering::Less),
            _ => {}
        }
        let (a, b) = match (self.finite_part(), other.finite_part()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(BoundError::Indeterminate(self.to_string(), other.to_string())),
        };
        let mut diff: BTreeMap<PhiAtom, Rat> = self.atoms.clone();
        for (atom, c) in &other.atoms {
            *diff.entry(*atom).or_insert_with(Rat::zero) -= c;
        }
        diff.retain(|_, c| !c.is_zero());
        let (mut lo, mut hi) = if a == b { (0.0, 0.0) } else { rat_interval(&(a - b)) };
        for (atom, c) in &diff {
            let (l, h) = mul_interval(c, atom.enclosure()?);
            lo = pad(lo + l, true);
            hi = pad(hi + h, false);
        }
        if hi < 0.0 {
            Ok(Ordering::Less)
        } else if lo > 0.0 {
            Ok(Ordering::Greater)
        } else {
            Err(BoundError::Indeterminate(self.to_string(), other.to_string()))
        }
    }

    /// Lattice order `self ≤ other` in quantale `q`.
    pub fn leq(&self, q: &Quantale, other: &Bound) -> BResult<bool> {
        if let (Some(a), Some(b)) = (self.as_value(), other.as_value()) {
            return Ok(q.leq(a, b)?);
        }
        match q.kind {
            QuantaleKind::Boolean => Err(BoundError::NotBoolean(self.to_string())),
            _ => Ok(other.num_cmp(self)? != Ordering::Greater),
        }
    }

    pub fn tensor(&self, q: &Quantale, other: &Bound) -> BResult<Bound> {
        if let (Some(a), Some(b)) = (self.as_value(), other.as_value()) {
            return Ok(Bound::value(q.tensor(a, b)?));
        }
        match q.kind {
            QuantaleKind::Boolean => Err(BoundError::NotBoolean(self.to_string())),
            QuantaleKind::Metric => {
                let exact = q.tensor(self.exact, other.exact)?;
                if exact == q.bottom() {
                    return Ok(Bound::bottom(q));
                }
                let mut atoms = self.atoms.clone();
                for (atom, c) in &other.atoms {
                    *atoms.entry(*atom).or_insert_with(Rat::zero) += c;
                }
                Ok(Bound { exact, atoms })
            }
            QuantaleKind::Ultrametric => Ok(match self.num_cmp(other)? {
                Ordering::Less => other.clone(),
                _ => self.clone(),
            }),
        }
    }

    /// Finite join: the numerically smallest bound in the metric readings.
    pub fn join(q: &Quantale, bounds: &[Bound]) -> BResult<Bound> {
        if bounds.iter().all(Bound::is_exact) {
            let vs: Vec<QValue> = bounds.iter().map(|b| b.exact).collect();
            return Ok(Bound::value(q.join(&vs)?));
        }
        if q.kind == QuantaleKind::Boolean {
            return Err(BoundError::NotBoolean(bounds[0].to_string()));
        }
        let mut best = Bound::bottom(q);
        for b in bounds {
            if b.num_cmp(&best)? == Ordering::Less {
                best = b.clone();
            }
        }
        Ok(best)
    }

    /// `r • self`.
    pub fn scale(&self, q: &Quantale, semiring: Semiring, r: Grade) -> BResult<Bound> {
        if let Some(v) = self.as_value() {
            return Ok(Bound::value(q.scalar_mul(semiring, r, v)?));
        }
        semiring.check(r)?;
        match (q.kind, r) {
            (QuantaleKind::Boolean, _) => Err(BoundError::NotBoolean(self.to_string())),
            (_, Grade::Inf) => Ok(Bound::bottom(q)),
            (_, Grade::Nat(0)) => Ok(Bound::unit(q)),
            (QuantaleKind::Ultrametric, _) => Ok(self.clone()),
            (QuantaleKind::Metric, Grade::Nat(n)) => {
                let n = Rat::from_integer(i64::try_from(n).map_err(|_| QuantaleError::Overflow)?);
                let exact = q.scalar_mul(semiring, r, self.exact)?;
                let atoms = self.atoms.iter().map(|(a, c)| (*a, c * n)).collect();
                Ok(Bound { exact, atoms })
            }
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let skip_exact = !self.atoms.is_empty() && self.exact == QValue::dist(Rat::zero());
        let mut first = true;
        if !skip_exact {
            write!(f, "{}", self.exact)?;
            first = false;
        }
        for (a, c) in &self.atoms {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            if c.is_one() {
                write!(f, "{}", a)?;
            } else {
                write!(f, "{}*{}", c, a)?;
            }
        }
        Ok(())
    }
}

/// Intermediate value while evaluating a bound expression.
#[derive(Debug, Clone, PartialEq)]
enum Lin {
    Inf,
    Sum(Rat, BTreeMap<PhiAtom, Rat>),
}

impl Lin {
    fn num(r: Rat) -> Lin {
        Lin::Sum(r, BTreeMap::new())
    }

    fn rational(&self) -> Option<Rat> {
        match self {
            Lin::Sum(r, atoms) if atoms.is_empty() => Some(*r),
            _ => None,
        }
    }

    fn scaled(self, c: Rat) -> Lin {
        match self {
            Lin::Inf => Lin::Inf,
            Lin::Sum(r, atoms) => {
                let mut atoms: BTreeMap<_, _> = atoms.into_iter().map(|(a, x)| (a, x * c)).collect();
                atoms.retain(|_, x: &mut Rat| !x.is_zero());
                Lin::Sum(r * c, atoms)
            }
        }
    }

    fn add(self, other: Lin) -> Lin {
        match (self, other) {
            (Lin::Sum(a, mut xs), Lin::Sum(b, ys)) => {
                for (atom, c) in ys {
                    *xs.entry(atom).or_insert_with(Rat::zero) += c;
                }
                xs.retain(|_, c| !c.is_zero());
                Lin::Sum(a + b, xs)
            }
            _ => Lin::Inf,
        }
    }
}

fn eval_lin(e: &Expr, env: &Env) -> BResult<Lin> {
    let nonlinear = || BoundError::NonLinear(e.to_string());
    Ok(match e {
        Expr::Num(r) => Lin::num(*r),
        Expr::Var(v) if v == "inf" && !env.contains_key(v) => Lin::Inf,
        Expr::Var(_) => Lin::num(e.eval(env)?),
        Expr::Neg(a) => match eval_lin(a, env)? {
            Lin::Inf => return Err(nonlinear()),
            l => l.scaled(-Rat::one()),
        },
        Expr::Add(a, b) => eval_lin(a, env)?.add(eval_lin(b, env)?),
        Expr::Sub(a, b) => match eval_lin(b, env)? {
            Lin::Inf => return Err(nonlinear()),
            l => eval_lin(a, env)?.add(l.scaled(-Rat::one())),
        },
        Expr::Mul(a, b) => {
            let (x, y) = (eval_lin(a, env)?, eval_lin(b, env)?);
            match (x.rational(), y.rational()) {
                (Some(c), _) if y != Lin::Inf => y.scaled(c),
                (_, Some(c)) if x != Lin::Inf => x.scaled(c),
                _ => return Err(nonlinear()),
            }
        }
        Expr::Div(a, b) => {
            let d = eval_lin(b, env)?.rational().ok_or_else(nonlinear)?;
            if d.is_zero() {
                return Err(ExprError::DivZero.into());
            }
            match eval_lin(a, env)? {
                Lin::Inf => Lin::Inf,
                l => l.scaled(Rat::one() / d),
            }
        }
        Expr::Call(name, args) if name == "phi" && args.len() == 5 => {
            let vals = args
                .iter()
                .map(|a| eval_lin(a, env)?.rational().ok_or_else(nonlinear))
                .collect::<BResult<Vec<Rat>>>()?;
            let atom = PhiAtom { k: vals[0], mu1: vals[1], s1: vals[2], mu2: vals[3], s2: vals[4] };
            let b = Bound::phi(atom)?;
            Lin::Sum(b.finite_part().unwrap_or_else(Rat::zero), b.atoms)
        }
        Expr::Call(name, args) => {
            let vals = args
                .iter()
                .map(|a| eval_lin(a, env)?.rational().map(Expr::Num).ok_or_else(nonlinear))
                .collect::<BResult<Vec<Expr>>>()?;
            Lin::num(Expr::Call(name.clone(), vals).eval(env)?)
        }
    })
}

/// Evaluates a bound expression such as `4*k/(m+n) + phi(k, a, 1, b, 1)`.
/// The bare name `inf` denotes the bottom of the metric quantales.
pub fn eval_bound(q: &Quantale, e: &Expr, env: &Env) -> BResult<Bound> {
    let lin = eval_lin(e, env)?;
    if q.kind == QuantaleKind::Boolean {
        return match lin.rational() {
            Some(r) if r.is_zero() => Ok(Bound::value(QValue::Bool(false))),
            Some(r) if r.is_one() => Ok(Bound::value(QValue::Bool(true))),
            Some(r) => Err(BoundError::BooleanLiteral(r)),
            None => Err(BoundError::NotBoolean(e.to_string())),
        };
    }
    match lin {
        Lin::Inf => Ok(Bound::bottom(q)),
        Lin::Sum(r, atoms) => {
            if r.is_negative() || atoms.values().any(|c| c.is_negative()) {
                return Err(BoundError::Negative(e.to_string()));
            }
            Ok(Bound { exact: QValue::dist(r), atoms })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_expr;

    fn ev(s: &str, env: &[(&str, i64)]) -> BResult<Bound> {
        let env: Env = env.iter().map(|(k, v)| (k.to_string(), Rat::from_integer(*v))).collect();
        eval_bound(&Quantale::METRIC, &parse_expr(s).unwrap(), &env)
    }

    #[test]
    fn walk_bound_prints_symbolically() {
        let b = ev("4*k/(m+n) + phi(k, a, 1, b, 1)", &[("k", 3), ("m", 2), ("n", 2), ("a", 0), ("b", 1)])
            .unwrap();
        assert_eq!(b.to_string(), "3 + phi(3, 0, 1, 1, 1)");
        let (lo, hi) = b.enclosure().unwrap();
        let want = 3.0 + 3f64.sqrt() / 2.0;
        assert!(lo <= want && want <= hi && hi - lo < 1e-9);
    }

    #[test]
    fn rational_phi_folds() {
        assert_eq!(ev("phi(4, 0, 1, 1, 1)", &[]).unwrap(), Bound::dist(Rat::one()));
        assert!(ev("phi(1, 0, 1, 0, 2) - phi(1, 0, 1, 0, 2)", &[]).unwrap().is_exact());
    }

    #[test]
    fn comparisons_use_enclosures() {
        let q = Quantale::METRIC;
        let b = ev("3 + phi(3, 0, 1, 1, 1)", &[]).unwrap();
        let c = ev("4", &[]).unwrap();
        assert!(c.leq(&q, &b).unwrap());
        assert!(!b.leq(&q, &c).unwrap());
        assert_eq!(b.num_cmp(&b).unwrap(), Ordering::Equal);
        let doubled = b.scale(&q, Semiring::NAT, Grade::Nat(2)).unwrap();
        assert_eq!(doubled, b.tensor(&q, &b).unwrap());
        assert!(ev("0 - phi(1, 0, 1, 0, 2)", &[]).is_err());
        assert_eq!(ev("inf", &[]).unwrap(), Bound::bottom(&q));
    }
}
