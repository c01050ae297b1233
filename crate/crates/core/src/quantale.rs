//! Quantales used as the value domain of equation bounds, and the grade
//! semirings that act on them.
//!
//! Lattice order is the quantale order: in the metric quantales a *smaller*
//! number is a *larger* element, so `join` is numeric minimum and the unit
//! `0` is the top element.

use std::fmt;

use num_rational::Rational64;
use num_traits::{CheckedMul, Signed, Zero};
use thiserror::Error;

pub type Rat = Rational64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuantaleError {
    #[error("value {value} does not belong to the {kind} quantale")]
    WrongCarrier { kind: QuantaleKind, value: QValue },
    #[error("grade {0} is not an element of the {1} semiring")]
    WrongGrade(Grade, SemiringKind),
    #[error("negative distance {0}")]
    Negative(Rat),
    #[error("arithmetic overflow")]
    Overflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuantaleKind {
    Boolean,
    Metric,
    Ultrametric,
}

impl fmt::Display for QuantaleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QuantaleKind::Boolean => "boolean",
            QuantaleKind::Metric => "metric",
            QuantaleKind::Ultrametric => "ultrametric",
        })
    }
}

/// Extended non-negative rational.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ext {
    Fin(Rat),
    Inf,
}

impl Ext {
    pub fn int(n: i64) -> Ext {
        Ext::Fin(Rat::from_integer(n))
    }

    pub fn zero() -> Ext {
        Ext::Fin(Rat::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Ext::Fin(_))
    }

    pub fn add(self, other: Ext) -> Ext {
        match (self, other) {
            (Ext::Fin(a), Ext::Fin(b)) => Ext::Fin(a + b),
            _ => Ext::Inf,
        }
    }

    pub fn max(self, other: Ext) -> Ext {
        if self.num_le(&other) {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Ext) -> Ext {
        if self.num_le(&other) {
            self
        } else {
            other
        }
    }

    /// Numeric comparison (not the quantale order).
    pub fn num_le(&self, other: &Ext) -> bool {
        match (self, other) {
            (_, Ext::Inf) => true,
            (Ext::Inf, Ext::Fin(_)) => false,
            (Ext::Fin(a), Ext::Fin(b)) => a <= b,
        }
    }

    pub fn num_lt(&self, other: &Ext) -> bool {
        self.num_le(other) && self != other
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Ext::Fin(r) => *r.numer() as f64 / *r.denom() as f64,
            Ext::Inf => f64::INFINITY,
        }
    }
}

impl PartialOrd for Ext {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Numeric order, with `Inf` greatest.
impl Ord for Ext {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        match (self, other) {
            (Ext::Inf, Ext::Inf) => Equal,
            (Ext::Inf, _) => Greater,
            (_, Ext::Inf) => Less,
            (Ext::Fin(a), Ext::Fin(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::Fin(r) => write!(f, "{}", r),
            Ext::Inf => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QValue {
    Bool(bool),
    Dist(Ext),
}

impl fmt::Display for QValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QValue::Bool(b) => write!(f, "{}", u8::from(*b)),
            QValue::Dist(e) => write!(f, "{}", e),
        }
    }
}

impl QValue {
    pub fn dist(r: Rat) -> QValue {
        QValue::Dist(Ext::Fin(r))
    }

    pub fn int(n: i64) -> QValue {
        QValue::Dist(Ext::int(n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Quantale {
    pub kind: QuantaleKind,
}

impl Quantale {
    pub const BOOLEAN: Quantale = Quantale { kind: QuantaleKind::Boolean };
    pub const METRIC: Quantale = Quantale { kind: QuantaleKind::Metric };
    pub const ULTRAMETRIC: Quantale = Quantale { kind: QuantaleKind::Ultrametric };

    pub fn new(kind: QuantaleKind) -> Quantale {
        Quantale { kind }
    }

    fn expect_bool(&self, v: QValue) -> Result<bool, QuantaleError> {
        match (self.kind, v) {
            (QuantaleKind::Boolean, QValue::Bool(b)) => Ok(b),
            _ => Err(QuantaleError::WrongCarrier { kind: self.kind, value: v }),
        }
    }

    fn expect_dist(&self, v: QValue) -> Result<Ext, QuantaleError> {
        match (self.kind, v) {
            (QuantaleKind::Metric | QuantaleKind::Ultrametric, QValue::Dist(e)) => {
                if let Ext::Fin(r) = e {
                    if r.is_negative() {
                        return Err(QuantaleError::Negative(r));
                    }
                }
                Ok(e)
            }
            _ => Err(QuantaleError::WrongCarrier { kind: self.kind, value: v }),
        }
    }

    pub fn check(&self, v: QValue) -> Result<QValue, QuantaleError> {
        match self.kind {
            QuantaleKind::Boolean => self.expect_bool(v).map(QValue::Bool),
            _ => self.expect_dist(v).map(QValue::Dist),
        }
    }

    /// The monoidal unit `k`, which is also the top element.
    pub fn unit(&self) -> QValue {
        match self.kind {
            QuantaleKind::Boolean => QValue::Bool(true),
            _ => QValue::Dist(Ext::zero()),
        }
    }

    /// Bottom element, the empty join.
    pub fn bottom(&self) -> QValue {
        match self.kind {
            QuantaleKind::Boolean => QValue::Bool(false),
            _ => QValue::Dist(Ext::Inf),
        }
    }

    pub fn tensor(&self, a: QValue, b: QValue) -> Result<QValue, QuantaleError> {
        match self.kind {
            QuantaleKind::Boolean => Ok(QValue::Bool(self.expect_bool(a)? && self.expect_bool(b)?)),
            QuantaleKind::Metric => Ok(QValue::Dist(self.expect_dist(a)?.add(self.expect_dist(b)?))),
            QuantaleKind::Ultrametric => {
                Ok(QValue::Dist(self.expect_dist(a)?.max(self.expect_dist(b)?)))
            }
        }
    }

    pub fn join(&self, vs: &[QValue]) -> Result<QValue, QuantaleError> {
        let mut acc = self.bottom();
        for &v in vs {
            acc = match self.kind {
                QuantaleKind::Boolean => {
                    QValue::Bool(self.expect_bool(acc)? || self.expect_bool(v)?)
                }
                _ => QValue::Dist(self.expect_dist(acc)?.min(self.expect_dist(v)?)),
            };
        }
        Ok(acc)
    }

    pub fn meet(&self, a: QValue, b: QValue) -> Result<QValue, QuantaleError> {
        match self.kind {
            QuantaleKind::Boolean => Ok(QValue::Bool(self.expect_bool(a)? && self.expect_bool(b)?)),
            _ => Ok(QValue::Dist(self.expect_dist(a)?.max(self.expect_dist(b)?))),
        }
    }

    /// Lattice order `a ≤ b`.
    pub fn leq(&self, a: QValue, b: QValue) -> Result<bool, QuantaleError> {
        match self.kind {
            QuantaleKind::Boolean => Ok(!self.expect_bool(a)? || self.expect_bool(b)?),
            _ => Ok(self.expect_dist(b)?.num_le(&self.expect_dist(a)?)),
        }
    }

    /// Way-below relation `a ≪ b`.
    pub fn way_below(&self, a: QValue, b: QValue) -> Result<bool, QuantaleError> {
        match self.kind {
            QuantaleKind::Boolean => {
                let (a, b) = (self.expect_bool(a)?, self.expect_bool(b)?);
                Ok(bool_way_below(a, b))
            }
            _ => {
                let (a, b) = (self.expect_dist(a)?, self.expect_dist(b)?);
                Ok(b.num_lt(&a) || (a == Ext::Inf && b == Ext::Inf))
            }
        }
    }

    /// Every rational value is a basis element in the quantales supported
    /// here; irrational bounds never reach this function.
    pub fn in_basis(&self, v: QValue) -> bool {
        self.check(v).is_ok()
    }

    /// `r • q`: the `r`-fold tensor power of `q`, with `0 • q = k`.
    pub fn scalar_mul(
        &self,
        semiring: Semiring,
        r: Grade,
        q: QValue,
    ) -> Result<QValue, QuantaleError> {
        let q = self.check(q)?;
        semiring.check(r)?;
        match r {
            Grade::Inf => Ok(if q == self.unit() { q } else { self.bottom() }),
            Grade::Nat(0) => Ok(self.unit()),
            Grade::Nat(n) => match (self.kind, q) {
                (QuantaleKind::Metric, QValue::Dist(Ext::Fin(d))) => {
                    let n = i64::try_from(n).map_err(|_| QuantaleError::Overflow)?;
                    d.checked_mul(&Rat::from_integer(n))
                        .map(QValue::dist)
                        .ok_or(QuantaleError::Overflow)
                }
                _ => Ok(q),
            },
        }
    }
}

/// Way-below on the two-element lattice, computed from the definition:
/// `y ≪ x` iff every subset whose join is above `x` has a finite subset whose
/// join is above `y`. Subsets of a finite lattice are already finite, so this
/// reduces to checking all subsets.
fn bool_way_below(y: bool, x: bool) -> bool {
    let subsets: [&[bool]; 4] = [&[], &[false], &[true], &[false, true]];
    subsets.iter().all(|s| {
        let join = s.iter().any(|&b| b);
        !(x <= join) || y <= join
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SemiringKind {
    Nat,
    Trivial,
}

impl fmt::Display for SemiringKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SemiringKind::Nat => "nat",
            SemiringKind::Trivial => "trivial",
        })
    }
}

/// Grades: natural numbers, or the single element `inf` of the trivial
/// semiring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Grade {
    Nat(u64),
    Inf,
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grade::Nat(n) => write!(f, "{}", n),
            Grade::Inf => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Semiring {
    pub kind: SemiringKind,
}

impl Semiring {
    pub const NAT: Semiring = Semiring { kind: SemiringKind::Nat };
    pub const TRIVIAL: Semiring = Semiring { kind: SemiringKind::Trivial };

    pub fn check(&self, g: Grade) -> Result<Grade, QuantaleError> {
        match (self.kind, g) {
            (SemiringKind::Nat, Grade::Nat(_)) | (SemiringKind::Trivial, Grade::Inf) => Ok(g),
            _ => Err(QuantaleError::WrongGrade(g, self.kind)),
        }
    }

    pub fn zero(&self) -> Grade {
        match self.kind {
            SemiringKind::Nat => Grade::Nat(0),
            SemiringKind::Trivial => Grade::Inf,
        }
    }

    pub fn one(&self) -> Grade {
        match self.kind {
            SemiringKind::Nat => Grade::Nat(1),
            SemiringKind::Trivial => Grade::Inf,
        }
    }

    pub fn add(&self, a: Grade, b: Grade) -> Result<Grade, QuantaleError> {
        match (self.check(a)?, self.check(b)?) {
            (Grade::Nat(x), Grade::Nat(y)) => {
                x.checked_add(y).map(Grade::Nat).ok_or(QuantaleError::Overflow)
            }
            _ => Ok(Grade::Inf),
        }
    }

    pub fn mul(&self, a: Grade, b: Grade) -> Result<Grade, QuantaleError> {
        match (self.check(a)?, self.check(b)?) {
            (Grade::Nat(x), Grade::Nat(y)) => {
                x.checked_mul(y).map(Grade::Nat).ok_or(QuantaleError::Overflow)
            }
            _ => Ok(Grade::Inf),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(n: i64) -> QValue {
        QValue::int(n)
    }

    #[test]
    fn metric_tensor_and_join() {
        let q = Quantale::METRIC;
        assert_eq!(q.tensor(d(2), d(3)).unwrap(), d(5));
        assert_eq!(q.tensor(d(2), q.bottom()).unwrap(), q.bottom());
        assert_eq!(q.join(&[d(4), d(1), d(7)]).unwrap(), d(1));
        assert_eq!(q.join(&[]).unwrap(), QValue::Dist(Ext::Inf));
        assert!(q.leq(d(3), d(1)).unwrap());
        assert!(!q.leq(d(1), d(3)).unwrap());
    }

    #[test]
    fn way_below_values() {
        let q = Quantale::METRIC;
        assert!(q.way_below(d(3), d(1)).unwrap());
        assert!(!q.way_below(d(1), d(1)).unwrap());
        assert!(q.way_below(q.bottom(), q.bottom()).unwrap());
        let b = Quantale::BOOLEAN;
        assert!(b.way_below(QValue::Bool(false), QValue::Bool(true)).unwrap());
        assert!(b.way_below(QValue::Bool(true), QValue::Bool(true)).unwrap());
        assert!(!b.way_below(QValue::Bool(true), QValue::Bool(false)).unwrap());
    }

    #[test]
    fn scalar_multiplication() {
        let q = Quantale::METRIC;
        assert_eq!(q.scalar_mul(Semiring::NAT, Grade::Nat(3), d(2)).unwrap(), d(6));
        assert_eq!(q.scalar_mul(Semiring::NAT, Grade::Nat(0), q.bottom()).unwrap(), d(0));
        assert_eq!(q.scalar_mul(Semiring::NAT, Grade::Nat(2), q.bottom()).unwrap(), q.bottom());
        assert_eq!(q.scalar_mul(Semiring::TRIVIAL, Grade::Inf, d(1)).unwrap(), q.bottom());
        assert_eq!(q.scalar_mul(Semiring::TRIVIAL, Grade::Inf, d(0)).unwrap(), d(0));
        let b = Quantale::BOOLEAN;
        let f = QValue::Bool(false);
        assert_eq!(b.scalar_mul(Semiring::NAT, Grade::Nat(0), f).unwrap(), QValue::Bool(true));
        assert_eq!(b.scalar_mul(Semiring::NAT, Grade::Nat(4), f).unwrap(), f);
    }

    #[test]
    fn carrier_mismatch_is_reported() {
        assert!(Quantale::METRIC.tensor(QValue::Bool(true), d(1)).is_err());
        assert!(Quantale::METRIC.check(QValue::dist(Rat::new(-1, 2))).is_err());
        assert!(Semiring::NAT.check(Grade::Inf).is_err());
        assert!(Semiring::TRIVIAL.add(Grade::Nat(1), Grade::Inf).is_err());
    }
}
