use gvlam_core::{Ext, Grade, QValue, Quantale, Rat, Semiring};
use proptest::prelude::*;

fn arb_dist() -> impl Strategy<Value = QValue> {
    prop_oneof![
        8 => (0i64..40, 1i64..6).prop_map(|(n, d)| QValue::dist(Rat::new(n, d))),
        1 => Just(QValue::Dist(Ext::Inf)),
    ]
}

fn arb_value(q: Quantale) -> BoxedStrategy<QValue> {
    if q == Quantale::BOOLEAN {
        any::<bool>().prop_map(QValue::Bool).boxed()
    } else {
        arb_dist().boxed()
    }
}

fn arb_quantale() -> impl Strategy<Value = Quantale> {
    prop::sample::select(vec![Quantale::METRIC, Quantale::ULTRAMETRIC, Quantale::BOOLEAN])
}

/// A grade with its semiring; `inf` is the trivial semiring's only element.
fn arb_grade() -> impl Strategy<Value = (Semiring, Grade)> {
    prop_oneof![
        5 => (0u64..6).prop_map(|n| (Semiring::NAT, Grade::Nat(n))),
        1 => Just((Semiring::TRIVIAL, Grade::Inf)),
    ]
}

prop_compose! {
    fn triple()(q in arb_quantale())
        (a in arb_value(q), b in arb_value(q), c in arb_value(q), q in Just(q)) -> (Quantale, QValue, QValue, QValue) {
        (q, a, b, c)
    }
}

prop_compose! {
    fn with_set()(q in arb_quantale())
        (a in arb_value(q), s in prop::collection::vec(arb_value(q), 0..5), q in Just(q)) -> (Quantale, QValue, Vec<QValue>) {
        (q, a, s)
    }
}

proptest! {
    #[test]
    fn tensor_is_a_commutative_monoid((q, a, b, c) in triple()) {
        let t = |x, y| q.tensor(x, y).unwrap();
        prop_assert_eq!(t(a, t(b, c)), t(t(a, b), c));
        prop_assert_eq!(t(a, b), t(b, a));
        prop_assert_eq!(t(q.unit(), a), a);
    }

    #[test]
    fn tensor_distributes_over_joins((q, a, s) in with_set()) {
        let lhs = q.tensor(a, q.join(&s).unwrap()).unwrap();
        let each: Vec<QValue> = s.iter().map(|&x| q.tensor(a, x).unwrap()).collect();
        prop_assert_eq!(lhs, q.join(&each).unwrap());
    }

    #[test]
    fn scaling_distributes_over_joins((q, a, mut s) in with_set(), (sr, r) in arb_grade()) {
        // Grade 0 sends the empty join to k, so the set is kept nonempty.
        s.push(a);
        let lhs = q.scalar_mul(sr, r, q.join(&s).unwrap()).unwrap();
        let each: Vec<QValue> = s.iter().map(|&x| q.scalar_mul(sr, r, x).unwrap()).collect();
        prop_assert_eq!(lhs, q.join(&each).unwrap());
    }

    #[test]
    fn scaling_is_monotone((q, a, b, _c) in triple(), (sr, r) in arb_grade()) {
        if q.leq(a, b).unwrap() {
            prop_assert!(q.leq(q.scalar_mul(sr, r, a).unwrap(), q.scalar_mul(sr, r, b).unwrap()).unwrap());
        }
    }

    #[test]
    fn unit_is_top((q, a, _b, _c) in triple()) {
        prop_assert!(q.leq(a, q.unit()).unwrap());
        prop_assert!(q.leq(q.bottom(), a).unwrap());
    }
}

#[test]
fn scaling_by_small_grades() {
    let q = Quantale::METRIC;
    let sr = Semiring::NAT;
    let two = QValue::int(2);
    assert_eq!(q.scalar_mul(sr, Grade::Nat(0), two).unwrap(), QValue::int(0));
    assert_eq!(q.scalar_mul(sr, Grade::Nat(3), two).unwrap(), QValue::int(6));
    let triv = Semiring::TRIVIAL;
    assert_eq!(q.scalar_mul(triv, Grade::Inf, two).unwrap(), QValue::Dist(Ext::Inf));
    assert_eq!(q.scalar_mul(triv, Grade::Inf, QValue::int(0)).unwrap(), QValue::int(0));
    assert!(q.scalar_mul(sr, Grade::Inf, two).is_err());
    assert_eq!(Quantale::ULTRAMETRIC.scalar_mul(sr, Grade::Nat(3), two).unwrap(), two);
}

#[test]
fn grade_zero_and_the_empty_join() {
    let q = Quantale::METRIC;
    assert_eq!(q.scalar_mul(Semiring::NAT, Grade::Nat(0), q.join(&[]).unwrap()).unwrap(), q.unit());
    assert_eq!(q.join(&[]).unwrap(), q.bottom());
}

#[test]
fn carriers_are_enforced() {
    assert!(Quantale::METRIC.tensor(QValue::Bool(true), QValue::int(1)).is_err());
    assert!(Quantale::BOOLEAN.join(&[QValue::int(0)]).is_err());
    assert!(Quantale::METRIC.check(QValue::int(-1)).is_err());
}
