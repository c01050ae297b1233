use gvlam_core::generator::{timed_signature, TermGen};
use gvlam_core::syntax::{parse_context, parse_term};
use gvlam_core::typecheck::{exchange, infer, subst_derivation, TypeErrorKind};
use gvlam_core::{Context, Term};
use rand::Rng;

#[test]
fn inference_reproduces_generated_derivations() {
    let sig = timed_signature();
    let mut gen = TermGen::new(1);
    for i in 0..500 {
        let d = gen.derivation(&sig).unwrap();
        let again = infer(&sig, &d.context, &d.term).unwrap();
        assert_eq!(again, d, "derivation {} differs", i);
        d.verify(&sig).unwrap();
    }
}

#[test]
fn exchange_permutes_contexts_and_keeps_types() {
    let sig = timed_signature();
    let mut gen = TermGen::new(2);
    for _ in 0..300 {
        let mut d = gen.derivation(&sig).unwrap();
        let ty = d.ty.clone();
        let original = d.context.clone();
        if d.context.len() < 2 {
            continue;
        }
        for _ in 0..4 {
            let i = gen.rng().gen_range(0..d.context.len() - 1);
            d = exchange(&d, i).unwrap();
            assert_eq!(infer(&sig, &d.context, &d.term).unwrap(), d);
        }
        assert!(d.context.is_permutation_of(&original));
        assert_eq!(d.ty, ty);
    }
}

#[test]
fn substitution_revalidates() {
    let sig = timed_signature();
    let mut gen = TermGen::new(3);
    let mut done = 0;
    for i in 0..300 {
        let d = gen.derivation(&sig).unwrap();
        let Some((x, a)) = d.context.vars.last().cloned() else { continue };
        // Substitute a generated term over fresh variables.
        let arg_ctx = Context::from_vec(vec![(format!("fresh{}", i), a.clone())]);
        let arg = gen.gen_term(&a, vec![(Term::var(&format!("fresh{}", i)), a.clone())], 2);
        let e = infer(&sig, &arg_ctx, &arg).unwrap();
        let s = subst_derivation(&sig, &d, &x, &e).unwrap();
        assert_eq!(infer(&sig, &s.context, &s.term).unwrap(), s);
        assert_eq!(s.ty, d.ty);
        done += 1;
    }
    assert!(done > 100);
}

#[test]
fn linearity_errors_name_the_variable() {
    let sig = timed_signature();
    let ctx = parse_context("x : X").unwrap();
    let err = infer(&sig, &ctx, &parse_term("later(x, x)").unwrap()).unwrap_err();
    assert_eq!(err.kind, TypeErrorKind::UsedTwice("x".into()));
    assert!(err.to_string().contains("variable used twice"));
    let err = infer(&sig, &parse_context("x : X, y : X").unwrap(), &parse_term("x").unwrap()).unwrap_err();
    assert_eq!(err.kind, TypeErrorKind::Unused("y".into()));
}
