use gvlam_core::bound::Bound;
use gvlam_core::generator::{timed_theory, TermGen};
use gvlam_core::met_model::Model;
use gvlam_core::vequation::{synthesize, validate, ProofErrorKind, ProofKind, ProofNode, SynthOptions};
use gvlam_core::{Ext, QValue, Rat};

/// Synthesized proofs for generated latency pairs.
fn corpus(seed: u64, want: usize) -> Vec<(ProofNode, Bound)> {
    let theory = timed_theory();
    let mut gen = TermGen::new(seed);
    let mut out = Vec::new();
    for _ in 0..(want * 20) {
        let (ctx, v, w) = gen.latency_pair();
        if let Some((eq, proof)) = synthesize(&theory, &ctx, &v, &w, SynthOptions::default()).unwrap() {
            out.push((proof, eq.bound));
            if out.len() == want {
                break;
            }
        }
    }
    assert_eq!(out.len(), want, "too few provable pairs");
    out
}

#[test]
fn synthesized_proofs_revalidate_with_their_bound() {
    let theory = timed_theory();
    for (proof, bound) in corpus(1, 60) {
        assert_eq!(validate(&theory, &proof).unwrap().bound, bound);
    }
}

#[test]
fn weakening_and_transitivity_with_reflexivity() {
    let theory = timed_theory();
    for (proof, bound) in corpus(2, 40) {
        let eq = validate(&theory, &proof).unwrap();
        let exact = bound.approx().unwrap();
        for extra in [0, 1, 5] {
            let to = Bound::dist(Rat::from_integer(exact as i64 + extra));
            if to.num_cmp(&bound).unwrap().is_lt() {
                continue;
            }
            let weak = ProofNode::new(ProofKind::Weak { to: to.clone() }, vec![proof.clone()]);
            assert_eq!(validate(&theory, &weak).unwrap().bound, to);
        }
        let refl = ProofNode::leaf(ProofKind::Refl { ctx: eq.ctx.clone(), term: eq.rhs.clone() });
        let trans = ProofNode::new(ProofKind::Trans, vec![proof.clone(), refl]);
        assert_eq!(validate(&theory, &trans).unwrap().bound, bound);
        // Claiming a smaller distance than proved is rejected.
        if let Some(QValue::Dist(Ext::Fin(r))) = bound.as_value() {
            if r > Rat::from_integer(0) {
                let tighter = ProofNode::new(ProofKind::Weak { to: Bound::dist(r - Rat::new(1, 2)) }, vec![proof.clone()]);
                assert!(validate(&theory, &tighter).is_err());
            }
        }
    }
}

#[test]
fn bounds_dominate_model_distances() {
    let theory = timed_theory();
    let model = Model::timed(6);
    for (proof, bound) in corpus(3, 100) {
        let eq = validate(&theory, &proof).unwrap();
        let d = model.equation_distance(&theory.signature, &eq).unwrap();
        assert!(d.to_f64() <= bound.approx().unwrap(), "{} has distance {}", eq, d);
    }
}

#[test]
fn symmetry_needs_a_symmetric_theory() {
    let mut theory = timed_theory();
    let (proof, _) = corpus(4, 1).remove(0);
    let sym = ProofNode::new(ProofKind::Sym, vec![proof]);
    assert!(validate(&theory, &sym).is_ok());
    theory.symmetric = false;
    let err = validate(&theory, &sym).unwrap_err();
    assert!(err.path.is_empty());
    assert!(matches!(err.kind, ProofErrorKind::NotSymmetric), "{:?}", err.kind);
}
