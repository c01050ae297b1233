use gvlam_core::equational::{apply_step, beta_normalize, Dir, RewriteStep, SchemaId};
use gvlam_core::generator::{timed_signature, GenConfig, TermGen};
use gvlam_core::met_model::Model;
use gvlam_core::typecheck::infer;

#[test]
fn steps_preserve_context_and_type() {
    let sig = timed_signature();
    let mut gen = TermGen::new(40);
    for s in SchemaId::ALL {
        for _ in 0..20 {
            let (ctx, t) = gen.schema_instance(s);
            let d = infer(&sig, &ctx, &t).unwrap();
            let r = apply_step(&sig, &d, &RewriteStep::new(s, Dir::L2R, vec![])).unwrap();
            let again = infer(&sig, &r.context, &r.term).unwrap();
            assert_eq!(again, r);
            assert_eq!(r.context, d.context, "{} changed the context of `{}`", s, t);
            assert_eq!(r.ty, d.ty);
        }
    }
}

#[test]
fn normalization_fits_in_linear_fuel() {
    let sig = timed_signature();
    let cfg = GenConfig { redex_pct: 40, ..GenConfig::default() };
    let mut gen = TermGen::with_config(41, cfg);
    let mut reduced = 0;
    for _ in 0..300 {
        let d = gen.derivation(&sig).unwrap();
        let n = beta_normalize(&sig, &d, 10 * d.term.size()).unwrap();
        assert!(!n.exhausted, "fuel ran out on `{}`", d.term);
        assert_eq!(n.derivation.ty, d.ty);
        if !n.steps.is_empty() {
            reduced += 1;
        }
    }
    assert!(reduced > 30, "only {} terms had redexes", reduced);
}

#[test]
fn schemata_preserve_denotations() {
    let sig = timed_signature();
    let model = Model::timed(3);
    let mut gen = TermGen::new(42);
    for s in SchemaId::ALL {
        for _ in 0..20 {
            let (ctx, t) = gen.schema_instance(s);
            let d = infer(&sig, &ctx, &t).unwrap();
            let r = apply_step(&sig, &d, &RewriteStep::new(s, Dir::L2R, vec![])).unwrap();
            let (a, b) = (model.interp(&d).unwrap(), model.interp(&r).unwrap());
            assert_eq!(a.inputs, b.inputs);
            assert_eq!(a.outputs, b.outputs, "{} on `{}`", s, t);
        }
    }
}
