use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use gvlam_core::generator::{timed_signature, timed_theory, TermGen};
use gvlam_core::met_model::laws::{check_comonad_laws, standard_spaces};
use gvlam_core::met_model::Model;
use gvlam_core::prob_model::check_diaconis;
use gvlam_core::syntax::parse_term;
use gvlam_core::typecheck::infer;
use gvlam_core::vequation::{synthesize, SynthOptions};
use gvlam_core::Context;

fn typing(c: &mut Criterion) {
    let sig = timed_signature();
    let mut gen = TermGen::new(1);
    let corpus: Vec<_> = (0..100).map(|_| gen.derivation(&sig).unwrap()).collect();
    c.bench_function("infer/100 generated terms", |b| {
        b.iter(|| {
            for d in &corpus {
                black_box(infer(&sig, &d.context, &d.term).unwrap());
            }
        })
    });
}

fn synthesis(c: &mut Criterion) {
    let theory = timed_theory();
    let mut gen = TermGen::new(2);
    let pairs: Vec<_> = (0..50).map(|_| gen.latency_pair()).collect();
    c.bench_function("synthesize/50 latency pairs", |b| {
        b.iter(|| {
            for (ctx, v, w) in &pairs {
                black_box(synthesize(&theory, ctx, v, w, SynthOptions::default()).unwrap());
            }
        })
    });
}

fn models(c: &mut Criterion) {
    let sig = timed_signature();
    let f = parse_term("fn x : X => wait_1(x)").unwrap();
    let g = parse_term("fn x : X => wait_2(x)").unwrap();
    let (df, dg) = (infer(&sig, &Context::new(), &f).unwrap(), infer(&sig, &Context::new(), &g).unwrap());
    let mut group = c.benchmark_group("hom_distance");
    for n in [8u32, 32, 128] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| {
                let m = Model::timed(n);
                let (a, b2) = (m.interp(&df).unwrap(), m.interp(&dg).unwrap());
                black_box(m.hom_distance(&a, &b2).unwrap())
            })
        });
    }
    group.finish();

    let spaces: Vec<_> = standard_spaces().into_iter().filter(|(_, s)| s.len() <= 3).collect();
    c.bench_function("comonad laws/grade 2, spaces <= 3", |b| b.iter(|| black_box(check_comonad_laws(&spaces, 2))));
}

fn urns(c: &mut Criterion) {
    let mut group = c.benchmark_group("diaconis");
    for (k, m, n) in [(2u64, 1u64, 1u64), (4, 3, 3), (6, 4, 4)] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{}-{}-{}", k, m, n)), &(k, m, n), |b, &(k, m, n)| {
            b.iter(|| black_box(check_diaconis(k, m, n).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, typing, synthesis, models, urns);
criterion_main!(benches);
