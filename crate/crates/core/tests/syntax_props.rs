use std::collections::BTreeMap;

use gvlam_core::generator::{timed_signature, TermGen};
use gvlam_core::oracles::brute_interleavings;
use gvlam_core::syntax::{enumerate_shuffles, free_vars, parse_term, parse_type};
use proptest::prelude::*;

fn multinomial(sizes: &[usize]) -> usize {
    let fact = |n: usize| (1..=n).product::<usize>();
    fact(sizes.iter().sum()) / sizes.iter().map(|&s| fact(s)).product::<usize>()
}

#[test]
fn printing_is_stable_through_parsing() {
    let sig = timed_signature();
    let mut gen = TermGen::new(5);
    for _ in 0..300 {
        let d = gen.derivation(&sig).unwrap();
        let once = d.term.to_string();
        let back = parse_term(&once).unwrap_or_else(|e| panic!("`{}` does not parse: {}", once, e));
        assert_eq!(back.to_string(), once);
        assert_eq!(back, d.term);
        let ty = d.ty.to_string();
        assert_eq!(parse_type(&ty).unwrap().to_string(), ty);
    }
}

#[test]
fn context_variables_occur_exactly_once() {
    let sig = timed_signature();
    let mut gen = TermGen::new(6);
    for _ in 0..300 {
        let d = gen.derivation(&sig).unwrap();
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for x in free_vars(&d.term) {
            *counts.entry(x).or_default() += 1;
        }
        let expected: BTreeMap<String, usize> = d.context.vars.iter().map(|(x, _)| (x.clone(), 1)).collect();
        assert_eq!(counts, expected, "{}", d.judgement());
    }
}

#[test]
fn no_parts_interleave_one_way() {
    assert_eq!(enumerate_shuffles::<u8>(&[]), vec![Vec::<u8>::new()]);
    assert_eq!(brute_interleavings::<u8>(&[]), vec![Vec::<u8>::new()]);
}

proptest! {
    #[test]
    fn shuffle_counts_are_multinomial(sizes in prop::collection::vec(0usize..4, 0..4)) {
        prop_assume!(sizes.iter().sum::<usize>() <= 7);
        let mut next = 0u32;
        let parts: Vec<Vec<u32>> = sizes
            .iter()
            .map(|&s| (0..s).map(|_| { next += 1; next }).collect())
            .collect();
        let mut fast = enumerate_shuffles(&parts);
        prop_assert_eq!(fast.len(), multinomial(&sizes));
        fast.sort();
        prop_assert_eq!(fast, brute_interleavings(&parts));
    }
}
