use gvlam_core::met_model::laws::{nonexpansive_tables, standard_spaces, FinSpace};
use gvlam_core::met_model::{GroundSpace, Model};
use gvlam_core::oracles::{brute_tv, compose, enumerate_nonexpansive, perm_group, OracleReport};
use gvlam_core::prob_model::{tv_distance, FinDist};
use gvlam_core::{Ext, Rat, TypeExpr};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_dist(rng: &mut ChaCha8Rng) -> FinDist {
    let n = rng.gen_range(1..6);
    let mut pairs = Vec::new();
    let mut weights = Vec::new();
    for _ in 0..n {
        let outcome = vec![Rat::from_integer(rng.gen_range(0..3)), Rat::new(rng.gen_range(-2..3), 2)];
        pairs.push(outcome);
        weights.push(rng.gen_range(1..7i64));
    }
    let total: i64 = weights.iter().sum();
    FinDist::from_pairs(pairs.into_iter().zip(weights).map(|(o, w)| (o, Rat::new(w, total)))).unwrap()
}

fn pairs(d: &FinDist) -> Vec<(Vec<Rat>, Rat)> {
    d.probs.iter().map(|(k, v)| (k.clone(), *v)).collect()
}

#[test]
fn tv_agrees_with_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    for i in 0..200 {
        let (p, q) = (random_dist(&mut rng), random_dist(&mut rng));
        let r = OracleReport::new("tv", i, brute_tv(&pairs(&p), &pairs(&q)), tv_distance(&p, &q).unwrap());
        assert!(r.verdict, "{}", r);
    }
}

#[test]
fn nonexpansive_enumerations_agree() {
    let spaces: Vec<(String, FinSpace)> = standard_spaces().into_iter().filter(|(_, s)| s.len() <= 3).collect();
    for (a, x) in &spaces {
        for (b, y) in &spaces {
            let mut fast = nonexpansive_tables(x, y);
            fast.sort();
            let brute = enumerate_nonexpansive(&x.dist, &y.dist, 1_000_000).unwrap();
            assert_eq!(fast, brute, "{} -> {}", a, b);
        }
    }
}

#[test]
fn small_enumeration_examples() {
    let point = vec![vec![Ext::int(0)]];
    let line = |n: u32| GroundSpace::line(n).dist;
    assert_eq!(enumerate_nonexpansive(&point, &line(3), 100).unwrap().len(), 4);
    assert_eq!(enumerate_nonexpansive(&line(2), &line(2), 100).unwrap().len(), 17);
    let model = Model::timed(2);
    let x = TypeExpr::ground("X");
    let carrier = model.carrier(&TypeExpr::lolli(x.clone(), x)).unwrap();
    assert_eq!(carrier.points.len(), 17);
}

#[test]
fn permutations_are_closed_under_composition() {
    for n in 0..=4 {
        let g = perm_group(n).unwrap();
        let fact: usize = (1..=n).product();
        assert_eq!(g.len(), fact);
        for s in &g {
            for t in &g {
                assert!(g.binary_search(&compose(s, t)).is_ok());
            }
        }
    }
}
