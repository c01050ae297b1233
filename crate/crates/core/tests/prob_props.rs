use gvlam_core::oracles::perm_group;
use gvlam_core::prob_model::{
    check_symmetrisation, gaussian_phi, gaussian_tv_numeric, mag_sampler, no_replace_sampler, rat_f64,
    replace_sampler, tv_distance, walk_endpoint, FinDist,
};
use gvlam_core::Rat;
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

fn bernoulli(p: Rat) -> FinDist {
    FinDist::from_pairs([(vec![Rat::from_integer(0)], Rat::from_integer(1) - p), (vec![Rat::from_integer(1)], p)])
        .unwrap()
}

#[test]
fn draws_without_replacement_are_exchangeable() {
    for k in 1..=6u64 {
        let perms = perm_group(k as usize).unwrap();
        for total in k..=6 {
            for m in 0..=total {
                let d = no_replace_sampler(k, m, total - m).unwrap();
                for p in &perms {
                    assert_eq!(d.permute(p), d, "k={} m={} n={} perm {:?}", k, m, total - m, p);
                }
            }
        }
    }
}

#[test]
fn every_draw_is_bernoulli() {
    for total in 1..=6u64 {
        for m in 0..=total {
            let n = total - m;
            let coin = bernoulli(Rat::new(n as i64, total as i64));
            for k in 1..=total {
                let with = replace_sampler(k, m, n).unwrap();
                let without = no_replace_sampler(k, m, n).unwrap();
                for i in 0..k as usize {
                    assert_eq!(with.marginal(i), coin);
                    assert_eq!(without.marginal(i), coin);
                }
            }
        }
    }
}

fn arb_dist() -> impl Strategy<Value = FinDist> {
    prop::collection::vec(0i64..5, 4).prop_filter("some mass", |w| w.iter().sum::<i64>() > 0).prop_map(|w| {
        let total: i64 = w.iter().sum();
        FinDist::from_pairs(w.iter().enumerate().map(|(i, &x)| (vec![Rat::from_integer(i as i64)], Rat::new(x, total))))
            .unwrap()
    })
}

proptest! {
    #[test]
    fn total_variation_is_a_metric(p in arb_dist(), q in arb_dist(), r in arb_dist()) {
        let d = |a: &FinDist, b: &FinDist| tv_distance(a, b).unwrap();
        prop_assert_eq!(d(&p, &q), d(&q, &p));
        prop_assert!(d(&p, &r) <= d(&p, &q) + d(&q, &r));
        prop_assert_eq!(d(&p, &q) == Rat::from_integer(0), p == q);
        prop_assert!(d(&p, &q) <= Rat::from_integer(1));
    }
}

#[test]
fn phi_scales_with_the_square_root_of_k() {
    // Equal variances and a mean shift of 2σ give φ(k) = √k exactly when k is square.
    let one = gaussian_phi(Rat::from_integer(1), Rat::from_integer(0), Rat::from_integer(1), Rat::from_integer(2), Rat::from_integer(1)).unwrap();
    assert_eq!(one.exact, Some(Rat::from_integer(1)));
    for k in [1i64, 4, 9, 16] {
        let p = gaussian_phi(Rat::from_integer(k), Rat::from_integer(0), Rat::from_integer(1), Rat::from_integer(2), Rat::from_integer(1))
            .unwrap();
        let root = (k as f64).sqrt() as i64;
        assert_eq!(p.exact, Some(Rat::from_integer(root)));
    }
    let grid = [Rat::new(1, 2), Rat::from_integer(1), Rat::from_integer(2)];
    for s1 in grid {
        for s2 in grid {
            let base = gaussian_phi(Rat::from_integer(1), Rat::from_integer(0), s1, Rat::from_integer(1), s2).unwrap();
            for k in 2..=7 {
                let p = gaussian_phi(Rat::from_integer(k), Rat::from_integer(0), s1, Rat::from_integer(1), s2).unwrap();
                let sq = p.value * p.value;
                assert!((sq - k as f64 * base.value * base.value).abs() <= 1e-12 * sq.max(1.0));
            }
        }
    }
}

#[test]
fn gaussian_tv_agrees_with_the_normal_cdf() {
    // Equal variances: TV = 2Φ(|μ1 - μ2| / 2σ) - 1.
    let std = Normal::new(0.0, 1.0).unwrap();
    for (dmu, s) in [(1i64, Rat::from_integer(1)), (2, Rat::new(1, 2)), (1, Rat::from_integer(2)), (0, Rat::from_integer(1))] {
        let tv = gaussian_tv_numeric(Rat::from_integer(0), s, Rat::from_integer(dmu), s).unwrap();
        let closed = 2.0 * std.cdf(dmu as f64 / (2.0 * rat_f64(&s))) - 1.0;
        assert!((tv - closed).abs() < 1e-9, "dmu={} s={}: {} vs {}", dmu, s, tv, closed);
    }
}

#[test]
fn gaussian_tv_is_below_phi() {
    let mus = [-1, 0, 1].map(Rat::from_integer);
    let grid = [Rat::new(1, 2), Rat::from_integer(1), Rat::from_integer(2)];
    for mu1 in mus {
        for mu2 in mus {
            for s1 in grid {
                for s2 in grid {
                    let tv = gaussian_tv_numeric(mu1, s1, mu2, s2).unwrap();
                    let phi = gaussian_phi(Rat::from_integer(1), mu1, s1, mu2, s2).unwrap();
                    assert!(tv <= phi.hi + 1e-6, "({}, {}) vs ({}, {})", mu1, s1, mu2, s2);
                }
            }
        }
    }
}

#[test]
fn discrete_walks_stay_within_the_composed_bound() {
    let ps = [Rat::from_integer(0), Rat::new(1, 3), Rat::new(1, 2), Rat::from_integer(1)];
    for total in 1..=6u64 {
        for m in 0..=total {
            for k in 1..=total.min(4) {
                for p in ps {
                    for q in ps {
                        let a = walk_endpoint(&replace_sampler(k, m, total - m).unwrap(), &mag_sampler(k, p).unwrap()).unwrap();
                        let b = walk_endpoint(&no_replace_sampler(k, m, total - m).unwrap(), &mag_sampler(k, q).unwrap()).unwrap();
                        let gap = if p > q { p - q } else { q - p };
                        let bound = Rat::new(4 * k as i64, total as i64) + Rat::from_integer(k as i64) * gap;
                        assert!(tv_distance(&a, &b).unwrap() <= bound);
                    }
                }
            }
        }
    }
}

#[test]
fn symmetrisation_is_a_linear_retraction() {
    for (d, n) in [(2, 2), (2, 3), (3, 2), (3, 3)] {
        let rep = check_symmetrisation(d, n, 20, 9).unwrap();
        assert_eq!(rep.checked, 20);
        assert!(rep.failures.is_empty(), "{:?}", rep.failures);
    }
}
