//! End-to-end acceptance run. Prints one line per criterion and exits
//! non-zero if any fails. Runs without the libtest harness so the lines
//! always show.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use gvlam_cli::script::parse_script;
use gvlam_cli::theory::parse_theory;
use gvlam_core::equational::{apply_step, Dir, RewriteStep, SchemaId};
use gvlam_core::generator::{timed_signature, timed_theory, TermGen};
use gvlam_core::met_model::Model;
use gvlam_core::prob_model::{
    gaussian_phi, mag_sampler, no_replace_sampler, replace_sampler, tv_distance, walk_endpoint,
};
use gvlam_core::quantale::Ext;
use gvlam_core::syntax::free_vars;
use gvlam_core::typecheck::{exchange, infer, subst_derivation, Derivation};
use gvlam_core::vequation::{synthesize, validate, SynthOptions};
use gvlam_core::{Context, Rat, Term};

/// Tolerance for the closed-form walk bound against the printed enclosure.
const WALK_TOL: f64 = 1e-9;
/// Width allowed between `phi(k, ..)` and `sqrt(k) * phi(1, ..)`.
const SCALING_TOL: f64 = 1e-9;
/// Runtime limits per criterion, in seconds.
const LIMITS: [u64; 10] = [1, 1, 5, 10, 30, 30, 30, 60, 60, 60];

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn path(rel: &str) -> String {
    root().join(rel).to_string_lossy().into_owned()
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("gvlam").chain(args.iter().copied());
    let code = gvlam_cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn c1() -> Outcome {
    let thy = path("theories/timed.thy");
    let (code, out, err) = cli(&["bound", &thy, "--inline", "fn x : X => wait_1(x)", "fn x : X => wait_2(x)"]);
    ensure(code == 0 && out == "1\n", format!("bound printed {:?} (exit {}, {})", out, code, err.trim()))?;
    let (code, out, _) = cli(&[
        "model",
        "distance",
        &thy,
        "--inline",
        "--model",
        "timed(32)",
        "fn x : X => wait_1(x)",
        "fn x : X => wait_2(x)",
    ]);
    ensure(code == 0 && out == "1\n", format!("model distance {:?}", out))?;
    Ok("synthesized bound 1, model distance 1".into())
}

fn c2() -> Outcome {
    let thy = path("theories/timed.thy");
    let (code, out, err) = cli(&["prove", &thy, &path("proofs/promotion.proof")]);
    ensure(code == 0, format!("prove failed: {}", err.trim()))?;
    let first = out.lines().next().unwrap_or("");
    ensure(
        first == "|- !2(fn x : X => wait_1(x)) =[2] !2(fn x : X => wait_2(x)) : !2 (X -o X)",
        format!("conclusion {:?}", first),
    )?;
    ensure(out.lines().nth(1) == Some("bound 2"), "bound is not exactly 2")?;
    let (code, out, _) = cli(&[
        "model",
        "distance",
        &thy,
        "--inline",
        "--model",
        "timed(32)",
        "!2(fn x : X => wait_1(x))",
        "!2(fn x : X => wait_2(x))",
    ]);
    ensure(code == 0 && out == "2\n", format!("model distance {:?}", out))?;
    Ok("proof bound 2, dilated model distance 2".into())
}

fn c3() -> Outcome {
    let (code, out, err) =
        cli(&["model", "verify-axioms", &path("theories/timed.thy"), "--model", "timed(32)", "--max-index", "10"]);
    ensure(code == 0, format!("exit {}: {}", code, err.trim()))?;
    let rows: Vec<Vec<&str>> = out.lines().skip(1).map(|l| l.split(',').collect()).collect();
    ensure(rows.iter().all(|r| r[4] == "true"), "an instance failed or was skipped")?;
    let count = |name: &str| rows.iter().filter(|r| r[0] == name).count();
    let (z, a, w) = (count("wait-zero"), count("wait-add"), count("wait"));
    ensure(z == 1 && a == 121 && w == 121, format!("instance counts {} {} {}", z, a, w))?;
    Ok(format!("{} instances hold", rows.len()))
}

fn c4() -> Outcome {
    let (code, out, err) = cli(&["model", "prob-sweep", "--max", "8"]);
    ensure(code == 0, format!("exit {}: {}", code, err.trim()))?;
    let mut n = 0;
    for line in out.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let tv: Rat = f[3].parse().map_err(|_| format!("bad tv in {}", line))?;
        let k: i64 = f[0].parse().unwrap();
        let total: i64 = f[1].parse::<i64>().unwrap() + f[2].parse::<i64>().unwrap();
        ensure(tv <= Rat::new(4 * k, total), format!("violated: {}", line))?;
        n += 1;
    }
    ensure(out.lines().any(|l| l == "2,1,1,1/2,4,true"), "(2,1,1) does not give 1/2")?;
    Ok(format!("{} triples, (2,1,1) gives 1/2", n))
}

fn c5() -> Outcome {
    let (code, out, err) = cli(&["model", "gaussian-grid", "--k", "1"]);
    ensure(code == 0, format!("exit {}: {}\n{}", code, err.trim(), out))?;
    let grid = [Rat::new(1, 2), Rat::from_integer(1), Rat::from_integer(2)];
    let mus = [-1, 0, 1].map(Rat::from_integer);
    let mut worst: f64 = 0.0;
    for mu1 in mus {
        for mu2 in mus {
            for s1 in grid {
                for s2 in grid {
                    let one = gaussian_phi(Rat::from_integer(1), mu1, s1, mu2, s2).unwrap();
                    for k in 1..=9 {
                        let pk = gaussian_phi(Rat::from_integer(k), mu1, s1, mu2, s2).unwrap();
                        let scaled = (k as f64).sqrt() * one.value;
                        ensure(pk.hi - pk.lo <= SCALING_TOL, "enclosure too wide")?;
                        worst = worst.max((pk.value - scaled).abs());
                    }
                }
            }
        }
    }
    ensure(worst <= SCALING_TOL, format!("sqrt(k) scaling off by {:e}", worst))?;
    Ok(format!("81 grid points bounded, scaling error {:.1e}", worst))
}

fn c6() -> Outcome {
    let (code, out, err) = cli(&["prove", &path("theories/prob.thy"), &path("proofs/walk.proof")]);
    ensure(code == 0, format!("exit {}: {}", code, err.trim()))?;
    ensure(out.lines().nth(1) == Some("bound 3 + phi(3, 0, 1, 1, 1)"), format!("bound line {:?}", out.lines().nth(1)))?;
    let enc = out.lines().nth(2).and_then(|l| l.strip_prefix("enclosure [")).and_then(|l| l.strip_suffix(']'));
    let (lo, hi) = enc.and_then(|e| e.split_once(", ")).ok_or("no enclosure line")?;
    let (lo, hi): (f64, f64) = (lo.parse().unwrap(), hi.parse().unwrap());
    // 4k/(m+n) + sqrt(k)/2 * |mu1 - mu2| / sigma for equal variances.
    let closed = 4.0 * 3.0 / 4.0 + 0.5 * (3.0f64).sqrt();
    ensure((lo - closed).abs() <= WALK_TOL && (hi - closed).abs() <= WALK_TOL, format!("[{}, {}] vs {}", lo, hi, closed))?;

    // Discrete magnitudes: the exact endpoint law against the proved bound.
    let theory = parse_theory(&std::fs::read_to_string(path("theories/prob.thy")).unwrap()).unwrap();
    let ps = [Rat::from_integer(0), Rat::new(1, 4), Rat::new(1, 2), Rat::from_integer(1)];
    let mut checked = 0;
    let mut tight = 0;
    for total in 1..=6u64 {
        for m in 0..=total {
            for k in 1..=total.min(3) {
                for p in ps {
                    for q in ps {
                        let src = format!(
                            "(cong-promote {k}
                               (axiom diaconis (k {k}) (m {m}) (n {n}))
                               (axiom mags (k {k}) (p \"{p}\") (q \"{q}\"))
                               (refl \"x : !1 real, y : !1 real\"
                                     \"mul(add(mul(const[2](unit), derelict x), const[-1](unit)), derelict y)\"))",
                            k = k,
                            m = m,
                            n = total - m,
                            p = p,
                            q = q
                        );
                        let proof = parse_script(&theory, &src).map_err(|e| e.to_string())?;
                        let eq = validate(&theory, &proof).map_err(|e| e.to_string())?;
                        let bound = match eq.bound.exact {
                            gvlam_core::QValue::Dist(Ext::Fin(r)) if eq.bound.atoms.is_empty() => r,
                            _ => return Err(format!("bound {} is not a finite rational", eq.bound)),
                        };
                        let expect = Rat::new(4 * k as i64, total as i64) + Rat::from_integer(k as i64) * if p > q { p - q } else { q - p };
                        ensure(bound == expect, format!("bound {} expected {}", bound, expect))?;
                        let left = walk_endpoint(&replace_sampler(k, m, total - m).unwrap(), &mag_sampler(k, p).unwrap()).unwrap();
                        let right =
                            walk_endpoint(&no_replace_sampler(k, m, total - m).unwrap(), &mag_sampler(k, q).unwrap()).unwrap();
                        let tv = tv_distance(&left, &right).unwrap();
                        ensure(tv <= bound, format!("tv {} > bound {} at k={} m={} n={} p={} q={}", tv, bound, k, m, total - m, p, q))?;
                        checked += 1;
                        if bound < Rat::from_integer(1) {
                            tight += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(format!("enclosure matches 3 + sqrt(3)/2; {} discrete instances ({} with bound < 1)", checked, tight))
}

fn linear(d: &Derivation) -> bool {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for x in free_vars(&d.term) {
        *counts.entry(x).or_default() += 1;
    }
    let ctx: BTreeMap<String, usize> = d.context.vars.iter().map(|(x, _)| (x.clone(), 1)).collect();
    counts == ctx && d.premises.iter().all(linear)
}

fn c7() -> Outcome {
    let sig = timed_signature();
    let mut gen = TermGen::new(2024);
    let (mut exchanges, mut substs) = (0, 0);
    for i in 0..500 {
        let d = gen.derivation(&sig).map_err(|e| format!("generator produced an ill-typed term: {}", e))?;
        let again = infer(&sig, &d.context, &d.term).map_err(|e| e.to_string())?;
        ensure(again == d, format!("derivation {} does not round-trip", i))?;
        d.verify(&sig).map_err(|e| format!("derivation {}: {}", i, e))?;
        ensure(linear(&d), format!("derivation {} breaks linearity", i))?;
        for j in 0..d.context.len().saturating_sub(1) {
            let e = exchange(&d, j).map_err(|e| e.to_string())?;
            e.verify(&sig).map_err(|e| format!("exchange: {}", e))?;
            ensure(linear(&e), "exchange breaks linearity")?;
            exchanges += 1;
        }
        if let Some((x, a)) = d.context.vars.first().cloned() {
            // A fresh argument of the right type over its own context.
            let arg_ctx = Context::single(&format!("s{}", i), a.clone());
            let arg = Term::var(&format!("s{}", i));
            let e = infer(&sig, &arg_ctx, &arg).map_err(|e| e.to_string())?;
            let s = subst_derivation(&sig, &d, &x, &e).map_err(|e| e.to_string())?;
            s.verify(&sig).map_err(|e| format!("substitution: {}", e))?;
            ensure(linear(&s), "substitution breaks linearity")?;
            let re = infer(&sig, &s.context, &s.term).map_err(|e| e.to_string())?;
            ensure(re.ty == d.ty, "substitution changed the type")?;
            substs += 1;
        }
    }
    Ok(format!("500 derivations, {} exchanges, {} substitutions", exchanges, substs))
}

fn c8() -> Outcome {
    let sig = timed_signature();
    let model = Model::timed(3);
    let mut gen = TermGen::new(88);
    let mut n = 0;
    for s in SchemaId::ALL {
        for _ in 0..20 {
            let (ctx, t) = gen.schema_instance(s);
            let d = infer(&sig, &ctx, &t).map_err(|e| format!("{}: {}", s, e))?;
            let r = apply_step(&sig, &d, &RewriteStep::new(s, Dir::L2R, vec![])).map_err(|e| format!("{}: {}", s, e))?;
            let (a, b) = (model.interp(&d).map_err(|e| e.to_string())?, model.interp(&r).map_err(|e| e.to_string())?);
            ensure(a.inputs == b.inputs && a.outputs == b.outputs, format!("{} changes the denotation of `{}`", s, t))?;
            n += 1;
        }
    }
    Ok(format!("{} schemata x 20 instances, tables identical ({} checks)", SchemaId::ALL.len(), n))
}

fn c9() -> Outcome {
    let (code, out, err) = cli(&["model", "verify-laws", "--grades", "0..4", "--max-space", "4"]);
    ensure(code == 0, format!("exit {}: {}", code, err.trim()))?;
    ensure(out.lines().any(|l| l == "# failures: 0"), "failure report not empty")?;
    let checks: usize = out
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').nth(2).and_then(|c| c.parse::<usize>().ok()).unwrap_or(0))
        .sum();
    Ok(format!("{} diagram instances, no failures", checks))
}

fn c10() -> Outcome {
    let theory = timed_theory();
    let model = Model::timed(6);
    let mut gen = TermGen::new(10);
    let (mut proved, mut tried) = (0, 0);
    while proved < 150 && tried < 2000 {
        tried += 1;
        let (ctx, v, w) = gen.latency_pair();
        let Some((_, proof)) = synthesize(&theory, &ctx, &v, &w, SynthOptions::default()).map_err(|e| e.to_string())? else {
            continue;
        };
        let eq = validate(&theory, &proof).map_err(|e| e.to_string())?;
        let dist = model.equation_distance(&theory.signature, &eq).map_err(|e| e.to_string())?;
        let b = eq.bound.approx().map_err(|e| e.to_string())?;
        let ok = match dist {
            Ext::Fin(r) => Ext::Fin(r).to_f64() <= b,
            Ext::Inf => false,
        };
        ensure(ok, format!("{} has model distance {}", eq, dist))?;
        proved += 1;
    }
    ensure(proved >= 100, format!("only {} of {} pairs were provable", proved, tried))?;
    Ok(format!("{} proved equations, no violations", proved))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("latency bound for wait_1 vs wait_2", c1),
        ("promotion doubles the distance", c2),
        ("wait axioms hold in the timed model", c3),
        ("sampling with and without replacement", c4),
        ("gaussian bound and sqrt(k) scaling", c5),
        ("random walk bound", c6),
        ("typing metatheory", c7),
        ("equational schemata are sound", c8),
        ("graded exponential laws", c9),
        ("soundness on a generated corpus", c10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let res = f();
        let took = t.elapsed();
        let limit = Duration::from_secs(LIMITS[i]);
        let res = match res {
            Ok(msg) if took > limit => Err(format!("{} but took {:.2?}, limit {:?}", msg, took, limit)),
            r => r,
        };
        match res {
            Ok(msg) => println!("criterion {:>2} PASS  {}: {} [{:.2?}]", i + 1, name, msg, took),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {}: {} [{:.2?}]", i + 1, name, msg, took);
            }
        }
    }
    if failed > 0 {
        println!("{} criteria failed", failed);
        std::process::exit(1);
    }
}
