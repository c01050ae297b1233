use std::collections::BTreeMap;

use clap::Subcommand;
use gvlam_core::met_model::laws::{check_comonad_laws, standard_spaces};
use gvlam_core::met_model::Model;
use gvlam_core::prob_model::{diaconis_sweep, gaussian_phi, gaussian_tv_numeric};
use gvlam_core::syntax::{Env, ParamKind};
use gvlam_core::typecheck::infer;
use gvlam_core::vequation::{AxiomSchema, TheorySpec};
use gvlam_core::Rat;

use crate::model_file::parse_model_file;
use crate::report::{Format, Table};
use crate::{guard, read, load_context, load_term, load_theory, CResult, Failure, TermSource, EXIT_MODEL, EXIT_OK, EXIT_TYPE, EXIT_USAGE};

/// Slack allowed between the quadrature value and the closed-form bound.
pub const GAUSSIAN_TOL: f64 = 1e-6;

#[derive(Subcommand, Debug)]
pub enum ModelCmd {
    /// Tabulate the denotation of a term.
    Eval {
        theory: String,
        term: String,
        #[command(flatten)]
        src: TermSource,
        /// `timed(N)` or the path of a model file.
        #[arg(long, default_value = "timed(4)")]
        model: String,
    },
    /// Distance between the denotations of two terms.
    Distance {
        theory: String,
        left: String,
        right: String,
        #[command(flatten)]
        src: TermSource,
        /// `timed(N)` or the path of a model file.
        #[arg(long, default_value = "timed(4)")]
        model: String,
    },
    /// Check every axiom instance with natural parameters up to a limit.
    VerifyAxioms {
        theory: String,
        /// `timed(N)` or the path of a model file.
        #[arg(long, default_value = "timed(32)")]
        model: String,
        #[arg(long, default_value_t = 10)]
        max_index: u64,
    },
    /// Exhaustive checks of the graded exponential on small metric spaces.
    VerifyLaws {
        /// Grade range, inclusive, e.g. `0..4`.
        #[arg(long, default_value = "0..4")]
        grades: String,
        #[arg(long, default_value_t = 4)]
        max_space: usize,
    },
    /// Exact total variation of sampling with and without replacement.
    ProbSweep {
        #[arg(long, default_value_t = 8)]
        max: u64,
    },
    /// Gaussian total variation against the closed-form bound.
    GaussianGrid {
        #[arg(long, default_value_t = 1)]
        k: u64,
    },
}

pub fn run(cmd: ModelCmd, format: Format, out: &mut String) -> CResult<i32> {
    match cmd {
        ModelCmd::Eval { theory, term, src, model } => {
            let th = load_theory(&theory)?;
            let m = parse_model(&model, &th)?;
            let t = load_term(&term, &src)?;
            let ctx = load_context(&src)?;
            let d = infer(&th.signature, &ctx, &t).map_err(|e| Failure::new(EXIT_TYPE, e.to_string()))?;
            let map = m.interp(&d).map_err(model_err)?;
            let names: Vec<String> = ctx.names().iter().map(|x| x.to_string()).collect();
            let mut header: Vec<&str> = names.iter().map(String::as_str).collect();
            header.push("value");
            let mut table = Table::new(&header);
            for (ins, o) in map.inputs.iter().zip(&map.outputs) {
                let mut row: Vec<String> = ins.iter().map(|p| p.to_string()).collect();
                row.push(o.to_string());
                table.push(row);
            }
            out.push_str(&table.render(format));
            Ok(EXIT_OK)
        }
        ModelCmd::Distance { theory, left, right, src, model } => {
            let th = load_theory(&theory)?;
            let m = parse_model(&model, &th)?;
            let ctx = load_context(&src)?;
            let mut maps = Vec::new();
            for arg in [&left, &right] {
                let t = load_term(arg, &src)?;
                let d = infer(&th.signature, &ctx, &t).map_err(|e| Failure::new(EXIT_TYPE, e.to_string()))?;
                maps.push(m.interp(&d).map_err(model_err)?);
            }
            if maps[0].ty != maps[1].ty {
                return Err(Failure::new(EXIT_TYPE, format!("types differ: {} and {}", maps[0].ty, maps[1].ty)));
            }
            let dist = m.hom_distance(&maps[0], &maps[1]).map_err(model_err)?;
            out.push_str(&format!("{}\n", dist));
            Ok(EXIT_OK)
        }
        ModelCmd::VerifyAxioms { theory, model, max_index } => {
            let th = load_theory(&theory)?;
            let m = parse_model(&model, &th)?;
            let (table, ok) = verify_axioms(&th, &m, max_index)?;
            out.push_str(&table.render(format));
            Ok(if ok { EXIT_OK } else { EXIT_MODEL })
        }
        ModelCmd::VerifyLaws { grades, max_space } => {
            let max_grade = parse_grades(&grades)?;
            let spaces: Vec<_> = standard_spaces().into_iter().filter(|(_, s)| s.len() <= max_space).collect();
            let rep = check_comonad_laws(&spaces, max_grade);
            let mut table = Table::new(&["law", "space", "checked", "status"]);
            for r in &rep.rows {
                let status = r.failure.clone().unwrap_or_else(|| "ok".into());
                table.push(vec![r.law.clone(), r.space.clone(), r.checked.to_string(), status]);
            }
            out.push_str(&table.render(format));
            for n in &rep.notes {
                out.push_str(&format!("# {}\n", n));
            }
            let failures = rep.rows.iter().filter(|r| !r.ok()).count();
            out.push_str(&format!("# failures: {}\n", failures));
            Ok(if failures == 0 { EXIT_OK } else { EXIT_MODEL })
        }
        ModelCmd::ProbSweep { max } => {
            let rows = diaconis_sweep(max).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
            let mut table = Table::new(&["k", "m", "n", "tv", "bound", "ok"]);
            for r in &rows {
                table.push(vec![
                    r.k.to_string(),
                    r.m.to_string(),
                    r.n.to_string(),
                    r.tv.to_string(),
                    r.bound.to_string(),
                    r.ok.to_string(),
                ]);
            }
            out.push_str(&table.render(format));
            Ok(if rows.iter().all(|r| r.ok) { EXIT_OK } else { EXIT_MODEL })
        }
        ModelCmd::GaussianGrid { k } => {
            let (table, ok) = gaussian_grid(k)?;
            out.push_str(&table.render(format));
            Ok(if ok { EXIT_OK } else { EXIT_MODEL })
        }
    }
}

fn model_err(e: impl std::fmt::Display) -> Failure {
    Failure::new(EXIT_MODEL, e.to_string())
}

/// `timed(N)`, or the path of a model file.
pub fn parse_model(spec: &str, theory: &TheorySpec) -> CResult<Model> {
    let spec = spec.trim();
    if let Some(inner) = spec.strip_prefix("timed(").and_then(|s| s.strip_suffix(')')) {
        let n: u32 = inner
            .trim()
            .parse()
            .map_err(|_| Failure::new(EXIT_USAGE, format!("bad model `{}`; expected timed(N)", spec)))?;
        return Ok(Model::timed(n).with_guard(guard()?));
    }
    if spec.ends_with(')') {
        return Err(Failure::new(EXIT_USAGE, format!("unknown model `{}`; the built-in family is timed(N)", spec)));
    }
    parse_model_file(&read(spec)?, theory, guard()?)
}

fn parse_grades(s: &str) -> CResult<usize> {
    let bad = || Failure::new(EXIT_USAGE, format!("grade range `{}` should look like 0..4", s));
    let (lo, hi) = s.split_once("..").ok_or_else(bad)?;
    let hi = hi.strip_prefix('=').unwrap_or(hi);
    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok(hi)
}

/// Parameter assignments with every parameter in `0..=max`, filtered by the
/// side conditions. `None` when a parameter is not a natural number.
pub fn nat_instances(ax: &AxiomSchema, max: u64) -> Option<Vec<Env>> {
    if ax.params.iter().any(|(_, k)| *k != ParamKind::Nat) {
        return None;
    }
    let mut envs: Vec<Env> = vec![BTreeMap::new()];
    for (p, _) in &ax.params {
        envs = envs
            .into_iter()
            .flat_map(|e| {
                (0..=max).map(move |v| {
                    let mut e = e.clone();
                    e.insert(p.clone(), Rat::from_integer(v as i64));
                    e
                })
            })
            .collect();
    }
    envs.retain(|e| ax.conds.iter().all(|c| c.holds(e).unwrap_or(false)));
    Some(envs)
}

fn show_env(env: &Env) -> String {
    env.iter().map(|(k, v)| format!("{}={}", k, v)).collect::<Vec<_>>().join(" ")
}

pub fn verify_axioms(th: &TheorySpec, m: &Model, max: u64) -> CResult<(Table, bool)> {
    let mut table = Table::new(&["axiom", "params", "distance", "bound", "ok"]);
    let mut all = true;
    for ax in &th.axioms {
        let Some(envs) = nat_instances(ax, max) else {
            table.push(vec![ax.name.clone(), String::new(), String::new(), String::new(), "skip: non-natural parameters".into()]);
            continue;
        };
        for env in envs {
            let eq = ax.instantiate(th, &env).map_err(|e| Failure::new(EXIT_TYPE, format!("{}: {}", ax.name, e)))?;
            match m.check_axiom(&th.signature, &eq) {
                Ok(c) => {
                    all &= c.ok;
                    table.push(vec![ax.name.clone(), show_env(&env), c.distance.to_string(), c.bound.to_string(), c.ok.to_string()]);
                }
                Err(e) => {
                    table.push(vec![ax.name.clone(), show_env(&env), String::new(), String::new(), format!("skip: {}", e)]);
                    break;
                }
            }
        }
    }
    Ok((table, all))
}

pub fn gaussian_grid(k: u64) -> CResult<(Table, bool)> {
    let mus = [-1, 0, 1].map(Rat::from_integer);
    let sigmas = [Rat::new(1, 2), Rat::from_integer(1), Rat::from_integer(2)];
    if k == 0 {
        return Err(Failure::new(EXIT_USAGE, "gaussian-grid needs k >= 1"));
    }
    let mut table = Table::new(&["mu1", "s1", "mu2", "s2", "tv", "phi", "ok"]);
    let mut all = true;
    let kr = Rat::from_integer(k as i64);
    let err = |e: gvlam_core::prob_model::ProbError| Failure::new(EXIT_USAGE, e.to_string());
    for mu1 in mus {
        for s1 in sigmas {
            for mu2 in mus {
                for s2 in sigmas {
                    let tv = gaussian_tv_numeric(mu1, s1, mu2, s2).map_err(err)?;
                    let phi = gaussian_phi(kr, mu1, s1, mu2, s2).map_err(err)?;
                    // One coordinate's distance is below that of the k-fold product.
                    let ok = tv <= phi.hi + GAUSSIAN_TOL;
                    all &= ok;
                    table.push(vec![
                        mu1.to_string(),
                        s1.to_string(),
                        mu2.to_string(),
                        s2.to_string(),
                        format!("{:.9}", tv),
                        format!("{:.9}", phi.value),
                        ok.to_string(),
                    ]);
                }
            }
        }
    }
    Ok((table, all))
}
