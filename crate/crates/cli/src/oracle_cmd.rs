use clap::Subcommand;
use gvlam_core::met_model::laws::{nonexpansive_tables, FinSpace};
use gvlam_core::oracles::{
    brute_gaussian_tv, brute_interleavings, brute_tv, compose, enumerate_nonexpansive, perm_group, OracleReport,
};
use gvlam_core::prob_model::{gaussian_tv_numeric, no_replace_sampler, replace_sampler, tv_distance, FinDist};
use gvlam_core::quantale::Ext;
use gvlam_core::syntax::enumerate_shuffles;
use gvlam_core::Rat;

use crate::report::{Format, Table};
use crate::{guard, CResult, Failure, EXIT_MODEL, EXIT_OK, EXIT_USAGE};

/// Agreement required between the two Gaussian quadratures.
pub const QUADRATURE_TOL: f64 = 1e-7;

#[derive(Subcommand, Debug)]
pub enum OracleCmd {
    /// Permutation group size and closure under composition.
    Perms {
        #[arg(long, default_value_t = 4)]
        n: usize,
    },
    /// Non-expansive maps between two distance matrices such as "0 1; 1 0".
    Nonexpansive {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
    },
    /// Interleavings of the given parts; each part is a word of characters.
    Interleavings { parts: Vec<String> },
    /// Total variation of the urn samplers, brute force against the primary code.
    Tv {
        #[arg(long, default_value_t = 6)]
        max: u64,
    },
    /// Gaussian total variation by two independent quadratures.
    Gaussian,
}

pub fn run(cmd: OracleCmd, format: Format, out: &mut String) -> CResult<i32> {
    let reports = match cmd {
        OracleCmd::Perms { n } => perms(n)?,
        OracleCmd::Nonexpansive { from, to } => nonexpansive(&from, &to)?,
        OracleCmd::Interleavings { parts } => interleavings(&parts)?,
        OracleCmd::Tv { max } => tv(max)?,
        OracleCmd::Gaussian => gaussian()?,
    };
    let mut table = Table::new(&["oracle", "inputs", "value", "target", "verdict"]);
    for r in &reports {
        let verdict = if r.verdict { "ok" } else { "MISMATCH" };
        table.push(vec![r.oracle.clone(), r.inputs.clone(), r.value.clone(), r.target.clone(), verdict.into()]);
    }
    out.push_str(&table.render(format));
    Ok(if reports.iter().all(|r| r.verdict) { EXIT_OK } else { EXIT_MODEL })
}

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::new(EXIT_USAGE, msg.to_string())
}

fn perms(n: usize) -> CResult<Vec<OracleReport>> {
    let g = perm_group(n).map_err(usage)?;
    let fact: usize = (1..=n).product();
    let closed = g.iter().all(|s| g.iter().all(|t| g.binary_search(&compose(s, t)).is_ok()));
    Ok(vec![
        OracleReport::new("perm_group", format!("n={}", n), g.len(), fact),
        OracleReport::new("perm_closure", format!("n={}", n), closed, true),
    ])
}

fn matrix(src: &str) -> CResult<Vec<Vec<i64>>> {
    src.split(';')
        .map(|row| row.split_whitespace().map(|c| c.parse().map_err(|_| usage(format!("bad distance `{}`", c)))).collect())
        .collect()
}

fn nonexpansive(from: &str, to: &str) -> CResult<Vec<OracleReport>> {
    let (a, b) = (matrix(from)?, matrix(to)?);
    let ext = |m: &[Vec<i64>]| m.iter().map(|r| r.iter().map(|&d| Ext::int(d)).collect()).collect::<Vec<Vec<Ext>>>();
    let brute = enumerate_nonexpansive(&ext(&a), &ext(&b), guard()?).map_err(usage)?;
    let space = |m: &[Vec<i64>]| {
        let rows: Vec<&[i64]> = m.iter().map(Vec::as_slice).collect();
        FinSpace::from_matrix(&rows).map_err(usage)
    };
    let mut primary = nonexpansive_tables(&space(&a)?, &space(&b)?);
    primary.sort();
    let show = |fs: &[Vec<usize>]| {
        fs.iter().map(|f| f.iter().map(|i| i.to_string()).collect::<String>()).collect::<Vec<_>>().join(" ")
    };
    let inputs = format!("{} -> {}", from.trim(), to.trim());
    Ok(vec![
        OracleReport::new("nonexpansive_count", &inputs, brute.len(), primary.len()),
        OracleReport::new("nonexpansive_maps", &inputs, show(&brute), show(&primary)),
    ])
}

fn interleavings(parts: &[String]) -> CResult<Vec<OracleReport>> {
    let parts: Vec<Vec<char>> = parts.iter().map(|p| p.chars().collect()).collect();
    if parts.iter().map(Vec::len).sum::<usize>() > 8 {
        return Err(usage("interleavings are limited to 8 elements in total"));
    }
    let brute = brute_interleavings(&parts);
    let mut primary = enumerate_shuffles(&parts);
    primary.sort();
    primary.dedup();
    let show = |xs: &[Vec<char>]| xs.iter().map(|w| w.iter().collect::<String>()).collect::<Vec<_>>().join(" ");
    let inputs = parts.iter().map(|p| p.iter().collect::<String>()).collect::<Vec<_>>().join("|");
    Ok(vec![OracleReport::new("interleavings", inputs, show(&brute), show(&primary))])
}

fn pairs(d: &FinDist) -> Vec<(Vec<Rat>, Rat)> {
    d.probs.iter().map(|(k, v)| (k.clone(), *v)).collect()
}

fn tv(max: u64) -> CResult<Vec<OracleReport>> {
    let mut out = Vec::new();
    for total in 1..=max {
        for m in 0..=total {
            for k in 1..=total {
                let p = replace_sampler(k, m, total - m).map_err(usage)?;
                let q = no_replace_sampler(k, m, total - m).map_err(usage)?;
                let primary = tv_distance(&p, &q).map_err(usage)?;
                let brute = brute_tv(&pairs(&p), &pairs(&q));
                out.push(OracleReport::new("tv", format!("k={} m={} n={}", k, m, total - m), brute, primary));
            }
        }
    }
    Ok(out)
}

fn gaussian() -> CResult<Vec<OracleReport>> {
    let mus = [-1, 0, 1].map(Rat::from_integer);
    let sigmas = [Rat::new(1, 2), Rat::from_integer(1), Rat::from_integer(2)];
    let f = |r: Rat| *r.numer() as f64 / *r.denom() as f64;
    let mut out = Vec::new();
    for mu2 in mus {
        for s1 in sigmas {
            for s2 in sigmas {
                let mu1 = Rat::from_integer(0);
                let primary = gaussian_tv_numeric(mu1, s1, mu2, s2).map_err(usage)?;
                let brute = brute_gaussian_tv(f(mu1), f(s1), f(mu2), f(s2));
                out.push(OracleReport {
                    oracle: "gaussian_tv".into(),
                    inputs: format!("mu1={} s1={} mu2={} s2={}", mu1, s1, mu2, s2),
                    value: format!("{:.9}", brute),
                    target: format!("{:.9}", primary),
                    verdict: (brute - primary).abs() <= QUADRATURE_TOL,
                });
            }
        }
    }
    Ok(out)
}
