//! Line-oriented theory files.
//!
//! ```text
//! quantale metric
//! semiring nat
//! symmetric yes
//! ground X
//! op wait[n:nat] : X -> X
//! axiom wait[n:nat, m:nat] : [x : X] wait[n](x) =[abs(n-m)] wait[m](x)
//! builtin diaconis
//! ```

use std::collections::BTreeMap;

use gvlam_core::syntax::{
    parse_cond, parse_sort, split_symbol, Env, GradeRef, IndexPat, OpDecl, ParamKind, Parser, SortType, Tok,
};
use gvlam_core::vequation::{AxiomSchema, ProofErrorKind, TheorySpec};
use gvlam_core::{Quantale, QuantaleKind, Rat, Semiring, Signature};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TheoryError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("axiom `{name}` does not typecheck: {err}")]
    IllTyped { name: String, err: ProofErrorKind },
}

fn err(line: usize, msg: impl Into<String>) -> TheoryError {
    TheoryError::Syntax { line, msg: msg.into() }
}

const BUILTINS: &[(&str, &str)] = &[
    (
        "timed",
        "ground X
op wait[n:nat] : X -> X
axiom wait-zero : [x : X] wait[0](x) =[0] x
axiom wait-add[n:nat, m:nat] : [x : X] wait[n](wait[m](x)) =[0] wait[n+m](x)
axiom wait[n:nat, m:nat] : [x : X] wait[n](x) =[abs(n-m)] wait[m](x)",
    ),
    (
        "arith",
        "ground real
op add : real, real -> real
op mul : real, real -> real
op const[c:rat] : I -> real",
    ),
    (
        "diaconis",
        "ground real
op replace[k:nat, m:nat, n:nat] : I -> !k real
op no_replace[k:nat, m:nat, n:nat] : I -> !k real
axiom diaconis[k:nat, m:nat, n:nat] if k >= 1, k <= m + n : [] replace[k,m,n](unit) =[4*k/(m+n)] no_replace[k,m,n](unit)",
    ),
    (
        "gaussians",
        "ground real
op iid_normal[k:nat, mu:rat, s:pos] : I -> !k real
axiom gaussians[k:nat, mu1:rat, s1:pos, mu2:rat, s2:pos] : [] iid_normal[k,mu1,s1](unit) =[phi(k,mu1,s1,mu2,s2)] iid_normal[k,mu2,s2](unit)",
    ),
    (
        "mags",
        "ground real
op mag[k:nat, p:rat] : I -> !k real
axiom mags[k:nat, p:rat, q:rat] if p >= 0, p <= 1, q >= 0, q <= 1 : [] mag[k,p](unit) =[k*abs(p-q)] mag[k,q](unit)",
    ),
];

pub fn builtin_names() -> Vec<&'static str> {
    BUILTINS.iter().map(|(n, _)| *n).collect()
}

struct Loader {
    quantale: Option<Quantale>,
    semiring: Semiring,
    symmetric: Option<bool>,
    sig: Signature,
    axioms: Vec<AxiomSchema>,
}

pub fn parse_theory(src: &str) -> Result<TheorySpec, TheoryError> {
    let mut ld = Loader {
        quantale: None,
        semiring: Semiring::NAT,
        symmetric: None,
        sig: Signature::new(Semiring::NAT),
        axioms: vec![],
    };
    ld.lines(src, 0)?;
    let quantale = ld.quantale.unwrap_or(Quantale::METRIC);
    let symmetric = ld.symmetric.unwrap_or(quantale.kind != QuantaleKind::Boolean);
    let mut sig = ld.sig;
    sig.semiring = ld.semiring;
    let theory = TheorySpec { quantale, signature: sig, symmetric, axioms: ld.axioms };
    for ax in &theory.axioms {
        if let Some(env) = sample_instance(ax) {
            ax.instantiate(&theory, &env)
                .map_err(|e| TheoryError::IllTyped { name: ax.name.clone(), err: e })?;
        }
    }
    Ok(theory)
}

/// Some parameter assignment satisfying the axiom's conditions, searched
/// over small values.
pub fn sample_instance(ax: &AxiomSchema) -> Option<Env> {
    let candidates = |k: ParamKind| -> Vec<Rat> {
        let ints = (0..=4).map(Rat::from_integer);
        match k {
            ParamKind::Nat => ints.collect(),
            ParamKind::Pos => ints.skip(1).chain([Rat::new(1, 2)]).collect(),
            ParamKind::Rat => ints.chain([Rat::new(1, 2)]).collect(),
        }
    };
    let mut envs: Vec<Env> = vec![BTreeMap::new()];
    for (p, k) in &ax.params {
        envs = envs
            .into_iter()
            .flat_map(|e| {
                candidates(*k).into_iter().map(move |v| {
                    let mut e = e.clone();
                    e.insert(p.clone(), v);
                    e
                })
            })
            .take(100_000)
            .collect();
    }
    envs.into_iter().find(|e| ax.conds.iter().all(|c| c.holds(e).unwrap_or(false)))
}

impl Loader {
    fn lines(&mut self, src: &str, offset: usize) -> Result<(), TheoryError> {
        for (i, raw) in src.lines().enumerate() {
            let line = if offset > 0 { offset } else { i + 1 };
            let text = raw.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            let (head, rest) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
            let rest = rest.trim();
            match head {
                "quantale" => {
                    let q = match rest {
                        "metric" => Quantale::METRIC,
                        "boolean" => Quantale::BOOLEAN,
                        "ultrametric" => Quantale::ULTRAMETRIC,
                        _ => return Err(err(line, format!("unknown quantale `{}`", rest))),
                    };
                    self.quantale = Some(q);
                }
                "semiring" => {
                    self.semiring = match rest {
                        "nat" => Semiring::NAT,
                        "trivial" => Semiring::TRIVIAL,
                        _ => return Err(err(line, format!("unknown semiring `{}`", rest))),
                    };
                }
                "symmetric" => {
                    self.symmetric = Some(match rest {
                        "yes" | "true" => true,
                        "no" | "false" => false,
                        _ => return Err(err(line, "expected `symmetric yes` or `symmetric no`")),
                    });
                }
                "ground" => {
                    for g in rest.split(',').map(str::trim) {
                        if g.is_empty() || !g.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                            return Err(err(line, format!("bad ground type name `{}`", g)));
                        }
                        self.sig.add_ground(g);
                    }
                }
                "op" => self.op(line, rest)?,
                "axiom" => self.axiom(line, rest)?,
                "builtin" => {
                    let body = BUILTINS
                        .iter()
                        .find(|(n, _)| *n == rest)
                        .map(|(_, b)| *b)
                        .ok_or_else(|| err(line, format!("unknown builtin `{}`", rest)))?;
                    self.lines(body, line)?;
                }
                _ => return Err(err(line, format!("unknown directive `{}`", head))),
            }
        }
        Ok(())
    }

    fn params(p: &mut Parser, line: usize) -> Result<Vec<(String, ParamKind)>, TheoryError> {
        let mut out: Vec<(String, ParamKind)> = Vec::new();
        if !p.eat(&Tok::LBrack) {
            return Ok(out);
        }
        loop {
            let name = p.ident().map_err(|e| err(line, e.to_string()))?;
            p.expect(&Tok::Colon).map_err(|e| err(line, e.to_string()))?;
            let kind = p.ident().map_err(|e| err(line, e.to_string()))?;
            let kind = ParamKind::parse(&kind).ok_or_else(|| err(line, format!("unknown parameter kind `{}`", kind)))?;
            if out.iter().any(|(n, _)| *n == name) {
                return Err(err(line, format!("parameter `{}` declared twice", name)));
            }
            out.push((name, kind));
            if !p.eat(&Tok::Comma) {
                break;
            }
        }
        p.expect(&Tok::RBrack).map_err(|e| err(line, e.to_string()))?;
        Ok(out)
    }

    fn op(&mut self, line: usize, rest: &str) -> Result<(), TheoryError> {
        let pe = |e: gvlam_core::syntax::ParseError| err(line, e.to_string());
        let (head, sort) = split_top(rest, ':').ok_or_else(|| err(line, "expected `op NAME : A, B -> C`"))?;
        let mut p = Parser::new(head).map_err(pe)?;
        let raw = p.ident().map_err(pe)?;
        let decl = if *p.peek() == Tok::LBrack {
            let params = Self::params(&mut p, line)?;
            p.expect_eof().map_err(pe)?;
            let (args, result) = parse_sort(sort, &params).map_err(pe)?;
            for s in args.iter().chain([&result]) {
                check_grade_params(s, &params).map_err(|m| err(line, m))?;
            }
            let pattern = params.into_iter().map(|(n, k)| IndexPat::Param(n, k)).collect();
            OpDecl { name: raw, pattern, args, result }
        } else {
            p.expect_eof().map_err(pe)?;
            let sym = split_symbol(&raw, &[]);
            let lits = sym.literal_index().ok_or_else(|| err(line, "symbolic index in a plain declaration"))?;
            let (args, result) = parse_sort(sort, &[]).map_err(pe)?;
            OpDecl { name: sym.name, pattern: lits.into_iter().map(IndexPat::Fixed).collect(), args, result }
        };
        self.sig.add_op(decl).map_err(|e| err(line, e.to_string()))
    }

    fn axiom(&mut self, line: usize, rest: &str) -> Result<(), TheoryError> {
        let pe = |e: gvlam_core::syntax::ParseError| err(line, e.to_string());
        let (head, body) = split_top(rest, ':').ok_or_else(|| err(line, "expected `axiom NAME : [ctx] lhs =[bound] rhs`"))?;
        let (head, conds) = match head.find(" if ") {
            Some(i) => (&head[..i], Some(&head[i + 4..])),
            None => (head, None),
        };
        let mut p = Parser::new(head).map_err(pe)?;
        let name = axiom_name(&mut p).map_err(|m| err(line, m))?;
        let params = Self::params(&mut p, line)?;
        p.expect_eof().map_err(pe)?;
        if self.axioms.iter().any(|a| a.name == name) {
            return Err(err(line, format!("axiom `{}` declared twice", name)));
        }
        let conds = match conds {
            Some(cs) => split_commas(cs).into_iter().map(|c| parse_cond(c).map_err(pe)).collect::<Result<_, _>>()?,
            None => vec![],
        };
        let names: Vec<String> = params.iter().map(|(n, _)| n.clone()).collect();
        let mut p = Parser::new(body).map_err(pe)?.with_params(&names);
        p.expect(&Tok::LBrack).map_err(pe)?;
        let mut ctx = Vec::new();
        if *p.peek() != Tok::RBrack {
            loop {
                let x = p.ident().map_err(pe)?;
                p.expect(&Tok::Colon).map_err(pe)?;
                let s = p.sort_type().map_err(pe)?;
                check_grade_params(&s, &params).map_err(|m| err(line, m))?;
                ctx.push((x, s));
                if !p.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        p.expect(&Tok::RBrack).map_err(pe)?;
        let lhs = p.term().map_err(pe)?;
        p.expect(&Tok::Eq).map_err(pe)?;
        p.expect(&Tok::LBrack).map_err(pe)?;
        let bound = p.expr().map_err(pe)?;
        p.expect(&Tok::RBrack).map_err(pe)?;
        let rhs = p.term().map_err(pe)?;
        p.expect_eof().map_err(pe)?;
        self.axioms.push(AxiomSchema { name, params, conds, ctx, lhs, rhs, bound });
        Ok(())
    }
}

/// Axiom names may contain dashes: `wait-add`.
fn axiom_name(p: &mut Parser) -> Result<String, String> {
    let mut name = p.ident().map_err(|e| e.to_string())?;
    while p.eat(&Tok::Minus) {
        name.push('-');
        name.push_str(&p.ident().map_err(|e| e.to_string())?);
    }
    Ok(name)
}

fn check_grade_params(s: &SortType, params: &[(String, ParamKind)]) -> Result<(), String> {
    match s {
        SortType::Ground(_) | SortType::Unit => Ok(()),
        SortType::Tensor(a, b) | SortType::Lolli(a, b) => {
            check_grade_params(a, params)?;
            check_grade_params(b, params)
        }
        SortType::Bang(GradeRef::Param(n), a) => {
            match params.iter().find(|(p, _)| p == n) {
                Some((_, ParamKind::Nat)) => {}
                Some(_) => return Err(format!("grade parameter `{}` must be declared `nat`", n)),
                None => return Err(format!("unknown grade parameter `{}`", n)),
            }
            check_grade_params(a, params)
        }
        SortType::Bang(GradeRef::Lit(_), a) => check_grade_params(a, params),
    }
}

/// Splits at the first `sep` outside brackets.
fn split_top(s: &str, sep: char) -> Option<(&str, &str)> {
    let mut depth = 0i32;
    for (i, c) in s.char_indices() {
        match c {
            '[' | '(' => depth += 1,
            ']' | ')' => depth -= 1,
            c if c == sep && depth == 0 => return Some((s[..i].trim(), s[i + 1..].trim())),
            _ => {}
        }
    }
    None
}

fn split_commas(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = s;
    while let Some((a, b)) = split_top(rest, ',') {
        out.push(a);
        rest = b;
    }
    out.push(rest.trim());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_load() {
        let th = parse_theory("quantale metric\nbuiltin timed\nbuiltin arith\nbuiltin diaconis\nbuiltin gaussians\nbuiltin mags\n")
            .unwrap();
        assert_eq!(th.axioms.len(), 6);
        assert!(th.symmetric);
        assert_eq!(th.axiom("diaconis").unwrap().conds.len(), 2);
    }

    #[test]
    fn explicit_declarations() {
        let src = "quantale metric\nsymmetric no\nground X\nop wait_1 : X -> X\nop f[r:nat] : !r X -> X\n\
                   axiom w1 : [x : X] wait_1(x) =[1] x\n";
        let th = parse_theory(src).unwrap();
        assert!(!th.symmetric);
        assert_eq!(th.signature.ops.len(), 2);
    }

    #[test]
    fn errors_carry_lines() {
        let e = parse_theory("ground X\nop : X -> X\n").unwrap_err();
        assert!(matches!(e, TheoryError::Syntax { line: 2, .. }));
        let e = parse_theory("ground X\nop f : X -> X\naxiom bad : [x : X] f(x) =[0] unit\n").unwrap_err();
        assert!(matches!(e, TheoryError::IllTyped { .. }));
        assert!(parse_theory("frobnicate\n").is_err());
    }
}
