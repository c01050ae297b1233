//! Proof scripts: s-expressions naming the proof rules.
//!
//! ```text
//! ; |- !2(fn x : X => wait_1(x)) =[2] !2(fn x : X => wait_2(x))
//! (cong-promote 2
//!   (cong-lambda
//!     (cong-subst (axiom wait (n 1) (m 2)) (refl "x : X" "x"))))
//! ```
//!
//! Top-level `(define NAME PROOF)` forms may precede the proof; later forms
//! refer to them by symbol.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use gvlam_core::bound::{eval_bound, Bound};
use gvlam_core::equational::{binding_kind, Binding, BindingKind, Dir, RewriteStep, SchemaId, Side};
use gvlam_core::syntax::{parse_context, parse_expr, parse_term, parse_type, Parser};
use gvlam_core::vequation::{ProofKind, ProofNode, TheorySpec};
use gvlam_core::{Grade, OpSym, Rat, Term};
use lexpr::Value;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("proof script: {0}")]
pub struct ScriptError(pub String);

type SResult<T> = Result<T, ScriptError>;

fn fail<T>(msg: impl Into<String>) -> SResult<T> {
    Err(ScriptError(msg.into()))
}

pub fn parse_script(theory: &TheorySpec, src: &str) -> SResult<ProofNode> {
    let mut parser = lexpr::Parser::from_str(src);
    let mut defs: BTreeMap<String, ProofNode> = BTreeMap::new();
    let mut last = None;
    loop {
        let v = match parser.next_value() {
            Ok(Some(v)) => v,
            Ok(None) => break,
            Err(e) => return fail(e.to_string()),
        };
        let items = list(&v)?;
        if items.first().and_then(Value::as_symbol) == Some("define") {
            if items.len() != 3 {
                return fail("`define` takes a name and a proof");
            }
            let name = sym(&items[1])?.to_string();
            let node = Reader { theory, defs: &defs }.node(&items[2])?;
            defs.insert(name, node);
            continue;
        }
        if last.is_some() {
            return fail("a script holds exactly one proof after its definitions");
        }
        last = Some(Reader { theory, defs: &defs }.node(&v)?);
    }
    match last {
        Some(n) => Ok(n),
        None => fail("script contains no proof"),
    }
}

fn list(v: &Value) -> SResult<Vec<Value>> {
    match v.to_vec() {
        Some(xs) => Ok(xs),
        None => fail(format!("expected a list, found `{}`", v)),
    }
}

fn sym(v: &Value) -> SResult<&str> {
    v.as_symbol().map_or_else(|| fail(format!("expected a symbol, found `{}`", v)), Ok)
}

fn text(v: &Value) -> SResult<String> {
    if let Some(s) = v.as_str() {
        return Ok(s.to_string());
    }
    if let Some(s) = v.as_symbol() {
        return Ok(s.to_string());
    }
    if let Some(n) = v.as_i64() {
        return Ok(n.to_string());
    }
    fail(format!("expected a string, symbol or integer, found `{}`", v))
}

fn nat(v: &Value) -> SResult<u64> {
    v.as_u64().map_or_else(|| fail(format!("expected a natural number, found `{}`", v)), Ok)
}

fn rat(v: &Value) -> SResult<Rat> {
    let s = text(v)?;
    let e = parse_expr(&s).map_err(|e| ScriptError(format!("bad number `{}`: {}", s, e)))?;
    e.eval(&BTreeMap::new()).map_err(|e| ScriptError(format!("bad number `{}`: {}", s, e)))
}

fn grade(v: &Value) -> SResult<Grade> {
    if v.as_symbol() == Some("inf") {
        return Ok(Grade::Inf);
    }
    nat(v).map(Grade::Nat)
}

fn term(v: &Value) -> SResult<Term> {
    let s = text(v)?;
    parse_term(&s).map_err(|e| ScriptError(format!("term `{}`: {}", s, e)))
}

/// Accepts `wait_1` or `wait[1]`.
fn op_sym(v: &Value) -> SResult<OpSym> {
    let s = text(v)?;
    let src = format!("{}(unit)", s);
    let t = Parser::new(&src).and_then(|mut p| p.term()).map_err(|e| ScriptError(format!("symbol `{}`: {}", s, e)))?;
    match t {
        Term::Op(sym, _) => Ok(sym),
        _ => fail(format!("`{}` is not an operation symbol", s)),
    }
}

struct Reader<'a> {
    theory: &'a TheorySpec,
    defs: &'a BTreeMap<String, ProofNode>,
}

impl Reader<'_> {
    fn nodes(&self, vs: &[Value]) -> SResult<Vec<ProofNode>> {
        vs.iter().map(|v| self.node(v)).collect()
    }

    fn node(&self, v: &Value) -> SResult<ProofNode> {
        if let Some(s) = v.as_symbol() {
            return self.defs.get(s).cloned().map_or_else(|| fail(format!("undefined proof `{}`", s)), Ok);
        }
        let items = list(v)?;
        let Some((head, args)) = items.split_first() else {
            return fail("empty form");
        };
        let head = sym(head)?;
        let simple = |kind: ProofKind, n: Option<usize>| -> SResult<ProofNode> {
            if let Some(n) = n {
                if args.len() != n {
                    return fail(format!("`{}` takes {} proof(s), got {}", head, n, args.len()));
                }
            }
            Ok(ProofNode::new(kind, self.nodes(args)?))
        };
        match head {
            "refl" => {
                if args.len() != 2 {
                    return fail("`refl` takes a context and a term");
                }
                let ctx = parse_context(&text(&args[0])?).map_err(|e| ScriptError(format!("context: {}", e)))?;
                Ok(ProofNode::leaf(ProofKind::Refl { ctx, term: term(&args[1])? }))
            }
            "trans" => simple(ProofKind::Trans, Some(2)),
            "join" => simple(ProofKind::Join, None),
            "sym" => simple(ProofKind::Sym, Some(1)),
            "weak" => {
                let [b, p] = args else { return fail("`weak` takes a bound and a proof") };
                let e = parse_expr(&text(b)?).map_err(|e| ScriptError(format!("bound: {}", e)))?;
                let to = eval_bound(&self.theory.quantale, &e, &BTreeMap::new())
                    .map_err(|e| ScriptError(format!("bound: {}", e)))?;
                Ok(ProofNode::new(ProofKind::Weak { to }, vec![self.node(p)?]))
            }
            "perm" => {
                let [c, p] = args else { return fail("`perm` takes a context and a proof") };
                let ctx = parse_context(&text(c)?).map_err(|e| ScriptError(format!("context: {}", e)))?;
                Ok(ProofNode::new(ProofKind::Perm { ctx }, vec![self.node(p)?]))
            }
            "axiom" => {
                let Some((name, rest)) = args.split_first() else { return fail("`axiom` needs a name") };
                let mut params = BTreeMap::new();
                let mut rename = Vec::new();
                for a in rest {
                    let kv = list(a)?;
                    match kv.as_slice() {
                        [k, xs @ ..] if k.as_symbol() == Some("rename") => {
                            rename = xs.iter().map(text).collect::<SResult<_>>()?;
                        }
                        [k, v] => {
                            params.insert(sym(k)?.to_string(), rat(v)?);
                        }
                        _ => return fail(format!("bad axiom argument `{}`", a)),
                    }
                }
                Ok(ProofNode::leaf(ProofKind::Axiom { name: text(name)?, params, rename }))
            }
            "step" => self.step(args),
            "cong-op" => {
                let Some((s, rest)) = args.split_first() else { return fail("`cong-op` needs a symbol") };
                Ok(ProofNode::new(ProofKind::CongOp(op_sym(s)?), self.nodes(rest)?))
            }
            "cong-unit-let" => simple(ProofKind::CongUnitLet, Some(2)),
            "cong-pair" => simple(ProofKind::CongPair, Some(2)),
            "cong-pair-let" => simple(ProofKind::CongPairLet, Some(2)),
            "cong-lambda" => simple(ProofKind::CongLambda, Some(1)),
            "cong-app" => simple(ProofKind::CongApp, Some(2)),
            "cong-derelict" => simple(ProofKind::CongDerelict, Some(1)),
            "cong-discard" => simple(ProofKind::CongDiscard, Some(2)),
            "cong-copy" => simple(ProofKind::CongCopy, Some(2)),
            "cong-promote" => {
                let Some((r, rest)) = args.split_first() else { return fail("`cong-promote` needs a grade") };
                Ok(ProofNode::new(ProofKind::CongPromote { r: grade(r)? }, self.nodes(rest)?))
            }
            "cong-subst" => {
                let (var, rest) = match args {
                    [v, rest @ ..] if list(v).ok().and_then(|l| l.first().and_then(|h| h.as_symbol().map(|s| s == "var"))) == Some(true) => {
                        let l = list(v)?;
                        if l.len() != 2 {
                            return fail("`(var NAME)` takes one name");
                        }
                        (Some(text(&l[1])?), rest)
                    }
                    _ => (None, args),
                };
                if rest.len() != 2 {
                    return fail("`cong-subst` takes two proofs");
                }
                Ok(ProofNode::new(ProofKind::CongSubst { var }, self.nodes(rest)?))
            }
            other => fail(format!("unknown rule `{}`", other)),
        }
    }

    /// `(step SCHEMA DIR SIDE PROOF [(at i ...)] [(from "term")] [(bind key value)]...)`
    fn step(&self, args: &[Value]) -> SResult<ProofNode> {
        let [schema, dir, side, proof, opts @ ..] = args else {
            return fail("`step` takes a schema, a direction, a side and a proof");
        };
        let schema: SchemaId = sym(schema)?.parse().map_err(ScriptError)?;
        let dir: Dir = sym(dir)?.parse().map_err(ScriptError)?;
        let side = match sym(side)? {
            "lhs" => Side::Lhs,
            "rhs" => Side::Rhs,
            s => return fail(format!("side must be lhs or rhs, not `{}`", s)),
        };
        let mut step = RewriteStep::new(schema, dir, vec![]);
        let mut from = None;
        for o in opts {
            let l = list(o)?;
            let Some((k, vs)) = l.split_first() else { return fail("empty step option") };
            match sym(k)? {
                "at" => step.position = vs.iter().map(|v| nat(v).map(|n| n as usize)).collect::<SResult<_>>()?,
                "from" => {
                    let [t] = vs else { return fail("`from` takes one term") };
                    from = Some(term(t)?);
                }
                "bind" => {
                    let Some((key, val)) = vs.split_first() else { return fail("`bind` needs a key") };
                    let key = text(key)?;
                    let b = binding(&key, val)?;
                    step = step.with(&key, b);
                }
                other => return fail(format!("unknown step option `{}`", other)),
            }
        }
        Ok(ProofNode::new(ProofKind::Step { step, side, from }, vec![self.node(proof)?]))
    }
}

fn binding(key: &str, vals: &[Value]) -> SResult<Binding> {
    let kind = binding_kind(key).map_or_else(|| fail(format!("unknown binding `{}`", key)), Ok)?;
    let one = || match vals {
        [v] => Ok(v),
        _ => fail(format!("binding `{}` takes one value", key)),
    };
    Ok(match kind {
        BindingKind::Term => Binding::Term(term(one()?)?),
        BindingKind::Var => Binding::Var(text(one()?)?),
        BindingKind::Vars => Binding::Vars(vals.iter().map(text).collect::<SResult<_>>()?),
        BindingKind::Grade => Binding::Grade(grade(one()?)?),
        BindingKind::Grades => Binding::Grades(vals.iter().map(grade).collect::<SResult<_>>()?),
        BindingKind::Nat => Binding::Nat(nat(one()?)? as usize),
        BindingKind::Path => Binding::Path(vals.iter().map(|v| nat(v).map(|n| n as usize)).collect::<SResult<_>>()?),
        BindingKind::Type => {
            let s = text(one()?)?;
            Binding::Type(parse_type(&s).map_err(|e| ScriptError(format!("type `{}`: {}", s, e)))?)
        }
    })
}

fn quote(s: &str) -> String {
    Value::string(s).to_string()
}

fn rat_atom(r: &Rat) -> String {
    if r.is_integer() {
        r.to_string()
    } else {
        quote(&r.to_string())
    }
}

fn bound_atom(b: &Bound) -> String {
    quote(&b.to_string())
}

fn binding_atoms(b: &Binding) -> String {
    let grade = |g: &Grade| g.to_string();
    match b {
        Binding::Term(t) => quote(&t.to_string()),
        Binding::Var(x) => quote(x),
        Binding::Vars(xs) => xs.iter().map(|x| quote(x)).collect::<Vec<_>>().join(" "),
        Binding::Grade(g) => grade(g),
        Binding::Grades(gs) => gs.iter().map(grade).collect::<Vec<_>>().join(" "),
        Binding::Nat(n) => n.to_string(),
        Binding::Path(p) => p.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" "),
        Binding::Type(t) => quote(&t.to_string()),
    }
}

/// Renders a proof as a script that [`parse_script`] reads back.
pub fn emit_script(node: &ProofNode) -> String {
    let mut out = String::new();
    emit(node, 0, &mut out);
    out.push('\n');
    out
}

fn emit(node: &ProofNode, indent: usize, out: &mut String) {
    let head = node.kind.head();
    let mut parts: Vec<String> = vec![head.to_string()];
    match &node.kind {
        ProofKind::Refl { ctx, term } => {
            parts.push(quote(&ctx.to_string()));
            parts.push(quote(&term.to_string()));
        }
        ProofKind::Weak { to } => parts.push(bound_atom(to)),
        ProofKind::Perm { ctx } => parts.push(quote(&ctx.to_string())),
        ProofKind::Axiom { name, params, rename } => {
            parts.push(name.clone());
            for (k, v) in params {
                parts.push(format!("({} {})", k, rat_atom(v)));
            }
            if !rename.is_empty() {
                let xs: Vec<String> = rename.iter().map(|x| quote(x)).collect();
                parts.push(format!("(rename {})", xs.join(" ")));
            }
        }
        ProofKind::Step { step, side, .. } => {
            parts.push(step.schema.to_string());
            parts.push(step.dir.to_string());
            parts.push(match side {
                Side::Lhs => "lhs".into(),
                Side::Rhs => "rhs".into(),
            });
        }
        ProofKind::CongOp(sym) => parts.push(quote(&sym.to_string())),
        ProofKind::CongPromote { r } => parts.push(r.to_string()),
        ProofKind::CongSubst { var: Some(x) } => parts.push(format!("(var {})", quote(x))),
        _ => {}
    }
    let pad = " ".repeat(indent);
    let _ = write!(out, "{}({}", pad, parts.join(" "));
    for c in &node.children {
        out.push('\n');
        emit(c, indent + 2, out);
    }
    if let ProofKind::Step { step, from, .. } = &node.kind {
        if !step.position.is_empty() {
            let p: Vec<String> = step.position.iter().map(|i| i.to_string()).collect();
            let _ = write!(out, "\n{}  (at {})", pad, p.join(" "));
        }
        if let Some(t) = from {
            let _ = write!(out, "\n{}  (from {})", pad, quote(&t.to_string()));
        }
        for (k, b) in &step.bindings.0 {
            let _ = write!(out, "\n{}  (bind {} {})", pad, k, binding_atoms(b));
        }
    }
    out.push(')');
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::parse_theory;
    use gvlam_core::vequation::validate;

    fn timed() -> TheorySpec {
        parse_theory("quantale metric\nbuiltin timed\n").unwrap()
    }

    #[test]
    fn promotion_script() {
        let th = timed();
        let src = "; dilation\n(cong-promote 2 (cong-lambda (cong-subst (axiom wait (n 1) (m 2)) (refl \"x : X\" \"x\"))))";
        let p = parse_script(&th, src).unwrap();
        let eq = validate(&th, &p).unwrap();
        assert_eq!(eq.to_string(), "|- !2(fn x : X => wait_1(x)) =[2] !2(fn x : X => wait_2(x)) : !2 (X -o X)");
    }

    #[test]
    fn defines_and_emission_round_trip() {
        let th = timed();
        let src = "(define w (axiom wait (n 1) (m 3)))\n(trans w (sym w))";
        let p = parse_script(&th, src).unwrap();
        let again = parse_script(&th, &emit_script(&p)).unwrap();
        assert_eq!(p, again);
        assert_eq!(validate(&th, &p).unwrap().bound.to_string(), "4");
    }

    #[test]
    fn steps_with_options() {
        let th = timed();
        let src = "(step lam-beta r2l lhs (refl \"y : X\" \"wait_1(y)\") (bind u \"wait_1(x)\") (bind x x))";
        let p = parse_script(&th, src).unwrap();
        assert_eq!(parse_script(&th, &emit_script(&p)).unwrap(), p);
        let eq = validate(&th, &p).unwrap();
        assert_eq!(eq.lhs.to_string(), "(fn x : X => wait_1(x)) y");
    }

    #[test]
    fn malformed_scripts() {
        let th = timed();
        assert!(parse_script(&th, "(frob)").is_err());
        assert!(parse_script(&th, "(trans (refl \"\" \"unit\"))").is_err());
        assert!(parse_script(&th, "").is_err());
        assert!(parse_script(&th, "(refl \"\" \"unit\") (refl \"\" \"unit\")").is_err());
    }
}
