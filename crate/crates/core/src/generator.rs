//! Seeded random terms over the timed signature: well-typed derivations,
//! redex instances for each rewrite schema, and provable V-equations.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::equational::SchemaId;
use crate::quantale::{Grade, Quantale, Semiring};
use crate::syntax::{
    parse_expr, parse_term_with_params, Context, IndexPat, Name, OpDecl, OpSym, ParamKind, Signature, SortType, Term,
    TypeExpr,
};
use crate::typecheck::{infer, Derivation, TypeError};
use crate::vequation::{AxiomSchema, TheorySpec};

/// `X`, `wait[n] : X -> X`, and the helpers `tick : I -> X`,
/// `drop : X -> I`, `later : X, X -> X`.
pub fn timed_signature() -> Signature {
    let x = || SortType::Ground("X".into());
    let mut sig = Signature::new(Semiring::NAT);
    sig.add_ground("X");
    sig.add_op(OpDecl {
        name: "wait".into(),
        pattern: vec![IndexPat::Param("n".into(), ParamKind::Nat)],
        args: vec![x()],
        result: x(),
    })
    .expect("wait is well formed");
    let gx = TypeExpr::ground("X");
    sig.add_simple_op(&OpSym::nat("tick", &[]), &[TypeExpr::Unit], &gx).expect("tick");
    sig.add_simple_op(&OpSym::nat("drop", &[]), &[gx.clone()], &TypeExpr::Unit).expect("drop");
    sig.add_simple_op(&OpSym::nat("later", &[]), &[gx.clone(), gx.clone()], &gx).expect("later");
    sig
}

/// The timed signature with its three latency axiom schemata.
pub fn timed_theory() -> TheorySpec {
    let params = vec!["n".to_string(), "m".to_string()];
    let ax = |name: &str, ps: &[&str], l: &str, r: &str, b: &str| AxiomSchema {
        name: name.into(),
        params: ps.iter().map(|p| (p.to_string(), ParamKind::Nat)).collect(),
        conds: vec![],
        ctx: vec![("x".into(), SortType::Ground("X".into()))],
        lhs: parse_term_with_params(l, &params).expect("axiom side parses"),
        rhs: parse_term_with_params(r, &params).expect("axiom side parses"),
        bound: parse_expr(b).expect("bound parses"),
    };
    TheorySpec {
        quantale: Quantale::METRIC,
        signature: timed_signature(),
        symmetric: true,
        axioms: vec![
            ax("wait-zero", &[], "wait[0](x)", "x", "0"),
            ax("wait-add", &["n", "m"], "wait[n](wait[m](x))", "wait[n+m](x)", "0"),
            ax("wait", &["n", "m"], "wait[n](x)", "wait[m](x)", "abs(n-m)"),
        ],
    }
}

fn x_ty() -> TypeExpr {
    TypeExpr::ground("X")
}

fn g(n: u64) -> Grade {
    Grade::Nat(n)
}

pub fn wait(k: u64, t: Term) -> Term {
    Term::op(OpSym::nat("wait", &[k]), vec![t])
}

pub fn tick() -> Term {
    Term::op(OpSym::nat("tick", &[]), vec![Term::Star])
}

pub fn later(a: Term, b: Term) -> Term {
    Term::op(OpSym::nat("later", &[]), vec![a, b])
}

pub fn drop_x(a: Term) -> Term {
    Term::op(OpSym::nat("drop", &[]), vec![a])
}

/// Eliminations that wrap a body, outermost first.
enum Wrap {
    Discard(Term),
    Copy(u64, u64, Term, Name, Name),
    UnitLet(Term),
    PairLet(Term, Name, Name),
}

fn wrap(body: Term, wraps: Vec<Wrap>) -> Term {
    wraps.into_iter().rev().fold(body, |acc, w| match w {
        Wrap::Discard(v) => Term::discard(v, acc),
        Wrap::Copy(n, m, v, x, y) => Term::copy(g(n), g(m), v, &x, &y, acc),
        Wrap::UnitLet(v) => Term::unit_let(v, acc),
        Wrap::PairLet(v, x, y) => Term::pair_let(v, &x, &y, acc),
    })
}

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub max_wait: u64,
    pub max_grade: u64,
    pub type_depth: usize,
    /// Restricts function domains and context types to first-order types,
    /// keeping model carriers small.
    pub first_order: bool,
    /// Chance in percent of inserting a redex around an `X` subterm.
    pub redex_pct: u32,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { max_wait: 3, max_grade: 3, type_depth: 2, first_order: false, redex_pct: 15 }
    }
}

pub struct TermGen {
    rng: ChaCha8Rng,
    next: usize,
    pub cfg: GenConfig,
}

impl TermGen {
    pub fn new(seed: u64) -> TermGen {
        TermGen::with_config(seed, GenConfig::default())
    }

    pub fn with_config(seed: u64, cfg: GenConfig) -> TermGen {
        TermGen { rng: ChaCha8Rng::seed_from_u64(seed), next: 0, cfg }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn fresh(&mut self, base: &str) -> Name {
        self.next += 1;
        format!("{}{}", base, self.next)
    }

    fn pct(&mut self, p: u32) -> bool {
        self.rng.gen_range(0..100) < p
    }

    fn var(&mut self, ctx: &mut Vec<(Name, TypeExpr)>, base: &str, ty: TypeExpr) -> Term {
        let x = self.fresh(base);
        ctx.push((x.clone(), ty));
        Term::var(&x)
    }

    fn xvars(&mut self, ctx: &mut Vec<(Name, TypeExpr)>, lo: usize, hi: usize) -> Vec<Term> {
        let n = self.rng.gen_range(lo..=hi);
        (0..n).map(|_| self.var(ctx, "x", x_ty())).collect()
    }

    fn small_wait(&mut self) -> u64 {
        self.rng.gen_range(0..=self.cfg.max_wait)
    }

    /// An `X`-term using every resource exactly once.
    pub fn combine(&mut self, mut res: Vec<Term>) -> Term {
        res.shuffle(&mut self.rng);
        let t = match res.len() {
            0 => {
                let k = self.small_wait();
                wait(k, tick())
            }
            1 => {
                let t = res.pop().expect("one resource");
                if self.pct(50) {
                    let k = self.small_wait();
                    wait(k, t)
                } else {
                    t
                }
            }
            n => {
                let cut = self.rng.gen_range(1..n);
                let right = res.split_off(cut);
                let (a, b) = (self.combine(res), self.combine(right));
                later(a, b)
            }
        };
        self.maybe_redex(t)
    }

    fn maybe_redex(&mut self, t: Term) -> Term {
        if !self.pct(self.cfg.redex_pct) {
            return t;
        }
        match self.rng.gen_range(0..3) {
            0 => {
                let x = self.fresh("r");
                let k = self.small_wait();
                Term::app(Term::lam(&x, x_ty(), wait(k, Term::var(&x))), t)
            }
            1 => {
                let (p, q) = (self.fresh("p"), self.fresh("q"));
                let k = self.small_wait();
                Term::pair_let(Term::pair(t, wait(k, tick())), &p, &q, later(Term::var(&p), Term::var(&q)))
            }
            _ => Term::unit_let(Term::Star, t),
        }
    }

    /// Opens `v : !s A` into `s` uses of type `A`, via copies and discards.
    fn open_bang(&mut self, v: Term, s: u64, wraps: &mut Vec<Wrap>) -> Vec<Term> {
        match s {
            0 => {
                wraps.push(Wrap::Discard(v));
                vec![]
            }
            1 => vec![Term::derelict(v)],
            _ => {
                let (p, q) = (self.fresh("c"), self.fresh("c"));
                let left = self.rng.gen_range(1..s);
                wraps.push(Wrap::Copy(left, s - left, v, p.clone(), q.clone()));
                let mut out = self.open_bang(Term::var(&p), left, wraps);
                out.extend(self.open_bang(Term::var(&q), s - left, wraps));
                out
            }
        }
    }

    /// A body consuming `!s_i X` binders and plain `X` resources.
    fn bang_body(&mut self, bangs: &[(Term, u64)], mut xs: Vec<Term>) -> Term {
        let mut wraps = Vec::new();
        for (v, s) in bangs {
            xs.extend(self.open_bang(v.clone(), *s, &mut wraps));
        }
        let body = self.combine(xs);
        wrap(body, wraps)
    }

    pub fn gen_type(&mut self, depth: usize) -> TypeExpr {
        if depth == 0 {
            return if self.pct(85) { x_ty() } else { TypeExpr::Unit };
        }
        match self.rng.gen_range(0..10) {
            0..=3 => x_ty(),
            4 => TypeExpr::Unit,
            5 | 6 => TypeExpr::tensor(self.gen_type(depth - 1), self.gen_type(depth - 1)),
            7 => {
                let dom = if self.cfg.first_order { self.first_order_type() } else { self.gen_type(depth - 1) };
                TypeExpr::lolli(dom, self.gen_type(depth - 1))
            }
            _ => {
                let r = self.rng.gen_range(0..=self.cfg.max_grade);
                TypeExpr::nbang(r, self.gen_type(depth - 1))
            }
        }
    }

    fn first_order_type(&mut self) -> TypeExpr {
        match self.rng.gen_range(0..6) {
            0..=2 => x_ty(),
            3 => TypeExpr::Unit,
            4 => TypeExpr::tensor(x_ty(), x_ty()),
            _ => TypeExpr::nbang(self.rng.gen_range(0..=2), x_ty()),
        }
    }

    pub fn gen_context(&mut self, max_vars: usize) -> Context {
        let n = self.rng.gen_range(0..=max_vars);
        let mut vars = Vec::new();
        for _ in 0..n {
            let ty = if self.cfg.first_order { self.first_order_type() } else { self.gen_type(self.cfg.type_depth) };
            let x = self.fresh("v");
            vars.push((x, ty));
        }
        Context::from_vec(vars)
    }

    /// A term of type `ty` using each resource exactly once.
    pub fn gen_term(&mut self, ty: &TypeExpr, res: Vec<(Term, TypeExpr)>, depth: usize) -> Term {
        if let TypeExpr::Bang(Grade::Nat(r), inner) = ty {
            if *r >= 1 && self.pct(50) {
                return self.gen_promote(*r, inner, res, depth);
            }
        }
        let mut wraps = Vec::new();
        let xs = self.flatten(res, &mut wraps, depth);
        let body = self.build(ty, xs, &mut wraps, depth);
        wrap(body, wraps)
    }

    fn gen_promote(&mut self, r: u64, inner: &TypeExpr, res: Vec<(Term, TypeExpr)>, depth: usize) -> Term {
        let mut args = Vec::new();
        let mut rest = Vec::new();
        for (t, ty) in res {
            match &ty {
                TypeExpr::Bang(Grade::Nat(k), a) if k % r == 0 && self.pct(70) => args.push((t, k / r, (**a).clone())),
                _ => rest.push((t, ty)),
            }
        }
        let mut wraps = Vec::new();
        let xs = self.flatten(rest, &mut wraps, depth);
        if !xs.is_empty() {
            let sink = self.combine(xs);
            wraps.push(Wrap::UnitLet(drop_x(sink)));
        }
        let binders: Vec<Name> = args.iter().map(|_| self.fresh("b")).collect();
        let inner_res = binders
            .iter()
            .zip(&args)
            .map(|(b, (_, s, a))| (Term::var(b), TypeExpr::nbang(*s, a.clone())))
            .collect();
        let body = self.gen_term(inner, inner_res, depth.saturating_sub(1));
        let t = Term::promote(
            g(r),
            args.iter().map(|(_, s, _)| g(*s)).collect(),
            args.into_iter().map(|(t, _, _)| t).collect(),
            binders,
            body,
        );
        wrap(t, wraps)
    }

    /// Eliminates resources down to `X`-typed terms.
    fn flatten(&mut self, mut res: Vec<(Term, TypeExpr)>, wraps: &mut Vec<Wrap>, depth: usize) -> Vec<Term> {
        let mut xs = Vec::new();
        while let Some((t, ty)) = res.pop() {
            match ty {
                TypeExpr::Ground(_) => xs.push(t),
                TypeExpr::Unit => wraps.push(Wrap::UnitLet(t)),
                TypeExpr::Tensor(a, b) => {
                    let (p, q) = (self.fresh("a"), self.fresh("a"));
                    wraps.push(Wrap::PairLet(t, p.clone(), q.clone()));
                    res.push((Term::var(&p), *a));
                    res.push((Term::var(&q), *b));
                }
                TypeExpr::Lolli(a, b) => {
                    let arg = self.gen_term(&a, vec![], depth.saturating_sub(1));
                    res.push((Term::app(t, arg), *b));
                }
                TypeExpr::Bang(Grade::Inf, _) => unreachable!("the generator only uses natural grades"),
                TypeExpr::Bang(Grade::Nat(s), a) => match s {
                    0 => wraps.push(Wrap::Discard(t)),
                    1 => res.push((Term::derelict(t), *a)),
                    _ => {
                        let (p, q) = (self.fresh("c"), self.fresh("c"));
                        let left = self.rng.gen_range(1..s);
                        wraps.push(Wrap::Copy(left, s - left, t, p.clone(), q.clone()));
                        res.push((Term::var(&p), TypeExpr::nbang(left, (*a).clone())));
                        res.push((Term::var(&q), TypeExpr::nbang(s - left, *a)));
                    }
                },
            }
        }
        xs
    }

    fn build(&mut self, ty: &TypeExpr, mut xs: Vec<Term>, wraps: &mut Vec<Wrap>, depth: usize) -> Term {
        match ty {
            TypeExpr::Ground(_) => self.combine(xs),
            TypeExpr::Unit => {
                if xs.is_empty() {
                    Term::Star
                } else {
                    let t = self.combine(xs);
                    drop_x(t)
                }
            }
            TypeExpr::Tensor(a, b) => {
                xs.shuffle(&mut self.rng);
                let cut = self.rng.gen_range(0..=xs.len());
                let right = xs.split_off(cut);
                let l = self.build(a, xs, wraps, depth);
                let mut inner = Vec::new();
                let r = self.build(b, right, &mut inner, depth);
                Term::pair(l, wrap(r, inner))
            }
            TypeExpr::Lolli(a, b) => {
                let x = self.fresh("l");
                let mut res: Vec<(Term, TypeExpr)> = xs.into_iter().map(|t| (t, x_ty())).collect();
                res.push((Term::var(&x), (**a).clone()));
                let body = self.gen_term(b, res, depth.saturating_sub(1));
                Term::lam(&x, (**a).clone(), body)
            }
            TypeExpr::Bang(r, a) => {
                if !xs.is_empty() {
                    let sink = self.combine(xs);
                    wraps.push(Wrap::UnitLet(drop_x(sink)));
                }
                let body = self.gen_term(a, vec![], depth.saturating_sub(1));
                Term::promote(*r, vec![], vec![], vec![], body)
            }
        }
    }

    /// A random well-typed derivation over [`timed_signature`].
    pub fn derivation(&mut self, sig: &Signature) -> Result<Derivation, TypeError> {
        let ctx = self.gen_context(3);
        let ty = self.gen_type(self.cfg.type_depth);
        let res = ctx.vars.iter().map(|(x, t)| (Term::var(x), t.clone())).collect();
        let t = self.gen_term(&ty, res, 3);
        infer(sig, &ctx, &t)
    }

    /// A term whose root is a left-to-right redex of `s`, with its context.
    pub fn schema_instance(&mut self, s: SchemaId) -> (Context, Term) {
        use SchemaId::*;
        let mut ctx = Vec::new();
        let t = match s {
            PmBeta => {
                let (a, b, rest) = (self.xvars(&mut ctx, 0, 2), self.xvars(&mut ctx, 0, 1), self.xvars(&mut ctx, 0, 1));
                let (p, q) = (self.fresh("p"), self.fresh("q"));
                let mut body = rest;
                body.extend([Term::var(&p), Term::var(&q)]);
                let (ta, tb, tu) = (self.combine(a), self.combine(b), self.combine(body));
                Term::pair_let(Term::pair(ta, tb), &p, &q, tu)
            }
            PmEta => {
                let v = self.pair_source(&mut ctx);
                let (p, q, s1, t1) = (self.fresh("p"), self.fresh("q"), self.fresh("s"), self.fresh("t"));
                let mut rest = self.xvars(&mut ctx, 0, 1);
                rest.extend([Term::var(&s1), Term::var(&t1)]);
                let inner = self.combine(rest);
                let body = Term::pair_let(Term::pair(Term::var(&p), Term::var(&q)), &s1, &t1, inner);
                Term::pair_let(v, &p, &q, body)
            }
            UnitBeta => {
                let xs = self.xvars(&mut ctx, 0, 2);
                Term::unit_let(Term::Star, self.combine(xs))
            }
            UnitEta => {
                let v = self.unit_source(&mut ctx);
                let mut xs = self.xvars(&mut ctx, 0, 2);
                let k = self.small_wait();
                xs.push(wait(k, tick()));
                Term::unit_let(v, self.combine(xs))
            }
            LamBeta => {
                let (inner, outer) = (self.xvars(&mut ctx, 0, 1), self.xvars(&mut ctx, 0, 2));
                let x = self.fresh("y");
                let mut body = inner;
                body.push(Term::var(&x));
                let (tb, ta) = (self.combine(body), self.combine(outer));
                Term::app(Term::lam(&x, x_ty(), tb), ta)
            }
            LamEta => {
                let f = if self.pct(30) {
                    self.var(&mut ctx, "f", TypeExpr::lolli(x_ty(), x_ty()))
                } else {
                    let y = self.fresh("y");
                    let mut body = self.xvars(&mut ctx, 0, 1);
                    body.push(Term::var(&y));
                    Term::lam(&y, x_ty(), self.combine(body))
                };
                let x = self.fresh("z");
                Term::lam(&x, x_ty(), Term::app(f, Term::var(&x)))
            }
            BangBeta => {
                let (args, grades, binders) = self.promote_args(&mut ctx, 1, 0, 2);
                let bs: Vec<(Term, u64)> = binders.iter().map(|b| Term::var(b)).zip(grades.iter().copied()).collect();
                let body = self.bang_body(&bs, vec![]);
                Term::derelict(Term::promote(g(1), grades.into_iter().map(g).collect(), args, binders, body))
            }
            BangEta => {
                let r = self.rng.gen_range(0..=self.cfg.max_grade);
                let z = self.var(&mut ctx, "z", TypeExpr::nbang(r, x_ty()));
                let x = self.fresh("b");
                Term::promote(g(r), vec![g(1)], vec![z], vec![x.clone()], Term::derelict(Term::var(&x)))
            }
            BangAssoc => {
                let (r1, r2) = (self.rng.gen_range(1..=2), self.rng.gen_range(1..=2));
                let (qa, qg, qb) = self.promote_args(&mut ctx, r1 * r2, 0, 2);
                let qbs: Vec<(Term, u64)> = qb.iter().map(|b| Term::var(b)).zip(qg.iter().copied()).collect();
                let qbody = self.bang_body(&qbs, vec![]);
                let q = Term::promote(g(r1 * r2), qg.into_iter().map(g).collect(), qa, qb, qbody);
                let (mut args, mut grades, mut binders) = self.promote_args(&mut ctx, r1, 0, 1);
                let x = self.fresh("b");
                args.insert(0, q);
                grades.insert(0, r2);
                binders.insert(0, x);
                let bs: Vec<(Term, u64)> = binders.iter().map(|b| Term::var(b)).zip(grades.iter().copied()).collect();
                let body = self.bang_body(&bs, vec![]);
                Term::promote(g(r1), grades.into_iter().map(g).collect(), args, binders, body)
            }
            BangSym => {
                let r = self.rng.gen_range(0..=2);
                let (args, grades, binders) = self.promote_args(&mut ctx, r, 2, 3);
                let bs: Vec<(Term, u64)> = binders.iter().map(|b| Term::var(b)).zip(grades.iter().copied()).collect();
                let body = self.bang_body(&bs, vec![]);
                Term::promote(g(r), grades.into_iter().map(g).collect(), args, binders, body)
            }
            CopyUnitL | CopyUnitR => {
                let n = self.rng.gen_range(0..=self.cfg.max_grade);
                let v = self.var(&mut ctx, "v", TypeExpr::nbang(n, x_ty()));
                let (x, y) = (self.fresh("x"), self.fresh("y"));
                let extra = self.xvars(&mut ctx, 0, 1);
                let (dropped, kept) = if s == CopyUnitL { (&x, &y) } else { (&y, &x) };
                let body = self.bang_body(&[(Term::var(kept), n)], extra);
                let body = Term::discard(Term::var(dropped), body);
                let (l, r) = if s == CopyUnitL { (0, n) } else { (n, 0) };
                Term::copy(g(l), g(r), v, &x, &y, body)
            }
            CopyAssoc => {
                let (n1, n2, m) = (self.rng.gen_range(0..=2), self.rng.gen_range(0..=2), self.rng.gen_range(0..=2));
                let v = self.var(&mut ctx, "v", TypeExpr::nbang(n1 + n2 + m, x_ty()));
                let (x, y, a, b) = (self.fresh("x"), self.fresh("y"), self.fresh("a"), self.fresh("b"));
                let body =
                    self.bang_body(&[(Term::var(&a), n1), (Term::var(&b), n2), (Term::var(&y), m)], vec![]);
                Term::copy(g(n1 + n2), g(m), v, &x, &y, Term::copy(g(n1), g(n2), Term::var(&x), &a, &b, body))
            }
            CopyComm => {
                let (n, m) = (self.rng.gen_range(0..=2), self.rng.gen_range(0..=2));
                let v = self.var(&mut ctx, "v", TypeExpr::nbang(n + m, x_ty()));
                let (x, y) = (self.fresh("x"), self.fresh("y"));
                let extra = self.xvars(&mut ctx, 0, 1);
                let body = self.bang_body(&[(Term::var(&x), n), (Term::var(&y), m)], extra);
                Term::copy(g(n), g(m), v, &x, &y, body)
            }
            DiscardPromote => {
                let (args, grades, binders) = self.promote_args(&mut ctx, 0, 0, 2);
                let bs: Vec<(Term, u64)> = binders.iter().map(|b| Term::var(b)).zip(grades.iter().copied()).collect();
                let body = self.bang_body(&bs, vec![]);
                let p = Term::promote(g(0), grades.into_iter().map(g).collect(), args, binders, body);
                let rest = self.xvars(&mut ctx, 0, 2);
                Term::discard(p, self.combine(rest))
            }
            PromoteDiscard => {
                let r = self.rng.gen_range(0..=2);
                let a0 = self.var(&mut ctx, "a", TypeExpr::nbang(0, x_ty()));
                let (args, grades, binders) = self.promote_args(&mut ctx, r, 0, 2);
                let bs: Vec<(Term, u64)> = binders.iter().map(|b| Term::var(b)).zip(grades.iter().copied()).collect();
                let x = self.fresh("d");
                let body = Term::discard(Term::var(&x), self.bang_body(&bs, vec![]));
                Term::promote(
                    g(r),
                    std::iter::once(g(0)).chain(grades.into_iter().map(g)).collect(),
                    std::iter::once(a0).chain(args).collect(),
                    std::iter::once(x).chain(binders).collect(),
                    body,
                )
            }
            CopyPromote => {
                let (n, m) = (self.rng.gen_range(0..=2), self.rng.gen_range(0..=2));
                let (args, grades, binders) = self.promote_args(&mut ctx, n + m, 0, 2);
                let bs: Vec<(Term, u64)> = binders.iter().map(|b| Term::var(b)).zip(grades.iter().copied()).collect();
                let pbody = self.bang_body(&bs, vec![]);
                let p = Term::promote(g(n + m), grades.into_iter().map(g).collect(), args, binders, pbody);
                let (x, y) = (self.fresh("x"), self.fresh("y"));
                let extra = self.xvars(&mut ctx, 0, 1);
                let body = self.bang_body(&[(Term::var(&x), n), (Term::var(&y), m)], extra);
                Term::copy(g(n), g(m), p, &x, &y, body)
            }
            PromoteCopy => {
                let r = self.rng.gen_range(0..=2);
                let (n, m) = (self.rng.gen_range(0..=2), self.rng.gen_range(0..=2));
                let a = self.var(&mut ctx, "a", TypeExpr::nbang(r * (n + m), x_ty()));
                let (args, grades, binders) = self.promote_args(&mut ctx, r, 0, 1);
                let (z, p, q) = (self.fresh("z"), self.fresh("p"), self.fresh("q"));
                let mut bs: Vec<(Term, u64)> = binders.iter().map(|b| Term::var(b)).zip(grades.iter().copied()).collect();
                bs.extend([(Term::var(&p), n), (Term::var(&q), m)]);
                let inner = self.bang_body(&bs, vec![]);
                let body = Term::copy(g(n), g(m), Term::var(&z), &p, &q, inner);
                Term::promote(
                    g(r),
                    std::iter::once(g(n + m)).chain(grades.into_iter().map(g)).collect(),
                    std::iter::once(a).chain(args).collect(),
                    std::iter::once(z).chain(binders).collect(),
                    body,
                )
            }
            CommUnitLet | CommPairLet | CommDiscard | CommCopy => {
                let k = match s {
                    CommUnitLet => {
                        let v = self.unit_source(&mut ctx);
                        let xs = self.xvars(&mut ctx, 0, 2);
                        Term::unit_let(v, self.combine(xs))
                    }
                    CommPairLet => {
                        let v = self.pair_source(&mut ctx);
                        let (p, q) = (self.fresh("p"), self.fresh("q"));
                        let mut xs = self.xvars(&mut ctx, 0, 1);
                        xs.extend([Term::var(&p), Term::var(&q)]);
                        Term::pair_let(v, &p, &q, self.combine(xs))
                    }
                    CommDiscard => {
                        let v = self.var(&mut ctx, "v", TypeExpr::nbang(0, x_ty()));
                        let xs = self.xvars(&mut ctx, 0, 2);
                        Term::discard(v, self.combine(xs))
                    }
                    _ => {
                        let (n, m) = (self.rng.gen_range(0..=2), self.rng.gen_range(0..=2));
                        let v = self.var(&mut ctx, "v", TypeExpr::nbang(n + m, x_ty()));
                        let (x, y) = (self.fresh("x"), self.fresh("y"));
                        let body = self.bang_body(&[(Term::var(&x), n), (Term::var(&y), m)], vec![]);
                        Term::copy(g(n), g(m), v, &x, &y, body)
                    }
                };
                self.plug_x(&mut ctx, k)
            }
        };
        (Context::from_vec(ctx), t)
    }

    /// Places an `X`-term under a random proper context.
    fn plug_x(&mut self, ctx: &mut Vec<(Name, TypeExpr)>, hole: Term) -> Term {
        match self.rng.gen_range(0..4) {
            0 => {
                let k = self.small_wait();
                wait(k, hole)
            }
            1 | 2 => {
                let others = self.xvars(ctx, 0, 1);
                let other = self.combine(others);
                if self.pct(50) {
                    later(hole, other)
                } else {
                    later(other, hole)
                }
            }
            _ => {
                let y = self.fresh("y");
                let body = self.combine(vec![Term::var(&y)]);
                Term::app(Term::lam(&y, x_ty(), body), hole)
            }
        }
    }

    fn pair_source(&mut self, ctx: &mut Vec<(Name, TypeExpr)>) -> Term {
        if self.pct(40) {
            self.var(ctx, "w", TypeExpr::tensor(x_ty(), x_ty()))
        } else {
            let (a, b) = (self.xvars(ctx, 0, 1), self.xvars(ctx, 0, 1));
            let (ta, tb) = (self.combine(a), self.combine(b));
            Term::pair(ta, tb)
        }
    }

    fn unit_source(&mut self, ctx: &mut Vec<(Name, TypeExpr)>) -> Term {
        if self.pct(40) {
            self.var(ctx, "u", TypeExpr::Unit)
        } else {
            let xs = self.xvars(ctx, 0, 2);
            drop_x(self.combine(xs))
        }
    }

    /// Context variables `a_i : !(r s_i) X` with grades `s_i` and fresh binders.
    fn promote_args(
        &mut self,
        ctx: &mut Vec<(Name, TypeExpr)>,
        r: u64,
        lo: usize,
        hi: usize,
    ) -> (Vec<Term>, Vec<u64>, Vec<Name>) {
        let n = self.rng.gen_range(lo..=hi);
        let mut args = Vec::new();
        let mut grades = Vec::new();
        let mut binders = Vec::new();
        for _ in 0..n {
            let s = self.rng.gen_range(0..=2);
            args.push(self.var(ctx, "a", TypeExpr::nbang(r * s, x_ty())));
            grades.push(s);
            binders.push(self.fresh("b"));
        }
        (args, grades, binders)
    }

    /// Changes some `wait` indices, keeping the term's shape.
    pub fn perturb(&mut self, t: &Term) -> Term {
        let mut out = t.clone();
        for p in t.positions() {
            if let Some(Term::Op(sym, args)) = out.subterm(&p) {
                if sym.name == "wait" && self.pct(40) {
                    let k = self.small_wait();
                    let new = wait(k, args[0].clone());
                    out = out.replace_at(&p, new).expect("position exists");
                }
            }
        }
        out
    }

    /// A pair of terms that differ only in latencies, over a first-order
    /// context.
    pub fn latency_pair(&mut self) -> (Context, Term, Term) {
        let saved = self.cfg.first_order;
        self.cfg.first_order = true;
        let ctx = self.gen_context(2);
        let ty = self.gen_type(1);
        self.cfg.first_order = saved;
        let res = ctx.vars.iter().map(|(x, t)| (Term::var(x), t.clone())).collect();
        let v = self.gen_term(&ty, res, 2);
        let w = self.perturb(&v);
        (ctx, v, w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equational::{apply_step, Dir, RewriteStep};

    #[test]
    fn derivations_typecheck() {
        let sig = timed_signature();
        let mut gen = TermGen::new(7);
        for _ in 0..200 {
            gen.derivation(&sig).unwrap();
        }
    }

    #[test]
    fn every_schema_instance_rewrites() {
        let sig = timed_signature();
        let mut gen = TermGen::new(11);
        for s in SchemaId::ALL {
            for _ in 0..20 {
                let (ctx, t) = gen.schema_instance(s);
                let d = infer(&sig, &ctx, &t).unwrap_or_else(|e| panic!("{} instance `{}`: {}", s, t, e));
                apply_step(&sig, &d, &RewriteStep::new(s, Dir::L2R, vec![]))
                    .unwrap_or_else(|e| panic!("{} on `{}`: {}", s, t, e));
            }
        }
    }

    #[test]
    fn latency_pairs_share_shape() {
        let sig = timed_signature();
        let mut gen = TermGen::new(3);
        for _ in 0..50 {
            let (ctx, v, w) = gen.latency_pair();
            assert_eq!(infer(&sig, &ctx, &v).unwrap().ty, infer(&sig, &ctx, &w).unwrap().ty);
        }
    }
}
