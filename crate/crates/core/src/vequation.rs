//! Quantitative equational logic: theories with schematic axioms, proof
//! trees built from the congruence rules, a validator that recomputes every
//! bound, and a compositional proof search.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::bound::{eval_bound, Bound, BoundError};
use crate::equational::{apply_step, beta_normalize, EqError, RewriteStep, Side};
use crate::quantale::{Grade, Quantale, Rat};
use crate::syntax::{
    all_names, alpha_eq, fresh_name, fv_set, subst, subst_many, Cond, Context, Env, Expr, ExprError,
    Index, Name, OpSym, ParamKind, Signature, SortType, Term, TypeExpr,
};
use crate::typecheck::{infer, TypeError};

/// A schematic axiom `params | conds : ctx |- lhs =[bound] rhs`. Indices of
/// operation symbols in `lhs` and `rhs` may be expressions over the params.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomSchema {
    pub name: String,
    pub params: Vec<(String, ParamKind)>,
    pub conds: Vec<Cond>,
    pub ctx: Vec<(Name, SortType)>,
    pub lhs: Term,
    pub rhs: Term,
    pub bound: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TheorySpec {
    pub quantale: Quantale,
    pub signature: Signature,
    pub symmetric: bool,
    pub axioms: Vec<AxiomSchema>,
}

impl TheorySpec {
    pub fn new(quantale: Quantale, signature: Signature) -> TheorySpec {
        TheorySpec { quantale, signature, symmetric: false, axioms: vec![] }
    }

    pub fn axiom(&self, name: &str) -> Option<&AxiomSchema> {
        self.axioms.iter().find(|a| a.name == name)
    }
}

/// `ctx |- lhs =[bound] rhs : ty`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VEquation {
    pub ctx: Context,
    pub lhs: Term,
    pub rhs: Term,
    pub ty: TypeExpr,
    pub bound: Bound,
}

impl fmt::Display for VEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.ctx.is_empty() {
            write!(f, "{} ", self.ctx)?;
        }
        write!(f, "|- {} =[{}] {} : {}", self.lhs, self.bound, self.rhs, self.ty)
    }
}

impl VEquation {
    /// Same judgement and bound, up to α-renaming and context order.
    pub fn same_as(&self, other: &VEquation) -> bool {
        self.ty == other.ty
            && self.ctx.is_permutation_of(&other.ctx)
            && alpha_eq(&self.lhs, &other.lhs)
            && alpha_eq(&self.rhs, &other.rhs)
            && self.bound == other.bound
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProofKind {
    Refl { ctx: Context, term: Term },
    Trans,
    Weak { to: Bound },
    Join,
    Sym,
    Perm { ctx: Context },
    /// An axiom instance; `rename` optionally renames its context variables
    /// positionally.
    Axiom { name: String, params: Env, rename: Vec<Name> },
    /// Rewrites one side of the child's equation by an equational step.
    /// With `from`, the step applied to `from` must yield that side, and the
    /// side is replaced by `from`.
    Step { step: RewriteStep, side: Side, from: Option<Term> },
    CongOp(OpSym),
    CongUnitLet,
    CongPair,
    /// Binders are the last two variables of the body's context.
    CongPairLet,
    /// The binder is the last variable of the body's context.
    CongLambda,
    CongApp,
    CongDerelict,
    CongDiscard,
    /// Binders and grades come from the last two variables of the body's
    /// context.
    CongCopy,
    /// Children are the arguments then the body; the body's context is the
    /// binder list.
    CongPromote { r: Grade },
    /// Substitutes the second child into `var` of the first (default: the
    /// first child's last context variable).
    CongSubst { var: Option<Name> },
}

impl ProofKind {
    pub fn head(&self) -> &'static str {
        match self {
            ProofKind::Refl { .. } => "refl",
            ProofKind::Trans => "trans",
            ProofKind::Weak { .. } => "weak",
            ProofKind::Join => "join",
            ProofKind::Sym => "sym",
            ProofKind::Perm { .. } => "perm",
            ProofKind::Axiom { .. } => "axiom",
            ProofKind::Step { .. } => "step",
            ProofKind::CongOp(_) => "cong-op",
            ProofKind::CongUnitLet => "cong-unit-let",
            ProofKind::CongPair => "cong-pair",
            ProofKind::CongPairLet => "cong-pair-let",
            ProofKind::CongLambda => "cong-lambda",
            ProofKind::CongApp => "cong-app",
            ProofKind::CongDerelict => "cong-derelict",
            ProofKind::CongDiscard => "cong-discard",
            ProofKind::CongCopy => "cong-copy",
            ProofKind::CongPromote { .. } => "cong-promote",
            ProofKind::CongSubst { .. } => "cong-subst",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofNode {
    pub kind: ProofKind,
    pub children: Vec<ProofNode>,
    /// Conclusion recorded by whoever built the node; checked when present.
    pub claim: Option<VEquation>,
}

impl ProofNode {
    pub fn new(kind: ProofKind, children: Vec<ProofNode>) -> ProofNode {
        ProofNode { kind, children, claim: None }
    }

    pub fn leaf(kind: ProofKind) -> ProofNode {
        ProofNode::new(kind, vec![])
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(ProofNode::size).sum::<usize>()
    }

    pub fn contains(&self, pred: &dyn Fn(&ProofKind) -> bool) -> bool {
        pred(&self.kind) || self.children.iter().any(|c| c.contains(pred))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProofErrorKind {
    #[error("`{rule}` expects {expected} premise(s), got {found}")]
    Arity { rule: &'static str, expected: String, found: usize },
    #[error("unknown axiom `{0}`")]
    UnknownAxiom(String),
    #[error("axiom parameter: {0}")]
    Param(String),
    #[error("side condition `{0}` fails")]
    Cond(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error("axiom bound {0} is not a basis element")]
    NotBasis(String),
    #[error("{side} does not typecheck: {err}")]
    IllTyped { side: &'static str, err: TypeError },
    #[error("sides have different types {0} and {1}")]
    TypeMismatch(TypeExpr, TypeExpr),
    #[error("symmetry is not available in a non-symmetric theory")]
    NotSymmetric,
    #[error("weakening to {to} is not below {from}")]
    Weak { to: String, from: String },
    #[error("premises do not fit: {0}")]
    Shape(String),
    #[error("context: {0}")]
    Context(String),
    #[error(transparent)]
    Step(#[from] EqError),
    #[error("recorded conclusion {claimed} differs from computed {computed}")]
    Claim { claimed: String, computed: String },
}

/// A validation failure at a node, addressed by child indices from the root.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ProofError {
    pub path: Vec<usize>,
    pub kind: ProofErrorKind,
}

impl fmt::Display for ProofError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p: Vec<String> = self.path.iter().map(|i| i.to_string()).collect();
        write!(f, "at node [{}]: {}", p.join("."), self.kind)
    }
}

type KResult<T> = Result<T, ProofErrorKind>;

fn shape(msg: impl Into<String>) -> ProofErrorKind {
    ProofErrorKind::Shape(msg.into())
}

/// Replaces every schematic index by its value under `env`.
pub fn instantiate_indices(t: &Term, env: &Env) -> Result<Term, ExprError> {
    let mut out = t.clone();
    if let Term::Op(sym, _) = &mut out {
        for idx in sym.index.iter_mut() {
            if let Index::Sym(e) = idx {
                *idx = Index::Lit(e.eval(env)?);
            }
        }
    }
    for c in out.children_mut() {
        *c = instantiate_indices(c, env)?;
    }
    Ok(out)
}

/// Types both sides in `ctx` and packages the equation.
fn equation(sig: &Signature, ctx: Context, lhs: Term, rhs: Term, bound: Bound) -> KResult<VEquation> {
    if let Some(x) = ctx.has_duplicates() {
        return Err(ProofErrorKind::Context(format!("`{}` occurs twice", x)));
    }
    let dl = infer(sig, &ctx, &lhs).map_err(|err| ProofErrorKind::IllTyped { side: "left side", err })?;
    let dr = infer(sig, &ctx, &rhs).map_err(|err| ProofErrorKind::IllTyped { side: "right side", err })?;
    if dl.ty != dr.ty {
        return Err(ProofErrorKind::TypeMismatch(dl.ty, dr.ty));
    }
    Ok(VEquation { ctx, lhs, rhs, ty: dl.ty, bound })
}

impl AxiomSchema {
    pub fn instantiate(&self, theory: &TheorySpec, env: &Env) -> KResult<VEquation> {
        for (p, kind) in &self.params {
            let v = env.get(p).ok_or_else(|| ProofErrorKind::Param(format!("`{}` is not given", p)))?;
            if !kind.admits(v) {
                return Err(ProofErrorKind::Param(format!("`{}` = {} is not {}", p, v, kind)));
            }
        }
        if let Some(k) = env.keys().find(|k| !self.params.iter().any(|(p, _)| p == *k)) {
            return Err(ProofErrorKind::Param(format!("`{}` is not a parameter of `{}`", k, self.name)));
        }
        for c in &self.conds {
            if !c.holds(env)? {
                return Err(ProofErrorKind::Cond(c.to_string()));
            }
        }
        let mut ctx = Context::new();
        for (x, s) in &self.ctx {
            let ty = s.instantiate(env).map_err(|e| ProofErrorKind::Param(e.to_string()))?;
            ctx.push(x, ty);
        }
        let lhs = instantiate_indices(&self.lhs, env)?;
        let rhs = instantiate_indices(&self.rhs, env)?;
        let bound = eval_bound(&theory.quantale, &self.bound, env)?;
        if let Some(v) = bound.as_value() {
            if !theory.quantale.in_basis(v) {
                return Err(ProofErrorKind::NotBasis(bound.to_string()));
            }
        }
        equation(&theory.signature, ctx, lhs, rhs, bound)
    }
}

fn tensor_all(q: &Quantale, bounds: impl IntoIterator<Item = Bound>) -> KResult<Bound> {
    let mut acc = Bound::unit(q);
    for b in bounds {
        acc = acc.tensor(q, &b)?;
    }
    Ok(acc)
}

/// Splits the last `n` variables off a context.
fn tail(ctx: &Context, n: usize, rule: &str) -> KResult<(Context, Vec<(Name, TypeExpr)>)> {
    if ctx.len() < n {
        return Err(shape(format!("`{}` needs {} bound variable(s) at the end of the body context", rule, n)));
    }
    let k = ctx.len() - n;
    Ok((Context::from_vec(ctx.vars[..k].to_vec()), ctx.vars[k..].to_vec()))
}

fn expect_arity(rule: &'static str, kids: &[VEquation], n: usize) -> KResult<()> {
    if kids.len() != n {
        return Err(ProofErrorKind::Arity { rule, expected: n.to_string(), found: kids.len() });
    }
    Ok(())
}

fn bang_parts(t: &TypeExpr, what: &str) -> KResult<(Grade, TypeExpr)> {
    match t {
        TypeExpr::Bang(g, a) => Ok((*g, (**a).clone())),
        _ => Err(shape(format!("{} must have a graded type, found {}", what, t))),
    }
}

/// Conclusion of one node from its children's conclusions.
pub fn conclude(theory: &TheorySpec, kind: &ProofKind, kids: &[VEquation]) -> KResult<VEquation> {
    let q = &theory.quantale;
    let sig = &theory.signature;
    let bounds = |ks: &[VEquation]| tensor_all(q, ks.iter().map(|k| k.bound.clone()));
    let concat = |ks: &[&Context]| ks.iter().fold(Context::new(), |acc, c| acc.concat(c));
    let binary = |name: &'static str, mk: &dyn Fn(Term, Term) -> Term| -> KResult<VEquation> {
        expect_arity(name, kids, 2)?;
        let ctx = concat(&[&kids[0].ctx, &kids[1].ctx]);
        let lhs = mk(kids[0].lhs.clone(), kids[1].lhs.clone());
        let rhs = mk(kids[0].rhs.clone(), kids[1].rhs.clone());
        equation(sig, ctx, lhs, rhs, bounds(kids)?)
    };
    match kind {
        ProofKind::Refl { ctx, term } => {
            expect_arity("refl", kids, 0)?;
            equation(sig, ctx.clone(), term.clone(), term.clone(), Bound::unit(q))
        }
        ProofKind::Trans => {
            expect_arity("trans", kids, 2)?;
            let (a, b) = (&kids[0], &kids[1]);
            if !a.ctx.is_permutation_of(&b.ctx) {
                return Err(ProofErrorKind::Context(format!("[{}] vs [{}]", a.ctx, b.ctx)));
            }
            if !alpha_eq(&a.rhs, &b.lhs) {
                return Err(shape(format!("middle terms differ: {} and {}", a.rhs, b.lhs)));
            }
            let bound = a.bound.tensor(q, &b.bound)?;
            equation(sig, a.ctx.clone(), a.lhs.clone(), b.rhs.clone(), bound)
        }
        ProofKind::Weak { to } => {
            expect_arity("weak", kids, 1)?;
            if !to.leq(q, &kids[0].bound)? {
                return Err(ProofErrorKind::Weak { to: to.to_string(), from: kids[0].bound.to_string() });
            }
            Ok(VEquation { bound: to.clone(), ..kids[0].clone() })
        }
        ProofKind::Join => {
            if kids.is_empty() {
                return Err(ProofErrorKind::Arity { rule: "join", expected: "at least 1".into(), found: 0 });
            }
            let first = &kids[0];
            for k in &kids[1..] {
                if !(k.ctx.is_permutation_of(&first.ctx) && alpha_eq(&k.lhs, &first.lhs) && alpha_eq(&k.rhs, &first.rhs)) {
                    return Err(shape("joined premises must state the same equation"));
                }
            }
            let all: Vec<Bound> = kids.iter().map(|k| k.bound.clone()).collect();
            Ok(VEquation { bound: Bound::join(q, &all)?, ..first.clone() })
        }
        ProofKind::Sym => {
            expect_arity("sym", kids, 1)?;
            if !theory.symmetric {
                return Err(ProofErrorKind::NotSymmetric);
            }
            let k = &kids[0];
            Ok(VEquation { lhs: k.rhs.clone(), rhs: k.lhs.clone(), ..k.clone() })
        }
        ProofKind::Perm { ctx } => {
            expect_arity("perm", kids, 1)?;
            let k = &kids[0];
            if !ctx.is_permutation_of(&k.ctx) {
                return Err(ProofErrorKind::Context(format!("[{}] is not a permutation of [{}]", ctx, k.ctx)));
            }
            equation(sig, ctx.clone(), k.lhs.clone(), k.rhs.clone(), k.bound.clone())
        }
        ProofKind::Axiom { name, params, rename } => {
            expect_arity("axiom", kids, 0)?;
            let ax = theory.axiom(name).ok_or_else(|| ProofErrorKind::UnknownAxiom(name.clone()))?;
            let eq = ax.instantiate(theory, params)?;
            if rename.is_empty() {
                return Ok(eq);
            }
            if rename.len() != eq.ctx.len() {
                return Err(ProofErrorKind::Context(format!(
                    "axiom `{}` has {} variable(s), {} name(s) given",
                    name,
                    eq.ctx.len(),
                    rename.len()
                )));
            }
            let map: BTreeMap<Name, Term> =
                eq.ctx.vars.iter().zip(rename).map(|((x, _), n)| (x.clone(), Term::Var(n.clone()))).collect();
            let ctx = Context::from_vec(eq.ctx.vars.iter().zip(rename).map(|((_, t), n)| (n.clone(), t.clone())).collect());
            equation(sig, ctx, subst_many(&eq.lhs, &map), subst_many(&eq.rhs, &map), eq.bound)
        }
        ProofKind::Step { step, side, from } => {
            expect_arity("step", kids, 1)?;
            let k = &kids[0];
            let target = match side {
                Side::Lhs => &k.lhs,
                Side::Rhs => &k.rhs,
            };
            let new = match from {
                None => {
                    let d = infer(sig, &k.ctx, target).map_err(|err| ProofErrorKind::IllTyped { side: "step source", err })?;
                    apply_step(sig, &d, step)?.term
                }
                Some(t) => {
                    let d = infer(sig, &k.ctx, t).map_err(|err| ProofErrorKind::IllTyped { side: "step source", err })?;
                    let out = apply_step(sig, &d, step)?;
                    if !alpha_eq(&out.term, target) {
                        return Err(shape(format!("step yields {}, expected {}", out.term, target)));
                    }
                    t.clone()
                }
            };
            let (lhs, rhs) = match side {
                Side::Lhs => (new, k.rhs.clone()),
                Side::Rhs => (k.lhs.clone(), new),
            };
            equation(sig, k.ctx.clone(), lhs, rhs, k.bound.clone())
        }
        ProofKind::CongOp(sym) => {
            if kids.is_empty() {
                return Err(ProofErrorKind::Arity { rule: "cong-op", expected: "at least 1".into(), found: 0 });
            }
            let ctx = concat(&kids.iter().map(|k| &k.ctx).collect::<Vec<_>>());
            let lhs = Term::Op(sym.clone(), kids.iter().map(|k| k.lhs.clone()).collect());
            let rhs = Term::Op(sym.clone(), kids.iter().map(|k| k.rhs.clone()).collect());
            equation(sig, ctx, lhs, rhs, bounds(kids)?)
        }
        ProofKind::CongUnitLet => binary("cong-unit-let", &Term::unit_let),
        ProofKind::CongPair => binary("cong-pair", &Term::pair),
        ProofKind::CongApp => binary("cong-app", &Term::app),
        ProofKind::CongDiscard => binary("cong-discard", &Term::discard),
        ProofKind::CongDerelict => {
            expect_arity("cong-derelict", kids, 1)?;
            let k = &kids[0];
            equation(sig, k.ctx.clone(), Term::derelict(k.lhs.clone()), Term::derelict(k.rhs.clone()), k.bound.clone())
        }
        ProofKind::CongLambda => {
            expect_arity("cong-lambda", kids, 1)?;
            let k = &kids[0];
            let (rest, bs) = tail(&k.ctx, 1, "cong-lambda")?;
            let (x, a) = &bs[0];
            let lhs = Term::lam(x, a.clone(), k.lhs.clone());
            let rhs = Term::lam(x, a.clone(), k.rhs.clone());
            equation(sig, rest, lhs, rhs, k.bound.clone())
        }
        ProofKind::CongPairLet => {
            expect_arity("cong-pair-let", kids, 2)?;
            let (rest, bs) = tail(&kids[1].ctx, 2, "cong-pair-let")?;
            let (x, y) = (&bs[0].0, &bs[1].0);
            let ctx = kids[0].ctx.concat(&rest);
            let lhs = Term::pair_let(kids[0].lhs.clone(), x, y, kids[1].lhs.clone());
            let rhs = Term::pair_let(kids[0].rhs.clone(), x, y, kids[1].rhs.clone());
            equation(sig, ctx, lhs, rhs, bounds(kids)?)
        }
        ProofKind::CongCopy => {
            expect_arity("cong-copy", kids, 2)?;
            let (rest, bs) = tail(&kids[1].ctx, 2, "cong-copy")?;
            let (n, _) = bang_parts(&bs[0].1, "first copy binder")?;
            let (m, _) = bang_parts(&bs[1].1, "second copy binder")?;
            let (x, y) = (&bs[0].0, &bs[1].0);
            let ctx = kids[0].ctx.concat(&rest);
            let lhs = Term::copy(n, m, kids[0].lhs.clone(), x, y, kids[1].lhs.clone());
            let rhs = Term::copy(n, m, kids[0].rhs.clone(), x, y, kids[1].rhs.clone());
            equation(sig, ctx, lhs, rhs, bounds(kids)?)
        }
        ProofKind::CongPromote { r } => {
            let Some((body, args)) = kids.split_last() else {
                return Err(ProofErrorKind::Arity { rule: "cong-promote", expected: "at least 1".into(), found: 0 });
            };
            if body.ctx.len() != args.len() {
                return Err(shape(format!(
                    "promotion body context has {} variable(s) for {} argument(s)",
                    body.ctx.len(),
                    args.len()
                )));
            }
            let mut grades = Vec::new();
            for (x, t) in &body.ctx.vars {
                grades.push(bang_parts(t, &format!("binder `{}`", x))?.0);
            }
            let binders: Vec<Name> = body.ctx.vars.iter().map(|(x, _)| x.clone()).collect();
            let ctx = concat(&args.iter().map(|k| &k.ctx).collect::<Vec<_>>());
            let lhs = Term::promote(*r, grades.clone(), args.iter().map(|k| k.lhs.clone()).collect(), binders.clone(), body.lhs.clone());
            let rhs = Term::promote(*r, grades, args.iter().map(|k| k.rhs.clone()).collect(), binders, body.rhs.clone());
            let scaled = body.bound.scale(q, sig.semiring, *r)?;
            let bound = bounds(args)?.tensor(q, &scaled)?;
            equation(sig, ctx, lhs, rhs, bound)
        }
        ProofKind::CongSubst { var } => {
            expect_arity("cong-subst", kids, 2)?;
            let (outer, inner) = (&kids[0], &kids[1]);
            let x = match var {
                Some(x) => x.clone(),
                None => outer.ctx.vars.last().map(|(x, _)| x.clone()).ok_or_else(|| shape("cong-subst needs a variable to substitute"))?,
            };
            let pos = outer.ctx.vars.iter().position(|(n, _)| *n == x).ok_or_else(|| ProofErrorKind::Context(format!("`{}` is not in [{}]", x, outer.ctx)))?;
            if outer.ctx.vars[pos].1 != inner.ty {
                return Err(ProofErrorKind::TypeMismatch(outer.ctx.vars[pos].1.clone(), inner.ty.clone()));
            }
            let mut vars = outer.ctx.vars[..pos].to_vec();
            vars.extend(inner.ctx.vars.iter().cloned());
            vars.extend(outer.ctx.vars[pos + 1..].iter().cloned());
            let lhs = subst(&outer.lhs, &x, &inner.lhs);
            let rhs = subst(&outer.rhs, &x, &inner.rhs);
            equation(sig, Context::from_vec(vars), lhs, rhs, outer.bound.tensor(q, &inner.bound)?)
        }
    }
}

fn check_node(theory: &TheorySpec, node: &ProofNode, path: &mut Vec<usize>) -> Result<VEquation, ProofError> {
    let mut kids = Vec::with_capacity(node.children.len());
    for (i, c) in node.children.iter().enumerate() {
        path.push(i);
        kids.push(check_node(theory, c, path)?);
        path.pop();
    }
    let err = |kind| ProofError { path: path.clone(), kind };
    let eq = conclude(theory, &node.kind, &kids).map_err(err)?;
    if let Some(c) = &node.claim {
        if !c.same_as(&eq) {
            return Err(err(ProofErrorKind::Claim { claimed: c.to_string(), computed: eq.to_string() }));
        }
    }
    Ok(eq)
}

/// Recomputes the conclusion of every node bottom-up.
pub fn validate(theory: &TheorySpec, proof: &ProofNode) -> Result<VEquation, ProofError> {
    check_node(theory, proof, &mut Vec::new())
}

/// Copy of the proof with each node's computed conclusion recorded.
pub fn annotate(theory: &TheorySpec, proof: &ProofNode) -> Result<(VEquation, ProofNode), ProofError> {
    fn go(theory: &TheorySpec, node: &ProofNode, path: &mut Vec<usize>) -> Result<(VEquation, ProofNode), ProofError> {
        let mut kids = Vec::new();
        let mut children = Vec::new();
        for (i, c) in node.children.iter().enumerate() {
            path.push(i);
            let (e, n) = go(theory, c, path)?;
            path.pop();
            kids.push(e);
            children.push(n);
        }
        let eq = conclude(theory, &node.kind, &kids).map_err(|kind| ProofError { path: path.clone(), kind })?;
        Ok((eq.clone(), ProofNode { kind: node.kind.clone(), children, claim: Some(eq) }))
    }
    go(theory, proof, &mut Vec::new())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthOptions {
    pub normalize_first: bool,
    /// Normalization fuel per unit of term size.
    pub fuel_factor: usize,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions { normalize_first: false, fuel_factor: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error("{side} does not typecheck: {err}")]
    IllTyped { side: &'static str, err: TypeError },
    #[error("sides have different types {0} and {1}")]
    TypeMismatch(TypeExpr, TypeExpr),
    #[error("normalization failed: {0}")]
    Normalize(EqError),
    #[error("internal error, synthesized proof does not validate: {0}")]
    Invalid(ProofError),
}

/// First-order matching of an axiom side against a term.
struct Matcher<'a> {
    metavars: &'a BTreeSet<Name>,
    params: BTreeSet<String>,
    sigma: BTreeMap<Name, Term>,
    env: Env,
    deferred: Vec<(Expr, Rat)>,
}

fn same_node(a: &Term, b: &Term) -> bool {
    match (a, b) {
        (Term::Star, Term::Star) => true,
        (Term::UnitLet(..), Term::UnitLet(..))
        | (Term::Pair(..), Term::Pair(..))
        | (Term::PairLet(..), Term::PairLet(..))
        | (Term::App(..), Term::App(..))
        | (Term::Derelict(_), Term::Derelict(_))
        | (Term::Discard(..), Term::Discard(..)) => true,
        (Term::Lam(_, s, _), Term::Lam(_, t, _)) => s == t,
        (Term::Promote(p), Term::Promote(q)) => {
            p.grade == q.grade && p.grades == q.grades && p.args.len() == q.args.len()
        }
        (Term::Copy(c), Term::Copy(d)) => c.left == d.left && c.right == d.right,
        (Term::Op(f, xs), Term::Op(g, ys)) => f == g && xs.len() == ys.len(),
        _ => false,
    }
}

impl Matcher<'_> {
    fn matches(&mut self, tpl: &Term, t: &Term, scope: &mut Vec<(Name, Name)>) -> bool {
        if let Term::Var(a) = tpl {
            if let Some((_, b)) = scope.iter().rev().find(|(p, _)| p == a) {
                return matches!(t, Term::Var(c) if c == b);
            }
            if self.metavars.contains(a) {
                let fv = fv_set(t);
                if scope.iter().any(|(_, b)| fv.contains(b)) {
                    return false;
                }
                return match self.sigma.get(a) {
                    Some(prev) => alpha_eq(prev, t),
                    None => {
                        self.sigma.insert(a.clone(), t.clone());
                        true
                    }
                };
            }
            return tpl == t;
        }
        if let (Term::Op(f, xs), Term::Op(g, ys)) = (tpl, t) {
            if f.name != g.name || f.index.len() != g.index.len() || xs.len() != ys.len() {
                return false;
            }
            for (i, j) in f.index.iter().zip(&g.index) {
                let Index::Lit(val) = j else { return false };
                match i {
                    Index::Lit(r) if r != val => return false,
                    Index::Lit(_) => {}
                    Index::Sym(e) => match e.as_var() {
                        Some(p) if self.params.contains(p) => match self.env.get(p) {
                            Some(prev) if prev != val => return false,
                            Some(_) => {}
                            None => {
                                self.env.insert(p.to_string(), *val);
                            }
                        },
                        _ => self.deferred.push((e.clone(), *val)),
                    },
                }
            }
            return xs.iter().zip(ys).all(|(x, y)| self.matches(x, y, scope));
        }
        if !same_node(tpl, t) {
            return false;
        }
        let (tk, uk) = (tpl.children(), t.children());
        for (i, (a, b)) in tk.into_iter().zip(uk).enumerate() {
            let pairs: Vec<(Name, Name)> = tpl
                .binders_for_child(i)
                .into_iter()
                .zip(t.binders_for_child(i))
                .map(|(p, q)| (p.clone(), q.clone()))
                .collect();
            let n = pairs.len();
            scope.extend(pairs);
            let ok = self.matches(a, b, scope);
            scope.truncate(scope.len() - n);
            if !ok {
                return false;
            }
        }
        true
    }
}

/// Renames `w`'s binders at the root to those of `v` (same node shape).
fn align_binders(v: &Term, w: &Term) -> Vec<Term> {
    w.children()
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let map: BTreeMap<Name, Term> = w
                .binders_for_child(i)
                .into_iter()
                .zip(v.binders_for_child(i))
                .filter(|(a, b)| a != b)
                .map(|(a, b)| (a.clone(), Term::Var(b.clone())))
                .collect();
            if map.is_empty() {
                c.clone()
            } else {
                subst_many(c, &map)
            }
        })
        .collect()
}

struct Synth<'a> {
    theory: &'a TheorySpec,
}

impl Synth<'_> {
    fn typed(&self, ctx: &Context, t: &Term) -> Option<TypeExpr> {
        infer(&self.theory.signature, ctx, t).ok().map(|d| d.ty)
    }

    /// Wraps `node` in a permutation if its conclusion context is ordered
    /// differently from `ctx`, and checks that it proves `v = w`.
    fn fit(&self, ctx: &Context, v: &Term, w: &Term, node: ProofNode) -> Option<ProofNode> {
        let eq = validate(self.theory, &node).ok()?;
        if !(alpha_eq(&eq.lhs, v) && alpha_eq(&eq.rhs, w) && eq.ctx.is_permutation_of(ctx)) {
            return None;
        }
        if eq.ctx == *ctx {
            Some(node)
        } else {
            Some(ProofNode::new(ProofKind::Perm { ctx: ctx.clone() }, vec![node]))
        }
    }

    fn go(&self, ctx: &Context, v: &Term, w: &Term) -> Option<ProofNode> {
        let tv = self.typed(ctx, v)?;
        if self.typed(ctx, w)? != tv {
            return None;
        }
        if alpha_eq(v, w) {
            return Some(ProofNode::leaf(ProofKind::Refl { ctx: ctx.clone(), term: v.clone() }));
        }
        for ax in &self.theory.axioms {
            let flips: &[bool] = if self.theory.symmetric { &[false, true] } else { &[false] };
            for &flip in flips {
                if let Some(node) = self.try_axiom(ax, ctx, v, w, flip) {
                    if let Some(n) = self.fit(ctx, v, w, node) {
                        return Some(n);
                    }
                }
            }
        }
        self.congruence(ctx, v, w)
    }

    fn try_axiom(&self, ax: &AxiomSchema, ctx: &Context, v: &Term, w: &Term, flip: bool) -> Option<ProofNode> {
        let (lt, rt) = if flip { (&ax.rhs, &ax.lhs) } else { (&ax.lhs, &ax.rhs) };
        let metavars: BTreeSet<Name> = ax.ctx.iter().map(|(x, _)| x.clone()).collect();
        let mut m = Matcher {
            metavars: &metavars,
            params: ax.params.iter().map(|(p, _)| p.clone()).collect(),
            sigma: BTreeMap::new(),
            env: Env::new(),
            deferred: vec![],
        };
        if !m.matches(lt, v, &mut Vec::new()) {
            return None;
        }
        let sigma_l = std::mem::take(&mut m.sigma);
        if !m.matches(rt, w, &mut Vec::new()) {
            return None;
        }
        let sigma_r = m.sigma;
        if ax.params.iter().any(|(p, _)| !m.env.contains_key(p)) {
            return None;
        }
        for (e, val) in &m.deferred {
            if e.eval(&m.env).ok()? != *val {
                return None;
            }
        }
        let mut avoid: BTreeSet<Name> = ctx.vars.iter().map(|(x, _)| x.clone()).collect();
        avoid.extend(all_names(v));
        avoid.extend(all_names(w));
        let mut rename = Vec::new();
        let mut pending = Vec::new();
        for (x, _) in &ax.ctx {
            let (sl, sr) = (sigma_l.get(x)?, sigma_r.get(x)?);
            match (sl, sr) {
                (Term::Var(a), Term::Var(b)) if a == b && ctx.contains(a) => rename.push(a.clone()),
                _ => {
                    let z = fresh_name(x, &avoid);
                    avoid.insert(z.clone());
                    rename.push(z.clone());
                    pending.push((z, sl.clone(), sr.clone()));
                }
            }
        }
        let mut node = ProofNode::leaf(ProofKind::Axiom { name: ax.name.clone(), params: m.env, rename });
        if flip {
            node = ProofNode::new(ProofKind::Sym, vec![node]);
        }
        for (z, sl, sr) in pending {
            let fl = fv_set(&sl);
            if fl != fv_set(&sr) {
                return None;
            }
            let names: Vec<&Name> = fl.iter().collect();
            let sub_ctx = ctx.restrict(&names);
            let child = self.go(&sub_ctx, &sl, &sr)?;
            node = ProofNode::new(ProofKind::CongSubst { var: Some(z) }, vec![node, child]);
        }
        Some(node)
    }

    fn congruence(&self, ctx: &Context, v: &Term, w: &Term) -> Option<ProofNode> {
        if matches!(v, Term::Var(_) | Term::Star) || !same_node(v, w) {
            return None;
        }
        let dv = infer(&self.theory.signature, ctx, v).ok()?;
        let ws = align_binders(v, w);
        let mut kids = Vec::new();
        for ((p, vc), wc) in dv.premises.iter().zip(v.children()).zip(&ws) {
            kids.push(self.go(&p.context, vc, wc)?);
        }
        let kind = match v {
            Term::Op(sym, _) => ProofKind::CongOp(sym.clone()),
            Term::UnitLet(..) => ProofKind::CongUnitLet,
            Term::Pair(..) => ProofKind::CongPair,
            Term::PairLet(..) => ProofKind::CongPairLet,
            Term::Lam(..) => ProofKind::CongLambda,
            Term::App(..) => ProofKind::CongApp,
            Term::Derelict(_) => ProofKind::CongDerelict,
            Term::Discard(..) => ProofKind::CongDiscard,
            Term::Copy(_) => ProofKind::CongCopy,
            Term::Promote(p) => ProofKind::CongPromote { r: p.grade },
            Term::Var(_) | Term::Star => return None,
        };
        self.fit(ctx, v, w, ProofNode::new(kind, kids))
    }
}

/// Searches for a proof of `ctx |- v = w`. `Ok(None)` means no proof was
/// found; the returned bound is exact for the proof found, not optimal.
pub fn synthesize(
    theory: &TheorySpec,
    ctx: &Context,
    v: &Term,
    w: &Term,
    opts: SynthOptions,
) -> Result<Option<(VEquation, ProofNode)>, SynthError> {
    let sig = &theory.signature;
    let dv = infer(sig, ctx, v).map_err(|err| SynthError::IllTyped { side: "left side", err })?;
    let dw = infer(sig, ctx, w).map_err(|err| SynthError::IllTyped { side: "right side", err })?;
    if dv.ty != dw.ty {
        return Err(SynthError::TypeMismatch(dv.ty, dw.ty));
    }
    let s = Synth { theory };
    let mut found = s.go(ctx, v, w);
    if found.is_none() && opts.normalize_first {
        let nv = beta_normalize(sig, &dv, opts.fuel_factor * v.size()).map_err(SynthError::Normalize)?;
        let nw = beta_normalize(sig, &dw, opts.fuel_factor * w.size()).map_err(SynthError::Normalize)?;
        if let Some(mut node) = s.go(ctx, &nv.derivation.term, &nw.derivation.term) {
            for (side, start, norm) in [(Side::Lhs, &dv, &nv), (Side::Rhs, &dw, &nw)] {
                let mut terms = vec![start.clone()];
                for step in &norm.steps {
                    let next = apply_step(sig, terms.last().unwrap(), step).map_err(SynthError::Normalize)?;
                    terms.push(next);
                }
                for (i, step) in norm.steps.iter().enumerate().rev() {
                    let from = Some(terms[i].term.clone());
                    node = ProofNode::new(ProofKind::Step { step: step.clone(), side, from }, vec![node]);
                }
            }
            found = Some(node);
        }
    }
    match found {
        None => Ok(None),
        Some(node) => annotate(theory, &node).map(Some).map_err(SynthError::Invalid),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantale::{QValue, Semiring};
    use crate::syntax::{parse_context, parse_expr, parse_term, parse_term_with_params, IndexPat, OpDecl};
    use num_traits::Zero;

    fn timed() -> TheorySpec {
        let mut sig = Signature::new(Semiring::NAT);
        sig.add_ground("X");
        sig.add_op(OpDecl {
            name: "wait".into(),
            pattern: vec![IndexPat::Param("n".into(), ParamKind::Nat)],
            args: vec![SortType::Ground("X".into())],
            result: SortType::Ground("X".into()),
        })
        .unwrap();
        let params = vec!["n".to_string(), "m".to_string()];
        let ax = |name: &str, ps: &[&str], l: &str, r: &str, b: &str| AxiomSchema {
            name: name.into(),
            params: ps.iter().map(|p| (p.to_string(), ParamKind::Nat)).collect(),
            conds: vec![],
            ctx: vec![("x".into(), SortType::Ground("X".into()))],
            lhs: parse_term_with_params(l, &params).unwrap(),
            rhs: parse_term_with_params(r, &params).unwrap(),
            bound: parse_expr(b).unwrap(),
        };
        TheorySpec {
            quantale: Quantale::METRIC,
            signature: sig,
            symmetric: true,
            axioms: vec![
                ax("wait-zero", &[], "wait[0](x)", "x", "0"),
                ax("wait-add", &["n", "m"], "wait[n](wait[m](x))", "wait[n+m](x)", "0"),
                ax("wait", &["n", "m"], "wait[n](x)", "wait[m](x)", "abs(n-m)"),
            ],
        }
    }

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn bound_of(th: &TheorySpec, ctx: &str, a: &str, b: &str) -> Option<Bound> {
        synthesize(th, &parse_context(ctx).unwrap(), &t(a), &t(b), SynthOptions::default())
            .unwrap()
            .map(|(eq, _)| eq.bound)
    }

    #[test]
    fn lambda_wait_bound_is_one() {
        let th = timed();
        let b = bound_of(&th, "", "fn x : X => wait_1(x)", "fn y : X => wait_2(y)");
        assert_eq!(b, Some(Bound::dist(Rat::from_integer(1))));
    }

    #[test]
    fn promotion_doubles() {
        let th = timed();
        let b = bound_of(&th, "", "!2(fn x : X => wait_1(x))", "!2(fn x : X => wait_2(x))");
        assert_eq!(b, Some(Bound::dist(Rat::from_integer(2))));
        let mut env = Env::new();
        env.insert("n".into(), Rat::from_integer(1));
        env.insert("m".into(), Rat::from_integer(2));
        let proof = ProofNode::new(
            ProofKind::CongPromote { r: Grade::Nat(2) },
            vec![ProofNode::new(ProofKind::CongLambda, vec![ProofNode::leaf(ProofKind::Axiom { name: "wait".into(), params: env, rename: vec![] })])],
        );
        let eq = validate(&th, &proof).unwrap();
        assert_eq!(eq.bound, Bound::dist(Rat::from_integer(2)));
        assert_eq!(eq.to_string(), "|- !2(fn x : X => wait_1(x)) =[2] !2(fn x : X => wait_2(x)) : !2 (X -o X)");
    }

    #[test]
    fn axioms_under_context_use_substitution() {
        let th = timed();
        let b = bound_of(&th, "y : X", "wait_3(wait_1(y))", "wait_1(wait_2(y))");
        assert_eq!(b, Some(Bound::dist(Rat::from_integer(3))));
        let b = bound_of(&th, "y : X", "wait_1(wait_1(y))", "wait_2(y)");
        assert_eq!(b, Some(Bound::dist(Rat::zero())));
        assert_eq!(bound_of(&th, "y : X", "wait_0(y)", "y"), Some(Bound::dist(Rat::zero())));
        assert_eq!(bound_of(&th, "y : X", "y", "wait_0(y)"), Some(Bound::dist(Rat::zero())));
    }

    #[test]
    fn symmetry_needs_symmetric_theory() {
        let mut th = timed();
        th.symmetric = false;
        let proof = ProofNode::new(ProofKind::Sym, vec![ProofNode::leaf(ProofKind::Refl { ctx: Context::new(), term: t("fn x : X => x") })]);
        let err = validate(&th, &proof).unwrap_err();
        assert_eq!(err.kind, ProofErrorKind::NotSymmetric);
    }

    #[test]
    fn weakening_and_trans() {
        let th = timed();
        let ctx = parse_context("y : X").unwrap();
        let (_, p) = synthesize(&th, &ctx, &t("wait_1(y)"), &t("wait_3(y)"), SynthOptions::default()).unwrap().unwrap();
        let weak = ProofNode::new(ProofKind::Weak { to: Bound::dist(Rat::from_integer(5)) }, vec![p.clone()]);
        assert_eq!(validate(&th, &weak).unwrap().bound, Bound::dist(Rat::from_integer(5)));
        let bad = ProofNode::new(ProofKind::Weak { to: Bound::dist(Rat::from_integer(1)) }, vec![p.clone()]);
        assert!(matches!(validate(&th, &bad).unwrap_err().kind, ProofErrorKind::Weak { .. }));
        let refl = ProofNode::leaf(ProofKind::Refl { ctx, term: t("wait_3(y)") });
        let tr = ProofNode::new(ProofKind::Trans, vec![p, refl]);
        assert_eq!(validate(&th, &tr).unwrap().bound.exact, QValue::int(2));
    }

    #[test]
    fn normalize_first_finds_beta_proofs() {
        let th = timed();
        let ctx = parse_context("y : X").unwrap();
        let (v, w) = (t("(fn x : X => wait_1(x)) y"), t("wait_2(y)"));
        assert!(synthesize(&th, &ctx, &v, &w, SynthOptions::default()).unwrap().is_none());
        let opts = SynthOptions { normalize_first: true, ..SynthOptions::default() };
        let (eq, p) = synthesize(&th, &ctx, &v, &w, opts).unwrap().unwrap();
        assert_eq!(eq.bound, Bound::dist(Rat::from_integer(1)));
        assert!(alpha_eq(&eq.lhs, &v));
        assert!(p.contains(&|k| matches!(k, ProofKind::Step { .. })));
    }

    #[test]
    fn unrelated_terms_fail() {
        let th = timed();
        assert!(bound_of(&th, "a : X, b : X", "a (*) b", "b (*) a").is_none());
    }
}
