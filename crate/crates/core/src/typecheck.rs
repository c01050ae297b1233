//! Typing derivations. Contexts are split according to the free variables of
//! each subterm, so a well-typed term has exactly one derivation.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::quantale::QuantaleError;
use crate::syntax::{
    all_names, fresh_name, fv_set, is_shuffle, rename_free, Context, Grade, Name, Signature,
    SignatureError, Term, TypeExpr,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    Ax,
    Hp,
    UnitI,
    UnitE,
    TensorI,
    TensorE,
    LolliI,
    LolliE,
    BangI,
    BangE,
    Bang0,
    BangSum,
}

impl Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Rule::Ax => "ax",
            Rule::Hp => "hp",
            Rule::UnitI => "I_i",
            Rule::UnitE => "I_e",
            Rule::TensorI => "tensor_i",
            Rule::TensorE => "tensor_e",
            Rule::LolliI => "lolli_i",
            Rule::LolliE => "lolli_e",
            Rule::BangI => "bang_i",
            Rule::BangE => "bang_e",
            Rule::Bang0 => "bang_0",
            Rule::BangSum => "bang_sum",
        }
    }

    pub fn for_term(t: &Term) -> Rule {
        match t {
            Term::Var(_) => Rule::Hp,
            Term::Op(..) => Rule::Ax,
            Term::Star => Rule::UnitI,
            Term::UnitLet(..) => Rule::UnitE,
            Term::Pair(..) => Rule::TensorI,
            Term::PairLet(..) => Rule::TensorE,
            Term::Lam(..) => Rule::LolliI,
            Term::App(..) => Rule::LolliE,
            Term::Promote(_) => Rule::BangI,
            Term::Derelict(_) => Rule::BangE,
            Term::Discard(..) => Rule::Bang0,
            Term::Copy(_) => Rule::BangSum,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Derivation {
    pub rule: Rule,
    pub context: Context,
    pub term: Term,
    pub ty: TypeExpr,
    /// One premise per immediate subterm, in position order.
    pub premises: Vec<Derivation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeErrorKind {
    #[error("unbound variable `{0}`")]
    Unbound(Name),
    #[error("variable `{0}` is not used")]
    Unused(Name),
    #[error("variable used twice: `{0}`")]
    UsedTwice(Name),
    #[error("variable `{0}` is declared twice in the context")]
    Duplicate(Name),
    #[error("binder `{0}` clashes with a context variable; rename it")]
    BinderClash(Name),
    #[error("promotion body may only use its binders, but uses `{0}`")]
    PromoteBodyFree(Name),
    #[error("{what}: expected {expected}, found {found}")]
    Mismatch { what: String, expected: TypeExpr, found: TypeExpr },
    #[error("{what}: expected {expected}, found {found}")]
    Shape { what: String, expected: String, found: TypeExpr },
    #[error("{what}: expected grade {expected}, found {found}")]
    GradeMismatch { what: String, expected: Grade, found: Grade },
    #[error("operation `{op}` expects {expected} argument(s), got {found}")]
    Arity { op: String, expected: usize, found: usize },
    #[error(transparent)]
    Signature(#[from] SignatureError),
    #[error(transparent)]
    Semiring(#[from] QuantaleError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct TypeError {
    /// Child-index path from the root term to the offending subterm.
    pub path: Vec<usize>,
    pub kind: TypeErrorKind,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.kind)
        } else {
            let p: Vec<String> = self.path.iter().map(|i| i.to_string()).collect();
            write!(f, "at position {}: {}", p.join("."), self.kind)
        }
    }
}

impl TypeError {
    fn at(kind: impl Into<TypeErrorKind>) -> TypeError {
        TypeError { path: vec![], kind: kind.into() }
    }

    fn under(mut self, i: usize) -> TypeError {
        self.path.insert(0, i);
        self
    }
}

type TResult<T> = Result<T, TypeError>;

/// Checks that a type mentions only declared grounds and semiring grades.
pub fn check_type(sig: &Signature, ty: &TypeExpr) -> TResult<()> {
    match ty {
        TypeExpr::Ground(g) if !sig.has_ground(g) => {
            Err(TypeError::at(SignatureError::UnknownGround(g.clone())))
        }
        TypeExpr::Ground(_) | TypeExpr::Unit => Ok(()),
        TypeExpr::Tensor(a, b) | TypeExpr::Lolli(a, b) => {
            check_type(sig, a)?;
            check_type(sig, b)
        }
        TypeExpr::Bang(g, a) => {
            sig.semiring.check(*g).map_err(TypeError::at)?;
            check_type(sig, a)
        }
    }
}

pub fn infer(sig: &Signature, ctx: &Context, term: &Term) -> TResult<Derivation> {
    if let Some(x) = ctx.has_duplicates() {
        return Err(TypeError::at(TypeErrorKind::Duplicate(x.clone())));
    }
    for (_, t) in &ctx.vars {
        check_type(sig, t)?;
    }
    infer_node(sig, ctx, term)
}

pub fn check(sig: &Signature, ctx: &Context, term: &Term, ty: &TypeExpr) -> TResult<Derivation> {
    let d = infer(sig, ctx, term)?;
    if &d.ty != ty {
        return Err(TypeError::at(TypeErrorKind::Mismatch {
            what: "term".into(),
            expected: ty.clone(),
            found: d.ty,
        }));
    }
    Ok(d)
}

/// Partition of `ctx` among the children of `term` by free variables.
fn split(ctx: &Context, term: &Term) -> TResult<Vec<Context>> {
    let kids = term.children();
    let mut owned: Vec<BTreeSet<Name>> = Vec::with_capacity(kids.len());
    for (i, c) in kids.iter().enumerate() {
        let bs = term.binders_for_child(i);
        let mut fv = fv_set(c);
        for b in &bs {
            fv.remove(*b);
        }
        if let Some(x) = fv.iter().find(|x| !ctx.contains(x)) {
            let kind = if matches!(term, Term::Promote(p) if i == p.args.len()) {
                TypeErrorKind::PromoteBodyFree(x.clone())
            } else {
                TypeErrorKind::Unbound(x.clone())
            };
            return Err(TypeError::at(kind).under(i));
        }
        owned.push(fv);
    }
    if let Term::Var(x) = term {
        if !ctx.contains(x) {
            return Err(TypeError::at(TypeErrorKind::Unbound(x.clone())));
        }
    }
    for (x, _) in &ctx.vars {
        let n = owned.iter().filter(|s| s.contains(x)).count();
        let here = matches!(term, Term::Var(y) if y == x);
        match (n, here) {
            (0, false) => return Err(TypeError::at(TypeErrorKind::Unused(x.clone()))),
            (0, true) | (1, false) => {}
            _ => return Err(TypeError::at(TypeErrorKind::UsedTwice(x.clone()))),
        }
    }
    for i in 0..kids.len() {
        for b in term.binders_for_child(i) {
            if ctx.contains(b) {
                return Err(TypeError::at(TypeErrorKind::BinderClash(b.clone())));
            }
        }
    }
    Ok(owned
        .iter()
        .map(|s| Context {
            vars: ctx.vars.iter().filter(|(n, _)| s.contains(n)).cloned().collect(),
        })
        .collect())
}

fn sub(sig: &Signature, i: usize, ctx: &Context, t: &Term) -> TResult<Derivation> {
    infer_node(sig, ctx, t).map_err(|e| e.under(i))
}

fn mismatch(what: &str, expected: &TypeExpr, found: &TypeExpr, i: usize) -> TypeError {
    TypeError::at(TypeErrorKind::Mismatch {
        what: what.into(),
        expected: expected.clone(),
        found: found.clone(),
    })
    .under(i)
}

fn shape(what: &str, expected: &str, found: &TypeExpr, i: usize) -> TypeError {
    TypeError::at(TypeErrorKind::Shape {
        what: what.into(),
        expected: expected.into(),
        found: found.clone(),
    })
    .under(i)
}

fn grade_eq(what: &str, expected: Grade, found: Grade, i: usize) -> TResult<()> {
    if expected == found {
        Ok(())
    } else {
        Err(TypeError::at(TypeErrorKind::GradeMismatch { what: what.into(), expected, found })
            .under(i))
    }
}

fn infer_node(sig: &Signature, ctx: &Context, term: &Term) -> TResult<Derivation> {
    let parts = split(ctx, term)?;
    let sr = sig.semiring;
    let node = |rule, ty, premises| Derivation {
        rule,
        context: ctx.clone(),
        term: term.clone(),
        ty,
        premises,
    };
    match term {
        Term::Var(x) => Ok(node(Rule::Hp, ctx.get(x).unwrap().clone(), vec![])),
        Term::Star => Ok(node(Rule::UnitI, TypeExpr::Unit, vec![])),
        Term::Op(sym, args) => {
            let (arg_tys, res) = sig.resolve(sym).map_err(TypeError::at)?;
            if arg_tys.len() != args.len() {
                return Err(TypeError::at(TypeErrorKind::Arity {
                    op: sym.to_string(),
                    expected: arg_tys.len(),
                    found: args.len(),
                }));
            }
            let mut ps = Vec::new();
            for (i, (a, want)) in args.iter().zip(&arg_tys).enumerate() {
                let d = sub(sig, i, &parts[i], a)?;
                if &d.ty != want {
                    return Err(mismatch("operation argument", want, &d.ty, i));
                }
                ps.push(d);
            }
            Ok(node(Rule::Ax, res, ps))
        }
        Term::UnitLet(v, w) => {
            let dv = sub(sig, 0, &parts[0], v)?;
            if dv.ty != TypeExpr::Unit {
                return Err(mismatch("let unit scrutinee", &TypeExpr::Unit, &dv.ty, 0));
            }
            let dw = sub(sig, 1, &parts[1], w)?;
            let ty = dw.ty.clone();
            Ok(node(Rule::UnitE, ty, vec![dv, dw]))
        }
        Term::Pair(v, w) => {
            let dv = sub(sig, 0, &parts[0], v)?;
            let dw = sub(sig, 1, &parts[1], w)?;
            let ty = TypeExpr::tensor(dv.ty.clone(), dw.ty.clone());
            Ok(node(Rule::TensorI, ty, vec![dv, dw]))
        }
        Term::PairLet(v, x, y, w) => {
            let dv = sub(sig, 0, &parts[0], v)?;
            let (a, b) = match &dv.ty {
                TypeExpr::Tensor(a, b) => ((**a).clone(), (**b).clone()),
                t => return Err(shape("let pair scrutinee", "a tensor type", t, 0)),
            };
            let inner = parts[1].clone().with(x, a).with(y, b);
            let dw = sub(sig, 1, &inner, w)?;
            let ty = dw.ty.clone();
            Ok(node(Rule::TensorE, ty, vec![dv, dw]))
        }
        Term::Lam(x, a, body) => {
            check_type(sig, a).map_err(|e| e.under(0))?;
            let inner = parts[0].clone().with(x, a.clone());
            let db = sub(sig, 0, &inner, body)?;
            let ty = TypeExpr::lolli(a.clone(), db.ty.clone());
            Ok(node(Rule::LolliI, ty, vec![db]))
        }
        Term::App(f, a) => {
            let df = sub(sig, 0, &parts[0], f)?;
            let da = sub(sig, 1, &parts[1], a)?;
            match &df.ty {
                TypeExpr::Lolli(dom, cod) => {
                    if **dom != da.ty {
                        return Err(mismatch("function argument", dom, &da.ty, 1));
                    }
                    let ty = (**cod).clone();
                    Ok(node(Rule::LolliE, ty, vec![df, da]))
                }
                t => Err(shape("applied term", "a function type", t, 0)),
            }
        }
        Term::Promote(p) => {
            sr.check(p.grade).map_err(TypeError::at)?;
            let n = p.args.len();
            let mut ps = Vec::new();
            let mut body_ctx = Context::new();
            for i in 0..n {
                sr.check(p.grades[i]).map_err(TypeError::at)?;
                let d = sub(sig, i, &parts[i], &p.args[i])?;
                let want = sr.mul(p.grade, p.grades[i]).map_err(TypeError::at)?;
                let inner = match &d.ty {
                    TypeExpr::Bang(g, a) => {
                        grade_eq("promotion argument", want, *g, i)?;
                        (**a).clone()
                    }
                    t => return Err(shape("promotion argument", &format!("!{} _", want), t, i)),
                };
                body_ctx.push(&p.binders[i], TypeExpr::bang(p.grades[i], inner));
                ps.push(d);
            }
            let db = sub(sig, n, &body_ctx, &p.body)?;
            let ty = TypeExpr::bang(p.grade, db.ty.clone());
            ps.push(db);
            Ok(node(Rule::BangI, ty, ps))
        }
        Term::Derelict(v) => {
            let dv = sub(sig, 0, &parts[0], v)?;
            match &dv.ty {
                TypeExpr::Bang(g, a) => {
                    grade_eq("derelict", sr.one(), *g, 0)?;
                    let ty = (**a).clone();
                    Ok(node(Rule::BangE, ty, vec![dv]))
                }
                t => Err(shape("derelict", "a graded type", t, 0)),
            }
        }
        Term::Discard(v, u) => {
            let dv = sub(sig, 0, &parts[0], v)?;
            match &dv.ty {
                TypeExpr::Bang(g, _) => grade_eq("discard", sr.zero(), *g, 0)?,
                t => return Err(shape("discard", "a graded type", t, 0)),
            }
            let du = sub(sig, 1, &parts[1], u)?;
            let ty = du.ty.clone();
            Ok(node(Rule::Bang0, ty, vec![dv, du]))
        }
        Term::Copy(c) => {
            sr.check(c.left).map_err(TypeError::at)?;
            sr.check(c.right).map_err(TypeError::at)?;
            let dv = sub(sig, 0, &parts[0], &c.source)?;
            let a = match &dv.ty {
                TypeExpr::Bang(g, a) => {
                    let want = sr.add(c.left, c.right).map_err(TypeError::at)?;
                    grade_eq("copy source", want, *g, 0)?;
                    (**a).clone()
                }
                t => return Err(shape("copy source", "a graded type", t, 0)),
            };
            let inner = parts[1]
                .clone()
                .with(&c.x, TypeExpr::bang(c.left, a.clone()))
                .with(&c.y, TypeExpr::bang(c.right, a));
            let du = sub(sig, 1, &inner, &c.body)?;
            let ty = du.ty.clone();
            Ok(node(Rule::BangSum, ty, vec![dv, du]))
        }
    }
}

impl Derivation {
    /// The sub-derivation for the subterm at `path`.
    pub fn at(&self, path: &[usize]) -> Option<&Derivation> {
        let mut d = self;
        for &i in path {
            d = d.premises.get(i)?;
        }
        Some(d)
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(|p| p.size()).sum::<usize>()
    }

    /// Judgement line `Γ |- v : A`.
    pub fn judgement(&self) -> String {
        if self.context.is_empty() {
            format!("|- {} : {}", self.term, self.ty)
        } else {
            format!("{} |- {} : {}", self.context, self.term, self.ty)
        }
    }

    /// The premise contexts with variables bound by this node removed; the
    /// conclusion context is a shuffle of these.
    pub fn parts(&self) -> Vec<Context> {
        self.premises
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let bs = self.term.binders_for_child(i);
                match &self.term {
                    // Promotion bodies see only their binders.
                    Term::Promote(q) if i == q.args.len() => Context::new(),
                    _ => Context {
                        vars: p
                            .context
                            .vars
                            .iter()
                            .filter(|(n, _)| !bs.contains(&n))
                            .cloned()
                            .collect(),
                    },
                }
            })
            .collect()
    }

    /// S-expression rendering, one node per line.
    pub fn to_sexp(&self) -> String {
        let mut out = String::new();
        self.write_sexp(&mut out, 0);
        out
    }

    fn write_sexp(&self, out: &mut String, depth: usize) {
        use fmt::Write;
        let pad = "  ".repeat(depth);
        let _ = write!(out, "{}({} {:?}", pad, self.rule, self.judgement());
        for p in &self.premises {
            out.push('\n');
            p.write_sexp(out, depth + 1);
        }
        out.push(')');
    }

    /// Checks every node against its rule using only local information.
    pub fn verify(&self, sig: &Signature) -> Result<(), String> {
        let here = || format!("at `{}`", self.judgement());
        if self.rule != Rule::for_term(&self.term) {
            return Err(format!("{}: rule {} does not fit the term", here(), self.rule));
        }
        let kids = self.term.children();
        if kids.len() != self.premises.len()
            || kids.iter().zip(&self.premises).any(|(k, p)| **k != p.term)
        {
            return Err(format!("{}: premises do not match subterms", here()));
        }
        if let Some(x) = self.context.has_duplicates() {
            return Err(format!("{}: duplicate variable {}", here(), x));
        }
        for (i, p) in self.premises.iter().enumerate() {
            let bs = self.term.binders_for_child(i);
            let k = p.context.len();
            let tail: Vec<&Name> =
                p.context.vars[k.saturating_sub(bs.len())..].iter().map(|(n, _)| n).collect();
            if tail != bs {
                return Err(format!("{}: premise {} does not end with its binders", here(), i));
            }
        }
        let parts = self.parts();
        let slices: Vec<&[(Name, TypeExpr)]> = parts.iter().map(|c| c.vars.as_slice()).collect();
        let leaf_ok = match &self.term {
            Term::Var(x) => {
                self.context.len() == 1 && self.context.vars[0].0 == *x
                    && self.context.vars[0].1 == self.ty
            }
            Term::Star => self.context.is_empty() && self.ty == TypeExpr::Unit,
            _ => is_shuffle(&self.context.vars, &slices),
        };
        if !leaf_ok {
            return Err(format!("{}: context is not a shuffle of the premises", here()));
        }
        let pt = |i: usize| &self.premises[i].ty;
        let pc = |i: usize| &self.premises[i].context;
        let sr = sig.semiring;
        let ok = match &self.term {
            Term::Var(_) | Term::Star => true,
            Term::Op(sym, _) => match sig.resolve(sym) {
                Ok((args, res)) => {
                    args.len() == self.premises.len()
                        && args.iter().enumerate().all(|(i, a)| a == pt(i))
                        && res == self.ty
                }
                Err(_) => false,
            },
            Term::UnitLet(..) => *pt(0) == TypeExpr::Unit && *pt(1) == self.ty,
            Term::Pair(..) => self.ty == TypeExpr::tensor(pt(0).clone(), pt(1).clone()),
            Term::PairLet(..) => match pt(0) {
                TypeExpr::Tensor(a, b) => {
                    let n = pc(1).len();
                    n >= 2 && pc(1).vars[n - 2].1 == **a && pc(1).vars[n - 1].1 == **b
                        && *pt(1) == self.ty
                }
                _ => false,
            },
            Term::Lam(_, a, _) => {
                pc(0).vars.last().map(|v| &v.1) == Some(a)
                    && self.ty == TypeExpr::lolli(a.clone(), pt(0).clone())
            }
            Term::App(..) => *pt(0) == TypeExpr::lolli(pt(1).clone(), self.ty.clone()),
            Term::Promote(p) => {
                let n = p.args.len();
                let body = &self.premises[n];
                body.context.len() == n
                    && self.ty == TypeExpr::bang(p.grade, body.ty.clone())
                    && (0..n).all(|i| match (pt(i), &body.context.vars[i].1) {
                        (TypeExpr::Bang(g, a), TypeExpr::Bang(s, b)) => {
                            a == b && *s == p.grades[i]
                                && sr.mul(p.grade, *s).map_or(false, |rs| rs == *g)
                        }
                        _ => false,
                    })
            }
            Term::Derelict(_) => *pt(0) == TypeExpr::bang(sr.one(), self.ty.clone()),
            Term::Discard(..) => {
                matches!(pt(0), TypeExpr::Bang(g, _) if *g == sr.zero()) && *pt(1) == self.ty
            }
            Term::Copy(c) => match pt(0) {
                TypeExpr::Bang(g, a) => {
                    let n = pc(1).len();
                    sr.add(c.left, c.right).map_or(false, |s| s == *g)
                        && n >= 2
                        && pc(1).vars[n - 2].1 == TypeExpr::bang(c.left, (**a).clone())
                        && pc(1).vars[n - 1].1 == TypeExpr::bang(c.right, (**a).clone())
                        && *pt(1) == self.ty
                }
                _ => false,
            },
        };
        if !ok {
            return Err(format!("{}: premises do not fit rule {}", here(), self.rule));
        }
        self.premises.iter().try_for_each(|p| p.verify(sig))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetaError {
    #[error("context position {0} has no right neighbour")]
    BadPosition(usize),
    #[error("variable `{0}` is not in the context")]
    NotInContext(Name),
    #[error("substituted term has type {found}, expected {expected}")]
    TypeMismatch { expected: TypeExpr, found: TypeExpr },
    #[error("contexts share variable `{0}`")]
    Overlap(Name),
    #[error(transparent)]
    Type(#[from] TypeError),
}

/// Swaps context positions `i` and `i + 1`, rebuilding the derivation
/// node by node.
pub fn exchange(d: &Derivation, i: usize) -> Result<Derivation, MetaError> {
    if i + 1 >= d.context.len() {
        return Err(MetaError::BadPosition(i));
    }
    let x = d.context.vars[i].0.clone();
    let y = d.context.vars[i + 1].0.clone();
    let mut out = d.clone();
    out.context.vars.swap(i, i + 1);
    for p in out.premises.iter_mut() {
        let px = p.context.vars.iter().position(|(n, _)| *n == x);
        let py = p.context.vars.iter().position(|(n, _)| *n == y);
        if let (Some(a), Some(b)) = (px, py) {
            debug_assert_eq!(a + 1, b, "adjacent variables stay adjacent in premises");
            *p = exchange(p, a)?;
        }
    }
    Ok(out)
}

/// From `Γ1, x : A, Γ2 |- v : B` and `Δ |- w : A` builds
/// `Γ1, Δ, Γ2 |- v[w/x] : B`.
pub fn subst_derivation(
    sig: &Signature,
    d: &Derivation,
    x: &str,
    e: &Derivation,
) -> Result<Derivation, MetaError> {
    let a = d.context.get(x).ok_or_else(|| MetaError::NotInContext(x.to_string()))?;
    if *a != e.ty {
        return Err(MetaError::TypeMismatch { expected: a.clone(), found: e.ty.clone() });
    }
    if let Some((n, _)) = e.context.vars.iter().find(|(n, _)| n != x && d.context.contains(n)) {
        return Err(MetaError::Overlap(n.clone()));
    }
    let incoming: BTreeSet<Name> = e.context.vars.iter().map(|(n, _)| n.clone()).collect();
    let d = freshen(sig, d, &incoming)?;
    Ok(splice(&d, x, e))
}

/// α-renames binders of `d.term` that collide with `avoid`.
fn freshen(sig: &Signature, d: &Derivation, avoid: &BTreeSet<Name>) -> Result<Derivation, MetaError> {
    let mut used = all_names(&d.term);
    used.extend(avoid.iter().cloned());
    used.extend(d.context.vars.iter().map(|(n, _)| n.clone()));
    let mut changed = false;
    let t = freshen_term(&d.term, avoid, &mut used, &mut changed);
    if !changed {
        return Ok(d.clone());
    }
    Ok(infer(sig, &d.context, &t)?)
}

/// Renames every binder of `t` whose name lies in `avoid`.
pub fn freshen_binders(t: &Term, avoid: &BTreeSet<Name>) -> Term {
    let mut used = all_names(t);
    used.extend(avoid.iter().cloned());
    let mut changed = false;
    freshen_term(t, avoid, &mut used, &mut changed)
}

fn freshen_term(t: &Term, avoid: &BTreeSet<Name>, used: &mut BTreeSet<Name>, changed: &mut bool) -> Term {
    let mut node = t.clone();
    for i in 0..node.children().len() {
        let bad: Vec<Name> = node
            .binders_for_child(i)
            .into_iter()
            .filter(|b| avoid.contains(*b))
            .cloned()
            .collect();
        for b in bad {
            let nb = fresh_name(&b, used);
            used.insert(nb.clone());
            *changed = true;
            node = rename_bound(&node, i, &b, &nb);
        }
    }
    for c in node.children_mut() {
        *c = freshen_term(c, avoid, used, changed);
    }
    node
}

fn rename_bound(node: &Term, _child: usize, old: &str, new: &str) -> Term {
    let r = |n: &Name| if n == old { new.to_string() } else { n.clone() };
    match node {
        Term::PairLet(v, x, y, w) => Term::PairLet(v.clone(), r(x), r(y), Box::new(rename_free(w, old, new))),
        Term::Lam(x, a, b) => Term::Lam(r(x), a.clone(), Box::new(rename_free(b, old, new))),
        Term::Promote(p) => {
            let mut q = (**p).clone();
            q.binders = q.binders.iter().map(r).collect();
            q.body = rename_free(&q.body, old, new);
            Term::Promote(Box::new(q))
        }
        Term::Copy(c) => {
            let mut q = (**c).clone();
            q.x = r(&q.x);
            q.y = r(&q.y);
            q.body = rename_free(&q.body, old, new);
            Term::Copy(Box::new(q))
        }
        _ => node.clone(),
    }
}

fn splice_ctx(ctx: &Context, x: &str, with: &Context) -> Context {
    let mut vars = Vec::new();
    for (n, t) in &ctx.vars {
        if n == x {
            vars.extend(with.vars.iter().cloned());
        } else {
            vars.push((n.clone(), t.clone()));
        }
    }
    Context { vars }
}

fn splice(d: &Derivation, x: &str, e: &Derivation) -> Derivation {
    if matches!(&d.term, Term::Var(y) if y == x) {
        return e.clone();
    }
    let mut out = d.clone();
    out.context = splice_ctx(&d.context, x, &e.context);
    if let Some(j) = d.premises.iter().position(|p| p.context.contains(x)) {
        out.premises[j] = splice(&d.premises[j], x, e);
        *out.term.children_mut()[j] = out.premises[j].term.clone();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_context, parse_term, parse_type, OpSym};

    fn timed() -> Signature {
        let mut s = Signature::default();
        s.add_ground("X");
        let x = TypeExpr::ground("X");
        for n in 0..4 {
            s.add_simple_op(&OpSym::nat("wait", &[n]), &[x.clone()], &x).unwrap();
        }
        s
    }

    fn infer_str(ctx: &str, t: &str) -> TResult<Derivation> {
        infer(&timed(), &parse_context(ctx).unwrap(), &parse_term(t).unwrap())
    }

    #[test]
    fn lambda_over_wait() {
        let d = infer_str("", "fn x : X => wait_1(x)").unwrap();
        assert_eq!(d.ty, parse_type("X -o X").unwrap());
        assert_eq!(d.rule, Rule::LolliI);
        d.verify(&timed()).unwrap();
    }

    #[test]
    fn linearity_violations() {
        let e = infer_str("x : X", "x (*) x").unwrap_err();
        assert_eq!(e.kind, TypeErrorKind::UsedTwice("x".into()));
        let e = infer_str("x : X, y : X", "x").unwrap_err();
        assert_eq!(e.kind, TypeErrorKind::Unused("y".into()));
        let e = infer_str("", "derelict x").unwrap_err();
        assert_eq!(e.kind, TypeErrorKind::Unbound("x".into()));
        assert_eq!(e.path, vec![0]);
    }

    #[test]
    fn promotion_grades() {
        let d = infer_str("x : !2 X", "promote[2; 1](x; y => derelict y)").unwrap();
        assert_eq!(d.ty, parse_type("!2 X").unwrap());
        let e = infer_str("x : !3 X", "promote[2; 1](x; y => derelict y)").unwrap_err();
        assert!(matches!(e.kind, TypeErrorKind::GradeMismatch { .. }));
        let d = infer_str("x : !3 X", "copy[1, 2] x as a, b in discard promote[0; 2](b; c => unit) in derelict a");
        assert!(d.is_err(), "promote[0; 2] needs !0 argument");
        let d = infer_str(
            "x : !2 X",
            "copy[1, 1] x as a, b in derelict a (*) derelict b",
        )
        .unwrap();
        d.verify(&timed()).unwrap();
    }

    #[test]
    fn exchange_and_substitution() {
        let sig = timed();
        let d = infer_str("x : X, y : X, z : X", "(x (*) z) (*) y").unwrap();
        let e = exchange(&d, 1).unwrap();
        assert_eq!(e, infer(&sig, &e.context, &d.term).unwrap());
        let w = infer_str("a : X", "wait_2(a)").unwrap();
        let s = subst_derivation(&sig, &d, "z", &w).unwrap();
        assert_eq!(s.term.to_string(), "x (*) wait_2(a) (*) y");
        assert_eq!(s, infer(&sig, &s.context, &s.term).unwrap());
    }
}
