//! The equational schema as position-addressed rewrite steps on derivations,
//! usable in either direction, plus a normalizer for the β-like rows.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::quantale::QuantaleError;
use crate::syntax::{
    alpha_eq, all_names, fresh_name, fv_set, rename_free, subst, subst_many, Copy as CopyNode,
    Grade, Name, Promote as PromoteNode, Signature, Term, TypeExpr,
};
use crate::typecheck::{infer, Derivation, TypeError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemaId {
    PmBeta,
    PmEta,
    UnitBeta,
    UnitEta,
    LamBeta,
    LamEta,
    BangBeta,
    BangEta,
    BangAssoc,
    BangSym,
    CopyUnitL,
    CopyUnitR,
    CopyAssoc,
    CopyComm,
    DiscardPromote,
    PromoteDiscard,
    CopyPromote,
    PromoteCopy,
    CommUnitLet,
    CommPairLet,
    CommDiscard,
    CommCopy,
}

impl SchemaId {
    pub const ALL: [SchemaId; 22] = [
        SchemaId::PmBeta,
        SchemaId::PmEta,
        SchemaId::UnitBeta,
        SchemaId::UnitEta,
        SchemaId::LamBeta,
        SchemaId::LamEta,
        SchemaId::BangBeta,
        SchemaId::BangEta,
        SchemaId::BangAssoc,
        SchemaId::BangSym,
        SchemaId::CopyUnitL,
        SchemaId::CopyUnitR,
        SchemaId::CopyAssoc,
        SchemaId::CopyComm,
        SchemaId::DiscardPromote,
        SchemaId::PromoteDiscard,
        SchemaId::CopyPromote,
        SchemaId::PromoteCopy,
        SchemaId::CommUnitLet,
        SchemaId::CommPairLet,
        SchemaId::CommDiscard,
        SchemaId::CommCopy,
    ];

    /// Rows oriented left to right by the normalizer. Each strictly shrinks
    /// the term, which bounds the number of steps.
    pub const NORMALIZING: [SchemaId; 8] = [
        SchemaId::LamBeta,
        SchemaId::LamEta,
        SchemaId::PmBeta,
        SchemaId::UnitBeta,
        SchemaId::BangBeta,
        SchemaId::BangEta,
        SchemaId::CopyUnitL,
        SchemaId::CopyUnitR,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SchemaId::PmBeta => "pm-beta",
            SchemaId::PmEta => "pm-eta",
            SchemaId::UnitBeta => "unit-beta",
            SchemaId::UnitEta => "unit-eta",
            SchemaId::LamBeta => "lam-beta",
            SchemaId::LamEta => "lam-eta",
            SchemaId::BangBeta => "bang-beta",
            SchemaId::BangEta => "bang-eta",
            SchemaId::BangAssoc => "bang-assoc",
            SchemaId::BangSym => "bang-sym",
            SchemaId::CopyUnitL => "copy-unit-l",
            SchemaId::CopyUnitR => "copy-unit-r",
            SchemaId::CopyAssoc => "copy-assoc",
            SchemaId::CopyComm => "copy-comm",
            SchemaId::DiscardPromote => "discard-promote",
            SchemaId::PromoteDiscard => "promote-discard",
            SchemaId::CopyPromote => "copy-promote",
            SchemaId::PromoteCopy => "promote-copy",
            SchemaId::CommUnitLet => "comm-unit-let",
            SchemaId::CommPairLet => "comm-pair-let",
            SchemaId::CommDiscard => "comm-discard",
            SchemaId::CommCopy => "comm-copy",
        }
    }

    pub fn group(&self) -> &'static str {
        use SchemaId::*;
        match self {
            PmBeta | PmEta | UnitBeta | UnitEta => "monoidal",
            LamBeta | LamEta => "closed",
            BangBeta | BangEta | BangAssoc | BangSym => "comonadic",
            CopyUnitL | CopyUnitR | CopyAssoc | CopyComm => "comonoid",
            DiscardPromote | PromoteDiscard | CopyPromote | PromoteCopy => "interaction",
            CommUnitLet | CommPairLet | CommDiscard | CommCopy => "commuting",
        }
    }
}

impl fmt::Display for SchemaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemaId {
    type Err = String;
    fn from_str(s: &str) -> Result<SchemaId, String> {
        SchemaId::ALL
            .iter()
            .copied()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown equation `{}`", s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dir {
    L2R,
    R2L,
}

impl fmt::Display for Dir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dir::L2R => "l2r",
            Dir::R2L => "r2l",
        })
    }
}

impl FromStr for Dir {
    type Err = String;
    fn from_str(s: &str) -> Result<Dir, String> {
        match s {
            "l2r" => Ok(Dir::L2R),
            "r2l" => Ok(Dir::R2L),
            _ => Err(format!("direction must be l2r or r2l, not `{}`", s)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Lhs,
    Rhs,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Binding {
    Term(Term),
    Var(Name),
    Vars(Vec<Name>),
    Grade(Grade),
    Grades(Vec<Grade>),
    Nat(usize),
    Path(Vec<usize>),
    Type(TypeExpr),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BindingKind {
    Term,
    Var,
    Vars,
    Grade,
    Grades,
    Nat,
    Path,
    Type,
}

/// The value kind expected for a metavariable name.
pub fn binding_kind(key: &str) -> Option<BindingKind> {
    Some(match key {
        "u" | "w" => BindingKind::Term,
        "x" | "y" | "z" => BindingKind::Var,
        "xs" => BindingKind::Vars,
        "r2" => BindingKind::Grade,
        "ss" => BindingKind::Grades,
        "n" | "o" | "i" => BindingKind::Nat,
        "at" => BindingKind::Path,
        "A" => BindingKind::Type,
        _ => return None,
    })
}

/// Metavariable assignment for a step. Rows that are first-order match on
/// their own; substitution-shaped sides take the context term and hole
/// variable from here.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Bindings(pub BTreeMap<String, Binding>);

macro_rules! getter {
    ($name:ident, $variant:ident, $ty:ty) => {
        pub fn $name(&self, key: &str) -> Result<Option<$ty>, EqError> {
            match self.0.get(key) {
                None => Ok(None),
                Some(Binding::$variant(v)) => Ok(Some(v.clone())),
                Some(_) => Err(EqError::BadBinding(format!(
                    "`{}` should be a {}",
                    key,
                    stringify!($variant).to_lowercase()
                ))),
            }
        }
    };
}

impl Bindings {
    pub fn new() -> Bindings {
        Bindings::default()
    }

    pub fn with(mut self, key: &str, b: Binding) -> Bindings {
        self.0.insert(key.to_string(), b);
        self
    }

    getter!(term, Term, Term);
    getter!(var, Var, Name);
    getter!(vars, Vars, Vec<Name>);
    getter!(grade, Grade, Grade);
    getter!(grades, Grades, Vec<Grade>);
    getter!(nat, Nat, usize);
    getter!(path, Path, Vec<usize>);
    getter!(ty, Type, TypeExpr);

    fn req<T>(&self, key: &str, v: Result<Option<T>, EqError>) -> Result<T, EqError> {
        v?.ok_or_else(|| EqError::MissingBinding(key.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RewriteStep {
    pub schema: SchemaId,
    pub dir: Dir,
    pub position: Vec<usize>,
    pub bindings: Bindings,
}

impl RewriteStep {
    pub fn new(schema: SchemaId, dir: Dir, position: Vec<usize>) -> RewriteStep {
        RewriteStep { schema, dir, position, bindings: Bindings::new() }
    }

    pub fn with(mut self, key: &str, b: Binding) -> RewriteStep {
        self.bindings.0.insert(key.to_string(), b);
        self
    }
}

impl fmt::Display for RewriteStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p: Vec<String> = self.position.iter().map(|i| i.to_string()).collect();
        write!(f, "{} {} at [{}]", self.schema, self.dir, p.join("."))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EqError {
    #[error("no subterm at position {0:?}")]
    BadPosition(Vec<usize>),
    #[error("{schema} {dir} does not apply: {reason}")]
    NoMatch { schema: SchemaId, dir: Dir, reason: String },
    #[error("missing binding `{0}`")]
    MissingBinding(String),
    #[error("bad binding: {0}")]
    BadBinding(String),
    #[error(transparent)]
    Grade(#[from] QuantaleError),
    #[error("rewritten term does not typecheck: {0}")]
    IllTyped(TypeError),
    #[error("rewrite changed the type from {before} to {after}")]
    TypeChanged { before: TypeExpr, after: TypeExpr },
}

type EResult<T> = Result<T, EqError>;

struct Cx<'a> {
    sig: &'a Signature,
    d: &'a Derivation,
    b: &'a Bindings,
    avoid: BTreeSet<Name>,
    schema: SchemaId,
    dir: Dir,
}

impl Cx<'_> {
    fn fail<T>(&self, reason: impl Into<String>) -> EResult<T> {
        Err(EqError::NoMatch { schema: self.schema, dir: self.dir, reason: reason.into() })
    }

    fn fresh(&mut self, base: &str) -> Name {
        let n = fresh_name(base, &self.avoid);
        self.avoid.insert(n.clone());
        n
    }

    fn add(&self, a: Grade, b: Grade) -> EResult<Grade> {
        Ok(self.sig.semiring.add(a, b)?)
    }

    fn mul(&self, a: Grade, b: Grade) -> EResult<Grade> {
        Ok(self.sig.semiring.mul(a, b)?)
    }

    fn zero(&self) -> Grade {
        self.sig.semiring.zero()
    }

    fn one(&self) -> Grade {
        self.sig.semiring.one()
    }

    /// Type of a term whose free variables all come from the focused context.
    fn type_of(&self, t: &Term) -> EResult<TypeExpr> {
        let fv: Vec<Name> = fv_set(t).into_iter().collect();
        let ctx = self.d.context.restrict(&fv);
        infer(self.sig, &ctx, t).map(|d| d.ty).map_err(EqError::IllTyped)
    }

    fn bang_grade(&self, t: &Term) -> EResult<Grade> {
        match self.type_of(t)? {
            TypeExpr::Bang(r, _) => Ok(r),
            other => self.fail(format!("`{}` has type {}, not a graded type", t, other)),
        }
    }

    fn matched(&self, u: &Term, holes: &[Name], t: &Term) -> EResult<Vec<Term>> {
        match match_hole(u, holes, t) {
            Some(m) => Ok(holes.iter().map(|h| m[h].clone()).collect()),
            None => self.fail(format!("term is not an instance of `{}`", u)),
        }
    }

    fn hole(&mut self, t: &Term, path: &[usize]) -> EResult<(Term, Name, Term)> {
        let z = self.fresh("z");
        match abstract_at(t, path, &z) {
            Ok((u, sub)) => Ok((u, z, sub)),
            Err(r) => self.fail(r),
        }
    }
}

/// Replaces the subterm at `path` by the variable `z`, returning the context
/// and the removed subterm. Fails when the position cannot be a substitution
/// hole: inside a promotion body, or under a binder of one of its variables.
pub fn abstract_at(t: &Term, path: &[usize], z: &str) -> Result<(Term, Term), String> {
    let mut node = t;
    let mut bound: Vec<Name> = Vec::new();
    for &i in path {
        if matches!(node, Term::Promote(p) if i == p.args.len()) {
            return Err("position lies inside a promotion body".into());
        }
        bound.extend(node.binders_for_child(i).into_iter().cloned());
        node = node.children().get(i).copied().ok_or("position out of range")?;
    }
    if let Some(x) = fv_set(node).iter().find(|x| bound.contains(x)) {
        return Err(format!("`{}` would escape its binder", x));
    }
    let u = t.replace_at(path, Term::var(z)).expect("path checked above");
    Ok((u, node.clone()))
}

fn eligible(t: &Term, path: &[usize]) -> bool {
    abstract_at(t, path, "").is_ok()
}

fn first_eligible(t: &Term, skip_root: bool, pred: impl Fn(&Term) -> bool) -> Option<Vec<usize>> {
    t.positions().into_iter().find(|p| {
        !(skip_root && p.is_empty())
            && pred(t.subterm(p).expect("position from positions()"))
            && eligible(t, p)
    })
}

/// Solves `pattern[holes := ?] ≡α term` for the hole images.
pub fn match_hole(pattern: &Term, holes: &[Name], term: &Term) -> Option<BTreeMap<Name, Term>> {
    fn lookup(env: &[(Name, Name)], x: &str, left: bool) -> Option<usize> {
        env.iter().rposition(|(a, b)| if left { a == x } else { b == x })
    }
    fn go(
        p: &Term,
        t: &Term,
        holes: &[Name],
        env: &mut Vec<(Name, Name)>,
        out: &mut BTreeMap<Name, Term>,
    ) -> bool {
        if let Term::Var(x) = p {
            if let Some(i) = lookup(env, x, true) {
                return matches!(t, Term::Var(y) if lookup(env, y, false) == Some(i));
            }
            if holes.contains(x) {
                if fv_set(t).iter().any(|y| lookup(env, y, false).is_some()) {
                    return false;
                }
                if let Some(prev) = out.get(x) {
                    return alpha_eq(prev, t);
                }
                out.insert(x.clone(), t.clone());
                return true;
            }
            return matches!(t, Term::Var(y) if y == x && lookup(env, y, false).is_none());
        }
        if !same_shape(p, t) {
            return false;
        }
        let (pc, tc) = (p.children(), t.children());
        for i in 0..pc.len() {
            let pb = p.binders_for_child(i);
            let tb = t.binders_for_child(i);
            let n = pb.len();
            env.extend(pb.into_iter().cloned().zip(tb.into_iter().cloned()));
            let ok = go(pc[i], tc[i], holes, env, out);
            env.truncate(env.len() - n);
            if !ok {
                return false;
            }
        }
        true
    }
    let mut out = BTreeMap::new();
    if !go(pattern, term, holes, &mut Vec::new(), &mut out) {
        return None;
    }
    if holes.iter().any(|h| !out.contains_key(h)) {
        return None;
    }
    alpha_eq(&subst_many(pattern, &out), term).then_some(out)
}

/// Same constructor and annotations, ignoring children and binder names.
fn same_shape(a: &Term, b: &Term) -> bool {
    match (a, b) {
        (Term::Var(x), Term::Var(y)) => x == y,
        (Term::Op(f, xs), Term::Op(g, ys)) => f == g && xs.len() == ys.len(),
        (Term::Star, Term::Star)
        | (Term::UnitLet(..), Term::UnitLet(..))
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
        _ => false,
    }
}

fn vars(ns: &[Name]) -> Vec<Term> {
    ns.iter().map(|n| Term::var(n)).collect()
}

fn is_var(t: &Term, x: &str) -> bool {
    matches!(t, Term::Var(y) if y == x)
}

fn promote(grade: Grade, grades: Vec<Grade>, args: Vec<Term>, binders: Vec<Name>, body: Term) -> Term {
    Term::Promote(Box::new(PromoteNode { grade, grades, args, binders, body }))
}

fn copy(left: Grade, right: Grade, source: Term, x: Name, y: Name, body: Term) -> Term {
    Term::Copy(Box::new(CopyNode { left, right, source, x, y, body }))
}

/// The rewritten subterm for one row, without retyping.
fn rewrite(cx: &mut Cx<'_>, t: &Term) -> EResult<Term> {
    use Dir::*;
    use SchemaId::*;
    let b = cx.b;
    match (cx.schema, cx.dir) {
        (PmBeta, L2R) => match t {
            Term::PairLet(v, x, y, u) => match &**v {
                Term::Pair(a, c) => {
                    let s = BTreeMap::from([(x.clone(), (**a).clone()), (y.clone(), (**c).clone())]);
                    Ok(subst_many(u, &s))
                }
                _ => cx.fail("the matched term is not a pair"),
            },
            _ => cx.fail("expected `let x (*) y = v (*) w in u`"),
        },
        (PmBeta, R2L) => {
            let u = b.req("u", b.term("u"))?;
            let x = b.req("x", b.var("x"))?;
            let y = b.req("y", b.var("y"))?;
            let m = cx.matched(&u, &[x.clone(), y.clone()], t)?;
            Ok(Term::pair_let(Term::pair(m[0].clone(), m[1].clone()), &x, &y, u))
        }
        (PmEta, L2R) => match t {
            Term::PairLet(v, x, y, body) => {
                let target = |s: &Term| {
                    matches!(s, Term::Pair(a, c) if is_var(a, x) && is_var(c, y))
                };
                let at = match b.path("at")? {
                    Some(p) => p,
                    None => match first_eligible(body, false, target) {
                        Some(p) => p,
                        None => return cx.fail("body has no free occurrence of `x (*) y`"),
                    },
                };
                let (u, z, sub) = cx.hole(body, &at)?;
                if !target(&sub) {
                    return cx.fail(format!("`{}` is not the bound pair", sub));
                }
                Ok(subst(&u, &z, v))
            }
            _ => cx.fail("expected a pair elimination"),
        },
        (PmEta, R2L) => {
            let u = b.req("u", b.term("u"))?;
            let z = b.req("z", b.var("z"))?;
            let v = cx.matched(&u, &[z.clone()], t)?.remove(0);
            let x = match b.var("x")? {
                Some(x) => x,
                None => cx.fresh("x"),
            };
            let y = match b.var("y")? {
                Some(y) => y,
                None => cx.fresh("y"),
            };
            let body = subst(&u, &z, &Term::pair(Term::var(&x), Term::var(&y)));
            Ok(Term::pair_let(v, &x, &y, body))
        }
        (UnitBeta, L2R) => match t {
            Term::UnitLet(s, v) if **s == Term::Star => Ok((**v).clone()),
            _ => cx.fail("expected `let unit = unit in v`"),
        },
        (UnitBeta, R2L) => Ok(Term::unit_let(Term::Star, t.clone())),
        (UnitEta, L2R) => match t {
            Term::UnitLet(v, w) => {
                let at = match b.path("at")? {
                    Some(p) => p,
                    None => match first_eligible(w, false, |s| *s == Term::Star) {
                        Some(p) => p,
                        None => return cx.fail("body contains no usable `unit`"),
                    },
                };
                let (u, z, sub) = cx.hole(w, &at)?;
                if sub != Term::Star {
                    return cx.fail(format!("`{}` is not `unit`", sub));
                }
                Ok(subst(&u, &z, v))
            }
            _ => cx.fail("expected a unit elimination"),
        },
        (UnitEta, R2L) => {
            let w = b.req("w", b.term("w"))?;
            let z = b.req("z", b.var("z"))?;
            let v = cx.matched(&w, &[z.clone()], t)?.remove(0);
            Ok(Term::unit_let(v, subst(&w, &z, &Term::Star)))
        }
        (LamBeta, L2R) => match t {
            Term::App(f, w) => match &**f {
                Term::Lam(x, _, v) => Ok(subst(v, x, w)),
                _ => cx.fail("head is not an abstraction"),
            },
            _ => cx.fail("expected an application"),
        },
        (LamBeta, R2L) => {
            let u = b.req("u", b.term("u"))?;
            let x = b.req("x", b.var("x"))?;
            let w = cx.matched(&u, &[x.clone()], t)?.remove(0);
            let a = match b.ty("A")? {
                Some(a) => a,
                None => cx.type_of(&w)?,
            };
            Ok(Term::app(Term::lam(&x, a, u), w))
        }
        (LamEta, L2R) => match t {
            Term::Lam(x, _, body) => match &**body {
                Term::App(v, a) if is_var(a, x) && !fv_set(v).contains(x) => Ok((**v).clone()),
                _ => cx.fail("body is not `v x`"),
            },
            _ => cx.fail("expected an abstraction"),
        },
        (LamEta, R2L) => match cx.d.ty.clone() {
            TypeExpr::Lolli(a, _) => {
                let x = cx.fresh("x");
                Ok(Term::lam(&x, *a, Term::app(t.clone(), Term::var(&x))))
            }
            other => cx.fail(format!("type {} is not a function type", other)),
        },
        (BangBeta, L2R) => match t {
            Term::Derelict(inner) => match &**inner {
                Term::Promote(p) if p.grade == cx.one() => {
                    let s = p.binders.iter().cloned().zip(p.args.iter().cloned()).collect();
                    Ok(subst_many(&p.body, &s))
                }
                _ => cx.fail("expected dereliction of a promotion at grade 1"),
            },
            _ => cx.fail("expected a dereliction"),
        },
        (BangBeta, R2L) => {
            let u = b.req("u", b.term("u"))?;
            let xs = b.req("xs", b.vars("xs"))?;
            let vs = cx.matched(&u, &xs, t)?;
            let ss = match b.grades("ss")? {
                Some(ss) => ss,
                None => vs.iter().map(|v| cx.bang_grade(v)).collect::<EResult<_>>()?,
            };
            Ok(Term::derelict(promote(cx.one(), ss, vs, xs, u)))
        }
        (BangEta, L2R) => match t {
            Term::Promote(p)
                if p.args.len() == 1
                    && p.grades[0] == cx.one()
                    && matches!(&p.body, Term::Derelict(x) if is_var(x, &p.binders[0])) =>
            {
                Ok(p.args[0].clone())
            }
            _ => cx.fail("expected `promote[r; 1](z; x => derelict x)`"),
        },
        (BangEta, R2L) => match cx.d.ty.clone() {
            TypeExpr::Bang(r, _) => {
                let x = cx.fresh("x");
                Ok(promote(r, vec![cx.one()], vec![t.clone()], vec![x.clone()], Term::derelict(Term::var(&x))))
            }
            other => cx.fail(format!("type {} is not graded", other)),
        },
        (BangAssoc, L2R) => match t {
            Term::Promote(p) if !p.args.is_empty() => match &p.args[0] {
                Term::Promote(q) if q.grade == cx.mul(p.grade, p.grades[0])? => {
                    let (r1, r2) = (p.grade, p.grades[0]);
                    let cs: Vec<Name> = q.args.iter().map(|_| cx.fresh("c")).collect();
                    let inner = promote(r2, q.grades.clone(), vars(&cs), q.binders.clone(), q.body.clone());
                    let body = subst(&p.body, &p.binders[0], &inner);
                    let mut grades = q.grades.iter().map(|s| cx.mul(r2, *s)).collect::<EResult<Vec<_>>>()?;
                    grades.extend(p.grades[1..].iter().copied());
                    let args = q.args.iter().chain(&p.args[1..]).cloned().collect();
                    let binders = cs.into_iter().chain(p.binders[1..].iter().cloned()).collect();
                    Ok(promote(r1, grades, args, binders, body))
                }
                _ => cx.fail("first argument is not a promotion at grade r1·r2"),
            },
            _ => cx.fail("expected a promotion with arguments"),
        },
        (BangAssoc, R2L) => match t {
            Term::Promote(p) => {
                let bs = p.binders.clone();
                let prefix = |s: &Term| match s {
                    Term::Promote(q) => {
                        q.args.len() <= bs.len() && q.args.iter().zip(&bs).all(|(a, x)| is_var(a, x))
                    }
                    _ => false,
                };
                let at = match b.path("at")? {
                    Some(p) => p,
                    None => match first_eligible(&p.body, false, prefix) {
                        Some(p) => p,
                        None => return cx.fail("body has no promotion over the leading binders"),
                    },
                };
                let (w, a, sub) = cx.hole(&p.body, &at)?;
                let q = match &sub {
                    Term::Promote(q) if prefix(&sub) => q,
                    _ => return cx.fail(format!("`{}` is not a promotion over the leading binders", sub)),
                };
                let n = q.args.len();
                let r2 = q.grade;
                for i in 0..n {
                    if p.grades[i] != cx.mul(r2, q.grades[i])? {
                        return cx.fail(format!("grade {} is not {}·{}", p.grades[i], r2, q.grades[i]));
                    }
                }
                let inner = promote(
                    cx.mul(p.grade, r2)?,
                    q.grades.clone(),
                    p.args[..n].to_vec(),
                    q.binders.clone(),
                    q.body.clone(),
                );
                let grades = std::iter::once(r2).chain(p.grades[n..].iter().copied()).collect();
                let args = std::iter::once(inner).chain(p.args[n..].iter().cloned()).collect();
                let binders = std::iter::once(a).chain(p.binders[n..].iter().cloned()).collect();
                Ok(promote(p.grade, grades, args, binders, w))
            }
            _ => cx.fail("expected a promotion"),
        },
        (BangSym, _) => match t {
            Term::Promote(p) => {
                let i = b.nat("i")?.unwrap_or(0);
                if i + 1 >= p.args.len() {
                    return cx.fail(format!("no arguments {} and {} to swap", i, i + 1));
                }
                let mut q = (**p).clone();
                q.args.swap(i, i + 1);
                q.grades.swap(i, i + 1);
                q.binders.swap(i, i + 1);
                Ok(Term::Promote(Box::new(q)))
            }
            _ => cx.fail("expected a promotion"),
        },
        (CopyUnitL, L2R) => match t {
            Term::Copy(c) if c.left == cx.zero() => match &c.body {
                Term::Discard(x, u) if is_var(x, &c.x) => Ok(subst(u, &c.y, &c.source)),
                _ => cx.fail("body does not discard the left copy"),
            },
            _ => cx.fail("expected `copy[0, n]`"),
        },
        (CopyUnitR, L2R) => match t {
            Term::Copy(c) if c.right == cx.zero() => match &c.body {
                Term::Discard(y, u) if is_var(y, &c.y) => Ok(subst(u, &c.x, &c.source)),
                _ => cx.fail("body does not discard the right copy"),
            },
            _ => cx.fail("expected `copy[n, 0]`"),
        },
        (CopyUnitL, R2L) | (CopyUnitR, R2L) => {
            let left = cx.schema == CopyUnitL;
            let key = if left { "y" } else { "x" };
            let u = b.req("u", b.term("u"))?;
            let kept = b.req(key, b.var(key))?;
            let v = cx.matched(&u, &[kept.clone()], t)?.remove(0);
            let n = cx.bang_grade(&v)?;
            let dropped = cx.fresh(if left { "x" } else { "y" });
            let body = Term::discard(Term::var(&dropped), u);
            Ok(if left {
                copy(cx.zero(), n, v, dropped, kept, body)
            } else {
                copy(n, cx.zero(), v, kept, dropped, body)
            })
        }
        (CopyAssoc, L2R) => match t {
            Term::Copy(c) => match &c.body {
                Term::Copy(d) if is_var(&d.source, &c.x) && cx.add(d.left, d.right)? == c.left => {
                    let mid = cx.fresh("c");
                    let inner = copy(d.right, c.right, Term::var(&mid), d.y.clone(), c.y.clone(), d.body.clone());
                    Ok(copy(d.left, cx.add(d.right, c.right)?, c.source.clone(), d.x.clone(), mid, inner))
                }
                _ => cx.fail("body does not split the left copy with matching grades"),
            },
            _ => cx.fail("expected a copy"),
        },
        (CopyAssoc, R2L) => match t {
            Term::Copy(c) => match &c.body {
                Term::Copy(e) if is_var(&e.source, &c.y) && cx.add(e.left, e.right)? == c.right => {
                    let x = cx.fresh("x");
                    let inner = copy(c.left, e.left, Term::var(&x), c.x.clone(), e.x.clone(), e.body.clone());
                    Ok(copy(cx.add(c.left, e.left)?, e.right, c.source.clone(), x, e.y.clone(), inner))
                }
                _ => cx.fail("body does not split the right copy with matching grades"),
            },
            _ => cx.fail("expected a copy"),
        },
        (CopyComm, _) => match t {
            Term::Copy(c) => Ok(copy(c.right, c.left, c.source.clone(), c.y.clone(), c.x.clone(), c.body.clone())),
            _ => cx.fail("expected a copy"),
        },
        (DiscardPromote, L2R) => match t {
            Term::Discard(v, u) => match &**v {
                Term::Promote(p) if p.grade == cx.zero() => {
                    Ok(p.args.iter().rev().fold((**u).clone(), |acc, a| Term::discard(a.clone(), acc)))
                }
                _ => cx.fail("discarded term is not a promotion at grade 0"),
            },
            _ => cx.fail("expected a discard"),
        },
        (DiscardPromote, R2L) => {
            let w = b.req("w", b.term("w"))?;
            let xs = b.req("xs", b.vars("xs"))?;
            let ss = match b.grades("ss")? {
                Some(ss) => ss,
                None => vec![cx.one(); xs.len()],
            };
            if ss.len() != xs.len() {
                return Err(EqError::BadBinding("`ss` and `xs` differ in length".into()));
            }
            let mut vs = Vec::new();
            let mut cur = t;
            for _ in 0..xs.len() {
                match cur {
                    Term::Discard(v, rest) => {
                        vs.push((**v).clone());
                        cur = rest;
                    }
                    _ => return cx.fail(format!("expected {} nested discards", xs.len())),
                }
            }
            Ok(Term::discard(promote(cx.zero(), ss, vs, xs, w), cur.clone()))
        }
        (PromoteDiscard, L2R) => match t {
            Term::Promote(p) if !p.args.is_empty() && p.grades[0] == cx.zero() => match &p.body {
                Term::Discard(x, u) if is_var(x, &p.binders[0]) => {
                    let rest = promote(
                        p.grade,
                        p.grades[1..].to_vec(),
                        p.args[1..].to_vec(),
                        p.binders[1..].to_vec(),
                        (**u).clone(),
                    );
                    Ok(Term::discard(p.args[0].clone(), rest))
                }
                _ => cx.fail("body does not discard the first binder"),
            },
            _ => cx.fail("expected a promotion whose first grade is 0"),
        },
        (PromoteDiscard, R2L) => match t {
            Term::Discard(v, q) => match &**q {
                Term::Promote(p) => {
                    let x = cx.fresh("x");
                    let grades = std::iter::once(cx.zero()).chain(p.grades.iter().copied()).collect();
                    let args = std::iter::once((**v).clone()).chain(p.args.iter().cloned()).collect();
                    let binders = std::iter::once(x.clone()).chain(p.binders.iter().cloned()).collect();
                    Ok(promote(p.grade, grades, args, binders, Term::discard(Term::var(&x), p.body.clone())))
                }
                _ => cx.fail("body is not a promotion"),
            },
            _ => cx.fail("expected a discard"),
        },
        (CopyPromote, L2R) => match t {
            Term::Copy(c) => match &c.source {
                Term::Promote(p) if p.grade == cx.add(c.left, c.right)? => {
                    let a: Vec<Name> = p.args.iter().map(|_| cx.fresh("a")).collect();
                    let bb: Vec<Name> = p.args.iter().map(|_| cx.fresh("b")).collect();
                    let py = promote(c.left, p.grades.clone(), vars(&a), p.binders.clone(), p.body.clone());
                    let pz = promote(c.right, p.grades.clone(), vars(&bb), p.binders.clone(), p.body.clone());
                    let s = BTreeMap::from([(c.x.clone(), py), (c.y.clone(), pz)]);
                    let mut out = subst_many(&c.body, &s);
                    for i in (0..p.args.len()).rev() {
                        let (l, r) = (cx.mul(c.left, p.grades[i])?, cx.mul(c.right, p.grades[i])?);
                        out = copy(l, r, p.args[i].clone(), a[i].clone(), bb[i].clone(), out);
                    }
                    Ok(out)
                }
                _ => cx.fail("copied term is not a promotion at grade n+m"),
            },
            _ => cx.fail("expected a copy"),
        },
        (CopyPromote, R2L) => {
            let o = b.req("o", b.nat("o"))?;
            let u = b.req("u", b.term("u"))?;
            let y = b.req("y", b.var("y"))?;
            let z = b.req("z", b.var("z"))?;
            let mut layers = Vec::new();
            let mut cur = t;
            for _ in 0..o {
                match cur {
                    Term::Copy(c) => {
                        layers.push(c);
                        cur = &c.body;
                    }
                    _ => return cx.fail(format!("expected {} nested copies", o)),
                }
            }
            let m = cx.matched(&u, &[y.clone(), z.clone()], cur)?;
            let (py, pz) = match (&m[0], &m[1]) {
                (Term::Promote(py), Term::Promote(pz)) => (py, pz),
                _ => return cx.fail("the holes are not filled by promotions"),
            };
            let xa: Vec<Name> = layers.iter().map(|c| c.x.clone()).collect();
            let xb: Vec<Name> = layers.iter().map(|c| c.y.clone()).collect();
            if py.args != vars(&xa) || pz.args != vars(&xb) || py.grades != pz.grades {
                return cx.fail("promotions do not range over the copied halves");
            }
            let shared = |q: &PromoteNode| promote(cx.zero(), q.grades.clone(), vars(&xa), q.binders.clone(), q.body.clone());
            if !alpha_eq(&shared(py), &shared(pz)) {
                return cx.fail("the two promotions have different bodies");
            }
            for (i, c) in layers.iter().enumerate() {
                if c.left != cx.mul(py.grade, py.grades[i])? || c.right != cx.mul(pz.grade, py.grades[i])? {
                    return cx.fail(format!("copy {} has grades ({}, {})", i, c.left, c.right));
                }
            }
            let src = promote(
                cx.add(py.grade, pz.grade)?,
                py.grades.clone(),
                layers.iter().map(|c| c.source.clone()).collect(),
                py.binders.clone(),
                py.body.clone(),
            );
            Ok(copy(py.grade, pz.grade, src, y, z, u))
        }
        (PromoteCopy, L2R) => match t {
            Term::Promote(p) if !p.args.is_empty() => match &p.body {
                Term::Copy(c) if is_var(&c.source, &p.binders[0]) && cx.add(c.left, c.right)? == p.grades[0] => {
                    let a = cx.fresh("a");
                    let bb = cx.fresh("b");
                    let grades = [c.left, c.right].into_iter().chain(p.grades[1..].iter().copied()).collect();
                    let args = vars(&[a.clone(), bb.clone()]).into_iter().chain(p.args[1..].iter().cloned()).collect();
                    let binders = [c.x.clone(), c.y.clone()].into_iter().chain(p.binders[1..].iter().cloned()).collect();
                    let inner = promote(p.grade, grades, args, binders, c.body.clone());
                    Ok(copy(cx.mul(p.grade, c.left)?, cx.mul(p.grade, c.right)?, p.args[0].clone(), a, bb, inner))
                }
                _ => cx.fail("body does not copy the first binder"),
            },
            _ => cx.fail("expected a promotion with arguments"),
        },
        (PromoteCopy, R2L) => match t {
            Term::Copy(c) => match &c.body {
                Term::Promote(p)
                    if p.args.len() >= 2 && is_var(&p.args[0], &c.x) && is_var(&p.args[1], &c.y) =>
                {
                    let (n, m) = (p.grades[0], p.grades[1]);
                    if c.left != cx.mul(p.grade, n)? || c.right != cx.mul(p.grade, m)? {
                        return cx.fail("copy grades are not r·n and r·m");
                    }
                    let z = cx.fresh("z");
                    let inner = copy(n, m, Term::var(&z), p.binders[0].clone(), p.binders[1].clone(), p.body.clone());
                    let grades = std::iter::once(cx.add(n, m)?).chain(p.grades[2..].iter().copied()).collect();
                    let args = std::iter::once(c.source.clone()).chain(p.args[2..].iter().cloned()).collect();
                    let binders = std::iter::once(z).chain(p.binders[2..].iter().cloned()).collect();
                    Ok(promote(p.grade, grades, args, binders, inner))
                }
                _ => cx.fail("body is not a promotion over both copies"),
            },
            _ => cx.fail("expected a copy"),
        },
        (CommUnitLet, d) | (CommPairLet, d) | (CommDiscard, d) | (CommCopy, d) => {
            let kind = cx.schema;
            if d == L2R {
                commute_out(cx, kind, t)
            } else {
                commute_in(cx, kind, t)
            }
        }
    }
}

fn conv_kind(schema: SchemaId, t: &Term) -> bool {
    matches!(
        (schema, t),
        (SchemaId::CommUnitLet, Term::UnitLet(..))
            | (SchemaId::CommPairLet, Term::PairLet(..))
            | (SchemaId::CommDiscard, Term::Discard(..))
            | (SchemaId::CommCopy, Term::Copy(_))
    )
}

/// Splits a conversion node into (scrutinee, binders, body).
fn conv_parts(t: &Term) -> (Term, Vec<Name>, Term) {
    match t {
        Term::UnitLet(v, w) | Term::Discard(v, w) => ((**v).clone(), vec![], (**w).clone()),
        Term::PairLet(v, x, y, w) => ((**v).clone(), vec![x.clone(), y.clone()], (**w).clone()),
        Term::Copy(c) => (c.source.clone(), vec![c.x.clone(), c.y.clone()], c.body.clone()),
        _ => unreachable!("not a conversion node"),
    }
}

fn conv_rebuild(t: &Term, v: Term, bs: &[Name], w: Term) -> Term {
    match t {
        Term::UnitLet(..) => Term::unit_let(v, w),
        Term::Discard(..) => Term::discard(v, w),
        Term::PairLet(..) => Term::pair_let(v, &bs[0], &bs[1], w),
        Term::Copy(c) => copy(c.left, c.right, v, bs[0].clone(), bs[1].clone(), w),
        _ => unreachable!("not a conversion node"),
    }
}

/// `u[K v. w / z]  →  K v. u[w/z]`
fn commute_out(cx: &mut Cx<'_>, kind: SchemaId, t: &Term) -> EResult<Term> {
    let at = match cx.b.path("at")? {
        Some(p) if p.is_empty() => return cx.fail("the converted subterm must be proper"),
        Some(p) => p,
        None => match first_eligible(t, true, |s| conv_kind(kind, s)) {
            Some(p) => p,
            None => return cx.fail("no movable subterm of the right form"),
        },
    };
    let (u, z, c) = cx.hole(t, &at)?;
    if !conv_kind(kind, &c) {
        return cx.fail(format!("`{}` is not of the right form", c));
    }
    let (v, bs, mut w) = conv_parts(&c);
    let taken = all_names(&u);
    let mut nbs = Vec::new();
    for x in bs {
        if taken.contains(&x) {
            let nx = cx.fresh(&x);
            w = rename_free(&w, &x, &nx);
            nbs.push(nx);
        } else {
            nbs.push(x);
        }
    }
    Ok(conv_rebuild(&c, v, &nbs, subst(&u, &z, &w)))
}

/// `K v. u[w/z]  →  u[K v. w / z]`
fn commute_in(cx: &mut Cx<'_>, kind: SchemaId, t: &Term) -> EResult<Term> {
    if !conv_kind(kind, t) {
        return cx.fail("focused term is not of the right form");
    }
    let (v, bs, body) = conv_parts(t);
    let at = match cx.b.path("at")? {
        Some(p) => p,
        None if bs.is_empty() => return Err(EqError::MissingBinding("at".into())),
        None => {
            let occ: Vec<Vec<usize>> = body
                .positions()
                .into_iter()
                .filter(|p| {
                    matches!(body.subterm(p), Some(Term::Var(x)) if bs.contains(x))
                        && binders_on_path(&body, p).iter().all(|b| !bs.contains(b))
                })
                .collect();
            let mut lca = occ.first().cloned().unwrap_or_default();
            for p in &occ[1..] {
                let k = lca.iter().zip(p).take_while(|(a, b)| a == b).count();
                lca.truncate(k);
            }
            lca
        }
    };
    let (u, z, w) = cx.hole(&body, &at)?;
    Ok(subst(&u, &z, &conv_rebuild(t, v, &bs, w)))
}

fn binders_on_path(t: &Term, path: &[usize]) -> Vec<Name> {
    let mut out = Vec::new();
    let mut node = t;
    for &i in path {
        out.extend(node.binders_for_child(i).into_iter().cloned());
        node = node.children()[i];
    }
    out
}

/// Applies one step and retypes the whole term in the original context.
pub fn apply_step(sig: &Signature, d: &Derivation, step: &RewriteStep) -> Result<Derivation, EqError> {
    let sub = d.at(&step.position).ok_or_else(|| EqError::BadPosition(step.position.clone()))?;
    let mut avoid = all_names(&d.term);
    avoid.extend(d.context.vars.iter().map(|(n, _)| n.clone()));
    let mut cx = Cx { sig, d: sub, b: &step.bindings, avoid, schema: step.schema, dir: step.dir };
    let new = rewrite(&mut cx, &sub.term)?;
    let term = d.term.replace_at(&step.position, new).expect("position exists");
    let out = infer(sig, &d.context, &term).map_err(EqError::IllTyped)?;
    if out.ty != d.ty {
        return Err(EqError::TypeChanged { before: d.ty.clone(), after: out.ty });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Normalized {
    pub derivation: Derivation,
    pub steps: Vec<RewriteStep>,
    /// True when fuel ran out before a normal form was reached.
    pub exhausted: bool,
}

/// Leftmost-outermost normalization with the oriented rows.
pub fn beta_normalize(sig: &Signature, d: &Derivation, fuel: usize) -> Result<Normalized, EqError> {
    let mut cur = d.clone();
    let mut steps = Vec::new();
    loop {
        let Some(step) = find_redex(sig, &cur) else {
            return Ok(Normalized { derivation: cur, steps, exhausted: false });
        };
        if steps.len() == fuel {
            return Ok(Normalized { derivation: cur, steps, exhausted: true });
        }
        cur = apply_step(sig, &cur, &step)?;
        steps.push(step);
    }
}

fn find_redex(sig: &Signature, d: &Derivation) -> Option<RewriteStep> {
    let empty = Bindings::new();
    for pos in d.term.positions() {
        let sub = d.at(&pos).expect("premises follow subterms");
        for schema in SchemaId::NORMALIZING {
            let mut cx = Cx { sig, d: sub, b: &empty, avoid: BTreeSet::new(), schema, dir: Dir::L2R };
            if rewrite(&mut cx, &sub.term).is_ok() {
                return Some(RewriteStep::new(schema, Dir::L2R, pos));
            }
        }
    }
    None
}

/// Applies each step to its side; true when the results are α-equal.
pub fn eq_script_check(
    sig: &Signature,
    lhs: &Derivation,
    rhs: &Derivation,
    steps: &[(Side, RewriteStep)],
) -> Result<bool, EqError> {
    let (mut l, mut r) = (lhs.clone(), rhs.clone());
    for (side, step) in steps {
        match side {
            Side::Lhs => l = apply_step(sig, &l, step)?,
            Side::Rhs => r = apply_step(sig, &r, step)?,
        }
    }
    Ok(l.ty == r.ty && l.context.is_permutation_of(&r.context) && alpha_eq(&l.term, &r.term))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_context, parse_term, OpSym};

    fn sig() -> Signature {
        let mut s = Signature::default();
        s.add_ground("X");
        for n in 0..4 {
            s.add_simple_op(&OpSym::nat("wait", &[n]), &[TypeExpr::ground("X")], &TypeExpr::ground("X"))
                .unwrap();
        }
        s
    }

    fn der(ctx: &str, t: &str) -> Derivation {
        infer(&sig(), &parse_context(ctx).unwrap(), &parse_term(t).unwrap()).unwrap()
    }

    fn step(d: &Derivation, s: SchemaId, dir: Dir, pos: &[usize]) -> String {
        apply_step(&sig(), d, &RewriteStep::new(s, dir, pos.to_vec())).unwrap().term.to_string()
    }

    #[test]
    fn lambda_beta_and_back() {
        let d = der("y : X", "(fn x : X => wait_1(x)) y");
        assert_eq!(step(&d, SchemaId::LamBeta, Dir::L2R, &[]), "wait_1(y)");
        let back = RewriteStep::new(SchemaId::LamBeta, Dir::R2L, vec![])
            .with("u", Binding::Term(parse_term("wait_1(x)").unwrap()))
            .with("x", Binding::Var("x".into()));
        let d2 = der("y : X", "wait_1(y)");
        assert_eq!(apply_step(&sig(), &d2, &back).unwrap().term.to_string(), "(fn x : X => wait_1(x)) y");
    }

    #[test]
    fn comonad_rows() {
        let d = der("y : !1 X", "derelict promote[1; 1](y; x => wait_1(derelict x))");
        assert_eq!(step(&d, SchemaId::BangBeta, Dir::L2R, &[]), "wait_1(derelict y)");
        let d = der("z : !2 X", "promote[2; 1](z; x => derelict x)");
        assert_eq!(step(&d, SchemaId::BangEta, Dir::L2R, &[]), "z");
        let d = der("z : !2 X", "z");
        assert_eq!(step(&d, SchemaId::BangEta, Dir::R2L, &[]), "promote[2; 1](z; x1 => derelict x1)");
        let d = der("a : !1 X, b : !2 X", "promote[1; 1, 2](a, b; x, y => derelict x (*) (copy[1, 1] y as p, q in derelict p (*) derelict q))");
        assert_eq!(
            step(&d, SchemaId::BangSym, Dir::L2R, &[]),
            "promote[1; 2, 1](b, a; y, x => derelict x (*) (copy[1, 1] y as p, q in derelict p (*) derelict q))"
        );
    }

    #[test]
    fn comonoid_unit() {
        let d = der("v : !2 X", "copy[0, 2] v as x, y in discard x in copy[1, 1] y as p, q in derelict p (*) derelict q");
        let out = step(&d, SchemaId::CopyUnitL, Dir::L2R, &[]);
        assert_eq!(out, "copy[1, 1] v as p, q in derelict p (*) derelict q");
    }

    #[test]
    fn assoc_roundtrip() {
        let d = der("v : !3 X", "copy[2, 1] v as x, y in copy[1, 1] x as a, b in derelict a (*) derelict b (*) derelict y");
        let s = sig();
        let r = apply_step(&s, &d, &RewriteStep::new(SchemaId::CopyAssoc, Dir::L2R, vec![])).unwrap();
        assert_eq!(r.term.to_string(), "copy[1, 2] v as a, c1 in copy[1, 1] c1 as b, y in derelict a (*) derelict b (*) derelict y");
        let back = apply_step(&s, &r, &RewriteStep::new(SchemaId::CopyAssoc, Dir::R2L, vec![])).unwrap();
        assert!(alpha_eq(&back.term, &d.term));
    }

    #[test]
    fn commuting_discard() {
        let d = der("v : !0 X, w : X", "wait_1(discard v in w)");
        assert_eq!(step(&d, SchemaId::CommDiscard, Dir::L2R, &[]), "discard v in wait_1(w)");
        let d = der("v : !0 X, w : X", "discard v in wait_1(w)");
        let back = RewriteStep::new(SchemaId::CommDiscard, Dir::R2L, vec![]).with("at", Binding::Path(vec![0]));
        assert_eq!(apply_step(&sig(), &d, &back).unwrap().term.to_string(), "wait_1(discard v in w)");
    }

    #[test]
    fn pair_eta_without_bindings() {
        let d = der("p : X * X", "let x (*) y = p in x (*) y");
        assert_eq!(step(&d, SchemaId::PmEta, Dir::L2R, &[]), "p");
    }

    #[test]
    fn normalizer_reaches_fixpoint() {
        let d = der("y : X", "derelict promote[1;](; => fn x : X => x) y");
        let n = beta_normalize(&sig(), &d, 100).unwrap();
        assert_eq!(n.derivation.term.to_string(), "y");
        assert_eq!(n.steps.len(), 2);
        let again = beta_normalize(&sig(), &n.derivation, 100).unwrap();
        assert!(again.steps.is_empty());
    }

    #[test]
    fn mismatch_is_reported() {
        let d = der("y : X", "wait_1(y)");
        let e = apply_step(&sig(), &d, &RewriteStep::new(SchemaId::LamBeta, Dir::L2R, vec![]));
        assert!(matches!(e, Err(EqError::NoMatch { .. })));
    }
}
