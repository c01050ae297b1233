//! Abstract syntax of types and terms, with the concrete parser and printer.

mod expr;
mod lexer;
mod parse;
mod print;
mod shuffle;
mod signature;
mod subst;

use std::fmt;

pub use crate::quantale::{Grade, Rat};
pub use expr::{CmpOp, Cond, Env, Expr, ExprError};
pub use lexer::{lex, LexError, Tok, Token};
pub use parse::{
    parse_context, parse_cond, parse_expr, parse_sort, parse_term, parse_term_with_params,
    parse_type, split_symbol, ParseError, Parser,
};
pub use shuffle::{enumerate_shuffles, interleavings, is_shuffle};
pub use signature::{to_sort, GradeRef, IndexPat, OpDecl, ParamKind, Signature, SignatureError, SortType};
pub use subst::{
    all_names, alpha_eq, fresh_name, free_vars, fv_set, rename_free, subst, subst_many,
};

pub type Name = String;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeExpr {
    Ground(String),
    Unit,
    Tensor(Box<TypeExpr>, Box<TypeExpr>),
    Lolli(Box<TypeExpr>, Box<TypeExpr>),
    Bang(Grade, Box<TypeExpr>),
}

impl TypeExpr {
    pub fn ground(name: &str) -> TypeExpr {
        TypeExpr::Ground(name.to_string())
    }

    pub fn tensor(a: TypeExpr, b: TypeExpr) -> TypeExpr {
        TypeExpr::Tensor(Box::new(a), Box::new(b))
    }

    pub fn lolli(a: TypeExpr, b: TypeExpr) -> TypeExpr {
        TypeExpr::Lolli(Box::new(a), Box::new(b))
    }

    pub fn bang(r: Grade, a: TypeExpr) -> TypeExpr {
        TypeExpr::Bang(r, Box::new(a))
    }

    pub fn nbang(r: u64, a: TypeExpr) -> TypeExpr {
        TypeExpr::Bang(Grade::Nat(r), Box::new(a))
    }
}

/// An index attached to an operation symbol: a literal, or (inside axiom
/// schemes only) an expression over scheme parameters.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Index {
    Lit(Rat),
    Sym(Expr),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OpSym {
    pub name: String,
    pub index: Vec<Index>,
}

impl OpSym {
    pub fn plain(name: &str) -> OpSym {
        OpSym { name: name.to_string(), index: vec![] }
    }

    pub fn nat(name: &str, idx: &[u64]) -> OpSym {
        OpSym {
            name: name.to_string(),
            index: idx.iter().map(|&i| Index::Lit(Rat::from_integer(i as i64))).collect(),
        }
    }

    pub fn with(name: &str, idx: &[Rat]) -> OpSym {
        OpSym { name: name.to_string(), index: idx.iter().map(|&r| Index::Lit(r)).collect() }
    }

    /// Literal index values, or `None` if some index is still symbolic.
    pub fn literal_index(&self) -> Option<Vec<Rat>> {
        self.index
            .iter()
            .map(|i| match i {
                Index::Lit(r) => Some(*r),
                Index::Sym(_) => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Name),
    Op(OpSym, Vec<Term>),
    Star,
    /// `let unit = v in w`
    UnitLet(Box<Term>, Box<Term>),
    Pair(Box<Term>, Box<Term>),
    /// `let x (*) y = v in w`
    PairLet(Box<Term>, Name, Name, Box<Term>),
    Lam(Name, TypeExpr, Box<Term>),
    App(Box<Term>, Box<Term>),
    Promote(Box<Promote>),
    Derelict(Box<Term>),
    /// `discard v in u`
    Discard(Box<Term>, Box<Term>),
    Copy(Box<Copy>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Promote {
    pub grade: Grade,
    pub grades: Vec<Grade>,
    pub args: Vec<Term>,
    pub binders: Vec<Name>,
    pub body: Term,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Copy {
    pub left: Grade,
    pub right: Grade,
    pub source: Term,
    pub x: Name,
    pub y: Name,
    pub body: Term,
}

impl Term {
    pub fn var(x: &str) -> Term {
        Term::Var(x.to_string())
    }

    pub fn op(sym: OpSym, args: Vec<Term>) -> Term {
        Term::Op(sym, args)
    }

    pub fn unit_let(v: Term, w: Term) -> Term {
        Term::UnitLet(Box::new(v), Box::new(w))
    }

    pub fn pair(v: Term, w: Term) -> Term {
        Term::Pair(Box::new(v), Box::new(w))
    }

    pub fn pair_let(v: Term, x: &str, y: &str, w: Term) -> Term {
        Term::PairLet(Box::new(v), x.to_string(), y.to_string(), Box::new(w))
    }

    pub fn lam(x: &str, ty: TypeExpr, body: Term) -> Term {
        Term::Lam(x.to_string(), ty, Box::new(body))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    pub fn promote(
        grade: Grade,
        grades: Vec<Grade>,
        args: Vec<Term>,
        binders: Vec<Name>,
        body: Term,
    ) -> Term {
        Term::Promote(Box::new(Promote { grade, grades, args, binders, body }))
    }

    pub fn derelict(v: Term) -> Term {
        Term::Derelict(Box::new(v))
    }

    pub fn discard(v: Term, u: Term) -> Term {
        Term::Discard(Box::new(v), Box::new(u))
    }

    pub fn copy(left: Grade, right: Grade, source: Term, x: &str, y: &str, body: Term) -> Term {
        Term::Copy(Box::new(Copy {
            left,
            right,
            source,
            x: x.to_string(),
            y: y.to_string(),
            body,
        }))
    }

    /// Immediate subterms in position order.
    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::Var(_) | Term::Star => vec![],
            Term::Op(_, args) => args.iter().collect(),
            Term::UnitLet(v, w) | Term::Pair(v, w) | Term::App(v, w) | Term::Discard(v, w) => {
                vec![v, w]
            }
            Term::PairLet(v, _, _, w) => vec![v, w],
            Term::Lam(_, _, b) | Term::Derelict(b) => vec![b],
            Term::Promote(p) => p.args.iter().chain(std::iter::once(&p.body)).collect(),
            Term::Copy(c) => vec![&c.source, &c.body],
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut Term> {
        match self {
            Term::Var(_) | Term::Star => vec![],
            Term::Op(_, args) => args.iter_mut().collect(),
            Term::UnitLet(v, w) | Term::Pair(v, w) | Term::App(v, w) | Term::Discard(v, w) => {
                vec![v, w]
            }
            Term::PairLet(v, _, _, w) => vec![v, w],
            Term::Lam(_, _, b) | Term::Derelict(b) => vec![b],
            Term::Promote(p) => {
                let p = &mut **p;
                p.args.iter_mut().chain(std::iter::once(&mut p.body)).collect()
            }
            Term::Copy(c) => {
                let c = &mut **c;
                vec![&mut c.source, &mut c.body]
            }
        }
    }

    /// Variables bound by this node for its `i`-th child.
    pub fn binders_for_child(&self, i: usize) -> Vec<&Name> {
        match self {
            Term::PairLet(_, x, y, _) if i == 1 => vec![x, y],
            Term::Lam(x, _, _) => vec![x],
            Term::Promote(p) if i == p.args.len() => p.binders.iter().collect(),
            Term::Copy(c) if i == 1 => vec![&c.x, &c.y],
            _ => vec![],
        }
    }

    pub fn subterm(&self, path: &[usize]) -> Option<&Term> {
        let mut t = self;
        for &i in path {
            t = *t.children().get(i)?;
        }
        Some(t)
    }

    pub fn subterm_mut(&mut self, path: &[usize]) -> Option<&mut Term> {
        let mut t = self;
        for &i in path {
            t = t.children_mut().into_iter().nth(i)?;
        }
        Some(t)
    }

    pub fn replace_at(&self, path: &[usize], new: Term) -> Option<Term> {
        let mut out = self.clone();
        *out.subterm_mut(path)? = new;
        Some(out)
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    /// Node positions in pre-order (outermost first, left to right).
    pub fn positions(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        fn go(t: &Term, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            out.push(path.clone());
            for (i, c) in t.children().into_iter().enumerate() {
                path.push(i);
                go(c, path, out);
                path.pop();
            }
        }
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn head_name(&self) -> &'static str {
        match self {
            Term::Var(_) => "variable",
            Term::Op(..) => "operation",
            Term::Star => "unit",
            Term::UnitLet(..) => "let unit",
            Term::Pair(..) => "pair",
            Term::PairLet(..) => "let pair",
            Term::Lam(..) => "fn",
            Term::App(..) => "application",
            Term::Promote(_) => "promote",
            Term::Derelict(_) => "derelict",
            Term::Discard(..) => "discard",
            Term::Copy(_) => "copy",
        }
    }
}

/// A typing context: an ordered list of distinct variables with types.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Context {
    pub vars: Vec<(Name, TypeExpr)>,
}

impl Context {
    pub fn new() -> Context {
        Context { vars: vec![] }
    }

    pub fn from_vec(vars: Vec<(Name, TypeExpr)>) -> Context {
        Context { vars }
    }

    pub fn single(x: &str, ty: TypeExpr) -> Context {
        Context { vars: vec![(x.to_string(), ty)] }
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn get(&self, x: &str) -> Option<&TypeExpr> {
        self.vars.iter().find(|(n, _)| n == x).map(|(_, t)| t)
    }

    pub fn contains(&self, x: &str) -> bool {
        self.get(x).is_some()
    }

    pub fn names(&self) -> Vec<&Name> {
        self.vars.iter().map(|(n, _)| n).collect()
    }

    pub fn push(&mut self, x: &str, ty: TypeExpr) {
        self.vars.push((x.to_string(), ty));
    }

    pub fn with(mut self, x: &str, ty: TypeExpr) -> Context {
        self.push(x, ty);
        self
    }

    pub fn concat(&self, other: &Context) -> Context {
        let mut vars = self.vars.clone();
        vars.extend(other.vars.iter().cloned());
        Context { vars }
    }

    /// Sub-context of the listed variables, in this context's order.
    pub fn restrict<S: AsRef<str>>(&self, keep: &[S]) -> Context {
        Context {
            vars: self
                .vars
                .iter()
                .filter(|(n, _)| keep.iter().any(|k| k.as_ref() == n))
                .cloned()
                .collect(),
        }
    }

    pub fn without(&self, x: &str) -> Context {
        Context { vars: self.vars.iter().filter(|(n, _)| n != x).cloned().collect() }
    }

    pub fn has_duplicates(&self) -> Option<&Name> {
        for (i, (n, _)) in self.vars.iter().enumerate() {
            if self.vars[..i].iter().any(|(m, _)| m == n) {
                return Some(n);
            }
        }
        None
    }

    /// Same variables with the same types, possibly reordered.
    pub fn is_permutation_of(&self, other: &Context) -> bool {
        self.len() == other.len() && self.vars.iter().all(|(n, t)| other.get(n) == Some(t))
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (n, t)) in self.vars.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{} : {}", n, t)?;
        }
        Ok(())
    }
}
