//! Signatures: ground types and (possibly indexed families of) operation
//! symbols.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Signed;
use thiserror::Error;

use super::{Grade, OpSym, Rat, TypeExpr};
use crate::quantale::{Semiring, SemiringKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignatureError {
    #[error("unknown operation `{0}`")]
    UnknownOp(String),
    #[error("no declaration of `{name}` accepts index [{index}]")]
    NoMatchingIndex { name: String, index: String },
    #[error("symbol `{0}` still has a schematic index")]
    SymbolicIndex(String),
    #[error("unknown ground type `{0}`")]
    UnknownGround(String),
    #[error("operation `{0}` must take at least one argument")]
    ZeroArity(String),
    #[error("parameter `{0}` is unbound")]
    UnboundParam(String),
    #[error("grade parameter `{0}` = {1} is not a natural number")]
    BadGrade(String, Rat),
    #[error("grade {0} is not in the {1} semiring")]
    WrongSemiring(Grade, SemiringKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamKind {
    Nat,
    Rat,
    Pos,
}

impl ParamKind {
    pub fn admits(&self, r: &Rat) -> bool {
        match self {
            ParamKind::Nat => r.is_integer() && !r.is_negative(),
            ParamKind::Rat => true,
            ParamKind::Pos => r.is_positive(),
        }
    }

    pub fn parse(s: &str) -> Option<ParamKind> {
        match s {
            "nat" => Some(ParamKind::Nat),
            "rat" => Some(ParamKind::Rat),
            "pos" => Some(ParamKind::Pos),
            _ => None,
        }
    }
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParamKind::Nat => "nat",
            ParamKind::Rat => "rat",
            ParamKind::Pos => "pos",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GradeRef {
    Lit(Grade),
    Param(String),
}

/// A type whose grades may refer to family parameters.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SortType {
    Ground(String),
    Unit,
    Tensor(Box<SortType>, Box<SortType>),
    Lolli(Box<SortType>, Box<SortType>),
    Bang(GradeRef, Box<SortType>),
}

impl SortType {
    pub fn instantiate(&self, env: &BTreeMap<String, Rat>) -> Result<TypeExpr, SignatureError> {
        Ok(match self {
            SortType::Ground(g) => TypeExpr::Ground(g.clone()),
            SortType::Unit => TypeExpr::Unit,
            SortType::Tensor(a, b) => TypeExpr::tensor(a.instantiate(env)?, b.instantiate(env)?),
            SortType::Lolli(a, b) => TypeExpr::lolli(a.instantiate(env)?, b.instantiate(env)?),
            SortType::Bang(g, a) => {
                let g = match g {
                    GradeRef::Lit(g) => *g,
                    GradeRef::Param(p) => {
                        let v = *env
                            .get(p)
                            .ok_or_else(|| SignatureError::UnboundParam(p.clone()))?;
                        if !ParamKind::Nat.admits(&v) {
                            return Err(SignatureError::BadGrade(p.clone(), v));
                        }
                        Grade::Nat(*v.numer() as u64)
                    }
                };
                TypeExpr::bang(g, a.instantiate(env)?)
            }
        })
    }

    fn grounds(&self, out: &mut Vec<String>) {
        match self {
            SortType::Ground(g) => out.push(g.clone()),
            SortType::Unit => {}
            SortType::Tensor(a, b) | SortType::Lolli(a, b) => {
                a.grounds(out);
                b.grounds(out)
            }
            SortType::Bang(_, a) => a.grounds(out),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum IndexPat {
    Param(String, ParamKind),
    Fixed(Rat),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpDecl {
    pub name: String,
    pub pattern: Vec<IndexPat>,
    pub args: Vec<SortType>,
    pub result: SortType,
}

impl OpDecl {
    fn bind(&self, index: &[Rat]) -> Option<BTreeMap<String, Rat>> {
        if index.len() != self.pattern.len() {
            return None;
        }
        let mut env = BTreeMap::new();
        for (p, v) in self.pattern.iter().zip(index) {
            match p {
                IndexPat::Fixed(r) if r == v => {}
                IndexPat::Param(n, k) if k.admits(v) => {
                    env.insert(n.clone(), *v);
                }
                _ => return None,
            }
        }
        Some(env)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub semiring: Semiring,
    pub grounds: Vec<String>,
    pub ops: Vec<OpDecl>,
}

impl Default for Signature {
    fn default() -> Self {
        Signature { semiring: Semiring::NAT, grounds: vec![], ops: vec![] }
    }
}

impl Signature {
    pub fn new(semiring: Semiring) -> Signature {
        Signature { semiring, grounds: vec![], ops: vec![] }
    }

    pub fn add_ground(&mut self, g: &str) {
        if !self.has_ground(g) {
            self.grounds.push(g.to_string());
        }
    }

    pub fn has_ground(&self, g: &str) -> bool {
        self.grounds.iter().any(|h| h == g)
    }

    pub fn add_op(&mut self, decl: OpDecl) -> Result<(), SignatureError> {
        if decl.args.is_empty() {
            return Err(SignatureError::ZeroArity(decl.name));
        }
        let mut gs = Vec::new();
        decl.args.iter().chain(std::iter::once(&decl.result)).for_each(|s| s.grounds(&mut gs));
        if let Some(g) = gs.into_iter().find(|g| !self.has_ground(g)) {
            return Err(SignatureError::UnknownGround(g));
        }
        self.ops.push(decl);
        Ok(())
    }

    /// Convenience: a plain, unindexed symbol with concrete argument types.
    pub fn add_simple_op(
        &mut self,
        sym: &OpSym,
        args: &[TypeExpr],
        result: &TypeExpr,
    ) -> Result<(), SignatureError> {
        let lit = sym.literal_index().ok_or_else(|| SignatureError::SymbolicIndex(sym.name.clone()))?;
        self.add_op(OpDecl {
            name: sym.name.clone(),
            pattern: lit.into_iter().map(IndexPat::Fixed).collect(),
            args: args.iter().map(to_sort).collect(),
            result: to_sort(result),
        })
    }

    /// Argument and result types of an operation symbol.
    pub fn resolve(&self, sym: &OpSym) -> Result<(Vec<TypeExpr>, TypeExpr), SignatureError> {
        let index =
            sym.literal_index().ok_or_else(|| SignatureError::SymbolicIndex(sym.to_string()))?;
        let mut any = false;
        for d in self.ops.iter().filter(|d| d.name == sym.name) {
            any = true;
            if let Some(env) = d.bind(&index) {
                let args =
                    d.args.iter().map(|a| a.instantiate(&env)).collect::<Result<Vec<_>, _>>()?;
                let res = d.result.instantiate(&env)?;
                for g in grades_of(&res).into_iter().chain(args.iter().flat_map(grades_of)) {
                    self.semiring
                        .check(g)
                        .map_err(|_| SignatureError::WrongSemiring(g, self.semiring.kind))?;
                }
                return Ok((args, res));
            }
        }
        if any {
            Err(SignatureError::NoMatchingIndex {
                name: sym.name.clone(),
                index: index.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(", "),
            })
        } else {
            Err(SignatureError::UnknownOp(sym.to_string()))
        }
    }
}

fn grades_of(t: &TypeExpr) -> Vec<Grade> {
    match t {
        TypeExpr::Ground(_) | TypeExpr::Unit => vec![],
        TypeExpr::Tensor(a, b) | TypeExpr::Lolli(a, b) => {
            let mut v = grades_of(a);
            v.extend(grades_of(b));
            v
        }
        TypeExpr::Bang(g, a) => {
            let mut v = vec![*g];
            v.extend(grades_of(a));
            v
        }
    }
}

pub fn to_sort(t: &TypeExpr) -> SortType {
    match t {
        TypeExpr::Ground(g) => SortType::Ground(g.clone()),
        TypeExpr::Unit => SortType::Unit,
        TypeExpr::Tensor(a, b) => SortType::Tensor(Box::new(to_sort(a)), Box::new(to_sort(b))),
        TypeExpr::Lolli(a, b) => SortType::Lolli(Box::new(to_sort(a)), Box::new(to_sort(b))),
        TypeExpr::Bang(g, a) => SortType::Bang(GradeRef::Lit(*g), Box::new(to_sort(a))),
    }
}
