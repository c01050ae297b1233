//! Denotational semantics in finite metric spaces.
//!
//! Types denote finite spaces: `I` is a point, `A * B` the product with the
//! sum metric, `A -o B` the non-expansive maps with the sup metric, and
//! `!r A` the carrier of `A` with distances scaled by `r` (a single point
//! when `r = 0`). Carriers are materialized lazily; function spaces are
//! enumerated only when a term quantifies over them.

pub mod laws;

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::rc::Rc;
use std::sync::Arc;

use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::bound::{Bound, BoundError};
use crate::quantale::{Ext, Grade, Rat};
use crate::syntax::{Name, Term, TypeExpr};
use crate::typecheck::Derivation;
use crate::vequation::VEquation;

pub const DEFAULT_GUARD: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("no interpretation for ground type `{0}`")]
    UnknownGround(String),
    #[error("no interpretation for operation `{0}`")]
    UnknownOp(String),
    #[error("enumerating {what} needs {size} candidates, above the guard {guard}")]
    Guard { what: String, size: u128, guard: u128 },
    #[error("map is not non-expansive: {0}")]
    NotNonExpansive(String),
    #[error("value {point} is not an element of {ty}")]
    BadPoint { point: String, ty: String },
    #[error("maps have different domains or codomains")]
    Domain,
    #[error("invalid space: {0}")]
    BadSpace(String),
    #[error(transparent)]
    Bound(#[from] BoundError),
}

pub type MResult<T> = Result<T, ModelError>;

/// An element of a denoted space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Point {
    Unit,
    Atom(u32),
    Pair(Box<Point>, Box<Point>),
    /// Table over the domain carrier, in carrier order.
    Fun(Rc<[Point]>),
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Unit => f.write_str("*"),
            Point::Atom(i) => write!(f, "{}", i),
            Point::Pair(a, b) => write!(f, "({}, {})", a, b),
            Point::Fun(t) => {
                f.write_str("[")?;
                for (i, p) in t.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{}", p)?;
                }
                f.write_str("]")
            }
        }
    }
}

/// A ground space: points `0..n` with a distance matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundSpace {
    pub dist: Vec<Vec<Ext>>,
}

impl GroundSpace {
    pub fn line(n: u32) -> GroundSpace {
        let dist = (0..=n)
            .map(|i| (0..=n).map(|j| Ext::int((i as i64 - j as i64).abs())).collect())
            .collect();
        GroundSpace { dist }
    }

    /// Checks zero self-distance, separation and the triangle inequality.
    pub fn validate(&self, symmetric: bool) -> MResult<()> {
        let n = self.dist.len();
        for (i, row) in self.dist.iter().enumerate() {
            if row.len() != n {
                return Err(ModelError::BadSpace(format!("row {} has {} entries, expected {}", i, row.len(), n)));
            }
            for (j, d) in row.iter().enumerate() {
                if let Ext::Fin(r) = d {
                    if r.is_negative() {
                        return Err(ModelError::BadSpace(format!("negative distance at ({}, {})", i, j)));
                    }
                }
                if (i == j) != (*d == Ext::zero()) {
                    return Err(ModelError::BadSpace(format!("d({}, {}) = {} breaks separation", i, j, d)));
                }
                if symmetric && self.dist[j][i] != *d {
                    return Err(ModelError::BadSpace(format!("d({}, {}) is not symmetric", i, j)));
                }
                for k in 0..n {
                    if !d.num_le(&self.dist[i][k].add(self.dist[k][j])) {
                        return Err(ModelError::BadSpace(format!("triangle fails at ({}, {}, {})", i, k, j)));
                    }
                }
            }
        }
        Ok(())
    }
}

pub type OpFn = Arc<dyn Fn(&[Rat], &[Point]) -> MResult<Point> + Send + Sync>;

#[derive(Clone)]
pub struct Model {
    pub grounds: BTreeMap<String, GroundSpace>,
    pub ops: BTreeMap<String, OpFn>,
    pub guard: u128,
    carriers: RefCell<HashMap<TypeExpr, Rc<Carrier>>>,
}

impl fmt::Debug for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Model")
            .field("grounds", &self.grounds.keys().collect::<Vec<_>>())
            .field("ops", &self.ops.keys().collect::<Vec<_>>())
            .field("guard", &self.guard)
            .finish()
    }
}

#[derive(Debug)]
pub struct Carrier {
    pub points: Vec<Point>,
    index: HashMap<Point, usize>,
}

impl Carrier {
    fn new(points: Vec<Point>) -> Carrier {
        let index = points.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        Carrier { points, index }
    }

    pub fn position(&self, p: &Point) -> Option<usize> {
        self.index.get(p).copied()
    }
}

fn atom(p: &Point) -> MResult<u32> {
    match p {
        Point::Atom(i) => Ok(*i),
        _ => Err(ModelError::BadPoint { point: p.to_string(), ty: "ground".into() }),
    }
}

fn scale(r: Grade, d: Ext) -> Ext {
    match (r, d) {
        (_, Ext::Inf) => Ext::Inf,
        (Grade::Nat(n), Ext::Fin(x)) => Ext::Fin(x * Rat::from_integer(n as i64)),
        (Grade::Inf, Ext::Fin(x)) if x.is_zero() => Ext::zero(),
        (Grade::Inf, _) => Ext::Inf,
    }
}

impl Model {
    pub fn new() -> Model {
        Model { grounds: BTreeMap::new(), ops: BTreeMap::new(), guard: DEFAULT_GUARD, carriers: RefCell::default() }
    }

    pub fn with_guard(mut self, guard: u128) -> Model {
        self.guard = guard;
        self.carriers.borrow_mut().clear();
        self
    }

    /// Ground `X = {0..n}` with `|i - j|`, saturating `wait[k]`, and the
    /// helper symbols `tick : I -> X` (the point 0), `drop : X -> I` and
    /// `later : X, X -> X` (maximum).
    pub fn timed(n: u32) -> Model {
        let mut m = Model::new();
        m.grounds.insert("X".into(), GroundSpace::line(n));
        m.ops.insert(
            "wait".into(),
            Arc::new(move |idx, args| {
                let k = idx.first().and_then(|r| r.to_integer().to_u32()).unwrap_or(0);
                Ok(Point::Atom(atom(&args[0])?.saturating_add(k).min(n)))
            }),
        );
        m.ops.insert("tick".into(), Arc::new(|_, _| Ok(Point::Atom(0))));
        m.ops.insert("drop".into(), Arc::new(|_, _| Ok(Point::Unit)));
        m.ops.insert("later".into(), Arc::new(|_, args| Ok(Point::Atom(atom(&args[0])?.max(atom(&args[1])?)))));
        m
    }

    pub fn carrier(&self, ty: &TypeExpr) -> MResult<Rc<Carrier>> {
        if let Some(c) = self.carriers.borrow().get(ty) {
            return Ok(c.clone());
        }
        let points = match ty {
            TypeExpr::Unit | TypeExpr::Bang(Grade::Nat(0), _) => vec![Point::Unit],
            TypeExpr::Ground(g) => {
                let s = self.grounds.get(g).ok_or_else(|| ModelError::UnknownGround(g.clone()))?;
                (0..s.dist.len() as u32).map(Point::Atom).collect()
            }
            TypeExpr::Bang(_, a) => self.carrier(a)?.points.clone(),
            TypeExpr::Tensor(a, b) => {
                let (ca, cb) = (self.carrier(a)?, self.carrier(b)?);
                self.check_guard(ty, ca.points.len() as u128 * cb.points.len() as u128)?;
                let mut out = Vec::new();
                for x in &ca.points {
                    for y in &cb.points {
                        out.push(Point::Pair(Box::new(x.clone()), Box::new(y.clone())));
                    }
                }
                out
            }
            TypeExpr::Lolli(a, b) => self.nonexpansive_maps(ty, a, b)?,
        };
        let c = Rc::new(Carrier::new(points));
        self.carriers.borrow_mut().insert(ty.clone(), c.clone());
        Ok(c)
    }

    fn check_guard(&self, ty: &TypeExpr, size: u128) -> MResult<()> {
        if size > self.guard {
            return Err(ModelError::Guard { what: ty.to_string(), size, guard: self.guard });
        }
        Ok(())
    }

    fn nonexpansive_maps(&self, ty: &TypeExpr, a: &TypeExpr, b: &TypeExpr) -> MResult<Vec<Point>> {
        let (ca, cb) = (self.carrier(a)?, self.carrier(b)?);
        let size = (cb.points.len() as u128).checked_pow(ca.points.len() as u32).unwrap_or(u128::MAX);
        self.check_guard(ty, size)?;
        let n = ca.points.len();
        let da: Vec<Vec<Ext>> = ca
            .points
            .iter()
            .map(|p| ca.points.iter().map(|q| self.dist(a, p, q)).collect::<MResult<_>>())
            .collect::<MResult<_>>()?;
        let db: Vec<Vec<Ext>> = cb
            .points
            .iter()
            .map(|p| cb.points.iter().map(|q| self.dist(b, p, q)).collect::<MResult<_>>())
            .collect::<MResult<_>>()?;
        let mut out = Vec::new();
        let mut table = vec![0usize; n];
        fn go(i: usize, n: usize, m: usize, table: &mut Vec<usize>, da: &[Vec<Ext>], db: &[Vec<Ext>], out: &mut Vec<Vec<usize>>) {
            if i == n {
                out.push(table.clone());
                return;
            }
            for y in 0..m {
                let ok = (0..i).all(|j| db[y][table[j]].num_le(&da[i][j]) && db[table[j]][y].num_le(&da[j][i]));
                if ok {
                    table[i] = y;
                    go(i + 1, n, m, table, da, db, out);
                }
            }
        }
        let mut tables = Vec::new();
        go(0, n, cb.points.len(), &mut table, &da, &db, &mut tables);
        for t in tables {
            out.push(Point::Fun(t.into_iter().map(|y| cb.points[y].clone()).collect()));
        }
        Ok(out)
    }

    /// Distance between two elements of the space denoted by `ty`.
    pub fn dist(&self, ty: &TypeExpr, p: &Point, q: &Point) -> MResult<Ext> {
        Ok(match (ty, p, q) {
            (TypeExpr::Unit, _, _) | (TypeExpr::Bang(Grade::Nat(0), _), _, _) => Ext::zero(),
            (TypeExpr::Ground(g), _, _) => {
                let s = self.grounds.get(g).ok_or_else(|| ModelError::UnknownGround(g.clone()))?;
                let (i, j) = (atom(p)? as usize, atom(q)? as usize);
                let bad = || ModelError::BadPoint { point: format!("{}/{}", p, q), ty: g.clone() };
                *s.dist.get(i).and_then(|r| r.get(j)).ok_or_else(bad)?
            }
            (TypeExpr::Bang(r, a), _, _) => scale(*r, self.dist(a, p, q)?),
            (TypeExpr::Tensor(a, b), Point::Pair(x1, y1), Point::Pair(x2, y2)) => {
                self.dist(a, x1, x2)?.add(self.dist(b, y1, y2)?)
            }
            (TypeExpr::Lolli(a, b), Point::Fun(f), Point::Fun(g)) => {
                let ca = self.carrier(a)?;
                let mut sup = Ext::zero();
                for i in 0..ca.points.len() {
                    sup = sup.max(self.dist(b, &f[i], &g[i])?);
                }
                sup
            }
            _ => return Err(ModelError::BadPoint { point: format!("{} or {}", p, q), ty: ty.to_string() }),
        })
    }

    fn apply(&self, dom: &TypeExpr, f: &Point, a: &Point) -> MResult<Point> {
        let ca = self.carrier(dom)?;
        let i = ca.position(a).ok_or_else(|| ModelError::BadPoint { point: a.to_string(), ty: dom.to_string() })?;
        match f {
            Point::Fun(t) => Ok(t[i].clone()),
            _ => Err(ModelError::BadPoint { point: f.to_string(), ty: "function".into() }),
        }
    }

    /// Value of the derivation's term under an assignment of its context.
    pub fn eval(&self, d: &Derivation, env: &BTreeMap<Name, Point>) -> MResult<Point> {
        let p = &d.premises;
        match &d.term {
            Term::Var(x) => env.get(x).cloned().ok_or_else(|| ModelError::BadPoint { point: x.clone(), ty: "environment".into() }),
            Term::Star => Ok(Point::Unit),
            Term::Op(sym, _) => {
                let f = self.ops.get(&sym.name).ok_or_else(|| ModelError::UnknownOp(sym.name.clone()))?;
                let idx = sym.literal_index().ok_or_else(|| ModelError::UnknownOp(sym.to_string()))?;
                let args = p.iter().map(|c| self.eval(c, env)).collect::<MResult<Vec<_>>>()?;
                f(&idx, &args)
            }
            Term::UnitLet(..) | Term::Discard(..) => self.eval(&p[1], env),
            Term::Pair(..) => Ok(Point::Pair(Box::new(self.eval(&p[0], env)?), Box::new(self.eval(&p[1], env)?))),
            Term::PairLet(_, x, y, _) => match self.eval(&p[0], env)? {
                Point::Pair(a, b) => {
                    let mut env = env.clone();
                    env.insert(x.clone(), *a);
                    env.insert(y.clone(), *b);
                    self.eval(&p[1], &env)
                }
                v => Err(ModelError::BadPoint { point: v.to_string(), ty: p[0].ty.to_string() }),
            },
            Term::Lam(x, a, _) => {
                let ca = self.carrier(a)?;
                let mut env = env.clone();
                let mut table = Vec::with_capacity(ca.points.len());
                for pt in &ca.points {
                    env.insert(x.clone(), pt.clone());
                    table.push(self.eval(&p[0], &env)?);
                }
                Ok(Point::Fun(table.into()))
            }
            Term::App(..) => {
                let f = self.eval(&p[0], env)?;
                let a = self.eval(&p[1], env)?;
                self.apply(&p[1].ty, &f, &a)
            }
            Term::Promote(pr) => {
                if pr.grade == Grade::Nat(0) {
                    return Ok(Point::Unit);
                }
                let mut inner = BTreeMap::new();
                for (i, x) in pr.binders.iter().enumerate() {
                    let v = self.eval(&p[i], env)?;
                    let v = if pr.grades[i] == Grade::Nat(0) { Point::Unit } else { v };
                    inner.insert(x.clone(), v);
                }
                self.eval(&p[pr.args.len()], &inner)
            }
            Term::Derelict(_) => self.eval(&p[0], env),
            Term::Copy(c) => {
                let v = self.eval(&p[0], env)?;
                let part = |g: Grade| if g == Grade::Nat(0) { Point::Unit } else { v.clone() };
                let mut env = env.clone();
                env.insert(c.x.clone(), part(c.left));
                env.insert(c.y.clone(), part(c.right));
                self.eval(&p[1], &env)
            }
        }
    }

    /// The map `⟦Γ⟧ -> ⟦A⟧` of a derivation, checked to be non-expansive.
    pub fn interp(&self, d: &Derivation) -> MResult<MetMap> {
        let types: Vec<TypeExpr> = d.context.vars.iter().map(|(_, t)| t.clone()).collect();
        let carriers = types.iter().map(|t| self.carrier(t)).collect::<MResult<Vec<_>>>()?;
        let total = carriers.iter().try_fold(1u128, |acc, c| acc.checked_mul(c.points.len() as u128)).unwrap_or(u128::MAX);
        if total > self.guard {
            return Err(ModelError::Guard { what: format!("context [{}]", d.context), size: total, guard: self.guard });
        }
        let mut inputs: Vec<Vec<Point>> = vec![vec![]];
        for c in &carriers {
            inputs = inputs
                .into_iter()
                .flat_map(|prefix| {
                    c.points.iter().map(move |p| {
                        let mut v = prefix.clone();
                        v.push(p.clone());
                        v
                    })
                })
                .collect();
        }
        let mut outputs = Vec::with_capacity(inputs.len());
        for input in &inputs {
            let env: BTreeMap<Name, Point> =
                d.context.vars.iter().map(|(x, _)| x.clone()).zip(input.iter().cloned()).collect();
            outputs.push(self.eval(d, &env)?);
        }
        let map = MetMap { ctx: types, ty: d.ty.clone(), inputs, outputs };
        self.check_nonexpansive(&map)?;
        Ok(map)
    }

    pub fn env_dist(&self, types: &[TypeExpr], a: &[Point], b: &[Point]) -> MResult<Ext> {
        let mut total = Ext::zero();
        for ((t, p), q) in types.iter().zip(a).zip(b) {
            total = total.add(self.dist(t, p, q)?);
        }
        Ok(total)
    }

    pub fn check_nonexpansive(&self, m: &MetMap) -> MResult<()> {
        for i in 0..m.inputs.len() {
            for j in 0..m.inputs.len() {
                if i == j {
                    continue;
                }
                let din = self.env_dist(&m.ctx, &m.inputs[i], &m.inputs[j])?;
                let dout = self.dist(&m.ty, &m.outputs[i], &m.outputs[j])?;
                if !dout.num_le(&din) {
                    return Err(ModelError::NotNonExpansive(format!(
                        "inputs at distance {} map to outputs at distance {}",
                        din, dout
                    )));
                }
            }
        }
        Ok(())
    }

    /// `sup_γ d(f γ, g γ)`.
    pub fn hom_distance(&self, f: &MetMap, g: &MetMap) -> MResult<Ext> {
        if f.ctx != g.ctx || f.ty != g.ty || f.inputs != g.inputs {
            return Err(ModelError::Domain);
        }
        let mut sup = Ext::zero();
        for (a, b) in f.outputs.iter().zip(&g.outputs) {
            sup = sup.max(self.dist(&f.ty, a, b)?);
        }
        Ok(sup)
    }

    /// Model distance between the two sides of an equation.
    pub fn equation_distance(&self, sig: &crate::syntax::Signature, eq: &VEquation) -> MResult<Ext> {
        let dl = crate::typecheck::infer(sig, &eq.ctx, &eq.lhs)
            .map_err(|e| ModelError::BadPoint { point: e.to_string(), ty: eq.ty.to_string() })?;
        let dr = crate::typecheck::infer(sig, &eq.ctx, &eq.rhs)
            .map_err(|e| ModelError::BadPoint { point: e.to_string(), ty: eq.ty.to_string() })?;
        self.hom_distance(&self.interp(&dl)?, &self.interp(&dr)?)
    }

    /// Whether the model satisfies `eq`: distance at most the bound.
    pub fn check_axiom(&self, sig: &crate::syntax::Signature, eq: &VEquation) -> MResult<AxiomCheck> {
        let distance = self.equation_distance(sig, eq)?;
        let ok = match distance {
            Ext::Inf => eq.bound.exact == crate::quantale::QValue::Dist(Ext::Inf),
            Ext::Fin(r) => Bound::dist(r).num_cmp(&eq.bound)? != std::cmp::Ordering::Greater,
        };
        Ok(AxiomCheck { distance, bound: eq.bound.clone(), ok })
    }
}

impl Default for Model {
    fn default() -> Self {
        Model::new()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomCheck {
    pub distance: Ext,
    pub bound: Bound,
    pub ok: bool,
}

/// A map given by its full table over the context carrier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetMap {
    pub ctx: Vec<TypeExpr>,
    pub ty: TypeExpr,
    pub inputs: Vec<Vec<Point>>,
    pub outputs: Vec<Point>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_context, parse_term, OpSym, Signature};
    use crate::typecheck::infer;

    fn sig() -> Signature {
        let mut s = Signature::default();
        s.add_ground("X");
        for n in 0..4 {
            s.add_simple_op(&OpSym::nat("wait", &[n]), &[TypeExpr::ground("X")], &TypeExpr::ground("X")).unwrap();
        }
        s
    }

    fn map(m: &Model, ctx: &str, t: &str) -> MetMap {
        m.interp(&infer(&sig(), &parse_context(ctx).unwrap(), &parse_term(t).unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn wait_saturates() {
        let m = Model::timed(4);
        let f = map(&m, "x : X", "wait_1(x)");
        assert_eq!(f.outputs[3], Point::Atom(4));
        assert_eq!(f.outputs[4], Point::Atom(4));
    }

    #[test]
    fn lambda_distances() {
        let m = Model::timed(32);
        let f = map(&m, "", "fn x : X => wait_1(x)");
        let g = map(&m, "", "fn x : X => wait_2(x)");
        assert_eq!(m.hom_distance(&f, &g).unwrap(), Ext::int(1));
        let f2 = map(&m, "", "!2(fn x : X => wait_1(x))");
        let g2 = map(&m, "", "!2(fn x : X => wait_2(x))");
        assert_eq!(m.hom_distance(&f2, &g2).unwrap(), Ext::int(2));
    }

    #[test]
    fn bang_zero_is_a_point() {
        let m = Model::timed(3);
        let ty = TypeExpr::nbang(0, TypeExpr::ground("X"));
        assert_eq!(m.carrier(&ty).unwrap().points, vec![Point::Unit]);
        let two = TypeExpr::nbang(2, TypeExpr::ground("X"));
        assert_eq!(m.dist(&two, &Point::Atom(0), &Point::Atom(3)).unwrap(), Ext::int(6));
    }

    #[test]
    fn axiom_checks() {
        let m = Model::timed(32);
        let eq = |l: &str, r: &str, b: i64| VEquation {
            ctx: parse_context("x : X").unwrap(),
            lhs: parse_term(l).unwrap(),
            rhs: parse_term(r).unwrap(),
            ty: TypeExpr::ground("X"),
            bound: Bound::dist(Rat::from_integer(b)),
        };
        assert!(m.check_axiom(&sig(), &eq("wait_0(x)", "x", 0)).unwrap().ok);
        assert!(m.check_axiom(&sig(), &eq("wait_1(wait_2(x))", "wait_3(x)", 0)).unwrap().ok);
        let bad = m.check_axiom(&sig(), &eq("wait_1(x)", "wait_2(x)", 0)).unwrap();
        assert!(!bad.ok);
        assert_eq!(bad.distance, Ext::int(1));
    }

    #[test]
    fn function_space_guard() {
        let m = Model::timed(32).with_guard(1000);
        let ty = TypeExpr::lolli(TypeExpr::ground("X"), TypeExpr::ground("X"));
        assert!(matches!(m.carrier(&ty), Err(ModelError::Guard { .. })));
        let small = Model::timed(2);
        // Non-expansive self-maps of a 3-point path.
        assert_eq!(small.carrier(&ty).unwrap().points.len(), 17);
    }
}
