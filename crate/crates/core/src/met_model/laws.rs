//! The graded exponential on finite metric spaces, built concretely as the
//! diagonal of a tensor power, and a brute-force audit of its structure maps.

use std::collections::BTreeMap;
use std::fmt;

use crate::quantale::{Ext, Rat};

use super::{GroundSpace, MResult, ModelError};

/// A point label: a base point or a tuple of labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Lbl {
    Base(usize),
    Tup(Vec<Lbl>),
}

impl fmt::Display for Lbl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lbl::Base(i) => write!(f, "{}", i),
            Lbl::Tup(xs) => {
                f.write_str("(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{}", x)?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinSpace {
    pub points: Vec<Lbl>,
    pub dist: Vec<Vec<Ext>>,
}

impl FinSpace {
    pub fn from_ground(g: &GroundSpace) -> FinSpace {
        FinSpace { points: (0..g.dist.len()).map(Lbl::Base).collect(), dist: g.dist.clone() }
    }

    pub fn from_matrix(rows: &[&[i64]]) -> MResult<FinSpace> {
        let g = GroundSpace { dist: rows.iter().map(|r| r.iter().map(|&x| Ext::int(x)).collect()).collect() };
        g.validate(true)?;
        Ok(FinSpace::from_ground(&g))
    }

    pub fn unit() -> FinSpace {
        FinSpace { points: vec![Lbl::Tup(vec![])], dist: vec![vec![Ext::zero()]] }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index_of(&self, p: &Lbl) -> Option<usize> {
        self.points.iter().position(|q| q == p)
    }

    pub fn d(&self, p: &Lbl, q: &Lbl) -> MResult<Ext> {
        let bad = |x: &Lbl| ModelError::BadPoint { point: x.to_string(), ty: "finite space".into() };
        let i = self.index_of(p).ok_or_else(|| bad(p))?;
        let j = self.index_of(q).ok_or_else(|| bad(q))?;
        Ok(self.dist[i][j])
    }

    /// Product with the sum metric, points labelled as pairs.
    pub fn tensor(&self, other: &FinSpace) -> FinSpace {
        let mut points = Vec::new();
        let mut idx = Vec::new();
        for (i, p) in self.points.iter().enumerate() {
            for (j, q) in other.points.iter().enumerate() {
                points.push(Lbl::Tup(vec![p.clone(), q.clone()]));
                idx.push((i, j));
            }
        }
        let dist = idx
            .iter()
            .map(|&(i, j)| idx.iter().map(|&(k, l)| self.dist[i][k].add(other.dist[j][l])).collect())
            .collect();
        FinSpace { points, dist }
    }

    /// `X^n` with the sum metric, points labelled as `n`-tuples.
    pub fn tensor_power(&self, n: usize) -> FinSpace {
        let mut tuples: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..n {
            tuples = tuples
                .into_iter()
                .flat_map(|t| {
                    (0..self.len()).map(move |i| {
                        let mut t = t.clone();
                        t.push(i);
                        t
                    })
                })
                .collect();
        }
        self.tuple_space(&tuples)
    }

    fn tuple_space(&self, tuples: &[Vec<usize>]) -> FinSpace {
        let points = tuples.iter().map(|t| Lbl::Tup(t.iter().map(|&i| self.points[i].clone()).collect())).collect();
        let dist = tuples
            .iter()
            .map(|a| {
                tuples
                    .iter()
                    .map(|b| a.iter().zip(b).fold(Ext::zero(), |acc, (&i, &j)| acc.add(self.dist[i][j])))
                    .collect()
            })
            .collect();
        FinSpace { points, dist }
    }

    /// The exponential `E_n X`: constant `n`-tuples inside `X^n`.
    pub fn exp(&self, n: usize) -> FinSpace {
        if n == 0 {
            return FinSpace::unit();
        }
        let tuples: Vec<Vec<usize>> = (0..self.len()).map(|i| vec![i; n]).collect();
        self.tuple_space(&tuples)
    }

    /// Points of `X^n` fixed by every permutation of coordinates.
    pub fn symmetric_part(&self, n: usize) -> FinSpace {
        let full = self.tensor_power(n);
        let perms = permutations(n);
        let keep: Vec<usize> = (0..full.len())
            .filter(|&i| match &full.points[i] {
                Lbl::Tup(xs) => perms.iter().all(|p| p.iter().map(|&k| &xs[k]).eq(xs.iter())),
                Lbl::Base(_) => false,
            })
            .collect();
        FinSpace {
            points: keep.iter().map(|&i| full.points[i].clone()).collect(),
            dist: keep.iter().map(|&i| keep.iter().map(|&j| full.dist[i][j]).collect()).collect(),
        }
    }

    /// `X` with every distance multiplied by `n`.
    pub fn dilate(&self, n: usize) -> FinSpace {
        let k = Rat::from_integer(n as i64);
        let dist = self
            .dist
            .iter()
            .map(|r| r.iter().map(|d| match d {
                Ext::Fin(x) => Ext::Fin(x * k),
                Ext::Inf if n == 0 => Ext::zero(),
                Ext::Inf => Ext::Inf,
            }).collect())
            .collect();
        FinSpace { points: self.points.clone(), dist }
    }

    pub fn is_metric(&self) -> bool {
        let g = GroundSpace { dist: self.dist.clone() };
        g.validate(true).is_ok()
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// A map between finite spaces, given pointwise on labels.
pub type LblMap<'a> = dyn Fn(&Lbl) -> Lbl + 'a;

fn tup(p: &Lbl) -> &[Lbl] {
    match p {
        Lbl::Tup(xs) => xs,
        Lbl::Base(_) => &[],
    }
}

fn pair(a: Lbl, b: Lbl) -> Lbl {
    Lbl::Tup(vec![a, b])
}

/// `ε : E_1 X -> X`.
pub fn counit(p: &Lbl) -> Lbl {
    tup(p)[0].clone()
}

/// `δ^{m,n} : E_{mn} X -> E_m E_n X`.
pub fn comult(m: usize, n: usize, p: &Lbl) -> Lbl {
    let xs = tup(p);
    if n == 0 {
        return Lbl::Tup(vec![Lbl::Tup(vec![]); m]);
    }
    Lbl::Tup(xs.chunks(n).map(|c| Lbl::Tup(c.to_vec())).take(m).collect())
}

/// `e : E_0 X -> I`.
pub fn weaken(_: &Lbl) -> Lbl {
    Lbl::Tup(vec![])
}

/// `d^{m,n} : E_{m+n} X -> E_m X (x) E_n X`.
pub fn split(m: usize, p: &Lbl) -> Lbl {
    let xs = tup(p);
    pair(Lbl::Tup(xs[..m].to_vec()), Lbl::Tup(xs[m..].to_vec()))
}

/// `E_n f`, componentwise.
pub fn lift(f: &LblMap<'_>, p: &Lbl) -> Lbl {
    Lbl::Tup(tup(p).iter().map(f).collect())
}

fn tensor_map(f: &LblMap<'_>, g: &LblMap<'_>, p: &Lbl) -> Lbl {
    let xs = tup(p);
    pair(f(&xs[0]), g(&xs[1]))
}

fn swap(p: &Lbl) -> Lbl {
    let xs = tup(p);
    pair(xs[1].clone(), xs[0].clone())
}

fn assoc(p: &Lbl) -> Lbl {
    let xs = tup(p);
    let ab = tup(&xs[0]);
    pair(ab[0].clone(), pair(ab[1].clone(), xs[1].clone()))
}

fn unitor_inv(p: &Lbl) -> Lbl {
    pair(Lbl::Tup(vec![]), p.clone())
}

/// Checks that `f : src -> dst` lands in `dst` and is non-expansive.
pub fn check_map(src: &FinSpace, dst: &FinSpace, f: &LblMap<'_>) -> Result<(), String> {
    let imgs: Vec<Lbl> = src.points.iter().map(f).collect();
    for (p, q) in src.points.iter().zip(&imgs) {
        if dst.index_of(q).is_none() {
            return Err(format!("{} maps to {}, outside the codomain", p, q));
        }
    }
    for i in 0..src.len() {
        for j in 0..src.len() {
            let dout = dst.d(&imgs[i], &imgs[j]).map_err(|e| e.to_string())?;
            if !dout.num_le(&src.dist[i][j]) {
                return Err(format!("{} and {} move from {} to {}", src.points[i], src.points[j], src.dist[i][j], dout));
            }
        }
    }
    Ok(())
}

fn agree(src: &FinSpace, f: &LblMap<'_>, g: &LblMap<'_>) -> Result<(), String> {
    for p in &src.points {
        let (a, b) = (f(p), g(p));
        if a != b {
            return Err(format!("at {}: {} vs {}", p, a, b));
        }
    }
    Ok(())
}

/// All non-expansive maps `src -> dst`, as index tables.
pub fn nonexpansive_tables(src: &FinSpace, dst: &FinSpace) -> Vec<Vec<usize>> {
    fn go(i: usize, t: &mut Vec<usize>, src: &FinSpace, dst: &FinSpace, out: &mut Vec<Vec<usize>>) {
        if i == src.len() {
            out.push(t.clone());
            return;
        }
        for y in 0..dst.len() {
            if (0..i).all(|j| dst.dist[y][t[j]].num_le(&src.dist[i][j]) && dst.dist[t[j]][y].num_le(&src.dist[j][i])) {
                t.push(y);
                go(i + 1, t, src, dst, out);
                t.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(0, &mut Vec::new(), src, dst, &mut out);
    out
}

fn table_fn<'a>(src: &'a FinSpace, dst: &'a FinSpace, t: &'a [usize]) -> impl Fn(&Lbl) -> Lbl + 'a {
    move |p| dst.points[t[src.index_of(p).expect("point of source")]].clone()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LawRow {
    pub law: String,
    pub space: String,
    pub checked: usize,
    pub failure: Option<String>,
}

impl LawRow {
    pub fn ok(&self) -> bool {
        self.failure.is_none()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LawReport {
    pub rows: Vec<LawRow>,
    /// Observations that are not failures.
    pub notes: Vec<String>,
}

impl LawReport {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(LawRow::ok)
    }

    fn record(&mut self, law: &str, space: &str, checked: usize, r: Result<(), String>) {
        match self.rows.iter_mut().find(|row| row.law == law && row.space == space) {
            Some(row) => {
                row.checked += checked;
                if row.failure.is_none() {
                    row.failure = r.err();
                }
            }
            None => self.rows.push(LawRow { law: law.into(), space: space.into(), checked, failure: r.err() }),
        }
    }
}

/// The spaces the structural audit runs over.
pub fn standard_spaces() -> Vec<(String, FinSpace)> {
    let specs: Vec<(&str, Vec<Vec<i64>>)> = vec![
        ("point", vec![vec![0]]),
        ("two@1", vec![vec![0, 1], vec![1, 0]]),
        ("two@2", vec![vec![0, 2], vec![2, 0]]),
        ("path3", vec![vec![0, 1, 2], vec![1, 0, 1], vec![2, 1, 0]]),
        ("tri3", vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]),
        ("path4", vec![vec![0, 1, 2, 3], vec![1, 0, 1, 2], vec![2, 1, 0, 1], vec![3, 2, 1, 0]]),
        ("star4", vec![vec![0, 1, 1, 1], vec![1, 0, 2, 2], vec![1, 2, 0, 2], vec![1, 2, 2, 0]]),
    ];
    specs
        .into_iter()
        .map(|(name, rows)| {
            let refs: Vec<&[i64]> = rows.iter().map(|r| r.as_slice()).collect();
            (name.to_string(), FinSpace::from_matrix(&refs).expect("standard space is a metric"))
        })
        .collect()
}

/// Brute-force audit of the exponential's structure on each space, for
/// grades up to `max_grade`.
pub fn check_comonad_laws(spaces: &[(String, FinSpace)], max_grade: usize) -> LawReport {
    let mut rep = LawReport::default();
    let grades = 0..=max_grade;
    if spaces.iter().any(|(_, s)| s.len() > 1 && !s.dilate(0).is_metric()) {
        rep.notes.push(
            "E_0 is the one-point space; Dil_0 keeps the carrier at distance 0, so E_n = Dil_n is checked only for n >= 1".into(),
        );
    }
    for (name, x) in spaces {
        let name = name.as_str();
        let e = |n: usize| x.exp(n);

        for n in grades.clone() {
            if n <= 5 && x.len().pow(n as u32) <= 4096 {
                let sym = x.symmetric_part(n);
                let r = if n == 0 || sym == e(n) { Ok(()) } else { Err(format!("grade {}", n)) };
                rep.record("symmetric part is the diagonal", name, 1, r);
            }
            if n >= 1 {
                let en = e(n);
                let dil = x.dilate(n);
                let to = |p: &Lbl| Lbl::Tup(vec![p.clone(); n]);
                let r = check_map(&dil, &en, &to).and_then(|_| check_map(&en, &dil, &counit));
                rep.record("E_n is the n-dilation", name, 1, r);
            }
            rep.record("E_n is a metric space", name, 1, if e(n).is_metric() { Ok(()) } else { Err(format!("grade {}", n)) });
        }

        rep.record("counit", name, 1, check_map(&e(1), x, &counit));
        rep.record("weakening", name, 1, check_map(&e(0), &FinSpace::unit(), &weaken));

        for m in grades.clone() {
            // E_m ε ∘ δ^{m,1} = id and ε ∘ δ^{1,m} = id.
            let em = e(m);
            let delta = |p: &Lbl| comult(m, 1, p);
            let r = check_map(&em, &e(1).exp(m), &delta)
                .and_then(|_| agree(&em, &|p| lift(&counit, &comult(m, 1, p)), &|p| p.clone()));
            rep.record("counit law (left)", name, em.len(), r);
            let r = check_map(&em, &em.exp(1), &|p| comult(1, m, p))
                .and_then(|_| agree(&em, &|p| counit(&comult(1, m, p)), &|p| p.clone()));
            rep.record("counit law (right)", name, em.len(), r);

            for n in grades.clone() {
                let emn = e(m * n);
                rep.record("comultiplication", name, emn.len(), check_map(&emn, &e(n).exp(m), &|p| comult(m, n, p)));
                let emn_sum = e(m + n);
                let emxen = e(m).tensor(&e(n));
                rep.record("contraction", name, emn_sum.len(), check_map(&emn_sum, &emxen, &|p| split(m, p)));
                rep.record(
                    "contraction commutes",
                    name,
                    emn_sum.len(),
                    agree(&emn_sum, &|p| swap(&split(m, p)), &|p| split(n, p)),
                );
                if m + n <= max_grade {
                    let r = agree(
                        &e(n),
                        &|p| tensor_map(&weaken, &|q| q.clone(), &split(0, p)),
                        &unitor_inv,
                    );
                    rep.record("contraction unit", name, e(n).len(), r);
                }
                for k in grades.clone() {
                    if m * n * k > 2 * max_grade * max_grade {
                        continue;
                    }
                    let src = e(m * n * k);
                    let r = agree(
                        &src,
                        &|p| lift(&|q| comult(n, k, q), &comult(m, n * k, p)),
                        &|p| comult(m, n, &comult(m * n, k, p)),
                    );
                    rep.record("coassociativity", name, src.len(), r);

                    let src = e(m + n + k);
                    let r = agree(
                        &src,
                        &|p| assoc(&tensor_map(&|q| split(m, q), &|q| q.clone(), &split(m + n, p))),
                        &|p| tensor_map(&|q| q.clone(), &|q| split(n, q), &split(m, p)),
                    );
                    rep.record("contraction coassociativity", name, src.len(), r);

                    let src = e((m + n) * k);
                    let r = agree(
                        &src,
                        &|p| split(m, &comult(m + n, k, p)),
                        &|p| tensor_map(&|q| comult(m, k, q), &|q| comult(n, k, q), &split(m * k, p)),
                    );
                    rep.record("comultiplication distributes over contraction", name, src.len(), r);
                }
                let src = e(0);
                let r = agree(&src, &|p| weaken(&comult(0, n, p)), &weaken);
                rep.record("weakening after comultiplication", name, 1, r);
            }
        }
    }

    // Functoriality and Lipschitz lifting over maps between small spaces.
    let small: Vec<&(String, FinSpace)> = spaces.iter().filter(|(_, s)| s.len() <= 3).collect();
    for (an, a) in &small {
        for (bn, b) in &small {
            let fs = nonexpansive_tables(a, b);
            let label = format!("{}->{}", an, bn);
            for r in 0..=max_grade {
                let (ea, eb) = (a.exp(r), b.exp(r));
                for f in &fs {
                    let ff = table_fn(a, b, f);
                    rep.record("functoriality", &label, 1, check_map(&ea, &eb, &|p| lift(&ff, p)));
                }
                for f in &fs {
                    for g in &fs {
                        let (ff, gg) = (table_fn(a, b, f), table_fn(a, b, g));
                        let hom = a.points.iter().fold(Ext::zero(), |acc, p| acc.max(b.d(&ff(p), &gg(p)).unwrap()));
                        let lifted = ea.points.iter().fold(Ext::zero(), |acc, p| {
                            acc.max(eb.d(&lift(&ff, p), &lift(&gg, p)).unwrap())
                        });
                        let scaled = match hom {
                            Ext::Fin(h) => Ext::Fin(h * Rat::from_integer(r as i64)),
                            Ext::Inf => Ext::Inf,
                        };
                        let res = if scaled.num_le(&lifted) {
                            Ok(())
                        } else {
                            Err(format!("grade {}: {} > {}", r, scaled, lifted))
                        };
                        rep.record("lipschitz lifting", &label, 1, res);
                    }
                }
            }
            for (cn, c) in &small {
                if a.len() * b.len() * c.len() > 27 {
                    continue;
                }
                let _ = cn;
                let gs = nonexpansive_tables(b, c);
                for r in 0..=max_grade.min(3) {
                    let ea = a.exp(r);
                    for f in &fs {
                        for g in &gs {
                            let (ff, gg) = (table_fn(a, b, f), table_fn(b, c, g));
                            let res = agree(&ea, &|p| lift(&|q| gg(&ff(q)), p), &|p| lift(&gg, &lift(&ff, p)));
                            rep.record("functoriality (composition)", &label, 1, res);
                        }
                    }
                }
            }
        }
    }
    rep
}

/// Tally of rows per law, for compact reporting.
pub fn summarize(rep: &LawReport) -> BTreeMap<String, (usize, usize)> {
    let mut out: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for row in &rep.rows {
        let e = out.entry(row.law.clone()).or_default();
        e.0 += row.checked;
        if !row.ok() {
            e.1 += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_is_dilation() {
        let x = FinSpace::from_matrix(&[&[0, 1, 2], &[1, 0, 1], &[2, 1, 0]]).unwrap();
        let e3 = x.exp(3);
        assert_eq!(e3.dist[0][2], Ext::int(6));
        assert_eq!(x.symmetric_part(3), e3);
        assert_eq!(x.exp(0).len(), 1);
        // Dilation by zero collapses distances without merging points.
        assert!(!x.dilate(0).is_metric());
    }

    #[test]
    fn standard_audit_passes() {
        let rep = check_comonad_laws(&standard_spaces(), 3);
        let bad: Vec<_> = rep.rows.iter().filter(|r| !r.ok()).collect();
        assert!(bad.is_empty(), "{:?}", bad);
        assert!(summarize(&rep).len() >= 12);
        assert_eq!(rep.notes.len(), 1);
    }

    #[test]
    fn expansive_map_detected() {
        let x = FinSpace::from_matrix(&[&[0, 1], &[1, 0]]).unwrap();
        let y = x.dilate(2);
        assert!(check_map(&x, &y, &|p| p.clone()).is_err());
    }
}
