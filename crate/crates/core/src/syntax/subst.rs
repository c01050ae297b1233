//! Free variables, α-equivalence and capture-avoiding substitution.

use std::collections::{BTreeMap, BTreeSet};

use super::{Name, Term};

/// Free variable occurrences, left to right, with repetitions.
pub fn free_vars(t: &Term) -> Vec<Name> {
    let mut out = Vec::new();
    fn go(t: &Term, bound: &mut Vec<Name>, out: &mut Vec<Name>) {
        if let Term::Var(x) = t {
            if !bound.contains(x) {
                out.push(x.clone());
            }
            return;
        }
        for (i, c) in t.children().into_iter().enumerate() {
            let bs = t.binders_for_child(i);
            let n = bs.len();
            bound.extend(bs.into_iter().cloned());
            go(c, bound, out);
            bound.truncate(bound.len() - n);
        }
    }
    go(t, &mut Vec::new(), &mut out);
    out
}

pub fn fv_set(t: &Term) -> BTreeSet<Name> {
    free_vars(t).into_iter().collect()
}

/// Every variable name occurring in the term, bound or free.
pub fn all_names(t: &Term) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    fn go(t: &Term, out: &mut BTreeSet<Name>) {
        if let Term::Var(x) = t {
            out.insert(x.clone());
        }
        for i in 0..t.children().len() {
            out.extend(t.binders_for_child(i).into_iter().cloned());
        }
        t.children().into_iter().for_each(|c| go(c, out));
    }
    go(t, &mut out);
    out
}

/// Deterministic fresh name: the base with trailing digits stripped, followed
/// by the least positive number not in `avoid`.
pub fn fresh_name(base: &str, avoid: &BTreeSet<Name>) -> Name {
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit());
    let stem = if stem.is_empty() { "v" } else { stem };
    (1u64..)
        .map(|n| format!("{}{}", stem, n))
        .find(|c| !avoid.contains(c))
        .expect("unbounded supply of names")
}

pub fn alpha_eq(a: &Term, b: &Term) -> bool {
    fn lookup(env: &[(Name, Name)], x: &str, left: bool) -> Option<usize> {
        env.iter().rposition(|(l, r)| if left { l == x } else { r == x })
    }
    fn go(a: &Term, b: &Term, env: &mut Vec<(Name, Name)>) -> bool {
        use Term::*;
        let same_shape = match (a, b) {
            (Var(x), Var(y)) => {
                return match (lookup(env, x, true), lookup(env, y, false)) {
                    (None, None) => x == y,
                    (i, j) => i == j,
                }
            }
            (Op(f, xs), Op(g, ys)) => f == g && xs.len() == ys.len(),
            (Star, Star) => true,
            (UnitLet(..), UnitLet(..))
            | (Pair(..), Pair(..))
            | (PairLet(..), PairLet(..))
            | (App(..), App(..))
            | (Derelict(_), Derelict(_))
            | (Discard(..), Discard(..)) => true,
            (Lam(_, s, _), Lam(_, t, _)) => s == t,
            (Promote(p), Promote(q)) => {
                p.grade == q.grade && p.grades == q.grades && p.args.len() == q.args.len()
            }
            (Copy(c), Copy(d)) => c.left == d.left && c.right == d.right,
            _ => false,
        };
        if !same_shape {
            return false;
        }
        let (ca, cb) = (a.children(), b.children());
        for i in 0..ca.len() {
            let (ba, bb) = (a.binders_for_child(i), b.binders_for_child(i));
            let n = ba.len();
            env.extend(ba.into_iter().cloned().zip(bb.into_iter().cloned()));
            let ok = go(ca[i], cb[i], env);
            env.truncate(env.len() - n);
            if !ok {
                return false;
            }
        }
        true
    }
    go(a, b, &mut Vec::new())
}

pub fn subst(t: &Term, x: &str, w: &Term) -> Term {
    let mut m = BTreeMap::new();
    m.insert(x.to_string(), w.clone());
    subst_many(t, &m)
}

pub fn rename_free(t: &Term, old: &str, new: &str) -> Term {
    subst(t, old, &Term::Var(new.to_string()))
}

/// Simultaneous capture-avoiding substitution.
///
/// A binder is renamed whenever its name is free in a substituted term and
/// the substitution reaches anywhere inside the binding node, not only inside
/// its scope. This keeps binder names disjoint from the node's context, which
/// the typing rules require.
pub fn subst_many(t: &Term, s: &BTreeMap<Name, Term>) -> Term {
    let fv = fv_set(t);
    let live: BTreeMap<&Name, &Term> = s.iter().filter(|(k, _)| fv.contains(*k)).collect();
    if live.is_empty() {
        return t.clone();
    }
    if let Term::Var(x) = t {
        return live[x].clone();
    }
    let range_fv: BTreeSet<Name> = live.values().flat_map(|w| fv_set(w)).collect();
    let mut node = t.clone();
    let mut avoid: BTreeSet<Name> = all_names(t);
    avoid.extend(range_fv.iter().cloned());
    avoid.extend(s.keys().cloned());
    for i in 0..node.children().len() {
        let clashing: Vec<Name> = node
            .binders_for_child(i)
            .into_iter()
            .filter(|b| range_fv.contains(*b))
            .cloned()
            .collect();
        for b in clashing {
            let nb = fresh_name(&b, &avoid);
            avoid.insert(nb.clone());
            rename_binder(&mut node, i, &b, &nb);
        }
    }
    let scopes: Vec<Vec<Name>> = (0..node.children().len())
        .map(|i| node.binders_for_child(i).into_iter().cloned().collect())
        .collect();
    for (i, c) in node.children_mut().into_iter().enumerate() {
        let inner: BTreeMap<Name, Term> = s
            .iter()
            .filter(|(k, _)| !scopes[i].contains(k))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        *c = subst_many(c, &inner);
    }
    node
}

fn rename_binder(node: &mut Term, child: usize, old: &str, new: &str) {
    let fix = |n: &mut Name| {
        if n == old {
            *n = new.to_string()
        }
    };
    match node {
        Term::PairLet(_, x, y, w) => {
            fix(x);
            fix(y);
            **w = rename_free(w, old, new);
        }
        Term::Lam(x, _, b) => {
            fix(x);
            **b = rename_free(b, old, new);
        }
        Term::Promote(p) => {
            p.binders.iter_mut().for_each(fix);
            p.body = rename_free(&p.body, old, new);
        }
        Term::Copy(c) => {
            fix(&mut c.x);
            fix(&mut c.y);
            c.body = rename_free(&c.body, old, new);
        }
        _ => unreachable!("node {} binds nothing for child {}", node.head_name(), child),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_term;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    #[test]
    fn alpha_equivalence_respects_binding() {
        assert!(alpha_eq(&t("fn x : X => x"), &t("fn y : X => y")));
        assert!(!alpha_eq(&t("fn x : X => y"), &t("fn y : X => y")));
        assert!(alpha_eq(
            &t("let a (*) b = p in b (*) a"),
            &t("let c (*) d = p in d (*) c")
        ));
        assert!(!alpha_eq(&t("let a (*) b = p in b (*) a"), &t("let a (*) b = p in a (*) b")));
    }

    #[test]
    fn substitution_avoids_capture() {
        let r = subst(&t("fn y : X => f(x, y)"), "x", &t("y"));
        assert_eq!(r.to_string(), "fn y1 : X => f(y, y1)");
        let r = subst(&t("let y (*) z = x in f(y, z)"), "x", &t("y"));
        assert_eq!(r.to_string(), "let y1 (*) z = y in f(y1, z)");
    }

    #[test]
    fn fresh_names_are_deterministic() {
        let avoid: BTreeSet<Name> = ["x1".to_string(), "x2".to_string()].into();
        assert_eq!(fresh_name("x", &avoid), "x3");
        assert_eq!(fresh_name("x1", &avoid), "x3");
    }
}
