//! Canonical printing. Output re-parses to the same tree.

use std::fmt::{self, Write};

use super::{Index, OpSym, Term, TypeExpr};

const BINDER: u8 = 0;
const PAIR: u8 = 1;
const APP: u8 = 2;
const UNARY: u8 = 3;
const ATOM: u8 = 4;

fn type_level(t: &TypeExpr) -> u8 {
    match t {
        TypeExpr::Lolli(..) => 0,
        TypeExpr::Tensor(..) => 1,
        _ => 2,
    }
}

fn write_type(f: &mut impl Write, t: &TypeExpr, min: u8) -> fmt::Result {
    if type_level(t) < min {
        f.write_char('(')?;
        write_type(f, t, 0)?;
        return f.write_char(')');
    }
    match t {
        TypeExpr::Ground(g) => f.write_str(g),
        TypeExpr::Unit => f.write_str("I"),
        TypeExpr::Tensor(a, b) => {
            write_type(f, a, 1)?;
            f.write_str(" * ")?;
            write_type(f, b, 2)
        }
        TypeExpr::Lolli(a, b) => {
            write_type(f, a, 1)?;
            f.write_str(" -o ")?;
            write_type(f, b, 0)
        }
        TypeExpr::Bang(r, a) => {
            write!(f, "!{} ", r)?;
            write_type(f, a, 2)
        }
    }
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_type(f, self, 0)
    }
}

impl fmt::Display for OpSym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let nats: Option<Vec<i64>> = self
            .index
            .iter()
            .map(|i| match i {
                Index::Lit(r) if r.is_integer() && *r.numer() >= 0 => Some(*r.numer()),
                _ => None,
            })
            .collect();
        f.write_str(&self.name)?;
        match nats {
            Some(ns) => {
                for n in ns {
                    write!(f, "_{}", n)?;
                }
                Ok(())
            }
            None => {
                f.write_char('[')?;
                for (i, idx) in self.index.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    match idx {
                        Index::Lit(r) => write!(f, "{}", r)?,
                        Index::Sym(e) => write!(f, "{}", e)?,
                    }
                }
                f.write_char(']')
            }
        }
    }
}

fn level(t: &Term) -> u8 {
    match t {
        Term::UnitLet(..) | Term::PairLet(..) | Term::Lam(..) | Term::Discard(..) | Term::Copy(_) => {
            BINDER
        }
        Term::Pair(..) => PAIR,
        Term::App(..) => APP,
        Term::Derelict(_) => UNARY,
        _ => ATOM,
    }
}

fn comma_list<T>(
    f: &mut dyn Write,
    xs: &[T],
    mut each: impl FnMut(&mut dyn Write, &T) -> fmt::Result,
) -> fmt::Result {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        each(f, x)?;
    }
    Ok(())
}

fn write_term(f: &mut dyn Write, t: &Term, min: u8) -> fmt::Result {
    if level(t) < min {
        f.write_char('(')?;
        write_term(f, t, BINDER)?;
        return f.write_char(')');
    }
    match t {
        Term::Var(x) => f.write_str(x),
        Term::Star => f.write_str("unit"),
        Term::Op(s, args) => {
            write!(f, "{}(", s)?;
            comma_list(f, args, |f, a| write_term(f, a, BINDER))?;
            f.write_char(')')
        }
        Term::UnitLet(v, w) => {
            f.write_str("let unit = ")?;
            write_term(f, v, BINDER)?;
            f.write_str(" in ")?;
            write_term(f, w, BINDER)
        }
        Term::Pair(v, w) => {
            write_term(f, v, PAIR)?;
            f.write_str(" (*) ")?;
            write_term(f, w, APP)
        }
        Term::PairLet(v, x, y, w) => {
            write!(f, "let {} (*) {} = ", x, y)?;
            write_term(f, v, BINDER)?;
            f.write_str(" in ")?;
            write_term(f, w, BINDER)
        }
        Term::Lam(x, ty, b) => {
            write!(f, "fn {} : {} => ", x, ty)?;
            write_term(f, b, BINDER)
        }
        Term::App(g, a) => {
            write_term(f, g, APP)?;
            f.write_char(' ')?;
            write_term(f, a, ATOM)
        }
        Term::Derelict(v) => {
            f.write_str("derelict ")?;
            write_term(f, v, UNARY)
        }
        Term::Discard(v, u) => {
            f.write_str("discard ")?;
            write_term(f, v, PAIR)?;
            f.write_str(" in ")?;
            write_term(f, u, BINDER)
        }
        Term::Copy(c) => {
            write!(f, "copy[{}, {}] ", c.left, c.right)?;
            write_term(f, &c.source, PAIR)?;
            write!(f, " as {}, {} in ", c.x, c.y)?;
            write_term(f, &c.body, BINDER)
        }
        Term::Promote(p) => {
            if p.args.is_empty() {
                write!(f, "!{}(", p.grade)?;
                write_term(f, &p.body, BINDER)?;
                return f.write_char(')');
            }
            write!(f, "promote[{}; ", p.grade)?;
            comma_list(f, &p.grades, |f, g| write!(f, "{}", g))?;
            f.write_str("](")?;
            comma_list(f, &p.args, |f, a| write_term(f, a, BINDER))?;
            f.write_str("; ")?;
            comma_list(f, &p.binders, |f, b| f.write_str(b))?;
            f.write_str(" => ")?;
            write_term(f, &p.body, BINDER)?;
            f.write_char(')')
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self, BINDER)
    }
}
