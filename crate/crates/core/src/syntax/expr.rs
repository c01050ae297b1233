//! Arithmetic over scheme parameters: symbol indices, bound labels and side
//! conditions of axiom schemes.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Signed, Zero};
use thiserror::Error;

use super::Rat;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Num(Rat),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("unbound parameter `{0}`")]
    Unbound(String),
    #[error("division by zero")]
    DivZero,
    #[error("arithmetic overflow")]
    Overflow,
    #[error("`{0}` does not denote a rational number here")]
    NotRational(String),
    #[error("unknown function `{0}` with {1} argument(s)")]
    UnknownCall(String, usize),
}

pub type Env = BTreeMap<String, Rat>;

impl Expr {
    pub fn num(n: i64) -> Expr {
        Expr::Num(Rat::from_integer(n))
    }

    pub fn vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone())
                }
            }
            Expr::Neg(a) => a.vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.vars(out);
                b.vars(out)
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.vars(out)),
        }
    }

    /// The parameter name if this expression is a bare parameter.
    pub fn as_var(&self) -> Option<&str> {
        match self {
            Expr::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn eval(&self, env: &Env) -> Result<Rat, ExprError> {
        let ck = |o: Option<Rat>| o.ok_or(ExprError::Overflow);
        match self {
            Expr::Num(r) => Ok(*r),
            Expr::Var(v) => env.get(v).copied().ok_or_else(|| ExprError::Unbound(v.clone())),
            Expr::Neg(a) => Ok(-a.eval(env)?),
            Expr::Add(a, b) => ck(a.eval(env)?.checked_add(&b.eval(env)?)),
            Expr::Sub(a, b) => ck(a.eval(env)?.checked_sub(&b.eval(env)?)),
            Expr::Mul(a, b) => ck(a.eval(env)?.checked_mul(&b.eval(env)?)),
            Expr::Div(a, b) => {
                let d = b.eval(env)?;
                if d.is_zero() {
                    return Err(ExprError::DivZero);
                }
                ck(a.eval(env)?.checked_div(&d))
            }
            Expr::Call(f, args) => {
                let vals = args.iter().map(|a| a.eval(env)).collect::<Result<Vec<_>, _>>()?;
                match (f.as_str(), vals.as_slice()) {
                    ("abs", [x]) => Ok(x.abs()),
                    ("min", [x, y]) => Ok(*x.min(y)),
                    ("max", [x, y]) => Ok(*x.max(y)),
                    ("phi", [_, _, _, _, _]) => Err(ExprError::NotRational(self.to_string())),
                    _ => Err(ExprError::UnknownCall(f.clone(), args.len())),
                }
            }
        }
    }
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(_) => 3,
        Expr::Num(r) if r.is_negative() || !r.is_integer() => 2,
        _ => 4,
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if prec(e) < min {
        write!(f, "({})", e)
    } else {
        write!(f, "{}", e)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(r) => write!(f, "{}", r),
            Expr::Var(v) => f.write_str(v),
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_at(f, a, 4)
            }
            Expr::Add(a, b) => {
                write_at(f, a, 1)?;
                f.write_str(" + ")?;
                write_at(f, b, 2)
            }
            Expr::Sub(a, b) => {
                write_at(f, a, 1)?;
                f.write_str(" - ")?;
                write_at(f, b, 2)
            }
            Expr::Mul(a, b) => {
                write_at(f, a, 2)?;
                f.write_str("*")?;
                write_at(f, b, 3)
            }
            Expr::Div(a, b) => {
                write_at(f, a, 2)?;
                f.write_str("/")?;
                write_at(f, b, 3)
            }
            Expr::Call(name, args) => {
                write!(f, "{}(", name)?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}", a)?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

/// A side condition `lhs op rhs`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cond {
    pub lhs: Expr,
    pub op: CmpOp,
    pub rhs: Expr,
}

impl Cond {
    pub fn holds(&self, env: &Env) -> Result<bool, ExprError> {
        let (a, b) = (self.lhs.eval(env)?, self.rhs.eval(env)?);
        Ok(match self.op {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        })
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.op {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        };
        write!(f, "{} {} {}", self.lhs, op, self.rhs)
    }
}
