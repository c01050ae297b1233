use thiserror::Error;

use super::expr::{CmpOp, Cond, Expr};
use super::lexer::{lex, Tok, Token};
use super::signature::{GradeRef, ParamKind, SortType};
use super::{Context, Grade, Index, OpSym, Rat, Term, TypeExpr};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

const KEYWORDS: &[&str] =
    &["let", "in", "fn", "unit", "discard", "copy", "as", "derelict", "promote", "inf"];

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
    params: Vec<String>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    pub fn new(src: &str) -> PResult<Parser> {
        let toks = lex(src)
            .map_err(|e| ParseError { line: e.line, col: e.col, msg: e.to_string() })?;
        Ok(Parser { toks, pos: 0, params: vec![] })
    }

    pub fn with_params(mut self, params: &[String]) -> Parser {
        self.params = params.to_vec();
        self
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let t = &self.toks[self.pos];
        Err(ParseError { line: t.line, col: t.col, msg: msg.into() })
    }

    pub fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    pub fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, t: &Tok) -> PResult<()> {
        if self.eat(t) {
            Ok(())
        } else {
            self.error(format!("expected {}, found {}", t, self.peek()))
        }
    }

    pub fn expect_eof(&self) -> PResult<()> {
        if self.at_eof() {
            Ok(())
        } else {
            self.error(format!("unexpected {} after end of input", self.peek()))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected `{}`, found {}", kw, self.peek()))
        }
    }

    pub fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            t => self.error(format!("expected identifier, found {}", t)),
        }
    }

    fn nat(&mut self) -> PResult<u64> {
        match self.peek().clone() {
            Tok::Num(s) => match s.parse() {
                Ok(n) => {
                    self.bump();
                    Ok(n)
                }
                Err(_) => self.error(format!("number `{}` is too large", s)),
            },
            t => self.error(format!("expected a number, found {}", t)),
        }
    }

    pub fn grade(&mut self) -> PResult<Grade> {
        if self.is_kw("inf") {
            self.bump();
            return Ok(Grade::Inf);
        }
        self.nat().map(Grade::Nat)
    }

    fn grade_ref(&mut self) -> PResult<GradeRef> {
        if let Tok::Ident(s) = self.peek().clone() {
            if self.params.contains(&s) {
                self.bump();
                return Ok(GradeRef::Param(s));
            }
        }
        self.grade().map(GradeRef::Lit)
    }

    // ---- types ----

    pub fn type_expr(&mut self) -> PResult<TypeExpr> {
        let s = self.sort_type()?;
        s.instantiate(&Default::default()).map_err(|e| {
            let t = &self.toks[self.pos];
            ParseError { line: t.line, col: t.col, msg: e.to_string() }
        })
    }

    pub fn sort_type(&mut self) -> PResult<SortType> {
        let lhs = self.tensor_type()?;
        if self.eat(&Tok::Lolli) {
            let rhs = self.sort_type()?;
            return Ok(SortType::Lolli(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn tensor_type(&mut self) -> PResult<SortType> {
        let mut t = self.prim_type()?;
        while self.eat(&Tok::Star) {
            let r = self.prim_type()?;
            t = SortType::Tensor(Box::new(t), Box::new(r));
        }
        Ok(t)
    }

    fn prim_type(&mut self) -> PResult<SortType> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                let g = self.grade_ref()?;
                let a = self.prim_type()?;
                Ok(SortType::Bang(g, Box::new(a)))
            }
            Tok::LParen => {
                self.bump();
                let t = self.sort_type()?;
                self.expect(&Tok::RParen)?;
                Ok(t)
            }
            Tok::Ident(s) if s == "I" => {
                self.bump();
                Ok(SortType::Unit)
            }
            Tok::Ident(_) => Ok(SortType::Ground(self.ident()?)),
            t => self.error(format!("expected a type, found {}", t)),
        }
    }

    pub fn context(&mut self) -> PResult<Context> {
        let mut ctx = Context::new();
        if matches!(self.peek(), Tok::Ident(_)) {
            loop {
                let x = self.ident()?;
                self.expect(&Tok::Colon)?;
                let t = self.type_expr()?;
                if ctx.contains(&x) {
                    return self.error(format!("variable `{}` declared twice", x));
                }
                ctx.push(&x, t);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        Ok(ctx)
    }

    // ---- arithmetic ----

    pub fn expr(&mut self) -> PResult<Expr> {
        let mut e = self.mul_expr()?;
        loop {
            if self.eat(&Tok::Plus) {
                e = Expr::Add(Box::new(e), Box::new(self.mul_expr()?));
            } else if self.eat(&Tok::Minus) {
                e = Expr::Sub(Box::new(e), Box::new(self.mul_expr()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn mul_expr(&mut self) -> PResult<Expr> {
        let mut e = self.unary_expr()?;
        loop {
            if self.eat(&Tok::Star) {
                e = Expr::Mul(Box::new(e), Box::new(self.unary_expr()?));
            } else if self.eat(&Tok::Slash) {
                e = Expr::Div(Box::new(e), Box::new(self.unary_expr()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn unary_expr(&mut self) -> PResult<Expr> {
        if self.eat(&Tok::Minus) {
            return Ok(Expr::Neg(Box::new(self.unary_expr()?)));
        }
        match self.peek().clone() {
            Tok::Num(_) => Ok(Expr::Num(Rat::from_integer(self.nat()? as i64))),
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(s) => {
                self.bump();
                if self.eat(&Tok::LParen) {
                    let mut args = vec![self.expr()?];
                    while self.eat(&Tok::Comma) {
                        args.push(self.expr()?);
                    }
                    self.expect(&Tok::RParen)?;
                    Ok(Expr::Call(s, args))
                } else {
                    Ok(Expr::Var(s))
                }
            }
            t => self.error(format!("expected an expression, found {}", t)),
        }
    }

    pub fn cond(&mut self) -> PResult<Cond> {
        let lhs = self.expr()?;
        let op = match self.bump() {
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            Tok::EqEq | Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            t => return self.error(format!("expected a comparison, found {}", t)),
        };
        let rhs = self.expr()?;
        Ok(Cond { lhs, op, rhs })
    }

    // ---- terms ----

    pub fn term(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Ident(k) if k == "fn" => {
                self.bump();
                let x = self.ident()?;
                self.expect(&Tok::Colon)?;
                let ty = self.type_expr()?;
                self.expect(&Tok::FatArrow)?;
                let body = self.term()?;
                Ok(Term::Lam(x, ty, Box::new(body)))
            }
            Tok::Ident(k) if k == "let" => {
                self.bump();
                if self.is_kw("unit") {
                    self.bump();
                    self.expect(&Tok::Eq)?;
                    let v = self.term()?;
                    self.expect_kw("in")?;
                    let w = self.term()?;
                    return Ok(Term::unit_let(v, w));
                }
                let x = self.ident()?;
                self.expect(&Tok::TensorOp)?;
                let y = self.ident()?;
                if x == y {
                    return self.error(format!("pattern binds `{}` twice", x));
                }
                self.expect(&Tok::Eq)?;
                let v = self.term()?;
                self.expect_kw("in")?;
                let w = self.term()?;
                Ok(Term::PairLet(Box::new(v), x, y, Box::new(w)))
            }
            Tok::Ident(k) if k == "discard" => {
                self.bump();
                let v = self.term()?;
                self.expect_kw("in")?;
                let u = self.term()?;
                Ok(Term::discard(v, u))
            }
            Tok::Ident(k) if k == "copy" => {
                self.bump();
                self.expect(&Tok::LBrack)?;
                let n = self.grade()?;
                self.expect(&Tok::Comma)?;
                let m = self.grade()?;
                self.expect(&Tok::RBrack)?;
                let v = self.term()?;
                self.expect_kw("as")?;
                let x = self.ident()?;
                self.expect(&Tok::Comma)?;
                let y = self.ident()?;
                if x == y {
                    return self.error(format!("copy binds `{}` twice", x));
                }
                self.expect_kw("in")?;
                let u = self.term()?;
                Ok(Term::copy(n, m, v, &x, &y, u))
            }
            _ => self.pair_term(),
        }
    }

    fn starts_binder(&self) -> bool {
        ["fn", "let", "discard", "copy"].iter().any(|k| self.is_kw(k))
    }

    fn pair_term(&mut self) -> PResult<Term> {
        let mut t = self.app_term()?;
        while self.eat(&Tok::TensorOp) {
            let r = if self.starts_binder() { self.term()? } else { self.app_term()? };
            t = Term::pair(t, r);
        }
        Ok(t)
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => {
                s == "unit" || s == "promote" || !KEYWORDS.contains(&s.as_str())
            }
            Tok::LParen | Tok::Bang => true,
            _ => false,
        }
    }

    fn app_term(&mut self) -> PResult<Term> {
        let mut t = self.unary_term()?;
        while self.starts_atom() {
            let a = self.atom()?;
            t = Term::app(t, a);
        }
        Ok(t)
    }

    fn unary_term(&mut self) -> PResult<Term> {
        if self.is_kw("derelict") {
            self.bump();
            return Ok(Term::derelict(self.unary_term()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Ident(k) if k == "unit" => {
                self.bump();
                Ok(Term::Star)
            }
            Tok::Ident(k) if k == "promote" => self.promote(),
            Tok::Ident(_) => {
                let name = self.ident()?;
                let next = self.peek().clone();
                let glued = !self.toks[self.pos].spaced;
                if glued && (next == Tok::LParen || next == Tok::LBrack) {
                    self.op_app(name)
                } else {
                    Ok(Term::Var(name))
                }
            }
            Tok::LParen => {
                self.bump();
                let t = self.term()?;
                self.expect(&Tok::RParen)?;
                Ok(t)
            }
            Tok::Bang => {
                self.bump();
                let r = self.grade()?;
                self.expect(&Tok::LParen)?;
                let body = self.term()?;
                self.expect(&Tok::RParen)?;
                Ok(Term::promote(r, vec![], vec![], vec![], body))
            }
            t => self.error(format!("expected a term, found {}", t)),
        }
    }

    fn index_entry(&mut self) -> PResult<Index> {
        let e = self.expr()?;
        let mut vars = Vec::new();
        e.vars(&mut vars);
        if vars.is_empty() {
            match e.eval(&Default::default()) {
                Ok(r) => Ok(Index::Lit(r)),
                Err(err) => self.error(err.to_string()),
            }
        } else if let Some(v) = vars.iter().find(|v| !self.params.contains(v)) {
            self.error(format!("unknown parameter `{}` in symbol index", v))
        } else {
            Ok(Index::Sym(e))
        }
    }

    fn op_app(&mut self, raw: String) -> PResult<Term> {
        let sym = if self.eat(&Tok::LBrack) {
            let mut index = vec![self.index_entry()?];
            while self.eat(&Tok::Comma) {
                index.push(self.index_entry()?);
            }
            self.expect(&Tok::RBrack)?;
            OpSym { name: raw, index }
        } else {
            split_symbol(&raw, &self.params)
        };
        if *self.peek() != Tok::LParen || self.toks[self.pos].spaced {
            return self.error(format!("expected `(` after operation `{}`", sym.name));
        }
        self.bump();
        if *self.peek() == Tok::RParen {
            return self.error("operations take at least one argument; apply constants to `unit`");
        }
        let mut args = vec![self.term()?];
        while self.eat(&Tok::Comma) {
            args.push(self.term()?);
        }
        self.expect(&Tok::RParen)?;
        Ok(Term::Op(sym, args))
    }

    fn promote(&mut self) -> PResult<Term> {
        self.expect_kw("promote")?;
        self.expect(&Tok::LBrack)?;
        let r = self.grade()?;
        self.expect(&Tok::Semi)?;
        let mut grades = vec![];
        if *self.peek() != Tok::RBrack {
            grades.push(self.grade()?);
            while self.eat(&Tok::Comma) {
                grades.push(self.grade()?);
            }
        }
        self.expect(&Tok::RBrack)?;
        self.expect(&Tok::LParen)?;
        let mut args = vec![];
        if *self.peek() != Tok::Semi {
            args.push(self.term()?);
            while self.eat(&Tok::Comma) {
                args.push(self.term()?);
            }
        }
        self.expect(&Tok::Semi)?;
        let mut binders: Vec<String> = vec![];
        if *self.peek() != Tok::FatArrow {
            binders.push(self.ident()?);
            while self.eat(&Tok::Comma) {
                let b = self.ident()?;
                if binders.contains(&b) {
                    return self.error(format!("promote binds `{}` twice", b));
                }
                binders.push(b);
            }
        }
        self.expect(&Tok::FatArrow)?;
        let body = self.term()?;
        self.expect(&Tok::RParen)?;
        if grades.len() != args.len() || binders.len() != args.len() {
            return self.error(format!(
                "promote has {} grade(s), {} argument(s) and {} binder(s)",
                grades.len(),
                args.len(),
                binders.len()
            ));
        }
        Ok(Term::promote(r, grades, args, binders, body))
    }
}

/// Splits trailing `_<digits>` (or `_<param>`) segments of a symbol name into
/// its index, so `wait_3` names member 3 of the family `wait`.
pub fn split_symbol(raw: &str, params: &[String]) -> OpSym {
    let segs: Vec<&str> = raw.split('_').collect();
    let mut cut = segs.len();
    while cut > 1 {
        let s = segs[cut - 1];
        let numeric = !s.is_empty() && s.chars().all(|c| c.is_ascii_digit());
        let param = params.iter().any(|p| p == s);
        if !(numeric || param) || segs[..cut - 1].join("_").is_empty() {
            break;
        }
        cut -= 1;
    }
    let index = segs[cut..]
        .iter()
        .map(|s| match s.parse::<i64>() {
            Ok(n) => Index::Lit(Rat::from_integer(n)),
            Err(_) => Index::Sym(Expr::Var(s.to_string())),
        })
        .collect();
    OpSym { name: segs[..cut].join("_"), index }
}

fn finish<T>(mut p: Parser, f: impl FnOnce(&mut Parser) -> PResult<T>) -> PResult<T> {
    let v = f(&mut p)?;
    p.expect_eof()?;
    Ok(v)
}

pub fn parse_type(src: &str) -> PResult<TypeExpr> {
    finish(Parser::new(src)?, |p| p.type_expr())
}

pub fn parse_context(src: &str) -> PResult<Context> {
    finish(Parser::new(src)?, |p| p.context())
}

pub fn parse_term(src: &str) -> PResult<Term> {
    finish(Parser::new(src)?, |p| p.term())
}

pub fn parse_term_with_params(src: &str, params: &[String]) -> PResult<Term> {
    finish(Parser::new(src)?.with_params(params), |p| p.term())
}

pub fn parse_expr(src: &str) -> PResult<Expr> {
    finish(Parser::new(src)?, |p| p.expr())
}

pub fn parse_cond(src: &str) -> PResult<Cond> {
    finish(Parser::new(src)?, |p| p.cond())
}

/// Parses an operation sort `A1, ..., An -> A`, where grades may mention the
/// given family parameters.
pub fn parse_sort(
    src: &str,
    params: &[(String, ParamKind)],
) -> PResult<(Vec<SortType>, SortType)> {
    let names: Vec<String> = params.iter().map(|(n, _)| n.clone()).collect();
    finish(Parser::new(src)?.with_params(&names), |p| {
        let mut args = vec![p.sort_type()?];
        while p.eat(&Tok::Comma) {
            args.push(p.sort_type()?);
        }
        p.expect(&Tok::Arrow)?;
        let res = p.sort_type()?;
        Ok((args, res))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn types_associate() {
        let t = parse_type("X * X * X -o I -o !2 (X -o X)").unwrap();
        assert_eq!(t.to_string(), "X * X * X -o I -o !2 (X -o X)");
        match t {
            TypeExpr::Lolli(a, _) => assert!(matches!(*a, TypeExpr::Tensor(..))),
            _ => panic!("expected a linear function type"),
        }
    }

    #[test]
    fn symbol_suffixes_become_indices() {
        let t = parse_term("wait_1(x)").unwrap();
        assert_eq!(t, Term::op(OpSym::nat("wait", &[1]), vec![Term::var("x")]));
        let t = parse_term("iid_normal_3(c(unit), c(unit))").unwrap();
        match t {
            Term::Op(s, _) => assert_eq!(s, OpSym::nat("iid_normal", &[3])),
            _ => panic!(),
        }
        let t = parse_term("const[-1/2](unit)").unwrap();
        assert_eq!(t, Term::op(OpSym::with("const", &[Rat::new(-1, 2)]), vec![Term::Star]));
    }

    #[test]
    fn application_is_whitespace_sensitive() {
        assert!(matches!(parse_term("f (x)").unwrap(), Term::App(..)));
        assert!(matches!(parse_term("f(x)").unwrap(), Term::Op(..)));
        assert!(matches!(parse_term("derelict x y").unwrap(), Term::App(..)));
    }

    #[test]
    fn zero_arity_operations_are_rejected() {
        assert!(parse_term("c()").is_err());
    }

    #[test]
    fn promote_forms_agree() {
        let a = parse_term("promote[2;](; => fn x : X => wait_1(x))").unwrap();
        let b = parse_term("!2(fn x : X => wait_1(x))").unwrap();
        assert_eq!(a, b);
        assert!(parse_term("promote[2; 1](x; => x)").is_err());
    }
}
