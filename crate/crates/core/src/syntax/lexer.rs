use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Num(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Semi,
    Colon,
    FatArrow,
    Arrow,
    Lolli,
    Star,
    TensorOp,
    Bang,
    Eq,
    EqEq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Slash,
    Turnstile,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) | Tok::Num(s) => return write!(f, "`{}`", s),
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrack => "[",
            Tok::RBrack => "]",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::FatArrow => "=>",
            Tok::Arrow => "->",
            Tok::Lolli => "-o",
            Tok::Star => "*",
            Tok::TensorOp => "(*)",
            Tok::Bang => "!",
            Tok::Eq => "=",
            Tok::EqEq => "==",
            Tok::Ne => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Slash => "/",
            Tok::Turnstile => "|-",
            Tok::Eof => return f.write_str("end of input"),
        };
        write!(f, "`{}`", s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
    /// Whether whitespace separates this token from the previous one.
    pub spaced: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: unexpected character `{ch}`")]
pub struct LexError {
    pub line: usize,
    pub col: usize,
    pub ch: char,
}

fn ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

pub fn lex(src: &str) -> Result<Vec<Token>, LexError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut spaced = true;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            spaced = true;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            spaced = true;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let peek = |k: usize| chars.get(i + k).copied();
        let (tok, len) = if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && ident_char(chars[j]) {
                j += 1;
            }
            (Tok::Ident(chars[i..j].iter().collect()), j - i)
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            (Tok::Num(chars[i..j].iter().collect()), j - i)
        } else {
            match (c, peek(1)) {
                ('(', Some('*')) if peek(2) == Some(')') => (Tok::TensorOp, 3),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                ('[', _) => (Tok::LBrack, 1),
                (']', _) => (Tok::RBrack, 1),
                (',', _) => (Tok::Comma, 1),
                (';', _) => (Tok::Semi, 1),
                (':', _) => (Tok::Colon, 1),
                ('=', Some('>')) => (Tok::FatArrow, 2),
                ('=', Some('=')) => (Tok::EqEq, 2),
                ('=', _) => (Tok::Eq, 1),
                ('-', Some('>')) => (Tok::Arrow, 2),
                ('-', Some('o')) if !peek(2).map_or(false, ident_char) => (Tok::Lolli, 2),
                ('-', _) => (Tok::Minus, 1),
                ('*', _) => (Tok::Star, 1),
                ('!', Some('=')) => (Tok::Ne, 2),
                ('!', _) => (Tok::Bang, 1),
                ('<', Some('=')) => (Tok::Le, 2),
                ('<', _) => (Tok::Lt, 1),
                ('>', Some('=')) => (Tok::Ge, 2),
                ('>', _) => (Tok::Gt, 1),
                ('+', _) => (Tok::Plus, 1),
                ('/', _) => (Tok::Slash, 1),
                ('|', Some('-')) => (Tok::Turnstile, 2),
                _ => return Err(LexError { line, col, ch: c }),
            }
        };
        out.push(Token { tok, line, col, spaced });
        spaced = false;
        i += len;
        col += len;
    }
    out.push(Token { tok: Tok::Eof, line, col, spaced: true });
    Ok(out)
}
