//! Model files: ground spaces as distance matrices, operations as point tables.
//!
//! ```text
//! # a two-point space with a swap
//! ground B
//! 0   1
//! 1   0
//!
//! op flip
//! 0   1
//! 1   0
//! ```
//!
//! A `ground` block has one row per point. Entries are rationals or `inf`.
//! An `op` block has one row per argument tuple: the arguments, then the
//! result. Points are naturals for ground types, `*` for `I`, and `(p, q)`
//! for pairs. `timed N` starts from the built-in `timed(N)` model; tables
//! given for `wait` or the helper symbols then take precedence for the
//! indices they list.

use std::collections::BTreeMap;
use std::sync::Arc;

use gvlam_core::met_model::{GroundSpace, Model, ModelError, Point};
use gvlam_core::syntax::parse_term;
use gvlam_core::vequation::TheorySpec;
use gvlam_core::{Ext, OpSym, Rat, Term};

use crate::{CResult, Failure, EXIT_INPUT, EXIT_MODEL};

type Table = BTreeMap<Vec<Point>, Point>;

/// A first-order point. `Point` is not `Send`, operation closures must be.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Flat {
    Unit,
    Atom(u32),
    Pair(Box<Flat>, Box<Flat>),
}

impl Flat {
    fn of(p: &Point) -> Option<Flat> {
        Some(match p {
            Point::Unit => Flat::Unit,
            Point::Atom(i) => Flat::Atom(*i),
            Point::Pair(a, b) => Flat::Pair(Box::new(Flat::of(a)?), Box::new(Flat::of(b)?)),
            Point::Fun(_) => return None,
        })
    }

    fn point(&self) -> Point {
        match self {
            Flat::Unit => Point::Unit,
            Flat::Atom(i) => Point::Atom(*i),
            Flat::Pair(a, b) => Point::Pair(Box::new(a.point()), Box::new(b.point())),
        }
    }
}

type FlatTable = BTreeMap<Vec<Flat>, Flat>;

fn flatten(t: &Table) -> FlatTable {
    // Parsed points never contain function tables.
    t.iter()
        .map(|(k, v)| (k.iter().map(|p| Flat::of(p).expect("first-order point")).collect(), Flat::of(v).expect("first-order point")))
        .collect()
}

fn bad(line: usize, msg: impl Into<String>) -> Failure {
    Failure::new(EXIT_INPUT, format!("model file line {}: {}", line, msg.into()))
}

enum Block {
    Ground(String, Vec<Vec<Ext>>),
    Op(OpSym, Vec<Rat>, Table),
}

struct Open {
    line: usize,
    block: Block,
}

pub fn parse_model_file(src: &str, theory: &TheorySpec, guard: u128) -> CResult<Model> {
    let mut model = Model::new();
    let mut blocks: Vec<(usize, Block)> = Vec::new();
    let mut open: Option<Open> = None;
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            if let Some(o) = open.take() {
                blocks.push((o.line, o.block));
            }
            continue;
        }
        let (head, rest) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
        let rest = rest.trim();
        match head {
            "ground" | "op" | "timed" => {
                if let Some(o) = open.take() {
                    blocks.push((o.line, o.block));
                }
            }
            _ => {}
        }
        match head {
            "timed" => {
                if !blocks.is_empty() {
                    return Err(bad(line, "`timed` must come first"));
                }
                let n: u32 = rest.parse().map_err(|_| bad(line, format!("expected `timed N`, got `{}`", text)))?;
                model = Model::timed(n);
            }
            "ground" => {
                if rest.is_empty() || !rest.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                    return Err(bad(line, format!("bad ground type name `{}`", rest)));
                }
                open = Some(Open { line, block: Block::Ground(rest.to_string(), vec![]) });
            }
            "op" => {
                let sym = op_symbol(rest).map_err(|m| bad(line, m))?;
                let index = sym.literal_index().ok_or_else(|| bad(line, "operation indices must be literals"))?;
                open = Some(Open { line, block: Block::Op(sym, index, Table::new()) });
            }
            _ => match open.as_mut().map(|o| &mut o.block) {
                Some(Block::Ground(_, rows)) => {
                    let row = text.split_whitespace().map(distance).collect::<Result<Vec<_>, _>>().map_err(|m| bad(line, m))?;
                    rows.push(row);
                }
                Some(Block::Op(_, _, table)) => {
                    let mut points = points(text).map_err(|m| bad(line, m))?;
                    let Some(result) = points.pop() else { return Err(bad(line, "empty row")) };
                    if points.is_empty() {
                        return Err(bad(line, "a row needs the arguments and the result"));
                    }
                    if table.insert(points, result).is_some() {
                        return Err(bad(line, "arguments listed twice"));
                    }
                }
                None => return Err(bad(line, format!("unknown directive `{}`", head))),
            },
        }
    }
    if let Some(o) = open.take() {
        blocks.push((o.line, o.block));
    }

    let mut tables: BTreeMap<String, Vec<(Vec<Rat>, FlatTable)>> = BTreeMap::new();
    let mut checks = Vec::new();
    for (line, block) in blocks {
        match block {
            Block::Ground(name, dist) => {
                let space = GroundSpace { dist };
                space.validate(theory.symmetric).map_err(|e| bad(line, e.to_string()))?;
                model.grounds.insert(name, space);
            }
            Block::Op(sym, index, table) => {
                let entry = tables.entry(sym.name.clone()).or_default();
                if entry.iter().any(|(i, _)| *i == index) {
                    return Err(bad(line, format!("table for `{}` given twice", sym)));
                }
                entry.push((index, flatten(&table)));
                checks.push((line, sym, table));
            }
        }
    }
    for (name, list) in tables {
        let fallback = model.ops.get(&name).cloned();
        let key = name.clone();
        model.ops.insert(
            name,
            Arc::new(move |idx: &[Rat], args: &[Point]| {
                match list.iter().find(|(i, _)| i.as_slice() == idx) {
                    Some((_, t)) => args
                        .iter()
                        .map(Flat::of)
                        .collect::<Option<Vec<_>>>()
                        .and_then(|k| t.get(&k))
                        .map(Flat::point)
                        .ok_or_else(|| ModelError::BadPoint {
                        point: render(args),
                        ty: format!("the domain of `{}`", key),
                    }),
                    None => match &fallback {
                        Some(f) => f(idx, args),
                        None => Err(ModelError::UnknownOp(key.clone())),
                    },
                }
            }),
        );
    }
    let model = model.with_guard(guard);
    for (line, sym, table) in checks {
        check_table(&model, theory, &sym, &table).map_err(|(code, m)| Failure::new(code, format!("model file line {}: {}", line, m)))?;
    }
    Ok(model)
}

fn op_symbol(s: &str) -> Result<OpSym, String> {
    match parse_term(&format!("{}(unit)", s)) {
        Ok(Term::Op(sym, _)) => Ok(sym),
        _ => Err(format!("bad operation symbol `{}`", s)),
    }
}

fn distance(s: &str) -> Result<Ext, String> {
    if s == "inf" {
        return Ok(Ext::Inf);
    }
    s.parse::<Rat>().map(Ext::Fin).map_err(|_| format!("bad distance `{}`", s))
}

fn render(ps: &[Point]) -> String {
    ps.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" ")
}

/// Reads whitespace-separated points.
fn points(s: &str) -> Result<Vec<Point>, String> {
    let chars: Vec<char> = s.chars().collect();
    let mut pos = 0;
    let mut out = Vec::new();
    loop {
        while pos < chars.len() && chars[pos].is_whitespace() {
            pos += 1;
        }
        if pos == chars.len() {
            return Ok(out);
        }
        out.push(point(&chars, &mut pos)?);
    }
}

fn point(chars: &[char], pos: &mut usize) -> Result<Point, String> {
    let skip = |pos: &mut usize| {
        while *pos < chars.len() && chars[*pos].is_whitespace() {
            *pos += 1;
        }
    };
    skip(pos);
    match chars.get(*pos) {
        Some('*') => {
            *pos += 1;
            Ok(Point::Unit)
        }
        Some('(') => {
            *pos += 1;
            let a = point(chars, pos)?;
            skip(pos);
            if chars.get(*pos) != Some(&',') {
                return Err("expected `,` in a pair".into());
            }
            *pos += 1;
            let b = point(chars, pos)?;
            skip(pos);
            if chars.get(*pos) != Some(&')') {
                return Err("expected `)` after a pair".into());
            }
            *pos += 1;
            Ok(Point::Pair(Box::new(a), Box::new(b)))
        }
        Some(c) if c.is_ascii_digit() => {
            let start = *pos;
            while *pos < chars.len() && chars[*pos].is_ascii_digit() {
                *pos += 1;
            }
            let s: String = chars[start..*pos].iter().collect();
            s.parse().map(Point::Atom).map_err(|_| format!("point `{}` is too large", s))
        }
        Some(c) => Err(format!("unexpected `{}` in a point", c)),
        None => Err("missing point".into()),
    }
}

/// The table must cover every argument tuple, land in the result carrier,
/// and be non-expansive from the tensor of its arguments.
fn check_table(model: &Model, theory: &TheorySpec, sym: &OpSym, table: &Table) -> Result<(), (i32, String)> {
    let input = |m: String| (EXIT_INPUT, m);
    let (args, res) = theory.signature.resolve(sym).map_err(|e| input(e.to_string()))?;
    let carriers = args.iter().map(|t| model.carrier(t)).collect::<Result<Vec<_>, _>>().map_err(|e| input(e.to_string()))?;
    let out = model.carrier(&res).map_err(|e| input(e.to_string()))?;
    let expected: usize = carriers.iter().map(|c| c.points.len()).product();
    for (ins, o) in table {
        if ins.len() != args.len() {
            return Err(input(format!("`{}` takes {} argument(s), row has {}", sym, args.len(), ins.len())));
        }
        for ((p, c), t) in ins.iter().zip(&carriers).zip(&args) {
            if c.position(p).is_none() {
                return Err(input(format!("{} is not a point of {}", p, t)));
            }
        }
        if out.position(o).is_none() {
            return Err(input(format!("{} is not a point of {}", o, res)));
        }
    }
    if table.len() != expected {
        return Err(input(format!("`{}` has {} row(s), expected {}", sym, table.len(), expected)));
    }
    let rows: Vec<_> = table.iter().collect();
    for (a, fa) in &rows {
        for (b, fb) in &rows {
            let d_in = model.env_dist(&args, a, b).map_err(|e| input(e.to_string()))?;
            let d_out = model.dist(&res, fa, fb).map_err(|e| input(e.to_string()))?;
            if !d_out.num_le(&d_in) {
                return Err((
                    EXIT_MODEL,
                    format!("`{}` is not non-expansive: {} and {} are {} apart, their images {}", sym, render(a), render(b), d_in, d_out),
                ));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::parse_theory;

    const THY: &str = "ground B\nop flip : B -> B\nop wait[n:nat] : B -> B\n";

    #[test]
    fn swap_model_loads_and_evaluates() {
        let th = parse_theory(THY).unwrap();
        let m = parse_model_file("ground B\n0 1\n1 0\n\nop flip\n0\t1\n1\t0\n", &th, 1000).unwrap();
        let f = &m.ops["flip"];
        assert_eq!(f(&[], &[Point::Atom(0)]).unwrap(), Point::Atom(1));
    }

    #[test]
    fn tables_must_be_total_and_non_expansive() {
        let th = parse_theory(THY).unwrap();
        let partial = parse_model_file("ground B\n0 1\n1 0\nop flip\n0 1\n", &th, 1000).unwrap_err();
        assert_eq!(partial.code, EXIT_INPUT);
        assert!(partial.msg.contains("expected 2"), "{}", partial.msg);
        let wide = "ground B\n0 1 2\n1 0 1\n2 1 0\nop flip\n0 2\n1 1\n2 0\n";
        assert_eq!(parse_model_file(wide, &th, 1000).unwrap().ops.len(), 1);
        let stretch = "ground B\n0 1 2\n1 0 1\n2 1 0\nop flip\n0 0\n1 2\n2 0\n";
        assert_eq!(parse_model_file(stretch, &th, 1000).unwrap_err().code, EXIT_MODEL);
    }

    #[test]
    fn tables_override_builtin_indices_only() {
        let th = parse_theory(THY.replace('B', "X").as_str()).unwrap();
        let src = "timed 2\nop wait_1\n0 0\n1 1\n2 2\n";
        let m = parse_model_file(src, &th, 1000).unwrap();
        let w = &m.ops["wait"];
        assert_eq!(w(&[Rat::from_integer(1)], &[Point::Atom(1)]).unwrap(), Point::Atom(1));
        assert_eq!(w(&[Rat::from_integer(2)], &[Point::Atom(1)]).unwrap(), Point::Atom(2));
    }

    #[test]
    fn malformed_files_are_input_errors() {
        let th = parse_theory(THY).unwrap();
        for src in ["ground B\n0 1\n1 1\n", "ground B\n0 x\n", "frob\n", "ground B\n0\nop flip\n(0 0\n", "ground B\n0\ntimed 3\n"] {
            assert_eq!(parse_model_file(src, &th, 1000).unwrap_err().code, EXIT_INPUT, "{}", src);
        }
    }
}
