//! Self-describing text form of a [`ConicProblem`] for diffing across
//! implementations.
//!
//! ```text
//! conic-problem v1
//! vars <n>
//! var <start> <len> <name>
//! obj <constant> <idx>:<coef> ...
//! block <tag> <dim> <rows> <label>
//! row <constant> <idx>:<coef> ...
//! end
//! ```
//! `dim` is the matrix order for `psd` blocks and the row count otherwise.
//! Numbers use the shortest representation that round-trips exactly.

use std::fmt::Write;

use super::problem::{Cone, ConeBlock, ConicProblem, VarEntry};
use super::{ConicError, LinExpr};

const HEADER: &str = "conic-problem v1";

fn write_expr(out: &mut String, e: &LinExpr) {
    write!(out, "{:?}", e.constant).unwrap();
    for (i, c) in &e.terms {
        write!(out, " {i}:{c:?}").unwrap();
    }
}

pub fn dump(problem: &ConicProblem) -> String {
    let mut out = String::new();
    writeln!(out, "{HEADER}").unwrap();
    writeln!(out, "vars {}", problem.n_vars).unwrap();
    for v in &problem.registry {
        writeln!(out, "var {} {} {}", v.range.start, v.range.len(), v.name).unwrap();
    }
    out.push_str("obj ");
    write_expr(&mut out, &problem.objective);
    out.push('\n');
    for b in &problem.blocks {
        let dim = match b.cone {
            Cone::Psd(d) => d,
            _ => b.rows.len(),
        };
        writeln!(out, "block {} {} {} {}", b.cone.tag(), dim, b.rows.len(), b.label).unwrap();
        for r in &b.rows {
            out.push_str("row ");
            write_expr(&mut out, r);
            out.push('\n');
        }
    }
    out.push_str("end\n");
    out
}

fn err(line: usize, msg: &str) -> ConicError {
    ConicError::Parse(format!("line {}: {}", line + 1, msg))
}

fn parse_expr(line: usize, toks: &[&str]) -> Result<LinExpr, ConicError> {
    let num = |s: &str| s.parse::<f64>().map_err(|_| err(line, "bad number"));
    let constant = num(toks.first().ok_or_else(|| err(line, "missing constant"))?)?;
    let mut terms = Vec::with_capacity(toks.len().saturating_sub(1));
    for t in &toks[1..] {
        let (i, c) = t.split_once(':').ok_or_else(|| err(line, "bad term"))?;
        let i = i.parse::<usize>().map_err(|_| err(line, "bad index"))?;
        terms.push((i, num(c)?));
    }
    if terms.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(err(line, "terms not strictly increasing"));
    }
    Ok(LinExpr { terms, constant })
}

pub fn parse_dump(text: &str) -> Result<ConicProblem, ConicError> {
    let mut lines = text.lines().enumerate().peekable();
    match lines.next() {
        Some((_, HEADER)) => {}
        _ => return Err(err(0, "missing header")),
    }
    let mut problem = ConicProblem {
        n_vars: 0,
        objective: LinExpr::zero(),
        blocks: Vec::new(),
        registry: Vec::new(),
    };
    let mut ended = false;
    while let Some((ln, line)) = lines.next() {
        let (kw, rest) = line.split_once(' ').unwrap_or((line, ""));
        match kw {
            "vars" => problem.n_vars = rest.parse().map_err(|_| err(ln, "bad count"))?,
            "var" => {
                let mut p = rest.splitn(3, ' ');
                let start: usize = p.next().and_then(|s| s.parse().ok()).ok_or_else(|| err(ln, "bad start"))?;
                let len: usize = p.next().and_then(|s| s.parse().ok()).ok_or_else(|| err(ln, "bad length"))?;
                let name = p.next().unwrap_or("").to_string();
                problem.registry.push(VarEntry {
                    name,
                    range: start..start + len,
                });
            }
            "obj" => {
                let toks: Vec<&str> = rest.split_whitespace().collect();
                problem.objective = parse_expr(ln, &toks)?;
            }
            "block" => {
                let mut p = rest.splitn(4, ' ');
                let tag = p.next().unwrap_or("");
                let dim: usize = p.next().and_then(|s| s.parse().ok()).ok_or_else(|| err(ln, "bad dim"))?;
                let n_rows: usize = p.next().and_then(|s| s.parse().ok()).ok_or_else(|| err(ln, "bad rows"))?;
                let label = p.next().unwrap_or("").to_string();
                let cone = match tag {
                    "zero" => Cone::Zero,
                    "nonneg" => Cone::Nonneg,
                    "soc" => Cone::Soc,
                    "rsoc" => Cone::Rsoc,
                    "psd" => Cone::Psd(dim),
                    _ => return Err(err(ln, "unknown cone")),
                };
                let mut rows = Vec::with_capacity(n_rows);
                for _ in 0..n_rows {
                    let (rl, row) = lines.next().ok_or_else(|| err(ln, "truncated block"))?;
                    let toks: Vec<&str> = row.split_whitespace().collect();
                    if toks.first() != Some(&"row") {
                        return Err(err(rl, "expected row"));
                    }
                    rows.push(parse_expr(rl, &toks[1..])?);
                }
                problem.blocks.push(ConeBlock { cone, rows, label });
            }
            "end" => {
                ended = true;
                break;
            }
            _ => return Err(err(ln, "unknown record")),
        }
    }
    if !ended {
        return Err(ConicError::Parse("missing end marker".into()));
    }
    problem.validate()?;
    Ok(problem)
}
