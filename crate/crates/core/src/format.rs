//! Plain-text instance files.
//!
//! ```text
//! # comment lines and blank lines are ignored
//! m 3
//! n 4
//! k 2
//! weights 1 1 0 0
//! costs
//! 0 5 10 11
//! 4 1 6 7
//! 10 5 0 1
//! ```
//!
//! Scalar keys `m`, `n`, `k` and the `weights` line (n reals) may come in
//! any order, but `m` and `n` must precede the matrix block. The block is
//! either `costs` followed by m rows of n reals, or `points <dim>` followed
//! by m facility rows and then n client rows of `dim` coordinates each; costs
//! are then the Euclidean distances. Exactly one block is allowed.
//! Non-metric cost matrices are rejected.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::instance::{Instance, PointSet};
use crate::matrix::Matrix;

enum Block {
    Costs(Vec<Vec<f64>>),
    Points(usize, Vec<Vec<f64>>),
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_usize(tok: Option<&str>, line: usize, key: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("`{key}` needs a value")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("`{key}`: `{tok}` is not a non-negative integer")))
}

fn parse_reals<'a>(toks: impl Iterator<Item = &'a str>, line: usize) -> Result<Vec<f64>> {
    toks.map(|t| {
        t.parse::<f64>()
            .map_err(|_| parse_err(line, format!("`{t}` is not a number")))
    })
    .collect()
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (mut m, mut n, mut k) = (None, None, None);
    let mut weights: Option<Vec<f64>> = None;
    let mut block: Option<Block> = None;
    let mut last_line = 0;

    while let Some((ln, line)) = lines.next() {
        last_line = ln;
        let mut toks = line.split_whitespace();
        let key = toks.next().unwrap_or_default();
        match key {
            "m" | "n" | "k" => {
                let v = parse_usize(toks.next(), ln, key)?;
                let slot = match key {
                    "m" => &mut m,
                    "n" => &mut n,
                    _ => &mut k,
                };
                if slot.replace(v).is_some() {
                    return Err(parse_err(ln, format!("duplicate key `{key}`")));
                }
            }
            "weights" => {
                if weights.is_some() {
                    return Err(parse_err(ln, "duplicate key `weights`"));
                }
                weights = Some(parse_reals(toks, ln)?);
            }
            "costs" | "points" => {
                if block.is_some() {
                    return Err(parse_err(ln, "only one `costs` or `points` block is allowed"));
                }
                let (mm, nn) = match (m, n) {
                    (Some(a), Some(b)) => (a, b),
                    _ => return Err(parse_err(ln, format!("`m` and `n` must precede `{key}`"))),
                };
                let (rows, width, dim) = if key == "costs" {
                    (mm, nn, None)
                } else {
                    let d = parse_usize(toks.next(), ln, "points")?;
                    (mm + nn, d, Some(d))
                };
                let mut data = Vec::with_capacity(rows);
                for r in 0..rows {
                    let (rl, row) = lines.next().ok_or_else(|| {
                        parse_err(ln, format!("`{key}` block ends after {r} of {rows} rows"))
                    })?;
                    last_line = rl;
                    let vals = parse_reals(row.split_whitespace(), rl)?;
                    if vals.len() != width {
                        return Err(parse_err(
                            rl,
                            format!("expected {width} values, found {}", vals.len()),
                        ));
                    }
                    data.push(vals);
                }
                block = Some(match dim {
                    None => Block::Costs(data),
                    Some(d) => Block::Points(d, data),
                });
            }
            other => return Err(parse_err(ln, format!("unknown key `{other}`"))),
        }
    }

    let end = last_line + 1;
    let m = m.ok_or_else(|| parse_err(end, "missing `m`"))?;
    let n = n.ok_or_else(|| parse_err(end, "missing `n`"))?;
    let k = k.ok_or_else(|| parse_err(end, "missing `k`"))?;
    let weights = weights.ok_or_else(|| parse_err(end, "missing `weights`"))?;
    if weights.len() != n {
        return Err(parse_err(
            end,
            format!("`weights` has {} entries, expected n = {n}", weights.len()),
        ));
    }
    let inst = match block.ok_or_else(|| parse_err(end, "missing `costs` or `points` block"))? {
        Block::Costs(rows) => {
            let costs = Matrix::from_rows(&rows).expect("row widths checked while parsing");
            Instance::new(costs, k, weights)?
        }
        Block::Points(dim, coords) => Instance::from_points(PointSet { dim, coords }, m, k, weights)?,
    };
    if !inst.is_metric() {
        let v = crate::instance::validate_metric(inst.costs()).unwrap_err();
        return Err(Error::NonMetric(v.to_string()));
    }
    Ok(inst)
}

/// Renders an instance; `parse_instance(&serialize_instance(x))` rebuilds
/// an identical instance (floats use shortest round-trip formatting).
pub fn serialize_instance(inst: &Instance) -> String {
    let mut out = String::new();
    let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
    writeln!(out, "m {}", inst.m()).unwrap();
    writeln!(out, "n {}", inst.n()).unwrap();
    writeln!(out, "k {}", inst.k()).unwrap();
    writeln!(out, "weights {}", join(inst.weights())).unwrap();
    match inst.points() {
        Some(p) => {
            writeln!(out, "points {}", p.dim).unwrap();
            for c in &p.coords {
                writeln!(out, "{}", join(c)).unwrap();
            }
        }
        None => {
            writeln!(out, "costs").unwrap();
            for i in 0..inst.m() {
                writeln!(out, "{}", join(inst.costs().row(i))).unwrap();
            }
        }
    }
    out
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    parse_instance(&std::fs::read_to_string(path)?)
}

pub fn write_instance(path: &Path, inst: &Instance) -> Result<()> {
    std::fs::write(path, serialize_instance(inst))?;
    Ok(())
}
