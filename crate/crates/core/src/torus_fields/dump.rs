//! `FLOCKFIELD v1` text dumps.
//!
//! A dump is one or more blocks, each a header line
//! `FLOCKFIELD v1 dim=<n> N=<N> name=<id> t=<time>` followed by `N^n` node
//! values in row-major order, one per line, printed with shortest round-trip
//! formatting.

use std::fmt::Write as _;
use std::sync::Arc;

use super::field::ScalarField;
use super::grid::TorusGrid;
use crate::error::{Error, Result};

const MAGIC: &str = "FLOCKFIELD";
const VERSION: &str = "v1";

#[derive(Debug, Clone)]
pub struct FieldBlock {
    pub name: String,
    pub t: f64,
    pub field: ScalarField,
}

/// Appends one block to `out`.
pub fn write_block(out: &mut String, name: &str, t: f64, field: &ScalarField) {
    assert!(
        !name.is_empty() && !name.contains(char::is_whitespace),
        "field names must be non-empty and whitespace-free"
    );
    let grid = field.grid();
    let _ = writeln!(
        out,
        "{MAGIC} {VERSION} dim={} N={} name={} t={:?}",
        grid.dim(),
        grid.points_per_dim(),
        name,
        t
    );
    for v in field.values() {
        let _ = writeln!(out, "{v:?}");
    }
}

pub fn format_blocks<'a>(blocks: impl IntoIterator<Item = (&'a str, f64, &'a ScalarField)>) -> String {
    let mut out = String::new();
    for (name, t, f) in blocks {
        write_block(&mut out, name, t, f);
    }
    out
}

fn header_value<'a>(token: Option<&'a str>, key: &str, line: usize) -> Result<&'a str> {
    token
        .and_then(|t| t.strip_prefix(key))
        .and_then(|t| t.strip_prefix('='))
        .ok_or_else(|| Error::Format(format!("line {line}: expected `{key}=`")))
}

/// Parses every block in `text`. Blocks sharing `dim`/`N` share one grid.
pub fn parse_blocks(text: &str) -> Result<Vec<FieldBlock>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let mut blocks = Vec::new();
    let mut grid: Option<Arc<TorusGrid>> = None;

    while let Some((lineno, header)) = lines.next() {
        let lineno = lineno + 1;
        let mut tok = header.split_whitespace();
        if tok.next() != Some(MAGIC) || tok.next() != Some(VERSION) {
            return Err(Error::Format(format!("line {lineno}: expected `{MAGIC} {VERSION}` header")));
        }
        let parse_usize = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::Format(format!("line {lineno}: {e}")))
        };
        let dim = parse_usize(header_value(tok.next(), "dim", lineno)?)?;
        let n = parse_usize(header_value(tok.next(), "N", lineno)?)?;
        let name = header_value(tok.next(), "name", lineno)?.to_string();
        let t: f64 = header_value(tok.next(), "t", lineno)?
            .parse()
            .map_err(|e| Error::Format(format!("line {lineno}: bad time: {e}")))?;

        let g = match &grid {
            Some(g) if g.dim() == dim && g.points_per_dim() == n => g.clone(),
            _ => {
                let g = TorusGrid::new(dim, n)?;
                grid = Some(g.clone());
                g
            }
        };
        let mut values = Vec::with_capacity(g.len());
        for _ in 0..g.len() {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| Error::Format(format!("block `{name}` truncated")))?;
            let v: f64 = l
                .trim()
                .parse()
                .map_err(|e| Error::Format(format!("line {}: {e}", ln + 1)))?;
            values.push(v);
        }
        blocks.push(FieldBlock {
            name,
            t,
            field: ScalarField::new(g, values)?,
        });
    }
    Ok(blocks)
}
