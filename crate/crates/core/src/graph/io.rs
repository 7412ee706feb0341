//! Line-oriented text format: a header `n m`, then `m` lines `u v` with
//! 0-based endpoints. Loops are written `u u`, parallel edges are repeated,
//! and edge indices follow file order. Blank lines and `#` comments are
//! skipped when reading.

use std::fmt::Write as _;
use std::path::Path;

use super::MultiGraph;
use crate::error::{Error, Result};

impl MultiGraph {
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(16 * (self.edge_count() + 1));
        writeln!(out, "{} {}", self.vertex_count(), self.edge_count()).unwrap();
        for &(u, v) in self.edges() {
            writeln!(out, "{u} {v}").unwrap();
        }
        out
    }
}

pub fn parse_text(text: &str) -> Result<MultiGraph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (line, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let (n, m) = parse_pair(line, header)?;
    let mut g = MultiGraph::new(n);
    for _ in 0..m {
        let (line, text) = lines.next().ok_or(Error::Parse {
            line,
            message: format!("expected {m} edges, found {}", g.edge_count()),
        })?;
        let (u, v) = parse_pair(line, text)?;
        g.add_edge(u, v).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::Parse {
            line,
            message: "trailing content after the declared edges".into(),
        });
    }
    Ok(g)
}

fn parse_pair(line: usize, text: &str) -> Result<(usize, usize)> {
    let mut fields = text.split_whitespace();
    let mut next = || -> Result<usize> {
        let field = fields.next().ok_or(Error::Parse {
            line,
            message: "expected two integers".into(),
        })?;
        field.parse().map_err(|_| Error::Parse {
            line,
            message: format!("not a non-negative integer: {field:?}"),
        })
    };
    let pair = (next()?, next()?);
    if fields.next().is_some() {
        return Err(Error::Parse {
            line,
            message: "expected exactly two integers".into(),
        });
    }
    Ok(pair)
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<MultiGraph> {
    parse_text(&std::fs::read_to_string(path)?)
}

pub fn write_graph(graph: &MultiGraph, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, graph.to_text())?;
    Ok(())
}
