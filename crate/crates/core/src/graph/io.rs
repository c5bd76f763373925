//! Edge-list text format.
//!
//! One undirected edge per line as two whitespace-separated non-negative
//! integer ids. Blank lines and lines starting with `#` are ignored, except
//! for an optional `# nodes: N` directive which declares the id space to be
//! exactly `0..N` (this keeps isolated nodes). Without the directive the
//! distinct ids are sorted and remapped to `0..N`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use super::Graph;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: Graph,
    /// `external_ids[dense]` is the id used in the file.
    pub external_ids: Vec<u64>,
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<LoadedGraph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text).map_err(|e| match e {
        Error::Parse { line, message, .. } => Error::Parse {
            path: Some(path.to_path_buf()),
            line,
            message,
        },
        other => other,
    })
}

pub fn parse_edge_list(text: &str) -> Result<LoadedGraph> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: None,
        line,
        message,
    };
    let mut declared: Option<usize> = None;
    let mut raw: Vec<(u64, u64)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(count) = comment.trim().strip_prefix("nodes:") {
                let n = count
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| parse_err(lineno, format!("bad node count: {e}")))?;
                declared = Some(n);
            }
            continue;
        }
        let mut tokens = line.split_whitespace();
        let mut id = || -> Result<u64> {
            let tok = tokens
                .next()
                .ok_or_else(|| parse_err(lineno, "expected two node ids".into()))?;
            tok.parse::<u64>()
                .map_err(|_| parse_err(lineno, format!("invalid node id {tok:?}")))
        };
        let (u, v) = (id()?, id()?);
        if let Some(extra) = tokens.next() {
            return Err(parse_err(lineno, format!("unexpected token {extra:?}")));
        }
        if u == v {
            return Err(parse_err(lineno, format!("self-loop on node {u}")));
        }
        raw.push((u, v));
    }

    let (node_count, external_ids) = match declared {
        Some(n) => {
            if let Some(&(u, v)) = raw.iter().find(|&&(u, v)| u.max(v) >= n as u64) {
                return Err(Error::Format(format!(
                    "edge ({u}, {v}) exceeds declared node count {n}"
                )));
            }
            (n, (0..n as u64).collect::<Vec<_>>())
        }
        None => {
            let ids: Vec<u64> = raw
                .iter()
                .flat_map(|&(u, v)| [u, v])
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            (ids.len(), ids)
        }
    };
    if node_count == 0 {
        return Err(Error::Format("edge list contains no nodes".into()));
    }
    let dense = |x: u64| -> usize {
        if declared.is_some() {
            x as usize
        } else {
            external_ids.binary_search(&x).expect("id collected above")
        }
    };
    let graph = Graph::from_edges(node_count, raw.iter().map(|&(u, v)| (dense(u), dense(v))))?;
    Ok(LoadedGraph {
        graph,
        external_ids,
    })
}

/// Canonical text form: node-count directive followed by `u v` lines with
/// `u < v` in ascending order.
pub fn write_edge_list(graph: &Graph) -> String {
    let mut out = String::with_capacity(graph.edge_count() * 10 + 32);
    let _ = writeln!(out, "# nodes: {}", graph.node_count());
    for (u, v) in graph.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}
