//! Plain-text graph files.
//!
//! ```text
//! # optional comments
//! digraph <n> <d>        (or: graph <n> <d>)
//! <d out-neighbours of vertex 0>
//! ...
//! <d out-neighbours of vertex n-1>
//! ```
//!
//! Undirected files list every edge at both endpoints. Parsing is strict.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::generate::Graph;
use crate::graph::{GraphError, RegularDigraph, UndirectedRegularGraph};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("expected a {expected} file, found {found}")]
    FormatMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("invalid graph: {0}")]
    Invalid(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn parse_err(line: usize, reason: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        reason: reason.into(),
    }
}

pub fn parse_graph(text: &str) -> Result<Graph, FormatError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [kind, n, d] = fields[..] else {
        return Err(parse_err(hline, "header must be '<digraph|graph> <n> <d>'"));
    };
    let directed = match kind {
        "digraph" => true,
        "graph" => false,
        other => return Err(parse_err(hline, format!("unknown graph kind '{other}'"))),
    };
    let n: usize = n
        .parse()
        .map_err(|_| parse_err(hline, format!("bad vertex count '{n}'")))?;
    let d: usize = d
        .parse()
        .map_err(|_| parse_err(hline, format!("bad degree '{d}'")))?;

    let mut adj = Vec::with_capacity(n);
    for (lineno, line) in lines {
        if adj.len() == n {
            return Err(parse_err(lineno, format!("more than {n} adjacency lines")));
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<usize>()
                    .map_err(|_| parse_err(lineno, format!("bad vertex '{tok}'")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != d {
            return Err(parse_err(
                lineno,
                format!("expected {d} neighbours, found {}", row.len()),
            ));
        }
        adj.push(row);
    }
    if adj.len() != n {
        return Err(parse_err(
            text.lines().count(),
            format!("expected {n} adjacency lines, found {}", adj.len()),
        ));
    }
    Ok(if directed {
        Graph::Directed(RegularDigraph::new(n, d, adj)?)
    } else {
        Graph::Undirected(UndirectedRegularGraph::new(n, d, adj)?)
    })
}

pub fn render_graph(graph: &Graph) -> String {
    let (kind, n, d, adj) = match graph {
        Graph::Directed(g) => ("digraph", g.n(), g.d(), g.out_adj()),
        Graph::Undirected(g) => ("graph", g.n(), g.d(), g.adj()),
    };
    let mut out = format!("{kind} {n} {d}\n");
    for row in adj {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<Graph, FormatError> {
    parse_graph(&fs::read_to_string(path)?)
}

pub fn write_graph(graph: &Graph, path: impl AsRef<Path>) -> Result<(), FormatError> {
    fs::write(path, render_graph(graph))?;
    Ok(())
}

pub fn read_digraph(path: impl AsRef<Path>) -> Result<RegularDigraph, FormatError> {
    match read_graph(path)? {
        Graph::Directed(g) => Ok(g),
        Graph::Undirected(_) => Err(FormatError::FormatMismatch {
            expected: "digraph",
            found: "graph",
        }),
    }
}

pub fn read_undirected(path: impl AsRef<Path>) -> Result<UndirectedRegularGraph, FormatError> {
    match read_graph(path)? {
        Graph::Undirected(g) => Ok(g),
        Graph::Directed(_) => Err(FormatError::FormatMismatch {
            expected: "graph",
            found: "digraph",
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{gen_family, Family};

    #[test]
    fn round_trip_complete_loops() {
        let g = gen_family(Family::CompleteLoops, 3, 3).unwrap();
        let text = render_graph(&g);
        assert!(text.starts_with("digraph 3 3\n"));
        assert_eq!(parse_graph(&text).unwrap(), g);
    }

    #[test]
    fn file_round_trip() {
        let dir = std::env::temp_dir().join(format!("cf-format-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("clique.txt");
        let g = gen_family(Family::CliqueUnion, 8, 3).unwrap();
        write_graph(&g, &path).unwrap();
        assert_eq!(read_graph(&path).unwrap(), g);
        assert!(matches!(
            read_digraph(&path),
            Err(FormatError::FormatMismatch { .. })
        ));
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn wrong_neighbour_count() {
        let err = parse_graph("digraph 3 2\n0 1\n1 2 0\n2 0\n").unwrap_err();
        assert!(matches!(err, FormatError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn comments_ignored() {
        let g = parse_graph("# a comment\ndigraph 2 1\n# inside\n1\n0\n").unwrap();
        assert_eq!(g.n(), 2);
    }

    #[test]
    fn strictness() {
        assert!(parse_graph("digraph 2 1\n1\n").is_err());
        assert!(parse_graph("digraph 2 1\n1\n0\n1\n").is_err());
        assert!(parse_graph("graph 3 1\n1\n2\n0\n").is_err());
        assert!(parse_graph("digraph 2 2\n0 0\n1 1\n").is_err());
        assert!(parse_graph("multigraph 2 1\n1\n0\n").is_err());
    }
}
