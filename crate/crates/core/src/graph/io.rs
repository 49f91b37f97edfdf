//! Edge-list ingestion: SNAP tab/space separated, MatrixMarket coordinate, and CSV.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeListFormat {
    SnapTsv,
    MatrixMarket,
    Csv,
}

impl FromStr for EdgeListFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snap" | "snap-tsv" | "tsv" => Ok(EdgeListFormat::SnapTsv),
            "mtx" | "matrix-market" => Ok(EdgeListFormat::MatrixMarket),
            "csv" => Ok(EdgeListFormat::Csv),
            other => Err(Error::InvalidParameter(format!("unknown format {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub nodes: usize,
    pub edges: usize,
    pub duplicates: usize,
    pub self_loops: usize,
}

pub fn load_edge_list(path: &Path, format: EdgeListFormat, directed: bool) -> Result<Graph> {
    let file = File::open(path)?;
    let (g, report) = read_edge_list(BufReader::new(file), format, directed, path)?;
    log::info!(
        "loaded {}: {} nodes, {} edges",
        path.display(),
        report.nodes,
        report.edges
    );
    if report.duplicates > 0 {
        log::warn!("{}: collapsed {} duplicate edges", path.display(), report.duplicates);
    }
    if report.self_loops > 0 {
        log::warn!("{}: graph has {} self-loops", path.display(), report.self_loops);
    }
    Ok(g)
}

/// Parses an edge list from any reader. `origin` is only used in error messages.
pub fn read_edge_list<R: BufRead>(
    reader: R,
    format: EdgeListFormat,
    directed: bool,
    origin: &Path,
) -> Result<(Graph, LoadReport)> {
    let parsed = match format {
        EdgeListFormat::SnapTsv => parse_pairs(reader, origin, Delim::Whitespace)?,
        EdgeListFormat::Csv => parse_pairs(reader, origin, Delim::Comma)?,
        EdgeListFormat::MatrixMarket => parse_matrix_market(reader, origin, directed)?,
    };
    if parsed.labels.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let (graph, duplicates) = Graph::with_labels(parsed.labels, &parsed.edges, directed)?;
    let report = LoadReport {
        nodes: graph.node_count(),
        edges: graph.edge_count(),
        duplicates,
        self_loops: graph.self_loop_count(),
    };
    Ok((graph, report))
}

/// Writes `graph` as a SNAP edge list using external labels.
pub fn write_snap_tsv<W: Write>(graph: &Graph, mut out: W) -> Result<()> {
    writeln!(
        out,
        "# {} graph",
        if graph.is_directed() { "Directed" } else { "Undirected" }
    )?;
    writeln!(out, "# Nodes: {} Edges: {}", graph.node_count(), graph.edge_count())?;
    for &(u, v) in graph.edges() {
        writeln!(out, "{}\t{}", graph.label(u), graph.label(v))?;
    }
    Ok(())
}

struct Parsed {
    labels: Vec<String>,
    edges: Vec<(usize, usize)>,
}

#[derive(Clone, Copy)]
enum Delim {
    Whitespace,
    Comma,
}

fn parse_error(origin: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: PathBuf::from(origin),
        line,
        message: message.into(),
    }
}

fn parse_pairs<R: BufRead>(reader: R, origin: &Path, delim: Delim) -> Result<Parsed> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::new();
    let mut edges = Vec::new();
    let mut seen_data = false;

    let mut intern = |label: &str, labels: &mut Vec<String>| -> usize {
        if let Some(&id) = index.get(label) {
            return id;
        }
        let id = labels.len();
        labels.push(label.to_owned());
        index.insert(label.to_owned(), id);
        id
    };

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = match delim {
            Delim::Whitespace => trimmed.split_whitespace().collect(),
            Delim::Comma => trimmed.split(',').map(str::trim).collect(),
        };
        if fields.len() < 2 || fields[0].is_empty() || fields[1].is_empty() {
            return Err(parse_error(origin, lineno, format!("expected two endpoints, got {trimmed:?}")));
        }
        let (u, v) = (fields[0], fields[1]);
        match delim {
            Delim::Whitespace => {
                for f in [u, v] {
                    if f.parse::<i64>().is_err() {
                        return Err(parse_error(origin, lineno, format!("node id {f:?} is not an integer")));
                    }
                }
            }
            Delim::Comma => {
                let numeric = u.parse::<i64>().is_ok() && v.parse::<i64>().is_ok();
                if !seen_data && !numeric {
                    // header row
                    seen_data = true;
                    continue;
                }
            }
        }
        seen_data = true;
        let a = intern(u, &mut labels);
        let b = intern(v, &mut labels);
        edges.push((a, b));
    }
    Ok(Parsed { labels, edges })
}

fn parse_matrix_market<R: BufRead>(reader: R, origin: &Path, directed: bool) -> Result<Parsed> {
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_error(origin, 1, "missing MatrixMarket header"))?;
    let header = header?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() < 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" || tokens[2] != "coordinate" {
        return Err(parse_error(
            origin,
            1,
            "expected \"%%MatrixMarket matrix coordinate <field> <symmetry>\"",
        ));
    }
    if !matches!(tokens[3].as_str(), "pattern" | "integer" | "real") {
        return Err(parse_error(origin, 1, format!("unsupported field type {}", tokens[3])));
    }
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" | "skew-symmetric" | "hermitian" => true,
        other => return Err(parse_error(origin, 1, format!("unsupported symmetry {other}"))),
    };

    let mut n = None;
    let mut edges = Vec::new();
    for (lineno, line) in lines {
        let lineno = lineno + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let parse_idx = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| parse_error(origin, lineno, format!("bad index {s:?}")))
        };
        match n {
            None => {
                if fields.len() != 3 {
                    return Err(parse_error(origin, lineno, "expected \"rows cols entries\""));
                }
                let rows = parse_idx(fields[0])?;
                let cols = parse_idx(fields[1])?;
                if rows != cols {
                    return Err(parse_error(origin, lineno, "adjacency matrix must be square"));
                }
                n = Some(rows);
            }
            Some(n) => {
                if fields.len() < 2 {
                    return Err(parse_error(origin, lineno, "expected \"row col [value]\""));
                }
                let i = parse_idx(fields[0])?;
                let j = parse_idx(fields[1])?;
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(parse_error(origin, lineno, format!("entry ({i}, {j}) outside 1..={n}")));
                }
                edges.push((i - 1, j - 1));
                if symmetric && directed && i != j {
                    edges.push((j - 1, i - 1));
                }
            }
        }
    }
    let n = n.ok_or_else(|| parse_error(origin, 1, "missing size line"))?;
    Ok(Parsed {
        labels: (1..=n).map(|i| i.to_string()).collect(),
        edges,
    })
}
