//! CSV formats for graphs, traces, and unordered counts.
//!
//! All vertex and edge ids are 1-based in files and 0-based in the API.
//! Graph files carry the header `edge_id,src,dst,x1,...,xd` with edge ids
//! required to run 1..m in file order, which keeps every reported vector
//! aligned with the file. Trace files carry `t,src,dst,edge_id` with the
//! seed row `1,,v1,`. Counts files carry `edge_id,count` with an optional
//! `# seed_vertex=<v>` comment line.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::scalar::{cast, to_f64, Scalar};
use crate::sim::Trace;

fn malformed(row: usize, msg: impl Into<String>) -> Error {
    Error::MalformedRow {
        row,
        msg: msg.into(),
    }
}

fn parse_usize(field: &str, row: usize, what: &str) -> Result<usize> {
    field.trim().parse::<usize>().map_err(|_| {
        malformed(
            row,
            format!("{} is not a positive integer: {:?}", what, field),
        )
    })
}

pub fn read_graph<F: Scalar>(path: &Path) -> Result<Graph<F>> {
    let text = fs::read_to_string(path)?;
    parse_graph(&text)
}

pub fn parse_graph<F: Scalar>(text: &str) -> Result<Graph<F>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| malformed(1, "empty graph file"))?;
    let cols: Vec<&str> = header.trim_end().split(',').collect();
    if cols.len() < 3
        || cols[0].trim() != "edge_id"
        || cols[1].trim() != "src"
        || cols[2].trim() != "dst"
    {
        return Err(malformed(1, "header must be edge_id,src,dst,x1,...,xd"));
    }
    let d = cols.len() - 3;
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut covs: Vec<F> = Vec::new();
    let mut max_vertex = 0usize;
    let mut seen_ids = std::collections::HashSet::new();
    for (idx, line) in lines {
        let row = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        if fields.len() != 3 + d {
            return Err(malformed(
                row,
                format!("expected {} fields, found {}", 3 + d, fields.len()),
            ));
        }
        let id = parse_usize(fields[0], row, "edge_id")?;
        if !seen_ids.insert(id) {
            return Err(Error::DuplicateEdgeId { row, id });
        }
        if id != edges.len() + 1 {
            return Err(malformed(
                row,
                format!(
                    "edge_id {} out of order; ids must run 1..m in file order",
                    id
                ),
            ));
        }
        let src = parse_usize(fields[1], row, "src")?;
        let dst = parse_usize(fields[2], row, "dst")?;
        if src == 0 || dst == 0 {
            return Err(malformed(row, "vertex ids are 1-based"));
        }
        max_vertex = max_vertex.max(src).max(dst);
        edges.push((src - 1, dst - 1));
        for (j, f) in fields[3..].iter().enumerate() {
            let v: f64 = f.trim().parse().map_err(|_| {
                malformed(row, format!("covariate x{} is not numeric: {:?}", j + 1, f))
            })?;
            if !v.is_finite() {
                return Err(malformed(
                    row,
                    format!("covariate x{} is not finite", j + 1),
                ));
            }
            covs.push(cast(v));
        }
    }
    if edges.is_empty() {
        return Err(malformed(1, "graph file has no edges"));
    }
    Graph::new(max_vertex, &edges, covs, d)
}

pub fn write_graph<F: Scalar>(path: &Path, g: &Graph<F>) -> Result<()> {
    fs::write(path, format_graph(g))?;
    Ok(())
}

pub fn format_graph<F: Scalar>(g: &Graph<F>) -> String {
    let mut out = String::from("edge_id,src,dst");
    for j in 1..=g.d() {
        let _ = write!(out, ",x{}", j);
    }
    out.push('\n');
    for e in 0..g.m() {
        let _ = write!(out, "{},{},{}", e + 1, g.src(e) + 1, g.dst(e) + 1);
        for x in g.covariate_row(e) {
            let _ = write!(out, ",{}", to_f64(*x));
        }
        out.push('\n');
    }
    out
}

/// Read a trace and validate it against the graph: edge ids must exist and
/// their endpoints must match the src/dst columns.
pub fn read_trace<F: Scalar>(path: &Path, g: &Graph<F>) -> Result<Trace> {
    let text = fs::read_to_string(path)?;
    parse_trace(&text, g)
}

pub fn parse_trace<F: Scalar>(text: &str, g: &Graph<F>) -> Result<Trace> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| malformed(1, "empty trace file"))?;
    if header.trim_end() != "t,src,dst,edge_id" {
        return Err(malformed(1, "header must be t,src,dst,edge_id"));
    }
    let mut seed: Option<usize> = None;
    let mut events: Vec<usize> = Vec::new();
    let mut expected_t = 1usize;
    for (idx, line) in lines {
        let row = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        if fields.len() != 4 {
            return Err(malformed(row, "expected 4 fields"));
        }
        let t = parse_usize(fields[0], row, "t")?;
        if t != expected_t {
            return Err(malformed(
                row,
                format!("time index {} out of order, expected {}", t, expected_t),
            ));
        }
        expected_t += 1;
        if t == 1 {
            if !fields[1].trim().is_empty() || !fields[3].trim().is_empty() {
                return Err(malformed(row, "seed row must leave src and edge_id empty"));
            }
            let v = parse_usize(fields[2], row, "seed vertex")?;
            if v == 0 || v > g.n() {
                return Err(malformed(row, format!("seed vertex {} out of range", v)));
            }
            seed = Some(v - 1);
        } else {
            let src = parse_usize(fields[1], row, "src")?;
            let dst = parse_usize(fields[2], row, "dst")?;
            let id = parse_usize(fields[3], row, "edge_id")?;
            if id == 0 || id > g.m() {
                return Err(malformed(row, format!("edge_id {} out of range", id)));
            }
            let e = id - 1;
            if g.src(e) != src - 1 || g.dst(e) != dst - 1 {
                return Err(malformed(
                    row,
                    format!(
                        "edge {} runs {} -> {} in the graph, not {} -> {}",
                        id,
                        g.src(e) + 1,
                        g.dst(e) + 1,
                        src,
                        dst
                    ),
                ));
            }
            events.push(e);
        }
    }
    let seed = seed.ok_or_else(|| malformed(1, "trace has no seed row"))?;
    Ok(Trace { seed, events })
}

pub fn write_trace<F: Scalar>(path: &Path, g: &Graph<F>, tr: &Trace) -> Result<()> {
    fs::write(path, format_trace(g, tr))?;
    Ok(())
}

pub fn format_trace<F: Scalar>(g: &Graph<F>, tr: &Trace) -> String {
    let mut out = String::from("t,src,dst,edge_id\n");
    let _ = writeln!(out, "1,,{},", tr.seed + 1);
    for (i, &e) in tr.events.iter().enumerate() {
        let _ = writeln!(out, "{},{},{},{}", i + 2, g.src(e) + 1, g.dst(e) + 1, e + 1);
    }
    out
}

/// Ordered vertex list as a trace file with src and edge_id left empty.
pub fn format_vertex_trace(vertices: &[usize]) -> String {
    let mut out = String::from("t,src,dst,edge_id\n");
    for (i, &v) in vertices.iter().enumerate() {
        let _ = writeln!(out, "{},,{},", i + 1, v + 1);
    }
    out
}

/// Read only the destination column of a trace file: the ordered vertex
/// list. Works for both full traces and vertex-only traces.
pub fn read_vertex_trace<F: Scalar>(path: &Path, g: &Graph<F>) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path)?;
    parse_vertex_trace(&text, g)
}

pub fn parse_vertex_trace<F: Scalar>(text: &str, g: &Graph<F>) -> Result<Vec<usize>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| malformed(1, "empty trace file"))?;
    if header.trim_end() != "t,src,dst,edge_id" {
        return Err(malformed(1, "header must be t,src,dst,edge_id"));
    }
    let mut vertices = Vec::new();
    let mut expected_t = 1usize;
    for (idx, line) in lines {
        let row = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        if fields.len() != 4 {
            return Err(malformed(row, "expected 4 fields"));
        }
        let t = parse_usize(fields[0], row, "t")?;
        if t != expected_t {
            return Err(malformed(row, format!("time index {} out of order", t)));
        }
        expected_t += 1;
        let v = parse_usize(fields[2], row, "dst")?;
        if v == 0 || v > g.n() {
            return Err(malformed(row, format!("vertex {} out of range", v)));
        }
        vertices.push(v - 1);
    }
    if vertices.is_empty() {
        return Err(malformed(1, "trace has no rows"));
    }
    Ok(vertices)
}

/// Counts file: per-edge transmission counts, optionally with the seed.
pub fn read_counts(path: &Path, m: usize) -> Result<(Vec<u64>, Option<usize>)> {
    let text = fs::read_to_string(path)?;
    parse_counts(&text, m)
}

pub fn parse_counts(text: &str, m: usize) -> Result<(Vec<u64>, Option<usize>)> {
    let mut seed = None;
    let mut counts = vec![0u64; m];
    let mut seen = vec![false; m];
    let mut header_seen = false;
    for (idx, line) in text.lines().enumerate() {
        let row = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(v) = comment.strip_prefix("seed_vertex=") {
                let v = parse_usize(v, row, "seed_vertex")?;
                if v == 0 {
                    return Err(malformed(row, "seed vertex ids are 1-based"));
                }
                seed = Some(v - 1);
            }
            continue;
        }
        if !header_seen {
            if trimmed != "edge_id,count" {
                return Err(malformed(row, "header must be edge_id,count"));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 2 {
            return Err(malformed(row, "expected 2 fields"));
        }
        let id = parse_usize(fields[0], row, "edge_id")?;
        if id == 0 || id > m {
            return Err(malformed(row, format!("edge_id {} out of range", id)));
        }
        if seen[id - 1] {
            return Err(Error::DuplicateEdgeId { row, id });
        }
        seen[id - 1] = true;
        counts[id - 1] = fields[1]
            .trim()
            .parse::<u64>()
            .map_err(|_| malformed(row, format!("count is not an integer: {:?}", fields[1])))?;
    }
    if !header_seen {
        return Err(malformed(1, "counts file has no header"));
    }
    Ok((counts, seed))
}

pub fn write_counts(path: &Path, counts: &[u64], seed: Option<usize>) -> Result<()> {
    fs::write(path, format_counts(counts, seed))?;
    Ok(())
}

pub fn format_counts(counts: &[u64], seed: Option<usize>) -> String {
    let mut out = String::new();
    if let Some(v) = seed {
        let _ = writeln!(out, "# seed_vertex={}", v + 1);
    }
    out.push_str("edge_id,count\n");
    for (e, &c) in counts.iter().enumerate() {
        let _ = writeln!(out, "{},{}", e + 1, c);
    }
    out
}
