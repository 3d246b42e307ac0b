//! Ingestion of inter-regional transmission records into a complete-graph
//! instance: region covariates become per-edge source/destination columns,
//! optionally log-transformed, always standardized to mean 0 and unit
//! standard deviation per column across the edges.

use anyhow::{anyhow, bail, Context, Result};
use spreadfit::graph::Graph;
use spreadfit::sim::Trace;

pub struct RegionTable {
    pub names: Vec<String>,
    pub covariate_names: Vec<String>,
    /// regions x p row-major.
    pub values: Vec<f64>,
}

/// Covariates CSV: header `region,<name1>,...,<namep>`, one row per region.
pub fn parse_region_covariates(text: &str) -> Result<RegionTable> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| anyhow!("empty covariates file"))?;
    let cols: Vec<&str> = header.trim_end().split(',').collect();
    if cols.len() < 2 || cols[0].trim() != "region" {
        bail!("row 1: header must be region,<covariate names>");
    }
    let covariate_names: Vec<String> = cols[1..].iter().map(|s| s.trim().to_string()).collect();
    let p = covariate_names.len();
    let mut names = Vec::new();
    let mut values = Vec::new();
    for (idx, line) in lines {
        let row = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        if fields.len() != p + 1 {
            bail!(
                "row {}: expected {} fields, found {}",
                row,
                p + 1,
                fields.len()
            );
        }
        let name = fields[0].trim();
        if name.is_empty() {
            bail!("row {}: empty region name", row);
        }
        if names.iter().any(|n| n == name) {
            bail!("row {}: duplicate region {:?}", row, name);
        }
        names.push(name.to_string());
        for (j, f) in fields[1..].iter().enumerate() {
            let v: f64 = f
                .trim()
                .parse()
                .with_context(|| format!("row {}: covariate {:?} is not numeric", row, f))?;
            if !v.is_finite() {
                bail!("row {}: covariate {} is not finite", row, j + 1);
            }
            values.push(v);
        }
    }
    if names.is_empty() {
        bail!("covariates file has no regions");
    }
    Ok(RegionTable {
        names,
        covariate_names,
        values,
    })
}

pub struct Transmissions {
    /// (time, source region index, destination region index) sorted by time.
    pub rows: Vec<(u64, usize, usize)>,
}

/// Transmissions CSV: header `t,src_region,dst_region`.
pub fn parse_transmissions(text: &str, regions: &RegionTable) -> Result<Transmissions> {
    let index_of = |name: &str, row: usize| -> Result<usize> {
        regions
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| anyhow!("row {}: unknown region {:?}", row, name))
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| anyhow!("empty transmissions file"))?;
    if header.trim_end() != "t,src_region,dst_region" {
        bail!("row 1: header must be t,src_region,dst_region");
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let row = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        if fields.len() != 3 {
            bail!("row {}: expected 3 fields", row);
        }
        let t: u64 = fields[0]
            .trim()
            .parse()
            .with_context(|| format!("row {}: t is not an integer", row))?;
        let src = index_of(fields[1].trim(), row)?;
        let dst = index_of(fields[2].trim(), row)?;
        rows.push((t, src, dst));
    }
    if rows.is_empty() {
        bail!("transmissions file has no rows");
    }
    let mut sorted = rows.clone();
    sorted.sort_by_key(|r| r.0);
    for pair in sorted.windows(2) {
        if pair[0].0 == pair[1].0 {
            bail!("duplicate time index {} in transmissions", pair[0].0);
        }
    }
    Ok(Transmissions { rows: sorted })
}

/// Assemble the complete digraph over the regions (self-loops included) with
/// edge covariates `[src columns | dst columns]` and the ordered trace. The
/// seed is the source region of the earliest transmission.
pub fn ingest_transmissions(
    transmissions_text: &str,
    covariates_text: &str,
    log_transform: bool,
) -> Result<(Graph<f64>, Trace)> {
    let regions = parse_region_covariates(covariates_text)?;
    let trans = parse_transmissions(transmissions_text, &regions)?;
    let n = regions.names.len();
    let p = regions.covariate_names.len();

    let mut region_values = regions.values.clone();
    if log_transform {
        for r in 0..n {
            for j in 0..p {
                let v = region_values[r * p + j];
                if v <= 0.0 {
                    bail!(
                        "region {:?}: covariate {:?} is not positive under the log transform",
                        regions.names[r],
                        regions.covariate_names[j]
                    );
                }
                region_values[r * p + j] = v.ln();
            }
        }
    }

    // complete digraph, source-major enumeration, self-loops included
    let d = 2 * p;
    let m = n * n;
    let mut edges = Vec::with_capacity(m);
    let mut covs = Vec::with_capacity(m * d);
    for s in 0..n {
        for t in 0..n {
            edges.push((s, t));
            covs.extend_from_slice(&region_values[s * p..(s + 1) * p]);
            covs.extend_from_slice(&region_values[t * p..(t + 1) * p]);
        }
    }
    // standardize each edge-covariate column to mean 0, sd 1
    for j in 0..d {
        let mean = (0..m).map(|e| covs[e * d + j]).sum::<f64>() / m as f64;
        let var = (0..m)
            .map(|e| (covs[e * d + j] - mean).powi(2))
            .sum::<f64>()
            / m as f64;
        if var <= 0.0 {
            bail!(
                "edge covariate column {} is constant; cannot standardize",
                j + 1
            );
        }
        let sd = var.sqrt();
        for e in 0..m {
            covs[e * d + j] = (covs[e * d + j] - mean) / sd;
        }
    }
    let graph = Graph::new(n, &edges, covs, d).map_err(|e| anyhow!(e.to_string()))?;

    let seed = trans.rows[0].1;
    let events: Vec<usize> = trans.rows.iter().map(|&(_, s, t)| s * n + t).collect();
    let trace = Trace { seed, events };
    // replay validates that every source was infected when it transmitted
    spreadfit::sim::counts_from_trace(&graph, &trace)
        .map_err(|e| anyhow!("transmissions do not form a valid trace: {}", e))?;
    Ok((graph, trace))
}
