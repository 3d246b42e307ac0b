//! Directed multigraph with per-edge covariates, exponential edge weights,
//! and the urn replacement matrix driving the spreading process.
//!
//! Vertices and edges are indexed from 0 in the Rust API; the CSV formats in
//! [`crate::io`] use 1-based ids. Parallel edges and self-loops are allowed.

use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};

/// Directed multigraph with an m x d covariate matrix (one row per edge).
///
/// Immutable after construction, so it can be shared freely across workers.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph<F: Scalar> {
    n: usize,
    src: Vec<usize>,
    dst: Vec<usize>,
    covariates: Vec<F>,
    d: usize,
}

impl<F: Scalar> Graph<F> {
    /// Build a graph from 0-based `(src, dst)` pairs and a row-major
    /// `m x d` covariate matrix.
    pub fn new(n: usize, edges: &[(usize, usize)], covariates: Vec<F>, d: usize) -> Result<Self> {
        let m = edges.len();
        if covariates.len() != m * d {
            return Err(Error::DimensionMismatch {
                expected: m * d,
                found: covariates.len(),
            });
        }
        for (row, &(s, t)) in edges.iter().enumerate() {
            if s >= n || t >= n {
                return Err(Error::MalformedRow {
                    row: row + 1,
                    msg: format!("vertex id out of range: ({}, {}) with n = {}", s, t, n),
                });
            }
        }
        Ok(Self {
            n,
            src: edges.iter().map(|e| e.0).collect(),
            dst: edges.iter().map(|e| e.1).collect(),
            covariates,
            d,
        })
    }

    /// Directed n-cycle `0 -> 1 -> ... -> n-1 -> 0`; edge i carries row i of
    /// `covariates` (n x d).
    pub fn directed_cycle(n: usize, covariates: Vec<F>, d: usize) -> Result<Self> {
        let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::new(n, &edges, covariates, d)
    }

    /// Directed n-cycle plus one self-loop per vertex. Cycle edge i carries
    /// `[inter_covariates row i, 0]`; every self-loop carries the standard
    /// basis vector `e_{d+1}`. Cycle edges come first in the enumeration.
    pub fn cycle_with_loops(n: usize, inter_covariates: Vec<F>, d: usize) -> Result<Self> {
        if inter_covariates.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                found: inter_covariates.len(),
            });
        }
        let full_d = d + 1;
        let mut edges = Vec::with_capacity(2 * n);
        let mut covs = Vec::with_capacity(2 * n * full_d);
        for i in 0..n {
            edges.push((i, (i + 1) % n));
            covs.extend_from_slice(&inter_covariates[i * d..(i + 1) * d]);
            covs.push(F::zero());
        }
        for i in 0..n {
            edges.push((i, i));
            for j in 0..full_d {
                covs.push(if j == d { F::one() } else { F::zero() });
            }
        }
        Self::new(n, &edges, covs, full_d)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.src.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn src(&self, e: usize) -> usize {
        self.src[e]
    }

    pub fn dst(&self, e: usize) -> usize {
        self.dst[e]
    }

    pub fn covariate_row(&self, e: usize) -> &[F] {
        &self.covariates[e * self.d..(e + 1) * self.d]
    }

    pub fn covariates(&self) -> &[F] {
        &self.covariates
    }

    /// `w(e) = exp(x_e' beta)`, strictly positive. Errors when the exponent
    /// magnitude exceeds the overflow guard (700 for f64, narrower for f32).
    pub fn edge_weights(&self, beta: &[F]) -> Result<Vec<F>> {
        if beta.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: beta.len(),
            });
        }
        let limit = cast::<F>(700.0).min(F::max_value().ln() - F::one());
        let mut w = Vec::with_capacity(self.m());
        for e in 0..self.m() {
            let eta: F = self
                .covariate_row(e)
                .iter()
                .zip(beta)
                .map(|(&x, &b)| x * b)
                .sum();
            if eta.abs() > limit || !eta.is_finite() {
                return Err(Error::ExponentOverflow {
                    value: crate::scalar::to_f64(eta),
                    limit: crate::scalar::to_f64(limit),
                });
            }
            w.push(eta.exp());
        }
        Ok(w)
    }

    /// True iff every vertex reaches every other along directed edges.
    /// Kosaraju's two-pass scheme with explicit stacks.
    pub fn strongly_connected(&self) -> bool {
        let n = self.n;
        if n == 0 {
            return false;
        }
        if n == 1 {
            return true;
        }
        let mut fwd = vec![Vec::new(); n];
        let mut rev = vec![Vec::new(); n];
        for e in 0..self.m() {
            fwd[self.src[e]].push(self.dst[e]);
            rev[self.dst[e]].push(self.src[e]);
        }
        let reach = |adj: &[Vec<usize>]| -> usize {
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            let mut count = 1;
            while let Some(v) = stack.pop() {
                for &u in &adj[v] {
                    if !seen[u] {
                        seen[u] = true;
                        count += 1;
                        stack.push(u);
                    }
                }
            }
            count
        };
        reach(&fwd) == n && reach(&rev) == n
    }

    /// Urn replacement matrix for the given edge weights:
    /// `W[e][f] = w(f)` when `dst(e) = src(f)`, else 0.
    pub fn replacement_matrix(&self, w: &[F]) -> Result<UrnMatrix<F>> {
        let m = self.m();
        if w.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: w.len(),
            });
        }
        let mut data = vec![F::zero(); m * m];
        for e in 0..m {
            for f in 0..m {
                if self.dst[e] == self.src[f] {
                    data[e * m + f] = w[f];
                }
            }
        }
        Ok(UrnMatrix { m, data })
    }
}

/// Dense m x m nonnegative replacement matrix over edge indices.
#[derive(Debug, Clone, PartialEq)]
pub struct UrnMatrix<F: Scalar> {
    m: usize,
    data: Vec<F>,
}

impl<F: Scalar> UrnMatrix<F> {
    pub fn from_dense(m: usize, data: Vec<F>) -> Result<Self> {
        if data.len() != m * m {
            return Err(Error::DimensionMismatch {
                expected: m * m,
                found: data.len(),
            });
        }
        Ok(Self { m, data })
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn get(&self, e: usize, f: usize) -> F {
        self.data[e * self.m + f]
    }

    pub fn as_slice(&self) -> &[F] {
        &self.data
    }

    /// Left action `out = pi' W`, accumulated row by row.
    pub fn left_apply(&self, pi: &[F], out: &mut [F]) {
        assert_eq!(pi.len(), self.m);
        assert_eq!(out.len(), self.m);
        for o in out.iter_mut() {
            *o = F::zero();
        }
        for e in 0..self.m {
            let pe = pi[e];
            if pe == F::zero() {
                continue;
            }
            let row = &self.data[e * self.m..(e + 1) * self.m];
            for (o, &v) in out.iter_mut().zip(row) {
                *o = *o + pe * v;
            }
        }
    }
}
