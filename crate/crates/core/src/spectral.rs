//! Perron left eigenvector of the urn matrix and the limiting quantities it
//! determines: the long-run edge-transmission distribution and the limiting
//! ball-count proportions.

use crate::error::{Error, Result};
use crate::graph::{Graph, UrnMatrix};
use crate::scalar::{cast, Scalar};

pub const DEFAULT_POWER_TOL: f64 = 1e-12;
pub const DEFAULT_POWER_MAX_ITERS: usize = 100_000;

/// Perron pair of an urn matrix: `pi` is a probability vector over edges
/// with `pi' W = lambda pi'`.
#[derive(Debug, Clone)]
pub struct SpectralResult<F: Scalar> {
    pub pi: Vec<F>,
    pub lambda: F,
    pub residual: F,
}

/// Leading left eigenvector by power iteration with L1 normalization.
///
/// Pure cycles make the unshifted iteration oscillate, so the iteration runs
/// on `(W + I)'` and subtracts 1 from the recovered eigenvalue; the shift
/// preserves eigenvectors. Starts at the uniform vector; converges when the
/// L1 change of successive iterates drops to `tol`.
pub fn leading_left_eigenvector<F: Scalar>(
    w: &UrnMatrix<F>,
    tol: F,
    max_iters: usize,
) -> Result<SpectralResult<F>> {
    let m = w.size();
    assert!(m > 0, "empty matrix");
    let mut pi = vec![F::one() / cast::<F>(m as f64); m];
    let mut next = vec![F::zero(); m];
    let mut converged = false;
    for _ in 0..max_iters {
        w.left_apply(&pi, &mut next);
        let mut total = F::zero();
        for (nx, &p) in next.iter_mut().zip(&pi) {
            *nx = *nx + p; // shift by I
            total = total + *nx;
        }
        if !(total > F::zero()) || !total.is_finite() {
            return Err(Error::NotConverged { max_iters });
        }
        let mut delta = F::zero();
        for (nx, p) in next.iter_mut().zip(pi.iter_mut()) {
            *nx = *nx / total;
            delta = delta + (*nx - *p).abs();
            *p = *nx;
        }
        if delta <= tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged { max_iters });
    }
    // Rayleigh quotient on W' for the eigenvalue, residual in the sup norm.
    w.left_apply(&pi, &mut next);
    let mut num = F::zero();
    let mut den = F::zero();
    for (&p, &wp) in pi.iter().zip(&next) {
        num = num + p * wp;
        den = den + p * p;
    }
    let lambda = num / den;
    let mut residual = F::zero();
    for (&p, &wp) in pi.iter().zip(&next) {
        residual = residual.max((wp - lambda * p).abs());
    }
    Ok(SpectralResult {
        pi,
        lambda,
        residual,
    })
}

/// Limiting edge-transmission distribution for parameters `beta`:
/// the Perron pair of the replacement matrix built from `exp(X beta)`.
pub fn limiting_edge_distribution<F: Scalar>(
    g: &Graph<F>,
    beta: &[F],
) -> Result<SpectralResult<F>> {
    if !g.strongly_connected() {
        return Err(Error::NotStronglyConnected);
    }
    let w = g.edge_weights(beta)?;
    let urn = g.replacement_matrix(&w)?;
    leading_left_eigenvector(&urn, cast(DEFAULT_POWER_TOL), DEFAULT_POWER_MAX_ITERS)
}

/// Limiting ball-count proportions: `b_inf` proportional to `pi ./ w`,
/// normalized to sum 1. Plugging it back into `(b o w) / (b' w)` recovers
/// `pi` exactly.
pub fn b_infinity_from_pi<F: Scalar>(pi: &[F], w: &[F]) -> Result<Vec<F>> {
    if pi.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: pi.len(),
            found: w.len(),
        });
    }
    let mut b = vec![F::zero(); pi.len()];
    for i in 0..pi.len() {
        if pi[i] > F::zero() {
            if !(w[i] > F::zero()) {
                return Err(Error::ZeroWeight { index: i });
            }
            b[i] = pi[i] / w[i];
        }
    }
    let total: F = b.iter().copied().sum();
    if !(total > F::zero()) {
        return Err(Error::EmptyCounts);
    }
    for v in b.iter_mut() {
        *v = *v / total;
    }
    Ok(b)
}
