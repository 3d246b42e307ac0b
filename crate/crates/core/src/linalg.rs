//! Small dense linear algebra used by the solvers.
//!
//! Matrices here are at most a few dozen rows and columns (parameter
//! dimension, or the constraint Gram matrix), so plain row-major `Vec`
//! storage with partial-pivot elimination is all that is needed.

use crate::scalar::{cast, Scalar};

/// Solve `A x = b` for square `A` (row-major, n x n) by Gaussian elimination
/// with partial pivoting. Returns `None` when a pivot falls below
/// `pivot_tol * max|A|`.
pub fn solve<F: Scalar>(a: &[F], n: usize, b: &[F], pivot_tol: F) -> Option<Vec<F>> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let scale = a
        .iter()
        .fold(F::zero(), |acc, v| acc.max(v.abs()))
        .max(F::one());
    let tol = pivot_tol * scale;

    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if m[r * n + col].abs() > m[piv * n + col].abs() {
                piv = r;
            }
        }
        if m[piv * n + col].abs() <= tol {
            return None;
        }
        if piv != col {
            for c in 0..n {
                m.swap(col * n + c, piv * n + c);
            }
            x.swap(col, piv);
        }
        let d = m[col * n + col];
        for r in col + 1..n {
            let f = m[r * n + col] / d;
            if f == F::zero() {
                continue;
            }
            for c in col..n {
                let v = m[col * n + c];
                m[r * n + c] = m[r * n + c] - f * v;
            }
            x[r] = x[r] - f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for c in col + 1..n {
            s = s - m[col * n + c] * x[c];
        }
        x[col] = s / m[col * n + col];
    }
    Some(x)
}

/// Invert a square matrix by Gauss-Jordan with partial pivoting.
pub fn invert<F: Scalar>(a: &[F], n: usize, pivot_tol: F) -> Option<Vec<F>> {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut inv = vec![F::zero(); n * n];
    for i in 0..n {
        inv[i * n + i] = F::one();
    }
    let scale = a
        .iter()
        .fold(F::zero(), |acc, v| acc.max(v.abs()))
        .max(F::one());
    let tol = pivot_tol * scale;

    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if m[r * n + col].abs() > m[piv * n + col].abs() {
                piv = r;
            }
        }
        if m[piv * n + col].abs() <= tol {
            return None;
        }
        if piv != col {
            for c in 0..n {
                m.swap(col * n + c, piv * n + c);
                inv.swap(col * n + c, piv * n + c);
            }
        }
        let d = m[col * n + col];
        for c in 0..n {
            m[col * n + c] = m[col * n + c] / d;
            inv[col * n + c] = inv[col * n + c] / d;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r * n + col];
            if f == F::zero() {
                continue;
            }
            for c in 0..n {
                let mv = m[col * n + c];
                let iv = inv[col * n + c];
                m[r * n + c] = m[r * n + c] - f * mv;
                inv[r * n + c] = inv[r * n + c] - f * iv;
            }
        }
    }
    Some(inv)
}

/// Least squares `argmin ||A x - y||_2` via the normal equations.
/// `a` is rows x cols row-major. Returns `None` when `A' A` is singular.
pub fn least_squares<F: Scalar>(a: &[F], rows: usize, cols: usize, y: &[F]) -> Option<Vec<F>> {
    assert_eq!(a.len(), rows * cols);
    assert_eq!(y.len(), rows);
    let mut ata = vec![F::zero(); cols * cols];
    let mut aty = vec![F::zero(); cols];
    for r in 0..rows {
        let row = &a[r * cols..(r + 1) * cols];
        for i in 0..cols {
            aty[i] = aty[i] + row[i] * y[r];
            for j in i..cols {
                ata[i * cols + j] = ata[i * cols + j] + row[i] * row[j];
            }
        }
    }
    for i in 0..cols {
        for j in 0..i {
            ata[i * cols + j] = ata[j * cols + i];
        }
    }
    solve(&ata, cols, &aty, cast(1e-12))
}

/// Eigenvalues and eigenvectors of a symmetric matrix by the cyclic Jacobi
/// method. Returns `(eigenvalues, eigenvectors)` with eigenvectors stored
/// column-major (column j belongs to eigenvalue j), unsorted.
pub fn jacobi_eigen<F: Scalar>(a: &[F], n: usize) -> (Vec<F>, Vec<F>) {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut v = vec![F::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = F::one();
    }
    let eps = cast::<F>(1e-30);
    for _sweep in 0..100 {
        let mut off = F::zero();
        for i in 0..n {
            for j in i + 1..n {
                off = off + m[i * n + j] * m[i * n + j];
            }
        }
        if off <= eps {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() <= F::min_positive_value() {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (cast::<F>(2.0) * apq);
                let t = if theta >= F::zero() {
                    F::one() / (theta + (F::one() + theta * theta).sqrt())
                } else {
                    -F::one() / (-theta + (F::one() + theta * theta).sqrt())
                };
                let c = F::one() / (F::one() + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eig = (0..n).map(|i| m[i * n + i]).collect();
    (eig, v)
}

/// Numeric rank: number of eigenvalues of `A'A` above `tol^2`-scaled cutoff,
/// i.e. singular values of `A` above `tol * sigma_max`.
pub fn numeric_rank<F: Scalar>(a: &[F], rows: usize, cols: usize, tol: F) -> usize {
    let mut gram = vec![F::zero(); cols * cols];
    for r in 0..rows {
        let row = &a[r * cols..(r + 1) * cols];
        for i in 0..cols {
            for j in 0..cols {
                gram[i * cols + j] = gram[i * cols + j] + row[i] * row[j];
            }
        }
    }
    let (eig, _) = jacobi_eigen(&gram, cols);
    let max = eig.iter().fold(F::zero(), |acc, &e| acc.max(e));
    if max <= F::zero() {
        return 0;
    }
    let cut = tol * tol * max;
    eig.iter().filter(|&&e| e > cut).count()
}

/// Dense matrix product, row-major: (ra x ca) * (ca x cb).
pub fn mat_mul<F: Scalar>(a: &[F], ra: usize, ca: usize, b: &[F], cb: usize) -> Vec<F> {
    assert_eq!(a.len(), ra * ca);
    assert_eq!(b.len(), ca * cb);
    let mut out = vec![F::zero(); ra * cb];
    for i in 0..ra {
        for k in 0..ca {
            let aik = a[i * ca + k];
            if aik == F::zero() {
                continue;
            }
            for j in 0..cb {
                out[i * cb + j] = out[i * cb + j] + aik * b[k * cb + j];
            }
        }
    }
    out
}
