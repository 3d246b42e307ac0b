//! Exact existence check for the maximizer.
//!
//! A maximizer fails to exist exactly when some direction `v` makes every
//! chosen item weakly heaviest among the active items, strictly somewhere:
//! the likelihood then increases forever along `v`. The check maximizes the
//! total slack `sum_p a_p' v` over the polytope `{a_p' v >= 0, |v|_inf <= 1}`
//! built from the deduplicated difference rows `a_p = x_chosen - x_active`.
//! A strictly positive optimum certifies nonexistence; a zero optimum with a
//! nontrivial common null direction means the likelihood is flat along it;
//! otherwise a maximizer exists.
//!
//! The program is solved through its dual, which has only d rows, by the
//! in-repo simplex; the certificate direction is recovered from the final
//! basis multipliers.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::likelihood::LikelihoodContext;
use crate::scalar::{cast, to_f64, Scalar};
use crate::simplex::{self, LpOutcome, StandardLp};
use crate::{linalg, scalar};

#[derive(Debug, Clone)]
pub enum Existence<F: Scalar> {
    Exists,
    /// Certificate direction along which the likelihood increases forever.
    NotExists(Vec<F>),
    /// Nonzero direction along which the likelihood is constant.
    FlatDirection(Vec<F>),
}

#[derive(Debug, Clone)]
pub struct ExistenceOptions {
    /// Cap on deduplicated constraint rows; the check is desk-scale.
    pub max_pairs: usize,
    /// Strict-positivity threshold on the LP optimum.
    pub strict_tol: f64,
}

impl Default for ExistenceOptions {
    fn default() -> Self {
        Self {
            max_pairs: 20_000,
            strict_tol: 1e-9,
        }
    }
}

pub fn check_mle_existence<F: Scalar>(
    ctx: &LikelihoodContext<F>,
    opts: &ExistenceOptions,
) -> Result<Existence<F>> {
    let d = ctx.d();
    if d == 0 {
        return Ok(Existence::Exists);
    }
    let rows = difference_rows(ctx, opts.max_pairs)?;
    if rows.is_empty() {
        // every step was forced onto a single active item; the likelihood is
        // constant in beta
        let mut v = vec![F::zero(); d];
        v[0] = F::one();
        return Ok(Existence::FlatDirection(v));
    }
    let p = rows.len() / d;

    // primal: max c'v, -a_p'v <= 0, v <= 1, -v <= 1 where c = sum_p a_p.
    // dual: min h'y s.t. G'y = c, y >= 0 with h = (0,...,0 | 1,...,1).
    let mut c = vec![F::zero(); d];
    for row in rows.chunks(d) {
        for (ci, &ri) in c.iter_mut().zip(row) {
            *ci = *ci + ri;
        }
    }
    let vars = p + 2 * d;
    let mut a = vec![F::zero(); d * vars];
    for (pi, row) in rows.chunks(d).enumerate() {
        for i in 0..d {
            a[i * vars + pi] = -row[i];
        }
    }
    for i in 0..d {
        a[i * vars + p + i] = F::one(); // v <= 1 rows
        a[i * vars + p + d + i] = -F::one(); // -v <= 1 rows
    }
    let mut h = vec![F::zero(); vars];
    for hv in h.iter_mut().skip(p) {
        *hv = F::one();
    }
    let lp = StandardLp {
        a,
        rows: d,
        vars,
        b: c,
        c: h,
    };
    let outcome = simplex::solve(&lp, 200_000)?;
    let (value, mult) = match outcome {
        LpOutcome::Optimal {
            value, multipliers, ..
        } => (value, multipliers),
        LpOutcome::Infeasible => {
            // dual infeasible cannot happen here: the primal is bounded by
            // the box, so the dual is feasible whenever the data are finite
            return Err(Error::LpFailure("dual reported infeasible".into()));
        }
        LpOutcome::Unbounded => {
            return Err(Error::LpFailure("dual reported unbounded".into()));
        }
    };

    if to_f64(value) > opts.strict_tol {
        // multipliers of the dual are the primal v; normalize to sup norm 1
        let mut v = mult;
        let mx = v.iter().fold(F::zero(), |acc, x| acc.max(x.abs()));
        if mx > F::zero() {
            for x in v.iter_mut() {
                *x = *x / mx;
            }
        }
        return Ok(Existence::NotExists(v));
    }

    // zero optimum: every feasible v annihilates all rows; a nonzero common
    // null vector of the rows is a flat direction
    let mut gram = vec![F::zero(); d * d];
    for row in rows.chunks(d) {
        for i in 0..d {
            for j in 0..d {
                gram[i * d + j] = gram[i * d + j] + row[i] * row[j];
            }
        }
    }
    let (eig, vecs) = linalg::jacobi_eigen(&gram, d);
    let mut max_eig = F::zero();
    let mut min_idx = 0;
    let mut min_eig = F::infinity();
    for (i, &e) in eig.iter().enumerate() {
        if e > max_eig {
            max_eig = e;
        }
        if e < min_eig {
            min_eig = e;
            min_idx = i;
        }
    }
    if min_eig <= cast::<F>(1e-9) * max_eig.max(F::one()) {
        let mut v: Vec<F> = (0..d).map(|i| vecs[i * d + min_idx]).collect();
        let mx = v.iter().fold(F::zero(), |acc, x| acc.max(x.abs()));
        for x in v.iter_mut() {
            *x = *x / mx;
        }
        return Ok(Existence::FlatDirection(v));
    }
    Ok(Existence::Exists)
}

/// Deduplicated rows `x_chosen(t) - x_f` over steps t and items f active at
/// t, zero rows dropped. Errors past `max_pairs` rows.
fn difference_rows<F: Scalar>(ctx: &LikelihoodContext<F>, max_pairs: usize) -> Result<Vec<F>> {
    let d = ctx.d();
    let mut rows: Vec<F> = Vec::new();
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    for idx in 0..ctx.n_steps() {
        let counts = ctx.counts_row(idx);
        let xc = ctx.covariate_row(ctx.chosen_item(idx));
        for (f, &cnt) in counts.iter().enumerate() {
            if cnt == 0 {
                continue;
            }
            let xf = ctx.covariate_row(f);
            let row: Vec<F> = xc.iter().zip(xf).map(|(&a, &b)| a - b).collect();
            if row.iter().all(|&v| v == F::zero()) {
                continue;
            }
            let key: Vec<u64> = row.iter().map(|&v| scalar::to_f64(v).to_bits()).collect();
            if seen.insert(key) {
                if rows.len() / d >= max_pairs {
                    return Err(Error::LpSizeCap {
                        pairs: rows.len() / d + 1,
                        cap: max_pairs,
                    });
                }
                rows.extend(row);
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::likelihood::LikelihoodContext;
    use crate::sim::{simulate_trace, Trace};

    #[test]
    fn heaviest_edge_trace_has_no_mle() {
        let g = Graph::<f64>::new(2, &[(0, 1), (1, 0)], vec![1.0, 0.0], 1).unwrap();
        let tr = Trace {
            seed: 0,
            events: vec![0, 0, 0],
        };
        let ctx = LikelihoodContext::from_trace(&g, &tr).unwrap();
        match check_mle_existence(&ctx, &ExistenceOptions::default()).unwrap() {
            Existence::NotExists(v) => {
                assert!((v[0] - 1.0).abs() < 1e-9);
            }
            other => panic!("expected NotExists, got {:?}", other),
        }
    }

    #[test]
    fn identical_covariates_are_flat() {
        let g = Graph::<f64>::new(2, &[(0, 1), (1, 0)], vec![2.0, 2.0], 1).unwrap();
        let tr = Trace {
            seed: 0,
            events: vec![0, 1, 0],
        };
        let ctx = LikelihoodContext::from_trace(&g, &tr).unwrap();
        match check_mle_existence(&ctx, &ExistenceOptions::default()).unwrap() {
            Existence::FlatDirection(v) => {
                assert!(v.iter().any(|&x| x != 0.0));
            }
            other => panic!("expected FlatDirection, got {:?}", other),
        }
    }

    #[test]
    fn flat_direction_with_rank_deficient_differences() {
        // d = 2 but all difference rows are multiples of (1, 1): the
        // orthogonal direction never moves the likelihood
        let g = Graph::<f64>::new(2, &[(0, 1), (1, 0)], vec![1.0, 1.0, 0.0, 0.0], 2).unwrap();
        let tr = Trace {
            seed: 0,
            events: vec![0, 1, 1, 0],
        };
        let ctx = LikelihoodContext::from_trace(&g, &tr).unwrap();
        match check_mle_existence(&ctx, &ExistenceOptions::default()).unwrap() {
            Existence::FlatDirection(v) => {
                // null space of span{(1,1)} is spanned by (1,-1)
                assert!((v[0] + v[1]).abs() < 1e-8, "v = {:?}", v);
            }
            other => panic!("expected FlatDirection, got {:?}", other),
        }
    }

    #[test]
    fn long_generic_trace_exists_and_fit_converges() {
        let covs = vec![0.9, -0.4, 0.15];
        let g = Graph::<f64>::directed_cycle(3, covs, 1).unwrap();
        let tr = simulate_trace(&g, &[0.5], 500, 11).unwrap();
        let ctx = LikelihoodContext::from_trace(&g, &tr).unwrap();
        assert!(matches!(
            check_mle_existence(&ctx, &ExistenceOptions::default()).unwrap(),
            Existence::Exists
        ));
        let fit =
            crate::likelihood::fit_mle(&ctx, &crate::likelihood::FitOptions::default()).unwrap();
        assert_eq!(fit.status, crate::likelihood::FitStatus::Converged);
    }

    #[test]
    fn pair_cap_is_enforced() {
        let covs: Vec<f64> = (0..12).map(|i| i as f64 * 0.1).collect();
        let g = Graph::<f64>::directed_cycle(12, covs, 1).unwrap();
        let tr = simulate_trace(&g, &[0.0], 60, 3).unwrap();
        let ctx = LikelihoodContext::from_trace(&g, &tr).unwrap();
        let opts = ExistenceOptions {
            max_pairs: 5,
            strict_tol: 1e-9,
        };
        assert!(matches!(
            check_mle_existence(&ctx, &opts),
            Err(Error::LpSizeCap { .. })
        ));
    }

    #[test]
    fn fit_with_existence_precheck_reports_nonexistent() {
        let g = Graph::<f64>::new(2, &[(0, 1), (1, 0)], vec![0.05, 0.0], 1).unwrap();
        let tr = Trace {
            seed: 0,
            events: vec![0; 10],
        };
        let ctx = LikelihoodContext::from_trace(&g, &tr).unwrap();
        let opts = crate::likelihood::FitOptions {
            check_existence: true,
            ..Default::default()
        };
        let fit = crate::likelihood::fit_mle(&ctx, &opts).unwrap();
        assert!(matches!(
            fit.status,
            crate::likelihood::FitStatus::NonExistent(_)
        ));
    }
}
