//! Non-parametric per-edge weight estimation from an ordered trace, and the
//! projection of weight vectors onto the covariate parametrization.
//!
//! Edges never seen in the trace get weight zero. The remaining weights are
//! fitted on the log scale by the same Newton solver as the parametric
//! model, using indicator covariates with the last observed edge pinned to
//! log-weight zero to remove the scale degree of freedom.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::likelihood::{fit_mle, FitOptions, FitResult, LikelihoodContext};
use crate::linalg;
use crate::scalar::Scalar;
use crate::sim::{replay_trace, Trace};

#[derive(Debug, Clone)]
pub struct GeneralWeightsFit<F: Scalar> {
    /// Estimated weights over all m edges, L1-normalized; zero off support.
    pub weights: Vec<F>,
    /// Observed edges in enumeration order.
    pub support: Vec<usize>,
    pub fit: FitResult<F>,
}

/// Maximum likelihood over per-edge weights.
pub fn fit_general_weights<F: Scalar>(
    g: &Graph<F>,
    tr: &Trace,
    opts: &FitOptions<F>,
) -> Result<GeneralWeightsFit<F>> {
    let m = g.m();
    let mut observed = vec![false; m];
    for &e in &tr.events {
        if e >= m {
            return Err(Error::InvalidTrace {
                step: 2,
                msg: format!("edge index {} out of range", e),
            });
        }
        observed[e] = true;
    }
    let support: Vec<usize> = (0..m).filter(|&e| observed[e]).collect();
    if support.is_empty() {
        return Err(Error::NoObservedEdges);
    }
    let s = support.len();
    let mut slot = vec![usize::MAX; m];
    for (i, &e) in support.iter().enumerate() {
        slot[e] = i;
    }

    // indicator design with the last observed edge pinned: rows I_{s-1} | 0
    let dd = s - 1;
    let mut covs = vec![F::zero(); s * dd];
    for i in 0..s.saturating_sub(1) {
        covs[i * dd + i] = F::one();
    }
    let mut counts: Vec<u64> = Vec::with_capacity(tr.events.len() * s);
    let chosen: Vec<usize> = tr.events.iter().map(|&e| slot[e]).collect();
    replay_trace(g, tr, |_t, b, _e| {
        for &e in &support {
            counts.push(b[g.src(e)]);
        }
    })?;
    let ctx = LikelihoodContext::from_parts(covs, s, dd, g.n(), chosen, counts)?;
    let fit = fit_mle(&ctx, opts)?;

    let mut weights = vec![F::zero(); m];
    let mut total = F::zero();
    for (i, &e) in support.iter().enumerate() {
        let z = if i < dd { fit.beta[i] } else { F::zero() };
        let w = z.exp();
        weights[e] = w;
        total = total + w;
    }
    for w in weights.iter_mut() {
        *w = *w / total;
    }
    Ok(GeneralWeightsFit {
        weights,
        support,
        fit,
    })
}

/// Least-squares projection of `log w` onto `[1 | X]` over the support rows;
/// returns the d slope coefficients. The intercept absorbs the arbitrary
/// scale of `w`, so any positive rescaling projects identically.
pub fn project_to_beta<F: Scalar>(g: &Graph<F>, w: &[F], support: &[usize]) -> Result<Vec<F>> {
    if w.len() != g.m() {
        return Err(Error::DimensionMismatch {
            expected: g.m(),
            found: w.len(),
        });
    }
    let d = g.d();
    let cols = d + 1;
    let mut design = Vec::with_capacity(support.len() * cols);
    let mut y = Vec::with_capacity(support.len());
    for &e in support {
        if !(w[e] > F::zero()) {
            return Err(Error::ZeroWeight { index: e });
        }
        design.push(F::one());
        design.extend_from_slice(g.covariate_row(e));
        y.push(w[e].ln());
    }
    let coef =
        linalg::least_squares(&design, support.len(), cols, &y).ok_or(Error::RankDeficient)?;
    Ok(coef[1..].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::likelihood::FitStatus;
    use crate::sim::{simulate_trace, Trace};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_cycle() -> Graph<f64> {
        Graph::new(2, &[(0, 1), (1, 0)], vec![1.0, 0.0], 1).unwrap()
    }

    #[test]
    fn alternating_trace_closed_form() {
        // With the second edge pinned, the optimum solves 4u^2 + u - 1 = 0,
        // giving weights (u, 1)/(1 + u) with u = (sqrt 17 - 1)/8.
        let g = two_cycle();
        let tr = Trace {
            seed: 0,
            events: vec![0, 1, 0, 1],
        };
        let res = fit_general_weights(&g, &tr, &FitOptions::default()).unwrap();
        assert_eq!(res.fit.status, FitStatus::Converged);
        assert_eq!(res.support, vec![0, 1]);
        let u = (17f64.sqrt() - 1.0) / 8.0;
        assert!((res.weights[0] - u / (1.0 + u)).abs() < 1e-7);
        assert!((res.weights[1] - 1.0 / (1.0 + u)).abs() < 1e-7);
        // grid oracle on the log ratio confirms the optimum
        let brute = |z: f64| -> f64 {
            let w = [z.exp(), 1.0];
            let mut b = [1.0f64, 0.0];
            let mut ll = 0.0;
            for &e in &tr.events {
                let num = b[e] * w[e];
                let den = b[0] * w[0] + b[1] * w[1];
                ll += (num / den).ln();
                b[1 - e] += 1.0;
            }
            ll
        };
        let mut best = (f64::NEG_INFINITY, 0.0);
        let mut z = -5.0;
        while z <= 5.0 {
            let ll = brute(z);
            if ll > best.0 {
                best = (ll, z);
            }
            z += 1e-4;
        }
        assert!((best.1 - u.ln()).abs() < 2e-4);
    }

    #[test]
    fn unused_edge_gets_zero_weight() {
        // 3-cycle with one extra chord never used
        let g = Graph::new(
            3,
            &[(0, 1), (1, 2), (2, 0), (0, 2)],
            vec![0.1, 0.2, 0.3, 0.4],
            1,
        )
        .unwrap();
        let tr = Trace {
            seed: 0,
            events: vec![0, 1, 2, 0],
        };
        let res = fit_general_weights(&g, &tr, &FitOptions::default()).unwrap();
        assert_eq!(res.weights[3], 0.0);
        assert_eq!(res.support, vec![0, 1, 2]);
        let total: f64 = res.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_trace_is_rejected() {
        let g = two_cycle();
        let tr = Trace {
            seed: 0,
            events: vec![],
        };
        assert!(matches!(
            fit_general_weights(&g, &tr, &FitOptions::default()),
            Err(Error::NoObservedEdges)
        ));
    }

    #[test]
    fn single_observed_edge_degenerates_to_point_mass() {
        let g = two_cycle();
        let tr = Trace {
            seed: 0,
            events: vec![0],
        };
        let res = fit_general_weights(&g, &tr, &FitOptions::default()).unwrap();
        assert_eq!(res.weights, vec![1.0, 0.0]);
    }

    #[test]
    fn pinned_design_has_full_reduced_rank_and_init_invariance() {
        let g = Graph::<f64>::directed_cycle(4, vec![0.3, -0.1, 0.2, 0.0], 1).unwrap();
        let tr = simulate_trace(&g, &[0.5], 300, 9).unwrap();
        let base = fit_general_weights(&g, &tr, &FitOptions::default()).unwrap();
        assert_eq!(base.fit.status, FitStatus::Converged);
        let s = base.support.len();
        // indicator design with a pinned coordinate has numeric rank s - 1
        let mut design = vec![0.0f64; s * (s - 1)];
        for i in 0..s - 1 {
            design[i * (s - 1) + i] = 1.0;
        }
        assert_eq!(linalg::numeric_rank(&design, s, s - 1, 1e-9), s - 1);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..2 {
            let init: Vec<f64> = (0..s - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let opts = FitOptions {
                init: Some(init),
                ..Default::default()
            };
            let refit = fit_general_weights(&g, &tr, &opts).unwrap();
            assert_eq!(refit.fit.status, FitStatus::Converged);
            for e in 0..g.m() {
                assert!((refit.weights[e] - base.weights[e]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn projection_recovers_exact_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let m = rng.gen_range(3..9);
            let d = rng.gen_range(1..3);
            let covs: Vec<f64> = (0..m * d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let edges: Vec<(usize, usize)> = (0..m).map(|i| (i % 2, (i + 1) % 2)).collect();
            let g = Graph::new(2, &edges, covs, d).unwrap();
            let beta0: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let scale = rng.gen_range(0.1..10.0);
            let w: Vec<f64> = g
                .edge_weights(&beta0)
                .unwrap()
                .iter()
                .map(|v| v * scale)
                .collect();
            let support: Vec<usize> = (0..m).collect();
            let got = project_to_beta(&g, &w, &support).unwrap();
            for a in 0..d {
                assert!((got[a] - beta0[a]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn projection_two_point_slope() {
        let g = Graph::new(2, &[(0, 1), (1, 0)], vec![1.0, 2.0], 1).unwrap();
        // w proportional to exp(0.7 x): slope 0.7 whatever the normalization
        for scale in [1.0, 5.0, 0.02] {
            let w = vec![scale * (0.7f64).exp(), scale * (1.4f64).exp()];
            let beta = project_to_beta(&g, &w, &[0, 1]).unwrap();
            assert!((beta[0] - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_rank_deficient_design() {
        // identical covariates: [1 | X] has rank 1 < 2
        let g = Graph::new(2, &[(0, 1), (1, 0)], vec![3.0, 3.0], 1).unwrap();
        assert!(matches!(
            project_to_beta(&g, &[0.5, 0.5], &[0, 1]),
            Err(Error::RankDeficient)
        ));
    }

    proptest! {
        #[test]
        fn projection_scale_invariance(c in 0.001f64..1000.0, beta0 in -1.0f64..1.0) {
            let g = Graph::new(3, &[(0, 1), (1, 2), (2, 0)], vec![0.5, -1.0, 2.0], 1).unwrap();
            let w: Vec<f64> = g.edge_weights(&[beta0]).unwrap();
            let scaled: Vec<f64> = w.iter().map(|v| v * c).collect();
            let support = vec![0, 1, 2];
            let b1 = project_to_beta(&g, &w, &support).unwrap();
            let b2 = project_to_beta(&g, &scaled, &support).unwrap();
            prop_assert!((b1[0] - b2[0]).abs() < 1e-10);
        }
    }
}
