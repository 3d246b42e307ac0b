//! Weight estimation from unordered transmission counts: the closed-form
//! limiting-distribution estimate, the fixed-point iteration that alternates
//! weight recovery with a Perron eigenvector solve, and the exact cyclic
//! oracle the iteration can be checked against.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::scalar::{cast, cast_u64, Scalar};
use crate::sim::Trace;
use crate::spectral::{leading_left_eigenvector, DEFAULT_POWER_MAX_ITERS, DEFAULT_POWER_TOL};

/// Unordered observation: per-edge transmission counts plus the per-vertex
/// infection counts they came with (reconstructed from the seed when known).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnorderedData {
    pub c: Vec<u64>,
    pub b: Vec<u64>,
    pub seed: Option<usize>,
}

impl UnorderedData {
    /// Reconstruct `b` from counts and a known seed:
    /// `b(v) = [v = seed] + sum of counts into v`.
    pub fn from_counts_with_seed<F: Scalar>(
        g: &Graph<F>,
        c: Vec<u64>,
        seed: usize,
    ) -> Result<Self> {
        if c.len() != g.m() {
            return Err(Error::DimensionMismatch {
                expected: g.m(),
                found: c.len(),
            });
        }
        if seed >= g.n() {
            return Err(Error::InvalidTrace {
                step: 1,
                msg: format!("seed vertex {} out of range", seed),
            });
        }
        let mut b = vec![0u64; g.n()];
        b[seed] = 1;
        for e in 0..g.m() {
            b[g.dst(e)] += c[e];
        }
        Ok(Self {
            c,
            b,
            seed: Some(seed),
        })
    }

    /// Counts with `b` supplied directly (seed unknown).
    pub fn with_explicit_b(c: Vec<u64>, b: Vec<u64>) -> Self {
        Self { c, b, seed: None }
    }

    /// Exact counts of an ordered trace, order then discarded.
    pub fn from_trace<F: Scalar>(g: &Graph<F>, tr: &Trace) -> Result<Self> {
        let counts = crate::sim::counts_from_trace(g, tr)?;
        Ok(Self {
            c: counts.c,
            b: counts.b,
            seed: Some(tr.seed),
        })
    }
}

fn validate_support<F: Scalar>(g: &Graph<F>, data: &UnorderedData) -> Result<Vec<usize>> {
    if data.c.len() != g.m() {
        return Err(Error::DimensionMismatch {
            expected: g.m(),
            found: data.c.len(),
        });
    }
    if data.b.len() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            found: data.b.len(),
        });
    }
    let support: Vec<usize> = (0..g.m()).filter(|&e| data.c[e] > 0).collect();
    if support.is_empty() {
        return Err(Error::EmptyCounts);
    }
    for &e in &support {
        if data.b[g.src(e)] == 0 {
            return Err(Error::InconsistentCounts { edge: e });
        }
    }
    Ok(support)
}

/// Closed-form estimate `w = f(c/|c|, b_edge)` with
/// `f(v, b) = (v ./ b) / |v ./ b|_1` and `b_edge(e) = b(src(e))`.
/// Zero-count edges get weight zero; the result is L1-normalized.
pub fn empirical_weight_estimate<F: Scalar>(g: &Graph<F>, data: &UnorderedData) -> Result<Vec<F>> {
    let support = validate_support(g, data)?;
    let ctotal: u64 = data.c.iter().sum();
    let ctot = cast_u64::<F>(ctotal);
    let mut w = vec![F::zero(); g.m()];
    let mut total = F::zero();
    for &e in &support {
        let v = cast_u64::<F>(data.c[e]) / ctot / cast_u64::<F>(data.b[g.src(e)]);
        w[e] = v;
        total = total + v;
    }
    for v in w.iter_mut() {
        *v = *v / total;
    }
    Ok(w)
}

#[derive(Debug, Clone)]
pub struct FixedPointOptions<F: Scalar> {
    pub iterations: usize,
    /// Initial distribution over edges; defaults to `c / |c|_1`.
    pub v0: Option<Vec<F>>,
    pub power_tol: F,
    pub power_max_iters: usize,
}

impl<F: Scalar> Default for FixedPointOptions<F> {
    fn default() -> Self {
        Self {
            iterations: 5,
            v0: None,
            power_tol: cast(DEFAULT_POWER_TOL),
            power_max_iters: DEFAULT_POWER_MAX_ITERS,
        }
    }
}

/// Fixed-point iteration on the positive-count subgraph: recover weights
/// from the current distribution, rebuild the replacement matrix, take its
/// Perron left eigenvector, repeat. Needs the support subgraph strongly
/// connected, the regime in which the Perron vector exists.
pub fn fixed_point_estimate<F: Scalar>(
    g: &Graph<F>,
    data: &UnorderedData,
    opts: &FixedPointOptions<F>,
) -> Result<Vec<F>> {
    let support = validate_support(g, data)?;
    let s = support.len();

    // support subgraph with reindexed vertices
    let mut vmap = vec![usize::MAX; g.n()];
    let mut nv = 0;
    for &e in &support {
        for v in [g.src(e), g.dst(e)] {
            if vmap[v] == usize::MAX {
                vmap[v] = nv;
                nv += 1;
            }
        }
    }
    let sub_edges: Vec<(usize, usize)> = support
        .iter()
        .map(|&e| (vmap[g.src(e)], vmap[g.dst(e)]))
        .collect();
    let sub = Graph::<F>::new(nv, &sub_edges, vec![F::zero(); s], 1)?;
    if !sub.strongly_connected() {
        return Err(Error::NoPerronVector {
            reason: "positive-count subgraph is not strongly connected".into(),
        });
    }

    let b_edge: Vec<F> = support
        .iter()
        .map(|&e| cast_u64::<F>(data.b[g.src(e)]))
        .collect();
    let mut v: Vec<F> = match &opts.v0 {
        Some(v0) => {
            if v0.len() != g.m() {
                return Err(Error::DimensionMismatch {
                    expected: g.m(),
                    found: v0.len(),
                });
            }
            support.iter().map(|&e| v0[e]).collect()
        }
        None => {
            let ctot = cast_u64::<F>(data.c.iter().sum());
            support
                .iter()
                .map(|&e| cast_u64::<F>(data.c[e]) / ctot)
                .collect()
        }
    };
    let mut w_sub = vec![F::zero(); s];
    for _ in 0..opts.iterations {
        normalize_ratio(&v, &b_edge, &mut w_sub);
        let urn = sub.replacement_matrix(&w_sub)?;
        let res =
            leading_left_eigenvector(&urn, opts.power_tol, opts.power_max_iters).map_err(|e| {
                Error::NoPerronVector {
                    reason: e.to_string(),
                }
            })?;
        v = res.pi;
    }
    normalize_ratio(&v, &b_edge, &mut w_sub);
    let mut w = vec![F::zero(); g.m()];
    for (i, &e) in support.iter().enumerate() {
        w[e] = w_sub[i];
    }
    Ok(w)
}

fn normalize_ratio<F: Scalar>(v: &[F], b: &[F], out: &mut [F]) {
    let mut total = F::zero();
    for i in 0..v.len() {
        out[i] = v[i] / b[i];
        total = total + out[i];
    }
    for o in out.iter_mut() {
        *o = *o / total;
    }
}

/// Exact fixed point on the directed n-cycle.
#[derive(Debug, Clone)]
pub struct CyclicOracle<F: Scalar> {
    /// Closed-form weights `w(e_i) = b''(i+1) / b''(i)` (unnormalized).
    pub w: Vec<F>,
    /// `pi = c / |c|_1`.
    pub pi: Vec<F>,
    /// Sup-norm residual of `pi = (b'' o w)/(b''^T w)`.
    pub fixed_point_residual: F,
    /// Sup-norm residual of `pi' W = pi'` (Perron eigenvalue 1).
    pub perron_residual: F,
}

/// Closed-form fixed point for counts of a single seeded walk on the
/// directed n-cycle, where edge i runs from vertex i to vertex i+1 (mod n).
/// The shifted counts `b''(v) = b_{k+1}(v) - b_2(v)` equal the count of the
/// edge into v, so they are recovered from `c` alone; `b2` is the
/// initial-ball indicator and must place a single ball.
pub fn cyclic_fixed_point_oracle<F: Scalar>(
    n: usize,
    c: &[u64],
    b2: &[u64],
) -> Result<CyclicOracle<F>> {
    if c.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: c.len(),
        });
    }
    if b2.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b2.len(),
        });
    }
    if b2.iter().sum::<u64>() != 1 || b2.iter().any(|&x| x > 1) {
        return Err(Error::InvalidTrace {
            step: 1,
            msg: "initial-ball vector must place exactly one ball".into(),
        });
    }
    // b''(v) = c(edge into v) = c((v - 1) mod n)
    let mut b_shift = vec![0u64; n];
    for v in 0..n {
        b_shift[v] = c[(v + n - 1) % n];
    }
    for (v, &x) in b_shift.iter().enumerate() {
        if x == 0 {
            return Err(Error::ZeroCount { index: v });
        }
    }
    let ctot = cast_u64::<F>(c.iter().sum());
    let pi: Vec<F> = c.iter().map(|&x| cast_u64::<F>(x) / ctot).collect();
    let w: Vec<F> = (0..n)
        .map(|i| cast_u64::<F>(b_shift[(i + 1) % n]) / cast_u64::<F>(b_shift[i]))
        .collect();

    // residual of the fixed-point equation
    let bw: Vec<F> = (0..n).map(|i| cast_u64::<F>(b_shift[i]) * w[i]).collect();
    let dot: F = bw.iter().copied().sum();
    let mut fp_res = F::zero();
    for i in 0..n {
        fp_res = fp_res.max((bw[i] / dot - pi[i]).abs());
    }
    // residual of pi' W = pi' with W[e][f] = w(f) on the cycle adjacency:
    // (pi' W)(f) = pi(f-1) w(f)
    let mut perron_res = F::zero();
    for f in 0..n {
        let lhs = pi[(f + n - 1) % n] * w[f];
        perron_res = perron_res.max((lhs - pi[f]).abs());
    }
    Ok(CyclicOracle {
        w,
        pi,
        fixed_point_residual: fp_res,
        perron_residual: perron_res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::sim::simulate_trace;

    fn two_cycle() -> Graph<f64> {
        Graph::new(2, &[(0, 1), (1, 0)], vec![1.0, 0.0], 1).unwrap()
    }

    #[test]
    fn empirical_hand_example() {
        // c = (3, 2), seed at vertex 0: b = (3, 3), w = (0.6, 0.4)
        let g = two_cycle();
        let data = UnorderedData::from_counts_with_seed(&g, vec![3, 2], 0).unwrap();
        assert_eq!(data.b, vec![3, 3]);
        let w = empirical_weight_estimate(&g, &data).unwrap();
        assert!((w[0] - 0.6).abs() < 1e-12);
        assert!((w[1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn empirical_uniform_on_symmetric_cycle() {
        // equal transmission counts with equal ball counts: uniform weights
        for n in 2..7 {
            let g = Graph::<f64>::directed_cycle(n, vec![0.0; n], 1).unwrap();
            let data = UnorderedData::with_explicit_b(vec![10; n], vec![10; n]);
            let w = empirical_weight_estimate(&g, &data).unwrap();
            for &x in &w {
                assert!((x - 1.0 / n as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn seed_reconstruction_counts_the_initial_ball() {
        let g = Graph::<f64>::directed_cycle(3, vec![0.0; 3], 1).unwrap();
        let data = UnorderedData::from_counts_with_seed(&g, vec![4, 4, 4], 1).unwrap();
        assert_eq!(data.b, vec![4, 5, 4]);
    }

    #[test]
    fn empirical_errors() {
        let g = two_cycle();
        let data = UnorderedData::with_explicit_b(vec![0, 0], vec![1, 0]);
        assert!(matches!(
            empirical_weight_estimate(&g, &data),
            Err(Error::EmptyCounts)
        ));
        let bad = UnorderedData::with_explicit_b(vec![1, 1], vec![1, 0]);
        assert!(matches!(
            empirical_weight_estimate(&g, &bad),
            Err(Error::InconsistentCounts { edge: 1 })
        ));
    }

    #[test]
    fn empirical_inverts_f_on_support() {
        // (b_edge o w) / (b_edge' w) = c/|c| exactly on the support
        let g = Graph::<f64>::directed_cycle(4, vec![0.0; 4], 1).unwrap();
        let data = UnorderedData::from_counts_with_seed(&g, vec![7, 3, 9, 2], 1).unwrap();
        let w = empirical_weight_estimate(&g, &data).unwrap();
        let bw: Vec<f64> = (0..4).map(|e| data.b[g.src(e)] as f64 * w[e]).collect();
        let dot: f64 = bw.iter().sum();
        let ctot: f64 = data.c.iter().sum::<u64>() as f64;
        for e in 0..4 {
            assert!((bw[e] / dot - data.c[e] as f64 / ctot).abs() < 1e-14);
        }
    }

    #[test]
    fn cyclic_oracle_theorem_values() {
        let oracle = cyclic_fixed_point_oracle::<f64>(3, &[4, 3, 3], &[1, 0, 0]).unwrap();
        assert_eq!(oracle.w.len(), 3);
        assert!((oracle.w[0] - 4.0 / 3.0).abs() < 1e-15);
        assert!((oracle.w[1] - 0.75).abs() < 1e-15);
        assert!((oracle.w[2] - 1.0).abs() < 1e-15);
        assert!((oracle.pi[0] - 0.4).abs() < 1e-15);
        assert!((oracle.pi[1] - 0.3).abs() < 1e-15);
        assert!((oracle.pi[2] - 0.3).abs() < 1e-15);
        assert!(oracle.fixed_point_residual < 1e-12);
        assert!(oracle.perron_residual < 1e-12);
    }

    #[test]
    fn cyclic_oracle_trivial_two_cycle() {
        let oracle = cyclic_fixed_point_oracle::<f64>(2, &[1, 1], &[0, 1]).unwrap();
        assert_eq!(oracle.w, vec![1.0, 1.0]);
        assert_eq!(oracle.pi, vec![0.5, 0.5]);
    }

    #[test]
    fn cyclic_oracle_zero_count_rejected() {
        assert!(matches!(
            cyclic_fixed_point_oracle::<f64>(3, &[2, 0, 1], &[1, 0, 0]),
            Err(Error::ZeroCount { .. })
        ));
    }

    #[test]
    fn fixed_point_matches_oracle_on_cycles() {
        // with b supplied as the shifted counts, one iteration from c/|c|
        // reproduces the closed form exactly
        for n in 2..7 {
            let g = Graph::<f64>::directed_cycle(n, vec![0.0; n], 1).unwrap();
            let tr = simulate_trace(&g, &[0.0], 30 * n, 1000 + n as u64).unwrap();
            let counts = crate::sim::counts_from_trace(&g, &tr).unwrap();
            if counts.c.iter().any(|&x| x == 0) {
                continue;
            }
            let oracle =
                cyclic_fixed_point_oracle::<f64>(n, &counts.c, &seed_indicator(n, tr.seed))
                    .unwrap();
            // b'' per vertex equals the count of the incoming edge
            let b_shift: Vec<u64> = (0..n).map(|v| counts.c[(v + n - 1) % n]).collect();
            let data = UnorderedData::with_explicit_b(counts.c.clone(), b_shift);
            let opts = FixedPointOptions {
                iterations: 1,
                ..Default::default()
            };
            let got = fixed_point_estimate(&g, &data, &opts).unwrap();
            let wtot: f64 = oracle.w.iter().sum();
            for e in 0..n {
                assert!((got[e] - oracle.w[e] / wtot).abs() < 1e-10);
            }
            // and the iteration is idempotent there
            let opts5 = FixedPointOptions {
                iterations: 5,
                ..Default::default()
            };
            let got5 = fixed_point_estimate(&g, &data, &opts5).unwrap();
            for e in 0..n {
                assert!((got5[e] - got[e]).abs() < 1e-10);
            }
        }
    }

    fn seed_indicator(n: usize, seed: usize) -> Vec<u64> {
        let mut b = vec![0u64; n];
        b[seed] = 1;
        b
    }

    proptest::proptest! {
        #[test]
        fn empirical_inverts_f_for_arbitrary_counts(
            c in proptest::collection::vec(1u64..500, 2..7),
            b_extra in proptest::collection::vec(0u64..5, 2..7),
        ) {
            // f and its inverse are exact on the support for any positive data
            let n = c.len().min(b_extra.len());
            let c = &c[..n];
            let g = Graph::<f64>::directed_cycle(n, vec![0.0; n], 1).unwrap();
            let mut b = vec![0u64; n];
            for e in 0..n {
                b[g.dst(e)] += c[e];
            }
            for (bv, extra) in b.iter_mut().zip(&b_extra[..n]) {
                *bv += extra;
            }
            let data = UnorderedData::with_explicit_b(c.to_vec(), b.clone());
            let w = empirical_weight_estimate(&g, &data).unwrap();
            let ctot: f64 = c.iter().sum::<u64>() as f64;
            let bw: Vec<f64> = (0..n).map(|e| b[g.src(e)] as f64 * w[e]).collect();
            let dot: f64 = bw.iter().sum();
            for e in 0..n {
                proptest::prop_assert!((bw[e] / dot - c[e] as f64 / ctot).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fixed_point_needs_connected_support() {
        // chord edge with zero count is fine; a support that splits is not
        let g = Graph::<f64>::new(4, &[(0, 1), (1, 0), (2, 3), (3, 2)], vec![0.0; 4], 1).unwrap();
        let data = UnorderedData::with_explicit_b(vec![2, 2, 3, 3], vec![3, 2, 4, 3]);
        assert!(matches!(
            fixed_point_estimate(&g, &data, &FixedPointOptions::default()),
            Err(Error::NoPerronVector { .. })
        ));
    }

    #[test]
    fn uniform_counts_are_invariant() {
        let g = Graph::<f64>::directed_cycle(5, vec![0.0; 5], 1).unwrap();
        let data = UnorderedData::with_explicit_b(vec![6; 5], vec![6; 5]);
        for iters in [1, 5] {
            let opts = FixedPointOptions {
                iterations: iters,
                ..Default::default()
            };
            let w = fixed_point_estimate(&g, &data, &opts).unwrap();
            for &x in &w {
                assert!((x - 0.2).abs() < 1e-10);
            }
        }
    }
}
