//! Simulation of the reinforced spreading process and count statistics
//! derived from traces.
//!
//! One transmission happens per time step. At step t the edge `e` is drawn
//! with probability proportional to `b_t(e) * w(e)`, where `b_t(e)` is the
//! cumulative infection count of the source vertex of `e`. The seed vertex
//! starts with one infection. Sampling is cumulative-sum inversion over the
//! active edges, O(m) per step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::scalar::{cast, cast_u64, Scalar};

/// Ordered infection record: the seed vertex plus the time-ordered list of
/// transmission edges (`events[0]` happens at t = 2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub seed: usize,
    pub events: Vec<usize>,
}

impl Trace {
    /// Total number of time steps; the seed counts as t = 1.
    pub fn k(&self) -> usize {
        self.events.len() + 1
    }
}

/// Final count statistics of a trace: `b` per vertex and `c` per edge,
/// both describing time `t` (one past the last step).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counts {
    pub b: Vec<u64>,
    pub c: Vec<u64>,
    pub t: usize,
}

/// Simulate an ordered edge trace of `k` steps. Deterministic in
/// `(graph, beta, k, seed)`; the generator is ChaCha8 seeded from `seed`.
pub fn simulate_trace<F: Scalar>(g: &Graph<F>, beta: &[F], k: usize, seed: u64) -> Result<Trace> {
    if !g.strongly_connected() {
        return Err(Error::NotStronglyConnected);
    }
    assert!(k >= 1, "k must be at least 1");
    let w = g.edge_weights(beta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v1 = rng.gen_range(0..g.n());
    let mut b = vec![0u64; g.n()];
    b[v1] = 1;
    let mut events = Vec::with_capacity(k - 1);
    let mut mass = vec![F::zero(); g.m()];
    for _t in 2..=k {
        let mut total = F::zero();
        for e in 0..g.m() {
            let q = cast_u64::<F>(b[g.src(e)]) * w[e];
            mass[e] = q;
            total = total + q;
        }
        assert!(total > F::zero(), "some edge must be active");
        let target = cast::<F>(rng.gen::<f64>()) * total;
        let mut acc = F::zero();
        let mut chosen = g.m() - 1;
        for (e, &q) in mass.iter().enumerate() {
            acc = acc + q;
            if target < acc {
                chosen = e;
                break;
            }
        }
        events.push(chosen);
        b[g.dst(chosen)] += 1;
    }
    Ok(Trace { seed: v1, events })
}

/// Simulate the ordered vertex process `I_k = (v_1, ..., v_k)`: at each step
/// the destination vertex is drawn from the marginal of the edge process,
/// i.e. with probability proportional to the summed `b_t(src) * w` over its
/// incoming edges.
pub fn simulate_vertex_trace<F: Scalar>(
    g: &Graph<F>,
    beta: &[F],
    k: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    if !g.strongly_connected() {
        return Err(Error::NotStronglyConnected);
    }
    assert!(k >= 1, "k must be at least 1");
    let w = g.edge_weights(beta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v1 = rng.gen_range(0..g.n());
    let mut b = vec![0u64; g.n()];
    b[v1] = 1;
    let mut vertices = Vec::with_capacity(k);
    vertices.push(v1);
    let mut mass = vec![F::zero(); g.n()];
    for _t in 2..=k {
        for q in mass.iter_mut() {
            *q = F::zero();
        }
        let mut total = F::zero();
        for e in 0..g.m() {
            let q = cast_u64::<F>(b[g.src(e)]) * w[e];
            mass[g.dst(e)] = mass[g.dst(e)] + q;
            total = total + q;
        }
        assert!(total > F::zero(), "some vertex must be reachable");
        let target = cast::<F>(rng.gen::<f64>()) * total;
        let mut acc = F::zero();
        let mut chosen = g.n() - 1;
        for (v, &q) in mass.iter().enumerate() {
            acc = acc + q;
            if target < acc {
                chosen = v;
                break;
            }
        }
        vertices.push(chosen);
        b[chosen] += 1;
    }
    Ok(vertices)
}

/// Replay a trace step by step. The callback sees, for each step t = 2..k,
/// the per-vertex counts `b_t` in force when event `events[t-2]` fired.
/// Errors with `InvalidTrace` when an event's source is uninfected.
pub fn replay_trace<F: Scalar, C>(
    g: &Graph<F>,
    tr: &Trace,
    mut visit: C,
) -> Result<(Vec<u64>, Vec<u64>)>
where
    C: FnMut(usize, &[u64], usize),
{
    if tr.seed >= g.n() {
        return Err(Error::InvalidTrace {
            step: 1,
            msg: format!("seed vertex {} out of range", tr.seed),
        });
    }
    let mut b = vec![0u64; g.n()];
    let mut c = vec![0u64; g.m()];
    b[tr.seed] = 1;
    for (i, &e) in tr.events.iter().enumerate() {
        let t = i + 2;
        if e >= g.m() {
            return Err(Error::InvalidTrace {
                step: t,
                msg: format!("edge index {} out of range", e),
            });
        }
        if b[g.src(e)] == 0 {
            return Err(Error::InvalidTrace {
                step: t,
                msg: format!("source vertex {} of edge {} is uninfected", g.src(e), e),
            });
        }
        visit(t, &b, e);
        c[e] += 1;
        b[g.dst(e)] += 1;
    }
    Ok((b, c))
}

/// Counts at `t = k + 1` for a trace; validates the trace on the way.
pub fn counts_from_trace<F: Scalar>(g: &Graph<F>, tr: &Trace) -> Result<Counts> {
    let (b, c) = replay_trace(g, tr, |_, _, _| {})?;
    Ok(Counts {
        b,
        c,
        t: tr.k() + 1,
    })
}
