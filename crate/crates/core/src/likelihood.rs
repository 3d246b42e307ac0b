//! Log-likelihood of an ordered trace under exponential weights, analytic
//! gradient and Hessian, and the damped-Newton maximizer.
//!
//! The same kernel serves three models. For the edge process the choice items
//! are edges with per-step counts `b_t(e) = b_t(src(e))`. For the vertex
//! process (weights constant in the source) the items are vertices with the
//! summed counts of their incoming edges. For the non-parametric general
//! weights fit the items are the observed edges with indicator covariates.
//! In every case step t picks item i with probability proportional to
//! `count_t(i) * exp(x_i' beta)`, and the log-likelihood is the sum of the
//! log conditional probabilities plus `-log n` for the uniform seed.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::scalar::{cast, cast_u64, Scalar};
use crate::sim::{replay_trace, Trace};
use crate::{existence, linalg};

/// Precomputed per-step choice data for one trace. Read-only after
/// construction; safe to share across workers.
#[derive(Debug, Clone)]
pub struct LikelihoodContext<F: Scalar> {
    covs: Vec<F>,
    items: usize,
    d: usize,
    chosen: Vec<usize>,
    counts: Vec<u64>,
    ln_table: Vec<F>,
    const_term: F,
}

impl<F: Scalar> LikelihoodContext<F> {
    /// Context for the ordered edge process of a trace on `g`.
    pub fn from_trace(g: &Graph<F>, tr: &Trace) -> Result<Self> {
        let m = g.m();
        let steps = tr.events.len();
        let mut counts = Vec::with_capacity(steps * m);
        replay_trace(g, tr, |_t, b, _e| {
            for e in 0..m {
                counts.push(b[g.src(e)]);
            }
        })?;
        Self::from_parts(
            g.covariates().to_vec(),
            m,
            g.d(),
            g.n(),
            tr.events.clone(),
            counts,
        )
    }

    /// Context for the ordered vertex process (unknown sources). Requires the
    /// covariates of all edges into a vertex to agree, which is the
    /// destination-constant weight model.
    pub fn from_vertex_trace(g: &Graph<F>, vertices: &[usize]) -> Result<Self> {
        assert!(!vertices.is_empty(), "vertex trace needs at least the seed");
        let n = g.n();
        let d = g.d();
        // destination covariates
        let mut covs = vec![F::zero(); n * d];
        let mut seen = vec![false; n];
        for e in 0..g.m() {
            let v = g.dst(e);
            let row = g.covariate_row(e);
            if seen[v] {
                if covs[v * d..(v + 1) * d] != *row {
                    return Err(Error::CovariateNotDestinationConstant { vertex: v });
                }
            } else {
                covs[v * d..(v + 1) * d].copy_from_slice(row);
                seen[v] = true;
            }
        }
        let seed = vertices[0];
        if seed >= n {
            return Err(Error::InvalidTrace {
                step: 1,
                msg: format!("seed vertex {} out of range", seed),
            });
        }
        let steps = vertices.len() - 1;
        let mut counts = Vec::with_capacity(steps * n);
        let mut chosen = Vec::with_capacity(steps);
        let mut b = vec![0u64; n];
        b[seed] = 1;
        for (i, &v) in vertices[1..].iter().enumerate() {
            let t = i + 2;
            if v >= n {
                return Err(Error::InvalidTrace {
                    step: t,
                    msg: format!("vertex {} out of range", v),
                });
            }
            let base = counts.len();
            counts.resize(base + n, 0);
            for e in 0..g.m() {
                counts[base + g.dst(e)] += b[g.src(e)];
            }
            if counts[base + v] == 0 {
                return Err(Error::InvalidTrace {
                    step: t,
                    msg: format!("vertex {} is unreachable from the infected set", v),
                });
            }
            chosen.push(v);
            b[v] += 1;
        }
        Self::from_parts(covs, n, d, n, chosen, counts)
    }

    /// Assemble a context from raw parts. `counts` is `steps x items`
    /// row-major; `chosen[t]` must be active at step t.
    pub(crate) fn from_parts(
        covs: Vec<F>,
        items: usize,
        d: usize,
        n_seeds: usize,
        chosen: Vec<usize>,
        counts: Vec<u64>,
    ) -> Result<Self> {
        assert_eq!(covs.len(), items * d);
        assert_eq!(counts.len(), chosen.len() * items);
        let max_count = counts.iter().copied().max().unwrap_or(0);
        let mut ln_table = Vec::with_capacity(max_count as usize + 1);
        ln_table.push(F::zero()); // ln(0) unused: count-zero items are inactive
        for i in 1..=max_count {
            ln_table.push(cast_u64::<F>(i).ln());
        }
        let mut const_term = -cast::<F>(n_seeds as f64).ln();
        for (idx, &ch) in chosen.iter().enumerate() {
            let cnt = counts[idx * items + ch];
            if cnt == 0 {
                return Err(Error::InvalidTrace {
                    step: idx + 2,
                    msg: "chosen item has zero count".into(),
                });
            }
            const_term = const_term + ln_table[cnt as usize];
        }
        Ok(Self {
            covs,
            items,
            d,
            chosen,
            counts,
            ln_table,
            const_term,
        })
    }

    /// Total time steps, the seed included.
    pub fn k(&self) -> usize {
        self.chosen.len() + 1
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn items(&self) -> usize {
        self.items
    }

    pub(crate) fn n_steps(&self) -> usize {
        self.chosen.len()
    }

    pub(crate) fn chosen_item(&self, idx: usize) -> usize {
        self.chosen[idx]
    }

    pub(crate) fn counts_row(&self, idx: usize) -> &[u64] {
        &self.counts[idx * self.items..(idx + 1) * self.items]
    }

    pub(crate) fn covariate_row(&self, item: usize) -> &[F] {
        &self.covs[item * self.d..(item + 1) * self.d]
    }

    fn check_dim(&self, beta: &[F]) -> Result<()> {
        if beta.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: beta.len(),
            });
        }
        Ok(())
    }

    fn linear_predictor(&self, beta: &[F]) -> Vec<F> {
        let mut eta = vec![F::zero(); self.items];
        for (i, v) in eta.iter_mut().enumerate() {
            let row = self.covariate_row(i);
            let mut acc = F::zero();
            for (&x, &b) in row.iter().zip(beta) {
                acc = acc + x * b;
            }
            *v = acc;
        }
        eta
    }

    /// Conditional choice distribution `p_t` at time `t` (2..=k): probability
    /// proportional to `count_t(i) * exp(x_i' beta)`, zero where the count is
    /// zero. Max-shifted exponentials, sums to 1.
    pub fn conditional_distribution(&self, t: usize, beta: &[F]) -> Result<Vec<F>> {
        self.check_dim(beta)?;
        assert!(t >= 2 && t <= self.k(), "t out of range");
        let eta = self.linear_predictor(beta);
        let row = self.counts_row(t - 2);
        let mut p = vec![F::zero(); self.items];
        let mut mx = F::neg_infinity();
        for i in 0..self.items {
            if row[i] > 0 {
                let v = eta[i] + self.ln_table[row[i] as usize];
                if v > mx {
                    mx = v;
                }
            }
        }
        let mut total = F::zero();
        for i in 0..self.items {
            if row[i] > 0 {
                let v = (eta[i] + self.ln_table[row[i] as usize] - mx).exp();
                p[i] = v;
                total = total + v;
            }
        }
        for v in p.iter_mut() {
            *v = *v / total;
        }
        Ok(p)
    }

    /// Log-likelihood at `beta`, log-sum-exp stabilized.
    pub fn log_likelihood(&self, beta: &[F]) -> Result<F> {
        self.check_dim(beta)?;
        let eta = self.linear_predictor(beta);
        Ok(self.ll_given_eta(&eta))
    }

    fn ll_given_eta(&self, eta: &[F]) -> F {
        let mut ll = self.const_term;
        for idx in 0..self.n_steps() {
            let row = self.counts_row(idx);
            let mut mx = F::neg_infinity();
            for i in 0..self.items {
                if row[i] > 0 {
                    let v = eta[i] + self.ln_table[row[i] as usize];
                    if v > mx {
                        mx = v;
                    }
                }
            }
            let mut sum = F::zero();
            for i in 0..self.items {
                if row[i] > 0 {
                    sum = sum + (eta[i] + self.ln_table[row[i] as usize] - mx).exp();
                }
            }
            ll = ll + eta[self.chosen[idx]] - (mx + sum.ln());
        }
        ll
    }

    /// Analytic gradient: per step, the chosen covariates minus the
    /// conditional mean of the covariates.
    pub fn gradient(&self, beta: &[F]) -> Result<Vec<F>> {
        self.check_dim(beta)?;
        let (_, g, _) = self.eval(beta, true, false);
        Ok(g)
    }

    /// Analytic Hessian: minus the sum of per-step conditional covariance
    /// matrices of the covariates. Symmetric negative semidefinite, d x d
    /// row-major.
    pub fn hessian(&self, beta: &[F]) -> Result<Vec<F>> {
        self.check_dim(beta)?;
        let (_, _, h) = self.eval(beta, false, true);
        Ok(h)
    }

    /// One pass over the steps computing the requested pieces.
    fn eval(&self, beta: &[F], want_grad: bool, want_hess: bool) -> (F, Vec<F>, Vec<F>) {
        let d = self.d;
        let eta = self.linear_predictor(beta);
        let mut ll = self.const_term;
        let mut grad = vec![F::zero(); if want_grad { d } else { 0 }];
        let mut hess = vec![F::zero(); if want_hess { d * d } else { 0 }];
        let mut p = vec![F::zero(); self.items];
        let mut mu = vec![F::zero(); d];
        let mut sec = vec![F::zero(); d * d];
        for idx in 0..self.n_steps() {
            let row = self.counts_row(idx);
            let mut mx = F::neg_infinity();
            for i in 0..self.items {
                if row[i] > 0 {
                    let v = eta[i] + self.ln_table[row[i] as usize];
                    if v > mx {
                        mx = v;
                    }
                }
            }
            let mut sum = F::zero();
            for i in 0..self.items {
                if row[i] > 0 {
                    let v = (eta[i] + self.ln_table[row[i] as usize] - mx).exp();
                    p[i] = v;
                    sum = sum + v;
                } else {
                    p[i] = F::zero();
                }
            }
            ll = ll + eta[self.chosen[idx]] - (mx + sum.ln());
            if !(want_grad || want_hess) {
                continue;
            }
            for v in mu.iter_mut() {
                *v = F::zero();
            }
            if want_hess {
                for v in sec.iter_mut() {
                    *v = F::zero();
                }
            }
            for i in 0..self.items {
                if p[i] == F::zero() {
                    continue;
                }
                let w = p[i] / sum;
                let x = self.covariate_row(i);
                for a in 0..d {
                    mu[a] = mu[a] + w * x[a];
                    if want_hess {
                        for b in a..d {
                            sec[a * d + b] = sec[a * d + b] + w * x[a] * x[b];
                        }
                    }
                }
            }
            if want_grad {
                let xc = self.covariate_row(self.chosen[idx]);
                for a in 0..d {
                    grad[a] = grad[a] + xc[a] - mu[a];
                }
            }
            if want_hess {
                for a in 0..d {
                    for b in a..d {
                        let cov = sec[a * d + b] - mu[a] * mu[b];
                        hess[a * d + b] = hess[a * d + b] - cov;
                    }
                }
            }
        }
        if want_hess {
            for a in 0..d {
                for b in 0..a {
                    hess[a * d + b] = hess[b * d + a];
                }
            }
        }
        (ll, grad, hess)
    }
}

/// Convenience wrapper for the vertex-process log-likelihood; gradient,
/// Hessian, and fitting go through [`LikelihoodContext::from_vertex_trace`].
pub fn vertex_log_likelihood<F: Scalar>(g: &Graph<F>, vertices: &[usize], beta: &[F]) -> Result<F> {
    LikelihoodContext::from_vertex_trace(g, vertices)?.log_likelihood(beta)
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitStatus<F: Scalar> {
    Converged,
    MaxIters,
    /// The parameter norm crossed the cap, the heuristic signal that the
    /// maximizer runs away (sampling concentrated on the heaviest edges).
    Diverged,
    /// The exact feasibility check certified nonexistence along a direction.
    NonExistent(Vec<F>),
}

#[derive(Debug, Clone)]
pub struct FitResult<F: Scalar> {
    pub beta: Vec<F>,
    pub loglik: F,
    pub grad_norm: F,
    pub iterations: usize,
    pub status: FitStatus<F>,
    /// Hessian at the returned point, d x d row-major.
    pub hessian: Vec<F>,
}

#[derive(Debug, Clone)]
pub struct FitOptions<F: Scalar> {
    pub init: Option<Vec<F>>,
    /// Convergence threshold on the sup norm of the gradient.
    pub tol: F,
    pub max_iters: usize,
    /// Divergence guard on the sup norm of beta.
    pub norm_cap: F,
    /// Per-iteration cap on the sup norm of the Newton step.
    pub step_cap: F,
    /// Run the exact LP existence check before optimizing.
    pub check_existence: bool,
}

impl<F: Scalar> Default for FitOptions<F> {
    fn default() -> Self {
        Self {
            init: None,
            tol: cast(1e-8),
            max_iters: 200,
            norm_cap: cast(50.0),
            step_cap: cast(10.0),
            check_existence: false,
        }
    }
}

const ARMIJO_C: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;

/// Maximize the log-likelihood by damped Newton ascent with Armijo
/// backtracking. A trace-scaled ridge handles the rank-deficient case.
pub fn fit_mle<F: Scalar>(
    ctx: &LikelihoodContext<F>,
    opts: &FitOptions<F>,
) -> Result<FitResult<F>> {
    let d = ctx.d();
    let mut beta = match &opts.init {
        Some(b) => {
            ctx.check_dim(b)?;
            b.clone()
        }
        None => vec![F::zero(); d],
    };
    // vacuous likelihood: nothing to fit
    if ctx.n_steps() == 0 || d == 0 {
        let ll = ctx.log_likelihood(&beta)?;
        return Ok(FitResult {
            beta,
            loglik: ll,
            grad_norm: F::zero(),
            iterations: 0,
            status: FitStatus::Converged,
            hessian: vec![F::zero(); d * d],
        });
    }
    if opts.check_existence {
        if let existence::Existence::NotExists(v) =
            existence::check_mle_existence(ctx, &existence::ExistenceOptions::default())?
        {
            let (ll, g, h) = ctx.eval(&beta, true, true);
            let gnorm = g.iter().fold(F::zero(), |acc, x| acc.max(x.abs()));
            return Ok(FitResult {
                beta,
                loglik: ll,
                grad_norm: gnorm,
                iterations: 0,
                status: FitStatus::NonExistent(v),
                hessian: h,
            });
        }
    }

    let armijo = cast::<F>(ARMIJO_C);
    let backtrack = cast::<F>(BACKTRACK);
    let mut status = FitStatus::MaxIters;
    let mut iterations = opts.max_iters;
    let (mut ll, mut grad, mut hess) = ctx.eval(&beta, true, true);
    for iter in 1..=opts.max_iters {
        let gnorm = grad.iter().fold(F::zero(), |acc, x| acc.max(x.abs()));
        if gnorm <= opts.tol {
            status = FitStatus::Converged;
            iterations = iter - 1;
            break;
        }
        let step = newton_step(&hess, &grad, d);
        let mut dir = step;
        let mut gs = dot(&grad, &dir);
        if !(gs > F::zero()) || dir.iter().any(|v| !v.is_finite()) {
            // fall back to steepest ascent
            dir = grad.clone();
            gs = dot(&grad, &dir);
        }
        let mut dmax = dir.iter().fold(F::zero(), |acc, x| acc.max(x.abs()));
        if dmax > opts.step_cap {
            let scale = opts.step_cap / dmax;
            for v in dir.iter_mut() {
                *v = *v * scale;
            }
            gs = gs * scale;
            dmax = opts.step_cap;
        }
        // near the optimum the Armijo gain falls below float resolution;
        // a non-degrading tiny full step is then still a valid Newton step
        let noise = cast::<F>(1e-12) * (F::one() + ll.abs());
        let tiny_step = cast::<F>(1e-5);
        let mut alpha = F::one();
        let mut accepted = false;
        for _ in 0..80 {
            let cand: Vec<F> = beta
                .iter()
                .zip(&dir)
                .map(|(&b, &s)| b + alpha * s)
                .collect();
            let cand_ll = ctx.ll_given_eta(&ctx.linear_predictor(&cand));
            let armijo_ok = cand_ll >= ll + armijo * alpha * gs;
            let stall_ok = cand_ll >= ll - noise && alpha * dmax <= tiny_step;
            if cand_ll.is_finite() && (armijo_ok || stall_ok) {
                beta = cand;
                accepted = true;
                break;
            }
            alpha = alpha * backtrack;
        }
        if !accepted {
            // no admissible step left at this scale
            iterations = iter;
            status = FitStatus::MaxIters;
            break;
        }
        let refreshed = ctx.eval(&beta, true, true);
        ll = refreshed.0;
        grad = refreshed.1;
        hess = refreshed.2;
        let bnorm = beta.iter().fold(F::zero(), |acc, x| acc.max(x.abs()));
        if bnorm > opts.norm_cap {
            status = FitStatus::Diverged;
            iterations = iter;
            break;
        }
    }
    let gnorm = grad.iter().fold(F::zero(), |acc, x| acc.max(x.abs()));
    if status == FitStatus::MaxIters && gnorm <= opts.tol {
        status = FitStatus::Converged;
    }
    Ok(FitResult {
        beta,
        loglik: ll,
        grad_norm: gnorm,
        iterations,
        status,
        hessian: hess,
    })
}

fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Solve `(-H + ridge I) s = g`, escalating the trace-scaled ridge until the
/// solve succeeds.
fn newton_step<F: Scalar>(hess: &[F], grad: &[F], d: usize) -> Vec<F> {
    let mut a = vec![F::zero(); d * d];
    for i in 0..d * d {
        a[i] = -hess[i];
    }
    let mut trace = F::zero();
    for i in 0..d {
        trace = trace + a[i * d + i];
    }
    let scale = (trace / cast(d as f64)).max(F::one());
    let base = cast::<F>(1e-10) * scale;
    let mut ridge = F::zero();
    for _ in 0..14 {
        let mut am = a.clone();
        for i in 0..d {
            am[i * d + i] = am[i * d + i] + ridge;
        }
        if let Some(s) = linalg::solve(&am, d, grad, cast(1e-13)) {
            if s.iter().all(|v| v.is_finite()) {
                return s;
            }
        }
        ridge = if ridge == F::zero() {
            base
        } else {
            ridge * cast(100.0)
        };
    }
    grad.to_vec()
}
