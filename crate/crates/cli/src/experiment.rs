//! Monte Carlo experiment harness: repeated simulation and estimation on
//! cycle topologies with freshly drawn covariates, reported as one CSV row
//! per infection size.
//!
//! Reproducibility: every replication derives its own seed from the master
//! seed by a splitmix64 step, so results are independent of the worker
//! schedule; replication outcomes are aggregated in replication order.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use spreadfit::graph::Graph;
use spreadfit::inference::{information_estimate, standard_errors_ci};
use spreadfit::likelihood::{fit_mle, FitOptions, FitStatus, LikelihoodContext};
use spreadfit::sim::simulate_trace;
use spreadfit::unordered::{fixed_point_estimate, FixedPointOptions, UnorderedData};
use spreadfit::weights::{fit_general_weights, project_to_beta};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Cycle,
    CycleWithLoops,
}

impl Topology {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "cycle" => Some(Self::Cycle),
            "cycle-with-loops" | "cycle_with_loops" => Some(Self::CycleWithLoops),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Cycle => "cycle",
            Self::CycleWithLoops => "cycle-with-loops",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Mle,
    Emp,
    Gw,
    Fp,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Mle, Method::Emp, Method::Gw, Method::Fp];

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mle" => Some(Self::Mle),
            "emp" | "empirical" => Some(Self::Emp),
            "gw" => Some(Self::Gw),
            "fp" | "fixedpoint" => Some(Self::Fp),
            _ => None,
        }
    }

    fn index(self) -> usize {
        match self {
            Self::Mle => 0,
            Self::Emp => 1,
            Self::Gw => 2,
            Self::Fp => 3,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Self::Mle => "mle",
            Self::Emp => "emp",
            Self::Gw => "gw",
            Self::Fp => "fp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timing {
    Wall,
    None,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub topology: Topology,
    pub n: usize,
    /// Covariate dimension of the inter-vertex edges; the loops topology
    /// appends one loop coordinate to the fitted parameter.
    pub d: usize,
    pub ks: Vec<usize>,
    pub reps: usize,
    pub master_seed: u64,
    pub covariate_sd: f64,
    /// Defaults to all ones in the fitted dimension.
    pub beta0: Option<Vec<f64>>,
    pub alpha: f64,
    /// Replications whose error exceeds this are dropped from the trimmed
    /// root mean squared error, the bulk-accuracy view.
    pub trim_threshold: f64,
    pub fp_iterations: usize,
    pub methods: Vec<Method>,
    /// Worker threads; 0 uses the rayon default.
    pub jobs: usize,
    pub timing: Timing,
}

impl ExperimentConfig {
    pub fn fit_dimension(&self) -> usize {
        match self.topology {
            Topology::Cycle => self.d,
            Topology::CycleWithLoops => self.d + 1,
        }
    }

    pub fn beta0_vector(&self) -> Vec<f64> {
        match &self.beta0 {
            Some(b) => b.clone(),
            None => vec![1.0; self.fit_dimension()],
        }
    }
}

/// Outcome of one method on one replication.
#[derive(Debug, Clone, Default)]
struct MethodOutcome {
    /// Error sqrt(|beta_hat - beta0|^2 / d); None when the method failed.
    err: Option<f64>,
    seconds: f64,
}

#[derive(Debug, Clone, Default)]
struct RepOutcome {
    methods: [MethodOutcome; 4],
    /// MLE bookkeeping for the confidence interval columns.
    ne: bool,
    covered: Option<bool>,
    ci_len: Option<f64>,
    first_coord_gap: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct MethodSummary {
    pub method: &'static str,
    pub rmse: Option<f64>,
    pub trimmed_rmse: Option<f64>,
    pub kept_pct: f64,
    pub fail_pct: f64,
    pub mean_seconds: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct KReport {
    pub k: usize,
    pub methods: Vec<MethodSummary>,
    pub ne_pct: f64,
    pub cov_pct: Option<f64>,
    pub avg_ci_len: Option<f64>,
    pub nec_len: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rows: Vec<KReport>,
}

/// splitmix64 finalizer; replication i of the j-th infection size runs on
/// `splitmix64(master + (j * reps + i + 1) * GOLDEN)`.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rep_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

fn build_graph(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Graph<f64> {
    let normal = Normal::new(0.0, cfg.covariate_sd).unwrap();
    let covs: Vec<f64> = (0..cfg.n * cfg.d).map(|_| normal.sample(rng)).collect();
    match cfg.topology {
        Topology::Cycle => Graph::directed_cycle(cfg.n, covs, cfg.d).unwrap(),
        Topology::CycleWithLoops => Graph::cycle_with_loops(cfg.n, covs, cfg.d).unwrap(),
    }
}

fn param_error(beta_hat: &[f64], beta0: &[f64]) -> f64 {
    let d = beta0.len();
    let ss: f64 = beta_hat
        .iter()
        .zip(beta0)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    (ss / d as f64).sqrt()
}

fn run_rep(cfg: &ExperimentConfig, k: usize, seed: u64) -> RepOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = build_graph(cfg, &mut rng);
    let beta0 = cfg.beta0_vector();
    let tr = simulate_trace(&g, &beta0, k, rng.gen()).unwrap();
    let mut out = RepOutcome::default();

    let wants = |m: Method| cfg.methods.contains(&m);
    let ctx = if wants(Method::Mle) || wants(Method::Gw) {
        Some(LikelihoodContext::from_trace(&g, &tr).unwrap())
    } else {
        None
    };

    if wants(Method::Mle) {
        let ctx = ctx.as_ref().unwrap();
        let t0 = Instant::now();
        let fit = fit_mle(ctx, &FitOptions::default()).unwrap();
        let slot = &mut out.methods[Method::Mle.index()];
        slot.seconds = t0.elapsed().as_secs_f64();
        slot.err = Some(param_error(&fit.beta, &beta0));
        out.first_coord_gap = Some((fit.beta[0] - beta0[0]).abs());
        if fit.status == FitStatus::Converged {
            let info = information_estimate(ctx, &fit.beta).unwrap();
            let inf = standard_errors_ci(&info, &fit.beta, ctx.k(), cfg.alpha, 0);
            if inf.numerical_flag {
                out.ne = true;
            } else {
                let (lo, hi) = inf.ci[0];
                out.covered = Some(lo <= beta0[0] && beta0[0] <= hi);
                out.ci_len = Some(hi - lo);
            }
        } else {
            out.ne = true;
        }
    }

    if wants(Method::Emp) {
        let t0 = Instant::now();
        let est = UnorderedData::from_trace(&g, &tr)
            .and_then(|data| spreadfit::unordered::empirical_weight_estimate(&g, &data))
            .and_then(|w| {
                let support: Vec<usize> = (0..g.m()).filter(|&e| w[e] > 0.0).collect();
                project_to_beta(&g, &w, &support)
            });
        let slot = &mut out.methods[Method::Emp.index()];
        slot.seconds = t0.elapsed().as_secs_f64();
        slot.err = est.ok().map(|b| param_error(&b, &beta0));
    }

    if wants(Method::Gw) {
        let ctx_time = Instant::now();
        let est = fit_general_weights(&g, &tr, &FitOptions::default())
            .and_then(|gwfit| project_to_beta(&g, &gwfit.weights, &gwfit.support));
        let slot = &mut out.methods[Method::Gw.index()];
        slot.seconds = ctx_time.elapsed().as_secs_f64();
        slot.err = est.ok().map(|b| param_error(&b, &beta0));
    }

    if wants(Method::Fp) {
        let t0 = Instant::now();
        let opts = FixedPointOptions {
            iterations: cfg.fp_iterations,
            ..Default::default()
        };
        let est = UnorderedData::from_trace(&g, &tr)
            .and_then(|data| fixed_point_estimate(&g, &data, &opts))
            .and_then(|w| {
                let support: Vec<usize> = (0..g.m()).filter(|&e| w[e] > 0.0).collect();
                project_to_beta(&g, &w, &support)
            });
        let slot = &mut out.methods[Method::Fp.index()];
        slot.seconds = t0.elapsed().as_secs_f64();
        slot.err = est.ok().map(|b| param_error(&b, &beta0));
    }
    out
}

pub fn run_experiment(cfg: &ExperimentConfig) -> ExperimentReport {
    assert!(cfg.reps >= 1, "need at least one replication");
    let run_all = |cfg: &ExperimentConfig| -> Vec<KReport> {
        cfg.ks
            .iter()
            .enumerate()
            .map(|(kidx, &k)| {
                let outcomes: Vec<RepOutcome> = {
                    use rayon::prelude::*;
                    (0..cfg.reps)
                        .into_par_iter()
                        .map(|rep| {
                            let stream = (kidx * cfg.reps + rep) as u64;
                            run_rep(cfg, k, rep_seed(cfg.master_seed, stream))
                        })
                        .collect()
                };
                summarize(cfg, k, &outcomes)
            })
            .collect()
    };
    let rows = if cfg.jobs > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .expect("worker pool");
        pool.install(|| run_all(cfg))
    } else {
        run_all(cfg)
    };
    ExperimentReport {
        config: cfg.clone(),
        rows,
    }
}

fn summarize(cfg: &ExperimentConfig, k: usize, outcomes: &[RepOutcome]) -> KReport {
    let reps = outcomes.len() as f64;
    let mut methods = Vec::new();
    for &m in &Method::ALL {
        if !cfg.methods.contains(&m) {
            continue;
        }
        let errs: Vec<f64> = outcomes
            .iter()
            .filter_map(|o| o.methods[m.index()].err)
            .collect();
        let fails = outcomes.len() - errs.len();
        let rmse = if errs.is_empty() {
            None
        } else {
            Some((errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt())
        };
        let kept: Vec<f64> = errs
            .iter()
            .copied()
            .filter(|&e| e <= cfg.trim_threshold)
            .collect();
        let trimmed = if kept.is_empty() {
            None
        } else {
            Some((kept.iter().map(|e| e * e).sum::<f64>() / kept.len() as f64).sqrt())
        };
        let mean_seconds = match cfg.timing {
            Timing::Wall if !errs.is_empty() => Some(
                outcomes
                    .iter()
                    .filter(|o| o.methods[m.index()].err.is_some())
                    .map(|o| o.methods[m.index()].seconds)
                    .sum::<f64>()
                    / errs.len() as f64,
            ),
            _ => None,
        };
        methods.push(MethodSummary {
            method: m.label(),
            rmse,
            trimmed_rmse: trimmed,
            kept_pct: 100.0 * kept.len() as f64 / reps,
            fail_pct: 100.0 * fails as f64 / reps,
            mean_seconds,
        });
    }

    let ne = outcomes.iter().filter(|o| o.ne).count();
    let with_ci: Vec<&RepOutcome> = outcomes.iter().filter(|o| o.covered.is_some()).collect();
    let cov_pct = if with_ci.is_empty() {
        None
    } else {
        Some(
            100.0 * with_ci.iter().filter(|o| o.covered == Some(true)).count() as f64
                / with_ci.len() as f64,
        )
    };
    let avg_ci_len = if with_ci.is_empty() {
        None
    } else {
        Some(with_ci.iter().filter_map(|o| o.ci_len).sum::<f64>() / with_ci.len() as f64)
    };
    let mut gaps: Vec<f64> = outcomes.iter().filter_map(|o| o.first_coord_gap).collect();
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let nec_len = if gaps.is_empty() {
        None
    } else {
        // nearest-rank 95th percentile
        let idx = ((0.95 * gaps.len() as f64).ceil() as usize).clamp(1, gaps.len()) - 1;
        Some(gaps[idx])
    };
    KReport {
        k,
        methods,
        ne_pct: 100.0 * ne as f64 / reps,
        cov_pct,
        avg_ci_len,
        nec_len,
    }
}

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{:.6}", x),
        _ => "na".to_string(),
    }
}

/// One CSV row per infection size, with the method columns in the fixed
/// order mle, emp, gw, fp ("na" where a method was not run).
pub fn report_csv(report: &ExperimentReport) -> String {
    let mut out = String::new();
    out.push_str("topology,n,d,k,reps,seed");
    for m in Method::ALL {
        let _ = write!(out, ",rmse_{}", m.label());
    }
    for m in Method::ALL {
        let _ = write!(out, ",trimmed_rmse_{}", m.label());
    }
    for m in Method::ALL {
        let _ = write!(out, ",kept_pct_{}", m.label());
    }
    for m in Method::ALL {
        let _ = write!(out, ",fail_pct_{}", m.label());
    }
    out.push_str(",ne_pct,cov_pct,avg_ci_len,nec_len");
    for m in Method::ALL {
        let _ = write!(out, ",time_{}_s", m.label());
    }
    out.push('\n');
    let cfg = &report.config;
    for row in &report.rows {
        let find = |m: Method| row.methods.iter().find(|s| s.method == m.label());
        let _ = write!(
            out,
            "{},{},{},{},{},{}",
            cfg.topology.label(),
            cfg.n,
            cfg.d,
            row.k,
            cfg.reps,
            cfg.master_seed
        );
        for m in Method::ALL {
            let _ = write!(out, ",{}", cell(find(m).and_then(|s| s.rmse)));
        }
        for m in Method::ALL {
            let _ = write!(out, ",{}", cell(find(m).and_then(|s| s.trimmed_rmse)));
        }
        for m in Method::ALL {
            let _ = write!(out, ",{}", cell(find(m).map(|s| s.kept_pct)));
        }
        for m in Method::ALL {
            let _ = write!(out, ",{}", cell(find(m).map(|s| s.fail_pct)));
        }
        let _ = write!(
            out,
            ",{},{},{},{}",
            cell(Some(row.ne_pct)),
            cell(row.cov_pct),
            cell(row.avg_ci_len),
            cell(row.nec_len)
        );
        for m in Method::ALL {
            let _ = write!(out, ",{}", cell(find(m).and_then(|s| s.mean_seconds)));
        }
        out.push('\n');
    }
    out
}
