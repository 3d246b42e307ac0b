//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Criteria 5-7 run the Monte Carlo harness at reduced replication counts;
//! they are seeded and deterministic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spreadfit::graph::Graph;
use spreadfit::inference::{information_estimate, standard_errors_ci};
use spreadfit::likelihood::{fit_mle, FitOptions, FitStatus, LikelihoodContext};
use spreadfit::sim::{counts_from_trace, simulate_trace, Trace};
use spreadfit::spectral::limiting_edge_distribution;
use spreadfit::unordered::{
    cyclic_fixed_point_oracle, fixed_point_estimate, FixedPointOptions, UnorderedData,
};
use spreadfit::weights::project_to_beta;
use spreadfit::{check_mle_existence, linalg, Existence, ExistenceOptions};

use spreadfit_cli::experiment::{run_experiment, ExperimentConfig, Method, Timing, Topology};

fn elapsed_secs(start: std::time::Instant) -> f64 {
    start.elapsed().as_secs_f64()
}

#[test]
fn criterion_01_gradient_hessian_finite_differences() {
    let start = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut max_grad_rel = 0.0f64;
    let mut max_hess_abs = 0.0f64;
    for _ in 0..50 {
        let n = rng.gen_range(3..=10);
        let d = rng.gen_range(1..=3);
        let covs: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = Graph::<f64>::directed_cycle(n, covs, d).unwrap();
        let k = rng.gen_range(5..=50);
        let beta_sim: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let tr = simulate_trace(&g, &beta_sim, k, rng.gen()).unwrap();
        let ctx = LikelihoodContext::from_trace(&g, &tr).unwrap();
        let at: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let grad = ctx.gradient(&at).unwrap();
        let hess = ctx.hessian(&at).unwrap();
        let h = 1e-5;
        for a in 0..d {
            let mut up = at.clone();
            let mut dn = at.clone();
            up[a] += h;
            dn[a] -= h;
            let fd =
                (ctx.log_likelihood(&up).unwrap() - ctx.log_likelihood(&dn).unwrap()) / (2.0 * h);
            let rel = ((grad[a] - fd) / grad[a].abs().max(1.0)).abs();
            max_grad_rel = max_grad_rel.max(rel);
            let gu = ctx.gradient(&up).unwrap();
            let gd = ctx.gradient(&dn).unwrap();
            for b in 0..d {
                let fdh = (gu[b] - gd[b]) / (2.0 * h);
                max_hess_abs = max_hess_abs.max((hess[a * d + b] - fdh).abs());
            }
        }
    }
    let secs = elapsed_secs(start);
    assert!(max_grad_rel <= 1e-6, "gradient rel err {}", max_grad_rel);
    assert!(max_hess_abs <= 1e-5, "hessian abs err {}", max_hess_abs);
    assert!(secs < 10.0, "took {:.1} s", secs);
    println!(
        "criterion 1 PASS: gradient rel err {:.2e}, hessian abs err {:.2e}, {:.2} s",
        max_grad_rel, max_hess_abs, secs
    );
}

#[test]
fn criterion_02_likelihood_fixtures() {
    let g = Graph::<f64>::new(2, &[(0, 1), (1, 0)], vec![1.0, 0.0], 1).unwrap();
    // k = 1: -log n
    let seed_only = LikelihoodContext::from_trace(
        &g,
        &Trace {
            seed: 0,
            events: vec![],
        },
    )
    .unwrap();
    let ll1 = seed_only.log_likelihood(&[0.3]).unwrap();
    assert!((ll1 + 2.0f64.ln()).abs() < 1e-12);
    // forced step: -log 2
    let forced = LikelihoodContext::from_trace(
        &g,
        &Trace {
            seed: 0,
            events: vec![0],
        },
    )
    .unwrap();
    let ll2 = forced.log_likelihood(&[0.9]).unwrap();
    assert!((ll2 + 2.0f64.ln()).abs() < 1e-12);
    // two-step trace at beta = 0.5
    let derived = LikelihoodContext::from_trace(
        &g,
        &Trace {
            seed: 0,
            events: vec![0, 1],
        },
    )
    .unwrap();
    let ll3 = derived.log_likelihood(&[0.5]).unwrap();
    assert!((ll3 + 1.66723).abs() < 1e-5, "ll = {}", ll3);
    assert!((ll3 - (-(2.0f64.ln()) - (1.0 + 0.5f64.exp()).ln())).abs() < 1e-12);
    println!(
        "criterion 2 PASS: loglik fixtures {:.6}, {:.6}, {:.6}",
        ll1, ll2, ll3
    );
}

#[test]
fn criterion_03_cyclic_oracle() {
    let start = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut checked = 0;
    let mut max_fp_res = 0.0f64;
    let mut max_perron_res = 0.0f64;
    let mut max_weight_gap = 0.0f64;
    while checked < 100 {
        let n = rng.gen_range(2..=8);
        let g = Graph::<f64>::directed_cycle(n, vec![0.0; n], 1).unwrap();
        let beta = [rng.gen_range(-0.3..0.3)];
        let k = rng.gen_range(4 * n..20 * n);
        let tr = simulate_trace(&g, &beta, k, rng.gen()).unwrap();
        let counts = counts_from_trace(&g, &tr).unwrap();
        if counts.c.iter().any(|&c| c == 0) {
            continue; // need every edge used for a valid cyclic count vector
        }
        checked += 1;
        let mut b2 = vec![0u64; n];
        b2[tr.seed] = 1;
        let oracle = cyclic_fixed_point_oracle::<f64>(n, &counts.c, &b2).unwrap();
        max_fp_res = max_fp_res.max(oracle.fixed_point_residual);
        max_perron_res = max_perron_res.max(oracle.perron_residual);
        // one fixed-point iteration from c/|c| with the shifted ball counts
        let b_shift: Vec<u64> = (0..n).map(|v| counts.c[(v + n - 1) % n]).collect();
        let data = UnorderedData::with_explicit_b(counts.c.clone(), b_shift);
        let opts = FixedPointOptions {
            iterations: 1,
            ..Default::default()
        };
        let got = fixed_point_estimate(&g, &data, &opts).unwrap();
        let wtot: f64 = oracle.w.iter().sum();
        for e in 0..n {
            max_weight_gap = max_weight_gap.max((got[e] - oracle.w[e] / wtot).abs());
        }
    }
    let secs = elapsed_secs(start);
    assert!(max_fp_res <= 1e-12, "fixed-point residual {}", max_fp_res);
    assert!(
        max_perron_res <= 1e-12,
        "perron residual {}",
        max_perron_res
    );
    assert!(max_weight_gap <= 1e-10, "weight gap {}", max_weight_gap);
    assert!(secs < 5.0, "took {:.1} s", secs);
    println!(
        "criterion 3 PASS: residuals {:.2e}/{:.2e}, weight gap {:.2e}, {:.2} s over 100 cyclic count vectors",
        max_fp_res, max_perron_res, max_weight_gap, secs
    );
}

#[test]
fn criterion_04_simulated_counts_approach_perron() {
    let graphs: Vec<(Graph<f64>, Vec<f64>)> = vec![
        (
            Graph::directed_cycle(2, vec![0.7, 0.0], 1).unwrap(),
            vec![1.0],
        ),
        (
            Graph::directed_cycle(5, vec![0.3, -0.2, 0.1, 0.0, 0.25], 1).unwrap(),
            vec![1.0],
        ),
        (
            Graph::cycle_with_loops(3, vec![0.2, -0.1, 0.3], 1).unwrap(),
            vec![1.0, 0.4],
        ),
        (
            Graph::new(
                3,
                &[(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)],
                vec![0.2, -0.1, 0.05, 0.3, -0.25, 0.15],
                1,
            )
            .unwrap(),
            vec![1.0],
        ),
    ];
    let mut worst = 0.0f64;
    for (g, beta) in &graphs {
        let pi = limiting_edge_distribution(g, beta).unwrap().pi;
        let mut gaps: Vec<f64> = (0..20)
            .map(|rep| {
                let tr = simulate_trace(g, beta, 100_000, 40_400 + rep).unwrap();
                let counts = counts_from_trace(g, &tr).unwrap();
                let total: u64 = counts.c.iter().sum();
                let freq: Vec<f64> = counts.c.iter().map(|&c| c as f64 / total as f64).collect();
                freq.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum()
            })
            .collect();
        gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = gaps[gaps.len() / 2];
        worst = worst.max(median);
        assert!(median < 0.02, "median L1 gap {} (m = {})", median, g.m());
    }
    println!(
        "criterion 4 PASS: worst median L1 gap {:.4} over graphs with m <= 6",
        worst
    );
}

fn desk_experiment(
    ks: Vec<usize>,
    reps: usize,
    methods: Vec<Method>,
    seed: u64,
    n: usize,
) -> ExperimentConfig {
    ExperimentConfig {
        topology: Topology::Cycle,
        n,
        d: 1,
        ks,
        reps,
        master_seed: seed,
        covariate_sd: 0.01,
        beta0: None,
        alpha: 0.05,
        trim_threshold: 10.0,
        fp_iterations: 5,
        methods,
        jobs: 0,
        timing: Timing::None,
    }
}

#[test]
fn criterion_05_rmse_trend() {
    let start = std::time::Instant::now();
    let cfg = desk_experiment(
        vec![100, 250, 1000],
        100,
        vec![Method::Mle, Method::Emp],
        20_250,
        50,
    );
    let report = run_experiment(&cfg);
    let rmse = |row: usize, m: &str| -> f64 {
        report.rows[row]
            .methods
            .iter()
            .find(|s| s.method == m)
            .and_then(|s| s.rmse)
            .unwrap()
    };
    let (mle100, mle250, mle1000) = (rmse(0, "mle"), rmse(1, "mle"), rmse(2, "mle"));
    let (emp100, emp1000) = (rmse(0, "emp"), rmse(2, "emp"));
    let secs = elapsed_secs(start);
    assert!(mle100 < emp100, "mle {} vs emp {} at k=100", mle100, emp100);
    assert!(
        mle1000 < emp1000,
        "mle {} vs emp {} at k=1000",
        mle1000,
        emp1000
    );
    assert!(
        mle100 > mle250 && mle250 > mle1000,
        "mle rmse not decreasing: {} {} {}",
        mle100,
        mle250,
        mle1000
    );
    assert!(
        mle1000 > 4.06 / 3.0 && mle1000 < 4.06 * 3.0,
        "mle rmse at k=1000 is {}",
        mle1000
    );
    assert!(secs < 1800.0, "took {:.1} s", secs);
    println!(
        "criterion 5 PASS: rmse mle ({:.2}, {:.2}, {:.2}) vs emp ({:.2}, ..., {:.2}), reference 4.06, {:.1} s",
        mle100, mle250, mle1000, emp100, emp1000, secs
    );
}

#[test]
fn criterion_06_coverage_direction() {
    let cfg = desk_experiment(vec![1000], 200, vec![Method::Mle], 20_251, 50);
    let report = run_experiment(&cfg);
    let row = &report.rows[0];
    let cov = row.cov_pct.unwrap();
    let line = format!(
        "coverage {:.1}% at nominal 95% (reference reports 31), ne {:.1}%, avg CI length {:.3}",
        cov,
        row.ne_pct,
        row.avg_ci_len.unwrap_or(f64::NAN)
    );
    if cov < 60.0 {
        println!("criterion 6 PASS: {}", line);
    } else {
        println!("criterion 6 FAIL: {}", line);
    }
    assert!(
        cov < 60.0,
        "coverage {:.1}% is not below 60%: the observed-information intervals \
         are calibrated here (estimator spread matches the asymptotic standard \
         error), so the reference undercoverage does not emerge from these \
         formulas at this configuration",
        cov
    );
}

#[test]
fn criterion_07_trimmed_fp_emp_agreement() {
    let start = std::time::Instant::now();
    let cfg = desk_experiment(vec![1000], 100, vec![Method::Emp, Method::Fp], 20_252, 2);
    let report = run_experiment(&cfg);
    let row = &report.rows[0];
    let trimmed = |m: &str| -> f64 {
        row.methods
            .iter()
            .find(|s| s.method == m)
            .and_then(|s| s.trimmed_rmse)
            .unwrap()
    };
    let (emp, fp) = (trimmed("emp"), trimmed("fp"));
    let gap = (fp - emp).abs() / emp;
    let secs = elapsed_secs(start);
    assert!(
        gap <= 0.20,
        "trimmed errors differ by {:.1}% (emp {}, fp {})",
        100.0 * gap,
        emp,
        fp
    );
    println!(
        "criterion 7 PASS: trimmed rmse emp {:.3} vs fp {:.3} ({:.1}% apart), {:.1} s",
        emp,
        fp,
        100.0 * gap,
        secs
    );
}

#[test]
fn criterion_08_existence_checker() {
    // heaviest-edge trace: no maximizer, certificate direction, divergence
    let g = Graph::<f64>::new(2, &[(0, 1), (1, 0)], vec![0.05, 0.0], 1).unwrap();
    let bad = Trace {
        seed: 0,
        events: vec![0; 20],
    };
    let ctx = LikelihoodContext::from_trace(&g, &bad).unwrap();
    let outcome = check_mle_existence(&ctx, &ExistenceOptions::default()).unwrap();
    let cert = match outcome {
        Existence::NotExists(v) => v,
        other => panic!("expected NotExists, got {:?}", other),
    };
    assert!(cert[0] > 0.0);
    let fit = fit_mle(&ctx, &FitOptions::default()).unwrap();
    assert_eq!(fit.status, FitStatus::Diverged);

    // generic simulated trace: maximizer exists and the fit converges
    let covs = vec![0.9, -0.4, 0.15];
    let g2 = Graph::<f64>::directed_cycle(3, covs, 1).unwrap();
    let tr = simulate_trace(&g2, &[0.5], 500, 8_008).unwrap();
    let ctx2 = LikelihoodContext::from_trace(&g2, &tr).unwrap();
    assert!(matches!(
        check_mle_existence(&ctx2, &ExistenceOptions::default()).unwrap(),
        Existence::Exists
    ));
    let fit2 = fit_mle(&ctx2, &FitOptions::default()).unwrap();
    assert_eq!(fit2.status, FitStatus::Converged);
    println!(
        "criterion 8 PASS: NotExists with certificate ({:.1}) and Diverged on the heaviest-edge trace; Exists and Converged on a generic k=500 trace",
        cert[0]
    );
}

#[test]
fn criterion_09_covariance_rank_dichotomy() {
    let designs: Vec<(Vec<f64>, usize)> = vec![
        (vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0], 2),
        (vec![1.0, 0.5, 1.0, -0.3, 1.0, 0.9], 1),
    ];
    let mut summary = Vec::new();
    for (x, want_rank) in designs {
        let d = 2;
        let g = Graph::<f64>::directed_cycle(3, x, d).unwrap();
        let tr = simulate_trace(&g, &[0.1, 0.1], 400, 900).unwrap();
        let ctx = LikelihoodContext::from_trace(&g, &tr).unwrap();
        let beta = [0.2, -0.1];
        let mut cov_sum = vec![0.0f64; d * d];
        let mut used = 0;
        for t in 2..=ctx.k() {
            let p = ctx.conditional_distribution(t, &beta).unwrap();
            if p.iter().any(|&v| v == 0.0) {
                continue;
            }
            used += 1;
            let mut mu = [0.0f64; 2];
            for e in 0..g.m() {
                for a in 0..d {
                    mu[a] += p[e] * g.covariate_row(e)[a];
                }
            }
            for e in 0..g.m() {
                let row = g.covariate_row(e);
                for a in 0..d {
                    for b in 0..d {
                        cov_sum[a * d + b] += p[e] * (row[a] - mu[a]) * (row[b] - mu[b]);
                    }
                }
            }
        }
        assert!(used > 10);
        let (eig, _) = linalg::jacobi_eigen(&cov_sum, d);
        let max = eig.iter().cloned().fold(0.0f64, f64::max);
        let rank = eig.iter().filter(|&&e| e > 1e-9 * max).count();
        assert_eq!(rank, want_rank, "eigenvalues {:?}", eig);
        summary.push(rank);
    }
    println!(
        "criterion 9 PASS: covariance-sum ranks {:?} for designs without/with a solution to Xv = 1",
        summary
    );
}

#[test]
fn criterion_10_projection_exact_recovery() {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let d = rng.gen_range(1..4);
        let m = rng.gen_range(d + 2..10);
        let covs: Vec<f64> = (0..m * d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let edges: Vec<(usize, usize)> = (0..m).map(|i| (i % 2, (i + 1) % 2)).collect();
        let g = Graph::<f64>::new(2, &edges, covs, d).unwrap();
        let beta0: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let c = rng.gen_range(0.01..100.0);
        let w: Vec<f64> = g
            .edge_weights(&beta0)
            .unwrap()
            .iter()
            .map(|v| v * c)
            .collect();
        let support: Vec<usize> = (0..m).collect();
        let got = project_to_beta(&g, &w, &support).unwrap();
        for a in 0..d {
            worst = worst.max((got[a] - beta0[a]).abs());
        }
    }
    assert!(worst <= 1e-10, "worst recovery error {}", worst);
    println!(
        "criterion 10 PASS: exact recovery of beta from scaled exp(X beta), worst error {:.2e}",
        worst
    );
}

#[test]
fn inference_matches_se_oracle_on_hand_fixture() {
    // cross-check the acceptance pipeline pieces on the k=3 fixture:
    // info = 0.25/3, se = 2, ci half-width 2 z
    let g = Graph::<f64>::new(2, &[(0, 1), (1, 0)], vec![1.0, 0.0], 1).unwrap();
    let tr = Trace {
        seed: 0,
        events: vec![0, 1],
    };
    let ctx = LikelihoodContext::from_trace(&g, &tr).unwrap();
    let info = information_estimate(&ctx, &[0.0]).unwrap();
    assert!((info[0] - 0.25 / 3.0).abs() < 1e-12);
    let res = standard_errors_ci(&info, &[0.0], 3, 0.05, 0);
    assert!((res.se[0] - 2.0).abs() < 1e-12);
    assert!((res.ci[0].1 - 3.919_927_969_080_108).abs() < 1e-7);
}
