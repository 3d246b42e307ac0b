//! Command-line interface: simulation, fitting, existence checking, the
//! Monte Carlo experiment harness, and transmission-data ingestion.
//!
//! Exit codes: 0 success, 2 usage, 3 data or format error,
//! 4 nonexistence or divergence of an estimate, 5 spectral failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spreadfit::inference::{information_estimate, standard_errors_ci, wald_stats};
use spreadfit::likelihood::{fit_mle, FitOptions, FitStatus, LikelihoodContext};
use spreadfit::unordered::{
    empirical_weight_estimate, fixed_point_estimate, FixedPointOptions, UnorderedData,
};
use spreadfit::weights::{fit_general_weights, project_to_beta};
use spreadfit::{io as sio, Graph64};

use spreadfit_cli::experiment::{
    report_csv, run_experiment, ExperimentConfig, Method, Timing, Topology,
};
use spreadfit_cli::ingest::ingest_transmissions;
use spreadfit_cli::report::{ExistenceReport, FitReport, WeightsReport};

const EXIT_DATA: u8 = 3;
const EXIT_ESTIMATE: u8 = 4;
const EXIT_SPECTRAL: u8 = 5;

#[derive(Parser)]
#[command(
    name = "spreadfit",
    version,
    about = "Simulate reinforced spreading on directed graphs and estimate edge-weight parameters"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate a spreading trace and write it as CSV.
    Simulate(SimulateArgs),
    /// Fit edge-weight parameters from observed data.
    #[command(subcommand)]
    Fit(FitCmd),
    /// Exact LP check of whether the likelihood attains its maximum.
    CheckExistence(CheckArgs),
    /// Monte Carlo study over cycle topologies; one CSV row per infection size.
    Experiment(ExperimentArgs),
    /// Build a complete-graph instance from inter-regional transmissions.
    Ingest(IngestArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Graph CSV (edge_id,src,dst,x1,...,xd).
    #[arg(long)]
    graph: PathBuf,
    /// Parameters: inline comma-separated values or a JSON file path.
    #[arg(long)]
    beta: String,
    /// Number of time steps, the seed included.
    #[arg(long)]
    steps: usize,
    /// RNG seed; identical seeds give identical traces.
    #[arg(long)]
    seed: u64,
    /// Output trace CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Simulate the edge process or the destination-only vertex process.
    #[arg(long, default_value = "edge", value_parser = ["edge", "vertex"])]
    process: String,
}

#[derive(Args)]
struct FitCommon {
    /// Graph CSV.
    #[arg(long)]
    graph: PathBuf,
    /// Trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the JSON report here as well as to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum FitCmd {
    /// Maximum likelihood for the exponential parametrization.
    Mle {
        #[command(flatten)]
        common: FitCommon,
        /// Evaluate the likelihood at this point instead of optimizing.
        #[arg(long)]
        eval_beta: Option<String>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Discard this many early steps when scaling the intervals.
        #[arg(long, default_value_t = 0)]
        burn_in: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 200)]
        max_iters: usize,
        #[arg(long, default_value_t = 50.0)]
        norm_cap: f64,
        /// Run the exact existence check before optimizing.
        #[arg(long, default_value_t = false)]
        check_existence: bool,
    },
    /// Non-parametric per-edge weights from an ordered trace.
    Gw {
        #[command(flatten)]
        common: FitCommon,
    },
    /// Closed-form weight estimate from unordered counts.
    Empirical {
        #[command(flatten)]
        common: FitCommon,
        /// Counts CSV (edge_id,count with an optional # seed_vertex line).
        #[arg(long)]
        counts: Option<PathBuf>,
        /// Seed vertex (1-based) when the counts file does not carry one.
        #[arg(long)]
        seed_vertex: Option<usize>,
    },
    /// Fixed-point weight estimate from unordered counts.
    Fixedpoint {
        #[command(flatten)]
        common: FitCommon,
        #[arg(long)]
        counts: Option<PathBuf>,
        #[arg(long)]
        seed_vertex: Option<usize>,
        /// Fixed-point iterations.
        #[arg(long, default_value_t = 5)]
        iters: usize,
    },
    /// Maximum likelihood for the vertex process (weights constant in the source).
    Vertex {
        #[command(flatten)]
        common: FitCommon,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        burn_in: usize,
    },
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    trace: PathBuf,
    /// Cap on deduplicated LP constraint rows.
    #[arg(long, default_value_t = 20_000)]
    max_pairs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, default_value = "cycle", value_parser = ["cycle", "cycle-with-loops"])]
    topology: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Comma-separated infection sizes, e.g. 100,250,1000.
    #[arg(long)]
    k: String,
    #[arg(long)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0.01)]
    covariate_sd: f64,
    /// True parameters; defaults to all ones.
    #[arg(long)]
    beta0: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Trimmed-error threshold.
    #[arg(long, default_value_t = 10.0)]
    trim: f64,
    #[arg(long, default_value_t = 5)]
    fp_iters: usize,
    /// Comma-separated subset of mle,emp,gw,fp.
    #[arg(long, default_value = "mle,emp,gw,fp")]
    methods: String,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// wall = measure fit times, none = deterministic report.
    #[arg(long, default_value = "wall", value_parser = ["wall", "none"])]
    timing: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    /// Transmission CSV (t,src_region,dst_region).
    #[arg(long)]
    transmissions: PathBuf,
    /// Region covariates CSV (region,<names...>).
    #[arg(long)]
    covariates: PathBuf,
    /// Log-transform region covariates before standardizing.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    log: bool,
    #[arg(long)]
    out_graph: PathBuf,
    #[arg(long)]
    out_trace: PathBuf,
    #[arg(long)]
    out_counts: Option<PathBuf>,
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn data(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            msg: msg.into(),
        }
    }
}

fn classify(err: spreadfit::Error) -> Failure {
    let code = match &err {
        spreadfit::Error::NotConverged { .. } | spreadfit::Error::NoPerronVector { .. } => {
            EXIT_SPECTRAL
        }
        _ => EXIT_DATA,
    };
    Failure {
        code,
        msg: err.to_string(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.cmd {
        Cmd::Simulate(args) => cmd_simulate(args),
        Cmd::Fit(cmd) => cmd_fit(cmd),
        Cmd::CheckExistence(args) => cmd_check(args),
        Cmd::Experiment(args) => cmd_experiment(args),
        Cmd::Ingest(args) => cmd_ingest(args),
    }
}

fn load_graph(path: &Path) -> Result<Graph64, Failure> {
    sio::read_graph(path).map_err(|e| Failure::data(format!("{}: {}", path.display(), e)))
}

/// Inline comma-separated floats, or a JSON file holding an array or an
/// object with a "beta" array.
fn parse_beta(spec: &str, d: usize) -> Result<Vec<f64>, Failure> {
    let values: Vec<f64> = if Path::new(spec).exists() {
        let text =
            fs::read_to_string(spec).map_err(|e| Failure::data(format!("{}: {}", spec, e)))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Failure::data(format!("{}: invalid JSON: {}", spec, e)))?;
        let arr = match &value {
            serde_json::Value::Array(a) => a.clone(),
            serde_json::Value::Object(o) => o
                .get("beta")
                .and_then(|b| b.as_array())
                .cloned()
                .ok_or_else(|| Failure::data(format!("{}: no \"beta\" array", spec)))?,
            _ => return Err(Failure::data(format!("{}: expected array or object", spec))),
        };
        arr.iter()
            .map(|v| {
                v.as_f64()
                    .ok_or_else(|| Failure::data(format!("{}: non-numeric entry", spec)))
            })
            .collect::<Result<_, _>>()?
    } else {
        spec.split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| Failure::data(format!("invalid beta value {:?}", f)))
            })
            .collect::<Result<_, _>>()?
    };
    if values.len() != d {
        return Err(Failure::data(format!(
            "beta has {} entries but the graph has d = {}",
            values.len(),
            d
        )));
    }
    Ok(values)
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<(), Failure> {
    println!("{}", text.trim_end());
    if let Some(path) = out {
        fs::write(path, text).map_err(|e| Failure::data(format!("{}: {}", path.display(), e)))?;
    }
    Ok(())
}

fn emit_json<T: serde::Serialize>(value: &T, out: &Option<PathBuf>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::data(format!("serialization: {}", e)))?;
    emit(&(text + "\n"), out)
}

fn cmd_simulate(args: SimulateArgs) -> Result<u8, Failure> {
    let g = load_graph(&args.graph)?;
    let beta = parse_beta(&args.beta, g.d())?;
    if args.steps < 1 {
        return Err(Failure::data("--steps must be at least 1"));
    }
    let text = if args.process == "vertex" {
        let vs =
            spreadfit::simulate_vertex_trace(&g, &beta, args.steps, args.seed).map_err(classify)?;
        sio::format_vertex_trace(&vs)
    } else {
        let tr = spreadfit::simulate_trace(&g, &beta, args.steps, args.seed).map_err(classify)?;
        sio::format_trace(&g, &tr)
    };
    match &args.out {
        Some(path) => fs::write(path, &text)
            .map_err(|e| Failure::data(format!("{}: {}", path.display(), e)))?,
        None => print!("{}", text),
    }
    Ok(0)
}

fn require_trace(common: &FitCommon) -> Result<PathBuf, Failure> {
    common
        .trace
        .clone()
        .ok_or_else(|| Failure::data("--trace is required for this subcommand"))
}

fn fit_exit(status: &FitStatus<f64>) -> u8 {
    match status {
        FitStatus::Converged => 0,
        _ => EXIT_ESTIMATE,
    }
}

fn inference_at(
    ctx: &LikelihoodContext<f64>,
    beta: &[f64],
    alpha: f64,
    burn_in: usize,
) -> Result<spreadfit::InferenceResult64, Failure> {
    if burn_in >= ctx.k() {
        return Err(Failure::data(format!(
            "--burn-in {} must be smaller than the trace length k = {}",
            burn_in,
            ctx.k()
        )));
    }
    let info = information_estimate(ctx, beta).map_err(classify)?;
    let mut inf = standard_errors_ci(&info, beta, ctx.k(), alpha, burn_in);
    inf.tstats = wald_stats(beta, &inf.se);
    Ok(inf)
}

fn cmd_fit(cmd: FitCmd) -> Result<u8, Failure> {
    match cmd {
        FitCmd::Mle {
            common,
            eval_beta,
            alpha,
            burn_in,
            tol,
            max_iters,
            norm_cap,
            check_existence,
        } => {
            let g = load_graph(&common.graph)?;
            let trace_path = require_trace(&common)?;
            let tr = sio::read_trace(&trace_path, &g)
                .map_err(|e| Failure::data(format!("{}: {}", trace_path.display(), e)))?;
            let ctx = LikelihoodContext::from_trace(&g, &tr).map_err(classify)?;
            if let Some(spec) = eval_beta {
                let beta = parse_beta(&spec, g.d())?;
                let ll = ctx.log_likelihood(&beta).map_err(classify)?;
                let grad = ctx.gradient(&beta).map_err(classify)?;
                let hess = ctx.hessian(&beta).map_err(classify)?;
                let gnorm = grad.iter().fold(0.0f64, |a, x| a.max(x.abs()));
                let inf = inference_at(&ctx, &beta, alpha, burn_in)?;
                let report = FitReport::evaluated(beta, ll, gnorm, hess, Some(&inf));
                emit_json(&report, &common.out)?;
                return Ok(0);
            }
            let opts = FitOptions {
                tol,
                max_iters,
                norm_cap,
                check_existence,
                ..Default::default()
            };
            let fit = fit_mle(&ctx, &opts).map_err(classify)?;
            let inference = if fit.status == FitStatus::Converged {
                Some(inference_at(&ctx, &fit.beta, alpha, burn_in)?)
            } else {
                None
            };
            let report = FitReport::from_fit(&fit, inference.as_ref());
            emit_json(&report, &common.out)?;
            Ok(fit_exit(&fit.status))
        }
        FitCmd::Vertex {
            common,
            alpha,
            burn_in,
        } => {
            let g = load_graph(&common.graph)?;
            let trace_path = require_trace(&common)?;
            let vs = sio::read_vertex_trace(&trace_path, &g)
                .map_err(|e| Failure::data(format!("{}: {}", trace_path.display(), e)))?;
            let ctx = LikelihoodContext::from_vertex_trace(&g, &vs).map_err(classify)?;
            let fit = fit_mle(&ctx, &FitOptions::default()).map_err(classify)?;
            let inference = if fit.status == FitStatus::Converged {
                Some(inference_at(&ctx, &fit.beta, alpha, burn_in)?)
            } else {
                None
            };
            let report = FitReport::from_fit(&fit, inference.as_ref());
            emit_json(&report, &common.out)?;
            Ok(fit_exit(&fit.status))
        }
        FitCmd::Gw { common } => {
            let g = load_graph(&common.graph)?;
            let trace_path = require_trace(&common)?;
            let tr = sio::read_trace(&trace_path, &g)
                .map_err(|e| Failure::data(format!("{}: {}", trace_path.display(), e)))?;
            let gw = fit_general_weights(&g, &tr, &FitOptions::default()).map_err(classify)?;
            let beta_projected = project_to_beta(&g, &gw.weights, &gw.support).ok();
            let report = WeightsReport {
                weights: gw.weights.clone(),
                support: gw.support.iter().map(|e| e + 1).collect(),
                beta_projected,
            };
            emit_json(&report, &common.out)?;
            Ok(fit_exit(&gw.fit.status))
        }
        FitCmd::Empirical {
            common,
            counts,
            seed_vertex,
        } => {
            let g = load_graph(&common.graph)?;
            let data = load_unordered(&g, &common, &counts, seed_vertex)?;
            let w = empirical_weight_estimate(&g, &data).map_err(classify)?;
            emit_weights(&g, w, &common.out)?;
            Ok(0)
        }
        FitCmd::Fixedpoint {
            common,
            counts,
            seed_vertex,
            iters,
        } => {
            let g = load_graph(&common.graph)?;
            let data = load_unordered(&g, &common, &counts, seed_vertex)?;
            let opts = FixedPointOptions {
                iterations: iters,
                ..Default::default()
            };
            let w = fixed_point_estimate(&g, &data, &opts).map_err(classify)?;
            emit_weights(&g, w, &common.out)?;
            Ok(0)
        }
    }
}

fn load_unordered(
    g: &Graph64,
    common: &FitCommon,
    counts: &Option<PathBuf>,
    seed_vertex: Option<usize>,
) -> Result<UnorderedData, Failure> {
    if let Some(path) = counts {
        let (c, embedded_seed) = sio::read_counts(path, g.m())
            .map_err(|e| Failure::data(format!("{}: {}", path.display(), e)))?;
        let seed = match seed_vertex {
            Some(v) => {
                if v == 0 || v > g.n() {
                    return Err(Failure::data(format!("--seed-vertex {} out of range", v)));
                }
                Some(v - 1)
            }
            None => embedded_seed,
        };
        match seed {
            Some(s) => UnorderedData::from_counts_with_seed(g, c, s).map_err(classify),
            None => Err(Failure::data(
                "counts carry no seed vertex; pass --seed-vertex or use --trace",
            )),
        }
    } else if let Some(path) = &common.trace {
        let tr = sio::read_trace(path, g)
            .map_err(|e| Failure::data(format!("{}: {}", path.display(), e)))?;
        UnorderedData::from_trace(g, &tr).map_err(classify)
    } else {
        Err(Failure::data("pass --counts or --trace"))
    }
}

fn emit_weights(g: &Graph64, w: Vec<f64>, out: &Option<PathBuf>) -> Result<(), Failure> {
    let support: Vec<usize> = (0..g.m()).filter(|&e| w[e] > 0.0).collect();
    let beta_projected = project_to_beta(g, &w, &support).ok();
    let report = WeightsReport {
        weights: w,
        support: support.iter().map(|e| e + 1).collect(),
        beta_projected,
    };
    emit_json(&report, out)
}

fn cmd_check(args: CheckArgs) -> Result<u8, Failure> {
    let g = load_graph(&args.graph)?;
    let tr = sio::read_trace(&args.trace, &g)
        .map_err(|e| Failure::data(format!("{}: {}", args.trace.display(), e)))?;
    let ctx = LikelihoodContext::from_trace(&g, &tr).map_err(classify)?;
    let opts = spreadfit::ExistenceOptions {
        max_pairs: args.max_pairs,
        ..Default::default()
    };
    let outcome = spreadfit::check_mle_existence(&ctx, &opts).map_err(classify)?;
    let (label, direction, code) = match outcome {
        spreadfit::Existence::Exists => ("Exists", None, 0),
        spreadfit::Existence::FlatDirection(v) => ("FlatDirection", Some(v), 0),
        spreadfit::Existence::NotExists(v) => ("NotExists", Some(v), EXIT_ESTIMATE),
    };
    let report = ExistenceReport {
        existence: label.to_string(),
        direction,
    };
    emit_json(&report, &args.out)?;
    Ok(code)
}

fn cmd_experiment(args: ExperimentArgs) -> Result<u8, Failure> {
    let ks: Vec<usize> = args
        .k
        .split(',')
        .map(|f| {
            f.trim()
                .parse::<usize>()
                .map_err(|_| Failure::data(format!("invalid k value {:?}", f)))
        })
        .collect::<Result<_, _>>()?;
    if ks.is_empty() || ks.iter().any(|&k| k < 2) {
        return Err(Failure::data("each k must be at least 2"));
    }
    let methods: Vec<Method> = args
        .methods
        .split(',')
        .map(|s| {
            Method::parse(s.trim()).ok_or_else(|| Failure::data(format!("unknown method {:?}", s)))
        })
        .collect::<Result<_, _>>()?;
    let topology = Topology::parse(&args.topology)
        .ok_or_else(|| Failure::data(format!("unknown topology {:?}", args.topology)))?;
    let cfg = ExperimentConfig {
        topology,
        n: args.n,
        d: args.d,
        ks,
        reps: args.reps,
        master_seed: args.seed,
        covariate_sd: args.covariate_sd,
        beta0: match &args.beta0 {
            Some(spec) => Some(
                spec.split(',')
                    .map(|f| {
                        f.trim()
                            .parse::<f64>()
                            .map_err(|_| Failure::data(format!("invalid beta0 value {:?}", f)))
                    })
                    .collect::<Result<_, _>>()?,
            ),
            None => None,
        },
        alpha: args.alpha,
        trim_threshold: args.trim,
        fp_iterations: args.fp_iters,
        methods,
        jobs: args.jobs,
        timing: if args.timing == "none" {
            Timing::None
        } else {
            Timing::Wall
        },
    };
    if let Some(b) = &cfg.beta0 {
        if b.len() != cfg.fit_dimension() {
            return Err(Failure::data(format!(
                "beta0 has {} entries but the fitted dimension is {}",
                b.len(),
                cfg.fit_dimension()
            )));
        }
    }
    let report = run_experiment(&cfg);
    emit(&report_csv(&report), &args.out)?;
    Ok(0)
}

fn cmd_ingest(args: IngestArgs) -> Result<u8, Failure> {
    let trans = fs::read_to_string(&args.transmissions)
        .map_err(|e| Failure::data(format!("{}: {}", args.transmissions.display(), e)))?;
    let covs = fs::read_to_string(&args.covariates)
        .map_err(|e| Failure::data(format!("{}: {}", args.covariates.display(), e)))?;
    let (g, tr) =
        ingest_transmissions(&trans, &covs, args.log).map_err(|e| Failure::data(e.to_string()))?;
    sio::write_graph(&args.out_graph, &g)
        .map_err(|e| Failure::data(format!("{}: {}", args.out_graph.display(), e)))?;
    sio::write_trace(&args.out_trace, &g, &tr)
        .map_err(|e| Failure::data(format!("{}: {}", args.out_trace.display(), e)))?;
    if let Some(path) = &args.out_counts {
        let counts = spreadfit::counts_from_trace(&g, &tr).map_err(classify)?;
        sio::write_counts(path, &counts.c, Some(tr.seed))
            .map_err(|e| Failure::data(format!("{}: {}", path.display(), e)))?;
    }
    eprintln!(
        "ingested {} regions, {} edges, trace of {} steps",
        g.n(),
        g.m(),
        tr.k()
    );
    Ok(0)
}
