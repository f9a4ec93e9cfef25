//! Argument definitions and subcommand dispatch.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use joinest::process::{
    dbar_estimate, k_step_cost_curve, theoretical_error_bound, BoundInputs, BoundStatus, MarkovModel, Mixing,
};
use joinest::{estimate_oj, CostSpec, EstimatorConfig, Solver};
use serde_json::json;

use crate::error::{CliResult, Failure};
use crate::experiment::{run_experiment, write_csv, write_json, ExperimentSpec};
use crate::inputs::{load_cost, load_model, load_pair, parse_k, sample_side, PairSource, RuleContext};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

/// Estimate optimal joining costs between stationary processes from sample paths.
///
/// Options can also be read from a JSON object with `--config FILE`; keys are
/// flag names and explicit flags take precedence. The thread pool size is read
/// from JOINEST_THREADS.
#[derive(Debug, Parser)]
#[command(name = "joinest", version, args_override_self = true)]
pub struct Cli {
    /// Base seed for every random stream [default: 0, or the experiment spec's seed].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output format on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the (entropic) optimal joining cost from two sequences.
    Estimate(EstimateArgs),
    /// Block estimate of the d-bar distance (Hamming cost, exact solver).
    Dbar(DbarArgs),
    /// Draw a sample path from a Markov model.
    Sample(SampleArgs),
    /// Per-symbol block transport costs between exact laws of two models.
    Curve(CurveArgs),
    /// Evaluate the theoretical error bound of the block estimator.
    Bound(BoundArgs),
    /// Run an experiment described by a JSON spec and write its table.
    Experiment(ExperimentArgs),
    /// Estimate and write the joining built from the optimal block coupling.
    ExportJoining(ExportArgs),
}

#[derive(Debug, Args)]
pub struct PairArgs {
    /// Whitespace-separated token file for X.
    #[arg(long)]
    pub x: Option<PathBuf>,
    /// Whitespace-separated token file for Y.
    #[arg(long)]
    pub y: Option<PathBuf>,
    /// Sample X from this model (stream 0 of --seed) instead of reading --x.
    #[arg(long)]
    pub model_x: Option<PathBuf>,
    /// Sample Y from this model (stream 1 of --seed) instead of reading --y.
    #[arg(long)]
    pub model_y: Option<PathBuf>,
    /// Path length when sampling from models.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    /// `hamming` or a cost JSON file {x_tokens, y_tokens, matrix}.
    #[arg(long, default_value = "hamming")]
    pub cost: String,
    /// Block length: an integer, `geometric:alpha=A[,rho=R]`, `polynomial:p=P`
    /// or `entropy:eps=E[,hx=H,hy=H]`.
    #[arg(long)]
    pub k: String,
    /// Entropic regularisation; 0 selects the exact solver.
    #[arg(long, default_value_t = 0.0)]
    pub eta: f64,
    /// Gap length reported in diagnostics, overriding the schedule's.
    #[arg(long)]
    pub gap_g: Option<usize>,
    /// Sinkhorn tolerance on the L1 marginal violation.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Sinkhorn iteration limit.
    #[arg(long, default_value_t = 100_000)]
    pub max_iter: usize,
    /// Write the result JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Include the joining export in the result JSON.
    #[arg(long)]
    pub with_joining: bool,
}

#[derive(Debug, Args)]
pub struct DbarArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    /// Block length.
    #[arg(long)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Model JSON {tokens, transition, stationary?}.
    #[arg(long)]
    pub model: PathBuf,
    /// Path length.
    #[arg(long)]
    pub n: usize,
    /// Stream index under --seed; `estimate` samples X from 0 and Y from 1.
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
    /// Write the sequence here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long)]
    pub model_x: PathBuf,
    #[arg(long)]
    pub model_y: PathBuf,
    /// `hamming` or a cost JSON file.
    #[arg(long, default_value = "hamming")]
    pub cost: String,
    /// Largest block length.
    #[arg(long)]
    pub k_max: usize,
    /// Entropic regularisation; 0 for exact transport.
    #[arg(long, default_value_t = 0.0)]
    pub eta: f64,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// Model giving the mixing coefficients of X (and of Y unless --phi-model-y is set).
    #[arg(long)]
    pub phi_model: Option<PathBuf>,
    /// Model giving the mixing coefficients of Y.
    #[arg(long)]
    pub phi_model_y: Option<PathBuf>,
    /// Treat both processes as i.i.d. (no mixing penalty beyond lag 0).
    #[arg(long, conflicts_with_all = ["phi_model", "phi_model_y"])]
    pub iid: bool,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub g: usize,
    #[arg(long)]
    pub n: usize,
    /// Mixing exponent in [1, 2).
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Constant of the concentration term.
    #[arg(long = "C", default_value_t = 1.0)]
    pub c: f64,
    /// Sup norm of the cost.
    #[arg(long, default_value_t = 1.0)]
    pub sup_cost: f64,
    /// Entropic regularisation.
    #[arg(long, default_value_t = 0.0)]
    pub eta: f64,
    /// |X|; defaults to the model's alphabet size.
    #[arg(long)]
    pub x_size: Option<usize>,
    /// |Y|; defaults to the model's alphabet size.
    #[arg(long)]
    pub y_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment spec JSON.
    #[arg(long)]
    pub spec: PathBuf,
    /// Output table; overrides the spec's `output`, stdout when neither is set.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Recompute a single grid cell (requires --rep).
    #[arg(long, requires = "rep")]
    pub cell: Option<usize>,
    /// Replicate index of --cell.
    #[arg(long, requires = "cell")]
    pub rep: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub estimate: EstimateArgs,
}

fn emit(text: &str, out: Option<&PathBuf>) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut s = std::io::stdout().lock();
            s.write_all(text.as_bytes())?;
            s.flush()?;
        }
    }
    Ok(())
}

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

struct Loaded {
    x: joinest::SymbolSequence,
    y: joinest::SymbolSequence,
    cost: CostSpec<f64>,
    mx: Option<MarkovModel<f64>>,
    my: Option<MarkovModel<f64>>,
}

fn load_inputs(pair: &PairArgs, cost: &str, seed: u64) -> CliResult<Loaded> {
    let mx = pair.model_x.as_ref().map(load_model).transpose()?;
    let my = pair.model_y.as_ref().map(load_model).transpose()?;
    let file_cost = (cost != "hamming").then(|| CostSpec::<f64>::from_file(cost)).transpose()?;
    let (x, y) = load_pair(&PairSource {
        x: pair.x.as_deref(),
        y: pair.y.as_deref(),
        model_x: mx.as_ref(),
        model_y: my.as_ref(),
        n: pair.n,
        seed,
        alphabets: file_cost.as_ref().map(|c| (c.x_alphabet(), c.y_alphabet())),
    })?;
    let cost = load_cost(cost, x.alphabet(), y.alphabet())?;
    Ok(Loaded { x, y, cost, mx, my })
}

fn run_estimate(a: &EstimateArgs, seed: u64) -> CliResult<joinest::Estimate> {
    let l = load_inputs(&a.pair, &a.cost, seed)?;
    let ctx = RuleContext {
        x_size: l.x.alphabet().len(),
        y_size: l.y.alphabet().len(),
        models: l.mx.as_ref().zip(l.my.as_ref()),
    };
    let mut cfg = if a.eta > 0.0 {
        EstimatorConfig::entropic(1, a.eta)
    } else {
        EstimatorConfig::exact(1)
    };
    cfg.k = parse_k(&a.k, &ctx)?;
    cfg.solver = if a.eta > 0.0 { Solver::Entropic } else { Solver::Exact };
    cfg.eta = a.eta;
    cfg.gap_g = a.gap_g;
    cfg.tol = a.tol;
    cfg.max_iter = a.max_iter;
    cfg.rng_seed = seed;
    Ok(estimate_oj(&l.x, &l.y, &l.cost, &cfg)?)
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serializes");
    s.push('\n');
    s
}

pub fn dispatch(cli: Cli) -> CliResult<()> {
    let seed = cli.seed.unwrap_or(0);
    let format = cli.format;
    match cli.command {
        Command::Estimate(a) => {
            let r = run_estimate(&a, seed)?;
            let doc = r.to_json(a.with_joining);
            if let Some(p) = &a.out {
                std::fs::write(p, pretty(&doc))?;
            }
            match format {
                Format::Text => emit(&format!("{}\n", fmt_f64(r.cost_estimate)), None),
                Format::Json => emit(&pretty(&doc), None),
                Format::Csv => emit(
                    &format!(
                        "cost_estimate,k_used,g_used,n_x,n_y,eta\n{},{},{},{},{},{}\n",
                        fmt_f64(r.cost_estimate),
                        r.k_used,
                        r.g_used,
                        r.n_x,
                        r.n_y,
                        a.eta
                    ),
                    None,
                ),
            }
        }
        Command::ExportJoining(a) => {
            let r = run_estimate(&a.estimate, seed)?;
            let text = format!("{}\n", r.joining.to_json());
            match &a.estimate.out {
                Some(p) => std::fs::write(p, &text)?,
                None => emit(&text, None)?,
            }
            Ok(())
        }
        Command::Dbar(a) => {
            let l = load_inputs(&a.pair, "hamming", seed)?;
            let v = dbar_estimate::<f64>(&l.x, &l.y, a.k)?;
            match format {
                Format::Text => emit(&format!("{}\n", fmt_f64(v)), None),
                Format::Json => emit(&pretty(&json!({ "dbar": v, "k": a.k })), None),
                Format::Csv => emit(&format!("k,dbar\n{},{}\n", a.k, fmt_f64(v)), None),
            }
        }
        Command::Sample(a) => {
            let m = load_model(&a.model)?;
            if a.n == 0 {
                return Err(Failure::usage("n must be at least 1"));
            }
            let s = sample_side(&m, a.n, seed, a.stream)?;
            emit(&s.to_text(), a.out.as_ref())
        }
        Command::Curve(a) => {
            let mx = load_model(&a.model_x)?;
            let my = load_model(&a.model_y)?;
            let c = load_cost(&a.cost, mx.alphabet(), my.alphabet())?;
            let curve = k_step_cost_curve(&mx, &my, &c, a.k_max, a.eta)?;
            let text = match format {
                Format::Json => pretty(&json!(curve
                    .iter()
                    .map(|&(k, v)| json!({ "k": k, "value": v }))
                    .collect::<Vec<_>>())),
                Format::Csv => {
                    let mut s = String::from("k,value\n");
                    for (k, v) in &curve {
                        s.push_str(&format!("{k},{v}\n"));
                    }
                    s
                }
                Format::Text => curve.iter().map(|(k, v)| format!("{k} {}\n", fmt_f64(*v))).collect(),
            };
            emit(&text, None)
        }
        Command::Bound(a) => {
            let (phi_x, phi_y, xs, ys) = if a.iid {
                (Mixing::Iid, Mixing::Iid, a.x_size, a.y_size)
            } else {
                let mx = load_model(
                    a.phi_model
                        .as_ref()
                        .ok_or_else(|| Failure::usage("give --phi-model or --iid"))?,
                )?;
                let my = match &a.phi_model_y {
                    Some(p) => load_model(p)?,
                    None => mx.clone(),
                };
                let (sx, sy) = (mx.states(), my.states());
                (
                    Mixing::Markov(mx),
                    Mixing::Markov(my),
                    Some(a.x_size.unwrap_or(sx)),
                    Some(a.y_size.unwrap_or(sy)),
                )
            };
            let size = |v: Option<usize>, name: &str| {
                v.ok_or_else(|| Failure::usage(format!("--{name} is required with --iid")))
            };
            let b = theoretical_error_bound(&BoundInputs {
                phi_x,
                phi_y,
                k: a.k,
                g: a.g,
                n: a.n,
                p: a.p,
                c: a.c,
                sup_cost: a.sup_cost,
                x_size: size(xs, "x-size")?,
                y_size: size(ys, "y-size")?,
                eta: a.eta,
            })?;
            let vacuous = b.status == BoundStatus::Vacuous;
            match format {
                Format::Text if vacuous => emit("vacuous\n", None),
                Format::Text => emit(&format!("{}\n", fmt_f64(b.value)), None),
                Format::Json => emit(
                    &pretty(&json!({
                        "bound": if vacuous { None } else { Some(b.value) },
                        "status": if vacuous { "vacuous" } else { "finite" },
                        "u": b.u,
                        "v": b.v,
                    })),
                    None,
                ),
                Format::Csv => emit(
                    &format!(
                        "bound,status\n{},{}\n",
                        if vacuous { String::new() } else { fmt_f64(b.value) },
                        if vacuous { "vacuous" } else { "finite" }
                    ),
                    None,
                ),
            }
        }
        Command::Experiment(a) => {
            let mut spec = ExperimentSpec::from_file(&a.spec)?;
            if let Some(s) = cli.seed {
                spec.seed = s;
            }
            let out = a.out.clone().or_else(|| spec.output.clone());
            let only = a.cell.zip(a.rep);
            let table = run_experiment(spec, only)?;
            let mut buf = Vec::new();
            match format {
                Format::Json => write_json(&table, &mut buf)?,
                _ => write_csv(&table, &mut buf)?,
            }
            match &out {
                Some(p) => std::fs::write(p, &buf)?,
                None => emit(&String::from_utf8_lossy(&buf), None)?,
            }
            if table.all_failed {
                let first = table.rows.first().map_or("", |r| r.status.as_str());
                return Err(Failure::compute(format!("every cell failed ({first})")));
            }
            Ok(())
        }
    }
}
