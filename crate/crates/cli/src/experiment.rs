//! Experiment runner: a grid of cells, replicated with derived seeds, written as one table.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use joinest::estimate::{admissibility_cell, mean_se};
use joinest::process::{curve_point, theoretical_error_bound, BoundInputs, MarkovModel, Mixing};
use joinest::rng::derive_seed;
use joinest::{estimate_oj, CostSpec, EstimatorConfig, KChoice, Solver};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliResult, Failure};
use crate::inputs::{load_cost, load_model, load_pair, parse_k, PairSource, RuleContext};

pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"), "-", env!("JOINEST_GIT_REV"));

pub const COLUMNS: [&str; 16] = [
    "experiment", "kind", "cell", "n", "k", "g", "eta", "rep", "seed", "value", "target", "error",
    "bound", "status", "seconds", "version",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    IidRate,
    MarkovRate,
    EtaSweep,
    Curve,
    Admissibility,
    BoundCheck,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::IidRate => "iid_rate",
            Kind::MarkovRate => "markov_rate",
            Kind::EtaSweep => "eta_sweep",
            Kind::Curve => "curve",
            Kind::Admissibility => "admissibility",
            Kind::BoundCheck => "bound_check",
        }
    }
}

fn default_reps() -> usize {
    1
}

fn default_one() -> f64 {
    1.0
}

fn default_eta() -> Vec<f64> {
    vec![0.0]
}

fn default_cost() -> String {
    "hamming".into()
}

/// Experiment description, read from JSON. Relative paths are resolved
/// against the directory of the spec file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub kind: Kind,
    #[serde(default)]
    pub model_x: Option<PathBuf>,
    #[serde(default)]
    pub model_y: Option<PathBuf>,
    #[serde(default)]
    pub data_x: Option<PathBuf>,
    #[serde(default)]
    pub data_y: Option<PathBuf>,
    #[serde(default = "default_cost")]
    pub cost: String,
    #[serde(default)]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    /// Block length: an integer or a rule string as accepted by `--k`.
    #[serde(default)]
    pub k: Option<Value>,
    #[serde(default = "default_eta")]
    pub eta: Vec<f64>,
    /// Largest block length of `curve` experiments.
    #[serde(default)]
    pub k_max: Option<usize>,
    /// Block length of the exact-law target of rate experiments.
    #[serde(default)]
    pub target_k: Option<usize>,
    #[serde(default = "default_one")]
    pub p: f64,
    #[serde(default = "default_one", rename = "C")]
    pub c_const: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Records wall time per row; off by default so that tables are reproducible byte for byte.
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
}

impl ExperimentSpec {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read spec {}: {e}", path.display())))?;
        let mut spec: ExperimentSpec = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut spec.model_x,
            &mut spec.model_y,
            &mut spec.data_x,
            &mut spec.data_y,
            &mut spec.output,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if spec.cost != "hamming" && Path::new(&spec.cost).is_relative() {
            spec.cost = base.join(&spec.cost).to_string_lossy().into_owned();
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.reps == 0 {
            return Err(Failure::usage("reps must be at least 1"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Failure::usage("n_grid must be strictly increasing"));
        }
        if self.eta.is_empty() || self.eta.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
            return Err(Failure::usage("eta must list nonnegative values"));
        }
        let needs_grid = !matches!(self.kind, Kind::Curve | Kind::EtaSweep);
        if needs_grid && self.n_grid.is_empty() {
            return Err(Failure::usage("n_grid must not be empty"));
        }
        if self.kind == Kind::Curve && self.k_max.unwrap_or(0) == 0 {
            return Err(Failure::usage("curve experiments need k_max >= 1"));
        }
        Ok(())
    }

    fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind.name().to_string())
    }
}

/// One output line; `rep` is the replicate index or `mean` / `se` for aggregates.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Row {
    pub experiment: String,
    pub kind: String,
    pub cell: usize,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub g: Option<usize>,
    pub eta: f64,
    pub rep: String,
    pub seed: Option<u64>,
    pub value: Option<f64>,
    pub target: Option<f64>,
    pub error: Option<f64>,
    pub bound: Option<f64>,
    pub status: String,
    pub seconds: Option<f64>,
    pub version: String,
}

impl Row {
    pub fn fields(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        let opt_u = |v: Option<usize>| v.map_or(String::new(), |x| x.to_string());
        vec![
            self.experiment.clone(),
            self.kind.clone(),
            self.cell.to_string(),
            opt_u(self.n),
            opt_u(self.k),
            opt_u(self.g),
            self.eta.to_string(),
            self.rep.clone(),
            self.seed.map_or(String::new(), |s| s.to_string()),
            opt(self.value),
            opt(self.target),
            opt(self.error),
            opt(self.bound),
            self.status.clone(),
            opt(self.seconds),
            self.version.clone(),
        ]
    }
}

/// A grid point; replicates of it differ only in their seed.
#[derive(Clone, Debug)]
struct Cell {
    n: Option<usize>,
    eta: f64,
    /// Fixed block length of curve cells.
    k: Option<usize>,
}

struct Context {
    spec: ExperimentSpec,
    mx: Option<MarkovModel<f64>>,
    my: Option<MarkovModel<f64>>,
    k: Option<KChoice>,
    /// Exact-law targets keyed by the bit pattern of eta.
    targets: BTreeMap<u64, f64>,
}

fn cells(spec: &ExperimentSpec) -> Vec<Cell> {
    match spec.kind {
        Kind::Curve => {
            let mut out = Vec::new();
            for &eta in &spec.eta {
                for k in 1..=spec.k_max.unwrap_or(0) {
                    out.push(Cell { n: None, eta, k: Some(k) });
                }
            }
            out
        }
        Kind::EtaSweep => spec
            .eta
            .iter()
            .map(|&eta| Cell {
                n: spec.n_grid.first().copied(),
                eta,
                k: None,
            })
            .collect(),
        Kind::Admissibility => spec.n_grid.iter().map(|&n| Cell { n: Some(n), eta: 0.0, k: None }).collect(),
        Kind::IidRate | Kind::MarkovRate | Kind::BoundCheck => {
            let mut out = Vec::new();
            for &n in &spec.n_grid {
                for &eta in &spec.eta {
                    out.push(Cell { n: Some(n), eta, k: None });
                }
            }
            out
        }
    }
}

fn value_of(k: &Value) -> CliResult<String> {
    match k {
        Value::Number(n) => Ok(n.to_string()),
        Value::String(s) => Ok(s.clone()),
        _ => Err(Failure::usage("k must be an integer or a rule string")),
    }
}

impl Context {
    fn new(spec: ExperimentSpec) -> CliResult<Self> {
        let mx = spec.model_x.as_ref().map(load_model).transpose()?;
        let my = spec.model_y.as_ref().map(load_model).transpose()?;
        let needs_pair = matches!(
            spec.kind,
            Kind::IidRate | Kind::MarkovRate | Kind::BoundCheck | Kind::Curve
        );
        if needs_pair && (mx.is_none() || my.is_none()) {
            return Err(Failure::usage(format!("{} experiments need model_x and model_y", spec.kind.name())));
        }
        if spec.kind == Kind::Admissibility && mx.is_none() {
            return Err(Failure::usage("admissibility experiments need model_x"));
        }
        let k = match (&spec.k, spec.kind) {
            (_, Kind::Curve) => None,
            (Some(v), _) => {
                let (xs, ys) = (
                    mx.as_ref().map_or(2, |m| m.states()),
                    my.as_ref().or(mx.as_ref()).map_or(2, |m| m.states()),
                );
                let models = match (&mx, &my) {
                    (Some(a), Some(b)) => Some((a, b)),
                    (Some(a), None) => Some((a, a)),
                    _ => None,
                };
                let ctx = RuleContext {
                    x_size: xs,
                    y_size: ys,
                    models,
                };
                Some(parse_k(&value_of(v)?, &ctx)?)
            }
            (None, Kind::IidRate) => Some(KChoice::Fixed(1)),
            (None, _) => return Err(Failure::usage("k is required")),
        };
        let mut ctx = Context {
            spec,
            mx,
            my,
            k,
            targets: BTreeMap::new(),
        };
        ctx.compute_targets()?;
        Ok(ctx)
    }

    fn cost(&self) -> CliResult<CostSpec<f64>> {
        let mx = self.mx.as_ref().expect("model checked");
        let ay = self.my.as_ref().unwrap_or(mx).alphabet();
        load_cost(&self.spec.cost, mx.alphabet(), ay)
    }

    fn compute_targets(&mut self) -> CliResult<()> {
        let target_k = match self.spec.kind {
            Kind::IidRate => self.spec.target_k.unwrap_or(1),
            Kind::MarkovRate | Kind::BoundCheck => self.spec.target_k.unwrap_or(12),
            _ => return Ok(()),
        };
        let c = self.cost()?;
        let (mx, my) = (self.mx.as_ref().unwrap(), self.my.as_ref().unwrap());
        let etas: Vec<f64> = self.spec.eta.clone();
        let values = etas
            .par_iter()
            .map(|&eta| curve_point(mx, my, &c, target_k, eta))
            .collect::<Result<Vec<f64>, _>>()?;
        for (eta, v) in etas.into_iter().zip(values) {
            self.targets.insert(eta.to_bits(), v);
        }
        Ok(())
    }

    fn estimator(&self, k: KChoice, eta: f64) -> EstimatorConfig<f64> {
        let mut cfg = if eta > 0.0 {
            EstimatorConfig::entropic(1, eta)
        } else {
            EstimatorConfig::exact(1)
        };
        cfg.k = k;
        cfg.solver = if eta > 0.0 { Solver::Entropic } else { Solver::Exact };
        if let Some(t) = self.spec.tol {
            cfg.tol = t;
        }
        if let Some(m) = self.spec.max_iter {
            cfg.max_iter = m;
        }
        cfg
    }

    fn run_row(&self, cell_idx: usize, cell: &Cell, rep: usize) -> Row {
        let seed = match self.spec.kind {
            // Every eta of a sweep sees the same pair of paths.
            Kind::EtaSweep => derive_seed(self.spec.seed, &[0, rep as u64]),
            _ => derive_seed(self.spec.seed, &[cell_idx as u64, rep as u64]),
        };
        let mut row = Row {
            experiment: self.spec.label(),
            kind: self.spec.kind.name().to_string(),
            cell: cell_idx,
            n: cell.n,
            k: cell.k,
            eta: cell.eta,
            rep: rep.to_string(),
            seed: Some(seed),
            version: VERSION.to_string(),
            ..Row::default()
        };
        let start = Instant::now();
        match self.compute(cell, seed, &mut row) {
            Ok(()) => row.status = "ok".into(),
            Err(e) => row.status = format!("error: {}", e.message),
        }
        if self.spec.timing {
            row.seconds = Some(start.elapsed().as_secs_f64());
        }
        row
    }

    fn compute(&self, cell: &Cell, seed: u64, row: &mut Row) -> CliResult<()> {
        match self.spec.kind {
            Kind::Curve => {
                row.seed = None;
                let (mx, my) = (self.mx.as_ref().unwrap(), self.my.as_ref().unwrap());
                row.value = Some(curve_point(mx, my, &self.cost()?, cell.k.unwrap(), cell.eta)?);
            }
            Kind::Admissibility => {
                let model = self.mx.as_ref().unwrap();
                let n = cell.n.unwrap();
                let (k, _) = self.k.as_ref().unwrap().resolve(n.max(2))?;
                row.k = Some(k);
                let c = load_cost(&self.spec.cost, model.alphabet(), model.alphabet())?;
                let exact = model.exact_block_law(k)?;
                row.value = Some(admissibility_cell(model, &exact, &c.adapted(), n, seed)?);
            }
            Kind::EtaSweep => {
                let (x, y) = load_pair(&PairSource {
                    x: self.spec.data_x.as_deref(),
                    y: self.spec.data_y.as_deref(),
                    model_x: self.mx.as_ref(),
                    model_y: self.my.as_ref(),
                    n: cell.n,
                    seed,
                    alphabets: None,
                })?;
                if self.spec.data_x.is_some() {
                    row.seed = None;
                }
                row.n = Some(x.len().min(y.len()));
                let c = load_cost(&self.spec.cost, x.alphabet(), y.alphabet())?;
                let k = self.k.clone().unwrap();
                let r = estimate_oj(&x, &y, &c, &self.estimator(k.clone(), cell.eta))?;
                let exact = if cell.eta == 0.0 {
                    r.cost_estimate
                } else {
                    estimate_oj(&x, &y, &c, &self.estimator(k, 0.0))?.cost_estimate
                };
                row.k = Some(r.k_used);
                row.value = Some(r.cost_estimate);
                row.target = Some(exact);
                row.error = Some((r.cost_estimate - exact).abs());
            }
            Kind::IidRate | Kind::MarkovRate | Kind::BoundCheck => {
                let (mx, my) = (self.mx.as_ref().unwrap(), self.my.as_ref().unwrap());
                let (x, y) = load_pair(&PairSource {
                    x: None,
                    y: None,
                    model_x: Some(mx),
                    model_y: Some(my),
                    n: cell.n,
                    seed,
                    alphabets: None,
                })?;
                let c = load_cost(&self.spec.cost, x.alphabet(), y.alphabet())?;
                let r = estimate_oj(&x, &y, &c, &self.estimator(self.k.clone().unwrap(), cell.eta))?;
                let target = self.targets[&cell.eta.to_bits()];
                row.k = Some(r.k_used);
                row.g = Some(r.g_used);
                row.value = Some(r.cost_estimate);
                row.target = Some(target);
                row.error = Some((r.cost_estimate - target).abs());
                if self.spec.kind == Kind::BoundCheck {
                    let b = theoretical_error_bound(&BoundInputs {
                        phi_x: Mixing::Markov(mx.clone()),
                        phi_y: Mixing::Markov(my.clone()),
                        k: r.k_used,
                        g: r.g_used,
                        n: cell.n.unwrap(),
                        p: self.spec.p,
                        c: self.spec.c_const,
                        sup_cost: c.sup_norm(),
                        x_size: mx.states(),
                        y_size: my.states(),
                        eta: cell.eta,
                    })?;
                    row.bound = Some(b.value);
                }
            }
        }
        Ok(())
    }
}

fn aggregate(rows: &[Row]) -> Vec<Row> {
    let ok: Vec<&Row> = rows.iter().filter(|r| r.status == "ok").collect();
    let first = &rows[0];
    let values: Vec<f64> = ok.iter().filter_map(|r| r.value).collect();
    let errors: Vec<f64> = ok.iter().filter_map(|r| r.error).collect();
    let stat = |v: &[f64]| (!v.is_empty()).then(|| mean_se(v));
    let (vs, es) = (stat(&values), stat(&errors));
    let bound = ok.iter().find_map(|r| r.bound);
    let status = if ok.is_empty() { "no data" } else { "ok" };
    let base = Row {
        experiment: first.experiment.clone(),
        kind: first.kind.clone(),
        cell: first.cell,
        n: first.n,
        // Scheduled k and g depend only on n, so they agree across replicates.
        k: ok.first().and_then(|r| r.k),
        g: ok.first().and_then(|r| r.g),
        eta: first.eta,
        target: ok.first().and_then(|r| r.target),
        bound,
        status: status.into(),
        version: first.version.clone(),
        ..Row::default()
    };
    vec![
        Row {
            rep: "mean".into(),
            value: vs.map(|s| s.0),
            error: es.map(|s| s.0),
            ..base.clone()
        },
        Row {
            rep: "se".into(),
            value: vs.map(|s| s.1),
            error: es.map(|s| s.1),
            ..base
        },
    ]
}

/// Output of [`run_experiment`]: replicate rows followed by aggregates for each cell.
pub struct Table {
    pub rows: Vec<Row>,
    /// True when every replicate row failed.
    pub all_failed: bool,
}

/// Runs the experiment, optionally restricted to one `(cell, rep)` pair.
pub fn run_experiment(spec: ExperimentSpec, only: Option<(usize, usize)>) -> CliResult<Table> {
    spec.validate()?;
    let grid = cells(&spec);
    let reps = match spec.kind {
        Kind::Curve => 1,
        _ => spec.reps,
    };
    if let Some((c, r)) = only {
        if c >= grid.len() || r >= reps {
            return Err(Failure::usage(format!(
                "cell {c} / rep {r} outside the grid ({} cells, {reps} reps)",
                grid.len()
            )));
        }
    }
    let ctx = Context::new(spec)?;
    let jobs: Vec<(usize, usize)> = match only {
        Some(p) => vec![p],
        None => (0..grid.len()).flat_map(|c| (0..reps).map(move |r| (c, r))).collect(),
    };
    let done: Vec<Row> = jobs
        .par_iter()
        .map(|&(c, r)| ctx.run_row(c, &grid[c], r))
        .collect();
    let all_failed = done.iter().all(|r| r.status != "ok");
    if only.is_some() {
        return Ok(Table { rows: done, all_failed });
    }
    let mut rows = Vec::with_capacity(done.len() + 2 * grid.len());
    for chunk in done.chunks(reps) {
        rows.extend_from_slice(chunk);
        if ctx.spec.kind != Kind::Curve {
            rows.extend(aggregate(chunk));
        }
    }
    Ok(Table { rows, all_failed })
}

pub fn write_csv<W: std::io::Write>(table: &Table, out: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in &table.rows {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: std::io::Write>(table: &Table, mut out: W) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut out, &table.rows)?;
    writeln!(out)?;
    Ok(())
}
