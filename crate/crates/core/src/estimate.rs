//! End-to-end estimators of optimal joining costs from two sample paths.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::cost::CostSpec;
use crate::error::{Error, Result};
use crate::joining::BlockJoining;
use crate::measure::{empirical_block_measure, BlockMeasure};
use crate::ot::{solve_entropic_ot, solve_ot, OtConfig, SinkhornConfig, SinkhornStatus};
use crate::process::MarkovModel;
use crate::rng::{derive_seed, stream};
use crate::scalar::Real;
use crate::schedule::{k_schedule, ScheduleRule};
use crate::sequence::SymbolSequence;

/// Block length: fixed, or chosen from the sample size by a schedule.
#[derive(Clone, Debug, PartialEq)]
pub enum KChoice {
    Fixed(usize),
    Rule(ScheduleRule),
}

impl KChoice {
    /// `(k, g)` for a sample of length `n`; a fixed `k` carries no gap.
    pub fn resolve(&self, n: usize) -> Result<(usize, usize)> {
        match self {
            KChoice::Fixed(0) => Err(Error::ZeroBlockLength),
            KChoice::Fixed(k) => Ok((*k, 0)),
            KChoice::Rule(r) => {
                let s = k_schedule(n, r)?;
                Ok((s.k, s.g))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Solver {
    Exact,
    Entropic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorConfig<T> {
    pub k: KChoice,
    pub eta: T,
    /// Overrides the schedule's gap; reported in diagnostics only.
    pub gap_g: Option<usize>,
    pub solver: Solver,
    pub tol: T,
    pub max_iter: usize,
    pub rng_seed: u64,
    pub ot: OtConfig,
}

impl<T: Real> EstimatorConfig<T> {
    /// Exact estimator with block length `k`.
    pub fn exact(k: usize) -> Self {
        EstimatorConfig {
            k: KChoice::Fixed(k),
            eta: T::zero(),
            gap_g: None,
            solver: Solver::Exact,
            tol: T::of(1e-9),
            max_iter: 100_000,
            rng_seed: 0,
            ot: OtConfig::default(),
        }
    }

    /// Entropic estimator with block length `k` and regularisation `eta > 0`.
    pub fn entropic(k: usize, eta: T) -> Self {
        EstimatorConfig {
            eta,
            solver: Solver::Entropic,
            ..Self::exact(k)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= T::zero()) || !self.eta.is_finite() {
            return Err(Error::InvalidParameter(format!("eta = {} must be nonnegative", self.eta)));
        }
        match self.solver {
            Solver::Exact if self.eta > T::zero() => Err(Error::InvalidParameter(
                "the exact solver needs eta = 0".into(),
            )),
            Solver::Entropic if self.eta == T::zero() => Err(Error::InvalidParameter(
                "eta = 0 requires the exact solver".into(),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateResult<T> {
    /// `T(mu_k, nu_k) / k`, or its entropic counterpart.
    pub cost_estimate: T,
    pub joining: BlockJoining<T>,
    pub k_used: usize,
    pub g_used: usize,
    pub n_x: usize,
    pub n_y: usize,
    pub diagnostics: BTreeMap<String, Value>,
}

impl<T: Real> EstimateResult<T> {
    /// JSON summary; the joining export is included on request.
    pub fn to_json(&self, with_joining: bool) -> Value {
        let mut v = json!({
            "cost_estimate": self.cost_estimate.to_f64_lossy(),
            "k_used": self.k_used,
            "g_used": self.g_used,
            "n_x": self.n_x,
            "n_y": self.n_y,
            "eta": self.joining.eta().to_f64_lossy(),
            "diagnostics": self.diagnostics,
        });
        if with_joining {
            let j: Value = serde_json::from_str(&self.joining.to_json()).expect("joining JSON parses");
            v["joining"] = j;
        }
        v
    }
}

/// Optimal-joining cost estimate from two sample paths.
///
/// Couples the empirical `k`-block laws optimally (or entropically) under the
/// coordinate-wise cost and returns the per-symbol value together with the
/// stationary joining built from the coupling.
pub fn estimate_oj<T: Real>(
    x: &SymbolSequence,
    y: &SymbolSequence,
    c: &CostSpec<T>,
    cfg: &EstimatorConfig<T>,
) -> Result<EstimateResult<T>> {
    cfg.validate()?;
    if x.alphabet() != c.x_alphabet() || y.alphabet() != c.y_alphabet() {
        return Err(Error::AlphabetMismatch);
    }
    let (n_x, n_y) = (x.len(), y.len());
    let n = n_x.min(n_y);
    let (k, g) = cfg.k.resolve(n.max(2))?;
    if k > n {
        return Err(Error::KExceedsLength { k, n });
    }
    let g = cfg.gap_g.unwrap_or(g);
    let mu = empirical_block_measure::<T>(x, k)?;
    let nu = empirical_block_measure::<T>(y, k)?;
    let kt = T::of_usize(k);
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("support_x".to_string(), json!(mu.len()));
    diagnostics.insert("support_y".to_string(), json!(nu.len()));
    diagnostics.insert("gap_g".to_string(), json!(g));
    let (plan, value) = match cfg.solver {
        Solver::Exact => {
            let plan = solve_ot(&mu, &nu, c, &cfg.ot)?;
            if let Some(gap) = plan.dual_gap() {
                diagnostics.insert("dual_gap".to_string(), json!(gap.to_f64_lossy()));
            }
            let v = plan.cost_value();
            (plan, v)
        }
        Solver::Entropic => {
            let sc = SinkhornConfig {
                eta: cfg.eta,
                tol: cfg.tol,
                max_iter: cfg.max_iter,
                init_g: None,
                ot: cfg.ot,
            };
            let ep = solve_entropic_ot(&mu, &nu, c, &sc)?;
            if ep.status != SinkhornStatus::Converged {
                return Err(Error::NotConverged {
                    iterations: ep.iterations,
                    violation: ep.marginal_violation.to_f64_lossy(),
                });
            }
            diagnostics.insert("sinkhorn_status".to_string(), json!("converged"));
            diagnostics.insert("iterations".to_string(), json!(ep.iterations));
            diagnostics.insert(
                "marginal_violation".to_string(),
                json!(ep.marginal_violation.to_f64_lossy()),
            );
            (ep.plan, ep.regularized_value)
        }
    };
    let joining = BlockJoining::new(plan, cfg.eta, None)?;
    Ok(EstimateResult {
        cost_estimate: value / kt,
        joining,
        k_used: k,
        g_used: g,
        n_x,
        n_y,
        diagnostics,
    })
}

/// Geometric-mixing schedule with `rho` taken from the slower of two chains.
pub fn geometric_rule_for_models<T: Real>(
    alpha: f64,
    mx: &MarkovModel<T>,
    my: &MarkovModel<T>,
) -> ScheduleRule {
    let rho = mx
        .second_eigenvalue_modulus()
        .max(my.second_eigenvalue_modulus())
        .to_f64_lossy();
    ScheduleRule::GeometricMixing {
        alpha,
        rho: rho.min(1.0 - 1e-12),
        x_size: mx.states(),
        y_size: my.states(),
    }
}

/// One row of an admissibility table.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibilityRow {
    pub n: usize,
    pub k: usize,
    /// Mean over replicates of `T_{c_X,k}(empirical, exact) / k`.
    pub mean: f64,
    pub std_err: f64,
    pub values: Vec<f64>,
}

/// `T_{c_X,k}(empirical, exact) / k` for one path of length `n` drawn from
/// `model` with the stream derived from `cell_seed`.
pub fn admissibility_cell<T: Real>(
    model: &MarkovModel<T>,
    exact: &BlockMeasure<T>,
    adapted: &CostSpec<T>,
    n: usize,
    cell_seed: u64,
) -> Result<f64> {
    let k = exact.k();
    if k > n {
        return Err(Error::KExceedsLength { k, n });
    }
    let seq = model.sample(n, &mut stream(cell_seed, &[0]))?;
    let emp = empirical_block_measure::<T>(&seq, k)?;
    let plan = solve_ot(&emp, exact, adapted, &OtConfig::default())?;
    Ok(plan.cost_value().to_f64_lossy() / k as f64)
}

/// Adapted-cost transport distance between empirical and exact block laws,
/// averaged over sample paths drawn from `model`.
///
/// Replicate `r` of grid cell `i` uses the seed `derive_seed(rng_seed, [i, r])`,
/// so the table does not depend on scheduling.
pub fn admissibility_diagnostic<T: Real>(
    model: &MarkovModel<T>,
    cost: &CostSpec<T>,
    k: &KChoice,
    n_grid: &[usize],
    reps: usize,
    rng_seed: u64,
) -> Result<Vec<AdmissibilityRow>> {
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be positive".into()));
    }
    if cost.x_alphabet() != model.alphabet() {
        return Err(Error::AlphabetMismatch);
    }
    let adapted = cost.adapted();
    let mut rows = Vec::with_capacity(n_grid.len());
    for (cell, &n) in n_grid.iter().enumerate() {
        let (kk, _) = k.resolve(n.max(2))?;
        if kk > n {
            return Err(Error::KExceedsLength { k: kk, n });
        }
        let exact = model.exact_block_law(kk)?;
        let values = (0..reps)
            .into_par_iter()
            .map(|r| {
                let seed = derive_seed(rng_seed, &[cell as u64, r as u64]);
                admissibility_cell(model, &exact, &adapted, n, seed)
            })
            .collect::<Result<Vec<f64>>>()?;
        let (mean, std_err) = mean_se(&values);
        rows.push(AdmissibilityRow {
            n,
            k: kk,
            mean,
            std_err,
            values,
        });
    }
    Ok(rows)
}

/// Sample mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
