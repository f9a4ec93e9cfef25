//! Parsing of costs, block-length rules, models and sequences given on the command line.

use std::path::Path;

use joinest::estimate::geometric_rule_for_models;
use joinest::process::MarkovModel;
use joinest::rng::stream;
use joinest::{read_sequence, Alphabet, CostSpec, KChoice, ScheduleRule, SymbolSequence};

use crate::error::{CliResult, Failure};

/// `hamming` or a path to a cost JSON file.
pub fn load_cost(spec: &str, x: &Alphabet, y: &Alphabet) -> CliResult<CostSpec<f64>> {
    if spec == "hamming" {
        return Ok(CostSpec::hamming_between(x, y));
    }
    let c = CostSpec::from_file(spec)?;
    Ok(c.restrict(x, y)?)
}

pub fn load_model(path: impl AsRef<Path>) -> CliResult<MarkovModel<f64>> {
    let path = path.as_ref();
    MarkovModel::from_file(path)
        .map_err(|e| Failure::usage(format!("model {}: {e}", path.display())))
}

fn parse_params(body: &str) -> CliResult<Vec<(String, f64)>> {
    body.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (key, value) = p
                .split_once('=')
                .ok_or_else(|| Failure::usage(format!("expected key=value in rule, got {p:?}")))?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| Failure::usage(format!("rule parameter {key} is not a number")))?;
            Ok((key.trim().to_string(), v))
        })
        .collect()
}

/// Context available when a block-length rule needs process information.
pub struct RuleContext<'a> {
    pub x_size: usize,
    pub y_size: usize,
    pub models: Option<(&'a MarkovModel<f64>, &'a MarkovModel<f64>)>,
}

/// Parses `--k`: an integer, `geometric:alpha=A[,rho=R]`, `polynomial:p=P` or
/// `entropy:eps=E[,hx=H,hy=H]`. Missing `rho`, `hx` and `hy` are taken from the
/// models when available.
pub fn parse_k(spec: &str, ctx: &RuleContext<'_>) -> CliResult<KChoice> {
    if let Ok(k) = spec.trim().parse::<usize>() {
        if k == 0 {
            return Err(Failure::usage("k must be at least 1"));
        }
        return Ok(KChoice::Fixed(k));
    }
    let (name, body) = spec.split_once(':').unwrap_or((spec, ""));
    let params = parse_params(body)?;
    let get = |key: &str| params.iter().find(|(k, _)| k == key).map(|&(_, v)| v);
    let known: &[&str] = match name {
        "geometric" => &["alpha", "rho"],
        "polynomial" => &["p"],
        "entropy" => &["eps", "hx", "hy"],
        _ => return Err(Failure::usage(format!("unknown block-length rule {name:?}"))),
    };
    if let Some((k, _)) = params.iter().find(|(k, _)| !known.contains(&k.as_str())) {
        return Err(Failure::usage(format!("unknown parameter {k:?} for rule {name}")));
    }
    let need = |key: &str| get(key).ok_or_else(|| Failure::usage(format!("rule {name} needs {key}")));
    let rule = match name {
        "geometric" => {
            let alpha = need("alpha")?;
            match (get("rho"), ctx.models) {
                (Some(rho), _) => ScheduleRule::GeometricMixing {
                    alpha,
                    rho,
                    x_size: ctx.x_size,
                    y_size: ctx.y_size,
                },
                (None, Some((mx, my))) => geometric_rule_for_models(alpha, mx, my),
                (None, None) => return Err(Failure::usage("rule geometric needs rho without models")),
            }
        }
        "polynomial" => ScheduleRule::PolynomialMixing {
            p: need("p")?,
            x_size: ctx.x_size,
            y_size: ctx.y_size,
        },
        _ => {
            let (hx, hy) = match (get("hx"), get("hy"), ctx.models) {
                (Some(a), Some(b), _) => (a, b),
                (None, None, Some((mx, my))) => (mx.entropy_rate(), my.entropy_rate()),
                _ => return Err(Failure::usage("rule entropy needs hx and hy without models")),
            };
            ScheduleRule::EntropyRate {
                h_x: hx,
                h_y: hy,
                eps: need("eps")?,
            }
        }
    };
    Ok(KChoice::Rule(rule))
}

/// A pair of paths, read from files or sampled from models.
pub struct PairSource<'a> {
    pub x: Option<&'a Path>,
    pub y: Option<&'a Path>,
    pub model_x: Option<&'a MarkovModel<f64>>,
    pub model_y: Option<&'a MarkovModel<f64>>,
    pub n: Option<usize>,
    pub seed: u64,
    /// Cost file whose alphabets fix the symbol sets, if any.
    pub alphabets: Option<(&'a Alphabet, &'a Alphabet)>,
}

/// Path `side` (0 for X, 1 for Y) drawn from `model` with the stream of `seed`.
pub fn sample_side(model: &MarkovModel<f64>, n: usize, seed: u64, side: u64) -> CliResult<SymbolSequence> {
    Ok(model.sample(n, &mut stream(seed, &[side]))?)
}

pub fn load_pair(src: &PairSource<'_>) -> CliResult<(SymbolSequence, SymbolSequence)> {
    let side = |file: Option<&Path>, model: Option<&MarkovModel<f64>>, alpha: Option<&Alphabet>, idx: u64, name: &str| {
        match (file, model) {
            (Some(f), None) => Ok(read_sequence(f, alpha)?),
            (None, Some(m)) => {
                let n = src
                    .n
                    .ok_or_else(|| Failure::usage(format!("--n is required when sampling {name}")))?;
                sample_side(m, n, src.seed, idx)
            }
            (Some(_), Some(_)) => Err(Failure::usage(format!("give either --{name} or --model-{name}, not both"))),
            (None, None) => Err(Failure::usage(format!("missing --{name} or --model-{name}"))),
        }
    };
    let (ax, ay) = src.alphabets.map_or((None, None), |(a, b)| (Some(a), Some(b)));
    Ok((
        side(src.x, src.model_x, ax, 0, "x")?,
        side(src.y, src.model_y, ay, 1, "y")?,
    ))
}
