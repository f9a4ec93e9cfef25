use crate::error::{Error, Result};
use crate::process::MarkovModel;

/// Source of the mixing coefficients `phi(g)` of one process.
#[derive(Clone, Debug, PartialEq)]
pub enum Mixing {
    /// `phi(0) = 1` and `phi(g) = 0` afterwards.
    Iid,
    /// Exact coefficients of a Markov chain.
    Markov(MarkovModel<f64>),
    /// `min(1, c rho^g)` for `g >= 1`.
    Geometric { c: f64, rho: f64 },
}

impl Mixing {
    pub fn phi(&self, g: usize) -> f64 {
        if g == 0 {
            return 1.0;
        }
        match self {
            Mixing::Iid => 0.0,
            Mixing::Markov(m) => m.phi_mixing(g),
            Mixing::Geometric { c, rho } => (c * rho.powi(g as i32)).min(1.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundInputs {
    pub phi_x: Mixing,
    pub phi_y: Mixing,
    pub k: usize,
    pub g: usize,
    pub n: usize,
    pub p: f64,
    /// Unspecified constant of the concentration term; 1 is the customary default.
    pub c: f64,
    pub sup_cost: f64,
    pub x_size: usize,
    pub y_size: usize,
    pub eta: f64,
}

impl BoundInputs {
    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::ZeroBlockLength);
        }
        if self.n < self.k {
            return Err(Error::KExceedsLength { k: self.k, n: self.n });
        }
        if !(1.0..2.0).contains(&self.p) {
            return Err(Error::InvalidParameter(format!("p = {} outside [1, 2)", self.p)));
        }
        if !(self.c > 0.0) || !(self.sup_cost >= 0.0) || !(self.eta >= 0.0) {
            return Err(Error::InvalidParameter("C > 0, sup cost >= 0 and eta >= 0 are required".into()));
        }
        if self.x_size == 0 || self.y_size == 0 {
            return Err(Error::EmptyAlphabet);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundStatus {
    Finite,
    /// A concentration term reached 1, so the entropic bound says nothing.
    Vacuous,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundValue {
    pub value: f64,
    pub status: BoundStatus,
    pub u: f64,
    pub v: f64,
}

/// Upper bound on the mean absolute error of the block estimator.
///
/// With `eta = 0`:
/// `|c| (k (phi_x(g+1) + phi_y(g+1)) / (k+g) + 3g/k + (u + v))`, and for
/// `eta > 0` the entropic variant with the gap term inflated by
/// `2 eta (log|X| + log|Y|)` and concentration terms
/// `u (|c|/2 + (eta/k) log(|X|^{3k} / u))` (likewise for `v`), where
/// `u = C |X|^{k/2} n^{p/2 - 1}`.
pub fn theoretical_error_bound(inputs: &BoundInputs) -> Result<BoundValue> {
    inputs.validate()?;
    let (k, g) = (inputs.k as f64, inputs.g as f64);
    let norm = inputs.sup_cost;
    let scale = (inputs.n as f64).powf(inputs.p / 2.0 - 1.0);
    let u = inputs.c * (inputs.x_size as f64).powf(k / 2.0) * scale;
    let v = inputs.c * (inputs.y_size as f64).powf(k / 2.0) * scale;
    let mixing = norm * k * (inputs.phi_x.phi(inputs.g + 1) + inputs.phi_y.phi(inputs.g + 1)) / (k + g);
    if inputs.eta == 0.0 {
        return Ok(BoundValue {
            value: mixing + norm * 3.0 * g / k + norm * (u + v),
            status: BoundStatus::Finite,
            u,
            v,
        });
    }
    let eta = inputs.eta;
    let (lx, ly) = ((inputs.x_size as f64).ln(), (inputs.y_size as f64).ln());
    if u >= 1.0 || v >= 1.0 {
        return Ok(BoundValue {
            value: f64::INFINITY,
            status: BoundStatus::Vacuous,
            u,
            v,
        });
    }
    let conc = |w: f64, l: f64| {
        if w == 0.0 {
            0.0
        } else {
            w * (norm / 2.0 + eta / k * (3.0 * k * l - w.ln()))
        }
    };
    let value = mixing + (3.0 * norm + 2.0 * eta * (lx + ly)) * g / k + conc(u, lx) + conc(v, ly);
    Ok(BoundValue {
        value,
        status: BoundStatus::Finite,
        u,
        v,
    })
}
