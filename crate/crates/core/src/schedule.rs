use crate::error::{Error, Result};

/// Rules for choosing the block length `k` (and gap `g`) from the sample size.
///
/// Alphabet-size ratios use `log n / log(max(|X|, |Y|, 2))`, so binary
/// alphabets give `log_2 n`.
#[derive(Clone, Debug, PartialEq)]
pub enum ScheduleRule {
    /// `k = floor(log n / (max(h_x, h_y) + eps))` from entropy rates in nats.
    EntropyRate { h_x: f64, h_y: f64, eps: f64 },
    /// Largest `k` with `k < (2 - p) log n / log |X v Y|`.
    PolynomialMixing { p: f64, x_size: usize, y_size: usize },
    /// `k = floor(alpha log n / log |X v Y|)` and
    /// `g = floor(log(alpha log n / log |X v Y|) / log(1 / rho))`, clipped to `0 <= g < k`.
    GeometricMixing {
        alpha: f64,
        rho: f64,
        x_size: usize,
        y_size: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub k: usize,
    pub g: usize,
}

fn size_log(x: usize, y: usize) -> f64 {
    (x.max(y).max(2) as f64).ln()
}

/// Block length and gap for sample size `n`.
///
/// `k` is clipped to `1..=max(1, n / 2)` so that at least half the windows
/// remain; rules that ask for more are capped silently.
pub fn k_schedule(n: usize, rule: &ScheduleRule) -> Result<Schedule> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("sample size {n} is below 2")));
    }
    let ln_n = (n as f64).ln();
    let (raw_k, g) = match *rule {
        ScheduleRule::EntropyRate { h_x, h_y, eps } => {
            if !(eps > 0.0) || !(h_x >= 0.0) || !(h_y >= 0.0) {
                return Err(Error::InvalidParameter("entropy rule needs h >= 0 and eps > 0".into()));
            }
            ((ln_n / (h_x.max(h_y) + eps)).floor(), 0)
        }
        ScheduleRule::PolynomialMixing { p, x_size, y_size } => {
            if !(1.0..2.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("p = {p} outside [1, 2)")));
            }
            let bound = (2.0 - p) * ln_n / size_log(x_size, y_size);
            (bound.ceil() - 1.0, 0)
        }
        ScheduleRule::GeometricMixing {
            alpha,
            rho,
            x_size,
            y_size,
        } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::InvalidParameter(format!("alpha = {alpha} outside (0, 1)")));
            }
            if !(rho >= 0.0 && rho < 1.0) {
                return Err(Error::InvalidParameter(format!("rho = {rho} outside [0, 1)")));
            }
            let scaled = alpha * ln_n / size_log(x_size, y_size);
            let g = if rho == 0.0 || scaled <= 1.0 {
                0.0
            } else {
                (scaled.ln() / (1.0 / rho).ln()).floor()
            };
            (scaled.floor(), g.max(0.0) as usize)
        }
    };
    let cap = (n / 2).max(1);
    let k = (raw_k.max(1.0) as usize).min(cap);
    Ok(Schedule { k, g: g.min(k - 1) })
}
