use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar used throughout the crate.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Allowed deviation of a probability vector's total mass from one.
    const MASS_TOL: f64;

    /// Lossy conversion from `f64`.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn of_usize(x: usize) -> Self {
        Self::from_usize(x).expect("usize is representable")
    }
}

impl Real for f64 {
    const MASS_TOL: f64 = 1e-12;
}

impl Real for f32 {
    const MASS_TOL: f64 = 1e-5;
}

/// Numerically safe `log(sum(exp(v)))`; returns `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp<T: Real>(v: impl Iterator<Item = T> + Clone) -> T {
    let m = v.clone().fold(T::neg_infinity(), T::max);
    if m == T::neg_infinity() {
        return m;
    }
    if m == T::infinity() {
        return m;
    }
    let s: T = v.map(|x| (x - m).exp()).sum();
    m + s.ln()
}

/// `x * ln(x)` with the convention `0 ln 0 = 0`.
pub fn xlogx<T: Real>(x: T) -> T {
    if x <= T::zero() {
        T::zero()
    } else {
        x * x.ln()
    }
}
