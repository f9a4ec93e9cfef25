use crate::cost::CostSpec;
use crate::error::{Error, Result};
use crate::estimate::{estimate_oj, EstimatorConfig};
use crate::ot::{solve_entropic_value, solve_ot, OtConfig, SinkhornConfig, SinkhornStatus};
use crate::process::MarkovModel;
use crate::scalar::Real;
use crate::sequence::SymbolSequence;

/// Sinkhorn tolerance used for curve points.
pub const CURVE_TOL: f64 = 1e-11;

/// `(k, T_{c_k}(mu_k, nu_k) / k)` for `k = 1..=k_max` from exact block laws,
/// entropically regularised when `eta > 0`.
pub fn k_step_cost_curve<T: Real>(
    mx: &MarkovModel<T>,
    my: &MarkovModel<T>,
    c: &CostSpec<T>,
    k_max: usize,
    eta: T,
) -> Result<Vec<(usize, T)>> {
    (1..=k_max).map(|k| Ok((k, curve_point(mx, my, c, k, eta)?))).collect()
}

/// A single entry of [`k_step_cost_curve`].
pub fn curve_point<T: Real>(
    mx: &MarkovModel<T>,
    my: &MarkovModel<T>,
    c: &CostSpec<T>,
    k: usize,
    eta: T,
) -> Result<T> {
    if k == 0 {
        return Err(Error::ZeroBlockLength);
    }
    if mx.alphabet() != c.x_alphabet() || my.alphabet() != c.y_alphabet() {
        return Err(Error::AlphabetMismatch);
    }
    if !(eta >= T::zero()) {
        return Err(Error::InvalidParameter("eta must be nonnegative".into()));
    }
    let mu = mx.exact_block_law(k)?;
    let nu = my.exact_block_law(k)?;
    let total = if eta == T::zero() {
        solve_ot(&mu, &nu, c, &OtConfig::default())?.cost_value()
    } else {
        let mut cfg = SinkhornConfig::new(eta);
        cfg.tol = T::of(CURVE_TOL).max(T::epsilon() * T::of(100.0));
        let v = solve_entropic_value(&mu, &nu, c, &cfg)?;
        if v.status != SinkhornStatus::Converged {
            return Err(Error::NotConverged {
                iterations: v.iterations,
                violation: v.marginal_violation.to_f64_lossy(),
            });
        }
        v.regularized_value
    };
    Ok(total / T::of_usize(k))
}

/// Block estimate of the d-bar distance: the exact estimator under the
/// Hamming cost, where symbols match when their tokens agree.
pub fn dbar_estimate<T: Real>(x: &SymbolSequence, y: &SymbolSequence, k: usize) -> Result<T> {
    let c = CostSpec::hamming_between(x.alphabet(), y.alphabet());
    Ok(estimate_oj(x, y, &c, &EstimatorConfig::exact(k))?.cost_estimate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::sequence::ingest;

    #[test]
    fn identical_models_give_a_zero_curve() {
        let m = MarkovModel::<f64>::binary_symmetric(0.3).unwrap();
        let c = CostSpec::hamming(m.alphabet());
        for (_, v) in k_step_cost_curve(&m, &m, &c, 5, 0.0).unwrap() {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn iid_curve_is_flat() {
        let a = Alphabet::new(["0", "1"]).unwrap();
        let mx = MarkovModel::<f64>::iid(a.clone(), vec![0.5, 0.5]).unwrap();
        let my = MarkovModel::iid(a.clone(), vec![0.2, 0.8]).unwrap();
        let c = CostSpec::hamming(&a);
        for (_, v) in k_step_cost_curve(&mx, &my, &c, 6, 0.0).unwrap() {
            assert!((v - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn dbar_extremes() {
        let a = Alphabet::new(["0", "1"]).unwrap();
        let zeros = ingest("0 0 0 0 0 0", Some(&a)).unwrap();
        let ones = ingest("1 1 1 1 1 1", Some(&a)).unwrap();
        assert_eq!(dbar_estimate::<f64>(&zeros, &zeros, 3).unwrap(), 0.0);
        assert!((dbar_estimate::<f64>(&zeros, &ones, 3).unwrap() - 1.0).abs() < 1e-15);
    }
}
