//! Large-sample approximations to the permutation null of V.

mod mixture;
mod moments;

use std::time::Instant;

use statrs::function::erf::erfc;

pub use mixture::{fit_mixture, mixture_cdf, mixture_sf, ChiSquareMixture};
pub use moments::{permutation_moments, PermutationMoments};

use crate::error::{Error, Result};
use crate::model::{Method, TestResult};
use crate::vstat::{permutation_test, ResamplingPlan, TestInput};

/// Feature (or block) count at which the auto rule switches to the mixture.
pub const DEFAULT_AUTO_THRESHOLD: usize = 50;

fn result(statistic: f64, p_value: f64, method: Method, start: Instant) -> TestResult {
    TestResult {
        statistic,
        p_value,
        method,
        resamples: None,
        seed: None,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

/// Upper tail of `Normal(mean_v, var_v)` at `v_obs`.
pub fn normal_p_value(moments: &PermutationMoments, v_obs: f64) -> Result<f64> {
    if !(moments.var_v > 0.0) {
        return Err(Error::Degenerate(
            "null variance is zero; the normal approximation is undefined".into(),
        ));
    }
    let z = (v_obs - moments.mean_v) / moments.var_v.sqrt();
    Ok(0.5 * erfc(z / std::f64::consts::SQRT_2))
}

pub fn normal_test(input: &TestInput) -> Result<TestResult> {
    let start = Instant::now();
    let v = input.observed()?.v;
    let p = normal_p_value(&permutation_moments(input)?, v)?;
    Ok(result(v, p, Method::Normal, start))
}

/// Mixture fitted to the exact null moments of `input`. When no non-negative
/// weights reproduce the variance, the large-P limit weights are used; they
/// still reproduce the mean.
pub fn null_mixture(input: &TestInput) -> Result<ChiSquareMixture> {
    let mo = permutation_moments(input)?;
    match fit_mixture(&mo, input.n()) {
        Err(Error::MixtureFit(_)) if mo.var_v > 0.0 => {
            ChiSquareMixture::for_n(input.n(), mo.limit_weights.0, mo.limit_weights.1)
        }
        other => other,
    }
}

pub fn chi_square_test(input: &TestInput) -> Result<TestResult> {
    let start = Instant::now();
    let v = input.observed()?.v;
    let mix = null_mixture(input)?;
    Ok(result(v, mixture_sf(&mix, v), Method::ChiSquare, start))
}

/// Mixture when there are at least `threshold` independent units (features,
/// or blocks for block input) and at least 4 observations, permutation
/// otherwise.
pub fn auto_test(input: &TestInput, plan: &ResamplingPlan, threshold: usize) -> Result<TestResult> {
    if input.n_units() >= threshold && input.n() >= 4 {
        chi_square_test(input)
    } else {
        permutation_test(input, plan)
    }
}
