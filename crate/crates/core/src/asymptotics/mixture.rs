//! Two-component scaled chi-square mixture `scale * (a1 X + a2 Y)`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use super::moments::PermutationMoments;
use crate::error::{Error, Result};
use crate::numeric::integrate;

const QUAD_TOL: f64 = 1e-13;
const SEGMENTS: usize = 48;
/// Relative slack on the discriminant and on negative roots.
const FIT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareMixture {
    pub a1: f64,
    pub a2: f64,
    pub df1: f64,
    pub df2: f64,
    pub scale: f64,
}

impl ChiSquareMixture {
    /// Degrees of freedom and scale for `n` observations.
    pub fn for_n(n: usize, a1: f64, a2: f64) -> Result<Self> {
        if n < 4 {
            return Err(Error::Invalid(format!(
                "the mixture needs at least 4 observations, got {n}"
            )));
        }
        if !(a1 >= 0.0 && a2 >= 0.0) {
            return Err(Error::Invalid(format!(
                "weights must be non-negative, got ({a1}, {a2})"
            )));
        }
        let nf = n as f64;
        Ok(ChiSquareMixture {
            a1,
            a2,
            df1: nf - 1.0,
            df2: nf * (nf - 3.0) / 2.0,
            scale: 2.0 / (nf * (nf - 1.0)),
        })
    }

    pub fn mean(&self) -> f64 {
        self.scale * (self.a1 * self.df1 + self.a2 * self.df2)
    }

    pub fn variance(&self) -> f64 {
        2.0 * self.scale
            * self.scale
            * (self.a1 * self.a1 * self.df1 + self.a2 * self.a2 * self.df2)
    }

    pub fn cdf(&self, t: f64) -> f64 {
        mixture_cdf(self, t)
    }

    pub fn sf(&self, t: f64) -> f64 {
        mixture_sf(self, t)
    }
}

fn chi2_cdf(df: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_lr(df / 2.0, x / 2.0)
    }
}

fn chi2_sf(df: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma_ur(df / 2.0, x / 2.0)
    }
}

fn chi2_pdf(df: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let h = df / 2.0;
    ((h - 1.0) * x.ln() - x / 2.0 - h * std::f64::consts::LN_2 - ln_gamma(h)).exp()
}

/// `int_0^{u/a1} f_X(x) g((u - a1 x) / a2) dx` over a grid covering the bulk
/// of `X`; beyond the grid the density is below any double-precision concern.
fn convolve(mix: &ChiSquareMixture, u: f64, g: impl Fn(f64) -> f64) -> f64 {
    let (df, a1, a2) = (mix.df1, mix.a1, mix.a2);
    let cap = df + 60.0 * (2.0 * df).sqrt() + 200.0;
    let hi = (u / a1).min(cap);
    let step = hi / SEGMENTS as f64;
    (0..SEGMENTS)
        .map(|k| {
            let (lo, up) = (k as f64 * step, (k + 1) as f64 * step);
            integrate(|x| chi2_pdf(df, x) * g((u - a1 * x) / a2), lo, up, QUAD_TOL)
        })
        .sum()
}

fn single(mix: &ChiSquareMixture) -> Option<(f64, f64)> {
    match (mix.a1 > 0.0, mix.a2 > 0.0) {
        (true, false) => Some((mix.df1, mix.a1)),
        (false, true) => Some((mix.df2, mix.a2)),
        _ => None,
    }
}

/// `P(scale * (a1 X + a2 Y) <= t)` with `X ~ chi2(df1)`, `Y ~ chi2(df2)` independent.
pub fn mixture_cdf(mix: &ChiSquareMixture, t: f64) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    let u = t / mix.scale;
    if mix.a1 == 0.0 && mix.a2 == 0.0 {
        return 1.0;
    }
    if let Some((df, a)) = single(mix) {
        return chi2_cdf(df, u / a);
    }
    convolve(mix, u, |y| chi2_cdf(mix.df2, y)).clamp(0.0, 1.0)
}

/// Upper tail `1 - mixture_cdf`, evaluated directly so small p-values keep
/// their relative accuracy.
pub fn mixture_sf(mix: &ChiSquareMixture, t: f64) -> f64 {
    if t < 0.0 {
        return 1.0;
    }
    let u = t / mix.scale;
    if mix.a1 == 0.0 && mix.a2 == 0.0 {
        return 0.0;
    }
    if let Some((df, a)) = single(mix) {
        return chi2_sf(df, u / a);
    }
    let beyond = chi2_sf(mix.df1, u / mix.a1);
    (beyond + convolve(mix, u, |y| chi2_sf(mix.df2, y))).clamp(0.0, 1.0)
}

/// Match the mixture's mean and variance to `moments`. Of the two roots of the
/// moment system the one nearer the large-P weights is kept.
pub fn fit_mixture(moments: &PermutationMoments, n: usize) -> Result<ChiSquareMixture> {
    let template = ChiSquareMixture::for_n(n, 0.0, 0.0)?;
    let (df1, df2, scale) = (template.df1, template.df2, template.scale);
    if !(moments.var_v > 0.0) {
        return Err(Error::MixtureFit(format!(
            "null variance is {}, the limit law is degenerate",
            moments.var_v
        )));
    }
    let m = moments.mean_v / scale;
    let v = moments.var_v / (2.0 * scale * scale);
    let inner = (df1 + df2) * v - m * m;
    if inner < -FIT_TOL * m * m {
        return Err(Error::MixtureFit(format!(
            "variance {:.6e} is below the smallest attainable for mean {:.6e}",
            moments.var_v, moments.mean_v
        )));
    }
    let root = (df1 * df2 * inner.max(0.0)).sqrt();
    let denom = df1 * (df1 + df2);
    let (t1, t2) = moments.limit_weights;
    let candidates = [(m * df1 + root) / denom, (m * df1 - root) / denom]
        .into_iter()
        .filter_map(|a1| {
            let a2 = (m - a1 * df1) / df2;
            let slack = FIT_TOL * m.max(f64::MIN_POSITIVE);
            (a1 >= -slack && a2 * df2 >= -slack).then(|| (a1.max(0.0), a2.max(0.0)))
        })
        .min_by(|x, y| {
            let dx = (x.0 - t1).powi(2) + (x.1 - t2).powi(2);
            let dy = (y.0 - t1).powi(2) + (y.1 - t2).powi(2);
            dx.total_cmp(&dy)
        });
    match candidates {
        Some((a1, a2)) => ChiSquareMixture::for_n(n, a1, a2),
        None => Err(Error::MixtureFit(format!(
            "no non-negative weights reproduce mean {:.6e} and variance {:.6e}",
            moments.mean_v, moments.var_v
        ))),
    }
}
