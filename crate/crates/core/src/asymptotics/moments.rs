//! Exact first two moments of V under the permutation nulls.
//!
//! Write `W = norm * K * V`. Under either null `W = sum_e Z_e^2`, where
//! `Z = sum_b X_b` and `X_b` is block `b`'s centered pair-distance vector with
//! its observation labels permuted. Each `X_b` has a covariance on pairs that
//! depends only on how many indices two pairs share (`g2`, `g1`, `g0` for two,
//! one and zero shared indices), and `sum_e X_b(e)^2` is constant. The mean and
//! variance of `W` follow from these three numbers per block.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::DistanceMatrix;
use crate::error::Result;
use crate::model::{require_pairs, BinaryMatrix};
use crate::vstat::{n_pairs, TestInput};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermutationMoments {
    pub mean_v: f64,
    pub var_v: f64,
    pub n: usize,
    pub norm: f64,
    /// Large-P limits of the mixture weights: the two nontrivial eigenvalues of
    /// the pair covariance, scaled by `1 / norm`.
    pub limit_weights: (f64, f64),
}

/// Per-block covariance coefficients.
#[derive(Debug, Clone, Copy, Default)]
struct Coeffs {
    g2: f64,
    g1: f64,
    g0: f64,
}

/// Running sums over blocks of each coefficient and its square.
#[derive(Debug, Clone, Copy, Default)]
struct Accum {
    s: f64,
    sum: [f64; 3],
    sq: [f64; 3],
}

impl Accum {
    fn push(&mut self, s: f64, c: Coeffs, count: f64) {
        self.s += count * s;
        for (k, g) in [c.g2, c.g1, c.g0].into_iter().enumerate() {
            self.sum[k] += count * g;
            self.sq[k] += count * g * g;
        }
    }

    fn merge(mut self, other: Accum) -> Accum {
        self.s += other.s;
        for k in 0..3 {
            self.sum[k] += other.sum[k];
            self.sq[k] += other.sq[k];
        }
        self
    }

    fn finish(self, n: usize, norm: f64) -> PermutationMoments {
        let nf = n as f64;
        let k = n_pairs(n) as f64;
        let m1 = nf * (nf - 1.0) * (nf - 2.0);
        let m0 = k * (nf - 2.0) * (nf - 3.0) / 2.0;
        let cross = |i: usize| self.sum[i] * self.sum[i] - self.sq[i];
        let var_w = 2.0 * (k * cross(0) + m1 * cross(1) + m0 * cross(2));
        let denom = norm * k;
        let [g2, g1, g0] = self.sum;
        let lambda1 = g2 + (nf - 4.0) * g1 + (3.0 - nf) * g0;
        let lambda2 = g2 - 2.0 * g1 + g0;
        PermutationMoments {
            mean_v: self.s / denom,
            var_v: (var_w / (denom * denom)).max(0.0),
            n,
            norm,
            limit_weights: (lambda1.max(0.0) / norm, lambda2.max(0.0) / norm),
        }
    }
}

fn coeffs(n: usize, s: f64, row_sq: f64) -> Coeffs {
    let nf = n as f64;
    let k = n_pairs(n) as f64;
    let t1 = row_sq - 2.0 * s;
    let t0 = -s - t1;
    Coeffs {
        g2: s / k,
        g1: if n >= 3 {
            t1 / (nf * (nf - 1.0) * (nf - 2.0))
        } else {
            0.0
        },
        g0: if n >= 4 {
            t0 / (k * (nf - 2.0) * (nf - 3.0) / 2.0)
        } else {
            0.0
        },
    }
}

/// `(S, sum_i r_i^2)` for a 0/1 column with `c` ones among `n` rows.
fn binary_column_terms(n: usize, c: usize) -> (f64, f64) {
    let (nf, cf) = (n as f64, c as f64);
    let k = n_pairs(n) as f64;
    let split = cf * (nf - cf);
    let m = split / k;
    let s = split * (1.0 - m) * (1.0 - m) + (k - split) * m * m;
    let r1 = (nf - cf) - (nf - 1.0) * m;
    let r0 = cf - (nf - 1.0) * m;
    (s, cf * r1 * r1 + (nf - cf) * r0 * r0)
}

fn matrix_terms(d: &DistanceMatrix) -> (f64, f64) {
    let n = d.n();
    let upper = d.upper_triangle();
    let mean = upper.iter().sum::<f64>() / upper.len() as f64;
    let mut s = 0.0;
    let mut rows = vec![0.0; n];
    let mut e = 0;
    for i in 0..n {
        for j in i + 1..n {
            let y = upper[e] - mean;
            e += 1;
            s += y * y;
            rows[i] += y;
            rows[j] += y;
        }
    }
    (s, rows.iter().map(|r| r * r).sum())
}

fn binary_moments(m: &BinaryMatrix) -> PermutationMoments {
    let n = m.n_rows();
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for &c in m.col_sums() {
        *counts.entry(c).or_default() += 1;
    }
    let mut acc = Accum::default();
    for (&c, &count) in &counts {
        let (s, row_sq) = binary_column_terms(n, c as usize);
        acc.push(s, coeffs(n, s, row_sq), count as f64);
    }
    acc.finish(n, m.n_cols() as f64)
}

/// Exact mean and variance of V under the null that applies to `input`.
pub fn permutation_moments(input: &TestInput) -> Result<PermutationMoments> {
    require_pairs(input.n())?;
    Ok(match input {
        TestInput::Binary(m) => binary_moments(m),
        TestInput::Blocks { set, norm } => {
            let n = set.n();
            set.blocks()
                .par_iter()
                .map(|b| {
                    let (s, row_sq) = matrix_terms(b);
                    let mut a = Accum::default();
                    a.push(s, coeffs(n, s, row_sq), 1.0);
                    a
                })
                .reduce(Accum::default, Accum::merge)
                .finish(n, *norm)
        }
    })
}
