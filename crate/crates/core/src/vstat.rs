//! The V statistic and its resampling nulls.
//!
//! `V = (1 / (norm * K)) * sum_{i<j} (d_ij - mu)^2` with `K = N(N-1)/2` and `mu`
//! the mean pairwise distance. Two permutation nulls are supported:
//!
//! * column permutation of a binary matrix (independent features), which
//!   fixes every column sum;
//! * block relabeling of cached per-block distance matrices (independent
//!   groups of features), where each block's observation labels are permuted
//!   independently.
//!
//! Replicate `r` draws from its own ChaCha stream keyed by `(seed, r)`, so the
//! resampled statistics do not depend on how replicates are scheduled.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::{
    block_distances, block_distances_binary, BlockDistanceSet, DistanceMatrix, Metric,
};
use crate::error::{Error, Result};
use crate::model::{
    require_pairs, BinaryMatrix, BlockPartition, Method, NumericMatrix, TestResult, WORD_BITS,
};
use crate::numeric::DoubleDouble;

pub const DEFAULT_RESAMPLES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VValue {
    pub v: f64,
    /// Mean pairwise distance.
    pub mu: f64,
    pub norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueType {
    /// `#[V* > V_obs] / R`
    Unbiased,
    /// `(#[V* >= V_obs] + 1) / (R + 1)`
    Valid,
}

impl std::str::FromStr for PValueType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unbiased" => Ok(PValueType::Unbiased),
            "valid" => Ok(PValueType::Valid),
            other => Err(Error::Invalid(format!("unknown p-value type {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResamplingPlan {
    pub resamples: usize,
    pub seed: u64,
    pub p_value_type: PValueType,
}

impl Default for ResamplingPlan {
    fn default() -> Self {
        ResamplingPlan {
            resamples: DEFAULT_RESAMPLES,
            seed: 0,
            p_value_type: PValueType::Valid,
        }
    }
}

impl ResamplingPlan {
    pub fn new(resamples: usize, seed: u64, p_value_type: PValueType) -> Result<Self> {
        if resamples == 0 {
            return Err(Error::Invalid("resample count must be at least 1".into()));
        }
        Ok(ResamplingPlan {
            resamples,
            seed,
            p_value_type,
        })
    }

    pub fn with_seed(seed: u64) -> Self {
        ResamplingPlan {
            seed,
            ..Default::default()
        }
    }
}

/// Random stream for replicate `r` of a run seeded with `seed`.
pub fn replicate_rng(seed: u64, r: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r);
    rng
}

/// Running first and second moments of pairwise distances.
#[derive(Debug, Clone, Copy, Default)]
struct PairSums {
    s1: DoubleDouble,
    s2: DoubleDouble,
}

impl PairSums {
    fn from_integers(s1: u64, s2: u128) -> Self {
        PairSums {
            s1: DoubleDouble::from_u128(s1 as u128),
            s2: DoubleDouble::from_u128(s2),
        }
    }

    fn from_values(vals: &[f64]) -> Self {
        let mut s = PairSums::default();
        for &d in vals {
            s.s1.add_f64(d);
            // Squares are not exact in general; the accumulator makes the sum
            // independent of the order of the terms.
            let sq = d * d;
            let err = d.mul_add(d, -sq);
            s.s2.add_f64(sq);
            s.s2.add_f64(err);
        }
        s
    }

    fn value(self, k: usize, norm: f64) -> VValue {
        let k = k as f64;
        let mu = self.s1.div_f64(k);
        let centered = self.s2.add(self.s1.mul(mu).neg());
        let v = centered.div_f64(k * norm).to_f64().max(0.0);
        VValue {
            v,
            mu: mu.to_f64(),
            norm,
        }
    }
}

pub(crate) fn n_pairs(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// V and mean distance of a distance matrix.
pub fn v_statistic(d: &DistanceMatrix, norm: f64) -> Result<VValue> {
    require_pairs(d.n())?;
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::Invalid(format!(
            "normalization must be positive, got {norm}"
        )));
    }
    Ok(PairSums::from_values(&d.upper_triangle()).value(n_pairs(d.n()), norm))
}

fn binary_pair_sums(words: &[u64], n: usize, wpr: usize) -> PairSums {
    let mut s1 = 0u64;
    let mut s2 = 0u128;
    for i in 0..n {
        let ri = &words[i * wpr..(i + 1) * wpr];
        for j in i + 1..n {
            let rj = &words[j * wpr..(j + 1) * wpr];
            let d: u64 = ri
                .iter()
                .zip(rj)
                .map(|(a, b)| (a ^ b).count_ones() as u64)
                .sum();
            s1 += d;
            s2 += (d * d) as u128;
        }
    }
    PairSums::from_integers(s1, s2)
}

/// V of a binary matrix under Hamming distance, normalized by the feature count.
pub fn v_binary(m: &BinaryMatrix) -> Result<VValue> {
    require_pairs(m.n_rows())?;
    if m.n_cols() == 0 {
        return Err(Error::Invalid("matrix has no features".into()));
    }
    Ok(binary_pair_sums(m.words(), m.n_rows(), m.words_per_row())
        .value(n_pairs(m.n_rows()), m.n_cols() as f64))
}

/// What a V test runs on.
#[derive(Debug, Clone)]
pub enum TestInput {
    /// Binary features treated as mutually independent.
    Binary(BinaryMatrix),
    /// Cached per-block distances; blocks are mutually independent.
    Blocks { set: BlockDistanceSet, norm: f64 },
}

impl TestInput {
    /// Binary features grouped into blocks; Hamming distances are cached per
    /// block and the statistic is normalized by the feature count.
    pub fn binary_blocks(m: &BinaryMatrix, part: &BlockPartition) -> Result<Self> {
        let set = block_distances_binary(m, part)?;
        Ok(TestInput::Blocks {
            set,
            norm: m.n_cols() as f64,
        })
    }

    pub fn numeric_blocks(
        m: &NumericMatrix,
        part: &BlockPartition,
        metric: Metric,
    ) -> Result<Self> {
        let set = block_distances(m, part, metric)?;
        Ok(TestInput::Blocks {
            set,
            norm: m.n_cols() as f64,
        })
    }

    /// Distances supplied directly; with no feature count the statistic is
    /// normalized by 1.
    pub fn distances(set: BlockDistanceSet) -> Self {
        let norm = set.n_features().map_or(1.0, |p| p as f64);
        TestInput::Blocks { set, norm }
    }

    /// Route a real matrix: with a partition, use cached block distances;
    /// without one, the data must be 0/1 and features are taken as independent.
    pub fn from_matrix(
        m: &NumericMatrix,
        part: Option<&BlockPartition>,
        metric: Metric,
    ) -> Result<Self> {
        match part {
            Some(part) if m.is_binary() && metric != Metric::EuclideanSq => {
                TestInput::binary_blocks(&m.binarize(0.5), part)
            }
            Some(part) => TestInput::numeric_blocks(m, part, metric),
            None if m.is_binary() => Ok(TestInput::Binary(m.binarize(0.5))),
            None => Err(Error::NonBinaryEsif),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            TestInput::Binary(m) => m.n_rows(),
            TestInput::Blocks { set, .. } => set.n(),
        }
    }

    /// Independent units of the null: features or blocks.
    pub fn n_units(&self) -> usize {
        match self {
            TestInput::Binary(m) => m.n_cols(),
            TestInput::Blocks { set, .. } => set.n_blocks(),
        }
    }

    pub fn norm(&self) -> f64 {
        match self {
            TestInput::Binary(m) => m.n_cols() as f64,
            TestInput::Blocks { norm, .. } => *norm,
        }
    }

    pub fn with_norm(self, norm: f64) -> Self {
        match self {
            TestInput::Blocks { set, .. } => TestInput::Blocks { set, norm },
            other => other,
        }
    }

    fn validate(&self) -> Result<()> {
        require_pairs(self.n())?;
        if self.n_units() == 0 {
            return Err(Error::Invalid("no features".into()));
        }
        let norm = self.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Invalid(format!(
                "normalization must be positive, got {norm}"
            )));
        }
        Ok(())
    }

    /// Resampled statistics within this distance of the observed one count as
    /// ties. Binary and integer-valued inputs are summed exactly; otherwise
    /// relabeled block sums carry up to `B` roundings per pair, so draws that
    /// tie in exact arithmetic may differ by that much.
    pub fn tie_tolerance(&self, observed: &VValue) -> f64 {
        match self {
            TestInput::Binary(_) => 0.0,
            TestInput::Blocks { set, .. } if set.is_integral() => 0.0,
            TestInput::Blocks { set, .. } => {
                8.0 * set.n_blocks() as f64
                    * f64::EPSILON
                    * (observed.v + observed.mu * observed.mu / observed.norm)
            }
        }
    }

    pub fn observed(&self) -> Result<VValue> {
        self.validate()?;
        match self {
            TestInput::Binary(m) => v_binary(m),
            TestInput::Blocks { set, norm } => {
                let n = set.n();
                let mut buf = vec![0.0; n_pairs(n)];
                let ident: Vec<usize> = (0..n).collect();
                for b in set.blocks() {
                    accumulate_relabeled(b, &ident, &mut buf);
                }
                Ok(PairSums::from_values(&buf).value(n_pairs(n), *norm))
            }
        }
    }
}

struct EsifScratch {
    idx: Vec<usize>,
    words: Vec<u64>,
}

impl EsifScratch {
    fn new(m: &BinaryMatrix) -> Self {
        EsifScratch {
            idx: (0..m.n_rows()).collect(),
            words: vec![0; m.words().len()],
        }
    }
}

/// Fill `scratch.words` with a column-permuted copy of `m`. Each column's ones
/// land on a uniformly random subset of rows of the same size.
fn draw_esif(m: &BinaryMatrix, rng: &mut ChaCha8Rng, scratch: &mut EsifScratch) {
    let n = m.n_rows();
    let wpr = m.words_per_row();
    scratch.words.iter_mut().for_each(|w| *w = 0);
    for (j, &c) in m.col_sums().iter().enumerate() {
        let c = c as usize;
        let (word, mask) = (j / WORD_BITS, 1u64 << (j % WORD_BITS));
        if c == 0 {
            continue;
        }
        if c == n {
            for i in 0..n {
                scratch.words[i * wpr + word] |= mask;
            }
            continue;
        }
        // A partial Fisher-Yates pass selects a uniform subset whatever the
        // current order of `idx`; choose the smaller side and complement.
        let take = c.min(n - c);
        for k in 0..take {
            let pick = rng.random_range(k..n);
            scratch.idx.swap(k, pick);
        }
        if take == c {
            for &i in &scratch.idx[..take] {
                scratch.words[i * wpr + word] |= mask;
            }
        } else {
            for &i in &scratch.idx[take..] {
                scratch.words[i * wpr + word] |= mask;
            }
        }
    }
}

/// One draw from the column-permutation null: every column is permuted
/// independently, so column sums are preserved.
pub fn resample_esif(m: &BinaryMatrix, rng: &mut ChaCha8Rng) -> BinaryMatrix {
    let mut scratch = EsifScratch::new(m);
    draw_esif(m, rng, &mut scratch);
    let mut out = m.clone();
    out.replace_words(scratch.words);
    out
}

fn accumulate_relabeled(block: &DistanceMatrix, perm: &[usize], buf: &mut [f64]) {
    let n = block.n();
    let d = block.as_slice();
    let mut k = 0;
    for i in 0..n {
        let row = &d[perm[i] * n..(perm[i] + 1) * n];
        for &pj in &perm[i + 1..] {
            buf[k] += row[pj];
            k += 1;
        }
    }
}

/// One draw from the block-relabeling null: each block's labels are permuted
/// by an independent uniform permutation and the relabeled blocks are summed.
pub fn resample_esigf(set: &BlockDistanceSet, rng: &mut ChaCha8Rng) -> DistanceMatrix {
    let n = set.n();
    let mut perms = Vec::with_capacity(set.n_blocks());
    for _ in set.blocks() {
        let mut p: Vec<usize> = (0..n).collect();
        p.shuffle(rng);
        perms.push(p);
    }
    DistanceMatrix::from_fn(n, |i, j| {
        set.blocks()
            .iter()
            .zip(&perms)
            .map(|(b, p)| b.get(p[i], p[j]))
            .sum()
    })
}

/// `resamples` statistics drawn from the permutation null of `input`, in
/// replicate order.
pub fn null_draws(input: &TestInput, resamples: usize, seed: u64) -> Result<Vec<f64>> {
    input.validate()?;
    let n = input.n();
    let k = n_pairs(n);
    let norm = input.norm();
    let draws = match input {
        TestInput::Binary(m) => (0..resamples)
            .into_par_iter()
            .map_init(
                || EsifScratch::new(m),
                |scratch, r| {
                    let mut rng = replicate_rng(seed, r as u64);
                    draw_esif(m, &mut rng, scratch);
                    binary_pair_sums(&scratch.words, n, m.words_per_row())
                        .value(k, norm)
                        .v
                },
            )
            .collect(),
        TestInput::Blocks { set, norm } => (0..resamples)
            .into_par_iter()
            .map_init(
                || ((0..n).collect::<Vec<usize>>(), vec![0.0; k]),
                |(perm, buf), r| {
                    let mut rng = replicate_rng(seed, r as u64);
                    buf.iter_mut().for_each(|v| *v = 0.0);
                    for b in set.blocks() {
                        perm.shuffle(&mut rng);
                        accumulate_relabeled(b, perm, buf);
                    }
                    PairSums::from_values(buf).value(k, *norm).v
                },
            )
            .collect(),
    };
    Ok(draws)
}

/// Monte Carlo p-value from resampled statistics; draws within `tol` of the
/// observed value are ties.
pub fn p_value(observed: f64, tol: f64, draws: &[f64], kind: PValueType) -> f64 {
    let r = draws.len() as f64;
    match kind {
        PValueType::Unbiased => draws.iter().filter(|&&v| v > observed + tol).count() as f64 / r,
        PValueType::Valid => {
            (draws.iter().filter(|&&v| v >= observed - tol).count() as f64 + 1.0) / (r + 1.0)
        }
    }
}

/// Permutation test: column permutation for [`TestInput::Binary`], block
/// relabeling for [`TestInput::Blocks`].
pub fn permutation_test(input: &TestInput, plan: &ResamplingPlan) -> Result<TestResult> {
    let start = Instant::now();
    let observed = input.observed()?;
    let draws = null_draws(input, plan.resamples, plan.seed)?;
    Ok(TestResult {
        statistic: observed.v,
        p_value: p_value(
            observed.v,
            input.tie_tolerance(&observed),
            &draws,
            plan.p_value_type,
        ),
        method: Method::Permutation,
        resamples: Some(plan.resamples),
        seed: Some(plan.seed),
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// One parametric-bootstrap dataset: rows i.i.d. from the product of
/// Bernoulli(c_p / N) marginals.
pub fn resample_bootstrap(m: &BinaryMatrix, rng: &mut ChaCha8Rng) -> BinaryMatrix {
    let n = m.n_rows();
    let ones: Vec<Vec<usize>> = m
        .col_sums()
        .iter()
        .map(|&c| {
            let theta = c as f64 / n as f64;
            (0..n).filter(|_| rng.random_bool(theta)).collect()
        })
        .collect();
    BinaryMatrix::from_column_ones(n, &ones)
}

pub fn bootstrap_draws(m: &BinaryMatrix, resamples: usize, seed: u64) -> Result<Vec<f64>> {
    v_binary(m)?;
    let k = n_pairs(m.n_rows());
    let norm = m.n_cols() as f64;
    Ok((0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r as u64);
            let draw = resample_bootstrap(m, &mut rng);
            binary_pair_sums(draw.words(), draw.n_rows(), draw.words_per_row())
                .value(k, norm)
                .v
        })
        .collect())
}

/// Parametric bootstrap test under the fitted product-Bernoulli model.
pub fn bootstrap_test(m: &BinaryMatrix, plan: &ResamplingPlan) -> Result<TestResult> {
    let start = Instant::now();
    let observed = v_binary(m)?;
    let draws = bootstrap_draws(m, plan.resamples, plan.seed)?;
    Ok(TestResult {
        statistic: observed.v,
        p_value: p_value(observed.v, 0.0, &draws, plan.p_value_type),
        method: Method::Bootstrap,
        resamples: Some(plan.resamples),
        seed: Some(plan.seed),
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}
