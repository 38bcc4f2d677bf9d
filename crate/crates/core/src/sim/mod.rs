//! Generative models for null and structured data, and the Monte Carlo
//! harness that estimates false-positive rate, power and AUROC.

mod config;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::parse_kv;

use crate::asymptotics::{auto_test, chi_square_test, normal_test, DEFAULT_AUTO_THRESHOLD};
use crate::distance::Metric;
use crate::error::{Error, Result};
use crate::model::{BinaryMatrix, BlockPartition, Method, NumericMatrix};
use crate::numeric::mix_seed;
use crate::stats::clopper_pearson;
use crate::tracy_widom::{tw_test, tw_test_numeric};
use crate::vstat::{
    bootstrap_test, permutation_test, PValueType, ResamplingPlan, TestInput, DEFAULT_RESAMPLES,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullKind {
    LowFreq,
    VaryingFreq,
    HighFreq,
    Custom,
    MixtureGaussian,
}

impl NullKind {
    /// Range of the per-feature frequencies for the built-in binary kinds.
    pub fn theta_range(self) -> Option<(f64, f64)> {
        match self {
            NullKind::LowFreq => Some((0.1, 0.2)),
            NullKind::VaryingFreq => Some((0.2, 0.55)),
            NullKind::HighFreq => Some((0.8, 0.9)),
            NullKind::Custom | NullKind::MixtureGaussian => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullModelConfig {
    pub kind: NullKind,
    pub n: usize,
    pub p: usize,
    pub theta: Option<Vec<f64>>,
    pub seed: u64,
}

impl NullModelConfig {
    pub fn new(kind: NullKind, n: usize, p: usize, seed: u64) -> Self {
        NullModelConfig {
            kind,
            n,
            p,
            theta: None,
            seed,
        }
    }

    pub fn custom(n: usize, theta: Vec<f64>, seed: u64) -> Self {
        NullModelConfig {
            kind: NullKind::Custom,
            n,
            p: theta.len(),
            theta: Some(theta),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::Invalid("n and p must be positive".into()));
        }
        match (&self.kind, &self.theta) {
            (NullKind::Custom, None) => {
                Err(Error::Invalid("custom null needs a theta vector".into()))
            }
            (NullKind::Custom, Some(t)) if t.len() != self.p => Err(Error::Invalid(format!(
                "theta has {} entries, expected p = {}",
                t.len(),
                self.p
            ))),
            (NullKind::Custom, Some(t)) if t.iter().any(|x| !(0.0..=1.0).contains(x)) => {
                Err(Error::Invalid("theta entries must lie in [0, 1]".into()))
            }
            (NullKind::Custom, _) => Ok(()),
            (_, Some(_)) => Err(Error::Invalid(format!(
                "theta only applies to the custom kind, not {}",
                self.kind
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeterogeneityMode {
    /// Every discerning feature uses the population's own window.
    Directional,
    /// The second half of the discerning features use windows reflected
    /// about 1/2, so populations differ in both directions.
    Balanced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub sizes: Vec<usize>,
    pub epsilon: f64,
    pub p: usize,
    pub discern_frac: f64,
    pub mode: HeterogeneityMode,
    pub flip_frac: f64,
    /// Per-population frequency windows replacing the default ones.
    pub windows: Option<Vec<(f64, f64)>>,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn new(sizes: Vec<usize>, epsilon: f64, p: usize, seed: u64) -> Self {
        ScenarioConfig {
            sizes,
            epsilon,
            p,
            discern_frac: 1.0,
            mode: HeterogeneityMode::Directional,
            flip_frac: 0.0,
            windows: None,
            seed,
        }
    }

    pub fn n(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn n_discerning(&self) -> usize {
        (self.discern_frac * self.p as f64).round() as usize
    }

    /// Window of population `k` (0-based): centered at
    /// `0.5 + 0.075 (-1)^(k+1) + 0.05 floor(k / 2)` with half-width epsilon.
    pub fn window(&self, k: usize) -> (f64, f64) {
        if let Some(w) = &self.windows {
            return w[k];
        }
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        let center = 0.5 + 0.075 * sign + 0.05 * (k / 2) as f64;
        (center - self.epsilon, center + self.epsilon)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(Error::Invalid("population sizes must be positive".into()));
        }
        if self.p == 0 {
            return Err(Error::Invalid("p must be positive".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Invalid(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(0.0..=1.0).contains(&self.discern_frac) {
            return Err(Error::Invalid(format!(
                "discern_frac must lie in [0, 1], got {}",
                self.discern_frac
            )));
        }
        if !(0.0..=1.0).contains(&self.flip_frac) {
            return Err(Error::Invalid(format!(
                "flip_frac must lie in [0, 1], got {}",
                self.flip_frac
            )));
        }
        if let Some(w) = &self.windows {
            if w.len() != self.sizes.len() {
                return Err(Error::Invalid(format!(
                    "{} windows given for {} populations",
                    w.len(),
                    self.sizes.len()
                )));
            }
        }
        let shared = (0.5 - self.epsilon, 0.5 + self.epsilon);
        for (k, (lo, hi)) in (0..self.sizes.len())
            .map(|k| (k, self.window(k)))
            .chain([(usize::MAX, shared)])
        {
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                let who = if k == usize::MAX {
                    "shared".to_string()
                } else {
                    format!("population {}", k + 1)
                };
                return Err(Error::Invalid(format!(
                    "{who} window [{lo}, {hi}] leaves [0, 1]; use a smaller epsilon"
                )));
            }
        }
        Ok(())
    }
}

/// A generated dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Binary(BinaryMatrix),
    Numeric(NumericMatrix),
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        match self {
            Dataset::Binary(m) => m.n_rows(),
            Dataset::Numeric(m) => m.n_rows(),
        }
    }
}

/// Rows i.i.d. with independent Bernoulli(`theta`) features.
pub fn random_binary(n: usize, p: usize, theta: f64, rng: &mut impl Rng) -> BinaryMatrix {
    bernoulli_columns(n, &vec![theta; p], rng)
}

fn bernoulli_columns(n: usize, theta: &[f64], rng: &mut impl Rng) -> BinaryMatrix {
    let ones: Vec<Vec<usize>> = theta
        .iter()
        .map(|&t| (0..n).filter(|_| rng.random_bool(t)).collect())
        .collect();
    BinaryMatrix::from_column_ones(n, &ones)
}

pub fn gen_null(cfg: &NullModelConfig, rng: &mut impl Rng) -> Result<Dataset> {
    cfg.validate()?;
    Ok(match cfg.kind {
        NullKind::MixtureGaussian => {
            let left = Normal::new(-2.0, 1.0).unwrap();
            let right = Normal::new(2.0, 1.0).unwrap();
            let data = (0..cfg.n * cfg.p)
                .map(|_| {
                    if rng.random_bool(0.5) {
                        left.sample(rng)
                    } else {
                        right.sample(rng)
                    }
                })
                .collect();
            Dataset::Numeric(NumericMatrix::new(cfg.n, cfg.p, data)?)
        }
        NullKind::Custom => {
            Dataset::Binary(bernoulli_columns(cfg.n, cfg.theta.as_deref().unwrap(), rng))
        }
        kind => {
            let (lo, hi) = kind.theta_range().unwrap();
            let theta: Vec<f64> = (0..cfg.p).map(|_| rng.random_range(lo..=hi)).collect();
            // Row-major draws so that a dataset is a sequence of i.i.d. rows.
            let mut ones = vec![Vec::new(); cfg.p];
            for i in 0..cfg.n {
                for (j, &t) in theta.iter().enumerate() {
                    if rng.random_bool(t) {
                        ones[j].push(i);
                    }
                }
            }
            Dataset::Binary(BinaryMatrix::from_column_ones(cfg.n, &ones))
        }
    })
}

/// Structured sample with the hidden population of each row.
#[derive(Debug, Clone, PartialEq)]
pub struct Stratified {
    pub matrix: BinaryMatrix,
    pub labels: Vec<usize>,
}

pub fn gen_stratified(cfg: &ScenarioConfig, rng: &mut impl Rng) -> Result<Stratified> {
    cfg.validate()?;
    let (p, k_pops) = (cfg.p, cfg.sizes.len());
    let n_disc = cfg.n_discerning();
    let draw =
        |rng: &mut dyn rand::RngCore, (lo, hi): (f64, f64)| lo + (hi - lo) * rng.random::<f64>();
    // theta[k][j]
    let mut theta = vec![vec![0.0; p]; k_pops];
    for j in 0..n_disc {
        let reflect = cfg.mode == HeterogeneityMode::Balanced && j >= n_disc.div_ceil(2);
        for (k, row) in theta.iter_mut().enumerate() {
            let (lo, hi) = cfg.window(k);
            let w = if reflect {
                (1.0 - hi, 1.0 - lo)
            } else {
                (lo, hi)
            };
            row[j] = draw(rng, w);
        }
    }
    for j in n_disc..p {
        let t = draw(rng, (0.5 - cfg.epsilon, 0.5 + cfg.epsilon));
        theta.iter_mut().for_each(|row| row[j] = t);
    }
    let mut labels = Vec::with_capacity(cfg.n());
    let mut rows: Vec<Vec<u8>> = Vec::with_capacity(cfg.n());
    for (k, &size) in cfg.sizes.iter().enumerate() {
        for _ in 0..size {
            rows.push(theta[k].iter().map(|&t| rng.random_bool(t) as u8).collect());
            labels.push(k);
        }
    }
    let n_flip = (cfg.flip_frac * p as f64).round() as usize;
    let mut cols: Vec<usize> = (0..p).collect();
    cols.shuffle(rng);
    for &j in &cols[..n_flip] {
        rows.iter_mut().for_each(|r| r[j] ^= 1);
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(rng);
    let matrix =
        BinaryMatrix::from_rows(&order.iter().map(|&i| rows[i].clone()).collect::<Vec<_>>())?;
    let labels = order.iter().map(|&i| labels[i]).collect();
    Ok(Stratified { matrix, labels })
}

/// Either arm of a simulation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Model {
    Null(NullModelConfig),
    Scenario(ScenarioConfig),
}

impl Model {
    fn seed(&self) -> u64 {
        match self {
            Model::Null(c) => c.seed,
            Model::Scenario(c) => c.seed,
        }
    }

    pub fn generate(&self, rng: &mut impl Rng) -> Result<Dataset> {
        match self {
            Model::Null(c) => gen_null(c, rng),
            Model::Scenario(c) => Ok(Dataset::Binary(gen_stratified(c, rng)?.matrix)),
        }
    }

    /// Dataset of replicate `r`; frequencies are redrawn for every replicate.
    pub fn replicate(&self, r: u64) -> Result<Dataset> {
        self.generate(&mut ChaCha8Rng::seed_from_u64(mix_seed(self.seed(), r)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Auto,
    Permutation,
    ChiSquare,
    Normal,
    Bootstrap,
    TracyWidom,
}

impl std::str::FromStr for TestKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => TestKind::Auto,
            "perm" | "permutation" => TestKind::Permutation,
            "chisq" | "chi_square" => TestKind::ChiSquare,
            "normal" => TestKind::Normal,
            "boot" | "bootstrap" => TestKind::Bootstrap,
            "tw" | "tracy_widom" => TestKind::TracyWidom,
            other => return Err(Error::Invalid(format!("unknown test {other:?}"))),
        })
    }
}

/// Which test a simulation applies to each dataset, and how.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestSpec {
    pub kind: TestKind,
    pub resamples: usize,
    pub p_value_type: PValueType,
    pub auto_threshold: usize,
    /// Metric for real-valued data, which is always tested with one block per
    /// feature.
    pub metric: Metric,
}

impl TestSpec {
    pub fn new(kind: TestKind) -> Self {
        TestSpec {
            kind,
            resamples: DEFAULT_RESAMPLES,
            p_value_type: PValueType::Valid,
            auto_threshold: DEFAULT_AUTO_THRESHOLD,
            metric: Metric::EuclideanSq,
        }
    }

    pub fn with_resamples(mut self, r: usize) -> Self {
        self.resamples = r;
        self
    }

    pub fn run(&self, data: &Dataset, seed: u64) -> Result<(f64, Method)> {
        let plan = ResamplingPlan::new(self.resamples, seed, self.p_value_type)?;
        let result = match (self.kind, data) {
            (TestKind::TracyWidom, Dataset::Binary(m)) => tw_test(m)?.0,
            (TestKind::TracyWidom, Dataset::Numeric(m)) => tw_test_numeric(m)?.0,
            (TestKind::Bootstrap, Dataset::Binary(m)) => bootstrap_test(m, &plan)?,
            (TestKind::Bootstrap, Dataset::Numeric(_)) => {
                return Err(Error::Invalid(
                    "the bootstrap test needs binary data".into(),
                ))
            }
            (kind, data) => {
                let input = match data {
                    Dataset::Binary(m) => TestInput::Binary(m.clone()),
                    Dataset::Numeric(m) => TestInput::numeric_blocks(
                        m,
                        &BlockPartition::singletons(m.n_cols()),
                        self.metric,
                    )?,
                };
                match kind {
                    TestKind::Auto => auto_test(&input, &plan, self.auto_threshold)?,
                    TestKind::Permutation => permutation_test(&input, &plan)?,
                    TestKind::ChiSquare => chi_square_test(&input)?,
                    TestKind::Normal => normal_test(&input)?,
                    TestKind::Bootstrap | TestKind::TracyWidom => unreachable!(),
                }
            }
        };
        Ok((result.p_value, result.method))
    }
}

/// P-values of `test` on `reps` replicate datasets of `model`, in replicate order.
pub fn replicate_p_values(model: &Model, test: &TestSpec, reps: usize) -> Result<Vec<f64>> {
    (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let data = model.replicate(r)?;
            Ok(test
                .run(&data, mix_seed(mix_seed(model.seed(), r), 0x7e57))?
                .0)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub rate: f64,
    pub rejections: usize,
    pub reps: usize,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl RateEstimate {
    pub fn from_p_values(p: &[f64], alpha: f64) -> Self {
        let rejections = p.iter().filter(|&&v| v <= alpha).count();
        let (ci_lo, ci_hi) = clopper_pearson(rejections, p.len(), 0.95);
        RateEstimate {
            rate: rejections as f64 / p.len() as f64,
            rejections,
            reps: p.len(),
            ci_lo,
            ci_hi,
        }
    }
}

fn check_reps(reps: usize) -> Result<()> {
    if reps == 0 {
        Err(Error::Invalid("need at least one replicate".into()))
    } else {
        Ok(())
    }
}

/// Rejection rate at level `alpha` over `reps` null datasets.
pub fn estimate_fpr(
    cfg: &NullModelConfig,
    test: &TestSpec,
    alpha: f64,
    reps: usize,
) -> Result<RateEstimate> {
    check_reps(reps)?;
    let p = replicate_p_values(&Model::Null(cfg.clone()), test, reps)?;
    Ok(RateEstimate::from_p_values(&p, alpha))
}

/// Rejection rate at level `alpha` over `reps` structured datasets.
pub fn estimate_power(
    cfg: &ScenarioConfig,
    test: &TestSpec,
    alpha: f64,
    reps: usize,
) -> Result<RateEstimate> {
    check_reps(reps)?;
    let p = replicate_p_values(&Model::Scenario(cfg.clone()), test, reps)?;
    Ok(RateEstimate::from_p_values(&p, alpha))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocResult {
    pub auroc: f64,
    pub roc_points: Vec<(f64, f64)>,
    pub replicates: usize,
}

/// ROC curve from rejecting at `p <= alpha` as alpha sweeps over `[0, 1]`.
pub fn roc_from_p_values(null_p: &[f64], alt_p: &[f64]) -> RocResult {
    let mut thresholds: Vec<f64> = null_p.iter().chain(alt_p).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let mut null_sorted = null_p.to_vec();
    let mut alt_sorted = alt_p.to_vec();
    null_sorted.sort_by(f64::total_cmp);
    alt_sorted.sort_by(f64::total_cmp);
    let (n, m) = (null_p.len() as f64, alt_p.len() as f64);
    let mut points = vec![(0.0, 0.0)];
    for &t in &thresholds {
        let fpr = null_sorted.partition_point(|&v| v <= t) as f64 / n;
        let tpr = alt_sorted.partition_point(|&v| v <= t) as f64 / m;
        points.push((fpr, tpr));
    }
    if points.last() != Some(&(1.0, 1.0)) {
        points.push((1.0, 1.0));
    }
    let auroc = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum();
    RocResult {
        auroc,
        roc_points: points,
        replicates: null_p.len().min(alt_p.len()),
    }
}

/// Standard deviation of the AUROC when both arms come from the same law.
pub fn auroc_null_sd(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    ((n + m + 1.0) / (12.0 * n * m)).sqrt()
}

pub fn roc_auc(null: &Model, alt: &Model, test: &TestSpec, reps: usize) -> Result<RocResult> {
    check_reps(reps)?;
    let null_p = replicate_p_values(null, test, reps)?;
    let alt_p = replicate_p_values(alt, test, reps)?;
    Ok(roc_from_p_values(&null_p, &alt_p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn low_freq_grand_mean() {
        let cfg = NullModelConfig::new(NullKind::LowFreq, 200, 1000, 1);
        let Dataset::Binary(m) = gen_null(&cfg, &mut rng(1)).unwrap() else {
            panic!()
        };
        let mean = m.col_sums().iter().map(|&c| c as f64).sum::<f64>() / 200_000.0;
        let band = 3.0 * (0.15 * 0.85 / 200_000.0f64).sqrt();
        assert!((0.1 - band..=0.2 + band).contains(&mean), "{mean}");
        assert!((mean - 0.15).abs() < 0.01);
    }

    #[test]
    fn custom_zero_theta() {
        let cfg = NullModelConfig::custom(10, vec![0.0; 4], 0);
        let Dataset::Binary(m) = gen_null(&cfg, &mut rng(0)).unwrap() else {
            panic!()
        };
        assert!(m.col_sums().iter().all(|&c| c == 0));
        assert!(NullModelConfig::custom(10, vec![1.5], 0)
            .validate()
            .is_err());
    }

    #[test]
    fn gaussian_mixture_quadrants() {
        let cfg = NullModelConfig::new(NullKind::MixtureGaussian, 4000, 2, 2);
        let Dataset::Numeric(m) = gen_null(&cfg, &mut rng(2)).unwrap() else {
            panic!()
        };
        let mut counts = [0usize; 4];
        for i in 0..4000 {
            let q = (m.get(i, 0) > 0.0) as usize * 2 + (m.get(i, 1) > 0.0) as usize;
            counts[q] += 1;
        }
        let sd = (4000.0 * 0.25 * 0.75f64).sqrt();
        for c in counts {
            assert!((c as f64 - 1000.0).abs() < 4.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn default_windows_separate_by_offset() {
        let cfg = ScenarioConfig::new(vec![25, 25], 0.2, 4000, 0);
        let s = gen_stratified(&cfg, &mut rng(5)).unwrap();
        let mut means = [0.0; 2];
        for (i, &k) in s.labels.iter().enumerate() {
            means[k] += s.matrix.row(i).iter().map(|&x| x as f64).sum::<f64>() / (25.0 * 4000.0);
        }
        assert!((means[1] - means[0] - 0.15).abs() < 0.01, "{means:?}");
        assert_eq!(cfg.window(2), (0.475 - 0.2, 0.475 + 0.2));
    }

    #[test]
    fn window_validation() {
        assert!(ScenarioConfig::new(vec![5, 5], 0.45, 10, 0)
            .validate()
            .is_err());
        assert!(ScenarioConfig::new(vec![5, 5], 0.4, 10, 0)
            .validate()
            .is_ok());
        let mut c = ScenarioConfig::new(vec![5, 5], 0.1, 10, 0);
        c.windows = Some(vec![(0.1, 0.2)]);
        assert!(c.validate().is_err());
    }

    #[test]
    fn no_discerning_features_share_frequencies() {
        let mut cfg = ScenarioConfig::new(vec![300, 300], 0.2, 200, 0);
        cfg.discern_frac = 0.0;
        let s = gen_stratified(&cfg, &mut rng(3)).unwrap();
        let mut sums = [vec![0.0; 200], vec![0.0; 200]];
        for (i, &k) in s.labels.iter().enumerate() {
            for (j, x) in s.matrix.row(i).into_iter().enumerate() {
                sums[k][j] += x as f64 / 300.0;
            }
        }
        let max_gap = (0..200)
            .map(|j| (sums[0][j] - sums[1][j]).abs())
            .fold(0.0, f64::max);
        assert!(max_gap < 0.15, "{max_gap}");
    }

    #[test]
    fn balanced_mode_keeps_row_sums_level() {
        let mut cfg = ScenarioConfig::new(vec![200, 200], 0.05, 400, 0);
        let row_gap = |cfg: &ScenarioConfig| {
            let s = gen_stratified(cfg, &mut rng(8)).unwrap();
            let mut sums = [0.0; 2];
            for (i, &k) in s.labels.iter().enumerate() {
                sums[k] += s.matrix.row(i).iter().map(|&x| x as f64).sum::<f64>() / 200.0;
            }
            (sums[1] - sums[0]).abs()
        };
        assert!(row_gap(&cfg) > 50.0);
        cfg.mode = HeterogeneityMode::Balanced;
        assert!(row_gap(&cfg) < 5.0);
    }

    #[test]
    fn full_flip_complements_every_column() {
        let base = ScenarioConfig::new(vec![6, 6], 0.2, 30, 0);
        let mut flipped = base.clone();
        flipped.flip_frac = 1.0;
        let a = gen_stratified(&base, &mut rng(4)).unwrap();
        let b = gen_stratified(&flipped, &mut rng(4)).unwrap();
        // The flip consumes a column shuffle, so compare up to row order.
        let mut ra: Vec<Vec<u8>> = (0..12)
            .map(|i| a.matrix.row(i).iter().map(|x| 1 - x).collect())
            .collect();
        let mut rb: Vec<Vec<u8>> = (0..12).map(|i| b.matrix.row(i)).collect();
        ra.sort();
        rb.sort();
        assert_eq!(ra, rb);
    }

    #[test]
    fn deterministic_datasets() {
        let m = Model::Scenario(ScenarioConfig::new(vec![10, 15], 0.2, 40, 9));
        assert_eq!(m.replicate(3).unwrap(), m.replicate(3).unwrap());
        assert_ne!(m.replicate(3).unwrap(), m.replicate(4).unwrap());
    }

    #[test]
    fn trivial_levels() {
        let cfg = NullModelConfig::new(NullKind::VaryingFreq, 20, 30, 1);
        let spec = TestSpec::new(TestKind::Permutation).with_resamples(99);
        assert_eq!(estimate_fpr(&cfg, &spec, 0.0, 20).unwrap().rate, 0.0);
        assert_eq!(estimate_fpr(&cfg, &spec, 1.0, 20).unwrap().rate, 1.0);
        assert!(estimate_fpr(&cfg, &spec, 0.05, 0).is_err());
    }

    #[test]
    fn roc_shape() {
        let r = roc_from_p_values(&[0.5, 0.9, 0.2], &[0.01, 0.02, 0.6]);
        assert_eq!(r.roc_points.first(), Some(&(0.0, 0.0)));
        assert_eq!(r.roc_points.last(), Some(&(1.0, 1.0)));
        assert!(r
            .roc_points
            .windows(2)
            .all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
        // Mann-Whitney: 7 of 9 (alt, null) pairs ordered correctly.
        assert!((r.auroc - 7.0 / 9.0).abs() < 1e-12);
        let tied = roc_from_p_values(&[0.5, 0.5], &[0.5, 0.5]);
        assert!((tied.auroc - 0.5).abs() < 1e-12);
    }

    #[test]
    fn identical_arms_give_chance_auroc() {
        let a = Model::Null(NullModelConfig::new(NullKind::VaryingFreq, 30, 60, 1));
        let b = Model::Null(NullModelConfig::new(NullKind::VaryingFreq, 30, 60, 2));
        let r = roc_auc(&a, &b, &TestSpec::new(TestKind::ChiSquare), 200).unwrap();
        assert!(
            (r.auroc - 0.5).abs() < 3.0 * auroc_null_sd(200, 200),
            "{}",
            r.auroc
        );
    }
}
