//! Wall-clock comparison of the permutation and chi-square engines on
//! simulated null data. Only the test itself is timed.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{chi_square_test, normal_test};
use crate::error::{Error, Result};
use crate::sim::{gen_null, Dataset, NullKind, NullModelConfig};
use crate::vstat::{permutation_test, PValueType, ResamplingPlan, TestInput};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub n: usize,
    pub p: usize,
    pub resamples: usize,
    /// Timed runs per engine; the mean is reported.
    pub repeats: usize,
    pub threads: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            n: 50,
            p: 500,
            resamples: 5000,
            repeats: 3,
            threads: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub config: BenchConfig,
    pub permutation_ms: f64,
    pub chi_square_ms: f64,
    pub normal_ms: f64,
    /// Permutation time over chi-square time.
    pub speedup: f64,
}

fn mean_ms(repeats: usize, mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    let mut total = 0.0;
    for _ in 0..repeats {
        let start = Instant::now();
        f()?;
        total += start.elapsed().as_secs_f64() * 1e3;
    }
    Ok(total / repeats as f64)
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchResult> {
    if cfg.repeats == 0 || cfg.threads == 0 {
        return Err(Error::Invalid(
            "repeats and threads must be positive".into(),
        ));
    }
    let null = NullModelConfig::new(NullKind::VaryingFreq, cfg.n, cfg.p, cfg.seed);
    let Dataset::Binary(m) = gen_null(&null, &mut ChaCha8Rng::seed_from_u64(cfg.seed))? else {
        unreachable!()
    };
    let input = TestInput::Binary(m);
    let plan = ResamplingPlan::new(cfg.resamples, cfg.seed, PValueType::Valid)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    pool.install(|| {
        let permutation_ms = mean_ms(cfg.repeats, || permutation_test(&input, &plan).map(drop))?;
        let chi_square_ms = mean_ms(cfg.repeats, || chi_square_test(&input).map(drop))?;
        let normal_ms = mean_ms(cfg.repeats, || normal_test(&input).map(drop))?;
        Ok(BenchResult {
            config: *cfg,
            permutation_ms,
            chi_square_ms,
            normal_ms,
            speedup: permutation_ms / chi_square_ms,
        })
    })
}
