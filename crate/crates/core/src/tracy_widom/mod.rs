//! Largest-eigenvalue test against the Tracy-Widom law.

mod airy;
mod f1;

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

pub use f1::{f1_cdf, TracyWidomTable, TABLE_HI, TABLE_LO, TABLE_NODES};

use crate::error::{Error, Result};
use crate::model::{BinaryMatrix, Method, NumericMatrix, TestResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwStatistic {
    pub lambda_max: f64,
    pub normalized: f64,
    /// Columns left after dropping constant ones.
    pub p_effective: usize,
}

/// Center each column by its mean and scale by its population standard
/// deviation `sqrt(f (1 - f))`, `f = c_j / N`. Constant columns are dropped.
pub fn center_scale(m: &BinaryMatrix) -> Result<NumericMatrix> {
    standardize(&m.to_numeric())
}

/// Column standardization for real-valued data, same convention as
/// [`center_scale`].
pub fn standardize(m: &NumericMatrix) -> Result<NumericMatrix> {
    let (n, p) = (m.n_rows(), m.n_cols());
    let mut keep = Vec::new();
    let mut stats = Vec::new();
    for j in 0..p {
        let mean = (0..n).map(|i| m.get(i, j)).sum::<f64>() / n as f64;
        let var = (0..n).map(|i| (m.get(i, j) - mean).powi(2)).sum::<f64>() / n as f64;
        if var > 0.0 {
            keep.push(j);
            stats.push((mean, var.sqrt()));
        }
    }
    if keep.is_empty() {
        return Err(Error::NoInformativeColumns);
    }
    let mut data = Vec::with_capacity(n * keep.len());
    for i in 0..n {
        for (&j, &(mean, sd)) in keep.iter().zip(&stats) {
            data.push((m.get(i, j) - mean) / sd);
        }
    }
    NumericMatrix::new(n, keep.len(), data)
}

/// `(lambda - mu) / sigma` with `mu = (sqrt(N-1) + sqrt(P))^2` and
/// `sigma = (sqrt(N-1) + sqrt(P)) (1/sqrt(N-1) + 1/sqrt(P))^(1/3)`.
pub fn tw_normalize(lambda_max: f64, n: usize, p: usize) -> f64 {
    let a = ((n - 1) as f64).sqrt();
    let b = (p as f64).sqrt();
    let mu = (a + b) * (a + b);
    let sigma = (a + b) * (1.0 / a + 1.0 / b).cbrt();
    (lambda_max - mu) / sigma
}

/// Largest eigenvalue of the `N x N` Gram matrix `X X^T`.
pub fn gram_lambda_max(x: &NumericMatrix) -> f64 {
    let xm = DMatrix::from_row_slice(x.n_rows(), x.n_cols(), x.data());
    let gram = &xm * xm.transpose();
    SymmetricEigen::new(gram).eigenvalues.max().max(0.0)
}

/// Two-sided p-value `2 min(F1(z), 1 - F1(z))`.
pub fn tw_p_value(z: f64) -> f64 {
    let f = f1_cdf(z);
    (2.0 * f.min(1.0 - f)).clamp(0.0, 1.0)
}

fn run(x: NumericMatrix, start: Instant) -> Result<(TestResult, TwStatistic)> {
    if x.n_rows() < 2 {
        return Err(Error::Invalid(format!(
            "need at least 2 observations, got {}",
            x.n_rows()
        )));
    }
    let lambda_max = gram_lambda_max(&x);
    let normalized = tw_normalize(lambda_max, x.n_rows(), x.n_cols());
    let stat = TwStatistic {
        lambda_max,
        normalized,
        p_effective: x.n_cols(),
    };
    let result = TestResult {
        statistic: normalized,
        p_value: tw_p_value(normalized),
        method: Method::TracyWidom,
        resamples: None,
        seed: None,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok((result, stat))
}

pub fn tw_test(m: &BinaryMatrix) -> Result<(TestResult, TwStatistic)> {
    let start = Instant::now();
    run(center_scale(m)?, start)
}

pub fn tw_test_numeric(m: &NumericMatrix) -> Result<(TestResult, TwStatistic)> {
    let start = Instant::now();
    run(standardize(m)?, start)
}

/// Write the F1 table as `x<TAB>F1(x)` lines.
pub fn write_f1_table(out: &mut impl Write) -> std::io::Result<()> {
    let t = TracyWidomTable::global();
    writeln!(out, "x\tf1")?;
    for (x, f) in t.grid().iter().zip(t.values()) {
        writeln!(out, "{x}\t{f:e}")?;
    }
    Ok(())
}

pub fn dump_f1_table(path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f =
        std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    write_f1_table(&mut f)
        .and_then(|_| f.flush())
        .map_err(|e| Error::io(path, e))
}
