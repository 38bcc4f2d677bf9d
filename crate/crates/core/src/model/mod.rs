//! Domain types shared across the crate: bit-packed binary matrices, real
//! matrices, feature-block partitions and test results.

pub(crate) mod io;

pub use io::{
    load_block_partition, load_matrix, write_block_partition, write_matrix, MatrixFormat,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) const WORD_BITS: usize = 64;

pub(crate) fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

/// Observation-by-feature 0/1 matrix. Each row is packed into `u64` words so
/// that Hamming distances reduce to XOR and popcount; bits beyond the last
/// feature are always zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMatrix {
    n_rows: usize,
    n_cols: usize,
    words_per_row: usize,
    bits: Vec<u64>,
    col_sums: Vec<u32>,
}

impl BinaryMatrix {
    /// All-zero matrix.
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        let words_per_row = words_for(n_cols);
        BinaryMatrix {
            n_rows,
            n_cols,
            words_per_row,
            bits: vec![0; n_rows * words_per_row],
            col_sums: vec![0; n_cols],
        }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut m = BinaryMatrix::zeros(n_rows, n_cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {n_cols}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => m.set(i, j),
                    other => {
                        return Err(Error::Invalid(format!(
                            "entry ({i}, {j}) is {other}, expected 0 or 1"
                        )))
                    }
                }
            }
        }
        Ok(m)
    }

    /// Build column by column; `ones[j]` lists the rows holding a 1 in column `j`.
    pub(crate) fn from_column_ones(n_rows: usize, ones: &[Vec<usize>]) -> Self {
        let mut m = BinaryMatrix::zeros(n_rows, ones.len());
        for (j, rows) in ones.iter().enumerate() {
            for &i in rows {
                m.set(i, j);
            }
        }
        m
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize) {
        let w = &mut self.bits[i * self.words_per_row + j / WORD_BITS];
        let mask = 1u64 << (j % WORD_BITS);
        if *w & mask == 0 {
            *w |= mask;
            self.col_sums[j] += 1;
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words_per_row + j / WORD_BITS] >> (j % WORD_BITS) & 1 == 1
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn col_sums(&self) -> &[u32] {
        &self.col_sums
    }

    pub(crate) fn words_per_row(&self) -> usize {
        self.words_per_row
    }

    #[inline]
    pub(crate) fn row_words(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words_per_row..(i + 1) * self.words_per_row]
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.bits
    }

    /// Same shape with new packed rows whose column sums equal the current ones.
    pub(crate) fn replace_words(&mut self, words: Vec<u64>) {
        debug_assert_eq!(words.len(), self.bits.len());
        self.bits = words;
    }

    pub fn row(&self, i: usize) -> Vec<u8> {
        (0..self.n_cols).map(|j| self.get(i, j) as u8).collect()
    }

    /// Matrix with its rows reordered so that row `i` of the result is row
    /// `order[i]` of `self`.
    pub fn permute_rows(&self, order: &[usize]) -> BinaryMatrix {
        assert_eq!(order.len(), self.n_rows);
        let mut bits = Vec::with_capacity(self.bits.len());
        for &src in order {
            bits.extend_from_slice(self.row_words(src));
        }
        BinaryMatrix {
            bits,
            ..self.clone()
        }
    }

    /// Complement column `j` in place (x -> 1 - x).
    pub fn flip_column(&mut self, j: usize) {
        let mask = 1u64 << (j % WORD_BITS);
        for i in 0..self.n_rows {
            self.bits[i * self.words_per_row + j / WORD_BITS] ^= mask;
        }
        self.col_sums[j] = self.n_rows as u32 - self.col_sums[j];
    }

    pub fn to_numeric(&self) -> NumericMatrix {
        let mut data = Vec::with_capacity(self.n_rows * self.n_cols);
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                data.push(if self.get(i, j) { 1.0 } else { 0.0 });
            }
        }
        NumericMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            data,
        }
    }
}

pub(crate) fn require_pairs(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::Invalid(format!(
            "need at least 2 observations for pairwise distances, got {n}"
        )))
    } else {
        Ok(())
    }
}

/// Row-major real matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl NumericMatrix {
    pub fn new(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::Dimension(format!(
                "{} values for a {n_rows}x{n_cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!(
                "entry ({}, {}) is not finite",
                pos / n_cols.max(1),
                pos % n_cols.max(1)
            )));
        }
        Ok(NumericMatrix {
            n_rows,
            n_cols,
            data,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != n_cols) {
            return Err(Error::Dimension(format!(
                "row {i} has {} entries, expected {n_cols}",
                rows[i].len()
            )));
        }
        NumericMatrix::new(rows.len(), n_cols, rows.concat())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_binary(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Entry is 1 iff the value is strictly greater than `threshold`.
    pub fn binarize(&self, threshold: f64) -> BinaryMatrix {
        let mut m = BinaryMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            for (j, &v) in self.row(i).iter().enumerate() {
                if v > threshold {
                    m.set(i, j);
                }
            }
        }
        m
    }

    /// Keep only the listed columns, in the given order.
    pub fn select_columns(&self, keep: &[usize]) -> NumericMatrix {
        let mut data = Vec::with_capacity(self.n_rows * keep.len());
        for i in 0..self.n_rows {
            let row = self.row(i);
            data.extend(keep.iter().map(|&j| row[j]));
        }
        NumericMatrix {
            n_rows: self.n_rows,
            n_cols: keep.len(),
            data,
        }
    }

    /// Indices of columns whose folded frequency min(f, 1 - f) is at least
    /// `min_freq`, where f is the column mean divided by `ploidy` (1 for 0/1
    /// data, 2 for allele dosages).
    pub fn frequency_filter(&self, min_freq: f64, ploidy: f64) -> Vec<usize> {
        (0..self.n_cols)
            .filter(|&j| {
                let mean =
                    (0..self.n_rows).map(|i| self.get(i, j)).sum::<f64>() / self.n_rows as f64;
                let f = mean / ploidy;
                f.min(1.0 - f) >= min_freq
            })
            .collect()
    }
}

/// Surjective assignment of features to `n_blocks` blocks, ids `0..n_blocks`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    assignment: Vec<usize>,
    n_blocks: usize,
}

impl BlockPartition {
    /// Validate an assignment whose ids must already cover `0..B` exactly.
    pub fn new(assignment: Vec<usize>) -> Result<Self> {
        let n_blocks = assignment.iter().max().map_or(0, |&m| m + 1);
        let mut seen = vec![false; n_blocks];
        for &b in &assignment {
            seen[b] = true;
        }
        if let Some(b) = seen.iter().position(|s| !s) {
            return Err(Error::Invalid(format!("block {b} has no features")));
        }
        if assignment.is_empty() {
            return Err(Error::Invalid("partition covers no features".into()));
        }
        Ok(BlockPartition {
            assignment,
            n_blocks,
        })
    }

    /// Accept arbitrary block labels and relabel them to `0..B` in ascending
    /// label order.
    pub fn from_labels(labels: &[u64]) -> Result<Self> {
        let mut uniq: Vec<u64> = labels.to_vec();
        uniq.sort_unstable();
        uniq.dedup();
        let assignment = labels
            .iter()
            .map(|l| uniq.binary_search(l).expect("label present"))
            .collect();
        BlockPartition::new(assignment)
    }

    /// Every feature in its own block.
    pub fn singletons(p: usize) -> Self {
        BlockPartition {
            assignment: (0..p).collect(),
            n_blocks: p,
        }
    }

    /// Contiguous blocks of the given sizes.
    pub fn contiguous(sizes: &[usize]) -> Result<Self> {
        if sizes.contains(&0) {
            return Err(Error::Invalid("empty block in contiguous partition".into()));
        }
        let assignment = sizes
            .iter()
            .enumerate()
            .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
            .collect();
        BlockPartition::new(assignment)
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn n_features(&self) -> usize {
        self.assignment.len()
    }

    /// Feature indices of each block, in feature order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_blocks];
        for (p, &b) in self.assignment.iter().enumerate() {
            out[b].push(p);
        }
        out
    }

    /// Partition restricted to the kept features (given as original indices,
    /// ascending); blocks left empty disappear and the rest are relabeled.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        let labels: Vec<u64> = keep.iter().map(|&p| self.assignment[p] as u64).collect();
        BlockPartition::from_labels(&labels)
    }
}

/// Which null approximation produced a p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Permutation,
    ChiSquare,
    Normal,
    Bootstrap,
    TracyWidom,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::Permutation => "permutation",
            Method::ChiSquare => "chi_square",
            Method::Normal => "normal",
            Method::Bootstrap => "bootstrap",
            Method::TracyWidom => "tracy_widom",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: Method,
    /// Number of resampled datasets, for the resampling methods.
    pub resamples: Option<usize>,
    pub seed: Option<u64>,
    /// Wall time of the statistical kernel in milliseconds.
    pub elapsed_ms: f64,
}

impl TestResult {
    /// Same result with the timing zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> TestResult {
        TestResult {
            elapsed_ms: 0.0,
            ..self.clone()
        }
    }
}
