//! Pairwise distance matrices, per metric and per feature block.
//!
//! A [`BlockDistanceSet`] caches one distance matrix per block. Block
//! resampling only relabels these matrices, so distances are never recomputed
//! from raw features inside the resampling loop.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::io::{is_skippable, parse_cell, read_text, split_cells};
use crate::model::{BinaryMatrix, BlockPartition, NumericMatrix};

const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// Number of coordinates that differ.
    Hamming,
    /// Sum of absolute coordinate differences.
    Manhattan,
    /// Sum of squared coordinate differences.
    EuclideanSq,
}

impl Metric {
    #[inline]
    fn coord(self, a: f64, b: f64) -> f64 {
        match self {
            Metric::Hamming => (a != b) as u8 as f64,
            Metric::Manhattan => (a - b).abs(),
            Metric::EuclideanSq => (a - b) * (a - b),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hamming" => Ok(Metric::Hamming),
            "manhattan" => Ok(Metric::Manhattan),
            "euclidean-sq" | "euclidean_sq" => Ok(Metric::EuclideanSq),
            other => Err(Error::Invalid(format!("unknown metric {other:?}"))),
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Metric::Hamming => "hamming",
            Metric::Manhattan => "manhattan",
            Metric::EuclideanSq => "euclidean-sq",
        })
    }
}

/// Dense symmetric `n x n` matrix with zero diagonal and non-negative entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    /// Validate a full row-major matrix. Symmetry is checked to a relative
    /// tolerance of 1e-9 and the upper triangle is then mirrored.
    pub fn from_full(n: usize, mut d: Vec<f64>) -> Result<Self> {
        if d.len() != n * n {
            return Err(Error::Dimension(format!(
                "{} values for a {n}x{n} matrix",
                d.len()
            )));
        }
        for i in 0..n {
            if d[i * n + i] != 0.0 {
                return Err(Error::Invalid(format!(
                    "nonzero diagonal entry at ({i}, {i})"
                )));
            }
            for j in 0..n {
                let v = d[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Invalid(format!(
                        "entry ({i}, {j}) = {v} is negative or not finite"
                    )));
                }
            }
            for j in i + 1..n {
                let (a, b) = (d[i * n + j], d[j * n + i]);
                if (a - b).abs() > SYMMETRY_TOL * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::Invalid(format!(
                        "asymmetric entries ({i}, {j}) = {a} and ({j}, {i}) = {b}"
                    )));
                }
                d[j * n + i] = a;
            }
        }
        Ok(DistanceMatrix { n, d })
    }

    pub(crate) fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        let mut d = vec![0.0; n * n];
        d.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
            for (j, slot) in row.iter_mut().enumerate() {
                if i != j {
                    *slot = if i < j { f(i, j) } else { f(j, i) };
                }
            }
        });
        DistanceMatrix { n, d }
    }

    pub fn zeros(n: usize) -> Self {
        DistanceMatrix {
            n,
            d: vec![0.0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.d
    }

    /// Upper-triangle entries in (0,1), (0,2), ..., (n-2,n-1) order.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * self.n.saturating_sub(1) / 2);
        for i in 0..self.n {
            out.extend_from_slice(&self.d[i * self.n + i + 1..(i + 1) * self.n]);
        }
        out
    }

    /// Matrix `e` with `e[i][j] = self[perm[i]][perm[j]]`.
    pub fn relabel(&self, perm: &[usize]) -> DistanceMatrix {
        DistanceMatrix::from_fn(self.n, |i, j| self.get(perm[i], perm[j]))
    }

    pub fn scaled(&self, k: f64) -> DistanceMatrix {
        DistanceMatrix {
            n: self.n,
            d: self.d.iter().map(|v| v * k).collect(),
        }
    }

    pub fn add(&self, other: &DistanceMatrix) -> Result<DistanceMatrix> {
        if self.n != other.n {
            return Err(Error::Dimension(format!(
                "{} vs {} observations",
                self.n, other.n
            )));
        }
        Ok(DistanceMatrix {
            n: self.n,
            d: self.d.iter().zip(&other.d).map(|(a, b)| a + b).collect(),
        })
    }
}

/// Hamming distances between packed rows.
pub fn hamming_pairwise(m: &BinaryMatrix) -> DistanceMatrix {
    DistanceMatrix::from_fn(m.n_rows(), |i, j| row_hamming(m, i, j) as f64)
}

#[inline]
pub(crate) fn row_hamming(m: &BinaryMatrix, i: usize, j: usize) -> u32 {
    m.row_words(i)
        .iter()
        .zip(m.row_words(j))
        .map(|(a, b)| (a ^ b).count_ones())
        .sum()
}

pub fn manhattan_pairwise(m: &NumericMatrix) -> DistanceMatrix {
    metric_pairwise(m, Metric::Manhattan)
}

pub fn metric_pairwise(m: &NumericMatrix, metric: Metric) -> DistanceMatrix {
    DistanceMatrix::from_fn(m.n_rows(), |i, j| {
        m.row(i)
            .iter()
            .zip(m.row(j))
            .map(|(&a, &b)| metric.coord(a, b))
            .sum()
    })
}

/// One cached distance matrix per feature block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDistanceSet {
    blocks: Vec<DistanceMatrix>,
    /// Features per block, when the set was built from raw data.
    block_sizes: Option<Vec<usize>>,
}

impl BlockDistanceSet {
    pub fn new(blocks: Vec<DistanceMatrix>, block_sizes: Option<Vec<usize>>) -> Result<Self> {
        let Some(first) = blocks.first() else {
            return Err(Error::Invalid(
                "block distance set needs at least one block".into(),
            ));
        };
        let n = first.n();
        if let Some(b) = blocks.iter().position(|d| d.n() != n) {
            return Err(Error::Dimension(format!(
                "block {b} has {} observations, block 0 has {n}",
                blocks[b].n()
            )));
        }
        if let Some(s) = &block_sizes {
            if s.len() != blocks.len() {
                return Err(Error::Dimension(
                    "block_sizes length differs from block count".into(),
                ));
            }
        }
        Ok(BlockDistanceSet {
            blocks,
            block_sizes,
        })
    }

    pub fn blocks(&self) -> &[DistanceMatrix] {
        &self.blocks
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn n(&self) -> usize {
        self.blocks[0].n()
    }

    pub fn block_sizes(&self) -> Option<&[usize]> {
        self.block_sizes.as_deref()
    }

    /// Whether every entry is an integer small enough that block sums of
    /// relabeled matrices are exact in double precision.
    pub fn is_integral(&self) -> bool {
        let limit = 2f64.powi(52) / self.blocks.len() as f64;
        self.blocks
            .iter()
            .all(|b| b.as_slice().iter().all(|&d| d.fract() == 0.0 && d <= limit))
    }

    /// Total feature count, when known.
    pub fn n_features(&self) -> Option<usize> {
        self.block_sizes.as_ref().map(|s| s.iter().sum())
    }

    /// Entrywise sum of all blocks.
    pub fn total(&self) -> DistanceMatrix {
        let n = self.n();
        let mut d = vec![0.0; n * n];
        for b in &self.blocks {
            for (acc, v) in d.iter_mut().zip(b.as_slice()) {
                *acc += v;
            }
        }
        DistanceMatrix { n, d }
    }

    pub fn scaled(&self, k: f64) -> BlockDistanceSet {
        BlockDistanceSet {
            blocks: self.blocks.iter().map(|b| b.scaled(k)).collect(),
            block_sizes: self.block_sizes.clone(),
        }
    }
}

/// Hamming distances restricted to each block of a binary matrix.
pub fn block_distances_binary(m: &BinaryMatrix, part: &BlockPartition) -> Result<BlockDistanceSet> {
    check_partition(m.n_cols(), part)?;
    let members = part.members();
    let blocks = members
        .par_iter()
        .map(|cols| {
            let ones: Vec<Vec<usize>> = cols
                .iter()
                .map(|&c| (0..m.n_rows()).filter(|&i| m.get(i, c)).collect())
                .collect();
            hamming_pairwise(&BinaryMatrix::from_column_ones(m.n_rows(), &ones))
        })
        .collect();
    BlockDistanceSet::new(blocks, Some(members.iter().map(Vec::len).collect()))
}

/// Distances under `metric` restricted to each block of a real matrix.
pub fn block_distances(
    m: &NumericMatrix,
    part: &BlockPartition,
    metric: Metric,
) -> Result<BlockDistanceSet> {
    check_partition(m.n_cols(), part)?;
    let members = part.members();
    let blocks = members
        .par_iter()
        .map(|cols| metric_pairwise(&m.select_columns(cols), metric))
        .collect();
    BlockDistanceSet::new(blocks, Some(members.iter().map(Vec::len).collect()))
}

fn check_partition(p: usize, part: &BlockPartition) -> Result<()> {
    if part.n_features() != p {
        return Err(Error::Dimension(format!(
            "partition covers {} features, matrix has {p}",
            part.n_features()
        )));
    }
    Ok(())
}

/// Read an `n x n` distance matrix from delimited text.
pub fn load_distance_matrix(path: impl AsRef<Path>, n: Option<usize>) -> Result<DistanceMatrix> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut vals = Vec::new();
    let mut rows = 0;
    let mut width = None;
    for (idx, line) in text.lines().enumerate() {
        if is_skippable(line) {
            continue;
        }
        let cells = split_cells(line.trim_end_matches('\r'));
        if *width.get_or_insert(cells.len()) != cells.len() {
            return Err(Error::format(path, idx + 1, 0, "ragged row"));
        }
        for (c, cell) in cells.iter().enumerate() {
            vals.push(parse_cell(path, idx + 1, c + 1, cell)?);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::format(path, 0, 0, "no rows"));
    }
    if width != Some(rows) {
        return Err(Error::format(
            path,
            0,
            0,
            format!(
                "distance matrix is {rows}x{} (must be square)",
                width.unwrap_or(0)
            ),
        ));
    }
    if let Some(n) = n {
        if n != rows {
            return Err(Error::format(
                path,
                0,
                0,
                format!("expected {n} observations, found {rows}"),
            ));
        }
    }
    DistanceMatrix::from_full(rows, vals).map_err(|e| Error::format(path, 0, 0, e.to_string()))
}

/// Load one matrix per path, in block order.
pub fn load_block_distance_set(paths: &[PathBuf], n: Option<usize>) -> Result<BlockDistanceSet> {
    let mut blocks = Vec::with_capacity(paths.len());
    let mut expect = n;
    for p in paths {
        let d = load_distance_matrix(p, expect)?;
        expect = Some(d.n());
        blocks.push(d);
    }
    BlockDistanceSet::new(blocks, None)
}

/// Read a manifest listing per-block matrix paths (relative paths resolve
/// against the manifest's directory) and load the set.
pub fn load_distance_manifest(
    manifest: impl AsRef<Path>,
    n: Option<usize>,
) -> Result<BlockDistanceSet> {
    let manifest = manifest.as_ref();
    let base = manifest.parent().unwrap_or_else(|| Path::new("."));
    let text = read_text(manifest)?;
    let paths: Vec<PathBuf> = text
        .lines()
        .filter(|l| !is_skippable(l))
        .map(|l| {
            let p = PathBuf::from(l.trim());
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        })
        .collect();
    if paths.is_empty() {
        return Err(Error::format(
            manifest,
            0,
            0,
            "manifest lists no distance matrices",
        ));
    }
    load_block_distance_set(&paths, n)
}

pub fn write_distance_matrix(path: impl AsRef<Path>, d: &DistanceMatrix) -> Result<()> {
    let path = path.as_ref();
    let n = d.n();
    let mut out = String::with_capacity(n * n * 4);
    for i in 0..n {
        for j in 0..n {
            if j > 0 {
                out.push('\t');
            }
            out.push_str(&format!("{}", d.get(i, j)));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Write `block_<b>.tsv` files plus `manifest.txt` into `dir`; returns the
/// manifest path.
pub fn write_block_distance_set(dir: impl AsRef<Path>, set: &BlockDistanceSet) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = String::new();
    for (b, d) in set.blocks().iter().enumerate() {
        let name = format!("block_{b}.tsv");
        write_distance_matrix(dir.join(&name), d)?;
        manifest.push_str(&name);
        manifest.push('\n');
    }
    let path = dir.join("manifest.txt");
    fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_binary(n: usize, p: usize, seed: u64) -> (Vec<Vec<u8>>, BinaryMatrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<u8>> = (0..n)
            .map(|_| (0..p).map(|_| rng.random_range(0..2u8)).collect())
            .collect();
        let m = BinaryMatrix::from_rows(&rows).unwrap();
        (rows, m)
    }

    #[test]
    fn hamming_small_cases() {
        let m = BinaryMatrix::from_rows(&[vec![0, 0, 1, 1], vec![0, 1, 0, 1], vec![0, 0, 1, 1]])
            .unwrap();
        let d = hamming_pairwise(&m);
        assert_eq!(d.get(0, 1), 2.0);
        assert_eq!(d.get(0, 2), 0.0);
        assert_eq!(d.get(1, 0), 2.0);
    }

    #[test]
    fn hamming_matches_naive_with_partial_word() {
        let (rows, m) = random_binary(30, 257, 3);
        let d = hamming_pairwise(&m);
        for i in 0..30 {
            for j in 0..30 {
                let naive = rows[i].iter().zip(&rows[j]).filter(|(a, b)| a != b).count();
                assert_eq!(d.get(i, j), naive as f64);
            }
        }
    }

    #[test]
    fn manhattan_cases() {
        let m = NumericMatrix::from_rows(&[vec![0.0, 2.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(manhattan_pairwise(&m).get(0, 1), 3.0);

        let (_, b) = random_binary(12, 40, 5);
        assert_eq!(manhattan_pairwise(&b.to_numeric()), hamming_pairwise(&b));

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let vals: Vec<f64> = (0..500).map(|_| rng.random_range(0..3u8) as f64).collect();
        let m = NumericMatrix::new(10, 50, vals.clone()).unwrap();
        let d = manhattan_pairwise(&m);
        for i in 0..10 {
            for j in 0..10 {
                let naive: f64 = (0..50)
                    .map(|p| (vals[i * 50 + p] - vals[j * 50 + p]).abs())
                    .sum();
                assert_eq!(d.get(i, j), naive);
            }
        }
    }

    #[test]
    fn block_additivity_and_edge_partitions() {
        let (_, m) = random_binary(9, 4, 1);
        let part = BlockPartition::new(vec![0, 0, 1, 1]).unwrap();
        let set = block_distances_binary(&m, &part).unwrap();
        assert_eq!(set.total(), hamming_pairwise(&m));

        let one = block_distances_binary(&m, &BlockPartition::new(vec![0; 4]).unwrap()).unwrap();
        assert_eq!(one.n_blocks(), 1);
        assert_eq!(one.blocks()[0], hamming_pairwise(&m));

        let single = block_distances_binary(&m, &BlockPartition::singletons(4)).unwrap();
        for b in single.blocks() {
            assert!(b.as_slice().iter().all(|&v| v == 0.0 || v == 1.0));
        }

        let bad = BlockPartition::new(vec![0, 1, 1]).unwrap();
        assert!(block_distances_binary(&m, &bad).is_err());
    }

    #[test]
    fn distance_file_validation_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("asym.tsv");
        fs::write(&p, "0\t1\t2\n1\t0\t3\n2\t3.5\t0\n").unwrap();
        let err = load_distance_matrix(&p, None).unwrap_err().to_string();
        assert!(err.contains("asymmetric"), "{err}");

        fs::write(&p, "0\t-1\n-1\t0\n").unwrap();
        assert!(load_distance_matrix(&p, None).is_err());
        fs::write(&p, "1\t1\n1\t0\n").unwrap();
        assert!(load_distance_matrix(&p, None)
            .unwrap_err()
            .to_string()
            .contains("diagonal"));

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let vals: Vec<f64> = (0..5 * 6).map(|_| rng.random::<f64>()).collect();
        let m = NumericMatrix::new(5, 6, vals).unwrap();
        let part = BlockPartition::new(vec![0, 1, 0, 1, 1, 0]).unwrap();
        let set = block_distances(&m, &part, Metric::EuclideanSq).unwrap();
        let manifest = write_block_distance_set(dir.path().join("set"), &set).unwrap();
        let back = load_distance_manifest(&manifest, Some(5)).unwrap();
        assert_eq!(back.n_blocks(), 2);
        for (a, b) in back.blocks().iter().zip(set.blocks()) {
            assert_eq!(a, b);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn additivity_for_every_metric(
            vals in proptest::collection::vec(0u8..3, 6 * 9),
            labels in proptest::collection::vec(0u64..4, 9),
        ) {
            let m = NumericMatrix::new(6, 9, vals.iter().map(|&v| v as f64).collect()).unwrap();
            let part = BlockPartition::from_labels(&labels).unwrap();
            for metric in [Metric::Hamming, Metric::Manhattan, Metric::EuclideanSq] {
                let set = block_distances(&m, &part, metric).unwrap();
                let total = set.total();
                let full = metric_pairwise(&m, metric);
                // Small integers: sums are exact.
                prop_assert_eq!(&total, &full);
                for i in 0..6 {
                    prop_assert_eq!(full.get(i, i), 0.0);
                    for j in 0..6 {
                        prop_assert_eq!(full.get(i, j), full.get(j, i));
                    }
                }
            }
        }

        #[test]
        fn permutation_equivariance(
            rows in proptest::collection::vec(proptest::collection::vec(0u8..2, 130), 2..10),
            seed in any::<u64>(),
        ) {
            let m = BinaryMatrix::from_rows(&rows).unwrap();
            let mut perm: Vec<usize> = (0..rows.len()).collect();
            perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let permuted = hamming_pairwise(&m.permute_rows(&perm));
            prop_assert_eq!(permuted, hamming_pairwise(&m).relabel(&perm));
        }

        #[test]
        fn packed_hamming_any_width(p in 1usize..200, seed in any::<u64>()) {
            let (rows, m) = random_binary(4, p, seed);
            let d = hamming_pairwise(&m);
            for i in 0..4 {
                for j in 0..4 {
                    let naive = rows[i].iter().zip(&rows[j]).filter(|(a, b)| a != b).count();
                    prop_assert_eq!(d.get(i, j), naive as f64);
                }
            }
        }
    }
}
