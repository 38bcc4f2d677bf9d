use std::fs;
use std::io::Write;
use std::path::Path;

use super::{BlockPartition, NumericMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    /// Comma- or tab-delimited real values.
    Delimited,
    /// Delimited allele dosages; every cell must be 0, 1 or 2.
    GenotypeDosage,
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Split a data line on tabs if present, otherwise on commas.
pub(crate) fn split_cells(line: &str) -> Vec<&str> {
    if line.contains('\t') {
        line.split('\t').collect()
    } else {
        line.split(',').collect()
    }
}

pub(crate) fn is_skippable(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

pub(crate) fn parse_cell(path: &Path, line: usize, column: usize, cell: &str) -> Result<f64> {
    let t = cell.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("na") || t == "." || t.eq_ignore_ascii_case("nan") {
        return Err(Error::format(
            path,
            line,
            column,
            format!("missing value {t:?} (missing data is not supported)"),
        ));
    }
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(Error::format(
            path,
            line,
            column,
            format!("non-finite value {t:?}"),
        )),
        Err(_) => Err(Error::format(
            path,
            line,
            column,
            format!("cannot parse {t:?} as a number"),
        )),
    }
}

/// Read an observation-by-feature table. Rows keep their file order.
pub fn load_matrix(path: impl AsRef<Path>, format: MatrixFormat) -> Result<NumericMatrix> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut data = Vec::new();
    let mut n_cols = None;
    let mut n_rows = 0;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if is_skippable(line) {
            continue;
        }
        let cells = split_cells(line.trim_end_matches('\r'));
        match n_cols {
            None => n_cols = Some(cells.len()),
            Some(c) if c != cells.len() => {
                return Err(Error::format(
                    path,
                    line_no,
                    0,
                    format!("ragged row: {} cells, expected {c}", cells.len()),
                ))
            }
            _ => {}
        }
        for (c, cell) in cells.iter().enumerate() {
            let v = parse_cell(path, line_no, c + 1, cell)?;
            if format == MatrixFormat::GenotypeDosage && !(v == 0.0 || v == 1.0 || v == 2.0) {
                return Err(Error::format(
                    path,
                    line_no,
                    c + 1,
                    format!("dosage {v} is not 0, 1 or 2"),
                ));
            }
            data.push(v);
        }
        n_rows += 1;
    }
    let Some(n_cols) = n_cols else {
        return Err(Error::format(path, 0, 0, "no rows"));
    };
    NumericMatrix::new(n_rows, n_cols, data)
}

/// Write a matrix as tab-delimited text. Values use the shortest decimal form
/// that parses back to the identical double.
pub fn write_matrix(path: impl AsRef<Path>, m: &NumericMatrix) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for i in 0..m.n_rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v}")).collect();
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read a two-column `feature_index block_id` file covering features `0..p`.
pub fn load_block_partition(path: impl AsRef<Path>, p: usize) -> Result<BlockPartition> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut labels: Vec<Option<u64>> = vec![None; p];
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if is_skippable(line) {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::format(
                path,
                line_no,
                0,
                format!(
                    "expected 2 columns (feature_index block_id), found {}",
                    fields.len()
                ),
            ));
        }
        let feature: usize = fields[0].parse().map_err(|_| {
            Error::format(
                path,
                line_no,
                1,
                format!("bad feature index {:?}", fields[0]),
            )
        })?;
        let block: u64 = fields[1].parse().map_err(|_| {
            Error::format(path, line_no, 2, format!("bad block id {:?}", fields[1]))
        })?;
        if feature >= p {
            return Err(Error::format(
                path,
                line_no,
                1,
                format!("feature index {feature} out of range (P = {p})"),
            ));
        }
        if labels[feature].is_some() {
            return Err(Error::format(
                path,
                line_no,
                1,
                format!("duplicate feature index {feature}"),
            ));
        }
        labels[feature] = Some(block);
    }
    if let Some(missing) = labels.iter().position(Option::is_none) {
        return Err(Error::format(
            path,
            0,
            0,
            format!("feature {missing} unassigned"),
        ));
    }
    let labels: Vec<u64> = labels.into_iter().map(Option::unwrap).collect();
    BlockPartition::from_labels(&labels)
}

pub fn write_block_partition(path: impl AsRef<Path>, part: &BlockPartition) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for (p, b) in part.assignment().iter().enumerate() {
        writeln!(f, "{p}\t{b}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_tmp(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn loads_simple_matrix() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "x.csv", "0,1\n1,1\n0,0");
        let m = load_matrix(&p, MatrixFormat::Delimited).unwrap();
        assert_eq!(m.n_rows(), 3);
        assert_eq!(m.data(), &[0.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn header_and_tabs() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "x.tsv", "# a\tb\n0\t2\n1\t0\n");
        let m = load_matrix(&p, MatrixFormat::GenotypeDosage).unwrap();
        assert_eq!(m.n_cols(), 2);
        assert_eq!(m.row(0), &[0.0, 2.0]);
    }

    #[test]
    fn empty_file_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "e.csv", "");
        let err = load_matrix(&p, MatrixFormat::Delimited).unwrap_err();
        assert!(err.to_string().contains("no rows"), "{err}");
    }

    #[test]
    fn single_row_loads() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "one.csv", "1,0,1\n");
        let m = load_matrix(&p, MatrixFormat::Delimited).unwrap();
        assert_eq!(m.n_rows(), 1);
        assert!(crate::vstat::v_binary(&m.binarize(0.5)).is_err());
    }

    #[test]
    fn ragged_and_bad_cells_name_location() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "r.csv", "0,1\n1\n");
        let err = load_matrix(&p, MatrixFormat::Delimited)
            .unwrap_err()
            .to_string();
        assert!(err.contains("r.csv:2:") && err.contains("ragged"), "{err}");

        let p = write_tmp(&dir, "b.csv", "0,1\n1,x\n");
        let err = load_matrix(&p, MatrixFormat::Delimited)
            .unwrap_err()
            .to_string();
        assert!(err.contains("b.csv:2:2"), "{err}");

        let p = write_tmp(&dir, "na.csv", "0,NA\n");
        let err = load_matrix(&p, MatrixFormat::Delimited)
            .unwrap_err()
            .to_string();
        assert!(err.contains("missing"), "{err}");

        let p = write_tmp(&dir, "d.csv", "0,3\n");
        assert!(load_matrix(&p, MatrixFormat::GenotypeDosage).is_err());
    }

    #[test]
    fn block_file_validation() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "b.txt", "0 0\n1 0\n2 1\n3 1\n");
        let part = load_block_partition(&p, 4).unwrap();
        assert_eq!(part.n_blocks(), 2);
        assert_eq!(part.assignment(), &[0, 0, 1, 1]);

        let p = write_tmp(&dir, "short.txt", "0 0\n1 0\n");
        let err = load_block_partition(&p, 3).unwrap_err().to_string();
        assert!(err.contains("feature 2 unassigned"), "{err}");

        let p = write_tmp(&dir, "dup.txt", "0 0\n0 1\n");
        assert!(load_block_partition(&p, 2)
            .unwrap_err()
            .to_string()
            .contains("duplicate"));

        let p = write_tmp(&dir, "big.txt", "0 0\n5 1\n");
        assert!(load_block_partition(&p, 2)
            .unwrap_err()
            .to_string()
            .contains("out of range"));

        let p = write_tmp(&dir, "relabel.txt", "0 9\n1 5\n2 9\n");
        let part = load_block_partition(&p, 3).unwrap();
        assert_eq!(part.assignment(), &[1, 0, 1]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn write_load_binarize_round_trip(
            vals in proptest::collection::vec(-5.0f64..5.0, 12),
            t in -1.0f64..1.0,
        ) {
            let dir = tempfile::tempdir().unwrap();
            let m = NumericMatrix::new(4, 3, vals).unwrap();
            let p = dir.path().join("m.tsv");
            write_matrix(&p, &m).unwrap();
            let back = load_matrix(&p, MatrixFormat::Delimited).unwrap();
            prop_assert_eq!(&back, &m);
            prop_assert_eq!(back.binarize(t), m.binarize(t));
        }
    }
}
