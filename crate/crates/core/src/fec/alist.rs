//! Reading and writing parity-check matrices in the alist text format.

use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

/// Sparse binary matrix with both row and column adjacency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseMatrix {
    n_cols: usize,
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
}

impl SparseMatrix {
    /// Builds a matrix from per-row column lists (0-based).
    pub fn from_rows(n_cols: usize, mut rows: Vec<Vec<usize>>) -> Result<Self> {
        let mut cols = vec![Vec::new(); n_cols];
        for (r, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            if row.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Alist(format!("row {} lists a column twice", r + 1)));
            }
            for &c in row.iter() {
                if c >= n_cols {
                    return Err(Error::Alist(format!("column index {} out of range", c + 1)));
                }
                cols[c].push(r);
            }
        }
        Ok(Self { n_cols, rows, cols })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, r: usize) -> &[usize] {
        &self.rows[r]
    }

    pub fn col(&self, c: usize) -> &[usize] {
        &self.cols[c]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn n_edges(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// `H x` over GF(2).
    pub fn syndrome(&self, x: &[u8]) -> Vec<u8> {
        self.rows
            .iter()
            .map(|row| row.iter().fold(0u8, |acc, &c| acc ^ (x[c] & 1)))
            .collect()
    }

    pub fn is_codeword(&self, x: &[u8]) -> bool {
        self.rows
            .iter()
            .all(|row| row.iter().fold(0u8, |acc, &c| acc ^ (x[c] & 1)) == 0)
    }

    /// Serializes to alist text.
    pub fn to_alist(&self) -> String {
        let max_col = self.cols.iter().map(Vec::len).max().unwrap_or(0);
        let max_row = self.rows.iter().map(Vec::len).max().unwrap_or(0);
        let mut out = String::new();
        writeln!(out, "{} {}", self.n_cols, self.n_rows()).unwrap();
        writeln!(out, "{max_col} {max_row}").unwrap();
        out.push_str(&join(self.cols.iter().map(Vec::len)));
        out.push('\n');
        out.push_str(&join(self.rows.iter().map(Vec::len)));
        out.push('\n');
        for list in &self.cols {
            out.push_str(&padded(list, max_col));
            out.push('\n');
        }
        for list in &self.rows {
            out.push_str(&padded(list, max_row));
            out.push('\n');
        }
        out
    }

    pub fn parse_alist(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let mut next_numbers = |what: &str| -> Result<Vec<usize>> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Alist(format!("missing {what}")))?;
            line.split_whitespace()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| Error::Alist(format!("bad number {t:?} in {what}")))
                })
                .collect()
        };
        let dims = next_numbers("dimensions")?;
        let [n, m] = dims[..] else {
            return Err(Error::Alist("first line must be `n m`".into()));
        };
        let maxes = next_numbers("maximum weights")?;
        let [max_col, max_row] = maxes[..] else {
            return Err(Error::Alist("second line must hold two maximum weights".into()));
        };
        let col_w = next_numbers("column weights")?;
        let row_w = next_numbers("row weights")?;
        if col_w.len() != n || row_w.len() != m {
            return Err(Error::Alist(format!(
                "weight lists have {} and {} entries for a {m}x{n} matrix",
                col_w.len(),
                row_w.len()
            )));
        }
        if col_w.iter().max().copied().unwrap_or(0) != max_col
            || row_w.iter().max().copied().unwrap_or(0) != max_row
        {
            return Err(Error::Alist("maximum weights disagree with weight lists".into()));
        }
        let mut col_lists = Vec::with_capacity(n);
        for (c, &w) in col_w.iter().enumerate() {
            let entries = next_numbers("column list")?;
            col_lists.push(indices(entries, w, m, &format!("column {}", c + 1))?);
        }
        let mut row_lists = Vec::with_capacity(m);
        for (r, &w) in row_w.iter().enumerate() {
            let entries = next_numbers("row list")?;
            row_lists.push(indices(entries, w, n, &format!("row {}", r + 1))?);
        }
        let h = Self::from_rows(n, row_lists)?;
        for (c, list) in col_lists.iter_mut().enumerate() {
            list.sort_unstable();
            if *list != h.cols[c] {
                return Err(Error::Alist(format!(
                    "column {} disagrees with the row lists",
                    c + 1
                )));
            }
        }
        Ok(h)
    }

    pub fn load_alist(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_alist(&text)
    }

    pub fn write_alist(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_alist()).map_err(|e| Error::io(path, e))
    }
}

fn join(values: impl Iterator<Item = usize>) -> String {
    values.map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn padded(list: &[usize], width: usize) -> String {
    join(
        list.iter()
            .map(|&i| i + 1)
            .chain(std::iter::repeat(0))
            .take(width),
    )
}

/// Converts a 1-based, zero-padded index list to 0-based indices.
fn indices(entries: Vec<usize>, weight: usize, bound: usize, what: &str) -> Result<Vec<usize>> {
    let list: Vec<usize> = entries.into_iter().filter(|&e| e != 0).collect();
    if list.len() != weight {
        return Err(Error::Alist(format!(
            "{what} has {} entries, header says {weight}",
            list.len()
        )));
    }
    list.into_iter()
        .map(|e| {
            if e > bound {
                Err(Error::Alist(format!("{what}: index {e} exceeds {bound}")))
            } else {
                Ok(e - 1)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const REPETITION: &str = "3 2\n2 2\n1 2 1\n2 2\n1 0\n1 2\n2 0\n1 2\n2 3\n";

    #[test]
    fn repetition_code() {
        let h = SparseMatrix::parse_alist(REPETITION).unwrap();
        assert_eq!(h.row(0), &[0, 1]);
        assert_eq!(h.row(1), &[1, 2]);
        assert!(h.is_codeword(&[1, 1, 1]));
        assert!(!h.is_codeword(&[1, 0, 1]));
        assert_eq!(h.to_alist(), REPETITION);
    }

    #[test]
    fn wrong_weight_header_is_rejected() {
        let bad = REPETITION.replacen("1 2 1", "1 2 2", 1);
        assert!(matches!(SparseMatrix::parse_alist(&bad), Err(Error::Alist(_))));
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        let bad = REPETITION.replace("2 3\n", "2 4\n");
        assert!(SparseMatrix::parse_alist(&bad).is_err());
    }

    #[test]
    fn inconsistent_lists_are_rejected() {
        let bad = REPETITION.replace("1 2\n2 3\n", "1 3\n2 3\n");
        assert!(SparseMatrix::parse_alist(&bad).is_err());
    }
}
