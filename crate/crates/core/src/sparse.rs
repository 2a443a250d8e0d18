//! Compressed sparse row matrices with triplet import/export.

use std::io::{self, Write};

use nalgebra::DMatrix;

use crate::error::{check_len, Result};

/// Entries with magnitude below this are dropped at assembly.
pub const DROP_TOLERANCE: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut iter = triplets.into_iter().peekable();
        while let Some((r, c, mut v)) = iter.next() {
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if v.abs() >= DROP_TOLERANCE {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
            }
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of row `r` as `(col, value)`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(j, _)| j == c).map_or(0.0, |(_, v)| v)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.cols, x.len())?;
        Ok((0..self.rows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect())
    }

    /// `y = A^T x`.
    pub fn matvec_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.rows, x.len())?;
        let mut y = vec![0.0; self.cols];
        for (r, xr) in x.iter().enumerate() {
            for (c, v) in self.row(r) {
                y[c] += v * xr;
            }
        }
        Ok(y)
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for (_, c, v) in self.triplets() {
            s[c] += v;
        }
        s
    }

    /// Induced l1 norm (largest absolute column sum).
    pub fn norm_l1(&self) -> f64 {
        let mut s = vec![0.0f64; self.cols];
        for (_, c, v) in self.triplets() {
            s[c] += v.abs();
        }
        s.into_iter().fold(0.0, f64::max)
    }

    pub fn max_row_nnz(&self) -> usize {
        (0..self.rows)
            .map(|r| self.row_ptr[r + 1] - self.row_ptr[r])
            .max()
            .unwrap_or(0)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// Plain-text export: header `rows cols nnz`, then one `row col value` per line.
    pub fn write_triplets<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{} {} {}", self.rows, self.cols, self.nnz())?;
        for (r, c, v) in self.triplets() {
            writeln!(out, "{r} {c} {v:.17e}")?;
        }
        Ok(())
    }

    /// Inverse of [`CsrMatrix::write_triplets`].
    pub fn read_triplets(text: &str) -> std::result::Result<Self, String> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or("missing header")?;
        let h: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|e| format!("bad header: {e}")))
            .collect::<std::result::Result<_, _>>()?;
        if h.len() != 3 {
            return Err("header must be `rows cols nnz`".into());
        }
        let mut trips = Vec::with_capacity(h[2]);
        for line in lines {
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 3 {
                return Err(format!("bad triplet line `{line}`"));
            }
            let r = t[0].parse().map_err(|e| format!("{e}"))?;
            let c = t[1].parse().map_err(|e| format!("{e}"))?;
            let v = t[2].parse().map_err(|e| format!("{e}"))?;
            trips.push((r, c, v));
        }
        if trips.len() != h[2] {
            return Err(format!("expected {} triplets, found {}", h[2], trips.len()));
        }
        Ok(Self::from_triplets(h[0], h[1], trips))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_sum_and_small_entries_drop() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 0, 1e-17)]);
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.get(0, 0), 3.0);
    }

    #[test]
    fn matvec_and_transpose_agree_with_dense() {
        let a = CsrMatrix::from_triplets(
            3,
            3,
            vec![(0, 1, 2.0), (1, 0, -1.0), (2, 2, 4.0), (2, 0, 0.5)],
        );
        let x = [1.0, 2.0, 3.0];
        let d = a.to_dense();
        let y = a.matvec(&x).unwrap();
        let yd = &d * nalgebra::DVector::from_column_slice(&x);
        assert_eq!(y, yd.as_slice());
        let yt = a.matvec_transpose(&x).unwrap();
        let ytd = d.transpose() * nalgebra::DVector::from_column_slice(&x);
        assert_eq!(yt, ytd.as_slice());
        assert!(a.matvec(&[1.0]).is_err());
    }

    #[test]
    fn triplet_text_round_trip() {
        let a = CsrMatrix::from_triplets(2, 3, vec![(0, 2, 0.1), (1, 0, -3.5)]);
        let mut buf = Vec::new();
        a.write_triplets(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("2 3 2\n"));
        assert_eq!(CsrMatrix::read_triplets(&text).unwrap(), a);
    }
}
