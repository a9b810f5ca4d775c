//! Dense and banded Cholesky factorizations plus the row-banded sparse
//! matrices produced by compactly supported kernels.

use crate::error::{Error, Result};

/// Relative pivot threshold: a pivot below `PIVOT_RTOL * max(diag)` is a failure.
pub const PIVOT_RTOL: f64 = 1e-14;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> f64>(rows: usize, cols: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    /// Half-bandwidth: the largest `|i - j|` with a nonzero entry.
    pub fn bandwidth(&self) -> usize {
        let mut bw = 0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self[(i, j)] != 0.0 {
                    bw = bw.max(i.abs_diff(j));
                }
            }
        }
        bw
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Lower Cholesky factor `K = L Lᵀ`, stored densely or in band form.
#[derive(Debug, Clone)]
pub enum Cholesky {
    Dense { n: usize, l: Vec<f64> },
    // row i holds L[i, i-bw..=i] in l[i*(bw+1)..], left-padded with zeros
    Banded { n: usize, bw: usize, l: Vec<f64> },
}

impl Cholesky {
    /// Factorizes a symmetric matrix, using the band path when the
    /// bandwidth is below a quarter of the dimension.
    pub fn factor(k: &DenseMatrix) -> Result<Self> {
        if k.rows() != k.cols() {
            return Err(Error::Mismatch(format!(
                "Cholesky needs a square matrix, got {}x{}",
                k.rows(),
                k.cols()
            )));
        }
        let bw = k.bandwidth();
        if 4 * bw < k.rows() {
            Self::factor_banded(k, bw)
        } else {
            Self::factor_dense(k)
        }
    }

    pub fn factor_dense(k: &DenseMatrix) -> Result<Self> {
        let n = k.rows();
        let threshold = pivot_threshold(k);
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = k[(j, j)];
            for p in 0..j {
                d -= l[j * n + p] * l[j * n + p];
            }
            if !(d > threshold) {
                return Err(Error::Factorization {
                    index: j,
                    pivot: d,
                    threshold,
                });
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in j + 1..n {
                let mut s = k[(i, j)];
                for p in 0..j {
                    s -= l[i * n + p] * l[j * n + p];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Cholesky::Dense { n, l })
    }

    pub fn factor_banded(k: &DenseMatrix, bw: usize) -> Result<Self> {
        let n = k.rows();
        let threshold = pivot_threshold(k);
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        // L[i, j] lives at l[i*w + (j + bw - i)]
        let at = |i: usize, j: usize| i * w + (j + bw - i);
        for j in 0..n {
            let lo = j.saturating_sub(bw);
            let mut d = k[(j, j)];
            for p in lo..j {
                d -= l[at(j, p)] * l[at(j, p)];
            }
            if !(d > threshold) {
                return Err(Error::Factorization {
                    index: j,
                    pivot: d,
                    threshold,
                });
            }
            let djj = d.sqrt();
            l[at(j, j)] = djj;
            for i in j + 1..(j + bw + 1).min(n) {
                let lo_i = i.saturating_sub(bw);
                let mut s = k[(i, j)];
                for p in lo_i.max(lo)..j {
                    s -= l[at(i, p)] * l[at(j, p)];
                }
                l[at(i, j)] = s / djj;
            }
        }
        Ok(Cholesky::Banded { n, bw, l })
    }

    pub fn dim(&self) -> usize {
        match self {
            Cholesky::Dense { n, .. } | Cholesky::Banded { n, .. } => *n,
        }
    }

    pub fn is_banded(&self) -> bool {
        matches!(self, Cholesky::Banded { .. })
    }

    /// Squared diagonal of `L`, i.e. the pivots of the elimination.
    pub fn pivots(&self) -> Vec<f64> {
        match self {
            Cholesky::Dense { n, l } => (0..*n).map(|i| l[i * n + i].powi(2)).collect(),
            Cholesky::Banded { n, bw, l } => (0..*n).map(|i| l[i * (bw + 1) + bw].powi(2)).collect(),
        }
    }

    /// Solves `K x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        match self {
            Cholesky::Dense { n, l } => {
                let n = *n;
                assert_eq!(x.len(), n);
                for i in 0..n {
                    let row = &l[i * n..i * n + i];
                    let s: f64 = row.iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
                    x[i] = (x[i] - s) / l[i * n + i];
                }
                for i in (0..n).rev() {
                    let mut s = x[i];
                    for p in i + 1..n {
                        s -= l[p * n + i] * x[p];
                    }
                    x[i] = s / l[i * n + i];
                }
            }
            Cholesky::Banded { n, bw, l } => {
                let (n, bw) = (*n, *bw);
                let w = bw + 1;
                assert_eq!(x.len(), n);
                for i in 0..n {
                    let lo = i.saturating_sub(bw);
                    let base = i * w + bw - i;
                    let mut s = x[i];
                    for p in lo..i {
                        s -= l[base + p] * x[p];
                    }
                    x[i] = s / l[i * w + bw];
                }
                for i in (0..n).rev() {
                    let hi = (i + bw + 1).min(n);
                    let mut s = x[i];
                    for p in i + 1..hi {
                        s -= l[p * w + bw + i - p] * x[p];
                    }
                    x[i] = s / l[i * w + bw];
                }
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

fn pivot_threshold(k: &DenseMatrix) -> f64 {
    let max_diag = (0..k.rows()).fold(0.0f64, |m, i| m.max(k[(i, i)].abs()));
    PIVOT_RTOL * max_diag
}

/// Solves `K c = v` for symmetric positive definite `K`.
pub fn spd_solve(k: &DenseMatrix, v: &[f64]) -> Result<Vec<f64>> {
    if !k.is_symmetric() {
        return Err(Error::InvalidInput("spd_solve requires a symmetric matrix".into()));
    }
    if v.len() != k.rows() {
        return Err(Error::Mismatch(format!(
            "right-hand side has length {}, matrix is {}x{}",
            v.len(),
            k.rows(),
            k.cols()
        )));
    }
    Ok(Cholesky::factor(k)?.solve(v))
}

/// Sparse matrix whose rows have one contiguous nonzero column range.
#[derive(Debug, Clone, PartialEq)]
pub struct BandRows {
    cols: usize,
    first: Vec<usize>,
    offsets: Vec<usize>,
    data: Vec<f64>,
}

impl BandRows {
    /// Builds the matrix from a per-row column range and an entry function.
    pub fn build<R, F>(rows: usize, cols: usize, mut range: R, mut entry: F) -> Self
    where
        R: FnMut(usize) -> std::ops::Range<usize>,
        F: FnMut(usize, usize) -> f64,
    {
        let mut first = Vec::with_capacity(rows);
        let mut offsets = Vec::with_capacity(rows + 1);
        let mut data = Vec::new();
        offsets.push(0);
        for i in 0..rows {
            let r = range(i);
            first.push(r.start);
            data.extend(r.map(|j| entry(i, j)));
            offsets.push(data.len());
        }
        Self {
            cols,
            first,
            offsets,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.first.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// `out = self * v`.
    pub fn mul_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.cols);
        for (i, o) in out.iter_mut().enumerate() {
            let vals = &self.data[self.offsets[i]..self.offsets[i + 1]];
            let start = self.first[i];
            *o = vals.iter().zip(&v[start..start + vals.len()]).map(|(a, b)| a * b).sum();
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows()];
        self.mul_into(v, &mut out);
        out
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.rows(), self.cols);
        for i in 0..self.rows() {
            let vals = &self.data[self.offsets[i]..self.offsets[i + 1]];
            for (k, &v) in vals.iter().enumerate() {
                m[(i, self.first[i] + k)] = v;
            }
        }
        m
    }
}
