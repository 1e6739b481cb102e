//! Dense row-major matrix storage used throughout the crate.
//!
//! Correlation matrices and their spectral components are square and
//! symmetric; return panels are rectangular with one row per asset.
//! Both types are plain `Vec<f64>` wrappers so that every arithmetic
//! path stays explicit and deterministic.

/// Square dense matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds a matrix from row slices. Panics on ragged input; callers
    /// construct from data they already sized.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            assert_eq!(row.len(), n, "square matrix rows must have length n");
            data.extend_from_slice(row);
        }
        Self { n, data }
    }

    pub fn from_raw(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n);
        Self { n, data }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Elementwise map, preserving shape.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// `y = A x`, writing into `y`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let row = self.row(i);
            let mut acc = 0.0;
            for j in 0..self.n {
                acc += row[j] * x[j];
            }
            y[i] = acc;
        }
    }

    /// `A += c * v v^T`.
    pub fn add_scaled_outer(&mut self, c: f64, v: &[f64]) {
        debug_assert_eq!(v.len(), self.n);
        for i in 0..self.n {
            let ci = c * v[i];
            let row = &mut self.data[i * self.n..(i + 1) * self.n];
            for j in 0..self.n {
                row[j] += ci * v[j];
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }

    /// Largest `|a_ij - a_ji|`; zero for an exactly symmetric matrix.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0f64, |m, (&a, &b)| m.max((a - b).abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|&v| v * v).sum::<f64>().sqrt()
    }

    /// Frobenius norm of the strict off-diagonal part.
    pub fn off_diagonal_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    let v = self.get(i, j);
                    acc += v * v;
                }
            }
        }
        acc.sqrt()
    }
}

/// Rectangular matrix, row-major: rows are assets, columns are days.
#[derive(Debug, Clone, PartialEq)]
pub struct RectMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RectMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Kahan compensated sum over a fixed iteration order.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}
