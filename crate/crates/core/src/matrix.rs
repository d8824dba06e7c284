//! Row-major dense matrices and the handful of norms the analysis relies on.

use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

/// Row-major real matrix. Immutable once constructed through the public API;
/// all public operations reject non-finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: format!("{} entries for {}x{}", rows * cols, rows, cols),
                got: format!("{}", data.len()),
            });
        }
        let m = Self { rows, cols, data };
        m.check_finite()?;
        Ok(m)
    }

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
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diag(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in entries.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

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

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn check_finite(&self) -> Result<()> {
        for (idx, v) in self.data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: idx / self.cols,
                    col: idx % self.cols,
                });
            }
        }
        Ok(())
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch {
                expected: format!("{} inner rows", self.cols),
                got: format!("{}x{}", other.rows, other.cols),
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        // i-k-j order keeps both operands in row-major streaming access.
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &DenseMatrix, f: impl Fn(f64, f64) -> f64) -> Result<DenseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", self.rows, self.cols),
                got: format!("{}x{}", other.rows, other.cols),
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, c: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * c).collect(),
        }
    }

    /// First `k` columns as a new matrix.
    pub fn leading_columns(&self, k: usize) -> DenseMatrix {
        assert!(k <= self.cols);
        DenseMatrix::from_fn(self.rows, k, |i, j| self.get(i, j))
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn bit_equal(&self, other: &DenseMatrix) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_row_l2(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// `sqrt(sum_i ||row_i||_1^2)`, the mixed l1/l2 row norm that constrains
    /// adjacency updates.
    pub fn row_l1_l2_mixed(&self) -> f64 {
        (0..self.rows)
            .map(|i| {
                let l1: f64 = self.row(i).iter().map(|v| v.abs()).sum();
                l1 * l1
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let scale = self.max_abs();
        let tol = rel_tol * scale.max(f64::MIN_POSITIVE);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self.get(i, j) - self.get(j, i)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Text fixture format: first line "rows cols", then one row per line of
    /// space-separated decimals at 17 significant digits (round-trip exact).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.rows, self.cols);
        for i in 0..self.rows {
            let mut first = true;
            for j in 0..self.cols {
                if !first {
                    s.push(' ');
                }
                let _ = write!(s, "{:.16e}", self.get(i, j));
                first = false;
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| {
                t.parse().map_err(|_| Error::Parse {
                    line: 1,
                    msg: format!("bad dimension {t:?}"),
                })
            })
            .collect::<Result<_>>()?;
        if dims.len() != 2 {
            return Err(Error::Parse {
                line: 1,
                msg: "header must be \"rows cols\"".into(),
            });
        }
        let (rows, cols) = (dims[0], dims[1]);
        let mut data = Vec::with_capacity(rows * cols);
        for (idx, line) in lines.take(rows) {
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| Error::Parse {
                    line: idx + 1,
                    msg: format!("bad entry {tok:?}"),
                })?;
                data.push(v);
            }
        }
        DenseMatrix::new(rows, cols, data)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }
}

/// The norm bundle reported by [`norms`].
#[derive(Debug, Clone, Copy)]
pub struct Norms {
    pub max_abs: f64,
    pub frobenius: f64,
    pub spectral: f64,
    pub spectral_converged: bool,
    pub max_row_l2: f64,
    pub row_l1_l2_mixed: f64,
}

pub fn norms(m: &DenseMatrix) -> Norms {
    let (spectral, spectral_converged) = spectral_norm(m);
    Norms {
        max_abs: m.max_abs(),
        frobenius: m.frobenius(),
        spectral,
        spectral_converged,
        max_row_l2: m.max_row_l2(),
        row_l1_l2_mixed: m.row_l1_l2_mixed(),
    }
}

const SPECTRAL_REL_TOL: f64 = 1e-8;
const SPECTRAL_MAX_ITERS: usize = 200;

/// Spectral norm by power iteration on `m^T m`, relative tolerance 1e-8 with a
/// 200-iteration cap; the flag reports convergence within the cap.
pub fn spectral_norm(m: &DenseMatrix) -> (f64, bool) {
    let (lambda, converged) = gram_lambda_max(m);
    (lambda.max(0.0).sqrt(), converged)
}

/// Largest eigenvalue of `m^T m` by power iteration, without forming it.
pub(crate) fn gram_lambda_max(m: &DenseMatrix) -> (f64, bool) {
    let n = m.cols();
    if n == 0 || m.rows() == 0 {
        return (0.0, true);
    }
    if m.frobenius() == 0.0 {
        return (0.0, true);
    }
    // Deterministic pseudo-random start vector; a fixed pattern such as all
    // ones can be orthogonal to the dominant eigenvector.
    let mut v: Vec<f64> = (0..n)
        .map(|i| {
            let bits = mix64(0x9E3779B97F4A7C15u64 ^ (i as u64).wrapping_mul(0xD1342543DE82EF95));
            ((bits >> 11) as f64 + 0.5) / 9007199254740992.0 - 0.5
        })
        .collect();
    normalize(&mut v);
    let mut lambda = 0.0f64;
    for it in 0..SPECTRAL_MAX_ITERS {
        // w = m^T (m v)
        let mut mv = vec![0.0; m.rows()];
        for i in 0..m.rows() {
            mv[i] = m.row(i).iter().zip(&v).map(|(a, b)| a * b).sum();
        }
        let mut w = vec![0.0; n];
        for i in 0..m.rows() {
            let c = mv[i];
            if c == 0.0 {
                continue;
            }
            for (wj, a) in w.iter_mut().zip(m.row(i)) {
                *wj += c * a;
            }
        }
        let new_lambda: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        let norm = normalize(&mut w);
        if norm == 0.0 {
            return (0.0, true);
        }
        v = w;
        if it > 0 && (new_lambda - lambda).abs() <= SPECTRAL_REL_TOL * new_lambda.abs() {
            return (new_lambda, true);
        }
        lambda = new_lambda;
    }
    (lambda, false)
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    norm
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}
