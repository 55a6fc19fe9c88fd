//! Dense complex matrices at small dimension with a self-contained Hermitian
//! eigensolver (cyclic complex Jacobi rotations) and the norms used
//! throughout the crate.
//!
//! Everything here is sized for spectral densities of desk-scale processes
//! (d up to a few dozen); no attempt is made at sparsity or blocking.

use num_complex::Complex64;
use thiserror::Error;

/// Relative off-diagonal mass at which the Jacobi sweep stops.
const JACOBI_TOL: f64 = 1e-14;
/// Hard cap on Jacobi sweeps; convergence is quadratic, so this is generous.
const JACOBI_MAX_SWEEPS: usize = 100;
/// Relative Frobenius asymmetry accepted by `eig_hermitian`.
const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (relative asymmetry {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not positive semidefinite (eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },
    #[error("dimension mismatch: {lhs} vs {rhs}")]
    DimensionMismatch { lhs: String, rhs: String },
    #[error("matrix is numerically singular")]
    Singular,
    #[error("entry count {len} does not match {rows}x{cols}")]
    BadShape { rows: usize, cols: usize, len: usize },
}

/// Dense complex matrix, row-major storage. Entries are finite by
/// construction; NaN/Inf are rejected by every constructor.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, MatrixError> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(MatrixError::BadShape {
                rows,
                cols,
                len: data.len(),
            });
        }
        for (idx, z) in data.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(MatrixError::NonFinite {
                    row: idx / cols,
                    col: idx % cols,
                });
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Real diagonal matrix.
    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(values[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Submatrix with the given row and column index sets (in order).
    pub fn select(&self, row_idx: &[usize], col_idx: &[usize]) -> Self {
        Self::from_fn(row_idx.len(), col_idx.len(), |i, j| {
            self[(row_idx[i], col_idx[j])]
        })
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_re(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "inner dimensions {} vs {}",
            self.cols, other.rows
        );
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// `self * v` for a vector given as a slice of length `cols`.
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self[(i, j)] * v[j])
                    .sum::<Complex64>()
            })
            .collect()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest singular value, computed through the Hermitian eigenproblem of
    /// `A* A`.
    pub fn spectral_norm(&self) -> f64 {
        let gram = self.adjoint().mul(self);
        let eig = jacobi_hermitian(&gram.hermitian_part());
        eig.0.iter().cloned().fold(0.0, f64::max).max(0.0).sqrt()
    }

    /// `(A + A*) / 2`; only meaningful for square matrices.
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square());
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }

    /// Relative Frobenius distance to the nearest Hermitian matrix.
    pub fn hermitian_deviation(&self) -> f64 {
        let skew = self.sub(&self.adjoint()).frobenius_norm() * 0.5;
        let scale = self.frobenius_norm();
        if scale == 0.0 {
            0.0
        } else {
            skew / scale
        }
    }

    /// Eigendecomposition of a Hermitian matrix: descending real eigenvalues
    /// and orthonormal eigenvectors (columns). Ties keep the Jacobi output
    /// order (stable sort).
    pub fn eig_hermitian(&self) -> Result<HermitianEigen, MatrixError> {
        if !self.is_square() {
            return Err(MatrixError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let deviation = self.hermitian_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(MatrixError::NotHermitian { deviation });
        }
        let (mut values, mut vectors) = jacobi_hermitian(&self.hermitian_part());

        // Stable descending sort; equal values keep Jacobi output order.
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap());
        values = order.iter().map(|&i| values[i]).collect();
        let permuted = ComplexMatrix::from_fn(vectors.rows, vectors.cols, |i, j| {
            vectors[(i, order[j])]
        });
        vectors = permuted;

        Ok(HermitianEigen {
            eigenvalues: values,
            eigenvectors: vectors,
            source_positions: order,
        })
    }

    /// Solve `self * X = rhs` by LU decomposition with partial pivoting.
    pub fn solve(&self, rhs: &Self) -> Result<Self, MatrixError> {
        if !self.is_square() {
            return Err(MatrixError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        if self.rows != rhs.rows {
            return Err(MatrixError::DimensionMismatch {
                lhs: format!("{}x{}", self.rows, self.cols),
                rhs: format!("{}x{}", rhs.rows, rhs.cols),
            });
        }
        let n = self.rows;
        let mut lu = self.clone();
        let mut x = rhs.clone();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for col in 0..n {
            let (mut pivot_row, mut pivot_mag) = (col, lu[(col, col)].norm());
            for r in col + 1..n {
                let mag = lu[(r, col)].norm();
                if mag > pivot_mag {
                    pivot_row = r;
                    pivot_mag = mag;
                }
            }
            if pivot_mag <= scale * 1e-14 * (n as f64) {
                return Err(MatrixError::Singular);
            }
            if pivot_row != col {
                for j in 0..n {
                    lu.data.swap(col * n + j, pivot_row * n + j);
                }
                for j in 0..x.cols {
                    x.data.swap(col * x.cols + j, pivot_row * x.cols + j);
                }
            }
            let pivot = lu[(col, col)];
            for r in col + 1..n {
                let factor = lu[(r, col)] / pivot;
                if factor == Complex64::new(0.0, 0.0) {
                    continue;
                }
                lu[(r, col)] = factor;
                for j in col + 1..n {
                    let v = lu[(col, j)];
                    lu[(r, j)] -= factor * v;
                }
                for j in 0..x.cols {
                    let v = x[(col, j)];
                    x[(r, j)] -= factor * v;
                }
            }
        }
        // Back substitution.
        for col in (0..n).rev() {
            let pivot = lu[(col, col)];
            for j in 0..x.cols {
                let mut acc = x[(col, j)];
                for k in col + 1..n {
                    acc -= lu[(col, k)] * x[(k, j)];
                }
                x[(col, j)] = acc / pivot;
            }
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Self, MatrixError> {
        self.solve(&Self::identity(self.rows))
    }

    /// Determinant by LU with partial pivoting; 0 for numerically singular
    /// input.
    pub fn det(&self) -> Complex64 {
        assert!(self.is_square());
        let n = self.rows;
        let mut lu = self.clone();
        let mut det = Complex64::new(1.0, 0.0);
        for col in 0..n {
            let (mut pivot_row, mut pivot_mag) = (col, lu[(col, col)].norm());
            for r in col + 1..n {
                let mag = lu[(r, col)].norm();
                if mag > pivot_mag {
                    pivot_row = r;
                    pivot_mag = mag;
                }
            }
            if pivot_mag == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            if pivot_row != col {
                for j in 0..n {
                    lu.data.swap(col * n + j, pivot_row * n + j);
                }
                det = -det;
            }
            let pivot = lu[(col, col)];
            det *= pivot;
            for r in col + 1..n {
                let factor = lu[(r, col)] / pivot;
                for j in col + 1..n {
                    let v = lu[(col, j)];
                    lu[(r, j)] -= factor * v;
                }
            }
        }
        det
    }

    /// Hermitian square root of a positive semidefinite matrix. Eigenvalues
    /// in the clamp band `[-1e-12 * |A|_2, 0)` are treated as zero; anything
    /// lower is an error.
    pub fn sqrt_psd(&self) -> Result<Self, MatrixError> {
        let eig = self.eig_hermitian()?;
        let clamped = eig.psd_clamped()?;
        let d = self.rows;
        let v = &eig.eigenvectors;
        let mut out = Self::zeros(d, d);
        for (k, lam) in clamped.iter().enumerate() {
            let s = lam.sqrt();
            for i in 0..d {
                for j in 0..d {
                    out[(i, j)] += v[(i, k)] * v[(j, k)].conj() * s;
                }
            }
        }
        Ok(out)
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Result of [`ComplexMatrix::eig_hermitian`]: eigenvalues descending,
/// eigenvector columns orthonormal.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
    /// Diagonal position each sorted eigenvalue came from in the Jacobi
    /// output; lets callers break near-ties in a node-independent way.
    pub source_positions: Vec<usize>,
}

impl HermitianEigen {
    /// `V diag(lambda) V*`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = self.eigenvectors.rows();
        let v = &self.eigenvectors;
        let mut out = ComplexMatrix::zeros(d, d);
        for (k, lam) in self.eigenvalues.iter().enumerate() {
            for i in 0..d {
                for j in 0..d {
                    out[(i, j)] += v[(i, k)] * v[(j, k)].conj() * *lam;
                }
            }
        }
        out
    }

    /// Eigenvalues with the PSD clamp applied: values in
    /// `[-1e-12 * lambda_max_abs, 0)` become 0, anything below raises
    /// `NotPositiveSemidefinite`.
    pub fn psd_clamped(&self) -> Result<Vec<f64>, MatrixError> {
        let scale = self
            .eigenvalues
            .iter()
            .map(|l| l.abs())
            .fold(0.0, f64::max);
        let floor = -1e-12 * scale;
        let mut out = Vec::with_capacity(self.eigenvalues.len());
        for &l in &self.eigenvalues {
            if l >= 0.0 {
                out.push(l);
            } else if l >= floor {
                out.push(0.0);
            } else {
                return Err(MatrixError::NotPositiveSemidefinite { min_eigenvalue: l });
            }
        }
        Ok(out)
    }
}

/// Cyclic complex Jacobi on a Hermitian matrix. Returns unsorted eigenvalues
/// (diagonal after convergence) and the accumulated unitary.
fn jacobi_hermitian(a: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = a.rows();
    let mut m = a.clone();
    let mut v = ComplexMatrix::identity(n);
    let norm = m.frobenius_norm();
    if norm == 0.0 || n == 1 {
        let values = (0..n).map(|i| m[(i, i)].re).collect();
        return (values, v);
    }

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[(p, q)].norm_sqr();
            }
        }
        if (2.0 * off).sqrt() <= JACOBI_TOL * norm {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let amod = apq.norm();
                if amod == 0.0 {
                    continue;
                }
                let phase = apq / amod;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                // Zero the (p,q) entry with U = [[c, -phase*s], [conj(phase)*s, c]],
                // choosing the smaller rotation angle (|t| <= 1) so diagonal
                // order is preserved under near-diagonal input.
                let tau = (app - aqq) / (2.0 * amod);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let sp = phase * s; // phase * sin
                let spc = phase.conj() * s;

                // A <- A U (columns p and q of every row).
                for i in 0..n {
                    let aip = m[(i, p)];
                    let aiq = m[(i, q)];
                    m[(i, p)] = aip * c + aiq * spc;
                    m[(i, q)] = -aip * sp + aiq * c;
                }
                // A <- U* A (rows p and q of every column).
                for j in 0..n {
                    let apj = m[(p, j)];
                    let aqj = m[(q, j)];
                    m[(p, j)] = apj * c + aqj * sp;
                    m[(q, j)] = -apj * spc + aqj * c;
                }
                // V <- V U.
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * c + viq * spc;
                    v[(i, q)] = -vip * sp + viq * c;
                }
                // Kill rounding drift off the Hermitian manifold.
                m[(p, q)] = Complex64::new(0.0, 0.0);
                m[(q, p)] = Complex64::new(0.0, 0.0);
                m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);
            }
        }
    }

    let values = (0..n).map(|i| m[(i, i)].re).collect();
    (values, v)
}
