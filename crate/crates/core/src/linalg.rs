//! Dense complex matrices and a cyclic-Jacobi Hermitian eigensolver.
//!
//! Every matrix in this crate is small (a handful of electron levels), so the
//! storage is a flat row-major `Vec<Complex64>` and the eigensolver favors
//! unconditional reliability over asymptotic speed.

use num_complex::Complex64 as C64;
use thiserror::Error;

/// Hermiticity tolerance accepted by [`hermitian_eig`], relative to the
/// largest entry magnitude (floored at 1).
pub const EIG_HERMITICITY_TOL: f64 = 1e-12;

/// Off-diagonal Frobenius threshold for Jacobi convergence, relative to the
/// Frobenius norm of the input.
const JACOBI_OFF_TOL: f64 = 1e-14;

/// Upper bound on Jacobi sweeps; desk-scale Hermitian matrices converge in a
/// handful.
const JACOBI_MAX_SWEEPS: usize = 30;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { defect: f64, tol: f64 },
    #[error("dimension mismatch: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    DimensionMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("Jacobi iteration failed to converge in {sweeps} sweeps (off-diagonal {off:.3e})")]
    NoConvergence { sweeps: usize, off: f64 },
}

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl std::fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a square matrix from rows of `(re, im)` pairs.
    pub fn from_rows(rows: &[Vec<(f64, f64)>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_fn(r, c, |i, j| {
            let (re, im) = rows[i][j];
            C64::new(re, im)
        })
    }

    pub fn diagonal(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
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

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn dot(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "matrix product dimension mismatch");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    pub fn scale(&self, factor: C64) -> CMatrix {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= factor;
        }
        out
    }

    /// In-place `self += coeff * other`, the only vector-space operation the
    /// Runge-Kutta stepper needs.
    pub fn scaled_add_assign(&mut self, coeff: f64, other: &CMatrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += coeff * b;
        }
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max_ij |m_ij - conj(m_ji)|`; zero for exactly Hermitian matrices.
    pub fn hermiticity_defect(&self) -> f64 {
        assert!(self.is_square());
        let mut defect = 0.0f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                defect = defect.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        defect
    }

    /// Returns `(m + m^dagger) / 2`.
    pub fn hermitized(&self) -> CMatrix {
        assert!(self.is_square());
        CMatrix::from_fn(self.rows, self.cols, |i, j| {
            0.5 * (self[(i, j)] + self[(j, i)].conj())
        })
    }

    /// Copies the `rows x cols` block with upper-left corner `(row0, col0)`.
    pub fn block(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> CMatrix {
        assert!(row0 + rows <= self.rows && col0 + cols <= self.cols);
        CMatrix::from_fn(rows, cols, |i, j| self[(row0 + i, col0 + j)])
    }

    pub fn set_block(&mut self, row0: usize, col0: usize, block: &CMatrix) {
        assert!(row0 + block.rows <= self.rows && col0 + block.cols <= self.cols);
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(row0 + i, col0 + j)] = block[(i, j)];
            }
        }
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

fn off_diagonal_frobenius(a: &CMatrix) -> f64 {
    let n = a.rows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)].norm_sqr();
            }
        }
    }
    sum.sqrt()
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns the eigenvalues in ascending order and a unitary matrix whose
/// columns are the matching eigenvectors, so `h = u diag(lambda) u^dagger`.
/// Inputs whose hermiticity defect exceeds [`EIG_HERMITICITY_TOL`] (relative
/// to the entry scale) are rejected.
pub fn hermitian_eig(h: &CMatrix) -> Result<(Vec<f64>, CMatrix), LinalgError> {
    if !h.is_square() {
        return Err(LinalgError::NotSquare { rows: h.rows(), cols: h.cols() });
    }
    let n = h.rows();
    if n == 0 {
        return Ok((Vec::new(), CMatrix::zeros(0, 0)));
    }
    let scale = h.max_abs().max(1.0);
    let defect = h.hermiticity_defect();
    let tol = EIG_HERMITICITY_TOL * scale;
    if defect > tol {
        return Err(LinalgError::NotHermitian { defect, tol });
    }

    let mut a = h.hermitized();
    let mut u = CMatrix::identity(n);
    let off_target = JACOBI_OFF_TOL * h.frobenius_norm().max(f64::MIN_POSITIVE);

    let mut sweeps = 0;
    while off_diagonal_frobenius(&a) > off_target {
        if sweeps >= JACOBI_MAX_SWEEPS {
            return Err(LinalgError::NoConvergence {
                sweeps,
                off: off_diagonal_frobenius(&a),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= off_target / (n as f64) {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let phase = apq / r;
                // Rotation angle from the real 2x2 problem after absorbing
                // the phase of a_pq: r t^2 + (a_qq - a_pp) t - r = 0.
                let theta = (aqq - app) / (2.0 * r);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = phase * (t * c);

                // a <- j^dagger a j with j = [[c, s], [-conj(s), c]] acting on
                // columns (p, q); apply to columns, then rows.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s.conj() * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s.conj() * apk + c * aqk;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(app - t * r, 0.0);
                a[(q, q)] = C64::new(aqq + t * r, 0.0);

                for k in 0..n {
                    let ukp = u[(k, p)];
                    let ukq = u[(k, q)];
                    u[(k, p)] = c * ukp - s.conj() * ukq;
                    u[(k, q)] = s * ukp + c * ukq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| u[(i, order[j])]);
    Ok((eigenvalues, vectors))
}
