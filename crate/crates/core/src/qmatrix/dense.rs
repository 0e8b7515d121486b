use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest matrix dimension accepted anywhere in the crate (10 qubits).
pub const MAX_DIM: usize = 1 << 10;

/// Entrywise Hermiticity tolerance, relative to `max(1, max |a_ij|)`.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Dense complex matrix in row-major order.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Size(format!("empty matrix {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Size(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Parameter(format!(
                "non-finite entry at ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(x, 0.0);
        }
        m
    }

    /// `|v><v|` for a state vector `v`.
    pub fn outer(v: &[Complex64]) -> Self {
        let d = v.len();
        let mut m = Self::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = v[i] * v[j].conj();
            }
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

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> Complex64 {
        self.diagonal().into_iter().sum()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Size(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `U A U†`.
    pub fn conjugate_by(&self, unitary: &Self) -> Result<Self> {
        unitary.matmul(self)?.matmul(&unitary.adjoint())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Size(format!(
                "shape mismatch {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest `|a_ij - conj(a_ji)|` and where it occurs.
    pub fn max_asymmetry(&self) -> (f64, usize, usize) {
        let mut worst = (0.0, 0, 0);
        for i in 0..self.rows {
            for j in i..self.cols {
                let diff = (self[(i, j)] - self[(j, i)].conj()).norm();
                if diff > worst.0 {
                    worst = (diff, i, j);
                }
            }
        }
        worst
    }

    /// Trace of `self * other` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Result<Complex64> {
        if self.cols != other.rows || self.rows != other.cols {
            return Err(Error::Size(format!(
                "trace of product undefined for {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        Ok(acc)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, " ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, " {:+.6}{:+.6}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// A dense Hermitian matrix. Construction checks `A = A†` and then
/// symmetrizes so downstream spectral code sees an exactly Hermitian input.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Size(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        if m.rows() > MAX_DIM {
            return Err(Error::Size(format!("dimension {} exceeds {MAX_DIM}", m.rows())));
        }
        let (asym, row, col) = m.max_asymmetry();
        if asym > HERMITIAN_TOL * m.max_abs().max(1.0) {
            return Err(Error::NotHermitian {
                max_asymmetry: asym,
                row,
                col,
            });
        }
        Ok(Self::symmetrized(m))
    }

    /// Hermitian part `(A + A†)/2`, no check.
    pub(crate) fn symmetrized(m: ComplexMatrix) -> Self {
        let d = m.rows();
        let mut out = m;
        for i in 0..d {
            let re = out[(i, i)].re;
            out[(i, i)] = Complex64::new(re, 0.0);
            for j in (i + 1)..d {
                let avg = (out[(i, j)] + out[(j, i)].conj()) * 0.5;
                out[(i, j)] = avg;
                out[(j, i)] = avg.conj();
            }
        }
        Self(out)
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self(ComplexMatrix::from_real_diagonal(diag))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(ComplexMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim))
    }

    /// `V diag(values) V†`.
    pub fn from_spectrum(values: &[f64], basis: &ComplexMatrix) -> Result<Self> {
        if basis.rows() != basis.cols() || basis.cols() < values.len() {
            return Err(Error::Size(format!(
                "{} eigenvalues for a {}x{} basis",
                values.len(),
                basis.rows(),
                basis.cols()
            )));
        }
        let d = basis.rows();
        let mut out = ComplexMatrix::zeros(d, d);
        for (k, &lam) in values.iter().enumerate() {
            if lam == 0.0 {
                continue;
            }
            for i in 0..d {
                let vi = basis[(i, k)] * lam;
                for j in 0..d {
                    out[(i, j)] += vi * basis[(j, k)].conj();
                }
            }
        }
        Ok(Self::symmetrized(out))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    /// `A + shift * I`.
    pub fn add_identity(&self, shift: f64) -> Self {
        let mut m = self.0.clone();
        for i in 0..self.dim() {
            m[(i, i)] += Complex64::new(shift, 0.0);
        }
        Self(m)
    }

    /// `Re Tr(A B)`; exact for Hermitian pairs up to rounding.
    pub fn trace_product(&self, other: &HermitianMatrix) -> Result<f64> {
        Ok(self.0.trace_product(&other.0)?.re)
    }
}

/// Kronecker product `A ⊗ B`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = a.rows().checked_mul(b.rows());
    let cols = a.cols().checked_mul(b.cols());
    let (rows, cols) = match (rows, cols) {
        (Some(r), Some(c)) if r <= MAX_DIM && c <= MAX_DIM => (r, c),
        _ => {
            return Err(Error::Size(format!(
                "tensor product of {}x{} and {}x{} exceeds {MAX_DIM}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            )))
        }
    };
    let mut out = ComplexMatrix::zeros(rows, cols);
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let aij = a[(i, j)];
            for k in 0..b.rows() {
                for l in 0..b.cols() {
                    out[(i * b.rows() + k, j * b.cols() + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

/// Which factor of a bipartite space `A ⊗ B` to keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Partial trace of a `(d_a d_b) x (d_a d_b)` matrix over the discarded factor.
pub fn partial_trace_matrix(
    m: &ComplexMatrix,
    (d_a, d_b): (usize, usize),
    keep: Subsystem,
) -> Result<ComplexMatrix> {
    if d_a == 0 || d_b == 0 || !m.is_square() || d_a * d_b != m.rows() {
        return Err(Error::Size(format!(
            "subsystem dims {d_a}x{d_b} do not factor a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let out = match keep {
        Subsystem::A => {
            let mut out = ComplexMatrix::zeros(d_a, d_a);
            for i in 0..d_a {
                for ip in 0..d_a {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for j in 0..d_b {
                        acc += m[(i * d_b + j, ip * d_b + j)];
                    }
                    out[(i, ip)] = acc;
                }
            }
            out
        }
        Subsystem::B => {
            let mut out = ComplexMatrix::zeros(d_b, d_b);
            for j in 0..d_b {
                for jp in 0..d_b {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for i in 0..d_a {
                        acc += m[(i * d_b + j, i * d_b + jp)];
                    }
                    out[(j, jp)] = acc;
                }
            }
            out
        }
    };
    Ok(out)
}
