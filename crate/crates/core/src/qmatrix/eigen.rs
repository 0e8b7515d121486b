//! Cyclic Jacobi eigensolver for dense Hermitian matrices, and spectral
//! matrix functions built on top of it.

use num_complex::Complex64;

use super::dense::{ComplexMatrix, HermitianMatrix};
use crate::error::{Error, Result};

/// Off-diagonal Frobenius norm (relative to `‖A‖_F`) at which sweeps stop.
pub const JACOBI_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues below `RANK_TOL * λ_max` count as zero.
pub const RANK_TOL: f64 = 1e-10;

/// `A = V diag(λ) V†` with `λ` ascending and `V` unitary.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn reconstruct(&self) -> HermitianMatrix {
        HermitianMatrix::from_spectrum(&self.eigenvalues, &self.eigenvectors)
            .expect("eigenvector matrix is square")
    }

    /// Number of eigenvalues above `RANK_TOL * λ_max`.
    pub fn numerical_rank(&self) -> usize {
        numerical_rank(&self.eigenvalues)
    }
}

pub fn numerical_rank(eigenvalues: &[f64]) -> usize {
    let max = eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return 0;
    }
    eigenvalues.iter().filter(|&&x| x > RANK_TOL * max).count()
}

fn off_diagonal_norm(a: &[Complex64], d: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                acc += a[i * d + j].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
pub fn eig_hermitian(matrix: &HermitianMatrix) -> EigenDecomposition {
    let d = matrix.dim();
    let mut a = matrix.as_matrix().data().to_vec();
    let mut v = ComplexMatrix::identity(d);
    let norm = matrix.as_matrix().frobenius_norm();

    for _ in 0..MAX_SWEEPS {
        let off = off_diagonal_norm(&a, d);
        if off <= JACOBI_TOL * norm || off == 0.0 {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                rotate(&mut a, v.data_mut(), d, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    let diag: Vec<f64> = (0..d).map(|i| a[i * d + i].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));

    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let mut eigenvectors = ComplexMatrix::zeros(d, d);
    for (new_col, &old_col) in order.iter().enumerate() {
        for i in 0..d {
            eigenvectors[(i, new_col)] = v[(i, old_col)];
        }
    }
    EigenDecomposition {
        eigenvalues,
        eigenvectors,
    }
}

/// Annihilates `a[p][q]` with `A <- G† A G`, accumulating `V <- V G`.
fn rotate(a: &mut [Complex64], v: &mut [Complex64], d: usize, p: usize, q: usize) {
    let apq = a[p * d + q];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = a[p * d + p].re;
    let aqq = a[q * d + q].re;
    // Skip pairs already below rounding relative to their diagonal.
    if mag < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a[p * d + q] = Complex64::new(0.0, 0.0);
        a[q * d + p] = Complex64::new(0.0, 0.0);
        return;
    }
    let phase = apq / mag;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // G = diag(1, conj(phase)) · [[c, s], [-s, c]] restricted to (p, q).
    let g_pp = Complex64::new(c, 0.0);
    let g_pq = Complex64::new(s, 0.0);
    let g_qp = -phase.conj() * s;
    let g_qq = phase.conj() * c;

    for k in 0..d {
        let akp = a[k * d + p];
        let akq = a[k * d + q];
        a[k * d + p] = akp * g_pp + akq * g_qp;
        a[k * d + q] = akp * g_pq + akq * g_qq;
    }
    for k in 0..d {
        let apk = a[p * d + k];
        let aqk = a[q * d + k];
        a[p * d + k] = g_pp.conj() * apk + g_qp.conj() * aqk;
        a[q * d + k] = g_pq.conj() * apk + g_qq.conj() * aqk;
    }
    a[p * d + q] = Complex64::new(0.0, 0.0);
    a[q * d + p] = Complex64::new(0.0, 0.0);
    a[p * d + p] = Complex64::new(a[p * d + p].re, 0.0);
    a[q * d + q] = Complex64::new(a[q * d + q].re, 0.0);

    for k in 0..d {
        let vkp = v[k * d + p];
        let vkq = v[k * d + q];
        v[k * d + p] = vkp * g_pp + vkq * g_qp;
        v[k * d + q] = vkp * g_pq + vkq * g_qq;
    }
}

/// `V f(λ) V†`.
pub fn matrix_func(a: &HermitianMatrix, f: impl Fn(f64) -> f64) -> HermitianMatrix {
    let eig = eig_hermitian(a);
    let values: Vec<f64> = eig.eigenvalues.iter().map(|&x| f(x)).collect();
    HermitianMatrix::from_spectrum(&values, &eig.eigenvectors).expect("square basis")
}

pub fn matrix_exp(a: &HermitianMatrix) -> HermitianMatrix {
    matrix_func(a, f64::exp)
}

/// Principal logarithm; every eigenvalue must be strictly positive.
pub fn matrix_log(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let eig = eig_hermitian(a);
    if let Some(&bad) = eig.eigenvalues.iter().find(|&&x| x <= 0.0) {
        return Err(Error::Domain {
            function: "log",
            eigenvalue: bad,
        });
    }
    let values: Vec<f64> = eig.eigenvalues.iter().map(|x| x.ln()).collect();
    HermitianMatrix::from_spectrum(&values, &eig.eigenvectors)
}

/// `ln Σ exp(x_i)` with the maximum shifted out.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `ln Tr e^A` through the spectrum.
pub fn log_trace_exp(a: &HermitianMatrix) -> f64 {
    log_sum_exp(&eig_hermitian(a).eigenvalues)
}
