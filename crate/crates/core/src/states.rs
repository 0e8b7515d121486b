//! Density matrices, random states with a prescribed rank, and the exact
//! entropy / mutual-information oracle.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::qmatrix::io::{content_lines, fmt_f64, parse_f64, read_matrix, write_matrix};
use crate::qmatrix::{
    eig_hermitian, numerical_rank, partial_trace_matrix, tensor, ComplexMatrix, HermitianMatrix,
    Subsystem,
};

pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;

/// Unit-trace positive semidefinite Hermitian matrix.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: HermitianMatrix,
    declared_rank: Option<usize>,
}

impl DensityMatrix {
    pub fn new(matrix: HermitianMatrix) -> Result<Self> {
        let trace = matrix.trace();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::Validation(format!("trace is {trace:.17} (expected 1)")));
        }
        let eig = eig_hermitian(&matrix);
        let min = eig.eigenvalues[0];
        if min < -PSD_TOL {
            return Err(Error::Validation(format!(
                "not positive semidefinite (min eigenvalue {min:e})"
            )));
        }
        Ok(Self {
            matrix,
            declared_rank: None,
        })
    }

    /// Validates and additionally requires the numerical rank to equal `rank`.
    pub fn with_rank(matrix: HermitianMatrix, rank: usize) -> Result<Self> {
        let mut rho = Self::new(matrix)?;
        let actual = rho.numerical_rank();
        if actual != rank {
            return Err(Error::Validation(format!(
                "declared rank {rank} but numerical rank is {actual}"
            )));
        }
        rho.declared_rank = Some(rank);
        Ok(rho)
    }

    pub fn from_matrix(m: ComplexMatrix) -> Result<Self> {
        Self::new(HermitianMatrix::new(m)?)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: HermitianMatrix::identity(dim).scale(1.0 / dim as f64),
            declared_rank: Some(dim),
        }
    }

    /// `|ψ⟩⟨ψ|` for a normalized state vector.
    pub fn pure(state: &[Complex64]) -> Result<Self> {
        let norm: f64 = state.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > TRACE_TOL {
            return Err(Error::Validation(format!("state vector has norm² {norm}")));
        }
        Self::with_rank(HermitianMatrix::new(ComplexMatrix::outer(state))?, 1)
    }

    /// Basis state `|index⟩⟨index|`.
    pub fn basis_state(dim: usize, index: usize) -> Self {
        let mut diag = vec![0.0; dim];
        diag[index] = 1.0;
        Self {
            matrix: HermitianMatrix::from_real_diagonal(&diag),
            declared_rank: Some(1),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn declared_rank(&self) -> Option<usize> {
        self.declared_rank
    }

    pub fn as_hermitian(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        self.matrix.as_matrix()
    }

    /// Ascending spectrum.
    pub fn eigenvalues(&self) -> Vec<f64> {
        eig_hermitian(&self.matrix).eigenvalues
    }

    pub fn numerical_rank(&self) -> usize {
        numerical_rank(&self.eigenvalues())
    }

    /// `U ρ U†`, re-validated.
    pub fn conjugate_by(&self, unitary: &ComplexMatrix) -> Result<Self> {
        Self::from_matrix(self.as_matrix().conjugate_by(unitary)?)
    }
}

/// `−Σ p ln p` with `0 ln 0 = 0`; negative entries are treated as zero.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    let s: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum();
    s + 0.0
}

/// `S(ρ) = −Tr ρ ln ρ` in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    shannon_entropy(&rho.eigenvalues()).max(0.0)
}

/// `ρ_A ⊗ ρ_B` built from the marginals of `ρ_AB`.
pub fn product_of_marginals(rho_ab: &DensityMatrix, d_a: usize, d_b: usize) -> Result<DensityMatrix> {
    let a = partial_trace_matrix(rho_ab.as_matrix(), (d_a, d_b), Subsystem::A)?;
    let b = partial_trace_matrix(rho_ab.as_matrix(), (d_a, d_b), Subsystem::B)?;
    DensityMatrix::from_matrix(tensor(&a, &b)?)
}

/// `I(A:B) = S(ρ_A) + S(ρ_B) − S(ρ_AB)`.
pub fn exact_qmi(rho_ab: &DensityMatrix, d_a: usize, d_b: usize) -> Result<f64> {
    let rho_a = DensityMatrix::from_matrix(partial_trace_matrix(
        rho_ab.as_matrix(),
        (d_a, d_b),
        Subsystem::A,
    )?)?;
    let rho_b = DensityMatrix::from_matrix(partial_trace_matrix(
        rho_ab.as_matrix(),
        (d_a, d_b),
        Subsystem::B,
    )?)?;
    Ok(von_neumann_entropy(&rho_a) + von_neumann_entropy(&rho_b) - von_neumann_entropy(rho_ab))
}

/// A state assembled from a known spectrum and eigenbasis:
/// `ρ = Σ_i p_i |ψ_i⟩⟨ψ_i|` with `|ψ_i⟩` the first `r` columns of `eigenbasis`.
#[derive(Clone, Debug)]
pub struct SpectralState {
    pub probabilities: Vec<f64>,
    pub eigenbasis: ComplexMatrix,
    pub seed: u64,
}

impl SpectralState {
    pub fn new(probabilities: Vec<f64>, eigenbasis: ComplexMatrix, seed: u64) -> Result<Self> {
        let d = eigenbasis.rows();
        if !eigenbasis.is_square() {
            return Err(Error::Size("eigenbasis must be square".into()));
        }
        if probabilities.is_empty() || probabilities.len() > d {
            return Err(Error::Parameter(format!(
                "{} probabilities for dimension {d}",
                probabilities.len()
            )));
        }
        if probabilities.iter().any(|&p| p.is_nan() || p < 0.0) {
            return Err(Error::Validation("negative probability".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > TRACE_TOL {
            return Err(Error::Validation(format!("probabilities sum to {total}")));
        }
        Ok(Self {
            probabilities,
            eigenbasis,
            seed,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenbasis.rows()
    }

    pub fn rank(&self) -> usize {
        self.probabilities.len()
    }

    /// Entropy known at generation time.
    pub fn entropy(&self) -> f64 {
        shannon_entropy(&self.probabilities)
    }

    pub fn assemble(&self) -> Result<DensityMatrix> {
        let m = HermitianMatrix::from_spectrum(&self.probabilities, &self.eigenbasis)?;
        let rank = numerical_rank(&self.probabilities);
        DensityMatrix::with_rank(m, rank)
    }

    /// Header `d r seed`, the `r` probabilities one per line, then the
    /// eigenbasis in the matrix text format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {} {}", self.dim(), self.rank(), self.seed);
        for &p in &self.probabilities {
            let _ = writeln!(s, "{}", fmt_f64(p));
        }
        write_matrix(&self.eigenbasis, &mut s);
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = content_lines(text);
        let (ln, header) = lines
            .next()
            .ok_or_else(|| Error::Parse("empty spectral state".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let [d, r, seed] = fields.as_slice() else {
            return Err(Error::Parse(format!("line {ln}: expected `d r seed`")));
        };
        let bad = |what: &str| Error::Parse(format!("line {ln}: bad {what}"));
        let d: usize = d.parse().map_err(|_| bad("d"))?;
        let r: usize = r.parse().map_err(|_| bad("r"))?;
        let seed: u64 = seed.parse().map_err(|_| bad("seed"))?;
        let mut p = Vec::with_capacity(r);
        for _ in 0..r {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| Error::Parse("truncated probability vector".into()))?;
            p.push(parse_f64(line.trim(), ln)?);
        }
        let basis = read_matrix(&mut lines)?;
        if basis.rows() != d {
            return Err(Error::Size(format!("header says d={d}, basis is {}", basis.rows())));
        }
        Self::new(p, basis, seed)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// How the nonzero spectrum of a random state is drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SpectrumKind {
    /// Flat Dirichlet over the `r` outcomes.
    #[default]
    Dirichlet,
    /// Every nonzero eigenvalue equal to `1/r`.
    Uniform,
}

/// Haar-random unitary: modified Gram-Schmidt (applied twice) on the columns
/// of a complex Gaussian matrix.
pub fn haar_unitary(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let mut cols: Vec<Vec<Complex64>> = (0..dim)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    Complex64::new(re, im)
                })
                .collect()
        })
        .collect();
    for k in 0..dim {
        for _pass in 0..2 {
            for j in 0..k {
                let (done, rest) = cols.split_at_mut(k);
                let qj = &done[j];
                let proj: Complex64 = qj.iter().zip(rest[0].iter()).map(|(a, b)| a.conj() * b).sum();
                for (x, q) in rest[0].iter_mut().zip(qj) {
                    *x -= proj * q;
                }
            }
        }
        let norm = cols[k].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for x in cols[k].iter_mut() {
            *x /= norm;
        }
    }
    let mut u = ComplexMatrix::zeros(dim, dim);
    for (j, col) in cols.iter().enumerate() {
        for (i, &z) in col.iter().enumerate() {
            u[(i, j)] = z;
        }
    }
    u
}

pub fn random_density(dim: usize, rank: usize, seed: u64) -> Result<SpectralState> {
    random_density_with(dim, rank, seed, SpectrumKind::Dirichlet)
}

/// Random rank-`rank` state of dimension `dim`; identical seeds give
/// bit-identical states.
pub fn random_density_with(
    dim: usize,
    rank: usize,
    seed: u64,
    kind: SpectrumKind,
) -> Result<SpectralState> {
    if rank == 0 || rank > dim {
        return Err(Error::Parameter(format!("rank {rank} must lie in 1..={dim}")));
    }
    if dim > crate::qmatrix::MAX_DIM {
        return Err(Error::Size(format!("dimension {dim} too large")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probabilities = match kind {
        SpectrumKind::Dirichlet => {
            let draws: Vec<f64> = (0..rank)
                .map(|_| {
                    let x: f64 = Exp1.sample(&mut rng);
                    x.max(f64::MIN_POSITIVE)
                })
                .collect();
            let total: f64 = draws.iter().sum();
            draws.iter().map(|x| x / total).collect()
        }
        SpectrumKind::Uniform => vec![1.0 / rank as f64; rank],
    };
    let eigenbasis = haar_unitary(dim, &mut rng);
    SpectralState::new(probabilities, eigenbasis, seed)
}
