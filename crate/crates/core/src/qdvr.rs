//! Variational entropy functionals.
//!
//! * `f(T) = −Tr(ρT) + ln Tr e^T`, whose infimum over Hermitian `T` is `S(ρ)`.
//! * `g(T) = −c Tr(ρT) + ln Tr e^{cT}` restricted to density matrices `T`;
//!   with `c` large enough the infimum over rank-`r` `T` is within `ε` of `S(ρ)`.
//!
//! Both are evaluated through eigenvalues with the maximum shifted out, so
//! `c·t` in the hundreds does not overflow.

use crate::error::{Error, Result};
use crate::qmatrix::{eig_hermitian, log_sum_exp, log_trace_exp, HermitianMatrix};
use crate::states::{DensityMatrix, SpectralState};

/// Accuracy target, trace scale and variational rank for one entropy estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QdvrConfig {
    pub epsilon: f64,
    pub c: f64,
    pub rank_t: usize,
}

impl QdvrConfig {
    pub fn new(epsilon: f64, c: f64, rank_t: usize) -> Result<Self> {
        if epsilon.is_nan() || epsilon <= 0.0 {
            return Err(Error::Parameter(format!("epsilon must be positive, got {epsilon}")));
        }
        if !c.is_finite() || c <= 0.0 {
            return Err(Error::Parameter(format!("c must be positive and finite, got {c}")));
        }
        if rank_t == 0 {
            return Err(Error::Parameter("rank_t must be at least 1".into()));
        }
        Ok(Self { epsilon, c, rank_t })
    }

    /// `c = auto_c(state_rank, qubits, ε)`, optionally capped at `c_max`.
    pub fn auto(
        epsilon: f64,
        rank_t: usize,
        state_rank: usize,
        qubits: usize,
        c_max: Option<f64>,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::Parameter(format!("epsilon must lie in (0, 1], got {epsilon}")));
        }
        let c = auto_c(state_rank.max(1), qubits.max(1), epsilon);
        let c = c_max.map_or(c, |cap| c.min(cap));
        Self::new(epsilon, c, rank_t)
    }
}

/// Trace scale `2rn + r ln(1/ε)` with `n` the qubit count.
pub fn auto_c(rank: usize, qubits: usize, epsilon: f64) -> f64 {
    let r = rank as f64;
    2.0 * r * qubits as f64 + r * (1.0 / epsilon).ln()
}

/// Upper bound on `Tr T0` from the explicit construction: `2r ln d + r ln(1/ε)`.
pub fn trace_bound(rank: usize, dim: usize, epsilon: f64) -> f64 {
    let r = rank as f64;
    2.0 * r * (dim as f64).ln() + r * (1.0 / epsilon).ln()
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Size(format!("operator dimension {a} vs state dimension {b}")));
    }
    Ok(())
}

/// `f(T) = −Tr(ρT) + ln Tr e^T`.
pub fn gibbs_f(t: &HermitianMatrix, rho: &DensityMatrix) -> Result<f64> {
    check_dims(t.dim(), rho.dim())?;
    let expectation = t.trace_product(rho.as_hermitian())?;
    Ok(-expectation + log_trace_exp(t))
}

/// `T + cI`; leaves `f` unchanged.
pub fn shift_t(t: &HermitianMatrix, c: f64) -> HermitianMatrix {
    t.add_identity(c)
}

/// Shifts `T` by `−λ_min` when negative so the result is positive
/// semidefinite with the same `f`. Returns the shifted matrix and the shift.
pub fn make_positive(t: &HermitianMatrix) -> (HermitianMatrix, f64) {
    let min = eig_hermitian(t).eigenvalues[0];
    let shift = if min < 0.0 { -min } else { 0.0 };
    (shift_t(t, shift), shift)
}

/// Rank-`r` positive `T0` with `|S(ρ) − f(T0)| < ε`: in the eigenbasis of `ρ`,
/// `t_i = ln(p_i/κ)` where `p_i ≥ κ = ε/d²` and zero otherwise. Returns
/// `T0` and the trace bound `2r ln d + r ln(1/ε)`.
pub fn construct_t0(spectrum: &SpectralState, epsilon: f64) -> Result<(HermitianMatrix, f64)> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Parameter(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let d = spectrum.dim();
    let kappa = epsilon / (d * d) as f64;
    let t: Vec<f64> = spectrum
        .probabilities
        .iter()
        .map(|&p| if p >= kappa { (p / kappa).ln() } else { 0.0 })
        .collect();
    let t0 = HermitianMatrix::from_spectrum(&t, &spectrum.eigenbasis)?;
    Ok((t0, trace_bound(spectrum.rank(), d, epsilon)))
}

/// `g(T) = −c Tr(ρT) + ln Tr e^{cT}` for a density matrix `T`.
pub fn qdvr_g(t: &DensityMatrix, rho: &DensityMatrix, c: f64) -> Result<f64> {
    check_dims(t.dim(), rho.dim())?;
    let expectation = t.as_hermitian().trace_product(rho.as_hermitian())?;
    let scaled: Vec<f64> = t.eigenvalues().into_iter().map(|x| c * x).collect();
    Ok(-c * expectation + log_sum_exp(&scaled))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmatrix::{matrix_log, ComplexMatrix};
    use crate::states::{random_density, von_neumann_entropy};

    #[test]
    fn zero_operator_gives_ln_d() {
        let rho = random_density(4, 2, 1).unwrap().assemble().unwrap();
        let f = gibbs_f(&HermitianMatrix::zeros(4), &rho).unwrap();
        assert!((f - 4f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn log_rho_attains_entropy() {
        let rho = random_density(4, 4, 2).unwrap().assemble().unwrap();
        let t = matrix_log(rho.as_hermitian()).unwrap();
        let f = gibbs_f(&t, &rho).unwrap();
        assert!((f - von_neumann_entropy(&rho)).abs() < 1e-10);
    }

    #[test]
    fn dimension_mismatch() {
        let rho = DensityMatrix::maximally_mixed(4);
        assert!(matches!(gibbs_f(&HermitianMatrix::zeros(2), &rho), Err(Error::Size(_))));
        let t = DensityMatrix::maximally_mixed(2);
        assert!(qdvr_g(&t, &rho, 1.0).is_err());
    }

    #[test]
    fn shift_by_zero_is_identity_and_min_shift_is_psd() {
        let t = HermitianMatrix::from_real_diagonal(&[-2.0, 0.5, 3.0]);
        assert_eq!(shift_t(&t, 0.0), t);
        let (p, shift) = make_positive(&t);
        assert_eq!(shift, 2.0);
        assert!(eig_hermitian(&p).eigenvalues[0] >= 0.0);
    }

    #[test]
    fn t0_two_level_example() {
        // p = (0.5, 0.5), d = 4, ε = 0.1 → κ = 0.00625, t = (ln 80, ln 80).
        let s = SpectralState::new(vec![0.5, 0.5], ComplexMatrix::identity(4), 0).unwrap();
        let (t0, bound) = construct_t0(&s, 0.1).unwrap();
        let expected = 80f64.ln();
        assert!((t0.as_matrix()[(0, 0)].re - expected).abs() < 1e-14);
        assert!((t0.as_matrix()[(1, 1)].re - expected).abs() < 1e-14);
        assert_eq!(t0.as_matrix()[(2, 2)].re, 0.0);
        assert!((t0.trace() - 8.7641).abs() < 1e-4);
        assert!(t0.trace() <= bound);
    }

    #[test]
    fn t0_pure_state() {
        let s = random_density(8, 1, 4).unwrap();
        let eps = 0.05;
        let (t0, _) = construct_t0(&s, eps).unwrap();
        assert!((t0.trace() - (64.0 / eps).ln()).abs() < 1e-10);
        let f = gibbs_f(&t0, &s.assemble().unwrap()).unwrap();
        assert!(f.abs() < eps);
    }

    #[test]
    fn t0_rejects_bad_epsilon() {
        let s = random_density(4, 1, 0).unwrap();
        assert!(matches!(construct_t0(&s, 1.0), Err(Error::Parameter(_))));
        assert!(matches!(construct_t0(&s, 0.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn maximally_mixed_g_is_ln_d() {
        let rho = DensityMatrix::maximally_mixed(8);
        for c in [0.5, 7.0, 80.0] {
            let g = qdvr_g(&rho, &rho, c).unwrap();
            assert!((g - 8f64.ln()).abs() < 1e-12, "c={c}: {g}");
        }
    }

    #[test]
    fn pure_state_g_near_zero_at_auto_c() {
        let eps = 0.01;
        let s = random_density(8, 1, 9).unwrap();
        let rho = s.assemble().unwrap();
        let c = auto_c(1, 3, eps);
        let g = qdvr_g(&rho, &rho, c).unwrap();
        // Closed form: ln(d − 1 + e^c) − c.
        let closed = (7.0 + c.exp()).ln() - c;
        assert!((g - closed).abs() < 1e-9);
        assert!(g.abs() < eps);
    }

    #[test]
    fn auto_c_examples() {
        assert_eq!(auto_c(8, 5, 1.0), 80.0);
        assert_eq!(auto_c(1, 1, 1.0), 2.0);
        let c = auto_c(2, 4, 0.1);
        assert!((c - (16.0 + 2.0 * 10f64.ln())).abs() < 1e-12);
        assert!((c - 20.605).abs() < 1e-3);
    }

    #[test]
    fn config_validation() {
        assert!(QdvrConfig::new(0.0, 1.0, 1).is_err());
        assert!(QdvrConfig::new(0.1, -1.0, 1).is_err());
        assert!(QdvrConfig::new(0.1, 1.0, 0).is_err());
        let capped = QdvrConfig::auto(0.01, 8, 8, 5, Some(80.0)).unwrap();
        assert_eq!(capped.c, 80.0);
        let uncapped = QdvrConfig::auto(0.01, 8, 8, 5, None).unwrap();
        assert!(uncapped.c > 80.0);
    }
}
