//! The circuit form of the variational loss
//!
//! `g(t, θ) = −c Σ_{i<r} t_i ⟨i|U(θ)ρU(θ)†|i⟩ + ln(d − r + Σ_{i<r} e^{c t_i})`
//!
//! and its gradients: the two-term parameter-shift rule for every rotation
//! angle, and the closed form in `t` chained through the simplex map.

use std::f64::consts::FRAC_PI_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use super::ansatz::Ansatz;
use super::simplex::{simplex_jacobian, simplex_map, SimplexParams};
use crate::error::{Error, Result};
use crate::qdvr::QdvrConfig;
use crate::qmatrix::{log_sum_exp, ComplexMatrix, HermitianMatrix};
use crate::states::DensityMatrix;

/// First `rank_t` computational-basis populations of `U ρ U†`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasuredDiagonal {
    pub probs: Vec<f64>,
    /// Zero means exact expectation values.
    pub shots: u64,
}

fn check(ansatz: &Ansatz, rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != ansatz.dim() {
        return Err(Error::Size(format!(
            "state dimension {} vs {}-qubit circuit",
            rho.dim(),
            ansatz.qubits()
        )));
    }
    Ok(())
}

fn check_rank(rank_t: usize, d: usize) -> Result<()> {
    if rank_t == 0 || rank_t > d {
        return Err(Error::Parameter(format!("rank_t {rank_t} must lie in 1..={d}")));
    }
    Ok(())
}

/// Multinomial frequencies over all outcomes from `shots` draws.
pub(crate) fn sample_frequencies(probs: &[f64], shots: u64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut remaining = shots;
    let mut mass = 1.0;
    let mut out = Vec::with_capacity(probs.len());
    for (k, &p) in probs.iter().enumerate() {
        let p = p.max(0.0);
        let count = if k + 1 == probs.len() || remaining == 0 {
            remaining
        } else {
            let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
            Binomial::new(remaining, q)
                .expect("probability clamped to [0, 1]")
                .sample(&mut rng)
        };
        remaining -= count;
        mass -= p;
        out.push(count as f64 / shots as f64);
    }
    out
}

fn output_diagonal(ansatz: &Ansatz, rho: &DensityMatrix) -> Vec<f64> {
    ansatz
        .evolve(rho.as_matrix())
        .diagonal()
        .iter()
        .map(|z| z.re)
        .collect()
}

pub fn measure_diagonal(
    ansatz: &Ansatz,
    rho: &DensityMatrix,
    rank_t: usize,
    shots: u64,
    seed: u64,
) -> Result<MeasuredDiagonal> {
    check(ansatz, rho)?;
    check_rank(rank_t, rho.dim())?;
    let exact = output_diagonal(ansatz, rho);
    let mut probs = if shots == 0 {
        exact
    } else {
        sample_frequencies(&exact, shots, seed)
    };
    probs.truncate(rank_t);
    Ok(MeasuredDiagonal { probs, shots })
}

/// `g` from measured populations `q` and weights `t`.
pub fn loss_from_diagonal(q: &[f64], t: &[f64], c: f64, d: usize) -> f64 {
    let linear: f64 = t.iter().zip(q).map(|(ti, qi)| ti * qi).sum();
    -c * linear + log_partition(t, c, d)
}

/// `ln(d − r + Σ e^{c t_i})`.
fn log_partition(t: &[f64], c: f64, d: usize) -> f64 {
    let r = t.len();
    let mut terms: Vec<f64> = t.iter().map(|ti| c * ti).collect();
    if d > r {
        terms.push(((d - r) as f64).ln());
    }
    log_sum_exp(&terms)
}

fn check_phi(phi: &SimplexParams, config: &QdvrConfig) -> Result<()> {
    if phi.rank_t() != config.rank_t {
        return Err(Error::Parameter(format!(
            "{} simplex angles for rank_t {}",
            phi.phi.len(),
            config.rank_t
        )));
    }
    Ok(())
}

pub fn loss_g_circuit(
    ansatz: &Ansatz,
    phi: &SimplexParams,
    rho: &DensityMatrix,
    config: &QdvrConfig,
    shots: u64,
    seed: u64,
) -> Result<f64> {
    check_phi(phi, config)?;
    let measured = measure_diagonal(ansatz, rho, config.rank_t, shots, seed)?;
    let t = simplex_map(phi);
    Ok(loss_from_diagonal(&measured.probs, &t, config.c, rho.dim()))
}

/// `T = U(θ)† (Σ t_i |i⟩⟨i|) U(θ)`, the density matrix the circuit loss evaluates.
pub fn variational_operator(ansatz: &Ansatz, phi: &SimplexParams) -> Result<DensityMatrix> {
    let d = ansatz.dim();
    check_rank(phi.rank_t(), d)?;
    let mut diag = simplex_map(phi);
    diag.resize(d, 0.0);
    let u = ansatz.unitary();
    let t = HermitianMatrix::new(ComplexMatrix::from_real_diagonal(&diag).conjugate_by(&u.adjoint())?)?;
    DensityMatrix::new(t)
}

/// Parameter-shift derivative of `g` in `θ_j` with exact expectations:
/// `½[g(θ_j + π/2) − g(θ_j − π/2)]`, each side a full circuit evaluation.
pub fn grad_theta_shift(
    ansatz: &Ansatz,
    phi: &SimplexParams,
    rho: &DensityMatrix,
    config: &QdvrConfig,
    j: usize,
) -> Result<f64> {
    Ok(grad_theta_shift_sampled(ansatz, phi, rho, config, j, 0, 0)?.value)
}

/// A shift-rule estimate and its standard error (zero in exact mode).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShiftEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Shift rule with each side estimated from `shots` measurements.
pub fn grad_theta_shift_sampled(
    ansatz: &Ansatz,
    phi: &SimplexParams,
    rho: &DensityMatrix,
    config: &QdvrConfig,
    j: usize,
    shots: u64,
    seed: u64,
) -> Result<ShiftEstimate> {
    check_phi(phi, config)?;
    if j >= ansatz.n_params() {
        return Err(Error::Parameter(format!(
            "parameter index {j} out of range for {} parameters",
            ansatz.n_params()
        )));
    }
    let t = simplex_map(phi);
    let theta = ansatz.theta()[j];
    let mut sides = [0.0; 2];
    let mut variance = 0.0;
    for (k, shift) in [FRAC_PI_2, -FRAC_PI_2].into_iter().enumerate() {
        let shifted = ansatz.with_param(j, theta + shift);
        let seed_k = crate::derive_seed(seed, k as u64);
        let m = measure_diagonal(&shifted, rho, config.rank_t, shots, seed_k)?;
        sides[k] = loss_from_diagonal(&m.probs, &t, config.c, rho.dim());
        if shots > 0 {
            let mean: f64 = t.iter().zip(&m.probs).map(|(a, b)| a * b).sum();
            let second: f64 = t.iter().zip(&m.probs).map(|(a, b)| a * a * b).sum();
            variance += config.c * config.c * (second - mean * mean).max(0.0) / shots as f64;
        }
    }
    Ok(ShiftEstimate {
        value: 0.5 * (sides[0] - sides[1]),
        std_error: 0.5 * variance.sqrt(),
    })
}

/// `Re Tr(A B)` for Hermitian `A`, `B`.
fn trace_product_hermitian(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x * y.conj()).re)
        .sum()
}

/// Exact loss and all parameter-shift derivatives in one sweep.
#[derive(Clone, Debug)]
pub struct CircuitGradient {
    pub loss: f64,
    /// Populations of all `d` basis states after the circuit.
    pub diagonal: Vec<f64>,
    pub d_theta: Vec<f64>,
    pub d_t: Vec<f64>,
    pub d_phi: Vec<f64>,
}

/// Evaluates the shift rule for every angle without re-running the circuit
/// per parameter: the state before gate `k` is recovered by un-applying gates
/// from the output, and the measured observable is propagated backwards, so
/// each shifted expectation `Tr(M_k G(θ_k ± π/2) ρ_{k−1} G(θ_k ± π/2)†)` costs
/// one single-qubit update.
pub fn circuit_gradient(
    ansatz: &Ansatz,
    phi: &SimplexParams,
    rho: &DensityMatrix,
    config: &QdvrConfig,
) -> Result<CircuitGradient> {
    check(ansatz, rho)?;
    check_phi(phi, config)?;
    let d = rho.dim();
    check_rank(config.rank_t, d)?;
    let t = simplex_map(phi);
    let c = config.c;

    let gates = ansatz.gates();
    let theta = ansatz.theta();
    let mut state = ansatz.evolve(rho.as_matrix());
    let diagonal: Vec<f64> = state.diagonal().iter().map(|z| z.re).collect();

    let mut weights = vec![0.0; d];
    for (w, &ti) in weights.iter_mut().zip(&t) {
        *w = -c * ti;
    }
    let mut observable = ComplexMatrix::from_real_diagonal(&weights);
    let mut d_theta = vec![0.0; ansatz.n_params()];
    let mut scratch = ComplexMatrix::zeros(d, d);

    for gate in gates.iter().rev() {
        let angle = gate.param().map_or(0.0, |p| theta[p]);
        ansatz.unapply_gate(&mut state, gate, angle);
        if let Some(p) = gate.param() {
            let mut sides = [0.0; 2];
            for (k, shift) in [FRAC_PI_2, -FRAC_PI_2].into_iter().enumerate() {
                scratch.data_mut().copy_from_slice(state.data());
                ansatz.apply_gate(&mut scratch, gate, angle + shift);
                sides[k] = trace_product_hermitian(&observable, &scratch);
            }
            d_theta[p] = 0.5 * (sides[0] - sides[1]);
        }
        ansatz.unapply_gate(&mut observable, gate, angle);
    }

    let (d_t, d_phi) = t_gradients(&diagonal[..config.rank_t], phi, &t, c, d);
    let loss = loss_from_diagonal(&diagonal[..config.rank_t], &t, c, d);
    Ok(CircuitGradient {
        loss,
        diagonal,
        d_theta,
        d_t,
        d_phi,
    })
}

fn t_gradients(q: &[f64], phi: &SimplexParams, t: &[f64], c: f64, d: usize) -> (Vec<f64>, Vec<f64>) {
    let log_z = log_partition(t, c, d);
    let d_t: Vec<f64> = t
        .iter()
        .zip(q)
        .map(|(&ti, &qi)| -c * qi + c * (c * ti - log_z).exp())
        .collect();
    let jac = simplex_jacobian(phi);
    let d_phi = (0..phi.phi.len())
        .map(|j| d_t.iter().zip(&jac).map(|(g, row)| g * row[j]).sum())
        .collect();
    (d_t, d_phi)
}

/// `∂g/∂t_i` and the chain-ruled `∂g/∂φ_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct TGradient {
    pub d_t: Vec<f64>,
    pub d_phi: Vec<f64>,
}

/// `∂g/∂t_i = −c⟨i|UρU†|i⟩ + c e^{c t_i} / (d − r + Σ_j e^{c t_j})`, chained
/// through the exact Jacobian of the simplex map.
pub fn grad_t_analytic(
    ansatz: &Ansatz,
    phi: &SimplexParams,
    rho: &DensityMatrix,
    config: &QdvrConfig,
) -> Result<TGradient> {
    check_phi(phi, config)?;
    let q = measure_diagonal(ansatz, rho, config.rank_t, 0, 0)?.probs;
    let t = simplex_map(phi);
    let (d_t, d_phi) = t_gradients(&q, phi, &t, config.c, rho.dim());
    Ok(TGradient { d_t, d_phi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qdvr::qdvr_g;
    use crate::states::random_density;
    use rand::SeedableRng;

    fn instance(n: usize, depth: usize, rank: usize, rank_t: usize, seed: u64) -> (Ansatz, SimplexParams, DensityMatrix, QdvrConfig) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ansatz = Ansatz::random(n, depth, &mut rng).unwrap();
        let phi = SimplexParams::new((0..rank_t - 1).map(|k| 0.3 + 0.4 * k as f64).collect());
        let rho = random_density(1 << n, rank, seed).unwrap().assemble().unwrap();
        let cfg = QdvrConfig::new(0.1, 7.5, rank_t).unwrap();
        (ansatz, phi, rho, cfg)
    }

    #[test]
    fn identity_circuit_on_maximally_mixed() {
        let a = Ansatz::zeros(2, 1).unwrap();
        let m = measure_diagonal(&a, &DensityMatrix::maximally_mixed(4), 4, 0, 0).unwrap();
        assert_eq!(m.probs, vec![0.25; 4]);
    }

    #[test]
    fn full_diagonal_sums_to_one() {
        let (a, _, rho, _) = instance(3, 2, 5, 2, 8);
        let m = measure_diagonal(&a, &rho, 8, 0, 0).unwrap();
        assert!((m.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn maximally_mixed_loss_is_ln_d_at_uniform_full_rank_t() {
        let rho = DensityMatrix::maximally_mixed(8);
        let cfg = QdvrConfig::new(0.1, 30.0, 8).unwrap();
        for seed in 0..3 {
            let (a, _, _, _) = instance(3, 2, 1, 8, seed);
            let g = loss_g_circuit(&a, &SimplexParams::uniform(8), &rho, &cfg, 0, 0).unwrap();
            assert!((g - 8f64.ln()).abs() < 1e-12);
        }
        // Lower-rank T stays strictly above the bound.
        let (a, phi, _, cfg) = instance(3, 2, 1, 3, 1);
        let g = loss_g_circuit(&a, &phi, &rho, &cfg, 0, 0).unwrap();
        assert!(g > 8f64.ln());
    }

    #[test]
    fn uniform_t_gradient_closed_form() {
        let rho = DensityMatrix::maximally_mixed(8);
        let (a, _, _, _) = instance(3, 1, 1, 3, 5);
        let cfg = QdvrConfig::new(0.1, 12.0, 3).unwrap();
        let g = grad_t_analytic(&a, &SimplexParams::uniform(3), &rho, &cfg).unwrap();
        let (c, d, r) = (12.0f64, 8.0, 3.0);
        let expected = -c / d + c * (c / r).exp() / (d - r + r * (c / r).exp());
        for x in g.d_t {
            assert!((x - expected).abs() < 1e-12);
        }
        let one = QdvrConfig::new(0.1, 12.0, 1).unwrap();
        assert!(grad_t_analytic(&a, &SimplexParams::uniform(1), &rho, &one).unwrap().d_phi.is_empty());
    }

    #[test]
    fn circuit_loss_equals_qdvr_on_reconstructed_operator() {
        for seed in 0..5 {
            let (a, phi, rho, cfg) = instance(3, 2, 4, 3, seed);
            let g = loss_g_circuit(&a, &phi, &rho, &cfg, 0, 0).unwrap();
            let t = variational_operator(&a, &phi).unwrap();
            let reference = qdvr_g(&t, &rho, cfg.c).unwrap();
            assert!((g - reference).abs() < 1e-9, "seed {seed}: {g} vs {reference}");
        }
    }

    #[test]
    fn cached_shift_rule_matches_direct_shift_rule() {
        let (a, phi, rho, cfg) = instance(3, 2, 3, 3, 21);
        let all = circuit_gradient(&a, &phi, &rho, &cfg).unwrap();
        for j in 0..a.n_params() {
            let direct = grad_theta_shift(&a, &phi, &rho, &cfg, j).unwrap();
            assert!((all.d_theta[j] - direct).abs() < 1e-11, "param {j}");
        }
        let loss = loss_g_circuit(&a, &phi, &rho, &cfg, 0, 0).unwrap();
        assert!((all.loss - loss).abs() < 1e-12);
        let tg = grad_t_analytic(&a, &phi, &rho, &cfg).unwrap();
        assert_eq!(tg.d_phi.len(), 2);
        for (x, y) in tg.d_phi.iter().zip(&all.d_phi) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn final_z_rotations_do_not_affect_populations() {
        let (a, phi, rho, cfg) = instance(2, 2, 2, 2, 3);
        let g = circuit_gradient(&a, &phi, &rho, &cfg).unwrap();
        let n = a.qubits();
        let last_block = a.n_params() - 2 * n;
        for q in 0..n {
            assert!(g.d_theta[last_block + 2 * q + 1].abs() < 1e-12);
        }
    }

    #[test]
    fn index_out_of_range() {
        let (a, phi, rho, cfg) = instance(2, 1, 2, 2, 0);
        assert!(matches!(
            grad_theta_shift(&a, &phi, &rho, &cfg, a.n_params()),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn rank_t_mismatch_is_rejected() {
        let (a, _, rho, cfg) = instance(2, 1, 2, 2, 0);
        let wrong = SimplexParams::uniform(3);
        assert!(loss_g_circuit(&a, &wrong, &rho, &cfg, 0, 0).is_err());
    }

    #[test]
    fn sampled_frequencies_sum_to_one_and_are_seeded() {
        let p = [0.1, 0.2, 0.3, 0.4];
        let a = sample_frequencies(&p, 1000, 5);
        let b = sample_frequencies(&p, 1000, 5);
        assert_eq!(a, b);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_shift_reports_error_bar() {
        let (a, phi, rho, cfg) = instance(2, 1, 2, 2, 4);
        let exact = grad_theta_shift(&a, &phi, &rho, &cfg, 0).unwrap();
        let est = grad_theta_shift_sampled(&a, &phi, &rho, &cfg, 0, 200_000, 9).unwrap();
        assert!(est.std_error > 0.0);
        assert!((est.value - exact).abs() < 6.0 * est.std_error);
    }
}
