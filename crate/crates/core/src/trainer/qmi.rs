//! Mutual information as `S(ρ_A ⊗ ρ_B) − S(ρ_AB)`: two trainings, one on the
//! product of marginals and one on the joint state.

use crate::error::{Error, Result};
use crate::states::{product_of_marginals, von_neumann_entropy, DensityMatrix};

use super::{train_entropy, TrainConfig, TrainOutcome};

#[derive(Clone, Debug)]
pub struct QmiOutcome {
    pub estimate: f64,
    pub exact: f64,
    /// Run on `ρ_A ⊗ ρ_B`.
    pub product: TrainOutcome,
    /// Run on `ρ_AB`.
    pub joint: TrainOutcome,
}

impl QmiOutcome {
    pub fn abs_error(&self) -> f64 {
        (self.estimate - self.exact).abs()
    }

    /// `|estimate − exact| / |exact|`; infinite when the exact value is zero
    /// and the estimate is not.
    pub fn error_rate(&self) -> f64 {
        let err = self.abs_error();
        if self.exact == 0.0 {
            if err == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            err / self.exact.abs()
        }
    }
}

/// Runs both trainings (concurrently) with `rank_t` for each set to that
/// state's numerical rank, and `c` derived from it unless overridden in `base`.
/// The joint run uses `base.seed`; the product run a seed derived from it.
pub fn estimate_qmi(
    rho_ab: &DensityMatrix,
    d_a: usize,
    d_b: usize,
    depth: usize,
    base: &TrainConfig,
) -> Result<QmiOutcome> {
    if d_a * d_b != rho_ab.dim() {
        return Err(Error::Size(format!(
            "{d_a} x {d_b} does not factor dimension {}",
            rho_ab.dim()
        )));
    }
    if !rho_ab.dim().is_power_of_two() {
        return Err(Error::Size(format!("dimension {} is not a power of two", rho_ab.dim())));
    }
    let qubits = rho_ab.dim().trailing_zeros() as usize;
    let product = product_of_marginals(rho_ab, d_a, d_b)?;

    let run = |rho: &DensityMatrix, seed: u64| -> Result<TrainOutcome> {
        let rank = rho.numerical_rank();
        let cfg = TrainConfig {
            rank_t: rank,
            seed,
            ..base.clone()
        };
        let qdvr = cfg.qdvr(rank, qubits)?;
        train_entropy(rho, depth, &cfg, &qdvr, Some(von_neumann_entropy(rho)))
    };
    let (product_run, joint_run) = rayon::join(
        || run(&product, crate::derive_seed(base.seed, 1)),
        || run(rho_ab, base.seed),
    );
    let (product_run, joint_run) = (product_run?, joint_run?);
    let exact = product_run.exact_entropy.unwrap_or_default() - joint_run.exact_entropy.unwrap_or_default();
    Ok(QmiOutcome {
        estimate: product_run.estimate - joint_run.estimate,
        exact,
        product: product_run,
        joint: joint_run,
    })
}
