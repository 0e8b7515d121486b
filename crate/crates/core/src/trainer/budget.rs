//! Copy-count accounting: how many copies of `ρ` a hardware run would consume.

use crate::error::{Error, Result};
use crate::qdvr::{auto_c, QdvrConfig};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BudgetReport {
    pub copies_estimate: u128,
    pub c: f64,
    pub epsilon: f64,
    pub n_params: usize,
    pub n_train: usize,
}

/// `⌈(c²/ε²)·n_params·n_train⌉`.
///
/// Decimal inputs such as `ε = 0.1` are not exact in binary, so a product
/// within `1e-9` (relative) of an integer is taken to be that integer before
/// the ceiling.
pub fn copies(c: f64, epsilon: f64, n_params: usize, n_train: usize) -> Result<u128> {
    if !(c > 0.0 && c.is_finite()) || !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Parameter(format!("need positive finite c and epsilon, got {c}, {epsilon}")));
    }
    let v = (c / epsilon).powi(2) * n_params as f64 * n_train as f64;
    if v.is_nan() || v >= 1e38 {
        return Err(Error::Parameter(format!("copy count {v:e} out of range")));
    }
    let nearest = v.round();
    let snapped = if (v - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        v.ceil()
    };
    Ok(snapped as u128)
}

pub fn budget(config: &QdvrConfig, n_params: usize, n_train: usize) -> Result<BudgetReport> {
    Ok(BudgetReport {
        copies_estimate: copies(config.c, config.epsilon, n_params, n_train)?,
        c: config.c,
        epsilon: config.epsilon,
        n_params,
        n_train,
    })
}

/// Budget with `c` taken from the rank/qubit bound.
pub fn budget_auto(
    rank: usize,
    qubits: usize,
    epsilon: f64,
    n_params: usize,
    n_train: usize,
) -> Result<BudgetReport> {
    let c = auto_c(rank, qubits, epsilon);
    Ok(BudgetReport {
        copies_estimate: copies(c, epsilon, n_params, n_train)?,
        c,
        epsilon,
        n_params,
        n_train,
    })
}
