//! Density-matrix simulation of the layered rotation circuit, computational
//! basis measurement, and the gradients needed to train it.

mod ansatz;
mod loss;
mod simplex;

pub use ansatz::{apply_ansatz, Ansatz, Gate, MAX_QUBITS};
pub use loss::{
    circuit_gradient, grad_t_analytic, grad_theta_shift, grad_theta_shift_sampled,
    loss_from_diagonal, loss_g_circuit, measure_diagonal, variational_operator, CircuitGradient,
    MeasuredDiagonal, ShiftEstimate, TGradient,
};
pub use simplex::{simplex_jacobian, simplex_map, SimplexParams};
