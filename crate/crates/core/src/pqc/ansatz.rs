use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::qmatrix::io::{content_lines, fmt_f64, parse_f64};
use crate::qmatrix::ComplexMatrix;
use crate::states::DensityMatrix;

pub const MAX_QUBITS: usize = 10;

/// One gate of the layered circuit. Rotations are `exp(−iθP/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    Ry { qubit: usize, param: usize },
    Rz { qubit: usize, param: usize },
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn param(&self) -> Option<usize> {
        match *self {
            Gate::Ry { param, .. } | Gate::Rz { param, .. } => Some(param),
            Gate::Cnot { .. } => None,
        }
    }
}

type Mat2 = [[Complex64; 2]; 2];

fn ry(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ]
}

fn rz(theta: f64) -> Mat2 {
    let z = Complex64::new(0.0, 0.0);
    [
        [Complex64::from_polar(1.0, -theta / 2.0), z],
        [z, Complex64::from_polar(1.0, theta / 2.0)],
    ]
}

fn adjoint2(u: &Mat2) -> Mat2 {
    [[u[0][0].conj(), u[1][0].conj()], [u[0][1].conj(), u[1][1].conj()]]
}

/// Layered Pauli-rotation circuit on `qubits` qubits. Each layer applies
/// `R_y, R_z` on every qubit, a CNOT ring (`q` controls `q+1 mod n`), then
/// `R_y, R_z` on every qubit again, for `4·n` parameters per layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Ansatz {
    qubits: usize,
    depth: usize,
    theta: Vec<f64>,
}

impl Ansatz {
    pub fn new(qubits: usize, depth: usize, theta: Vec<f64>) -> Result<Self> {
        if qubits == 0 || qubits > MAX_QUBITS {
            return Err(Error::Parameter(format!("qubits must lie in 1..={MAX_QUBITS}")));
        }
        if depth == 0 {
            return Err(Error::Parameter("depth must be at least 1".into()));
        }
        let expected = 4 * qubits * depth;
        if theta.len() != expected {
            return Err(Error::Parameter(format!(
                "{} angles supplied, layout needs {expected}",
                theta.len()
            )));
        }
        if theta.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parameter("non-finite angle".into()));
        }
        Ok(Self {
            qubits,
            depth,
            theta,
        })
    }

    pub fn zeros(qubits: usize, depth: usize) -> Result<Self> {
        Self::new(qubits, depth, vec![0.0; 4 * qubits * depth])
    }

    /// Angles uniform in `[0, 2π)`.
    pub fn random(qubits: usize, depth: usize, rng: &mut impl Rng) -> Result<Self> {
        let theta = (0..4 * qubits * depth).map(|_| rng.random::<f64>() * TAU).collect();
        Self::new(qubits, depth, theta)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn n_params(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    /// Copy with `θ_j` replaced.
    pub fn with_param(&self, j: usize, value: f64) -> Self {
        let mut out = self.clone();
        out.theta[j] = value;
        out
    }

    pub fn gates(&self) -> Vec<Gate> {
        let n = self.qubits;
        let mut gates = Vec::with_capacity(self.depth * (4 * n + n));
        let mut p = 0;
        let rotations = |gates: &mut Vec<Gate>, p: &mut usize| {
            for q in 0..n {
                gates.push(Gate::Ry { qubit: q, param: *p });
                gates.push(Gate::Rz { qubit: q, param: *p + 1 });
                *p += 2;
            }
        };
        for _ in 0..self.depth {
            rotations(&mut gates, &mut p);
            if n > 1 {
                for q in 0..n {
                    gates.push(Gate::Cnot {
                        control: q,
                        target: (q + 1) % n,
                    });
                }
            }
            rotations(&mut gates, &mut p);
        }
        gates
    }

    pub(crate) fn gate_matrix(&self, gate: &Gate, theta: f64) -> Mat2 {
        match gate {
            Gate::Ry { .. } => ry(theta),
            Gate::Rz { .. } => rz(theta),
            Gate::Cnot { .. } => unreachable!("CNOT has no 2x2 form"),
        }
    }

    fn mask(&self, qubit: usize) -> usize {
        1 << (self.qubits - 1 - qubit)
    }

    /// `ρ <- G ρ G†` for one gate at angle `theta` (ignored for CNOT).
    pub(crate) fn apply_gate(&self, rho: &mut ComplexMatrix, gate: &Gate, theta: f64) {
        match *gate {
            Gate::Ry { qubit, .. } | Gate::Rz { qubit, .. } => {
                let u = self.gate_matrix(gate, theta);
                conjugate_1q(rho, self.mask(qubit), &u);
            }
            Gate::Cnot { control, target } => {
                permute_cnot(rho, self.mask(control), self.mask(target));
            }
        }
    }

    /// `ρ <- G† ρ G`.
    pub(crate) fn unapply_gate(&self, rho: &mut ComplexMatrix, gate: &Gate, theta: f64) {
        match *gate {
            Gate::Ry { qubit, .. } | Gate::Rz { qubit, .. } => {
                let u = adjoint2(&self.gate_matrix(gate, theta));
                conjugate_1q(rho, self.mask(qubit), &u);
            }
            Gate::Cnot { control, target } => {
                permute_cnot(rho, self.mask(control), self.mask(target));
            }
        }
    }

    /// `U ρ U†` on a raw matrix.
    pub(crate) fn evolve(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = rho.clone();
        for gate in self.gates() {
            let theta = gate.param().map_or(0.0, |p| self.theta[p]);
            self.apply_gate(&mut out, &gate, theta);
        }
        out
    }

    /// Full circuit unitary, assembled column by column.
    pub fn unitary(&self) -> ComplexMatrix {
        let d = self.dim();
        let mut u = ComplexMatrix::identity(d);
        for gate in self.gates() {
            let theta = gate.param().map_or(0.0, |p| self.theta[p]);
            match gate {
                Gate::Ry { qubit, .. } | Gate::Rz { qubit, .. } => {
                    left_multiply_1q(&mut u, self.mask(qubit), &self.gate_matrix(&gate, theta));
                }
                Gate::Cnot { control, target } => {
                    let (cm, tm) = (self.mask(control), self.mask(target));
                    for i in 0..d {
                        if i & cm != 0 && i & tm == 0 {
                            swap_rows(&mut u, i, i | tm);
                        }
                    }
                }
            }
        }
        u
    }

    /// Header `n D`, then one angle per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.qubits, self.depth);
        for &x in &self.theta {
            let _ = writeln!(s, "{}", fmt_f64(x));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = content_lines(text);
        let (ln, header) = lines
            .next()
            .ok_or_else(|| Error::Parse("empty ansatz file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let [n, d] = fields.as_slice() else {
            return Err(Error::Parse(format!("line {ln}: expected `n D`")));
        };
        let n: usize = n
            .parse()
            .map_err(|_| Error::Parse(format!("line {ln}: bad qubit count")))?;
        let d: usize = d
            .parse()
            .map_err(|_| Error::Parse(format!("line {ln}: bad depth")))?;
        let theta = lines
            .map(|(ln, l)| parse_f64(l.trim(), ln))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, d, theta)
    }
}

fn left_multiply_1q(m: &mut ComplexMatrix, mask: usize, u: &Mat2) {
    let (rows, cols) = (m.rows(), m.cols());
    let data = m.data_mut();
    for i in 0..rows {
        if i & mask != 0 {
            continue;
        }
        let j = i | mask;
        for k in 0..cols {
            let a = data[i * cols + k];
            let b = data[j * cols + k];
            data[i * cols + k] = u[0][0] * a + u[0][1] * b;
            data[j * cols + k] = u[1][0] * a + u[1][1] * b;
        }
    }
}

/// `ρ <- U ρ U†` with `U` acting on the qubit selected by `mask`.
fn conjugate_1q(rho: &mut ComplexMatrix, mask: usize, u: &Mat2) {
    left_multiply_1q(rho, mask, u);
    let d = rho.rows();
    let data = rho.data_mut();
    let (c00, c01, c10, c11) = (u[0][0].conj(), u[0][1].conj(), u[1][0].conj(), u[1][1].conj());
    for row in data.chunks_exact_mut(d) {
        for i in 0..d {
            if i & mask != 0 {
                continue;
            }
            let j = i | mask;
            let a = row[i];
            let b = row[j];
            row[i] = a * c00 + b * c01;
            row[j] = a * c10 + b * c11;
        }
    }
}

fn swap_rows(m: &mut ComplexMatrix, a: usize, b: usize) {
    let cols = m.cols();
    let data = m.data_mut();
    for k in 0..cols {
        data.swap(a * cols + k, b * cols + k);
    }
}

/// `ρ <- P ρ P` for the CNOT permutation `P`.
fn permute_cnot(rho: &mut ComplexMatrix, control: usize, target: usize) {
    let d = rho.rows();
    for i in 0..d {
        if i & control != 0 && i & target == 0 {
            swap_rows(rho, i, i | target);
        }
    }
    let data = rho.data_mut();
    for row in data.chunks_exact_mut(d) {
        for i in 0..d {
            if i & control != 0 && i & target == 0 {
                row.swap(i, i | target);
            }
        }
    }
}

/// `U(θ) ρ U(θ)†`.
pub fn apply_ansatz(ansatz: &Ansatz, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != ansatz.dim() {
        return Err(Error::Size(format!(
            "state dimension {} vs {}-qubit circuit",
            rho.dim(),
            ansatz.qubits()
        )));
    }
    DensityMatrix::from_matrix(ansatz.evolve(rho.as_matrix()))
}
