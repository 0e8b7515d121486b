//! Angles `φ` ↦ probability vector `t` on the simplex:
//! `t_i = (∏_{j<i} sin²φ_j) cos²φ_i` for `i < r−1`, and the last entry
//! `t_{r−1} = ∏_{j<r−1} sin²φ_j` carries no cosine so that `Σ t = 1`.

use std::f64::consts::FRAC_PI_2;

/// Angle vector of length `rank_t − 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexParams {
    pub phi: Vec<f64>,
}

impl SimplexParams {
    pub fn new(phi: Vec<f64>) -> Self {
        Self { phi }
    }

    pub fn rank_t(&self) -> usize {
        self.phi.len() + 1
    }

    /// Angles for which every `t_i = 1/rank_t`.
    pub fn uniform(rank_t: usize) -> Self {
        assert!(rank_t >= 1, "rank_t must be positive");
        let phi = (0..rank_t - 1)
            .map(|i| (1.0 / (rank_t - i) as f64).sqrt().acos())
            .collect();
        Self { phi }
    }

    /// Angles with `t = e_0`.
    pub fn first_vertex(rank_t: usize) -> Self {
        Self {
            phi: vec![0.0; rank_t.saturating_sub(1)],
        }
    }

    /// Angles with `t = e_{rank_t − 1}`.
    pub fn last_vertex(rank_t: usize) -> Self {
        Self {
            phi: vec![FRAC_PI_2; rank_t.saturating_sub(1)],
        }
    }
}

pub fn simplex_map(params: &SimplexParams) -> Vec<f64> {
    let phi = &params.phi;
    let r = phi.len() + 1;
    let mut t = Vec::with_capacity(r);
    let mut prefix = 1.0;
    for &p in phi {
        let (s, c) = p.sin_cos();
        t.push(prefix * c * c);
        prefix *= s * s;
    }
    t.push(prefix);
    t
}

/// `J[i][j] = ∂t_i/∂φ_j`, a `rank_t × (rank_t − 1)` matrix.
pub fn simplex_jacobian(params: &SimplexParams) -> Vec<Vec<f64>> {
    let phi = &params.phi;
    let m = phi.len();
    let sin2: Vec<f64> = phi.iter().map(|p| p.sin().powi(2)).collect();
    let cos2: Vec<f64> = phi.iter().map(|p| p.cos().powi(2)).collect();
    let dsin2: Vec<f64> = phi.iter().map(|p| (2.0 * p).sin()).collect();
    // ∂cos²φ = −sin 2φ.
    let mut jac = vec![vec![0.0; m]; m + 1];
    for (i, row) in jac.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            if j > i {
                continue;
            }
            let mut prod = 1.0;
            for k in 0..i.min(m) {
                prod *= if k == j { dsin2[k] } else { sin2[k] };
            }
            *entry = if i == m {
                prod
            } else if j == i {
                -prod * dsin2[i]
            } else {
                prod * cos2[i]
            };
        }
    }
    jac
}
