//! Result record for the diagonal minimization shared by the primary solver
//! and the oracles. Only the type lives here; each side computes its own
//! numbers.

use serde::{Deserialize, Serialize};

/// Diagonal entries of `H_bar'_S` and `H_bar'_E` in the eigenbases of the
/// reduced states, restricted to their supports.
///
/// The minimized quantity is
/// `F(a, b) = d_E sum a_i^2 + d_S sum b_j^2 + 2 (sum a_i)(sum b_j)`
/// subject to `sum lambda^S_i a_i + sum lambda^E_j b_j = U_I`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalSolution {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Lagrange multiplier `mu` of `L = F - mu (constraint - U_I)`.
    pub multiplier: f64,
    pub objective: f64,
    /// Set when the Hessian is singular on the constraint surface (both
    /// reduced states full rank). The minimizer is then a line
    /// `(a + c, b - c)` and the minimum-norm point `sum a = sum b` is returned.
    pub min_norm_fallback: bool,
}

impl DiagonalSolution {
    pub fn zeros(n_s: usize, n_e: usize) -> Self {
        DiagonalSolution {
            a: vec![0.0; n_s],
            b: vec![0.0; n_e],
            multiplier: 0.0,
            objective: 0.0,
            min_norm_fallback: false,
        }
    }

    /// `a` followed by `b`.
    pub fn stacked(&self) -> Vec<f64> {
        self.a.iter().chain(self.b.iter()).copied().collect()
    }
}
