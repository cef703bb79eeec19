//! Gauss-Radau quadrature on `[0, 1]` with the fixed node `t = 1`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub m: usize,
    /// Strictly increasing; the last node is 1.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `sum_{i < m} w_i / (t_i ln 2)`; the `t = 1` node is excluded.
    pub c_m: f64,
}

impl QuadratureRule {
    /// `sum_i w_i f(t_i)`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }

    /// Coefficient of node `i` in the entropy objective, `w_i / (t_i ln 2)`.
    pub fn node_coefficient(&self, i: usize) -> f64 {
        self.weights[i] / (self.nodes[i] * std::f64::consts::LN_2)
    }
}

/// Monic shifted-Legendre recurrence coefficient `b_k^2` (off-diagonal squared).
fn beta_sq(k: usize) -> f64 {
    let k = k as f64;
    k * k / (4.0 * (4.0 * k * k - 1.0))
}

/// Gauss-Radau rule with `m` nodes, one of them fixed at 1, built from the
/// Jacobi matrix of the shifted Legendre polynomials with the last diagonal
/// entry modified so that 1 becomes an eigenvalue (Golub-Welsch).
pub fn gauss_radau(m: usize) -> Result<QuadratureRule> {
    if m < 2 {
        return Err(Error::DomainError(format!("Gauss-Radau needs m >= 2 nodes, got {m}")));
    }
    // Monic p_k evaluated at the fixed node: p_{k+1}(1) = (1 - 1/2) p_k(1) - b_k^2 p_{k-1}(1).
    let mut p_prev = 1.0;
    let mut p = 0.5;
    for k in 1..m - 1 {
        let next = 0.5 * p - beta_sq(k) * p_prev;
        p_prev = p;
        p = next;
    }
    // p = p_{m-1}(1), p_prev = p_{m-2}(1)
    let last_diag = 1.0 - beta_sq(m - 1) * p_prev / p;

    let mut j = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        j[(i, i)] = 0.5;
    }
    j[(m - 1, m - 1)] = last_diag;
    for k in 1..m {
        let b = beta_sq(k).sqrt();
        j[(k - 1, k)] = b;
        j[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // The fixed node is exact by construction; remove eigen-solver rounding.
    pairs[m - 1].0 = 1.0;

    let nodes: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let c_m = (0..m - 1)
        .map(|i| weights[i] / (nodes[i] * std::f64::consts::LN_2))
        .sum();
    Ok(QuadratureRule { m, nodes, weights, c_m })
}
