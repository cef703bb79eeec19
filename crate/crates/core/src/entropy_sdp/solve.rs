use rayon::prelude::*;

use crate::boxes::NonlocalBox;
use crate::conic::{InteriorPoint, SdpBackend, SolverConfig};
use crate::error::Result;

use super::relaxation::{build_relaxation, Relaxation};

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSolution {
    pub t: f64,
    pub coefficient: f64,
    /// Dual objective of the node SDP (a certified lower bound on its infimum).
    pub value: f64,
    pub primal_value: f64,
    pub status: String,
    pub dual_residual: f64,
    pub iterations: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyBound {
    /// Lower bound on `H(A|E, X=0)` in bits, clipped to `[0, 1]`.
    pub value: f64,
    /// `c_m + sum_i coefficient_i * value_i` before clipping.
    pub raw: f64,
    pub nodes: Vec<NodeSolution>,
    /// Worst status over the node solves.
    pub status: String,
    /// Largest dual residual over the node solves.
    pub dual_residual: f64,
}

/// Solve every node SDP (concurrently) and combine the node values.
pub fn solve_relaxation_with(r: &Relaxation, backend: &dyn SdpBackend, config: &SolverConfig) -> Result<EntropyBound> {
    let nodes: Vec<NodeSolution> = (0..r.nodes.len())
        .into_par_iter()
        .map(|i| {
            let term = &r.nodes[i];
            let sol = backend.solve(&r.node_sdp(i)?, config)?;
            Ok(NodeSolution {
                t: term.t,
                coefficient: term.coefficient,
                value: sol.dual_value,
                primal_value: sol.primal_value,
                status: sol.status,
                dual_residual: sol.dual_residual,
                iterations: sol.iterations,
            })
        })
        .collect::<Result<_>>()?;
    let raw = r.rule.c_m + nodes.iter().map(|n| n.coefficient * n.value).sum::<f64>();
    let status = if nodes.iter().all(|n| n.status == "Solved") {
        "Solved".to_string()
    } else {
        "AlmostSolved".to_string()
    };
    let dual_residual = nodes.iter().map(|n| n.dual_residual).fold(0.0, f64::max);
    Ok(EntropyBound {
        value: raw.clamp(0.0, 1.0),
        raw,
        nodes,
        status,
        dual_residual,
    })
}

pub fn solve_relaxation(r: &Relaxation, config: &SolverConfig) -> Result<EntropyBound> {
    solve_relaxation_with(r, &InteriorPoint, config)
}

/// Build and solve with the default solver settings.
pub fn entropy_lower_bound(b: &NonlocalBox, m: usize, level: usize) -> Result<f64> {
    let r = build_relaxation(b, m, level)?;
    Ok(solve_relaxation(&r, &SolverConfig::default())?.value)
}
