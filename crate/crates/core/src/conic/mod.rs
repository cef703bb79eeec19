//! Conic solving: a problem contract for single-block SDPs in "linear matrix
//! inequality" form, a dense interior-point method tailored to moment
//! matrices, and an adapter over Clarabel used for LPs and as an alternative
//! SDP backend.

mod ipm;

pub use ipm::InteriorPoint;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use crate::error::{Error, Result};

/// Sparse symmetric matrix given by its upper-triangle entries `(i, j, value)`, `i <= j`.
pub type SymEntries = Vec<(usize, usize, f64)>;

/// `minimize  c.y + c0`
/// `s.t.      F0 + sum_k y_k F_k  is PSD,   E y = f`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SdpProblem {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub objective_constant: f64,
    pub block_dim: usize,
    pub constant: SymEntries,
    pub coefficients: Vec<SymEntries>,
    pub equalities: Vec<(Vec<(usize, f64)>, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Gap and feasibility tolerance passed to the interior-point method.
    pub tolerance: f64,
    /// Largest accepted primal/dual residual.
    pub residual_threshold: f64,
    /// Largest relative gap accepted when the method stalls before reaching
    /// `tolerance`; the dual value stays a valid bound, only looser.
    pub gap_threshold: f64,
    pub max_iter: u32,
    pub verbose: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            residual_threshold: 1e-6,
            gap_threshold: 1e-3,
            max_iter: 200,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    /// Primal objective `c.y + c0`.
    pub primal_value: f64,
    /// Dual objective; a lower bound on the minimum when the dual is feasible.
    pub dual_value: f64,
    pub y: Vec<f64>,
    pub status: String,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: u32,
}

/// Any backend able to solve an [`SdpProblem`].
pub trait SdpBackend: Send + Sync {
    fn solve(&self, problem: &SdpProblem, config: &SolverConfig) -> Result<SdpSolution>;
}

/// Clarabel's general conic interior-point method.
#[derive(Debug, Clone, Copy, Default)]
pub struct Clarabel;

/// Position of `(i, j)`, `i <= j`, in the column-major upper-triangle vectorisation.
#[inline]
pub fn triangle_index(i: usize, j: usize) -> usize {
    debug_assert!(i <= j);
    j * (j + 1) / 2 + i
}

fn settings(config: &SolverConfig) -> DefaultSettings<f64> {
    DefaultSettingsBuilder::default()
        .verbose(config.verbose)
        .max_iter(config.max_iter)
        .tol_gap_abs(config.tolerance)
        .tol_gap_rel(config.tolerance)
        .tol_feas(config.tolerance)
        .presolve_enable(false)
        .build()
        .expect("static solver settings are valid")
}

/// Column-compressed matrix from `(row, col, value)` triplets (duplicates summed).
fn csc_from_triplets(nrows: usize, ncols: usize, mut trip: Vec<(usize, usize, f64)>) -> CscMatrix<f64> {
    trip.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
    let mut colptr = vec![0usize; ncols + 1];
    let mut rowval = Vec::with_capacity(trip.len());
    let mut nzval: Vec<f64> = Vec::with_capacity(trip.len());
    let mut last: Option<(usize, usize)> = None;
    for (r, c, v) in trip {
        if last == Some((r, c)) {
            *nzval.last_mut().expect("previous entry exists") += v;
            continue;
        }
        rowval.push(r);
        nzval.push(v);
        colptr[c + 1] += 1;
        last = Some((r, c));
    }
    for c in 0..ncols {
        colptr[c + 1] += colptr[c];
    }
    CscMatrix::new(nrows, ncols, colptr, rowval, nzval)
}

fn status_name(s: SolverStatus) -> String {
    format!("{s:?}")
}

impl SdpBackend for Clarabel {
    fn solve(&self, problem: &SdpProblem, config: &SolverConfig) -> Result<SdpSolution> {
        let n = problem.num_vars;
        let d = problem.block_dim;
        let n_eq = problem.equalities.len();
        let tri = d * (d + 1) / 2;
        let sqrt2 = std::f64::consts::SQRT_2;
        let scale = |i: usize, j: usize| if i == j { 1.0 } else { sqrt2 };

        let mut trip = Vec::new();
        let mut rhs = vec![0.0; n_eq + tri];
        for (row, (terms, value)) in problem.equalities.iter().enumerate() {
            for &(k, coef) in terms {
                trip.push((row, k, coef));
            }
            rhs[row] = *value;
        }
        for &(i, j, v) in &problem.constant {
            rhs[n_eq + triangle_index(i, j)] += scale(i, j) * v;
        }
        for (k, entries) in problem.coefficients.iter().enumerate() {
            for &(i, j, v) in entries {
                trip.push((n_eq + triangle_index(i, j), k, -scale(i, j) * v));
            }
        }
        let a = csc_from_triplets(n_eq + tri, n, trip);
        let p = CscMatrix::zeros((n, n));
        let mut cones = Vec::new();
        if n_eq > 0 {
            cones.push(SupportedConeT::ZeroConeT(n_eq));
        }
        cones.push(SupportedConeT::PSDTriangleConeT(d));

        let mut solver = DefaultSolver::new(&p, &problem.objective, &a, &rhs, &cones, settings(config))
            .map_err(|e| Error::SolverFailure(format!("{e:?}")))?;
        solver.solve();
        let sol = &solver.solution;
        let status = sol.status;
        match status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => {}
            other => return Err(Error::SolverFailure(status_name(other))),
        }
        let residual = sol.r_prim.max(sol.r_dual);
        if residual > config.residual_threshold {
            return Err(Error::NumericalInstability {
                residual,
                threshold: config.residual_threshold,
            });
        }
        Ok(SdpSolution {
            primal_value: sol.obj_val + problem.objective_constant,
            dual_value: sol.obj_val_dual + problem.objective_constant,
            y: sol.x.clone(),
            status: status_name(status),
            primal_residual: sol.r_prim,
            dual_residual: sol.r_dual,
            iterations: sol.iterations,
        })
    }
}

/// `minimize c.p` subject to `A p = b`, `p >= 0`. Returns `(value, p)`.
pub fn solve_lp(c: &[f64], equalities: &[(Vec<(usize, f64)>, f64)], config: &SolverConfig) -> Result<(f64, Vec<f64>)> {
    let n = c.len();
    let m = equalities.len();
    let mut trip = Vec::new();
    let mut rhs = vec![0.0; m + n];
    for (row, (terms, value)) in equalities.iter().enumerate() {
        for &(k, coef) in terms {
            trip.push((row, k, coef));
        }
        rhs[row] = *value;
    }
    for k in 0..n {
        trip.push((m + k, k, -1.0));
    }
    let a = csc_from_triplets(m + n, n, trip);
    let p = CscMatrix::zeros((n, n));
    let cones = [SupportedConeT::ZeroConeT(m), SupportedConeT::NonnegativeConeT(n)];
    let mut solver = DefaultSolver::new(&p, c, &a, &rhs, &cones, settings(config))
        .map_err(|e| Error::SolverFailure(format!("{e:?}")))?;
    solver.solve();
    match solver.solution.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => Ok((solver.solution.obj_val, solver.solution.x.clone())),
        other => Err(Error::SolverFailure(status_name(other))),
    }
}
