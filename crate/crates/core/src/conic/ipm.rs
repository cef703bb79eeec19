//! Primal-dual interior-point method for single-block LMI problems.
//!
//! Infeasible-start path following with the HKM search direction and a
//! Mehrotra predictor-corrector step. The Schur complement
//! `M_kl = tr(F_k S^-1 F_l Z)` is assembled directly from the sparse
//! coefficient matrices and factorised densely, which suits moment matrices:
//! a small block, many variables, each touching a handful of entries.
//!
//! Problems whose feasible set has no interior (deterministic boxes) are
//! retried with dual-step projection and then with Nesterov-Todd scaling.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};

use super::{SdpBackend, SdpProblem, SdpSolution, SolverConfig};

/// Dense interior-point backend (the default for moment relaxations).
#[derive(Debug, Clone, Copy, Default)]
pub struct InteriorPoint;

/// Fraction of the distance to the cone boundary taken per step.
const STEP_FRACTION: f64 = 0.95;

struct Data {
    n: usize,
    d: usize,
    /// Full symmetric entry lists `(i, j, v)`, both triangles.
    f: Vec<Vec<(usize, usize, f64)>>,
    f0: DMatrix<f64>,
    c: DVector<f64>,
    e: DMatrix<f64>,
    rhs_e: DVector<f64>,
}

impl Data {
    fn new(p: &SdpProblem) -> Result<Self> {
        let d = p.block_dim;
        let n = p.num_vars;
        if p.objective.len() != n || p.coefficients.len() != n {
            return Err(Error::InvalidParameter(format!(
                "problem declares {n} variables but has {} objective and {} matrix coefficients",
                p.objective.len(),
                p.coefficients.len()
            )));
        }
        let expand = |entries: &[(usize, usize, f64)]| -> Result<Vec<(usize, usize, f64)>> {
            let mut out = Vec::with_capacity(2 * entries.len());
            for &(i, j, v) in entries {
                if i > j || j >= d {
                    return Err(Error::InvalidParameter(format!(
                        "entry ({i}, {j}) is not in the upper triangle of a {d}x{d} block"
                    )));
                }
                out.push((i, j, v));
                if i != j {
                    out.push((j, i, v));
                }
            }
            Ok(out)
        };
        let mut f0 = DMatrix::zeros(d, d);
        for (i, j, v) in expand(&p.constant)? {
            f0[(i, j)] += v;
        }
        let f = p.coefficients.iter().map(|e| expand(e)).collect::<Result<Vec<_>>>()?;
        let m = p.equalities.len();
        let mut e = DMatrix::zeros(m, n);
        let mut rhs_e = DVector::zeros(m);
        for (r, (terms, value)) in p.equalities.iter().enumerate() {
            for &(k, coef) in terms {
                if k >= n {
                    return Err(Error::InvalidParameter(format!(
                        "equality refers to variable {k} of {n}"
                    )));
                }
                e[(r, k)] += coef;
            }
            rhs_e[r] = *value;
        }
        Ok(Self {
            n,
            d,
            f,
            f0,
            c: DVector::from_column_slice(&p.objective),
            e,
            rhs_e,
        })
    }

    /// Factor of the Gram matrix `tr(F_k F_l)`, used to project dual steps
    /// back onto the dual equality constraints.
    fn gram(&self) -> Result<Gram> {
        let mut owner = std::collections::HashMap::new();
        let mut diagonal = vec![0.0; self.n];
        let mut disjoint = true;
        for (k, entries) in self.f.iter().enumerate() {
            for &(i, j, v) in entries {
                diagonal[k] += v * v;
                if *owner.entry((i, j)).or_insert(k) != k {
                    disjoint = false;
                }
            }
        }
        if diagonal.contains(&0.0) {
            return Err(Error::InvalidParameter(
                "a variable has an empty coefficient matrix".into(),
            ));
        }
        if disjoint {
            return Ok(Gram::Diagonal(DVector::from_vec(diagonal)));
        }
        let mut g = DMatrix::zeros(self.n, self.n);
        for k in 0..self.n {
            let fk = self.op(&DVector::from_fn(self.n, |l, _| if l == k { 1.0 } else { 0.0 }));
            let col = self.adjoint(&fk);
            g.set_column(k, &col);
        }
        Ok(Gram::Dense(SchurFactor::new(&g)?))
    }

    /// `sum_k y_k F_k`
    fn op(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.d, self.d);
        for (k, entries) in self.f.iter().enumerate() {
            let yk = y[k];
            if yk == 0.0 {
                continue;
            }
            for &(i, j, v) in entries {
                out[(i, j)] += yk * v;
            }
        }
        out
    }

    /// `(tr(F_k W))_k`
    fn adjoint(&self, w: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.n,
            self.f
                .iter()
                .map(|entries| entries.iter().map(|&(i, j, v)| v * w[(j, i)]).sum()),
        )
    }

    /// `M_kl = tr(F_k G F_l Z)`
    fn schur(&self, g: &DMatrix<f64>, z: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.n;
        let cols: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|l| {
                let fl = &self.f[l];
                (0..=l)
                    .map(|k| {
                        let mut s = 0.0;
                        for &(i, j, v) in &self.f[k] {
                            for &(p, q, u) in fl {
                                s += v * u * g[(j, p)] * z[(q, i)];
                            }
                        }
                        s
                    })
                    .collect()
            })
            .collect();
        let mut m = DMatrix::zeros(n, n);
        for (l, col) in cols.into_iter().enumerate() {
            for (k, s) in col.into_iter().enumerate() {
                m[(k, l)] = s;
                m[(l, k)] = s;
            }
        }
        m
    }
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn sym(a: DMatrix<f64>) -> DMatrix<f64> {
    (&a + a.transpose()) * 0.5
}

/// Largest `t` (capped at `cap`) with `X + t dX` positive semidefinite.
fn max_step(chol: &Cholesky<f64, nalgebra::Dyn>, dx: &DMatrix<f64>, cap: f64) -> f64 {
    let l = chol.l();
    let linv = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(l.nrows(), l.ncols()))
        .expect("Cholesky factor is invertible");
    let w = &linv * dx * linv.transpose();
    let min = SymmetricEigen::new(sym(w)).eigenvalues.min();
    if min >= 0.0 {
        cap
    } else {
        cap.min(-1.0 / min)
    }
}

/// `W^-1` for the Nesterov-Todd point `W Z W = S`, from `S = L L^T` and
/// the eigendecomposition `L^T Z L = Q D Q^T`: `W^-1 = L^-T Q D^1/2 Q^T L^-1`.
fn nt_inverse_scaling(chol_s: &Cholesky<f64, nalgebra::Dyn>, z: &DMatrix<f64>) -> DMatrix<f64> {
    let l = chol_s.l();
    let linv = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(l.nrows(), l.ncols()))
        .expect("Cholesky factor is invertible");
    let eig = SymmetricEigen::new(sym(l.transpose() * z * &l));
    let root = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| x.max(0.0).sqrt()));
    let inner = &eig.eigenvectors * root * eig.eigenvectors.transpose();
    sym(linv.transpose() * inner * linv)
}

/// Dense Cholesky factor of the Schur complement, with growing diagonal
/// regularisation for nearly singular input.
struct SchurFactor(faer::linalg::solvers::Llt<f64>);

impl SchurFactor {
    fn new(m: &DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        let scale = m.diagonal().amax().max(1e-300);
        let mut reg = 0.0;
        for _ in 0..13 {
            let fm = faer::Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)] + if i == j { reg } else { 0.0 });
            if let Ok(llt) = fm.llt(faer::Side::Lower) {
                return Ok(Self(llt));
            }
            reg = if reg == 0.0 { scale * 1e-14 } else { reg * 10.0 };
        }
        Err(Error::SolverFailure("Schur complement is not positive definite".into()))
    }

    fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        use faer::linalg::solvers::Solve;
        let fb = faer::Mat::<f64>::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)]);
        let x = self.0.solve(&fb);
        DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| x[(i, j)])
    }

    fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        let x = self.solve(&DMatrix::from_column_slice(b.len(), 1, b.as_slice()));
        DVector::from_column_slice(x.as_slice())
    }
}

enum Gram {
    Diagonal(DVector<f64>),
    Dense(SchurFactor),
}

impl Gram {
    fn solve(&self, r: &DVector<f64>) -> DVector<f64> {
        match self {
            Gram::Diagonal(g) => r.component_div(g),
            Gram::Dense(f) => f.solve_vec(r),
        }
    }
}

fn gap_of(sol: &SdpSolution) -> f64 {
    let (p, d) = (sol.primal_value, sol.dual_value);
    (p - d).abs() / (1.0 + p.abs() + d.abs())
}

struct Direction {
    dy: DVector<f64>,
    dl: DVector<f64>,
    ds: DMatrix<f64>,
    dz: DMatrix<f64>,
}

impl SdpBackend for InteriorPoint {
    fn solve(&self, problem: &SdpProblem, config: &SolverConfig) -> Result<SdpSolution> {
        let data = Data::new(problem)?;
        // Cheapest and tightest first; the later variants are slower but
        // survive degenerate problems.
        let mut result = run(problem, &data, config, false, false);
        for (project_dual, nt_scaling) in [(true, false), (true, true)] {
            match result {
                Err(Error::NumericalInstability { .. }) => {
                    result = run(problem, &data, config, project_dual, nt_scaling)
                }
                _ => break,
            }
        }
        result
    }
}

/// One interior-point run. With `project_dual`, round-off that leaks into
/// the dual residual is projected out of every step; this rescues
/// problems without a strictly feasible point at the cost of a slightly
/// looser end game, so it is only used as a retry.
fn run(
    problem: &SdpProblem,
    data: &Data,
    config: &SolverConfig,
    project_dual: bool,
    nt_scaling: bool,
) -> Result<SdpSolution> {
    let (n, d) = (data.n, data.d);
    let me = data.e.nrows();
    let gram = if project_dual { Some(data.gram()?) } else { None };

    let norm_f0 = data.f0.norm();
    let norm_c = data.c.norm();
    let norm_e = data.rhs_e.norm();
    let scale0 = (d as f64).sqrt() * (1.0 + norm_f0).max(1.0 + norm_c).sqrt();
    let mut y = DVector::zeros(n);
    let mut lam = DVector::zeros(me);
    let mut s = DMatrix::identity(d, d) * scale0;
    let mut z = DMatrix::identity(d, d) * scale0;

    // Best iterate by the largest of gap and residuals; returned when the
    // method stalls in the ill-conditioned end game.
    let mut best: Option<(f64, SdpSolution)> = None;
    let mut stalled = 0;
    let mut best_mu = f64::INFINITY;
    for iter in 0..config.max_iter {
        let r_p = &s - &data.f0 - data.op(&y);
        let r_d = &data.c - data.adjoint(&z) - data.e.transpose() * &lam;
        let r_e = &data.rhs_e - &data.e * &y;
        let pobj = data.c.dot(&y) + problem.objective_constant;
        let dobj = -inner(&data.f0, &z) + data.rhs_e.dot(&lam) + problem.objective_constant;
        let mu = inner(&s, &z) / d as f64;
        let pinf = (r_p.norm() / (1.0 + norm_f0)).max(r_e.norm() / (1.0 + norm_e));
        let dinf = r_d.norm() / (1.0 + norm_c);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        if config.verbose {
            eprintln!(
                    "{iter:3} pobj {pobj:+.10e} dobj {dobj:+.10e} gap {gap:.2e} pinf {pinf:.2e} dinf {dinf:.2e} mu {mu:.2e}"
                );
        }
        let solution = SdpSolution {
            primal_value: pobj,
            dual_value: dobj,
            y: y.iter().copied().collect(),
            status: "Solved".into(),
            primal_residual: pinf,
            dual_residual: dinf,
            iterations: iter,
        };
        if gap < config.tolerance && pinf < config.tolerance && dinf < config.tolerance {
            return Ok(solution);
        }
        if !(pobj.is_finite() && dobj.is_finite()) {
            break;
        }
        let merit = gap.max(pinf).max(dinf);
        match &best {
            Some((b, _)) if merit >= *b => {
                // still progressing while mu keeps falling
                if mu > 0.5 * best_mu {
                    stalled += 1;
                }
            }
            _ => {
                best = Some((merit, solution));
                best_mu = mu;
                stalled = 0;
            }
        }
        if stalled >= 12 || stalled >= 4 && best.as_ref().is_some_and(|(b, _)| *b < 1e-4) {
            break;
        }

        let (Some(chol_s), Some(chol_z)) = (Cholesky::new(s.clone()), Cholesky::new(z.clone())) else {
            break;
        };
        let g = chol_s.inverse();
        // Newton system scaling: the linearised complementarity reads
        // dZ = sigma mu S^-1 - Z - left dS right.
        let (left, right) = if nt_scaling {
            let winv = nt_inverse_scaling(&chol_s, &z);
            (winv.clone(), winv)
        } else {
            (g.clone(), z.clone())
        };
        let m = data.schur(&left, &right);
        let Ok(chol_m) = SchurFactor::new(&m) else {
            break;
        };
        // E M^-1 E^T for the equality multipliers.
        let minv_et = chol_m.solve(&data.e.transpose());
        let k_eq = &data.e * &minv_et;
        let chol_k = if me > 0 {
            match SchurFactor::new(&k_eq) {
                Ok(c) => Some(c),
                Err(_) => break,
            }
        } else {
            None
        };

        let g_rp_z = &left * &r_p * &right;
        let direction = |sigma_mu: f64, corr: Option<&DMatrix<f64>>| -> Direction {
            let mut r = &g * sigma_mu - &z + &g_rp_z;
            if let Some(c) = corr {
                r -= c;
            }
            let h = data.adjoint(&r) - &r_d;
            let mut minv_h = chol_m.solve_vec(&h);
            // Iterative refinement against the unregularised matrix.
            for _ in 0..2 {
                let res = &h - &m * &minv_h;
                minv_h += chol_m.solve_vec(&res);
            }
            let (dy, dl) = match &chol_k {
                Some(ck) => {
                    let dl = ck.solve_vec(&(&r_e - &data.e * &minv_h));
                    (minv_h + &minv_et * &dl, dl)
                }
                None => (minv_h, DVector::zeros(0)),
            };
            let ds = data.op(&dy) - &r_p;
            let mut dz_full = &g * sigma_mu - &z - &left * &ds * &right;
            if let Some(c) = corr {
                dz_full -= c;
            }
            let mut dz = sym(dz_full);
            if let Some(gram) = &gram {
                // least-squares correction inside the dual equalities
                let leak = &r_d - data.adjoint(&dz) - data.e.transpose() * &dl;
                dz += data.op(&gram.solve(&leak));
            }
            Direction { dy, dl, ds, dz }
        };

        let pred = direction(0.0, None);
        let ap = max_step(&chol_s, &pred.ds, 1.0);
        let ad = max_step(&chol_z, &pred.dz, 1.0);
        let mu_aff = inner(&(&s + &pred.ds * ap), &(&z + &pred.dz * ad)) / d as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let corr = &g * &pred.ds * &pred.dz;
        let step = direction(sigma * mu, Some(&corr));
        let ap = max_step(&chol_s, &step.ds, 1.0 / STEP_FRACTION) * STEP_FRACTION;
        let ad = max_step(&chol_z, &step.dz, 1.0 / STEP_FRACTION) * STEP_FRACTION;
        y += &step.dy * ap;
        s += &step.ds * ap;
        s = sym(s);
        z += &step.dz * ad;
        z = sym(z);
        lam += &step.dl * ad;
        if config.verbose {
            eprintln!("    sigma {sigma:.2e} ap {ap:.2e} ad {ad:.2e}");
        }
    }
    match best {
        Some((_, mut sol))
            if sol.dual_residual <= config.residual_threshold && gap_of(&sol) <= config.gap_threshold =>
        {
            sol.status = "AlmostSolved".into();
            Ok(sol)
        }
        Some((merit, _)) => Err(Error::NumericalInstability {
            residual: merit,
            threshold: config.residual_threshold,
        }),
        None => Err(Error::SolverFailure("no iterations performed".into())),
    }
}
