//! The 4x4 two-party state family and the +-1 observables that produce the
//! quantum boxes, evaluated through the Born rule.
//!
//! Local basis `{|0>, |1>, |2>, |3>}`; joint basis index `4 i + j` for `|ij>`.
//! Every observable is a direct sum of a qubit observable on `span{|0>,|1>}`
//! and `sigma_z` on `span{|2>,|3>}`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;

use crate::boxes::{FamilyPoint, NonlocalBox, Scenario};
use crate::error::{Error, Result};

type C = Complex64;

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

/// A 16x16 density matrix on the two 4-level systems.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(DMatrix<C>);

impl DensityMatrix {
    pub fn matrix(&self) -> &DMatrix<C> {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.0 - self.0.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.0 + self.0.adjoint()) * c(0.5);
        herm.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn rank(&self, tol: f64) -> usize {
        let herm = (&self.0 + self.0.adjoint()) * c(0.5);
        herm.symmetric_eigenvalues().iter().filter(|&&e| e.abs() > tol).count()
    }

    /// Checks Hermiticity and unit trace (1e-12) and positivity (min eigenvalue >= -1e-10).
    pub fn validate(&self) -> Result<()> {
        let h = self.hermiticity_error();
        if h > 1e-12 {
            return Err(Error::InvalidParameter(format!("state not Hermitian ({h:e})")));
        }
        let t = self.trace();
        if (t - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("state trace {t}")));
        }
        let e = self.min_eigenvalue();
        if e < -1e-10 {
            return Err(Error::InvalidParameter(format!("state has eigenvalue {e}")));
        }
        Ok(())
    }
}

/// A +-1-valued observable on one 4-level system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observable(pub Matrix4<C>);

impl Observable {
    /// `M^{a} = (I + (-1)^a O) / 2`.
    pub fn projector(&self, outcome: usize) -> Matrix4<C> {
        let sign = if outcome == 0 { 1.0 } else { -1.0 };
        (Matrix4::identity() + self.0 * c(sign)) * c(0.5)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.0.symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }
}

/// Angles `phi` of the qubit blocks `cos(phi) sigma_z + sin(phi) sigma_x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementAngles {
    pub alice: [f64; 2],
    pub bob: [f64; 3],
}

impl MeasurementAngles {
    /// Settings reaching the maximal CHSH value on the singlet, with the key
    /// setting of Bob anticorrelated to Alice's first measurement's block.
    pub fn standard() -> Self {
        Self {
            alice: [FRAC_PI_2, 0.0],
            bob: [1.25 * PI, 0.75 * PI, 1.5 * PI],
        }
    }
}

/// Alice's two and Bob's three observables.
#[derive(Debug, Clone, PartialEq)]
pub struct Observables {
    pub alice: [Observable; 2],
    pub bob: [Observable; 3],
}

fn sigma_x01() -> Matrix4<C> {
    let mut m = Matrix4::zeros();
    m[(0, 1)] = c(1.0);
    m[(1, 0)] = c(1.0);
    m
}

fn sigma_z01() -> Matrix4<C> {
    let mut m = Matrix4::zeros();
    m[(0, 0)] = c(1.0);
    m[(1, 1)] = c(-1.0);
    m
}

fn sigma_z23() -> Matrix4<C> {
    let mut m = Matrix4::zeros();
    m[(2, 2)] = c(1.0);
    m[(3, 3)] = c(-1.0);
    m
}

/// The observables of the key-distribution family:
///
/// * `A_0 = sx + sz'`, `A_1 = sz + sz'`
/// * `B_0 = -(sx + sz)/sqrt2 + sz'`, `B_1 = (sx - sz)/sqrt2 + sz'`, `B_2 = -sx + sz'`
///
/// where `sx`, `sz` act on `span{|0>,|1>}` and `sz'` on `span{|2>,|3>}`.
pub fn observables() -> Observables {
    let (sx, sz, sz23) = (sigma_x01(), sigma_z01(), sigma_z23());
    let r = c(FRAC_1_SQRT_2);
    Observables {
        alice: [Observable(sx + sz23), Observable(sz + sz23)],
        bob: [
            Observable(-(sx + sz) * r + sz23),
            Observable((sx - sz) * r + sz23),
            Observable(-sx + sz23),
        ],
    }
}

/// Observables with the qubit blocks rotated to arbitrary angles.
pub fn observables_with_angles(angles: &MeasurementAngles) -> Observables {
    let (sx, sz, sz23) = (sigma_x01(), sigma_z01(), sigma_z23());
    let block = |phi: f64| Observable(sz * c(phi.cos()) + sx * c(phi.sin()) + sz23);
    Observables {
        alice: [block(angles.alice[0]), block(angles.alice[1])],
        bob: [block(angles.bob[0]), block(angles.bob[1]), block(angles.bob[2])],
    }
}

/// `rho = alpha (v |psi><psi| + (1-v) I_4/4) + (1-alpha)/2 (|22><22| + |33><33|)`
/// with `|psi> = (|01> - |10>)/sqrt2` and `I_4` the identity on the two-qubit
/// `{0,1} x {0,1}` subspace.
pub fn build_state(p: FamilyPoint) -> DensityMatrix {
    let idx = |i: usize, j: usize| 4 * i + j;
    let mut rho = DMatrix::<C>::zeros(16, 16);

    let mut psi = vec![c(0.0); 16];
    psi[idx(0, 1)] = c(FRAC_1_SQRT_2);
    psi[idx(1, 0)] = c(-FRAC_1_SQRT_2);
    for i in 0..16 {
        for j in 0..16 {
            rho[(i, j)] += psi[i] * psi[j].conj() * c(p.alpha * p.v);
        }
    }
    let noise = p.alpha * (1.0 - p.v) / 4.0;
    for i in 0..2 {
        for j in 0..2 {
            rho[(idx(i, j), idx(i, j))] += c(noise);
        }
    }
    let corr = (1.0 - p.alpha) / 2.0;
    rho[(idx(2, 2), idx(2, 2))] += c(corr);
    rho[(idx(3, 3), idx(3, 3))] += c(corr);
    DensityMatrix(rho)
}

/// `P(ab|xy) = Tr[rho (M_A^{x,a} (x) M_B^{y,b})]` on the 2x3 scenario.
pub fn born_box(rho: &DensityMatrix, obs: &Observables) -> Result<NonlocalBox> {
    let s = Scenario::protocol();
    let mut table = vec![0.0; s.len()];
    for (x, ax) in obs.alice.iter().enumerate() {
        for (y, by) in obs.bob.iter().enumerate() {
            for a in 0..2 {
                let ma = ax.projector(a);
                for b in 0..2 {
                    let mb = by.projector(b);
                    let joint = ma.kronecker(&mb);
                    let r = rho.matrix();
                    let mut p = 0.0;
                    for i in 0..16 {
                        for j in 0..16 {
                            p += (r[(i, j)] * joint[(j, i)]).re;
                        }
                    }
                    table[s.index(x, y, a, b)] = p;
                }
            }
        }
    }
    NonlocalBox::new(s, table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxes::{correlated_box, family_box};
    use crate::rates::{chsh, qber};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all(obs: &Observables) -> Vec<Observable> {
        obs.alice.iter().chain(obs.bob.iter()).copied().collect()
    }

    #[test]
    fn observables_square_to_identity() {
        for o in all(&observables()) {
            let sq = o.0 * o.0;
            let err = (sq - Matrix4::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "O^2 deviates by {err}");
            let herm = (o.0 - o.0.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(herm < 1e-15);
        }
    }

    #[test]
    fn a0_spectrum() {
        let e = observables().alice[0].eigenvalues();
        let expect = [-1.0, -1.0, 1.0, 1.0];
        for (x, y) in e.iter().zip(expect) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn standard_angles_reproduce_observables() {
        let a = observables();
        let b = observables_with_angles(&MeasurementAngles::standard());
        for (o1, o2) in all(&a).iter().zip(all(&b)) {
            let err = (o1.0 - o2.0).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err < 1e-12);
        }
    }

    #[test]
    fn projector_algebra() {
        for o in all(&observables()) {
            let (m0, m1) = (o.projector(0), o.projector(1));
            let sum_err = (m0 + m1 - Matrix4::identity())
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            assert!(sum_err < 1e-12);
            for m in [m0, m1] {
                let idem = (m * m - m).iter().map(|z| z.norm()).fold(0.0, f64::max);
                assert!(idem < 1e-12);
            }
        }
    }

    #[test]
    fn state_endpoints() {
        let pure = build_state(FamilyPoint::new(1.0, 1.0).unwrap());
        pure.validate().unwrap();
        assert_eq!(pure.rank(1e-9), 1);

        let corr = build_state(FamilyPoint::new(0.0, 0.4).unwrap());
        corr.validate().unwrap();
        let m = corr.matrix();
        assert!((m[(10, 10)].re - 0.5).abs() < 1e-15);
        assert!((m[(15, 15)].re - 0.5).abs() < 1e-15);
        assert!((m.iter().map(|z| z.norm()).sum::<f64>() - 1.0).abs() < 1e-15);

        let mid = build_state(FamilyPoint::new(0.5, 0.5).unwrap());
        mid.validate().unwrap();
        assert!(mid.min_eigenvalue() >= -1e-15);
    }

    #[test]
    fn born_box_at_maximal_point() {
        let b = born_box(&build_state(FamilyPoint::new(1.0, 1.0).unwrap()), &observables()).unwrap();
        assert!((chsh(&b).unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-9);
        assert!(qber(&b).unwrap().abs() < 1e-12);
    }

    #[test]
    fn born_box_without_entanglement_is_correlated() {
        let b = born_box(&build_state(FamilyPoint::new(0.0, 0.8).unwrap()), &observables()).unwrap();
        assert!(b.max_abs_diff(&correlated_box(Scenario::protocol()).unwrap()) < 1e-15);
    }

    #[test]
    fn born_box_matches_family_and_qber_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let obs = observables();
        for _ in 0..50 {
            let p = FamilyPoint::new(rng.gen(), rng.gen()).unwrap();
            let b = born_box(&build_state(p), &obs).unwrap();
            assert!(b.max_abs_diff(&family_box(p)) < 1e-12);
            assert!(b.is_no_signalling(1e-10).no_signalling);
            let q = qber(&b).unwrap();
            assert!((q - p.alpha * (1.0 - p.v) / 2.0).abs() < 1e-10);
        }
    }
}
