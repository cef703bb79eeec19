//! Convex-combination attack on the family: Eve splits the box into a maximally
//! nonlocal quantum part, the last local visibility and the correlated box,
//! and learns Alice's outcome on the last two.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use serde::Serialize;

use crate::boxes::{family_box, FamilyPoint, NonlocalBox};
use crate::error::{Error, Result};
use crate::rates::{binary_entropy, error_term_family, qber, wired_error_term};
use crate::wirings::{wired_params, xor_wired_family};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CCDecomposition {
    /// Weight on the `v = 1` box.
    pub q_nl1: f64,
    /// Weight on the `v = 1/sqrt2` (local) box.
    pub q_loc: f64,
    /// Weight on the correlated box.
    pub q_c: f64,
    pub h_cc: f64,
}

impl CCDecomposition {
    /// The mixture `q_nl1 P(1,1) + q_loc P(1,1/sqrt2) + q_c P_C`.
    pub fn reconstruct(&self) -> NonlocalBox {
        let nl = family_box(FamilyPoint { alpha: 1.0, v: 1.0 });
        let loc = family_box(FamilyPoint {
            alpha: 1.0,
            v: FRAC_1_SQRT_2,
        });
        let corr = family_box(FamilyPoint { alpha: 0.0, v: 0.0 });
        NonlocalBox::mix(&[(self.q_nl1, &nl), (self.q_loc, &loc), (self.q_c, &corr)])
            .expect("weights form a probability vector")
    }
}

/// Decomposition of the family box; below `v = 1/sqrt2` the noisy part is
/// itself local and the nonlocal weight is zero.
pub fn cc_decompose(p: FamilyPoint) -> CCDecomposition {
    let q_c = 1.0 - p.alpha;
    if p.v < FRAC_1_SQRT_2 {
        return CCDecomposition {
            q_nl1: 0.0,
            q_loc: p.alpha,
            q_c,
            h_cc: 0.0,
        };
    }
    let q_nl1 = p.alpha * SQRT_2 * (p.v - FRAC_1_SQRT_2) / (SQRT_2 - 1.0);
    let q_loc = p.alpha * (1.0 - p.v) / (1.0 - FRAC_1_SQRT_2);
    CCDecomposition {
        q_nl1,
        q_loc,
        q_c,
        h_cc: q_nl1.clamp(0.0, p.alpha),
    }
}

/// Eve's conditional entropy on Alice's key outcome under the attack.
pub fn h_cc(p: FamilyPoint) -> f64 {
    cc_decompose(p).h_cc
}

/// Binary entropy of the key-setting agreement after wiring `copies` copies
/// of the family box with the XOR wiring, computed from the wired box.
pub fn xor_error_term(p: FamilyPoint, copies: usize) -> Result<f64> {
    if copies == 1 {
        return Ok(error_term_family(p));
    }
    let wired = xor_wired_family(p, copies)?;
    binary_entropy(1.0 - qber(&wired)?)
}

/// Upper bound on the key rate of `copies` XOR-wired copies under the attack:
/// the single-copy formula at the wired parameters minus the wired error term.
pub fn cc_rate_upper(p: FamilyPoint, copies: usize) -> Result<f64> {
    match copies {
        1 => Ok(h_cc(p) - error_term_family(p)),
        2 => Ok(h_cc(wired_params(p, 2)?) - wired_error_term(p)),
        3 => Ok(h_cc(wired_params(p, 3)?) - xor_error_term(p, 3)?),
        k => Err(Error::InvalidParameter(format!(
            "attack rate is available for 1..=3 copies, got {k}"
        ))),
    }
}

const BOUNDARY_TOL: f64 = 1e-8;

/// Visibility `v*` in `[1/sqrt2, 1]` where [`cc_rate_upper`] changes sign.
pub fn cc_boundary(alpha: f64, copies: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} outside (0, 1]")));
    }
    let rate = |v: f64| -> Result<f64> { cc_rate_upper(FamilyPoint::new(alpha, v)?, copies) };
    let (mut lo, mut hi) = (FRAC_1_SQRT_2, 1.0);
    let (f_lo, f_hi) = (rate(lo)?, rate(hi)?);
    // a rate that only touches zero at an endpoint never changes sign
    if !(f_lo < 0.0 && f_hi > 0.0 || f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::NoRoot { lo, hi });
    }
    let lo_negative = f_lo < 0.0;
    while hi - lo > BOUNDARY_TOL {
        let mid = 0.5 * (lo + hi);
        if (rate(mid)? < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::binary_entropy;

    #[test]
    fn endpoints() {
        for alpha in [0.1, 0.5, 1.0] {
            let d = cc_decompose(FamilyPoint::new(alpha, 1.0).unwrap());
            assert!((d.q_nl1 - alpha).abs() < 1e-12);
            assert!(d.q_loc.abs() < 1e-12);
            assert_eq!(h_cc(FamilyPoint::new(alpha, FRAC_1_SQRT_2).unwrap()), 0.0);
            assert!(cc_rate_upper(FamilyPoint::new(alpha, FRAC_1_SQRT_2).unwrap(), 1).unwrap() <= 0.0);
        }
        assert!((h_cc(FamilyPoint::new(1.0, 1.0).unwrap()) - 1.0).abs() < 1e-12);
        assert!((cc_rate_upper(FamilyPoint::new(1.0, 1.0).unwrap(), 1).unwrap() - 1.0).abs() < 1e-12);
        let d = cc_decompose(FamilyPoint::new(0.5, 0.3).unwrap());
        assert_eq!((d.q_nl1, d.q_loc, d.q_c), (0.0, 0.5, 0.5));
    }

    #[test]
    fn benchmark_values() {
        let p = FamilyPoint::new(0.02, 0.90236).unwrap();
        // 0.02 (sqrt2 * 0.90236 - 1) / (sqrt2 - 1)
        let expected = 0.02 * (1.276119_f64 - 1.0) / 0.414214;
        assert!((h_cc(p) - expected).abs() < 1e-6);
        assert!((h_cc(p) - 0.0133327).abs() < 5e-8);
        let r = cc_rate_upper(p, 1).unwrap();
        assert!((r - (0.0133327 - 0.0111722)).abs() < 1e-6, "{r}");
    }

    #[test]
    fn reconstruction() {
        for (alpha, v) in [(0.02, 0.90236), (1.0, 0.8), (0.3, FRAC_1_SQRT_2), (0.7, 1.0)] {
            let p = FamilyPoint::new(alpha, v).unwrap();
            let d = cc_decompose(p);
            assert!((d.q_nl1 + d.q_loc + d.q_c - 1.0).abs() < 1e-12);
            assert!(d.reconstruct().max_abs_diff(&family_box(p)) < 1e-12);
        }
    }

    #[test]
    fn engine_error_term_matches_closed_forms() {
        for (alpha, v) in [(0.02, 0.90236), (0.5, 0.8), (1.0, 0.75)] {
            let p = FamilyPoint::new(alpha, v).unwrap();
            assert!((xor_error_term(p, 2).unwrap() - wired_error_term(p)).abs() < 1e-12);
            let gamma = (1.0 - alpha * (1.0 - v)).powi(3);
            let closed = binary_entropy((1.0 + gamma) / 2.0).unwrap();
            assert!((xor_error_term(p, 3).unwrap() - closed).abs() < 1e-12);
        }
    }

    #[test]
    fn single_copy_boundary_at_full_alpha() {
        let v = cc_boundary(1.0, 1).unwrap();
        let lhs = (SQRT_2 * v - 1.0) / (SQRT_2 - 1.0);
        let rhs = binary_entropy((1.0 + v) / 2.0).unwrap();
        assert!((lhs - rhs).abs() < 1e-7);
        assert!(v > FRAC_1_SQRT_2 && v < 1.0);
    }

    #[test]
    fn boundary_errors() {
        assert!(matches!(cc_boundary(0.0, 1), Err(Error::InvalidParameter(_))));
        assert!(cc_rate_upper(FamilyPoint::new(0.5, 0.9).unwrap(), 4).is_err());
        // two wired copies at alpha = 1 stay at or below zero up to v = 1
        assert!(matches!(cc_boundary(1.0, 2), Err(Error::NoRoot { .. })));
    }
}
