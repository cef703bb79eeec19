//! Bell functionals, entropies (in bits) and the Devetak-Winter rate.

use serde::Serialize;

use crate::boxes::{FamilyPoint, NonlocalBox};
use crate::error::{Error, Result};

/// `<A_x B_y> = sum_ab (-1)^(a xor b) P(ab|xy)`.
pub fn correlator(b: &NonlocalBox, x: usize, y: usize) -> Result<f64> {
    let s = b.scenario();
    if x >= s.nx || y >= s.ny {
        return Err(Error::IndexOutOfRange(format!(
            "setting (x={x}, y={y}) in a {}x{} box",
            s.nx, s.ny
        )));
    }
    if !s.is_binary() {
        return Err(Error::InvalidScenario("correlators need binary outcomes".into()));
    }
    Ok(b.p(x, y, 0, 0) + b.p(x, y, 1, 1) - b.p(x, y, 0, 1) - b.p(x, y, 1, 0))
}

/// Sign pattern of a CHSH expression `sum_xy s_xy <A_x B_y>` over settings
/// `(0,0), (0,1), (1,0), (1,1)`. Valid patterns have an odd number of minus signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ChshVariant {
    pub signs: [i8; 4],
}

impl ChshVariant {
    /// `<A0B0> - <A0B1> + <A1B0> + <A1B1>`.
    pub const CANONICAL: Self = Self { signs: [1, -1, 1, 1] };

    /// The eight CHSH variants, canonical one first.
    pub fn all() -> Vec<Self> {
        let mut out = vec![Self::CANONICAL];
        for mask in 0u8..16 {
            let signs = [0, 1, 2, 3].map(|i| if mask >> i & 1 == 1 { -1 } else { 1 });
            let minus = signs.iter().filter(|&&s| s < 0).count();
            let v = Self { signs };
            if minus % 2 == 1 && v != Self::CANONICAL {
                out.push(v);
            }
        }
        out
    }

    /// Signed value from the four correlators `[E00, E01, E10, E11]`.
    #[inline]
    pub fn evaluate(&self, e: [f64; 4]) -> f64 {
        self.signs.iter().zip(e).map(|(&s, v)| f64::from(s) * v).sum()
    }
}

/// The four CHSH-setting correlators `[E00, E01, E10, E11]`.
pub fn chsh_correlators(b: &NonlocalBox) -> Result<[f64; 4]> {
    let s = b.scenario();
    if s.nx < 2 || s.ny < 2 {
        return Err(Error::ScenarioTooSmall(format!(
            "CHSH needs 2x2 settings, box is {}x{}",
            s.nx, s.ny
        )));
    }
    Ok([
        correlator(b, 0, 0)?,
        correlator(b, 0, 1)?,
        correlator(b, 1, 0)?,
        correlator(b, 1, 1)?,
    ])
}

/// Signed CHSH value for a given variant.
pub fn chsh_signed(b: &NonlocalBox, variant: ChshVariant) -> Result<f64> {
    Ok(variant.evaluate(chsh_correlators(b)?))
}

/// `S = |<A0B0> - <A0B1> + <A1B0> + <A1B1>|`.
pub fn chsh(b: &NonlocalBox) -> Result<f64> {
    Ok(chsh_signed(b, ChshVariant::CANONICAL)?.abs())
}

/// `Q = P(a != b | x=0, y=2)`.
pub fn qber(b: &NonlocalBox) -> Result<f64> {
    let s = b.scenario();
    if s.nx < 1 || s.ny < 3 {
        return Err(Error::ScenarioTooSmall(format!(
            "QBER needs Bob's key setting y=2, box is {}x{}",
            s.nx, s.ny
        )));
    }
    Ok(b.p(0, 2, 0, 1) + b.p(0, 2, 1, 0))
}

/// Binary entropy in bits, `h(0) = h(1) = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::DomainError(format!("binary entropy of {p}")));
    }
    Ok(xlog2x_neg(p) + xlog2x_neg(1.0 - p))
}

fn xlog2x_neg(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * p.log2()
    }
}

/// `H(A|B, X=0, Y=2) = h[1 - alpha (1-v) / 2]` for a family box.
pub fn error_term_family(p: FamilyPoint) -> f64 {
    binary_entropy(1.0 - p.alpha * (1.0 - p.v) / 2.0).expect("argument lies in [1/2, 1]")
}

/// `H(A|B)` of the joint distribution at settings `(x, y)`.
pub fn cond_entropy_ab(b: &NonlocalBox, x: usize, y: usize) -> Result<f64> {
    let s = b.scenario();
    if x >= s.nx || y >= s.ny {
        return Err(Error::ScenarioTooSmall(format!(
            "setting (x={x}, y={y}) not available in a {}x{} box",
            s.nx, s.ny
        )));
    }
    let mut h_joint = 0.0;
    for a in 0..s.na {
        for bb in 0..s.nb {
            h_joint += xlog2x_neg(b.p(x, y, a, bb));
        }
    }
    let h_b: f64 = (0..s.nb).map(|bb| xlog2x_neg(b.marginal_b(x, y, bb))).sum();
    Ok((h_joint - h_b).max(0.0))
}

/// Devetak-Winter rate `H(A|E) - H(A|B)`.
pub fn dw_rate(h_ae: f64, h_ab: f64) -> f64 {
    h_ae - h_ab
}

/// Key-setting error after the two-copy XOR wiring:
/// `h[((1 - alpha (1-v))^2 + 1) / 2]`.
pub fn wired_error_term(p: FamilyPoint) -> f64 {
    let beta = (1.0 - p.alpha * (1.0 - p.v)).powi(2);
    binary_entropy((beta + 1.0) / 2.0).expect("argument lies in [1/2, 1]")
}

/// Solver settings and status attached to a rate report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateMeta {
    pub nodes: usize,
    pub level: usize,
    pub status: String,
    pub tolerance: f64,
}

/// All quantities entering the key rate of one box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub chsh: f64,
    pub qber: f64,
    pub h_ae_lower: f64,
    pub h_cc_upper: Option<f64>,
    pub h_ab: f64,
    pub rate_lower: f64,
    pub rate_upper: Option<f64>,
    pub meta: RateMeta,
}

impl RateReport {
    /// Assembles a report; `rate_lower = h_ae_lower - h_ab` and, when an attack
    /// bound is given, `rate_upper = h_cc_upper - h_ab`.
    pub fn assemble(b: &NonlocalBox, h_ae_lower: f64, h_cc_upper: Option<f64>, meta: RateMeta) -> Result<Self> {
        let h_ab = cond_entropy_ab(b, 0, 2)?;
        Ok(Self {
            chsh: chsh(b)?,
            qber: qber(b)?,
            h_ae_lower,
            h_cc_upper,
            h_ab,
            rate_lower: dw_rate(h_ae_lower, h_ab),
            rate_upper: h_cc_upper.map(|h| dw_rate(h, h_ab)),
            meta,
        })
    }

    /// `h_ae_lower <= h_cc_upper + 1e-3` whenever both bounds are present.
    pub fn is_consistent(&self) -> bool {
        self.h_cc_upper.is_none_or(|u| self.h_ae_lower <= u + 1e-3)
    }
}
