//! Bipartite nonlocal boxes `P(ab|xy)` and the elementary boxes used throughout
//! the crate: the PR box, white noise, the perfectly correlated box and the
//! two-parameter quantum family `P_{alpha,v}`.
//!
//! Tables are stored flat in `[x][y][a][b]` row-major order. Composite boxes
//! (products of copies) flatten their joint inputs and outputs with the first
//! copy most significant.

use std::f64::consts::SQRT_2;
use std::fmt::Write as _;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum;

/// Entry/normalisation tolerance applied on construction.
pub const PROB_TOL: f64 = 1e-9;

/// Input and output cardinalities of a bipartite box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    pub nx: usize,
    pub ny: usize,
    pub na: usize,
    pub nb: usize,
}

impl Scenario {
    /// Binary-outcome scenario with `nx` inputs for Alice and `ny` for Bob.
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        Self::with_outputs(nx, ny, 2, 2)
    }

    /// General cardinalities; only composite (product) boxes use outputs other than 2.
    pub fn with_outputs(nx: usize, ny: usize, na: usize, nb: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidScenario(format!(
                "input counts must be positive (nx={nx}, ny={ny})"
            )));
        }
        if na < 2 || nb < 2 {
            return Err(Error::InvalidScenario(format!(
                "output counts must be at least 2 (na={na}, nb={nb})"
            )));
        }
        Ok(Self { nx, ny, na, nb })
    }

    /// The 2x3 scenario of the key-distribution protocol.
    pub fn protocol() -> Self {
        Self {
            nx: 2,
            ny: 3,
            na: 2,
            nb: 2,
        }
    }

    /// The 2x2 CHSH scenario.
    pub fn bell() -> Self {
        Self {
            nx: 2,
            ny: 2,
            na: 2,
            nb: 2,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.na * self.nb
    }

    pub fn is_binary(&self) -> bool {
        self.na == 2 && self.nb == 2
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, a: usize, b: usize) -> usize {
        ((x * self.ny + y) * self.na + a) * self.nb + b
    }
}

/// Point `(alpha, v)` of the quantum box family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyPoint {
    pub alpha: f64,
    pub v: f64,
}

impl FamilyPoint {
    pub fn new(alpha: f64, v: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParameter(format!(
                "family point (alpha={alpha}, v={v}) outside [0,1]^2"
            )));
        }
        Ok(Self { alpha, v })
    }
}

/// Weights of the decomposition `p_pr P_PR + p_0 P_0 + p_c P_C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureWeights {
    pub p_pr: f64,
    pub p_0: f64,
    pub p_c: f64,
}

impl MixtureWeights {
    pub fn new(p_pr: f64, p_0: f64, p_c: f64) -> Result<Self> {
        if p_pr < -1e-12 || p_0 < -1e-12 || p_c < -1e-12 {
            return Err(Error::InvalidParameter(format!(
                "negative mixture weight ({p_pr}, {p_0}, {p_c})"
            )));
        }
        let total = p_pr + p_0 + p_c;
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("mixture weights sum to {total}")));
        }
        Ok(Self { p_pr, p_0, p_c })
    }

    pub const PR: Self = Self {
        p_pr: 1.0,
        p_0: 0.0,
        p_c: 0.0,
    };
    pub const NOISE: Self = Self {
        p_pr: 0.0,
        p_0: 1.0,
        p_c: 0.0,
    };
    pub const CORRELATED: Self = Self {
        p_pr: 0.0,
        p_0: 0.0,
        p_c: 1.0,
    };

    /// The box `p_pr P_PR + p_0 P_0 + p_c P_C` on the given scenario.
    pub fn to_box(&self, scenario: Scenario) -> Result<NonlocalBox> {
        let pr = pr_box_on(scenario)?;
        let noise = white_noise(scenario)?;
        let corr = correlated_box(scenario)?;
        NonlocalBox::mix(&[(self.p_pr, &pr), (self.p_0, &noise), (self.p_c, &corr)])
    }
}

/// A validated conditional distribution `P(ab|xy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlocalBox {
    scenario: Scenario,
    table: Vec<f64>,
}

/// Result of a no-signalling check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignallingReport {
    pub no_signalling: bool,
    pub max_deviation: f64,
}

impl NonlocalBox {
    /// Validates `table` (flat, `[x][y][a][b]`) against `scenario`.
    ///
    /// Entries within `PROB_TOL` of `[0, 1]` are clamped; every `(x, y)` slice
    /// must sum to one within `PROB_TOL`.
    pub fn new(scenario: Scenario, mut table: Vec<f64>) -> Result<Self> {
        if table.len() != scenario.len() {
            return Err(Error::ShapeMismatch {
                expected: scenario.len(),
                got: table.len(),
            });
        }
        for x in 0..scenario.nx {
            for y in 0..scenario.ny {
                let mut sum = 0.0;
                for a in 0..scenario.na {
                    for b in 0..scenario.nb {
                        let i = scenario.index(x, y, a, b);
                        let p = table[i];
                        if !p.is_finite() || p < -PROB_TOL {
                            return Err(Error::NegativeProbability { x, y, a, b, value: p });
                        }
                        if p > 1.0 + PROB_TOL {
                            return Err(Error::NotNormalized {
                                x,
                                y,
                                sum: p,
                                deviation: p - 1.0,
                            });
                        }
                        table[i] = p.clamp(0.0, 1.0);
                        sum += p;
                    }
                }
                if (sum - 1.0).abs() > PROB_TOL {
                    return Err(Error::NotNormalized {
                        x,
                        y,
                        sum,
                        deviation: sum - 1.0,
                    });
                }
            }
        }
        Ok(Self { scenario, table })
    }

    /// Builds a box from a closure over `(x, y, a, b)`.
    pub fn from_fn(scenario: Scenario, f: impl Fn(usize, usize, usize, usize) -> f64) -> Result<Self> {
        let mut table = vec![0.0; scenario.len()];
        for x in 0..scenario.nx {
            for y in 0..scenario.ny {
                for a in 0..scenario.na {
                    for b in 0..scenario.nb {
                        table[scenario.index(x, y, a, b)] = f(x, y, a, b);
                    }
                }
            }
        }
        Self::new(scenario, table)
    }

    /// Convex combination of boxes sharing one scenario.
    pub fn mix(parts: &[(f64, &NonlocalBox)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        let scenario = first.1.scenario;
        let mut table = vec![0.0; scenario.len()];
        for (w, b) in parts {
            if b.scenario != scenario {
                return Err(Error::ShapeMismatch {
                    expected: scenario.len(),
                    got: b.scenario.len(),
                });
            }
            for (t, p) in table.iter_mut().zip(&b.table) {
                *t += w * p;
            }
        }
        Self::new(scenario, table)
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    #[inline]
    pub fn p(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.table[self.scenario.index(x, y, a, b)]
    }

    /// Alice's marginal `P(a|xy)`.
    pub fn marginal_a(&self, x: usize, y: usize, a: usize) -> f64 {
        (0..self.scenario.nb).map(|b| self.p(x, y, a, b)).sum()
    }

    /// Bob's marginal `P(b|xy)`.
    pub fn marginal_b(&self, x: usize, y: usize, b: usize) -> f64 {
        (0..self.scenario.na).map(|a| self.p(x, y, a, b)).sum()
    }

    /// Restriction to the first `nx` and `ny` inputs.
    pub fn restrict(&self, nx: usize, ny: usize) -> Result<Self> {
        let s = self.scenario;
        if nx > s.nx || ny > s.ny || nx == 0 || ny == 0 {
            return Err(Error::ScenarioTooSmall(format!(
                "cannot restrict {}x{} box to {nx}x{ny}",
                s.nx, s.ny
            )));
        }
        let sub = Scenario::with_outputs(nx, ny, s.na, s.nb)?;
        Self::from_fn(sub, |x, y, a, b| self.p(x, y, a, b))
    }

    /// Maximum deviation of the marginals from input-independence.
    pub fn is_no_signalling(&self, tol: f64) -> SignallingReport {
        let s = self.scenario;
        let mut dev: f64 = 0.0;
        for x in 0..s.nx {
            for a in 0..s.na {
                let reference = self.marginal_a(x, 0, a);
                for y in 1..s.ny {
                    dev = dev.max((self.marginal_a(x, y, a) - reference).abs());
                }
            }
        }
        for y in 0..s.ny {
            for b in 0..s.nb {
                let reference = self.marginal_b(0, y, b);
                for x in 1..s.nx {
                    dev = dev.max((self.marginal_b(x, y, b) - reference).abs());
                }
            }
        }
        SignallingReport {
            no_signalling: dev <= tol,
            max_deviation: dev,
        }
    }

    /// Largest entrywise difference to `other` (infinite on scenario mismatch).
    pub fn max_abs_diff(&self, other: &NonlocalBox) -> f64 {
        if self.scenario != other.scenario {
            return f64::INFINITY;
        }
        self.table
            .iter()
            .zip(&other.table)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max)
    }

    /// Box text format: a JSON object with `nx`, `ny`, `na`, `nb` and a
    /// `table` nested as `[x][y][a][b]`, numbers written with 17 significant digits.
    pub fn to_text(&self) -> String {
        let s = self.scenario;
        let mut out = String::new();
        let _ = writeln!(out, "{{");
        let _ = writeln!(out, "  \"nx\": {},", s.nx);
        let _ = writeln!(out, "  \"ny\": {},", s.ny);
        let _ = writeln!(out, "  \"na\": {},", s.na);
        let _ = writeln!(out, "  \"nb\": {},", s.nb);
        let _ = writeln!(out, "  \"table\": [");
        for x in 0..s.nx {
            let _ = writeln!(out, "    [");
            for y in 0..s.ny {
                out.push_str("      [");
                for a in 0..s.na {
                    out.push('[');
                    let row: Vec<String> = (0..s.nb).map(|b| format!("{:.16e}", self.p(x, y, a, b))).collect();
                    out.push_str(&row.join(", "));
                    out.push(']');
                    if a + 1 < s.na {
                        out.push_str(", ");
                    }
                }
                out.push(']');
                out.push_str(if y + 1 < s.ny { ",\n" } else { "\n" });
            }
            out.push_str(if x + 1 < s.nx { "    ],\n" } else { "    ]\n" });
        }
        let _ = writeln!(out, "  ]");
        out.push_str("}\n");
        out
    }

    /// Parses the box text format written by [`NonlocalBox::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Doc {
            nx: usize,
            ny: usize,
            na: usize,
            nb: usize,
            table: Vec<Vec<Vec<Vec<f64>>>>,
        }
        let doc: Doc = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let scenario = Scenario::with_outputs(doc.nx, doc.ny, doc.na, doc.nb)?;
        let shape_err = |what: &str| Error::Parse {
            line: 0,
            column: 0,
            message: format!("table shape does not match declared {what}"),
        };
        if doc.table.len() != doc.nx {
            return Err(shape_err("nx"));
        }
        let mut flat = Vec::with_capacity(scenario.len());
        for by_x in &doc.table {
            if by_x.len() != doc.ny {
                return Err(shape_err("ny"));
            }
            for by_y in by_x {
                if by_y.len() != doc.na {
                    return Err(shape_err("na"));
                }
                for by_a in by_y {
                    if by_a.len() != doc.nb {
                        return Err(shape_err("nb"));
                    }
                    flat.extend_from_slice(by_a);
                }
            }
        }
        Self::new(scenario, flat)
    }
}

/// Validated box from a flat `[x][y][a][b]` table.
pub fn make_box(scenario: Scenario, table: Vec<f64>) -> Result<NonlocalBox> {
    NonlocalBox::new(scenario, table)
}

/// PR box on 2x2 settings: `P(ab|xy) = 1/2` iff `a xor b = (x xor 1) y`.
pub fn pr_box() -> NonlocalBox {
    pr_box_on(Scenario::bell()).expect("2x2 PR box is valid")
}

/// PR relation `a xor b = (x xor 1)(y mod 2)` extended to any binary scenario.
///
/// Bob inputs beyond 1 behave like `y mod 2`, which keeps the box no-signalling
/// and lets the mixture family live on the 2x3 scenario.
pub fn pr_box_on(scenario: Scenario) -> Result<NonlocalBox> {
    binary_only(scenario)?;
    NonlocalBox::from_fn(
        scenario,
        |x, y, a, b| {
            if (a ^ b) == ((x ^ 1) & (y & 1)) {
                0.5
            } else {
                0.0
            }
        },
    )
}

pub fn white_noise(scenario: Scenario) -> Result<NonlocalBox> {
    let w = 1.0 / (scenario.na * scenario.nb) as f64;
    NonlocalBox::from_fn(scenario, |_, _, _, _| w)
}

/// Perfectly correlated outputs: `P_C(00|xy) = P_C(11|xy) = 1/2`.
pub fn correlated_box(scenario: Scenario) -> Result<NonlocalBox> {
    binary_only(scenario)?;
    NonlocalBox::from_fn(scenario, |_, _, a, b| if a == b { 0.5 } else { 0.0 })
}

/// The noiseless quantum box `P_T` (family point (1, 1)).
pub fn tsirelson_box() -> NonlocalBox {
    tsirelson_cached().clone()
}

fn tsirelson_cached() -> &'static NonlocalBox {
    static P_T: OnceLock<NonlocalBox> = OnceLock::new();
    P_T.get_or_init(|| {
        let rho = quantum::build_state(FamilyPoint { alpha: 1.0, v: 1.0 });
        quantum::born_box(&rho, &quantum::observables()).expect("Born-rule box at (1,1) is valid")
    })
}

/// `alpha v P_T + alpha (1-v) P_0 + (1-alpha) P_C` on the 2x3 scenario.
pub fn family_box(p: FamilyPoint) -> NonlocalBox {
    let s = Scenario::protocol();
    let t = tsirelson_cached();
    let (wt, w0, wc) = (p.alpha * p.v, p.alpha * (1.0 - p.v), 1.0 - p.alpha);
    NonlocalBox::from_fn(s, |x, y, a, b| {
        let corr = if a == b { 0.5 } else { 0.0 };
        wt * t.p(x, y, a, b) + w0 * 0.25 + wc * corr
    })
    .expect("family boxes are valid for (alpha, v) in [0,1]^2")
}

/// `p_pr = alpha v / sqrt2`, `p_0 = alpha (1 - v / sqrt2)`, `p_c = 1 - alpha`.
pub fn to_mixture(p: FamilyPoint) -> MixtureWeights {
    let w = p.v / SQRT_2;
    MixtureWeights {
        p_pr: p.alpha * w,
        p_0: p.alpha * (1.0 - w),
        p_c: 1.0 - p.alpha,
    }
}

/// Inverse of [`to_mixture`]; `v = 0` is returned when `alpha = 0`.
pub fn from_mixture(w: MixtureWeights) -> Result<FamilyPoint> {
    const TOL: f64 = 1e-12;
    if w.p_pr < -TOL || w.p_0 < -TOL || w.p_c < -TOL {
        return Err(Error::NotRepresentable(format!("negative weight in {w:?}")));
    }
    if (w.p_pr + w.p_0 + w.p_c - 1.0).abs() > TOL {
        return Err(Error::NotRepresentable(format!("weights {w:?} do not sum to 1")));
    }
    let alpha = (1.0 - w.p_c).clamp(0.0, 1.0);
    if alpha <= TOL {
        return Ok(FamilyPoint { alpha: 0.0, v: 0.0 });
    }
    let v = SQRT_2 * w.p_pr.max(0.0) / alpha;
    if v > 1.0 + 1e-12 {
        return Err(Error::NotRepresentable(format!(
            "PR fraction {} exceeds 1/sqrt2",
            w.p_pr / alpha
        )));
    }
    Ok(FamilyPoint { alpha, v: v.min(1.0) })
}

/// Two independent copies as one composite box (first copy most significant).
pub fn product(b1: &NonlocalBox, b2: &NonlocalBox) -> NonlocalBox {
    let (s1, s2) = (b1.scenario, b2.scenario);
    let s = Scenario {
        nx: s1.nx * s2.nx,
        ny: s1.ny * s2.ny,
        na: s1.na * s2.na,
        nb: s1.nb * s2.nb,
    };
    let mut table = vec![0.0; s.len()];
    for x1 in 0..s1.nx {
        for x2 in 0..s2.nx {
            for y1 in 0..s1.ny {
                for y2 in 0..s2.ny {
                    for a1 in 0..s1.na {
                        for a2 in 0..s2.na {
                            for bb1 in 0..s1.nb {
                                for bb2 in 0..s2.nb {
                                    let i =
                                        s.index(x1 * s2.nx + x2, y1 * s2.ny + y2, a1 * s2.na + a2, bb1 * s2.nb + bb2);
                                    table[i] = b1.p(x1, y1, a1, bb1) * b2.p(x2, y2, a2, bb2);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    NonlocalBox::new(s, table).expect("product of valid boxes is valid")
}

fn binary_only(s: Scenario) -> Result<()> {
    if s.is_binary() {
        Ok(())
    } else {
        Err(Error::InvalidScenario(format!(
            "binary outcomes required (na={}, nb={})",
            s.na, s.nb
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::chsh;

    #[test]
    fn uniform_table_is_white_noise() {
        let s = Scenario::bell();
        let b = make_box(s, vec![0.25; 16]).unwrap();
        assert_eq!(b, white_noise(s).unwrap());
    }

    #[test]
    fn unnormalized_table_is_rejected() {
        let s = Scenario::bell();
        let mut t = vec![0.25; 16];
        t[s.index(1, 0, 0, 0)] = 0.15;
        match make_box(s, t) {
            Err(Error::NotNormalized { x, y, deviation, .. }) => {
                assert_eq!((x, y), (1, 0));
                assert!((deviation + 0.1).abs() < 1e-12);
            }
            other => panic!("expected NotNormalized, got {other:?}"),
        }
    }

    #[test]
    fn negative_entry_is_rejected_but_tiny_ones_are_clamped() {
        let s = Scenario::bell();
        let mut t = vec![0.25; 16];
        t[0] = -0.01;
        t[1] = 0.51;
        assert!(matches!(make_box(s, t), Err(Error::NegativeProbability { .. })));

        let mut t = vec![0.25; 16];
        t[0] = -1e-12;
        t[1] = 0.5 + 1e-12;
        let b = make_box(s, t).unwrap();
        assert_eq!(b.table()[0], 0.0);
    }

    #[test]
    fn pr_box_marginals_are_uniform() {
        let b = pr_box();
        for x in 0..2 {
            for y in 0..2 {
                for o in 0..2 {
                    assert_eq!(b.marginal_a(x, y, o), 0.5);
                    assert_eq!(b.marginal_b(x, y, o), 0.5);
                }
                // a xor b = (x xor 1) y
                let parity = (x ^ 1) & y;
                assert_eq!(b.p(x, y, 0, parity), 0.5);
            }
        }
        let r = b.is_no_signalling(1e-9);
        assert!(r.no_signalling);
        assert_eq!(r.max_deviation, 0.0);
    }

    #[test]
    fn elementary_boxes() {
        let s = Scenario::protocol();
        let c = correlated_box(s).unwrap();
        let n = white_noise(s).unwrap();
        for x in 0..2 {
            for y in 0..3 {
                assert_eq!(c.p(x, y, 0, 0), 0.5);
                assert_eq!(c.p(x, y, 1, 1), 0.5);
                assert_eq!(c.p(x, y, 0, 1), 0.0);
                assert_eq!(c.p(x, y, 1, 0), 0.0);
                for a in 0..2 {
                    for b in 0..2 {
                        assert_eq!(n.p(x, y, a, b), 0.25);
                    }
                }
            }
        }
        assert!((chsh(&tsirelson_box()).unwrap() - 2.0 * SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn family_box_endpoints() {
        let s = Scenario::protocol();
        let c = family_box(FamilyPoint::new(0.0, 0.37).unwrap());
        assert!(c.max_abs_diff(&correlated_box(s).unwrap()) < 1e-15);
        let n = family_box(FamilyPoint::new(1.0, 0.0).unwrap());
        assert!(n.max_abs_diff(&white_noise(s).unwrap()) < 1e-15);
        let t = family_box(FamilyPoint::new(1.0, 1.0).unwrap());
        assert!((chsh(&t).unwrap() - 2.0 * SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn mixture_conversion_examples() {
        let w = to_mixture(FamilyPoint::new(0.02, 0.90236).unwrap());
        assert!((w.p_pr - 0.0127613).abs() < 5e-8);
        assert!((w.p_0 - 0.0072387).abs() < 5e-8);
        assert!((w.p_c - 0.98).abs() < 1e-15);

        let w = to_mixture(FamilyPoint::new(0.0, 0.5).unwrap());
        assert_eq!((w.p_pr, w.p_0, w.p_c), (0.0, 0.0, 1.0));

        let w = to_mixture(FamilyPoint::new(1.0, 1.0).unwrap());
        assert!((w.p_pr - 1.0 / SQRT_2).abs() < 1e-15);
        assert!((w.p_0 - (1.0 - 1.0 / SQRT_2)).abs() < 1e-15);
        assert_eq!(w.p_c, 0.0);
    }

    #[test]
    fn mixture_box_matches_family_box() {
        // The PR/noise/correlated decomposition is the same box on the CHSH settings
        // and on the key settings.
        let p = FamilyPoint::new(0.3, 0.8).unwrap();
        let fam = family_box(p);
        let mix = to_mixture(p).to_box(Scenario::protocol()).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        assert!((fam.p(x, y, a, b) - mix.p(x, y, a, b)).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn unrepresentable_weights() {
        let w = MixtureWeights {
            p_pr: 0.9,
            p_0: 0.1,
            p_c: 0.0,
        };
        assert!(matches!(from_mixture(w), Err(Error::NotRepresentable(_))));
        let w = MixtureWeights {
            p_pr: 0.5,
            p_0: 0.2,
            p_c: 0.2,
        };
        assert!(matches!(from_mixture(w), Err(Error::NotRepresentable(_))));
    }

    #[test]
    fn product_of_noise_and_correlated() {
        let s = Scenario::bell();
        let n = white_noise(s).unwrap();
        let pn = product(&n, &n);
        assert!(pn.table().iter().all(|&p| (p - 1.0 / 16.0).abs() < 1e-15));

        let c = correlated_box(s).unwrap();
        let pc = product(&c, &c);
        let ps = pc.scenario();
        for x in 0..ps.nx {
            for y in 0..ps.ny {
                for a in 0..4 {
                    for b in 0..4 {
                        let expect = if a == b { 0.25 } else { 0.0 };
                        assert_eq!(pc.p(x, y, a, b), expect);
                    }
                }
            }
        }
    }

    #[test]
    fn signalling_table_is_detected() {
        // a = y for every x: Alice's marginal depends on Bob's input.
        let b = NonlocalBox::from_fn(Scenario::bell(), |_, y, a, b| if a == y && b == 0 { 1.0 } else { 0.0 }).unwrap();
        let r = b.is_no_signalling(1e-9);
        assert!(!r.no_signalling);
        assert_eq!(r.max_deviation, 1.0);
    }

    #[test]
    fn text_format_round_trip_and_errors() {
        let b = family_box(FamilyPoint::new(0.02, 0.90236).unwrap());
        let text = b.to_text();
        let back = NonlocalBox::from_text(&text).unwrap();
        assert_eq!(back, b);

        let bad = "{\n  \"nx\": 2,\n  \"ny\": oops\n}";
        match NonlocalBox::from_text(bad) {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        let wrong_shape = r#"{"nx": 1, "ny": 1, "na": 2, "nb": 2, "table": [[[[0.5, 0.5]]]]}"#;
        assert!(matches!(NonlocalBox::from_text(wrong_shape), Err(Error::Parse { .. })));
    }
}
