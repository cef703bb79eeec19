//! Deterministic local wirings of several box copies.
//!
//! A [`Wiring`] is what one party does for a single final input: it consumes
//! `k` boxes, chooses their inputs (possibly adaptively) and computes the final
//! output. It is stored as a dense 0/1 indicator table
//! `chi(a, x_1..x_k, a_1..a_k)` plus the list of its nonzero entries, which is
//! what every evaluation loop iterates over.

mod catalog;
mod validity;

pub use catalog::{catalog_2in, catalog_2in_raw, catalog_3in, WiringParams};
pub use validity::{ns_vertices_2x2, validate_wiring, validate_wiring_lp, validate_wiring_vertices, ValidityReport};

use std::fmt;

use serde::Serialize;

use crate::boxes::{from_mixture, to_mixture, FamilyPoint, MixtureWeights, NonlocalBox, Scenario};
use crate::error::{Error, Result};

/// Largest number of copies a wiring may consume.
pub const MAX_COPIES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum WiringClass {
    Constant,
    OneSided,
    Xor,
    And,
    Sequential,
    Custom,
}

impl fmt::Display for WiringClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Constant => "constant",
            Self::OneSided => "one-sided",
            Self::Xor => "xor",
            Self::And => "and",
            Self::Sequential => "sequential",
            Self::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// One nonzero entry of a wiring table: the copies' inputs and outputs and the
/// final output they produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HistoryTerm {
    pub inputs: [u8; MAX_COPIES],
    pub outputs: [u8; MAX_COPIES],
    pub result: u8,
}

/// A deterministic wiring for one final input value.
#[derive(Debug, Clone, PartialEq)]
pub struct Wiring {
    side_inputs: Vec<usize>,
    table: Vec<u8>,
    support: Vec<HistoryTerm>,
    pub class: WiringClass,
    pub label: Option<u32>,
    pub params: Option<WiringParams>,
}

impl Wiring {
    /// Builds a wiring from a rule mapping a full history `(inputs, outputs)`
    /// to the final output, or `None` when the history cannot occur.
    pub fn from_rule(
        side_inputs: &[usize],
        class: WiringClass,
        rule: impl Fn(&[usize], &[usize]) -> Option<usize>,
    ) -> Result<Self> {
        let layout = Layout::new(side_inputs)?;
        let mut table = vec![0u8; layout.len()];
        for xi in 0..layout.input_combos {
            let xs = layout.inputs_of(xi);
            for ai in 0..layout.output_combos {
                let outs = layout.outputs_of(ai);
                if let Some(a) = rule(&xs, &outs) {
                    if a > 1 {
                        return Err(Error::InvalidWiring(format!("final output {a} is not binary")));
                    }
                    table[layout.index(xi, ai, a)] = 1;
                }
            }
        }
        Self::from_table(side_inputs, table, class)
    }

    /// Builds a wiring from an explicit indicator table indexed
    /// `[(x-combination * 2^k + a-combination) * 2 + a]`, copies flattened with the
    /// first copy most significant.
    pub fn from_table(side_inputs: &[usize], table: Vec<u8>, class: WiringClass) -> Result<Self> {
        let layout = Layout::new(side_inputs)?;
        if table.len() != layout.len() {
            return Err(Error::ShapeMismatch {
                expected: layout.len(),
                got: table.len(),
            });
        }
        let mut support = Vec::new();
        for xi in 0..layout.input_combos {
            let xs = layout.inputs_of(xi);
            for ai in 0..layout.output_combos {
                let outs = layout.outputs_of(ai);
                let mut hits = 0;
                for a in 0..2 {
                    match table[layout.index(xi, ai, a)] {
                        0 => {}
                        1 => {
                            hits += 1;
                            let mut term = HistoryTerm {
                                inputs: [0; MAX_COPIES],
                                outputs: [0; MAX_COPIES],
                                result: a as u8,
                            };
                            for i in 0..layout.k {
                                term.inputs[i] = xs[i] as u8;
                                term.outputs[i] = outs[i] as u8;
                            }
                            support.push(term);
                        }
                        v => return Err(Error::InvalidWiring(format!("indicator value {v} is not 0 or 1"))),
                    }
                }
                if hits > 1 {
                    return Err(Error::InvalidWiring(format!(
                        "history inputs={xs:?} outputs={outs:?} has {hits} final outputs"
                    )));
                }
            }
        }
        Ok(Self {
            side_inputs: side_inputs.to_vec(),
            table,
            support,
            class,
            label: None,
            params: None,
        })
    }

    pub fn with_label(mut self, label: u32) -> Self {
        self.label = Some(label);
        self
    }

    pub fn with_params(mut self, params: WiringParams) -> Self {
        self.params = Some(params);
        self
    }

    /// Number of boxes consumed.
    pub fn copies(&self) -> usize {
        self.side_inputs.len()
    }

    pub fn side_inputs(&self) -> &[usize] {
        &self.side_inputs
    }

    pub fn table(&self) -> &[u8] {
        &self.table
    }

    pub fn support(&self) -> &[HistoryTerm] {
        &self.support
    }

    /// Indicator value for a full history.
    pub fn indicator(&self, result: usize, inputs: &[usize], outputs: &[usize]) -> u8 {
        let layout = Layout::new(&self.side_inputs).expect("validated on construction");
        let xi = inputs
            .iter()
            .zip(&self.side_inputs)
            .fold(0, |acc, (&x, &n)| acc * n + x);
        let ai = outputs.iter().fold(0, |acc, &a| acc * 2 + a);
        self.table[layout.index(xi, ai, result)]
    }

    /// Same table evaluated on boxes with more inputs per copy (inputs beyond
    /// the original range are never used).
    pub fn embed(&self, side_inputs: &[usize]) -> Result<Self> {
        if side_inputs.len() != self.copies() || side_inputs.iter().zip(&self.side_inputs).any(|(n, m)| n < m) {
            return Err(Error::ShapeMismatch {
                expected: self.copies(),
                got: side_inputs.len(),
            });
        }
        let terms = self.support.clone();
        let k = self.copies();
        let mut w = Self::from_rule(side_inputs, self.class, |xs, outs| {
            terms
                .iter()
                .find(|t| (0..k).all(|i| t.inputs[i] as usize == xs[i] && t.outputs[i] as usize == outs[i]))
                .map(|t| t.result as usize)
        })?;
        w.label = self.label;
        w.params = self.params;
        Ok(w)
    }

    /// Short human-readable description, e.g. `xor#13`.
    pub fn describe(&self) -> String {
        match (self.label, self.params) {
            (_, Some(p)) => p.to_string(),
            (Some(l), None) => format!("{}#{l}", self.class),
            (None, None) => self.class.to_string(),
        }
    }
}

/// Mixed-radix layout of a wiring table.
struct Layout {
    k: usize,
    side_inputs: Vec<usize>,
    input_combos: usize,
    output_combos: usize,
}

impl Layout {
    fn new(side_inputs: &[usize]) -> Result<Self> {
        let k = side_inputs.len();
        if k == 0 || k > MAX_COPIES {
            return Err(Error::InvalidWiring(format!(
                "a wiring consumes 1..={MAX_COPIES} boxes, got {k}"
            )));
        }
        if side_inputs.iter().any(|&n| n == 0 || n > u8::MAX as usize) {
            return Err(Error::InvalidWiring("input cardinalities must be in 1..=255".into()));
        }
        Ok(Self {
            k,
            side_inputs: side_inputs.to_vec(),
            input_combos: side_inputs.iter().product(),
            output_combos: 1 << k,
        })
    }

    fn len(&self) -> usize {
        self.input_combos * self.output_combos * 2
    }

    fn index(&self, xi: usize, ai: usize, a: usize) -> usize {
        (xi * self.output_combos + ai) * 2 + a
    }

    fn inputs_of(&self, mut xi: usize) -> Vec<usize> {
        let mut xs = vec![0; self.k];
        for i in (0..self.k).rev() {
            xs[i] = xi % self.side_inputs[i];
            xi /= self.side_inputs[i];
        }
        xs
    }

    fn outputs_of(&self, ai: usize) -> Vec<usize> {
        (0..self.k).map(|i| (ai >> (self.k - 1 - i)) & 1).collect()
    }
}

/// Alice's wiring per final input `x` and Bob's per final input `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct WiringPair {
    pub alice: Vec<Wiring>,
    pub bob: Vec<Wiring>,
}

impl WiringPair {
    pub fn new(alice: Vec<Wiring>, bob: Vec<Wiring>) -> Result<Self> {
        let k = alice
            .first()
            .map(Wiring::copies)
            .ok_or_else(|| Error::InvalidWiring("Alice needs at least one wiring".into()))?;
        if bob.is_empty() {
            return Err(Error::InvalidWiring("Bob needs at least one wiring".into()));
        }
        if alice.iter().chain(&bob).any(|w| w.copies() != k) {
            return Err(Error::InvalidWiring(
                "all wirings must consume the same number of copies".into(),
            ));
        }
        let sa = alice[0].side_inputs();
        let sb = bob[0].side_inputs();
        if alice.iter().any(|w| w.side_inputs() != sa) || bob.iter().any(|w| w.side_inputs() != sb) {
            return Err(Error::InvalidWiring(
                "inconsistent input cardinalities across settings".into(),
            ));
        }
        Ok(Self { alice, bob })
    }

    pub fn copies(&self) -> usize {
        self.alice[0].copies()
    }

    /// The final scenario produced by this pair.
    pub fn scenario(&self) -> Scenario {
        Scenario {
            nx: self.alice.len(),
            ny: self.bob.len(),
            na: 2,
            nb: 2,
        }
    }
}

/// The nonzero index set of `chi_x * xi_y` over all final settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportSet {
    pub entries: Vec<(usize, HistoryTerm, usize, HistoryTerm)>,
}

impl SupportSet {
    pub fn of(pair: &WiringPair) -> Self {
        let mut entries = Vec::new();
        for (x, wa) in pair.alice.iter().enumerate() {
            for (y, wb) in pair.bob.iter().enumerate() {
                for ta in wa.support() {
                    for tb in wb.support() {
                        entries.push((x, *ta, y, *tb));
                    }
                }
            }
        }
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `P'(ab|xy) = sum prod_i P_i(a_i b_i | x_i y_i) chi_x(a, ..) xi_y(b, ..)`.
pub fn apply_wiring(pair: &WiringPair, copies: &[NonlocalBox]) -> Result<NonlocalBox> {
    let k = pair.copies();
    if copies.len() != k {
        return Err(Error::ShapeMismatch {
            expected: k,
            got: copies.len(),
        });
    }
    let sa = pair.alice[0].side_inputs();
    let sb = pair.bob[0].side_inputs();
    for (i, c) in copies.iter().enumerate() {
        let s = c.scenario();
        if !s.is_binary() || s.nx != sa[i] || s.ny != sb[i] {
            return Err(Error::ShapeMismatch {
                expected: sa[i] * sb[i] * 4,
                got: s.len(),
            });
        }
    }
    let out = pair.scenario();
    let mut table = vec![0.0; out.len()];
    for (x, wa) in pair.alice.iter().enumerate() {
        for (y, wb) in pair.bob.iter().enumerate() {
            for ta in wa.support() {
                for tb in wb.support() {
                    let mut p = 1.0;
                    for (i, c) in copies.iter().enumerate() {
                        p *= c.p(
                            ta.inputs[i] as usize,
                            tb.inputs[i] as usize,
                            ta.outputs[i] as usize,
                            tb.outputs[i] as usize,
                        );
                        if p == 0.0 {
                            break;
                        }
                    }
                    table[out.index(x, y, ta.result as usize, tb.result as usize)] += p;
                }
            }
        }
    }
    NonlocalBox::new(out, table)
}

/// XOR wiring for one final input: every copy receives `input`, the output is
/// the parity of all copy outputs.
pub fn xor_wiring(copies: usize, side_inputs: usize, input: usize) -> Result<Wiring> {
    if input >= side_inputs {
        return Err(Error::InvalidWiring(format!("input {input} outside 0..{side_inputs}")));
    }
    let sides = vec![side_inputs; copies];
    let w = Wiring::from_rule(&sides, WiringClass::Xor, |xs, outs| {
        xs.iter()
            .all(|&x| x == input)
            .then(|| outs.iter().fold(0, |acc, &a| acc ^ a))
    })?;
    let label = match (copies, side_inputs) {
        (2, 2) => Some(4 * input as u32 + 2 * input as u32 + 1 + 12),
        (2, 3) => Some(6 * input as u32 + 2 * input as u32 + 1 + 16),
        _ => None,
    };
    Ok(match label {
        Some(l) => w.with_label(l).with_params(WiringParams::Xor {
            inputs: [input as u8, input as u8],
            flip: 0,
        }),
        None => w,
    })
}

/// XOR wirings for both parties on every final setting of `scenario`.
pub fn xor_pair(copies: usize, scenario: Scenario) -> Result<WiringPair> {
    if !(2..=MAX_COPIES).contains(&copies) {
        return Err(Error::InvalidParameter(format!(
            "XOR wiring is defined for 2 or 3 copies, got {copies}"
        )));
    }
    let alice = (0..scenario.nx)
        .map(|x| xor_wiring(copies, scenario.nx, x))
        .collect::<Result<Vec<_>>>()?;
    let bob = (0..scenario.ny)
        .map(|y| xor_wiring(copies, scenario.ny, y))
        .collect::<Result<Vec<_>>>()?;
    WiringPair::new(alice, bob)
}

/// `copies` copies of the family box at `p` wired with [`xor_pair`]; one copy
/// is returned unchanged.
pub fn xor_wired_family(p: FamilyPoint, copies: usize) -> Result<NonlocalBox> {
    let b = crate::boxes::family_box(p);
    if copies == 1 {
        return Ok(b);
    }
    let pair = xor_pair(copies, Scenario::protocol())?;
    apply_wiring(&pair, &vec![b; copies])
}

/// XOR composition on the `{P_PR, P_0, P_C}` mixture family.
pub fn compose_mixture(w1: MixtureWeights, w2: MixtureWeights) -> MixtureWeights {
    let p_pr = w1.p_pr * w2.p_c + w1.p_c * w2.p_pr;
    let p_c = w1.p_pr * w2.p_pr + w1.p_c * w2.p_c;
    MixtureWeights {
        p_pr,
        p_0: (1.0 - p_pr - p_c).max(0.0),
        p_c,
    }
}

/// Family parameters of the CHSH part after the `k`-copy XOR wiring.
pub fn wired_params(p: FamilyPoint, copies: usize) -> Result<FamilyPoint> {
    match copies {
        1 => Ok(p),
        2 => {
            let alpha = 1.0 - (1.0 - p.alpha).powi(2) - p.alpha * p.alpha * p.v * p.v / 2.0;
            let v = if alpha <= 0.0 {
                0.0
            } else {
                2.0 * p.alpha * (1.0 - p.alpha) * p.v / alpha
            };
            Ok(FamilyPoint {
                alpha: alpha.clamp(0.0, 1.0),
                v: v.clamp(0.0, 1.0),
            })
        }
        3 => {
            let w = to_mixture(p);
            from_mixture(compose_mixture(compose_mixture(w, w), w))
        }
        k => Err(Error::InvalidParameter(format!(
            "wired parameters are available for 1..=3 copies, got {k}"
        ))),
    }
}
