//! Noncommutative operator words for moment-matrix relaxations.
//!
//! Alice's projectors, Bob's projectors and Eve's operators live in three
//! mutually commuting groups, so a canonical word is a triple of reduced
//! sub-words. Only outcome-0 projectors appear in canonical words: the
//! outcome-1 projector of a binary measurement is rewritten as `I - M^{x,0}`,
//! which also makes same-setting orthogonality automatic. Projectors are
//! idempotent; Eve's `Z` operators obey no relation besides commuting with
//! Alice and Bob.

use std::collections::BTreeMap;
use std::fmt;

/// An input letter (either projector outcome allowed).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    /// `M_A^{x,a}`
    A { x: u8, a: u8 },
    /// `M_B^{y,b}`
    B { y: u8, b: u8 },
    /// Eve's non-Hermitian `Z_index` or its adjoint.
    Z { index: u8, dagger: bool },
    /// Eve's binary projective measurement `E_e`.
    E { e: u8 },
}

impl Letter {
    pub fn adjoint(self) -> Self {
        match self {
            Self::Z { index, dagger } => Self::Z { index, dagger: !dagger },
            other => other,
        }
    }

    pub fn group(self) -> usize {
        match self {
            Self::A { .. } => 0,
            Self::B { .. } => 1,
            Self::Z { .. } | Self::E { .. } => 2,
        }
    }
}

/// Letter of Eve's group inside a canonical word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EveOp {
    /// Outcome-0 projector of Eve's measurement.
    E,
    Z {
        index: u8,
        dagger: bool,
    },
}

impl EveOp {
    fn adjoint(self) -> Self {
        match self {
            Self::Z { index, dagger } => Self::Z { index, dagger: !dagger },
            Self::E => Self::E,
        }
    }

    fn is_projector(self) -> bool {
        matches!(self, Self::E)
    }
}

/// Canonical word: Alice's outcome-0 projectors by setting, Bob's by setting,
/// then Eve's operators. The empty word is the identity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    pub alice: Vec<u8>,
    pub bob: Vec<u8>,
    pub eve: Vec<EveOp>,
}

impl Word {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn is_identity(&self) -> bool {
        self.alice.is_empty() && self.bob.is_empty() && self.eve.is_empty()
    }

    pub fn len(&self) -> usize {
        self.alice.len() + self.bob.len() + self.eve.len()
    }

    pub fn is_empty(&self) -> bool {
        self.is_identity()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            alice: self.alice.iter().rev().copied().collect(),
            bob: self.bob.iter().rev().copied().collect(),
            eve: self.eve.iter().rev().map(|e| e.adjoint()).collect(),
        }
    }

    /// Representative of `{w, w*}`; real moment matrices identify the two.
    pub fn symmetric_key(&self) -> Self {
        let adj = self.adjoint();
        if adj < *self {
            adj
        } else {
            self.clone()
        }
    }

    /// Canonical product `self * other`.
    pub fn mul(&self, other: &Word) -> Word {
        let mut out = self.clone();
        for &x in &other.alice {
            push_projector(&mut out.alice, x);
        }
        for &y in &other.bob {
            push_projector(&mut out.bob, y);
        }
        for &e in &other.eve {
            push_eve(&mut out.eve, e);
        }
        out
    }

    /// `self* other`, the moment-matrix entry for row `self`, column `other`.
    pub fn pair(&self, other: &Word) -> Word {
        self.adjoint().mul(other)
    }

    pub fn a(x: u8) -> Self {
        Self {
            alice: vec![x],
            ..Self::default()
        }
    }

    pub fn b(y: u8) -> Self {
        Self {
            bob: vec![y],
            ..Self::default()
        }
    }

    pub fn z(index: u8, dagger: bool) -> Self {
        Self {
            eve: vec![EveOp::Z { index, dagger }],
            ..Self::default()
        }
    }

    pub fn e() -> Self {
        Self {
            eve: vec![EveOp::E],
            ..Self::default()
        }
    }
}

fn push_projector(v: &mut Vec<u8>, x: u8) {
    if v.last() != Some(&x) {
        v.push(x);
    }
}

fn push_eve(v: &mut Vec<EveOp>, e: EveOp) {
    if e.is_projector() && v.last() == Some(&e) {
        return;
    }
    v.push(e);
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return f.write_str("1");
        }
        let mut parts = Vec::new();
        parts.extend(self.alice.iter().map(|x| format!("A{x}")));
        parts.extend(self.bob.iter().map(|y| format!("B{y}")));
        parts.extend(self.eve.iter().map(|e| match e {
            EveOp::E => "E".to_string(),
            EveOp::Z { index, dagger: false } => format!("Z{index}"),
            EveOp::Z { index, dagger: true } => format!("Z{index}*"),
        }));
        f.write_str(&parts.join(" "))
    }
}

/// Real linear combination of canonical words.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Polynomial {
    pub terms: BTreeMap<Word, f64>,
}

impl Polynomial {
    pub fn constant(c: f64) -> Self {
        Self::from_word(c, Word::identity())
    }

    pub fn from_word(c: f64, w: Word) -> Self {
        let mut p = Self::default();
        p.add_term(c, w);
        p
    }

    pub fn add_term(&mut self, c: f64, w: Word) {
        if c == 0.0 {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(w) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&mut self, other: &Polynomial, scale: f64) {
        for (w, c) in &other.terms {
            self.add_term(scale * c, w.clone());
        }
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::default();
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                out.add_term(c1 * c2, w1.mul(w2));
            }
        }
        out
    }

    /// Coefficients collected on `{w, w*}` representatives.
    pub fn symmetrized(&self) -> BTreeMap<Word, f64> {
        let mut out = BTreeMap::new();
        for (w, c) in &self.terms {
            *out.entry(w.symmetric_key()).or_insert(0.0) += c;
        }
        out.retain(|_, c| *c != 0.0);
        out
    }
}

/// Polynomial of a single letter in canonical form.
pub fn letter_polynomial(l: Letter) -> Polynomial {
    match l {
        Letter::A { x, a: 0 } => Polynomial::from_word(1.0, Word::a(x)),
        Letter::A { x, .. } => {
            let mut p = Polynomial::constant(1.0);
            p.add_term(-1.0, Word::a(x));
            p
        }
        Letter::B { y, b: 0 } => Polynomial::from_word(1.0, Word::b(y)),
        Letter::B { y, .. } => {
            let mut p = Polynomial::constant(1.0);
            p.add_term(-1.0, Word::b(y));
            p
        }
        Letter::Z { index, dagger } => Polynomial::from_word(1.0, Word::z(index, dagger)),
        Letter::E { e: 0 } => Polynomial::from_word(1.0, Word::e()),
        Letter::E { .. } => {
            let mut p = Polynomial::constant(1.0);
            p.add_term(-1.0, Word::e());
            p
        }
    }
}

/// Canonical form of a product of letters.
pub fn canonicalize(letters: &[Letter]) -> Polynomial {
    letters
        .iter()
        .fold(Polynomial::constant(1.0), |acc, &l| acc.mul(&letter_polynomial(l)))
}

/// Words of length `1..=level` over `letters` (outcome-0 generators), after
/// canonicalisation, deduplicated, ordered by length then by generation order.
/// The identity comes first.
pub fn words_up_to(generators: &[Word], level: usize) -> Vec<Word> {
    let mut out = vec![Word::identity()];
    let mut seen: std::collections::HashSet<Word> = out.iter().cloned().collect();
    let mut frontier = vec![Word::identity()];
    for _ in 0..level {
        let mut next = Vec::new();
        for w in &frontier {
            for g in generators {
                let p = w.mul(g);
                if seen.insert(p.clone()) {
                    out.push(p.clone());
                    next.push(p);
                }
            }
        }
        frontier = next;
    }
    out
}
