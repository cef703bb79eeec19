//! Moment-matrix relaxations over canonical words.

use std::collections::HashMap;

use crate::boxes::{NonlocalBox, PROB_TOL};
use crate::conic::{SdpProblem, SymEntries};
use crate::error::{Error, Result};
use crate::rates::{chsh_signed, qber, ChshVariant};

use super::quadrature::{gauss_radau, QuadratureRule};
use super::words::{canonicalize, words_up_to, Letter, Polynomial, Word};

/// Which statistics of the box constrain the relaxation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConstraintMode {
    /// Every outcome-0 moment `<A_x>`, `<B_y>`, `<A_x B_y>`.
    #[default]
    Full,
    /// Only the canonical CHSH value and the key-setting QBER.
    Coarse,
}

impl std::str::FromStr for ConstraintMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "coarse" => Ok(Self::Coarse),
            other => Err(Error::InvalidParameter(format!("unknown constraint mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    Identity,
    Distribution,
    Chsh,
    Qber,
}

/// `sum_k coef_k y_k = rhs` over moment variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
    pub kind: ConstraintKind,
}

/// A moment matrix `Gamma[i][j] = <w_i* w_j>` on a word basis with real,
/// adjoint-identified variables, plus linear constraints.
#[derive(Debug, Clone)]
pub struct MomentMatrix {
    pub basis: Vec<Word>,
    /// Variable `k` stands for the moment of `variables[k]` (and its adjoint).
    pub variables: Vec<Word>,
    index: HashMap<Word, usize>,
    /// Upper-triangle entries `(i, j, variable)`.
    pub entries: Vec<(usize, usize, usize)>,
    pub constraints: Vec<LinearConstraint>,
}

impl MomentMatrix {
    pub fn new(basis: Vec<Word>) -> Self {
        let mut variables = Vec::new();
        let mut index = HashMap::new();
        let mut entries = Vec::with_capacity(basis.len() * (basis.len() + 1) / 2);
        for j in 0..basis.len() {
            for i in 0..=j {
                let key = basis[i].pair(&basis[j]).symmetric_key();
                let k = *index.entry(key.clone()).or_insert_with(|| {
                    variables.push(key);
                    variables.len() - 1
                });
                entries.push((i, j, k));
            }
        }
        let mut m = Self {
            basis,
            variables,
            index,
            entries,
            constraints: Vec::new(),
        };
        let id = m.variable(&Word::identity()).expect("identity is in every basis");
        m.constraints.push(LinearConstraint {
            terms: vec![(id, 1.0)],
            rhs: 1.0,
            kind: ConstraintKind::Identity,
        });
        m
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn variable(&self, w: &Word) -> Option<usize> {
        self.index.get(&w.symmetric_key()).copied()
    }

    /// Linear form in the variables representing `<p>`.
    pub fn linear_form(&self, p: &Polynomial) -> Result<(Vec<(usize, f64)>, f64)> {
        let mut terms = Vec::new();
        let mut constant = 0.0;
        for (w, c) in p.symmetrized() {
            if w.is_identity() {
                constant += c;
                continue;
            }
            let k = self
                .variable(&w)
                .ok_or_else(|| Error::InvalidParameter(format!("moment <{w}> is not covered by the basis")))?;
            terms.push((k, c));
        }
        Ok((terms, constant))
    }

    /// Add `<p> = value`.
    pub fn constrain(&mut self, p: &Polynomial, value: f64, kind: ConstraintKind) -> Result<()> {
        let (terms, constant) = self.linear_form(p)?;
        self.constraints.push(LinearConstraint {
            terms,
            rhs: value - constant,
            kind,
        });
        Ok(())
    }

    /// Distribution constraints from the outcome-0 moments of a 2x3 box.
    pub fn constrain_box(&mut self, b: &NonlocalBox, mode: ConstraintMode) -> Result<()> {
        check_protocol_box(b)?;
        let s = b.scenario();
        match mode {
            ConstraintMode::Full => {
                for x in 0..s.nx {
                    let pa = (0..s.ny).map(|y| b.marginal_a(x, y, 0)).sum::<f64>() / s.ny as f64;
                    self.constrain(
                        &Polynomial::from_word(1.0, Word::a(x as u8)),
                        pa,
                        ConstraintKind::Distribution,
                    )?;
                }
                for y in 0..s.ny {
                    let pb = (0..s.nx).map(|x| b.marginal_b(x, y, 0)).sum::<f64>() / s.nx as f64;
                    self.constrain(
                        &Polynomial::from_word(1.0, Word::b(y as u8)),
                        pb,
                        ConstraintKind::Distribution,
                    )?;
                }
                for x in 0..s.nx {
                    for y in 0..s.ny {
                        let w = Word::a(x as u8).mul(&Word::b(y as u8));
                        self.constrain(
                            &Polynomial::from_word(1.0, w),
                            b.p(x, y, 0, 0),
                            ConstraintKind::Distribution,
                        )?;
                    }
                }
            }
            ConstraintMode::Coarse => {
                let variant = ChshVariant::CANONICAL;
                let mut chsh_poly = Polynomial::default();
                for (k, (x, y)) in [(0u8, 0u8), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
                    chsh_poly.add(&correlator_polynomial(x, y), f64::from(variant.signs[k]));
                }
                let value = chsh_signed(&b.restrict(2, 2)?, variant)?;
                self.constrain(&chsh_poly, value, ConstraintKind::Chsh)?;
                let mut q = Polynomial::default();
                q.add_term(1.0, Word::a(0));
                q.add_term(1.0, Word::b(2));
                q.add_term(-2.0, Word::a(0).mul(&Word::b(2)));
                self.constrain(&q, qber(b)?, ConstraintKind::Qber)?;
            }
        }
        Ok(())
    }

    /// SDP minimising `<objective>` with single-variable constraints
    /// substituted out, so the remaining problem has one PSD block plus the
    /// multi-term equalities.
    pub fn to_sdp(&self, objective: &Polynomial) -> Result<SdpProblem> {
        let (obj_terms, obj_const) = self.linear_form(objective)?;
        let nvar = self.variables.len();
        let mut pinned: Vec<Option<f64>> = vec![None; nvar];
        for c in &self.constraints {
            if let [(k, coef)] = c.terms[..] {
                let value = c.rhs / coef;
                if let Some(old) = pinned[k] {
                    if (old - value).abs() > PROB_TOL {
                        return Err(Error::InvalidParameter(format!(
                            "conflicting values {old} and {value} for <{}>",
                            self.variables[k]
                        )));
                    }
                }
                pinned[k] = Some(value);
            }
        }
        let mut free = vec![usize::MAX; nvar];
        let mut num_vars = 0;
        for k in 0..nvar {
            if pinned[k].is_none() {
                free[k] = num_vars;
                num_vars += 1;
            }
        }

        let mut constant: SymEntries = Vec::new();
        let mut coefficients: Vec<SymEntries> = vec![Vec::new(); num_vars];
        for &(i, j, k) in &self.entries {
            match pinned[k] {
                Some(v) if v != 0.0 => constant.push((i, j, v)),
                Some(_) => {}
                None => coefficients[free[k]].push((i, j, 1.0)),
            }
        }
        let mut objective_vec = vec![0.0; num_vars];
        let mut objective_constant = obj_const;
        for (k, c) in obj_terms {
            match pinned[k] {
                Some(v) => objective_constant += c * v,
                None => objective_vec[free[k]] += c,
            }
        }
        let mut equalities = Vec::new();
        for c in &self.constraints {
            if c.terms.len() == 1 {
                continue;
            }
            let mut rhs = c.rhs;
            let mut row = Vec::new();
            for &(k, coef) in &c.terms {
                match pinned[k] {
                    Some(v) => rhs -= coef * v,
                    None => row.push((free[k], coef)),
                }
            }
            if row.is_empty() {
                if rhs.abs() > PROB_TOL {
                    return Err(Error::InvalidParameter("inconsistent moment constraints".into()));
                }
                continue;
            }
            equalities.push((row, rhs));
        }
        Ok(SdpProblem {
            num_vars,
            objective: objective_vec,
            objective_constant,
            block_dim: self.dim(),
            constant,
            coefficients,
            equalities,
        })
    }
}

fn check_protocol_box(b: &NonlocalBox) -> Result<()> {
    let s = b.scenario();
    if s.nx != 2 || s.ny != 3 || !s.is_binary() {
        return Err(Error::InvalidScenario(format!(
            "expected a 2x3 binary-output box, got {}x{} inputs with {}x{} outputs",
            s.nx, s.ny, s.na, s.nb
        )));
    }
    let report = b.is_no_signalling(PROB_TOL);
    if !report.no_signalling {
        return Err(Error::InvalidParameter(format!(
            "box is signalling (deviation {:e})",
            report.max_deviation
        )));
    }
    Ok(())
}

/// `<(-1)^(a+b)> = 1 - 2<A_x> - 2<B_y> + 4<A_x B_y>` for outcome-0 projectors.
fn correlator_polynomial(x: u8, y: u8) -> Polynomial {
    let mut p = Polynomial::constant(1.0);
    p.add_term(-2.0, Word::a(x));
    p.add_term(-2.0, Word::b(y));
    p.add_term(4.0, Word::a(x).mul(&Word::b(y)));
    p
}

/// Measurement generators of the 2x3 scenario: `A_0, A_1, B_0, B_1, B_2`.
pub(crate) fn measurement_generators() -> Vec<Word> {
    let mut g: Vec<Word> = (0..2).map(Word::a).collect();
    g.extend((0..3).map(Word::b));
    g
}

/// Monomial-basis choice beyond the plain hierarchy level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BasisExtras {
    /// Hierarchy words only.
    None,
    /// Also `A_x B_y Z`, `A_x B_y Z*` and `A_0 Z* Z`.
    #[default]
    Standard,
}

/// Word basis of the entropy relaxation.
pub fn entropy_basis(level: usize, extras: BasisExtras) -> Vec<Word> {
    let mut gens = measurement_generators();
    for a in 0..2 {
        gens.push(Word::z(a, false));
    }
    for a in 0..2 {
        gens.push(Word::z(a, true));
    }
    let mut basis = words_up_to(&gens, level);
    if extras == BasisExtras::Standard {
        let mut seen: std::collections::HashSet<Word> = basis.iter().cloned().collect();
        let mut push = |w: Word, basis: &mut Vec<Word>| {
            if seen.insert(w.clone()) {
                basis.push(w);
            }
        };
        for x in 0..2 {
            for y in 0..3 {
                for dagger in [false, true] {
                    for a in 0..2 {
                        let w = Word::a(x).mul(&Word::b(y)).mul(&Word::z(a, dagger));
                        push(w, &mut basis);
                    }
                }
            }
        }
        for a in 0..2 {
            push(Word::a(0).mul(&Word::z(a, true)).mul(&Word::z(a, false)), &mut basis);
        }
    }
    basis
}

/// Per-node objective `sum_a <M_A^{0,a}(Z_a + Z_a* + (1-t) Z_a* Z_a) + t Z_a Z_a*>`.
pub fn node_objective(t: f64) -> Polynomial {
    let mut total = Polynomial::default();
    for a in 0..2u8 {
        let m = Letter::A { x: 0, a };
        let z = Letter::Z {
            index: a,
            dagger: false,
        };
        let zs = Letter::Z { index: a, dagger: true };
        total.add(&canonicalize(&[m, z]), 1.0);
        total.add(&canonicalize(&[m, zs]), 1.0);
        total.add(&canonicalize(&[m, zs, z]), 1.0 - t);
        total.add(&canonicalize(&[z, zs]), t);
    }
    total
}

/// One quadrature node of the entropy bound.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTerm {
    pub t: f64,
    /// `w / (t ln 2)`.
    pub coefficient: f64,
    pub objective: Polynomial,
}

/// Entropy relaxation: shared moment matrix, one objective per node below 1.
#[derive(Debug, Clone)]
pub struct Relaxation {
    pub moments: MomentMatrix,
    pub rule: QuadratureRule,
    pub nodes: Vec<NodeTerm>,
    pub level: usize,
    pub mode: ConstraintMode,
    pub extras: BasisExtras,
}

impl Relaxation {
    pub fn m(&self) -> usize {
        self.rule.m
    }

    /// Number of constraints fixing box statistics.
    pub fn distribution_constraints(&self) -> usize {
        self.moments
            .constraints
            .iter()
            .filter(|c| c.kind != ConstraintKind::Identity)
            .count()
    }

    pub fn node_sdp(&self, node: usize) -> Result<SdpProblem> {
        let term = self
            .nodes
            .get(node)
            .ok_or_else(|| Error::IndexOutOfRange(format!("node {node} of {}", self.nodes.len())))?;
        self.moments.to_sdp(&term.objective)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RelaxationOptions {
    pub m: usize,
    pub level: usize,
    pub mode: ConstraintMode,
    pub extras: BasisExtras,
}

impl RelaxationOptions {
    pub fn new(m: usize, level: usize) -> Self {
        Self {
            m,
            level,
            mode: ConstraintMode::Full,
            extras: BasisExtras::Standard,
        }
    }
}

pub fn build_relaxation(b: &NonlocalBox, m: usize, level: usize) -> Result<Relaxation> {
    build_relaxation_with(b, RelaxationOptions::new(m, level))
}

pub fn build_relaxation_with(b: &NonlocalBox, opts: RelaxationOptions) -> Result<Relaxation> {
    if opts.level < 2 {
        return Err(Error::DomainError(format!(
            "relaxation level must be >= 2, got {}",
            opts.level
        )));
    }
    let rule = gauss_radau(opts.m)?;
    let mut moments = MomentMatrix::new(entropy_basis(opts.level, opts.extras));
    moments.constrain_box(b, opts.mode)?;
    let nodes = (0..rule.m - 1)
        .map(|i| NodeTerm {
            t: rule.nodes[i],
            coefficient: rule.node_coefficient(i),
            objective: node_objective(rule.nodes[i]),
        })
        .collect::<Vec<_>>();
    for n in &nodes {
        moments.linear_form(&n.objective)?;
    }
    Ok(Relaxation {
        moments,
        rule,
        nodes,
        level: opts.level,
        mode: opts.mode,
        extras: opts.extras,
    })
}
