use crate::boxes::NonlocalBox;
use crate::conic::{InteriorPoint, SdpBackend, SolverConfig};
use crate::error::{Error, Result};

use super::relaxation::{measurement_generators, ConstraintMode, MomentMatrix};
use super::words::{canonicalize, words_up_to, Letter, Polynomial, Word};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuessingResult {
    /// Upper bound on Eve's probability of guessing Alice's `x = 0` outcome.
    pub p_guess: f64,
    /// `-log2 p_guess`, a lower bound on the min-entropy.
    pub h_min: f64,
}

/// Moment relaxation of Eve's optimal two-outcome guess of `A_0`, with her
/// measurement commuting with Alice's and Bob's.
pub fn guessing_probability(b: &NonlocalBox, level: usize) -> Result<GuessingResult> {
    guessing_probability_with(b, level, &InteriorPoint, &SolverConfig::default())
}

pub fn guessing_probability_with(
    b: &NonlocalBox,
    level: usize,
    backend: &dyn SdpBackend,
    config: &SolverConfig,
) -> Result<GuessingResult> {
    if level < 1 {
        return Err(Error::DomainError("relaxation level must be >= 1".into()));
    }
    let mut gens = measurement_generators();
    gens.push(Word::e());
    let mut mm = MomentMatrix::new(words_up_to(&gens, level));
    mm.constrain_box(b, ConstraintMode::Full)?;
    let mut objective = Polynomial::default();
    for e in 0..2u8 {
        objective.add(&canonicalize(&[Letter::A { x: 0, a: e }, Letter::E { e }]), -1.0);
    }
    let sol = backend.solve(&mm.to_sdp(&objective)?, config)?;
    // Dual value bounds the minimum of -p_guess from below.
    let p_guess = (-sol.dual_value).clamp(0.5, 1.0);
    Ok(GuessingResult {
        p_guess,
        h_min: -p_guess.log2(),
    })
}
