//! Lower bounds on `H(A|E, X=0)` from a Gauss-Radau expansion of the
//! conditional entropy, each node relaxed to a moment-matrix SDP, and the
//! min-entropy baseline from the guessing probability.

mod guessing;
mod quadrature;
mod relaxation;
mod sdpa;
mod solve;
pub mod words;

pub use guessing::{guessing_probability, guessing_probability_with, GuessingResult};
pub use quadrature::{gauss_radau, QuadratureRule};
pub use relaxation::{
    build_relaxation, build_relaxation_with, entropy_basis, node_objective, BasisExtras, ConstraintKind,
    ConstraintMode, LinearConstraint, MomentMatrix, NodeTerm, Relaxation, RelaxationOptions,
};
pub use sdpa::{export_sdpa, sdpa_string};
pub use solve::{entropy_lower_bound, solve_relaxation, solve_relaxation_with, EntropyBound, NodeSolution};
