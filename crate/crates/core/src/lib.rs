//! Device-independent key activation.
//!
//! Nonlocal boxes and their quantum realisation, local wirings of several box
//! copies, an exhaustive nonlocality-distillation search over extremal
//! wirings, and bounds on the Devetak-Winter key rate: a lower bound from a
//! Gauss-Radau / moment-matrix relaxation of `H(A|E)` and an upper bound from
//! the convex-combination attack.

pub mod attack;
pub mod boxes;
pub mod conic;
pub mod entropy_sdp;
pub mod error;
pub mod quantum;
pub mod rates;
pub mod search;
pub mod wirings;

pub use boxes::{FamilyPoint, MixtureWeights, NonlocalBox, Scenario};
pub use error::{Error, Result};
pub use rates::RateReport;
