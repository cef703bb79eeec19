//! Nonlocality distillation over extremal two-copy wirings, the key-setting
//! wiring for Bob, the before/after activation pipeline and a sampler of
//! candidate boxes.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::boxes::{FamilyPoint, NonlocalBox, Scenario};
use crate::conic::SolverConfig;
use crate::entropy_sdp::{build_relaxation_with, solve_relaxation, ConstraintMode, RelaxationOptions};
use crate::error::{Error, Result};
use crate::quantum::{born_box, build_state, observables_with_angles, MeasurementAngles};
use crate::rates::{chsh_correlators, ChshVariant, RateMeta, RateReport};
use crate::wirings::{apply_wiring, catalog_2in, catalog_3in, xor_wiring, Wiring, WiringClass, WiringPair};

/// The CHSH variant with the largest signed value (first in
/// [`ChshVariant::all`] order on ties).
pub fn best_chsh_variant(b: &NonlocalBox) -> Result<(ChshVariant, f64)> {
    let e = chsh_correlators(b)?;
    let mut best = (ChshVariant::CANONICAL, ChshVariant::CANONICAL.evaluate(e));
    for v in ChshVariant::all() {
        let value = v.evaluate(e);
        if value > best.1 {
            best = (v, value);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SearchConfig {
    /// Scan every CHSH variant instead of the one maximised by the input.
    pub all_variants: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    /// Catalog labels `(chi_0, chi_1, xi_0, xi_1)`: Alice's wiring for `x = 0, 1`
    /// and Bob's for `y = 0, 1`.
    pub best_pair: [u32; 4],
    /// Positions of the same wirings in [`SearchResult::labels`].
    pub best_indices: [usize; 4],
    pub variant: [i8; 4],
    pub s_before: f64,
    pub s_after: f64,
    /// Labels of the scanned catalog, in table order.
    pub labels: Vec<u32>,
    /// Row-major `labels.len()^2` table of wired correlators.
    pub correlator_table: Vec<f64>,
    /// Seconds.
    pub elapsed: f64,
}

impl SearchResult {
    pub fn correlator(&self, alice: usize, bob: usize) -> f64 {
        self.correlator_table[alice * self.labels.len() + bob]
    }
}

/// Non-constant wirings of the two-input catalog.
pub fn distillation_catalog() -> Vec<Wiring> {
    catalog_2in()
        .into_iter()
        .filter(|w| w.class != WiringClass::Constant)
        .collect()
}

/// Correlator `sum (-1)^(a+b) P'(ab)` of two copies of `b` wired by `wa` and `wb`.
fn wired_correlator(b: &NonlocalBox, wa: &Wiring, wb: &Wiring) -> f64 {
    let mut s = 0.0;
    for ta in wa.support() {
        for tb in wb.support() {
            let p = b.p(
                ta.inputs[0] as usize,
                tb.inputs[0] as usize,
                ta.outputs[0] as usize,
                tb.outputs[0] as usize,
            ) * b.p(
                ta.inputs[1] as usize,
                tb.inputs[1] as usize,
                ta.outputs[1] as usize,
                tb.outputs[1] as usize,
            );
            if ta.result == tb.result {
                s += p;
            } else {
                s -= p;
            }
        }
    }
    s
}

/// Exhaustive distillation search over the non-constant two-input catalog.
pub fn distill_search(b: &NonlocalBox) -> Result<SearchResult> {
    distill_search_over(b, &distillation_catalog(), SearchConfig::default())
}

/// Exhaustive search over `(chi_0, chi_1, xi_0, xi_1)` drawn from `catalog`.
pub fn distill_search_over(b: &NonlocalBox, catalog: &[Wiring], config: SearchConfig) -> Result<SearchResult> {
    let start = Instant::now();
    let bell = bell_part(b)?;
    if catalog.is_empty() {
        return Err(Error::InvalidParameter("empty wiring catalog".into()));
    }
    if catalog.iter().any(|w| w.side_inputs() != [2, 2]) {
        return Err(Error::InvalidWiring(
            "distillation catalog must hold two-copy, two-input wirings".into(),
        ));
    }
    let (variant, s_before) = best_chsh_variant(&bell)?;
    let n = catalog.len();
    let table: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|k| wired_correlator(&bell, &catalog[k / n], &catalog[k % n]))
        .collect();

    let variants = if config.all_variants {
        ChshVariant::all()
    } else {
        vec![variant]
    };
    let mut best: Option<(f64, [usize; 4], ChshVariant)> = None;
    for v in variants {
        let s = v.signs.map(f64::from);
        let t = &table;
        let found = (0..n * n)
            .into_par_iter()
            .map(|outer| {
                let (a0, a1) = (outer / n, outer % n);
                let (r0, r1) = (&t[a0 * n..(a0 + 1) * n], &t[a1 * n..(a1 + 1) * n]);
                let mut local = (f64::NEG_INFINITY, [0usize; 4]);
                for b0 in 0..n {
                    for b1 in 0..n {
                        let value = (s[0] * r0[b0] + s[1] * r0[b1] + s[2] * r1[b0] + s[3] * r1[b1]).abs();
                        if value > local.0 {
                            local = (value, [a0, a1, b0, b1]);
                        }
                    }
                }
                local
            })
            .reduce(
                || (f64::NEG_INFINITY, [usize::MAX; 4]),
                |x, y| if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x },
            );
        let better = match &best {
            None => true,
            Some((value, idx, _)) => found.0 > *value || (found.0 == *value && found.1 < *idx),
        };
        if better {
            best = Some((found.0, found.1, v));
        }
    }
    let (s_after, idx, v) = best.expect("at least one variant scanned");
    let labels: Vec<u32> = catalog
        .iter()
        .enumerate()
        .map(|(i, w)| w.label.unwrap_or(i as u32 + 1))
        .collect();
    Ok(SearchResult {
        best_pair: idx.map(|i| labels[i]),
        best_indices: idx,
        variant: v.signs,
        s_before,
        s_after,
        labels,
        correlator_table: table,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

fn bell_part(b: &NonlocalBox) -> Result<NonlocalBox> {
    let s = b.scenario();
    if s.nx < 2 || s.ny < 2 || !s.is_binary() {
        return Err(Error::ScenarioTooSmall(format!(
            "distillation needs a binary box with 2x2 settings, got {}x{}",
            s.nx, s.ny
        )));
    }
    if s.nx == 2 && s.ny == 2 {
        Ok(b.clone())
    } else {
        b.restrict(2, 2)
    }
}

#[derive(Debug, Clone)]
pub struct KeyWiring {
    pub wiring: Wiring,
    /// `P'(a = b | x = 0, y = 2)`.
    pub p_agree: f64,
    /// Labels of every catalog wiring attaining the maximum (within 1e-12).
    pub maximizers: Vec<u32>,
}

/// Agreement probability at the key settings when Alice applies `alice` to
/// two copies of `b` with `x = 0` and Bob applies `bob` with `y = 2`.
pub fn key_agreement(b: &NonlocalBox, alice: &Wiring, bob: &Wiring) -> f64 {
    let mut s = 0.0;
    for ta in alice.support() {
        for tb in bob.support() {
            if ta.result != tb.result {
                continue;
            }
            let mut p = 1.0;
            for i in 0..alice.copies() {
                p *= b.p(
                    ta.inputs[i] as usize,
                    tb.inputs[i] as usize,
                    ta.outputs[i] as usize,
                    tb.outputs[i] as usize,
                );
            }
            s += p;
        }
    }
    s
}

/// Bob's key-setting wiring maximising agreement with Alice's fixed key
/// wiring, by enumeration of the three-input catalog.
pub fn optimize_key_wiring(b: &NonlocalBox, alice_key_wiring: &Wiring) -> Result<KeyWiring> {
    let s = b.scenario();
    if s.nx < 2 || s.ny < 3 || !s.is_binary() {
        return Err(Error::ScenarioTooSmall(format!(
            "key wiring needs a binary 2x3 box, got {}x{}",
            s.nx, s.ny
        )));
    }
    if alice_key_wiring.copies() != 2 || alice_key_wiring.side_inputs() != [s.nx, s.nx] {
        return Err(Error::InvalidWiring(format!(
            "Alice's key wiring must act on two copies with {} inputs each",
            s.nx
        )));
    }
    let catalog = catalog_3in();
    let values: Vec<f64> = catalog.iter().map(|w| key_agreement(b, alice_key_wiring, w)).collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let maximizers: Vec<u32> = catalog
        .iter()
        .zip(&values)
        .filter(|(_, &v)| v >= best - 1e-12)
        .filter_map(|(w, _)| w.label)
        .collect();
    let pos = values
        .iter()
        .position(|&v| v >= best - 1e-12)
        .expect("non-empty catalog");
    Ok(KeyWiring {
        wiring: catalog[pos].clone(),
        p_agree: best,
        maximizers,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub nodes: usize,
    pub level: usize,
    pub mode: ConstraintMode,
    pub solver: SolverConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            nodes: 12,
            level: 2,
            mode: ConstraintMode::Full,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ActivationReport {
    pub before: RateReport,
    /// `None` when the single-copy rate is already positive.
    pub after: Option<RateReport>,
    pub search: Option<SearchResult>,
    pub key_wiring: Option<KeyWiring>,
    /// The wired 2x3 box.
    pub wired: Option<NonlocalBox>,
}

impl ActivationReport {
    pub fn activation_needed(&self) -> bool {
        self.before.rate_lower <= 0.0
    }

    /// Nonpositive certified rate before wiring, positive after.
    pub fn activated(&self) -> bool {
        self.activation_needed() && self.after.as_ref().is_some_and(|a| a.rate_lower > 0.0)
    }
}

/// Rate report of `b` with the entropy bound of `config` and an optional
/// attack bound on `H(A|E)`.
pub fn rate_report(b: &NonlocalBox, config: &PipelineConfig, h_cc_upper: Option<f64>) -> Result<RateReport> {
    let opts = RelaxationOptions {
        mode: config.mode,
        ..RelaxationOptions::new(config.nodes, config.level)
    };
    let bound = solve_relaxation(&build_relaxation_with(b, opts)?, &config.solver)?;
    let meta = RateMeta {
        nodes: config.nodes,
        level: config.level,
        status: bound.status,
        tolerance: config.solver.tolerance,
    };
    RateReport::assemble(b, bound.value, h_cc_upper, meta)
}

/// Rate before wiring; if it is not positive, distil the Bell part, pick
/// Bob's key wiring and bound the rate of the wired box.
pub fn activation_pipeline(b: &NonlocalBox, config: &PipelineConfig) -> Result<ActivationReport> {
    let before = rate_report(b, config, None)?;
    if before.rate_lower > 0.0 {
        return Ok(ActivationReport {
            before,
            after: None,
            search: None,
            key_wiring: None,
            wired: None,
        });
    }
    let catalog = distillation_catalog();
    let search = distill_search_over(b, &catalog, SearchConfig::default())?;
    let [a0, a1, b0, b1] = search.best_indices;
    let alice = vec![catalog[a0].clone(), catalog[a1].clone()];
    let key = optimize_key_wiring(b, &alice[0])?;
    let bob = vec![
        catalog[b0].embed(&[3, 3])?,
        catalog[b1].embed(&[3, 3])?,
        key.wiring.clone(),
    ];
    let pair = WiringPair::new(alice, bob)?;
    let wired = apply_wiring(&pair, &[b.clone(), b.clone()])?;
    let after = rate_report(&wired, config, None)?;
    Ok(ActivationReport {
        before,
        after: Some(after),
        search: Some(search),
        key_wiring: Some(key),
        wired: Some(wired),
    })
}

/// Alice's default key wiring: XOR of two copies at `x = 0`.
pub fn default_alice_key_wiring() -> Wiring {
    xor_wiring(2, 2, 0).expect("static XOR wiring")
}

/// A sampled candidate box.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub point: FamilyPoint,
    pub angles: MeasurementAngles,
    pub boxed: NonlocalBox,
}

/// Largest angle perturbation applied to each measurement.
const ANGLE_JITTER: f64 = 0.05;

/// Deterministic candidates: `alpha` uniform on `(0, 1]`, `v` in `[0.9, 1]`
/// (little white noise), and every measurement angle jittered by at most
/// [`ANGLE_JITTER`] around the standard settings.
pub fn sample_candidates(n: usize, seed: u64) -> Result<Vec<Candidate>> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one candidate".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std = MeasurementAngles::standard();
    (0..n)
        .map(|_| {
            let alpha = 1.0 - rng.gen::<f64>();
            let v = 1.0 - 0.1 * rng.gen::<f64>();
            let point = FamilyPoint::new(alpha, v)?;
            let mut angles = std;
            for a in angles.alice.iter_mut().chain(angles.bob.iter_mut()) {
                *a += rng.gen_range(-ANGLE_JITTER..=ANGLE_JITTER);
            }
            let boxed = born_box(&build_state(point), &observables_with_angles(&angles))?;
            Ok(Candidate { point, angles, boxed })
        })
        .collect()
}

/// Scenario of the wired boxes produced by the pipeline.
pub fn pipeline_scenario() -> Scenario {
    Scenario::protocol()
}
