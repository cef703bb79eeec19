//! Box-validity conditions of a wiring: for every no-signalling behaviour of
//! the consumed copies, the induced output distribution must be a probability
//! distribution. Checked on the 24 vertices of the two-input polytope, or by
//! optimising each linear functional over the polytope with an LP.

use crate::boxes::{NonlocalBox, Scenario};
use crate::conic::{solve_lp, SolverConfig};
use crate::error::{Error, Result};

use super::Wiring;

/// Tolerance for the LP route (interior-point accuracy).
const LP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ValidityReport {
    pub method: &'static str,
    /// Number of behaviours (vertices) or functionals (LP) examined.
    pub checked: usize,
    /// Largest amount by which any condition is violated (0 when valid).
    pub worst_violation: f64,
}

/// The 24 vertices of the no-signalling polytope with two inputs and two
/// outputs per side: 16 deterministic boxes and 8 PR-type boxes
/// `a_1 xor a_2 = x_1 x_2 xor r x_1 xor s x_2 xor t`. The first copy plays the
/// role of "Alice".
pub fn ns_vertices_2x2() -> Vec<NonlocalBox> {
    let s = Scenario::bell();
    let mut out = Vec::with_capacity(24);
    for f1 in 0..4usize {
        for f2 in 0..4usize {
            // f(x) = bit x of f
            out.push(
                NonlocalBox::from_fn(s, |x, y, a, b| {
                    f64::from(u8::from(a == (f1 >> x) & 1 && b == (f2 >> y) & 1))
                })
                .expect("deterministic box"),
            );
        }
    }
    for r in 0..2usize {
        for sx in 0..2usize {
            for t in 0..2usize {
                out.push(
                    NonlocalBox::from_fn(s, |x, y, a, b| {
                        if a ^ b == (x & y) ^ (r & x) ^ (sx & y) ^ t {
                            0.5
                        } else {
                            0.0
                        }
                    })
                    .expect("PR-type box"),
                );
            }
        }
    }
    out
}

/// `[L_0(P), L_1(P)]` with `L_a(P) = sum chi(a, x1, x2, a1, a2) P(a1 a2 | x1 x2)`
/// for a two-copy wiring and a two-party behaviour `P` of the copies.
pub fn linear_functional_on_vertices(w: &Wiring, p: &NonlocalBox) -> [f64; 2] {
    let mut l = [0.0; 2];
    for t in w.support() {
        l[t.result as usize] += p.p(
            t.inputs[0] as usize,
            t.inputs[1] as usize,
            t.outputs[0] as usize,
            t.outputs[1] as usize,
        );
    }
    l
}

fn check_bounds(values: [f64; 2], tol: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for &l in &values {
        worst = worst.max(-l).max(l - 1.0);
    }
    worst = worst.max((values[0] + values[1] - 1.0).abs());
    if worst <= tol {
        0.0
    } else {
        worst
    }
}

/// Vertex check for two copies with two inputs each.
pub fn validate_wiring_vertices(w: &Wiring) -> Result<ValidityReport> {
    if w.side_inputs() != [2, 2] {
        return Err(Error::InvalidWiring(
            "vertex check needs two copies with two inputs each".into(),
        ));
    }
    let vertices = ns_vertices_2x2();
    let mut worst: f64 = 0.0;
    for (i, v) in vertices.iter().enumerate() {
        let l = linear_functional_on_vertices(w, v);
        let viol = check_bounds(l, 1e-12);
        if viol > 0.0 {
            return Err(Error::InvalidWiring(format!(
                "{}: vertex {i} gives output distribution ({}, {})",
                w.describe(),
                l[0],
                l[1]
            )));
        }
        worst = worst.max(viol);
    }
    Ok(ValidityReport {
        method: "vertices",
        checked: vertices.len(),
        worst_violation: worst,
    })
}

/// LP check over the no-signalling polytope of the consumed copies (any number
/// of copies and inputs): every `L_a` is minimised and maximised and
/// `L_0 + L_1` is pinned to 1 from both sides.
pub fn validate_wiring_lp(w: &Wiring) -> Result<ValidityReport> {
    let sides = w.side_inputs().to_vec();
    let k = sides.len();
    let n_out = 1usize << k;
    let n_in: usize = sides.iter().product();
    let nvar = n_in * n_out;
    let var = |xi: usize, ai: usize| xi * n_out + ai;
    let decode = |mut xi: usize| {
        let mut xs = vec![0; k];
        for i in (0..k).rev() {
            xs[i] = xi % sides[i];
            xi /= sides[i];
        }
        xs
    };
    let encode = |xs: &[usize]| xs.iter().zip(&sides).fold(0, |acc, (&x, &n)| acc * n + x);

    let mut eqs: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    for xi in 0..n_in {
        eqs.push(((0..n_out).map(|ai| (var(xi, ai), 1.0)).collect(), 1.0));
    }
    // Marginalising copy i's output must not depend on copy i's input.
    for i in 0..k {
        let bit = k - 1 - i;
        for xi in 0..n_in {
            let xs = decode(xi);
            if xs[i] == 0 {
                continue;
            }
            let mut base = xs.clone();
            base[i] = 0;
            let x0 = encode(&base);
            for ai in 0..n_out {
                if ai >> bit & 1 == 1 {
                    continue;
                }
                let mut row = Vec::with_capacity(4);
                for oi in [0, 1] {
                    let a = ai | (oi << bit);
                    row.push((var(xi, a), 1.0));
                    row.push((var(x0, a), -1.0));
                }
                eqs.push((row, 0.0));
            }
        }
    }

    let mut functional = [vec![0.0; nvar], vec![0.0; nvar]];
    for t in w.support() {
        let xs: Vec<usize> = (0..k).map(|i| t.inputs[i] as usize).collect();
        let ai = (0..k).fold(0, |acc, i| acc * 2 + t.outputs[i] as usize);
        functional[t.result as usize][var(encode(&xs), ai)] += 1.0;
    }
    let total: Vec<f64> = functional[0].iter().zip(&functional[1]).map(|(a, b)| a + b).collect();

    let config = SolverConfig::default();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut extremes = |c: &[f64]| -> Result<(f64, f64)> {
        let (min, _) = solve_lp(c, &eqs, &config)?;
        let neg: Vec<f64> = c.iter().map(|v| -v).collect();
        let (negmax, _) = solve_lp(&neg, &eqs, &config)?;
        checked += 2;
        Ok((min, -negmax))
    };
    for (a, f) in functional.iter().enumerate() {
        let (lo, hi) = extremes(f)?;
        let viol = (-lo).max(hi - 1.0);
        if viol > LP_TOL {
            return Err(Error::InvalidWiring(format!(
                "{}: P(a={a}) ranges over [{lo}, {hi}] on the no-signalling polytope",
                w.describe()
            )));
        }
        worst = worst.max(viol.max(0.0));
    }
    let (lo, hi) = extremes(&total)?;
    let viol = (1.0 - lo).abs().max((hi - 1.0).abs());
    if viol > LP_TOL {
        return Err(Error::InvalidWiring(format!(
            "{}: total output probability ranges over [{lo}, {hi}]",
            w.describe()
        )));
    }
    worst = worst.max(viol);
    Ok(ValidityReport {
        method: "lp",
        checked,
        worst_violation: worst,
    })
}

/// Vertex check for two-input two-copy wirings, LP check otherwise.
pub fn validate_wiring(w: &Wiring) -> Result<ValidityReport> {
    if w.side_inputs() == [2, 2] {
        validate_wiring_vertices(w)
    } else {
        validate_wiring_lp(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wirings::{catalog_2in, xor_wiring, WiringClass};

    #[test]
    fn vertices_are_no_signalling_boxes() {
        let v = ns_vertices_2x2();
        assert_eq!(v.len(), 24);
        for b in &v {
            assert!(b.is_no_signalling(0.0).no_signalling);
        }
        let mut tables: Vec<Vec<u64>> = v
            .iter()
            .map(|b| b.table().iter().map(|x| x.to_bits()).collect())
            .collect();
        tables.sort();
        tables.dedup();
        assert_eq!(tables.len(), 24);
    }

    #[test]
    fn xor_wiring_is_valid() {
        let w = xor_wiring(2, 2, 0).unwrap();
        validate_wiring(&w).unwrap();
        validate_wiring_lp(&w).unwrap();
    }

    #[test]
    fn both_routes_agree_on_the_catalog() {
        for w in catalog_2in() {
            let v = validate_wiring_vertices(&w).unwrap();
            assert_eq!(v.checked, 24);
            let l = validate_wiring_lp(&w).unwrap();
            assert!(l.worst_violation <= LP_TOL);
        }
    }

    #[test]
    fn wiring_reading_both_inputs_of_one_copy_is_invalid() {
        // Accepts every x_2 for every history: total probability 2.
        let w = Wiring::from_rule(&[2, 2], WiringClass::Custom, |xs, outs| {
            if xs[0] == 0 {
                Some(outs[0] ^ outs[1] ^ usize::from(xs[1] != outs[0]))
            } else {
                None
            }
        })
        .unwrap();
        assert!(matches!(validate_wiring(&w), Err(Error::InvalidWiring(_))));
        assert!(matches!(validate_wiring_lp(&w), Err(Error::InvalidWiring(_))));
    }
}
