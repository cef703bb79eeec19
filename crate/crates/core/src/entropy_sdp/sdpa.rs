//! Sparse SDPA (`.dat-s`) export.
//!
//! SDPA solves `min sum_i c_i x_i` subject to `sum_i F_i x_i - F_0` PSD. The
//! moment block becomes block 1; multi-term equalities, if any, become a
//! diagonal block 2 holding each equality as a pair of opposite inequalities.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::conic::SdpProblem;
use crate::error::Result;

use super::relaxation::Relaxation;

/// SDPA text of `p`. `comment` lines are prefixed with `*`.
pub fn sdpa_string(p: &SdpProblem, comment: &str) -> String {
    let mut s = String::new();
    for line in comment.lines() {
        let _ = writeln!(s, "* {line}");
    }
    let _ = writeln!(s, "* objective constant = {:e}", p.objective_constant);
    let n_eq = p.equalities.len();
    let _ = writeln!(s, "{}", p.num_vars);
    if n_eq > 0 {
        let _ = writeln!(s, "2");
        let _ = writeln!(s, "{} {}", p.block_dim, -2 * n_eq as i64);
    } else {
        let _ = writeln!(s, "1");
        let _ = writeln!(s, "{}", p.block_dim);
    }
    let c: Vec<String> = p.objective.iter().map(|v| format!("{v:e}")).collect();
    let _ = writeln!(s, "{}", c.join(" "));

    let mut entry = |mat: usize, blk: usize, i: usize, j: usize, v: f64| {
        if v != 0.0 {
            let _ = writeln!(s, "{mat} {blk} {} {} {v:e}", i + 1, j + 1);
        }
    };
    for &(i, j, v) in &p.constant {
        entry(0, 1, i, j, -v);
    }
    for (r, (_, rhs)) in p.equalities.iter().enumerate() {
        entry(0, 2, 2 * r, 2 * r, *rhs);
        entry(0, 2, 2 * r + 1, 2 * r + 1, -*rhs);
    }
    for (k, entries) in p.coefficients.iter().enumerate() {
        for &(i, j, v) in entries {
            entry(k + 1, 1, i, j, v);
        }
        for (r, (terms, _)) in p.equalities.iter().enumerate() {
            let coef: f64 = terms.iter().filter(|t| t.0 == k).map(|t| t.1).sum();
            entry(k + 1, 2, 2 * r, 2 * r, coef);
            entry(k + 1, 2, 2 * r + 1, 2 * r + 1, -coef);
        }
    }
    s
}

/// Write node `node` of the relaxation to `path`.
pub fn export_sdpa(r: &Relaxation, node: usize, path: &Path) -> Result<()> {
    let p = r.node_sdp(node)?;
    let term = &r.nodes[node];
    let comment = format!(
        "conditional entropy relaxation, node {} of {}, t = {:e}, node coefficient = {:e}, c_m = {:e}\n\
         level {}, basis size {}, {:?} constraints",
        node + 1,
        r.nodes.len(),
        term.t,
        term.coefficient,
        r.rule.c_m,
        r.level,
        r.moments.dim(),
        r.mode,
    );
    let mut f = std::fs::File::create(path)?;
    f.write_all(sdpa_string(&p, &comment).as_bytes())?;
    Ok(())
}
