//! Minimal reader for sparse SDPA files with one LMI block and an optional
//! diagonal LP block holding equalities as pairs of opposite inequalities.

use std::collections::BTreeMap;

use diqka::conic::SdpProblem;

pub fn parse_sdpa(text: &str) -> Result<SdpProblem, String> {
    let mut constant = 0.0;
    let mut lines = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix('*') {
            if let Some(v) = rest.trim().strip_prefix("objective constant =") {
                constant = v.trim().parse().map_err(|e| format!("objective constant: {e}"))?;
            }
            continue;
        }
        if !line.is_empty() {
            lines.push(line);
        }
    }
    let mut it = lines.into_iter();
    let mut next = |what: &str| it.next().ok_or_else(|| format!("missing {what}"));
    let n: usize = next("m")?.parse().map_err(|e| format!("m: {e}"))?;
    let nblocks: usize = next("nBlocks")?.parse().map_err(|e| format!("nBlocks: {e}"))?;
    let sizes: Vec<i64> = next("block sizes")?
        .split_whitespace()
        .map(|t| t.parse().map_err(|e| format!("block size: {e}")))
        .collect::<Result<_, _>>()?;
    if sizes.len() != nblocks || sizes[0] <= 0 || (nblocks == 2 && sizes[1] >= 0) || nblocks > 2 {
        return Err(format!("unsupported block structure {sizes:?}"));
    }
    let objective: Vec<f64> = next("objective")?
        .split_whitespace()
        .map(|t| t.parse().map_err(|e| format!("objective: {e}")))
        .collect::<Result<_, _>>()?;
    if objective.len() != n {
        return Err(format!("objective has {} entries for {n} variables", objective.len()));
    }
    let d = sizes[0] as usize;
    let mut lmi: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); n + 1];
    // diagonal LP entries: row -> (matrix -> value)
    let mut lp: BTreeMap<usize, BTreeMap<usize, f64>> = BTreeMap::new();
    for line in it {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 5 {
            return Err(format!("bad entry line {line:?}"));
        }
        let mat: usize = t[0].parse().map_err(|e| format!("{line}: {e}"))?;
        let blk: usize = t[1].parse().map_err(|e| format!("{line}: {e}"))?;
        let i: usize = t[2].parse().map_err(|e| format!("{line}: {e}"))?;
        let j: usize = t[3].parse().map_err(|e| format!("{line}: {e}"))?;
        let v: f64 = t[4].parse().map_err(|e| format!("{line}: {e}"))?;
        if mat > n || i == 0 || j == 0 {
            return Err(format!("index out of range in {line:?}"));
        }
        match blk {
            1 => {
                let (i, j) = (i.min(j) - 1, i.max(j) - 1);
                if j >= d {
                    return Err(format!("entry outside block 1 in {line:?}"));
                }
                // SDPA constant enters with a minus sign
                let v = if mat == 0 { -v } else { v };
                lmi[mat].push((i, j, v));
            }
            2 if i == j => {
                lp.entry(i - 1).or_default().insert(mat, v);
            }
            _ => return Err(format!("unsupported entry {line:?}")),
        }
    }
    let mut equalities = Vec::new();
    for (row, entries) in &lp {
        if row % 2 == 1 {
            continue;
        }
        let rhs = entries.get(&0).copied().unwrap_or(0.0);
        let terms: Vec<(usize, f64)> = entries
            .iter()
            .filter(|(&k, _)| k > 0)
            .map(|(&k, &v)| (k - 1, v))
            .collect();
        equalities.push((terms, rhs));
    }
    let constant_entries = lmi.remove(0);
    Ok(SdpProblem {
        num_vars: n,
        objective,
        objective_constant: constant,
        block_dim: d,
        constant: constant_entries,
        coefficients: lmi,
        equalities,
    })
}
