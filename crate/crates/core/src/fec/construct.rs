//! Construction of irregular repeat-accumulate (IRA) parity-check matrices.
//!
//! The parity part is a dual-diagonal accumulator; information columns are
//! attached with progressive edge growth (PEG), which greedily connects each
//! new edge to the check node farthest from the variable in the current graph.

use std::collections::VecDeque;

use rand::seq::IndexedRandom;
use rand::Rng;

use super::alist::SparseMatrix;
use crate::{Error, Result};

/// Builds an `(n, k)` IRA code. `degrees` lists `(column degree, fraction of
/// information columns)` pairs.
pub fn ira_peg(n: usize, k: usize, degrees: &[(usize, f64)], rng: &mut impl Rng) -> Result<SparseMatrix> {
    if k == 0 || k >= n {
        return Err(Error::Alist(format!("invalid dimensions n = {n}, k = {k}")));
    }
    let m = n - k;
    let col_degrees = assign_degrees(k, degrees)?;
    if col_degrees.iter().any(|&d| d == 0 || d > m) {
        return Err(Error::Alist("column degree exceeds the number of checks".into()));
    }

    let mut var_checks: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut check_vars: Vec<Vec<usize>> = vec![Vec::new(); m];
    let connect = |v: usize, c: usize, vc: &mut Vec<Vec<usize>>, cv: &mut Vec<Vec<usize>>| {
        vc[v].push(c);
        cv[c].push(v);
    };
    for j in 0..m {
        connect(k + j, j, &mut var_checks, &mut check_vars);
        if j + 1 < m {
            connect(k + j, j + 1, &mut var_checks, &mut check_vars);
        }
    }

    // place high-degree columns first
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(col_degrees[v]));
    let mut depth = vec![usize::MAX; m];
    let mut seen_var = vec![false; n];
    for v in order {
        for e in 0..col_degrees[v] {
            let candidates = if e == 0 {
                (0..m).collect::<Vec<_>>()
            } else {
                farthest_checks(v, &var_checks, &check_vars, &mut depth, &mut seen_var)
            };
            let min_deg = candidates
                .iter()
                .map(|&c| check_vars[c].len())
                .min()
                .expect("at least one candidate check");
            let lightest: Vec<usize> = candidates
                .into_iter()
                .filter(|&c| check_vars[c].len() == min_deg)
                .collect();
            let c = *lightest.choose(rng).expect("non-empty");
            connect(v, c, &mut var_checks, &mut check_vars);
        }
    }
    SparseMatrix::from_rows(n, check_vars)
}

/// Checks not yet adjacent to `v` at maximal BFS distance from it, or all
/// unreachable checks if any exist.
fn farthest_checks(
    v: usize,
    var_checks: &[Vec<usize>],
    check_vars: &[Vec<usize>],
    depth: &mut [usize],
    seen_var: &mut [bool],
) -> Vec<usize> {
    depth.iter_mut().for_each(|d| *d = usize::MAX);
    seen_var.iter_mut().for_each(|s| *s = false);
    let mut queue = VecDeque::new();
    seen_var[v] = true;
    for &c in &var_checks[v] {
        depth[c] = 0;
        queue.push_back(c);
    }
    while let Some(c) = queue.pop_front() {
        for &u in &check_vars[c] {
            if seen_var[u] {
                continue;
            }
            seen_var[u] = true;
            for &c2 in &var_checks[u] {
                if depth[c2] == usize::MAX {
                    depth[c2] = depth[c] + 1;
                    queue.push_back(c2);
                }
            }
        }
    }
    let unreachable: Vec<usize> = (0..depth.len()).filter(|&c| depth[c] == usize::MAX).collect();
    if !unreachable.is_empty() {
        return unreachable;
    }
    let max = depth.iter().copied().max().unwrap_or(0);
    (0..depth.len()).filter(|&c| depth[c] == max).collect()
}

fn assign_degrees(k: usize, degrees: &[(usize, f64)]) -> Result<Vec<usize>> {
    let total: f64 = degrees.iter().map(|d| d.1).sum();
    if degrees.is_empty() || (total - 1.0).abs() > 1e-9 {
        return Err(Error::Alist("degree fractions must sum to 1".into()));
    }
    let mut out = Vec::with_capacity(k);
    let mut cumulative = 0.0;
    for &(d, f) in degrees {
        cumulative += f;
        let upto = ((cumulative * k as f64).round() as usize).min(k);
        out.resize(upto.max(out.len()), d);
    }
    out.resize(k, degrees.last().unwrap().0);
    Ok(out)
}
