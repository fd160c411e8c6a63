use super::{check_pair, EmpiricalMeasure, Method, OTResult};
use crate::error::{LabError, Result};

/// Largest cloud the dense assignment solver accepts.
pub const EXACT_BUDGET: usize = 4096;

/// Exact W1 between two equal-size clouds as an optimal assignment.
pub fn w1_exact(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<OTResult> {
    check_pair(mu, nu)?;
    let n = mu.len();
    if n > EXACT_BUDGET {
        return Err(LabError::invalid(format!("{n} points exceed the exact solver budget {EXACT_BUDGET}")));
    }
    let cost = mu.cost_matrix(nu);
    let (perm, dual) = solve_assignment(n, &cost)?;
    let total = assignment_value(n, &cost, &perm);
    Ok(OTResult {
        value: total / n as f64,
        method: Method::Assignment,
        dual_gap: Some(total - dual),
        permutation: Some(perm),
        iterations: None,
    })
}

/// `Σ_i C[i, perm[i]]`, summed in row order.
pub fn assignment_value(n: usize, cost: &[f64], perm: &[usize]) -> f64 {
    (0..n).map(|i| cost[i * n + perm[i]]).sum()
}

/// Minimum-cost perfect matching of a dense row-major `n × n` cost matrix by
/// successive shortest augmenting paths with dual potentials. Returns the row
/// to column assignment and the dual objective `Σu + Σv`.
pub fn solve_assignment(n: usize, cost: &[f64]) -> Result<(Vec<usize>, f64)> {
    if cost.len() != n * n {
        return Err(LabError::invalid("cost matrix is not n × n"));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(LabError::NonFinite { context: "assignment costs" });
    }
    const NONE: usize = usize::MAX;
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut col4row = vec![NONE; n];
    let mut row4col = vec![NONE; n];
    let mut path = vec![NONE; n];
    let mut spc = vec![f64::INFINITY; n];
    let mut remaining: Vec<usize> = Vec::with_capacity(n);
    let mut sr: Vec<usize> = Vec::with_capacity(n);
    let mut sc = vec![false; n];
    let mut sc_list: Vec<usize> = Vec::with_capacity(n);

    for cur in 0..n {
        remaining.clear();
        remaining.extend((0..n).rev());
        spc.iter_mut().for_each(|s| *s = f64::INFINITY);
        for &j in &sc_list {
            sc[j] = false;
        }
        sc_list.clear();
        sr.clear();

        let mut min_val = 0.0;
        let mut i = cur;
        let sink = loop {
            sr.push(i);
            let row = &cost[i * n..(i + 1) * n];
            let ui = u[i];
            let mut lowest = f64::INFINITY;
            let mut index = NONE;
            for (it, &j) in remaining.iter().enumerate() {
                let r = min_val + row[j] - ui - v[j];
                if r < spc[j] {
                    path[j] = i;
                    spc[j] = r;
                }
                if spc[j] < lowest || (spc[j] == lowest && row4col[j] == NONE) {
                    lowest = spc[j];
                    index = it;
                }
            }
            min_val = lowest;
            let j = remaining.swap_remove(index);
            sc[j] = true;
            sc_list.push(j);
            if row4col[j] == NONE {
                break j;
            }
            i = row4col[j];
        };

        u[cur] += min_val;
        for &r in &sr {
            if r != cur {
                u[r] += min_val - spc[col4row[r]];
            }
        }
        for &j in &sc_list {
            v[j] -= min_val - spc[j];
        }
        let mut j = sink;
        loop {
            let r = path[j];
            row4col[j] = r;
            std::mem::swap(&mut col4row[r], &mut j);
            if r == cur {
                break;
            }
        }
    }
    let dual = u.iter().sum::<f64>() + v.iter().sum::<f64>();
    Ok((col4row, dual))
}
