use super::{check_pair, EmpiricalMeasure, Method, OTResult, Space};
use crate::error::{LabError, Result};
use crate::geometry::circle_dist;

fn argsort(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    idx
}

/// W1 on `R`: mean absolute difference of order statistics.
pub fn w1_sorted_line(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(LabError::UnequalSizes { left: a.len(), right: b.len() });
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

/// W1 on `T¹`: the best of the `n` cyclic shifts of the sorted matching.
pub fn w1_sorted_circle(a: &[f64], b: &[f64]) -> Result<f64> {
    circle_match(a, b).map(|(v, _)| v)
}

fn circle_match(a: &[f64], b: &[f64]) -> Result<(f64, Vec<usize>)> {
    let n = a.len();
    if n != b.len() {
        return Err(LabError::UnequalSizes { left: n, right: b.len() });
    }
    if n == 0 {
        return Err(LabError::invalid("empty samples"));
    }
    let ia = argsort(a);
    let ib = argsort(b);
    let sa: Vec<f64> = ia.iter().map(|&i| a[i]).collect();
    let sb: Vec<f64> = ib.iter().map(|&i| b[i]).collect();
    let mut best = f64::INFINITY;
    let mut best_k = 0;
    for k in 0..n {
        let (head, tail) = sb.split_at(k);
        let mut s = 0.0;
        for (x, y) in sa.iter().zip(tail.iter().chain(head)) {
            s += circle_dist(*x, *y);
        }
        if s < best {
            best = s;
            best_k = k;
        }
    }
    let mut perm = vec![0; n];
    for r in 0..n {
        perm[ia[r]] = ib[(r + best_k) % n];
    }
    Ok((best / n as f64, perm))
}

/// Sorted matching for scalar clouds: circular for positions on `T¹`,
/// linear for velocities on `R`.
pub fn w1_sorted_1d(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<OTResult> {
    check_pair(mu, nu)?;
    let (a, b) = match (mu.scalars(), nu.scalars()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(LabError::invalid("sorted matching needs scalar samples")),
    };
    let (value, permutation) = match mu.space() {
        Space::Position => {
            let (v, p) = circle_match(a, b)?;
            (v, Some(p))
        }
        _ => (w1_sorted_line(a, b)?, None),
    };
    Ok(OTResult { value, method: Method::Sorted1d, permutation, dual_gap: None, iterations: None })
}
