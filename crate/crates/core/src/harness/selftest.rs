use rand::Rng;

use super::report::{Check, Report};
use crate::error::Result;
use crate::geometry::{PhaseState, TorusPoint, Velocity};
use crate::ot::{
    assignment_value, marginal_inequality_check, w1_exact, w1_sinkhorn, w1_sorted_1d, EmpiricalMeasure, SinkhornOptions,
};
use crate::sde::noise::{purpose, stream_rng};

fn cloud(rng: &mut impl Rng, n: usize, dim: usize) -> Result<EmpiricalMeasure> {
    let pts = (0..n)
        .map(|_| {
            let x = (0..dim).map(|_| rng.random::<f64>()).collect();
            let y = (0..dim).map(|_| 4.0 * rng.random::<f64>() - 2.0).collect();
            PhaseState::new(TorusPoint::new(x)?, Velocity::new(y)?)
        })
        .collect::<Result<Vec<_>>>()?;
    EmpiricalMeasure::from_phase(&pts)
}

/// Minimum of `Σ_i C[i, π(i)]` over all `n!` permutations (Heap's algorithm).
pub fn brute_force_assignment(n: usize, cost: &[f64]) -> f64 {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let mut best = assignment_value(n, cost, &perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(assignment_value(n, cost, &perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// Cross-checks of the transport solvers on random instances.
pub fn ot_selftest(seed: u64) -> Result<Report> {
    let mut report = Report::new("ot-selftest");
    let mut rng = stream_rng(seed, purpose::INSTANCE, 0);

    let mut mismatches = 0;
    for k in 0..50 {
        let n = 1 + k % 6;
        let dim = 1 + k % 2;
        let (mu, nu) = (cloud(&mut rng, n, dim)?, cloud(&mut rng, n, dim)?);
        let exact = w1_exact(&mu, &nu)?.value;
        let brute = brute_force_assignment(n, &mu.cost_matrix(&nu)) / n as f64;
        if exact != brute {
            mismatches += 1;
        }
    }
    report.push(Check::at_most("assignment_vs_brute_force_mismatches", mismatches as f64, 0.0).with_detail("50 instances, n <= 6"));

    let mut worst = 0.0f64;
    for _ in 0..20 {
        let x: Vec<f64> = (0..64).map(|_| rng.random()).collect();
        let z: Vec<f64> = (0..64).map(|_| rng.random()).collect();
        let mu = EmpiricalMeasure::from_positions(&x.into_iter().map(|v| TorusPoint::new(vec![v])).collect::<Result<Vec<_>>>()?)?;
        let nu = EmpiricalMeasure::from_positions(&z.into_iter().map(|v| TorusPoint::new(vec![v])).collect::<Result<Vec<_>>>()?)?;
        worst = worst.max((w1_sorted_1d(&mu, &nu)?.value - w1_exact(&mu, &nu)?.value).abs());
    }
    report.push(Check::at_most("circle_vs_assignment_max_diff", worst, 1e-12).with_detail("20 instances, n = 64"));

    let mut violations = 0;
    for k in 0..20 {
        let (mu, nu) = (cloud(&mut rng, 16 + k, 1 + k % 3)?, cloud(&mut rng, 16 + k, 1 + k % 3)?);
        let (marginal, joint) = marginal_inequality_check(&mu, &nu)?;
        if marginal > joint {
            violations += 1;
        }
    }
    report.push(Check::at_most("marginal_inequality_violations", violations as f64, 0.0).with_detail("20 pairs"));

    let (mu, nu) = (cloud(&mut rng, 256, 1)?, cloud(&mut rng, 256, 1)?);
    let cost = mu.cost_matrix(&nu);
    let mut sorted = cost.clone();
    sorted.sort_by(f64::total_cmp);
    let eps = 0.005 * sorted[sorted.len() / 2];
    let exact = w1_exact(&mu, &nu)?.value;
    let sink = w1_sinkhorn(&mu, &nu, SinkhornOptions::new(eps))?.value;
    report.push(
        Check::at_most("sinkhorn_relative_error", (sink - exact).abs() / exact, 0.05)
            .with_detail(format!("sinkhorn {sink:.6} exact {exact:.6} eps {eps:.3e}")),
    );
    Ok(report)
}
