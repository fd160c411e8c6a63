//! Property tests for the transport estimators, the model layer and the
//! configuration schema.

use overdamped_lab::geometry::{PhaseState, TorusPoint, Velocity};
use overdamped_lab::harness::{fit_loglog, ExperimentConfig, ForceConfig};
use overdamped_lab::model::{
    equilibrium_density, stationarity_residual, DiffusionMatrix, ForceKind, ModelSpec, TrigPolynomial, TrigTerm,
};
use overdamped_lab::ot::{marginal_inequality_check, w1_exact, w1_sorted_1d, EmpiricalMeasure, Space};
use proptest::prelude::*;

fn phase_cloud(n: usize, dim: usize) -> impl Strategy<Value = EmpiricalMeasure> {
    let x = prop::collection::vec(0.0f64..1.0, n * dim);
    let y = prop::collection::vec(-3.0f64..3.0, n * dim);
    (x, y).prop_map(move |(x, y)| {
        let pts: Vec<PhaseState> = (0..n)
            .map(|i| {
                PhaseState::new(
                    TorusPoint::new(x[i * dim..(i + 1) * dim].to_vec()).unwrap(),
                    Velocity::new(y[i * dim..(i + 1) * dim].to_vec()).unwrap(),
                )
                .unwrap()
            })
            .collect();
        EmpiricalMeasure::from_phase(&pts).unwrap()
    })
}

fn trig(dim: usize) -> impl Strategy<Value = TrigPolynomial> {
    let term = (prop::collection::vec(-2i32..=2, dim), -1.0f64..1.0, -1.0f64..1.0)
        .prop_map(|(k, cos, sin)| TrigTerm { k, cos, sin });
    prop::collection::vec(term, 1..4).prop_map(move |t| TrigPolynomial::new(dim, t).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exact_w1_is_symmetric_and_vanishes_on_the_diagonal(mu in phase_cloud(12, 2), nu in phase_cloud(12, 2)) {
        let ab = w1_exact(&mu, &nu).unwrap().value;
        let ba = w1_exact(&nu, &mu).unwrap().value;
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.max(1.0));
        prop_assert_eq!(w1_exact(&mu, &mu).unwrap().value, 0.0);
    }

    #[test]
    fn exact_w1_triangle_inequality(a in phase_cloud(10, 1), b in phase_cloud(10, 1), c in phase_cloud(10, 1)) {
        let ab = w1_exact(&a, &b).unwrap().value;
        let bc = w1_exact(&b, &c).unwrap().value;
        let ac = w1_exact(&a, &c).unwrap().value;
        prop_assert!(ac <= ab + bc + 1e-12);
    }

    #[test]
    fn exact_w1_ignores_point_order(mu in phase_cloud(15, 1), nu in phase_cloud(15, 1), perm in Just((0..15).collect::<Vec<usize>>()).prop_shuffle()) {
        let base = w1_exact(&mu, &nu).unwrap().value;
        let shuffled = w1_exact(&mu.select(&perm), &nu).unwrap().value;
        prop_assert!((base - shuffled).abs() <= 1e-12);
    }

    #[test]
    fn marginal_never_exceeds_joint(mu in phase_cloud(14, 2), nu in phase_cloud(14, 2)) {
        let (marginal, joint) = marginal_inequality_check(&mu, &nu).unwrap();
        prop_assert!(marginal <= joint + 1e-12);
    }

    #[test]
    fn circle_matching_agrees_with_assignment(x in prop::collection::vec(0.0f64..1.0, 24), z in prop::collection::vec(0.0f64..1.0, 24)) {
        let mu = EmpiricalMeasure::from_flat(Space::Position, 1, x).unwrap();
        let nu = EmpiricalMeasure::from_flat(Space::Position, 1, z).unwrap();
        let sorted = w1_sorted_1d(&mu, &nu).unwrap().value;
        let exact = w1_exact(&mu, &nu).unwrap().value;
        prop_assert!((sorted - exact).abs() <= 1e-12, "{} vs {}", sorted, exact);
    }

    #[test]
    fn sup_norm_dominates_force(u in trig(2), x in prop::collection::vec(0.0f64..1.0, 2)) {
        let m = ModelSpec::new(ForceKind::Gradient { potential: u }, DiffusionMatrix::identity(2), 2.0).unwrap();
        let f = m.force().eval(&x);
        let norm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(norm <= m.force().sup_norm() * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn gradient_models_have_stationary_closed_form(u in trig(1), gamma in 1.0f64..20.0, x in 0.0f64..1.0, y in -4.0f64..4.0) {
        let m = ModelSpec::new(ForceKind::Gradient { potential: u }, DiffusionMatrix::identity(1), gamma).unwrap();
        let dens = equilibrium_density(&m).unwrap();
        let p = PhaseState::new(TorusPoint::new(vec![x]).unwrap(), Velocity::new(vec![y]).unwrap()).unwrap();
        prop_assert!(stationarity_residual(&m, &dens.log_density, &p).unwrap().abs() <= 1e-8);
    }

    #[test]
    fn loglog_fit_recovers_power_laws(c in 0.01f64..10.0, p in -2.0f64..1.0) {
        let rows: Vec<(f64, f64)> = [2.0, 4.0, 8.0, 16.0].iter().map(|&g: &f64| (g, c * g.powf(p))).collect();
        let fit = fit_loglog(&rows).unwrap();
        prop_assert!((fit.slope - p).abs() < 1e-10);
        prop_assert!((fit.intercept - c.ln()).abs() < 1e-9);
    }

    #[test]
    fn config_round_trips_through_toml(seed in any::<u32>(), n in 2usize..10_000, eta in -3.0f64..3.0, amp in 0.0f64..2.0) {
        let cfg = ExperimentConfig {
            seed: seed as u64,
            n,
            model: overdamped_lab::harness::ModelConfig {
                force: ForceConfig::TiltedCosine { amplitude: amp, eta },
                sigma: None,
            },
            ..ExperimentConfig::default()
        };
        let text = toml::to_string(&cfg).unwrap();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        prop_assert_eq!(back.hash(), cfg.hash());
        prop_assert_eq!(back, cfg);
    }
}
