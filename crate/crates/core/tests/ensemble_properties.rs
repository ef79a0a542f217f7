//! Property checks across modules on randomly drawn small instances.

use approx::assert_relative_eq;
use proptest::prelude::*;
use trajthermo::ensemble::{maxent_stationarity, most_probable_path, solve_beta_for_actions};
use trajthermo::quantum::propagator_lattice_sum;
use trajthermo::{boltzmann_distribution, DynamicalModel, PathLattice};

fn lattice() -> impl Strategy<Value = PathLattice> {
    (
        1usize..=4,
        0.1f64..1.0,
        prop::sample::select(vec![1usize, 3, 5]),
        0.1f64..1.0,
        -1.0f64..1.0,
        -1.0f64..1.0,
    )
        .prop_map(|(n, dt, k, dx, a, b)| PathLattice::new(n, dt, k, dx, a, b).unwrap())
}

fn model() -> impl Strategy<Value = DynamicalModel> {
    (0.5f64..2.0, prop::collection::vec(-1.0f64..1.0, 0..4), 0.0f64..1.0).prop_map(|(m, mut c, quartic)| {
        c.resize(4, 0.0);
        c.push(quartic);
        DynamicalModel::polynomial(m, c).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, max_global_rejects: 8192, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn boltzmann_is_normalised_and_stationary(lat in lattice(), model in model(), beta in 0.05f64..20.0) {
        let dist = boltzmann_distribution(&lat, &model, beta).unwrap();
        let total: f64 = dist.weights().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        let s = dist.entropy();
        let gibbs = beta * dist.mean_action() + dist.log_z().unwrap();
        prop_assert!((s - gibbs).abs() <= 1e-10 * s.abs().max(gibbs.abs()).max(1.0));
        // Underflowed or subnormal weights are outside the stationarity check's domain.
        if dist.weights().iter().all(|&p| p >= f64::MIN_POSITIVE) {
            let r = maxent_stationarity(&dist, dist.multipliers().unwrap()).unwrap();
            prop_assert!(r < 1e-9, "{:e} beta {} actions {:?}", r, beta, dist.actions());
        } else {
            prop_assert!(maxent_stationarity(&dist, dist.multipliers().unwrap()).is_err());
        }
    }

    #[test]
    fn mode_is_the_minimum_action_path(lat in lattice(), model in model(), beta in 0.05f64..20.0) {
        let dist = boltzmann_distribution(&lat, &model, beta).unwrap();
        let (idx, path) = most_probable_path(&dist).unwrap();
        let min = dist.actions().iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(dist.actions()[idx], min);
        prop_assert_eq!(path, lat.path(idx).unwrap());
    }

    #[test]
    fn solve_beta_inverts_the_mean(lat in lattice(), model in model(), beta in 0.2f64..3.0) {
        let dist = boltzmann_distribution(&lat, &model, beta).unwrap();
        let spread = dist.actions().iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - dist.actions().iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(spread > 1e-3);
        let mean = dist.mean_action();
        let min = dist.actions().iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(mean > min);
        let var: f64 = dist.actions().iter().zip(dist.weights()).map(|(a, p)| p * (a - mean).powi(2)).sum();
        prop_assume!(var > 1e-8 * mean.abs().max(1.0));
        let got = solve_beta_for_actions(dist.actions(), mean, 1e-13).unwrap();
        // dβ/d⟨I⟩ = −1/Var(I), so rounding in ⟨I⟩ is amplified by 1/Var.
        let tol = 1e-9 * beta + 1e-13 * mean.abs().max(1.0) / var;
        prop_assert!((got - beta).abs() < tol, "{} vs {} (var {:e})", got, beta, var);
    }
}

#[test]
fn lattice_sum_depends_on_rule_only_through_actions() {
    let free = DynamicalModel::free_particle(1.0).unwrap();
    let lat = PathLattice::new(3, 0.5, 5, 0.4, 0.0, 0.8).unwrap();
    let a = propagator_lattice_sum(&lat, &free, 1.0).unwrap();
    let b = propagator_lattice_sum(&lat, &free, 1.0).unwrap();
    assert_eq!(a, b);
    // Free-particle midpoint and trapezoid actions coincide.
    let t = trajthermo::quantum::propagator_lattice_sum_with_rule(&lat, &free, 1.0, trajthermo::ActionRule::Trapezoid)
        .unwrap();
    assert_relative_eq!(a.re, t.re, max_relative = 1e-12);
    assert_relative_eq!(a.im, t.im, max_relative = 1e-12);
}
