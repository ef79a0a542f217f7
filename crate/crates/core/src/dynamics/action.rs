use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DynamicalModel, LagrangianForm};
use crate::numeric::pairwise_sum_by;
use crate::trajectory::Trajectory;

/// Where the potential is sampled on each time slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionRule {
    /// `V((q_k + q_{k+1})/2)·dt`
    #[default]
    Midpoint,
    /// `(V(q_k) + V(q_{k+1}))/2·dt`
    Trapezoid,
}

/// Discrete action of one slice from `a` to `b`.
#[inline]
pub(crate) fn segment_action(lf: &LagrangianForm, a: &[f64], b: &[f64], dt: f64, rule: ActionRule) -> f64 {
    let kinetic = 0.5 * lf.mass * a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum::<f64>() / dt;
    let potential = match rule {
        ActionRule::Midpoint => {
            if a.len() == 1 {
                lf.potential.value(&[0.5 * (a[0] + b[0])])
            } else {
                let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
                lf.potential.value(&mid)
            }
        }
        ActionRule::Trapezoid => 0.5 * (lf.potential.value(a) + lf.potential.value(b)),
    };
    kinetic - potential * dt
}

fn check_dim(model: &DynamicalModel, path: &Trajectory) -> Result<()> {
    if path.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            what: "path",
            expected: model.dim(),
            got: path.dim(),
        });
    }
    Ok(())
}

/// Discrete action of a path.
///
/// Mechanical models use the Lagrangian sum with forward-difference kinetic
/// energy and midpoint potential. Otherwise the path must carry momenta and
/// the discrete 1-form sum `Σ p·Δq − H·Δt` is used instead.
pub fn action_of_path(model: &DynamicalModel, path: &Trajectory) -> Result<f64> {
    check_dim(model, path)?;
    match model.lagrangian() {
        Some(lf) => Ok(lagrangian_sum(lf, path, ActionRule::Midpoint)),
        None if path.has_momenta() => momentum_action(model, path),
        None => Err(Error::UnsupportedModel {
            model: model.name().to_string(),
            what: "an action without a lagrangian form or path momenta",
        }),
    }
}

/// Lagrangian action with an explicit potential rule.
pub fn action_with_rule(model: &DynamicalModel, path: &Trajectory, rule: ActionRule) -> Result<f64> {
    check_dim(model, path)?;
    let lf = model.require_lagrangian("a lagrangian action")?;
    Ok(lagrangian_sum(lf, path, rule))
}

fn lagrangian_sum(lf: &LagrangianForm, path: &Trajectory, rule: ActionRule) -> f64 {
    lagrangian_sum_flat(lf, path.nodes_flat(), path.dim(), path.dt(), rule)
}

/// Action of a path given as a flat node buffer; bit-identical to
/// [`action_of_path`] on the same nodes.
pub(crate) fn lagrangian_sum_flat(lf: &LagrangianForm, nodes: &[f64], dim: usize, dt: f64, rule: ActionRule) -> f64 {
    let segments = nodes.len() / dim - 1;
    pairwise_sum_by(segments, |k| {
        segment_action(
            lf,
            &nodes[k * dim..(k + 1) * dim],
            &nodes[(k + 1) * dim..(k + 2) * dim],
            dt,
            rule,
        )
    })
}

/// Trapezoidal `Σ p·Δq − H·Δt` along a path that carries momenta.
pub fn momentum_action(model: &DynamicalModel, path: &Trajectory) -> Result<f64> {
    check_dim(model, path)?;
    if !path.has_momenta() {
        return Err(Error::UnsupportedModel {
            model: model.name().to_string(),
            what: "a momentum-form action on a path without momenta",
        });
    }
    let dt = path.dt();
    let h = |k: usize| model.h(path.time(k), path.node(k), path.momentum(k).unwrap());
    Ok(pairwise_sum_by(path.segments(), |k| {
        let (qa, qb) = (path.node(k), path.node(k + 1));
        let (pa, pb) = (path.momentum(k).unwrap(), path.momentum(k + 1).unwrap());
        let pdq: f64 = (0..qa.len()).map(|i| 0.5 * (pa[i] + pb[i]) * (qb[i] - qa[i])).sum();
        pdq - 0.5 * (h(k) + h(k + 1)) * dt
    }))
}

/// Exact gradient of the midpoint action with respect to the interior nodes,
/// flattened as `(N−1)·dim` values in node order.
pub fn action_gradient(model: &DynamicalModel, path: &Trajectory) -> Result<Vec<f64>> {
    check_dim(model, path)?;
    let lf = model.require_lagrangian("an action gradient")?;
    let n = path.segments();
    if n < 2 {
        return Err(Error::NoInteriorNodes { nodes: path.len() });
    }
    let dim = path.dim();
    let dt = path.dt();
    let m = lf.mass;
    let mut grad = vec![0.0; (n - 1) * dim];
    let mut mid = vec![0.0; dim];
    // ∇V at the midpoint of every segment, shared by its two end nodes.
    let mut seg_grad = vec![0.0; n * dim];
    for k in 0..n {
        let (a, b) = (path.node(k), path.node(k + 1));
        for i in 0..dim {
            mid[i] = 0.5 * (a[i] + b[i]);
        }
        lf.potential.gradient(&mid, &mut seg_grad[k * dim..(k + 1) * dim]);
    }
    for k in 1..n {
        let (prev, cur, next) = (path.node(k - 1), path.node(k), path.node(k + 1));
        for i in 0..dim {
            grad[(k - 1) * dim + i] = -m * (next[i] - 2.0 * cur[i] + prev[i]) / dt
                - 0.5 * dt * (seg_grad[(k - 1) * dim + i] + seg_grad[k * dim + i]);
        }
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Potential;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn free() -> DynamicalModel {
        DynamicalModel::free_particle(1.0).unwrap()
    }

    #[test]
    fn free_particle_actions() {
        for n in [1, 2, 7, 64] {
            let line = Trajectory::straight_line(0.0, 1.0, &[0.0], &[1.0], n).unwrap();
            assert!((action_of_path(&free(), &line).unwrap() - 0.5).abs() < 1e-14);
        }
        let zig = Trajectory::from_scalars(0.0, 1.0, vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(action_of_path(&free(), &zig).unwrap(), 1.0);
    }

    #[test]
    fn gradient_examples() {
        let line = Trajectory::straight_line(0.0, 1.0, &[0.0], &[1.0], 16).unwrap();
        assert!(action_gradient(&free(), &line).unwrap().iter().all(|g| g.abs() < 1e-12));
        let zig = Trajectory::from_scalars(0.0, 1.0, vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(action_gradient(&free(), &zig).unwrap(), vec![2.0]);
        let one = Trajectory::from_scalars(0.0, 1.0, vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            action_gradient(&free(), &one),
            Err(Error::NoInteriorNodes { .. })
        ));
    }

    /// Richardson oracle: the action of q = sin t on [0, π/2] tends to 0 at O(1/N²).
    #[test]
    fn harmonic_sine_action_converges_quadratically() {
        let ho = DynamicalModel::harmonic_oscillator(1.0, 1.0).unwrap();
        let action = |n: usize| {
            let dt = FRAC_PI_2 / n as f64;
            let nodes = (0..=n).map(|k| (k as f64 * dt).sin()).collect();
            action_of_path(&ho, &Trajectory::from_scalars(0.0, dt, nodes).unwrap()).unwrap()
        };
        let (a1, a2, a3) = (action(250), action(500), action(1000));
        assert!(a3.abs() <= 1.0 / (1000.0f64 * 1000.0), "{a3}");
        let ratio = (a1 - a2) / (a2 - a3);
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
        // Richardson-extrapolated limit.
        assert!(((4.0 * a3 - a2) / 3.0).abs() < 1e-10);
    }

    #[test]
    fn momentum_form_requires_momenta() {
        let h = DynamicalModel::new("pv", 1, |_, q, p| q[0] * p[0]).unwrap();
        let path = Trajectory::from_scalars(0.0, 1.0, vec![0.0, 1.0]).unwrap();
        assert!(matches!(action_of_path(&h, &path), Err(Error::UnsupportedModel { .. })));
        let with_p = path.with_momenta(vec![1.0, 1.0]).unwrap();
        // p·Δq − H·dt = 1 − ½(0 + 1)
        assert_eq!(action_of_path(&h, &with_p).unwrap(), 0.5);
    }

    #[test]
    fn trapezoid_and_midpoint_differ_only_in_potential() {
        let ho = DynamicalModel::harmonic_oscillator(1.0, 1.0).unwrap();
        let path = Trajectory::from_scalars(0.0, 0.5, vec![0.0, 1.0, 2.0]).unwrap();
        let mid = action_with_rule(&ho, &path, ActionRule::Midpoint).unwrap();
        let trap = action_with_rule(&ho, &path, ActionRule::Trapezoid).unwrap();
        let kinetic = 2.0 * 0.5 * 1.0 / 0.5;
        assert!((mid - (kinetic - 0.5 * (0.125 + 1.125))).abs() < 1e-15);
        assert!((trap - (kinetic - 0.5 * (0.25 + 1.25))).abs() < 1e-15);
    }

    fn fd_gradient(model: &DynamicalModel, path: &Trajectory, h: f64) -> Vec<f64> {
        let dim = path.dim();
        let interior = (path.segments() - 1) * dim;
        (0..interior)
            .map(|j| {
                let idx = dim + j;
                let mut plus = path.clone();
                plus.nodes_flat_mut()[idx] += h;
                let mut minus = path.clone();
                minus.nodes_flat_mut()[idx] -= h;
                (action_of_path(model, &plus).unwrap() - action_of_path(model, &minus).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    fn models() -> Vec<DynamicalModel> {
        vec![
            DynamicalModel::harmonic_oscillator(1.3, 0.7).unwrap(),
            DynamicalModel::polynomial(0.8, vec![0.1, -0.4, 0.2, 0.3, -0.05]).unwrap(),
            DynamicalModel::mechanical(
                "coulomb-ish",
                2,
                1.0,
                Potential::new(|q| -1.0 / (1.0 + q[0] * q[0] + q[1] * q[1]).sqrt()),
            )
            .unwrap(),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn gradient_matches_finite_differences(
            raw in proptest::collection::vec(-1.5f64..1.5, 18),
            dt in 0.05f64..0.5,
        ) {
            for model in models() {
                let dim = model.dim();
                let n = raw.len() / dim * dim;
                let path = Trajectory::new(0.0, dt, dim, raw[..n].to_vec()).unwrap();
                let g = action_gradient(&model, &path).unwrap();
                let fd = fd_gradient(&model, &path, 1e-6);
                let norm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let diff = g.iter().zip(&fd).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                prop_assert!(diff <= 1e-6 * (1.0 + norm), "{} diff {diff}", model.name());
            }
        }
    }
}
