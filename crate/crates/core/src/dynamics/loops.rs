use rayon::prelude::*;

use super::integrate::{evolve, IntegratorConfig};
use crate::error::{Error, Result};
use crate::model::DynamicalModel;
use crate::numeric::pairwise_sum;
use crate::trajectory::PhaseLoop;

/// `∮ p·dq` over a loop at fixed order parameter (the `H dt` term vanishes),
/// by the cyclic trapezoidal rule.
pub fn loop_1form_integral(model: &DynamicalModel, lp: &PhaseLoop) -> Result<f64> {
    let pts = lp.points();
    if let Some(bad) = pts.iter().find(|x| model.check_point(x).is_err()) {
        model.check_point(bad)?;
    }
    let n = pts.len();
    let mut terms: Vec<f64> = (0..n)
        .map(|j| {
            let (a, b) = (&pts[j], &pts[(j + 1) % n]);
            (0..a.q.len())
                .map(|i| 0.5 * (a.p[i] + b.p[i]) * (b.q[i] - a.q[i]))
                .sum::<f64>()
        })
        .collect();
    // Summing in value order makes the result independent of where the
    // cycle starts.
    terms.sort_by(f64::total_cmp);
    Ok(pairwise_sum(&terms))
}

/// `|∮ω(φ_span(loop)) − ∮ω(loop)|`: every loop point is carried along the
/// characteristic flow for `span` using `cfg`'s scheme with steps no longer
/// than `cfg.dt`.
pub fn loop_invariance_deviation(
    model: &DynamicalModel,
    lp: &PhaseLoop,
    span: f64,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let before = loop_1form_integral(model, lp)?;
    if span == 0.0 {
        return Ok(0.0);
    }
    let step = IntegratorConfig::for_span(cfg.scheme, span, cfg.dt)?;
    let evolved = lp
        .points()
        .par_iter()
        .map(|x| evolve(model, x, &step))
        .collect::<Result<Vec<_>>>()?;
    let after = loop_1form_integral(model, &PhaseLoop::new(evolved)?)?;
    let dev = (after - before).abs();
    if !dev.is_finite() {
        return Err(Error::NonFinite("loop integral"));
    }
    Ok(dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Scheme;
    use crate::model::PhasePoint;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn ho() -> DynamicalModel {
        DynamicalModel::harmonic_oscillator(1.0, 1.0).unwrap()
    }

    #[test]
    fn unit_circle_area_and_orientation() {
        let ccw = PhaseLoop::circle(0.0, (0.0, 0.0), 1.0, 256, true).unwrap();
        let cw = PhaseLoop::circle(0.0, (0.0, 0.0), 1.0, 256, false).unwrap();
        assert!((loop_1form_integral(&ho(), &ccw).unwrap() - PI).abs() < 1e-3);
        assert!((loop_1form_integral(&ho(), &cw).unwrap() + PI).abs() < 1e-3);
    }

    #[test]
    fn degenerate_loop_is_zero() {
        let lp = PhaseLoop::new(vec![PhasePoint::scalar(0.0, 0.3, 0.7); 5]).unwrap();
        assert_eq!(loop_1form_integral(&ho(), &lp).unwrap(), 0.0);
    }

    #[test]
    fn span_zero_is_exactly_zero() {
        let lp = PhaseLoop::circle(0.0, (0.0, 0.0), 1.0, 32, true).unwrap();
        let cfg = IntegratorConfig::new(Scheme::Leapfrog, 1e-3, 1).unwrap();
        assert_eq!(loop_invariance_deviation(&ho(), &lp, 0.0, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn short_flows_preserve_area() {
        let lp = PhaseLoop::circle(0.0, (0.5, -0.2), 1.0, 64, true).unwrap();
        let cfg = IntegratorConfig::new(Scheme::Leapfrog, 1e-2, 1).unwrap();
        for model in [ho(), DynamicalModel::free_particle(1.0).unwrap()] {
            let dev = loop_invariance_deviation(&model, &lp, 3.0, &cfg).unwrap();
            assert!(dev <= 1e-10, "{} {dev}", model.name());
        }
        let rk = IntegratorConfig::new(Scheme::Rk4, 1e-3, 1).unwrap();
        assert!(loop_invariance_deviation(&ho(), &lp, 3.0, &rk).unwrap() < 1e-9);
    }

    proptest! {
        #[test]
        fn cyclic_relabeling_is_exact(shift in 0usize..17, r in 0.1f64..3.0) {
            let lp = PhaseLoop::circle(0.0, (0.1, 0.2), r, 17, true).unwrap();
            let mut pts = lp.points().to_vec();
            pts.rotate_left(shift);
            let rotated = PhaseLoop::new(pts).unwrap();
            let a = loop_1form_integral(&ho(), &lp).unwrap();
            let b = loop_1form_integral(&ho(), &rotated).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
