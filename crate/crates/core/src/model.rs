//! Hamiltonian models over an extended phase space `(t; q, p)`.
//!
//! A [`DynamicalModel`] carries the generator `H(t, q, p)` and, optionally,
//! its analytic partial derivatives. Missing partials fall back to centered
//! finite differences. Mechanical models additionally carry a
//! [`LagrangianForm`] (mass and potential), which is what the action,
//! ensemble, sampler and propagator code work with.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::fd_step;

pub type ScalarField = Arc<dyn Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync>;

type PotentialFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type PotentialGradFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// A point `(t; q, p)` of the extended phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub t: f64,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(t: f64, q: Vec<f64>, p: Vec<f64>) -> Self {
        Self { t, q, p }
    }

    /// One-dimensional convenience constructor.
    pub fn scalar(t: f64, q: f64, p: f64) -> Self {
        Self::new(t, vec![q], vec![p])
    }
}

/// Potential energy `V(q)` with an optional analytic gradient.
#[derive(Clone)]
pub struct Potential {
    value: PotentialFn,
    gradient: Option<PotentialGradFn>,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("analytic_gradient", &self.gradient.is_some())
            .finish()
    }
}

impl Potential {
    pub fn new(value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            gradient: None,
        }
    }

    pub fn with_gradient(mut self, grad: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(grad));
        self
    }

    pub fn zero() -> Self {
        Self::new(|_| 0.0).with_gradient(|_, g| g.fill(0.0))
    }

    /// `V(q) = ½ k ‖q‖²`.
    pub fn harmonic(k: f64) -> Self {
        Self::new(move |q| 0.5 * k * q.iter().map(|x| x * x).sum::<f64>()).with_gradient(move |q, g| {
            for (gi, qi) in g.iter_mut().zip(q) {
                *gi = k * qi;
            }
        })
    }

    /// `V(q) = Σ_i Σ_j c_j q_i^j`, a polynomial applied to every component.
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        let c = Arc::new(coeffs);
        let cg = Arc::clone(&c);
        Self::new(move |q| q.iter().map(|&x| horner(&c, x)).sum()).with_gradient(move |q, g| {
            for (gi, &x) in g.iter_mut().zip(q) {
                *gi = horner_derivative(&cg, x);
            }
        })
    }

    #[inline]
    pub fn value(&self, q: &[f64]) -> f64 {
        (self.value)(q)
    }

    /// Writes `∇V(q)` into `out`, using centered differences when no analytic
    /// gradient was supplied.
    pub fn gradient(&self, q: &[f64], out: &mut [f64]) {
        match &self.gradient {
            Some(g) => g(q, out),
            None => {
                let mut x = q.to_vec();
                for i in 0..q.len() {
                    let h = fd_step(q[i]);
                    x[i] = q[i] + h;
                    let fp = self.value(&x);
                    x[i] = q[i] - h;
                    let fm = self.value(&x);
                    x[i] = q[i];
                    out[i] = (fp - fm) / (2.0 * h);
                }
            }
        }
    }

    /// Scalar derivative for one-dimensional coordinates.
    #[inline]
    pub fn derivative_1d(&self, q: f64) -> f64 {
        let mut g = [0.0];
        self.gradient(&[q], &mut g);
        g[0]
    }
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &cj| acc * x + cj)
}

fn horner_derivative(c: &[f64], x: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (j, &cj)| acc * x + j as f64 * cj)
}

/// Kinetic/potential split `L = m‖q̇‖²/2 − V(q)`.
#[derive(Debug, Clone)]
pub struct LagrangianForm {
    pub mass: f64,
    pub potential: Potential,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicRhs {
    /// `dq/dt = ∂H/∂p`
    pub dq: Vec<f64>,
    /// `dp/dt = −∂H/∂q`
    pub dp: Vec<f64>,
    /// `dH/dt = ∂H/∂t`
    pub dh: f64,
}

#[derive(Clone)]
pub struct DynamicalModel {
    name: String,
    dim: usize,
    hamiltonian: ScalarField,
    dh_dq: Option<VectorField>,
    dh_dp: Option<VectorField>,
    dh_dt: Option<ScalarField>,
    lagrangian: Option<LagrangianForm>,
}

impl fmt::Debug for DynamicalModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DynamicalModel")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("lagrangian", &self.lagrangian)
            .finish_non_exhaustive()
    }
}

impl DynamicalModel {
    /// A model given only by its Hamiltonian; partials default to finite
    /// differences until supplied with the `with_*` builders.
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        hamiltonian: impl Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("dim", "must be positive"));
        }
        Ok(Self {
            name: name.into(),
            dim,
            hamiltonian: Arc::new(hamiltonian),
            dh_dq: None,
            dh_dp: None,
            dh_dt: None,
            lagrangian: None,
        })
    }

    pub fn with_dh_dq(mut self, f: impl Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.dh_dq = Some(Arc::new(f));
        self
    }

    pub fn with_dh_dp(mut self, f: impl Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.dh_dp = Some(Arc::new(f));
        self
    }

    pub fn with_dh_dt(mut self, f: impl Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.dh_dt = Some(Arc::new(f));
        self
    }

    /// Separable mechanical model `H = ‖p‖²/(2m) + V(q)`.
    pub fn mechanical(name: impl Into<String>, dim: usize, mass: f64, potential: Potential) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::domain(
                "mass",
                format!("must be positive and finite, got {mass}"),
            ));
        }
        let v = potential.clone();
        let vg = potential.clone();
        let inv_m = 1.0 / mass;
        let mut model = Self::new(name, dim, move |_, q, p| {
            0.5 * inv_m * p.iter().map(|x| x * x).sum::<f64>() + v.value(q)
        })?
        .with_dh_dq(move |_, q, _, out| vg.gradient(q, out))
        .with_dh_dp(move |_, _, p, out| {
            for (o, pi) in out.iter_mut().zip(p) {
                *o = pi * inv_m;
            }
        })
        .with_dh_dt(|_, _, _| 0.0);
        model.lagrangian = Some(LagrangianForm { mass, potential });
        Ok(model)
    }

    pub fn free_particle(mass: f64) -> Result<Self> {
        Self::mechanical("free", 1, mass, Potential::zero())
    }

    pub fn harmonic_oscillator(mass: f64, omega: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::domain(
                "omega",
                format!("must be positive and finite, got {omega}"),
            ));
        }
        Self::mechanical("harmonic", 1, mass, Potential::harmonic(mass * omega * omega))
    }

    /// One-dimensional particle in `V(q) = Σ_j c_j q^j`.
    pub fn polynomial(mass: f64, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("polynomial coefficients"));
        }
        Self::mechanical("polynomial", 1, mass, Potential::polynomial(coeffs))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lagrangian(&self) -> Option<&LagrangianForm> {
        self.lagrangian.as_ref()
    }

    /// The Lagrangian form, or an unsupported-model error naming `what`.
    pub fn require_lagrangian(&self, what: &'static str) -> Result<&LagrangianForm> {
        self.lagrangian.as_ref().ok_or_else(|| Error::UnsupportedModel {
            model: self.name.clone(),
            what,
        })
    }

    pub fn check_point(&self, x: &PhasePoint) -> Result<()> {
        if x.q.len() != self.dim {
            return Err(Error::DimensionMismatch {
                what: "coordinates",
                expected: self.dim,
                got: x.q.len(),
            });
        }
        if x.p.len() != self.dim {
            return Err(Error::DimensionMismatch {
                what: "momenta",
                expected: self.dim,
                got: x.p.len(),
            });
        }
        Ok(())
    }

    pub fn eval_hamiltonian(&self, x: &PhasePoint) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.h(x.t, &x.q, &x.p))
    }

    pub fn characteristic_rhs(&self, x: &PhasePoint) -> Result<CharacteristicRhs> {
        self.check_point(x)?;
        let mut dq = vec![0.0; self.dim];
        let mut dp = vec![0.0; self.dim];
        self.rhs_into(x.t, &x.q, &x.p, &mut dq, &mut dp);
        Ok(CharacteristicRhs {
            dq,
            dp,
            dh: self.partial_t(x.t, &x.q, &x.p),
        })
    }

    #[inline]
    pub(crate) fn h(&self, t: f64, q: &[f64], p: &[f64]) -> f64 {
        (self.hamiltonian)(t, q, p)
    }

    /// `∂H/∂q` into `out`.
    pub fn partial_q(&self, t: f64, q: &[f64], p: &[f64], out: &mut [f64]) {
        match &self.dh_dq {
            Some(f) => f(t, q, p, out),
            None => {
                let mut x = q.to_vec();
                for i in 0..self.dim {
                    let h = fd_step(q[i]);
                    x[i] = q[i] + h;
                    let fp = self.h(t, &x, p);
                    x[i] = q[i] - h;
                    let fm = self.h(t, &x, p);
                    x[i] = q[i];
                    out[i] = (fp - fm) / (2.0 * h);
                }
            }
        }
    }

    /// `∂H/∂p` into `out`.
    pub fn partial_p(&self, t: f64, q: &[f64], p: &[f64], out: &mut [f64]) {
        match &self.dh_dp {
            Some(f) => f(t, q, p, out),
            None => {
                let mut y = p.to_vec();
                for i in 0..self.dim {
                    let h = fd_step(p[i]);
                    y[i] = p[i] + h;
                    let fp = self.h(t, q, &y);
                    y[i] = p[i] - h;
                    let fm = self.h(t, q, &y);
                    y[i] = p[i];
                    out[i] = (fp - fm) / (2.0 * h);
                }
            }
        }
    }

    pub fn partial_t(&self, t: f64, q: &[f64], p: &[f64]) -> f64 {
        match &self.dh_dt {
            Some(f) => f(t, q, p),
            None => {
                let h = fd_step(t);
                (self.h(t + h, q, p) - self.h(t - h, q, p)) / (2.0 * h)
            }
        }
    }

    /// Unchecked characteristic flow `(∂H/∂p, −∂H/∂q)`.
    pub(crate) fn rhs_into(&self, t: f64, q: &[f64], p: &[f64], dq: &mut [f64], dp: &mut [f64]) {
        self.partial_p(t, q, p, dq);
        self.partial_q(t, q, p, dp);
        for v in dp.iter_mut() {
            *v = -*v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hamiltonian_examples() {
        let ho = DynamicalModel::harmonic_oscillator(1.0, 1.0).unwrap();
        assert_eq!(ho.eval_hamiltonian(&PhasePoint::scalar(0.0, 1.0, 0.0)).unwrap(), 0.5);
        let free = DynamicalModel::free_particle(1.0).unwrap();
        assert_eq!(free.eval_hamiltonian(&PhasePoint::scalar(0.0, 0.0, 2.0)).unwrap(), 2.0);
    }

    #[test]
    fn rhs_examples() {
        let ho = DynamicalModel::harmonic_oscillator(1.0, 1.0).unwrap();
        let r = ho.characteristic_rhs(&PhasePoint::scalar(0.0, 1.0, 0.0)).unwrap();
        assert_eq!((r.dq[0], r.dp[0], r.dh), (0.0, -1.0, 0.0));
        let free = DynamicalModel::free_particle(1.0).unwrap();
        let r = free.characteristic_rhs(&PhasePoint::scalar(0.0, 0.0, 1.0)).unwrap();
        assert_eq!((r.dq[0], r.dp[0], r.dh), (1.0, 0.0, 0.0));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let ho = DynamicalModel::harmonic_oscillator(1.0, 1.0).unwrap();
        let bad = PhasePoint::new(0.0, vec![1.0, 2.0], vec![0.0]);
        assert!(matches!(
            ho.eval_hamiltonian(&bad),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            ho.characteristic_rhs(&bad),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mechanical_hamiltonian_is_kinetic_plus_potential() {
        let m = 2.5;
        let model = DynamicalModel::polynomial(m, vec![0.3, -1.0, 0.5, 0.25]).unwrap();
        let lf = model.lagrangian().unwrap();
        for &(q, p) in &[(0.0, 0.0), (1.3, -0.7), (-2.0, 4.0)] {
            let h = model.eval_hamiltonian(&PhasePoint::scalar(0.0, q, p)).unwrap();
            assert_eq!(h, 0.5 / m * p * p + lf.potential.value(&[q]));
        }
    }

    #[test]
    fn finite_difference_fallback_matches_analytic() {
        // Only H supplied: partials come from centered differences.
        let h_only = DynamicalModel::new("quartic", 1, |_, q, p| 0.5 * p[0] * p[0] + q[0].powi(4)).unwrap();
        let x = PhasePoint::scalar(0.0, 0.8, -1.2);
        let r = h_only.characteristic_rhs(&x).unwrap();
        assert!((r.dq[0] + 1.2).abs() < 1e-8);
        assert!((r.dp[0] + 4.0 * 0.8f64.powi(3)).abs() < 1e-8);
        assert!(r.dh.abs() < 1e-12);
    }

    #[test]
    fn analytic_partials_agree_with_fd_to_second_order() {
        let model = DynamicalModel::polynomial(1.0, vec![0.0, 0.4, -0.3, 0.2, 0.05]).unwrap();
        let (q, p) = (0.7, 0.3);
        let mut g = [0.0];
        model.partial_q(0.0, &[q], &[p], &mut g);
        let mut errs = Vec::new();
        for &h in &[1e-3, 1e-4] {
            let fd = (model.h(0.0, &[q + h], &[p]) - model.h(0.0, &[q - h], &[p])) / (2.0 * h);
            errs.push((fd - g[0]).abs() / g[0].abs());
        }
        // Relative error falls like h²: ≤ C·h² with a modest C.
        assert!(errs[0] <= 10.0 * 1e-6, "{errs:?}");
        assert!(errs[1] <= 10.0 * 1e-8 + 1e-10, "{errs:?}");
    }

    #[test]
    fn invalid_parameters() {
        assert!(DynamicalModel::free_particle(0.0).is_err());
        assert!(DynamicalModel::harmonic_oscillator(1.0, -1.0).is_err());
        assert!(DynamicalModel::new("x", 0, |_, _, _| 0.0).is_err());
    }

    #[test]
    fn polynomial_potential_gradient() {
        let v = Potential::polynomial(vec![1.0, 2.0, 3.0]);
        assert_eq!(v.value(&[2.0]), 1.0 + 4.0 + 12.0);
        assert_eq!(v.derivative_1d(2.0), 2.0 + 12.0);
        let fd_only = Potential::new(|q| 1.0 + 2.0 * q[0] + 3.0 * q[0] * q[0]);
        assert!((fd_only.derivative_1d(2.0) - 14.0).abs() < 1e-8);
    }
}
