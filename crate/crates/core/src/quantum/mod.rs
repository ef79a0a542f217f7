//! Path amplitudes `exp(iI/ħ)`, their lattice sums and time-sliced propagators.
//!
//! Every time slice carries the normalisation `A = √(m/(2πiħ·dt))` (principal
//! branch), so an `N`-slice propagator is `dx^(N−1)·A^N` times the sum of path
//! amplitudes over the `N − 1` interior grid integrals.

mod slicing;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{action_of_path, ActionRule};
use crate::ensemble::PathLattice;
use crate::error::{Error, Result};
use crate::model::DynamicalModel;
use crate::numeric::pairwise_sum_by;
use crate::trajectory::Trajectory;

pub use slicing::{
    apply_slice, propagator_time_sliced, Propagator, PropagatorMeta, Quadrature, SlicingConfig, Warnings,
};

/// A one-dimensional complex amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Amplitude {
    pub re: f64,
    pub im: f64,
}

impl Amplitude {
    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        Complex64::from_polar(r, theta).into()
    }

    pub fn norm(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn arg(&self) -> f64 {
        self.im.atan2(self.re)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

impl From<Complex64> for Amplitude {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<Amplitude> for Complex64 {
    fn from(a: Amplitude) -> Self {
        a.to_complex()
    }
}

pub(crate) fn check_hbar(hbar: f64) -> Result<()> {
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::domain(
            "hbar",
            format!("must be positive and finite, got {hbar}"),
        ));
    }
    Ok(())
}

/// Per-slice normalisation `√(m/(2πiħ·dt))`, principal branch.
pub fn slice_normalization(mass: f64, hbar: f64, dt: f64) -> Complex64 {
    (Complex64::new(0.0, -mass / (2.0 * PI * hbar * dt))).sqrt()
}

/// `exp(i·I(γ)/ħ)`, a unit-modulus amplitude.
pub fn path_amplitude(model: &DynamicalModel, path: &Trajectory, hbar: f64) -> Result<Amplitude> {
    check_hbar(hbar)?;
    model.require_lagrangian("a path amplitude")?;
    let action = action_of_path(model, path)?;
    if !action.is_finite() {
        return Err(Error::NonFinite("path action"));
    }
    Ok(Complex64::cis(action / hbar).into())
}

fn complex_sum(values: &[Complex64]) -> Complex64 {
    Complex64::new(
        pairwise_sum_by(values.len(), |i| values[i].re),
        pairwise_sum_by(values.len(), |i| values[i].im),
    )
}

/// `dx^(N−1)·A^N·Σ_γ exp(iI(γ)/ħ)` over every lattice path, midpoint action.
pub fn propagator_lattice_sum(lattice: &PathLattice, model: &DynamicalModel, hbar: f64) -> Result<Amplitude> {
    propagator_lattice_sum_with_rule(lattice, model, hbar, ActionRule::Midpoint)
}

pub fn propagator_lattice_sum_with_rule(
    lattice: &PathLattice,
    model: &DynamicalModel,
    hbar: f64,
    rule: ActionRule,
) -> Result<Amplitude> {
    check_hbar(hbar)?;
    let lf = model.require_lagrangian("a lattice propagator")?;
    let actions = lattice.actions_with_rule(model, rule)?;
    let phases: Vec<Complex64> = actions.iter().map(|a| Complex64::cis(a / hbar)).collect();
    let n = lattice.n_slices();
    let norm = slice_normalization(lf.mass, hbar, lattice.dt()).powu(n as u32) * lattice.dx().powi(n as i32 - 1);
    Ok((norm * complex_sum(&phases)).into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropagatorKind {
    Free,
    Oscillator,
}

/// Closed-form propagators `K(x2, t | x1, 0)`.
pub fn analytic_propagator(
    kind: PropagatorKind,
    mass: f64,
    omega: f64,
    hbar: f64,
    x1: f64,
    x2: f64,
    t: f64,
) -> Result<Amplitude> {
    check_hbar(hbar)?;
    if !(mass > 0.0) {
        return Err(Error::domain("mass", format!("must be positive, got {mass}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain("t", format!("must be positive, got {t}")));
    }
    let i = Complex64::i();
    let z = match kind {
        PropagatorKind::Free => {
            slice_normalization(mass, hbar, t) * (i * mass * (x2 - x1).powi(2) / (2.0 * hbar * t)).exp()
        }
        PropagatorKind::Oscillator => {
            if !(omega > 0.0) {
                return Err(Error::domain("omega", format!("must be positive, got {omega}")));
            }
            let (s, c) = (omega * t).sin_cos();
            if s.abs() < 1e-12 {
                return Err(Error::Singular(format!("caustic at ωt = {}", omega * t)));
            }
            let pre = (Complex64::new(0.0, -mass * omega / (2.0 * PI * hbar * s))).sqrt();
            let phase = mass * omega * ((x1 * x1 + x2 * x2) * c - 2.0 * x1 * x2) / (2.0 * hbar * s);
            pre * Complex64::cis(phase)
        }
    };
    Ok(z.into())
}

/// `|K(x_cell)|²·dx`, the probability assigned to one grid cell.
pub fn quantum_probability(prop: &Propagator, cell: usize) -> Result<f64> {
    let v = prop
        .values()
        .get(cell)
        .ok_or_else(|| Error::domain("cell index", format!("{cell} out of range 0..{}", prop.values().len())))?;
    Ok(v.norm_sqr() * prop.dx())
}
