//! Time-sliced propagator: repeated application of the short-time kernel
//! to a discrete delta.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{check_hbar, slice_normalization};
use crate::dynamics::ActionRule;
use crate::error::{Error, Result};
use crate::model::{DynamicalModel, LagrangianForm};
use crate::trajectory::fmt_f64;

/// How the interior integrals of each slice are discretised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Quadrature {
    /// Literal finite sum over the output grid nodes.
    OutputGrid,
    /// Sum over an internal grid that refines the output grid by an integer
    /// factor and extends it by a flat `margin` plus an absorbing `taper` on
    /// each side. The refinement keeps the kernel phase step between
    /// neighbouring nodes below `safety·π`.
    Refined {
        #[serde(default)]
        margin: Option<f64>,
        #[serde(default)]
        taper: Option<f64>,
        #[serde(default = "default_safety")]
        safety: f64,
    },
}

fn default_safety() -> f64 {
    0.9
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature::Refined {
            margin: None,
            taper: None,
            safety: default_safety(),
        }
    }
}

fn default_rule() -> ActionRule {
    ActionRule::Trapezoid
}

fn default_hbar() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlicingConfig {
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    pub n_slices: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub n_grid: usize,
    /// Potential rule of the short-time kernel. The trapezoid rule makes the
    /// slice operator a symmetric split step.
    #[serde(default = "default_rule")]
    pub rule: ActionRule,
    #[serde(default)]
    pub quadrature: Quadrature,
}

impl SlicingConfig {
    pub fn new(hbar: f64, n_slices: usize, x_min: f64, x_max: f64, n_grid: usize) -> Result<Self> {
        let cfg = Self {
            hbar,
            n_slices,
            x_min,
            x_max,
            n_grid,
            rule: default_rule(),
            quadrature: Quadrature::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Window `±20·√(ħT/m)` around the midpoint of `x_start` and `x_end`.
    pub fn default_window(
        hbar: f64,
        mass: f64,
        t_total: f64,
        x_start: f64,
        x_end: f64,
        n_slices: usize,
        n_grid: usize,
    ) -> Result<Self> {
        let half = 20.0 * (hbar * t_total / mass).sqrt();
        let mid = 0.5 * (x_start + x_end);
        Self::new(hbar, n_slices, mid - half, mid + half, n_grid)
    }

    pub fn with_rule(mut self, rule: ActionRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_quadrature(mut self, quadrature: Quadrature) -> Self {
        self.quadrature = quadrature;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_hbar(self.hbar)?;
        if self.n_slices == 0 {
            return Err(Error::domain("n_slices", "must be at least 1"));
        }
        if !(self.x_min < self.x_max) || !self.x_min.is_finite() || !self.x_max.is_finite() {
            return Err(Error::domain(
                "window",
                format!("x_min must be below x_max, got [{}, {}]", self.x_min, self.x_max),
            ));
        }
        if self.n_grid < 2 {
            return Err(Error::domain(
                "n_grid",
                format!("must be at least 2, got {}", self.n_grid),
            ));
        }
        if let Quadrature::Refined { margin, taper, safety } = self.quadrature {
            for (name, v) in [("margin", margin), ("taper", taper)] {
                if let Some(v) = v {
                    if !(v >= 0.0 && v.is_finite()) {
                        return Err(Error::domain(name, format!("must be finite and ≥ 0, got {v}")));
                    }
                }
            }
            if !(safety > 0.0 && safety <= 1.0) {
                return Err(Error::domain("safety", format!("must lie in (0, 1], got {safety}")));
            }
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_grid - 1) as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warnings {
    /// `dx² > ħ·dt/m` on the output grid.
    pub under_resolved: bool,
    /// Kernel phase step between neighbouring quadrature nodes exceeds π.
    pub aliased: bool,
    /// `x_start` was moved to the nearest grid node.
    pub x_start_snapped: bool,
}

impl Warnings {
    pub fn any(&self) -> bool {
        self.under_resolved || self.aliased || self.x_start_snapped
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagatorMeta {
    pub hbar: f64,
    #[serde(rename = "N")]
    pub n_slices: usize,
    pub dt: f64,
    pub dx: f64,
    pub window: [f64; 2],
    pub rule: ActionRule,
    pub quadrature: Quadrature,
    pub internal_dx: f64,
    pub internal_window: [f64; 2],
    pub refinement: usize,
    pub warnings: Warnings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    config: SlicingConfig,
    t_total: f64,
    x_start: f64,
    values: Vec<Complex64>,
    meta: PropagatorMeta,
}

impl Propagator {
    pub fn config(&self) -> &SlicingConfig {
        &self.config
    }

    pub fn t_total(&self) -> f64 {
        self.t_total
    }

    /// Start point actually used (a grid node).
    pub fn x_start(&self) -> f64 {
        self.x_start
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn dx(&self) -> f64 {
        self.config.dx()
    }

    pub fn x(&self, j: usize) -> f64 {
        self.config.x(j)
    }

    /// Index of the grid node nearest to `x`.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        nearest_node(&self.config, x)
    }

    pub fn value_at(&self, x: f64) -> Option<Complex64> {
        self.index_of(x).map(|j| self.values[j])
    }

    pub fn warnings(&self) -> Warnings {
        self.meta.warnings
    }

    pub fn meta(&self) -> &PropagatorMeta {
        &self.meta
    }

    /// `Σ |K|²·dx` over the window.
    pub fn total_probability(&self) -> f64 {
        let dx = self.dx();
        crate::numeric::pairwise_sum_by(self.values.len(), |j| self.values[j].norm_sqr() * dx)
    }

    /// CSV `x,re,im,abs2` over the output grid.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,re,im,abs2\n");
        for (j, v) in self.values.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(self.x(j)),
                fmt_f64(v.re),
                fmt_f64(v.im),
                fmt_f64(v.norm_sqr())
            )
            .unwrap();
        }
        out
    }
}

fn nearest_node(cfg: &SlicingConfig, x: f64) -> Option<usize> {
    let s = (x - cfg.x_min) / cfg.dx();
    if !(s > -0.5 && s < cfg.n_grid as f64 - 0.5) {
        return None;
    }
    Some((s.round() as usize).min(cfg.n_grid - 1))
}

enum Potential {
    /// `exp(−iV(x_j)·dt/(2ħ))` on every node.
    Split(Vec<Complex64>),
    /// `exp(−iV((x_i + x_j)/2)·dt/ħ)` indexed by `i + j`.
    Midpoint(Vec<Complex64>),
}

struct Circulant {
    len: usize,
    spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// One short-time kernel on a uniform node set `x_0 + i·dx`, `i < n`.
struct SliceOperator {
    n: usize,
    /// `exp(i·m·(d·dx)²/(2ħ·dt))` for `d < n`.
    kinetic: Vec<Complex64>,
    potential: Potential,
    /// `A·dx`
    scale: Complex64,
    circulant: Option<Circulant>,
}

impl SliceOperator {
    #[allow(clippy::too_many_arguments)]
    fn new(
        lf: &LagrangianForm,
        hbar: f64,
        dt: f64,
        x0: f64,
        dx: f64,
        n: usize,
        rule: ActionRule,
        use_fft: bool,
    ) -> Result<Self> {
        let m = lf.mass;
        let kinetic: Vec<Complex64> = (0..n)
            .map(|d| {
                let s = d as f64 * dx;
                Complex64::cis(m * s * s / (2.0 * hbar * dt))
            })
            .collect();
        let potential = match rule {
            ActionRule::Trapezoid => Potential::Split(
                (0..n)
                    .map(|i| lf.potential.value(&[x0 + i as f64 * dx]))
                    .map(|v| Complex64::cis(-v * dt / (2.0 * hbar)))
                    .collect(),
            ),
            ActionRule::Midpoint => Potential::Midpoint(
                (0..2 * n - 1)
                    .map(|s| lf.potential.value(&[x0 + 0.5 * s as f64 * dx]))
                    .map(|v| Complex64::cis(-v * dt / hbar))
                    .collect(),
            ),
        };
        let table = match &potential {
            Potential::Split(v) | Potential::Midpoint(v) => v,
        };
        if table.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("potential on the propagator grid"));
        }
        let circulant = match (&potential, use_fft) {
            (Potential::Split(_), true) => Some(Circulant::new(&kinetic)),
            _ => None,
        };
        Ok(Self {
            n,
            kinetic,
            potential,
            scale: slice_normalization(m, hbar, dt) * dx,
            circulant,
        })
    }

    fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        match (&self.potential, &self.circulant) {
            (Potential::Split(d), Some(c)) => {
                let u: Vec<Complex64> = psi.iter().zip(d).map(|(p, w)| p * w).collect();
                let conv = c.apply(&u);
                conv.iter().zip(d).map(|(v, w)| self.scale * w * v).collect()
            }
            (Potential::Split(d), None) => {
                let u: Vec<Complex64> = psi.iter().zip(d).map(|(p, w)| p * w).collect();
                (0..self.n)
                    .into_par_iter()
                    .map(|i| self.scale * d[i] * self.toeplitz_row(i, |j| u[j]))
                    .collect()
            }
            (Potential::Midpoint(h), _) => (0..self.n)
                .into_par_iter()
                .map(|i| self.scale * self.toeplitz_row(i, |j| h[i + j] * psi[j]))
                .collect(),
        }
    }

    #[inline]
    fn toeplitz_row(&self, i: usize, v: impl Fn(usize) -> Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..i {
            acc += self.kinetic[i - j] * v(j);
        }
        for j in i..self.n {
            acc += self.kinetic[j - i] * v(j);
        }
        acc
    }
}

impl Circulant {
    /// Embeds the symmetric Toeplitz matrix with first column `col` into a
    /// circulant of power-of-two size.
    fn new(col: &[Complex64]) -> Self {
        let n = col.len();
        let len = (2 * n - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let mut spectrum = vec![Complex64::new(0.0, 0.0); len];
        spectrum[..n].copy_from_slice(col);
        for d in 1..n {
            spectrum[len - d] = col[d];
        }
        forward.process(&mut spectrum);
        let inv = 1.0 / len as f64;
        spectrum.iter_mut().for_each(|z| *z *= inv);
        Self {
            len,
            spectrum,
            forward,
            inverse,
        }
    }

    fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len];
        buf[..v.len()].copy_from_slice(v);
        self.forward.process(&mut buf);
        buf.iter_mut().zip(&self.spectrum).for_each(|(b, s)| *b *= s);
        self.inverse.process(&mut buf);
        buf.truncate(v.len());
        buf
    }
}

/// Internal quadrature grid and the output nodes embedded in it.
struct Layout {
    x0: f64,
    dx: f64,
    n: usize,
    /// Internal index of output node 0.
    offset: usize,
    refinement: usize,
    taper: Option<Vec<f64>>,
}

impl Layout {
    fn build(cfg: &SlicingConfig, mass: f64, dt: f64, t_total: f64) -> Self {
        let dx_out = cfg.dx();
        match cfg.quadrature {
            Quadrature::OutputGrid => Self {
                x0: cfg.x_min,
                dx: dx_out,
                n: cfg.n_grid,
                offset: 0,
                refinement: 1,
                taper: None,
            },
            Quadrature::Refined { margin, taper, safety } => {
                let width = cfg.x_max - cfg.x_min;
                let pad = (0.25 * width).max(10.0 * (cfg.hbar * t_total / mass).sqrt());
                let margin = margin.unwrap_or(pad);
                let taper_len = taper.unwrap_or(pad);
                let span = width + 2.0 * (margin + taper_len);
                let dx_max = safety * PI * cfg.hbar * dt / (mass * span);
                let refinement = ((dx_out / dx_max).ceil() as usize).max(1);
                let dx = dx_out / refinement as f64;
                let ext = ((margin + taper_len) / dx).ceil() as usize;
                let n = (cfg.n_grid - 1) * refinement + 1 + 2 * ext;
                let x0 = cfg.x_min - ext as f64 * dx;
                let (flat_lo, flat_hi) = (cfg.x_min - margin, cfg.x_max + margin);
                let weights = (0..n)
                    .map(|i| {
                        let x = x0 + i as f64 * dx;
                        let d = (flat_lo - x).max(x - flat_hi).max(0.0);
                        if d == 0.0 {
                            1.0
                        } else if taper_len == 0.0 {
                            0.0
                        } else {
                            (0.5 * PI * (d / taper_len).min(1.0)).cos().powi(2)
                        }
                    })
                    .collect();
                Self {
                    x0,
                    dx,
                    n,
                    offset: ext,
                    refinement,
                    taper: Some(weights),
                }
            }
        }
    }

    fn output_index(&self, j: usize) -> usize {
        self.offset + j * self.refinement
    }
}

fn lagrangian_1d<'a>(model: &'a DynamicalModel, what: &'static str) -> Result<&'a LagrangianForm> {
    let lf = model.require_lagrangian(what)?;
    if model.dim() != 1 {
        return Err(Error::DimensionMismatch {
            what: "propagator model",
            expected: 1,
            got: model.dim(),
        });
    }
    Ok(lf)
}

/// `K(x, T | x_start, 0)` on the output grid of `cfg`.
///
/// The start is a discrete delta of mass one at the grid node nearest to
/// `x_start`. With [`Quadrature::Refined`] and the trapezoid rule each slice
/// is an FFT convolution; other combinations use the dense kernel.
pub fn propagator_time_sliced(
    model: &DynamicalModel,
    cfg: &SlicingConfig,
    x_start: f64,
    t_total: f64,
) -> Result<Propagator> {
    cfg.validate()?;
    let lf = lagrangian_1d(model, "a time-sliced propagator")?;
    if !(t_total > 0.0 && t_total.is_finite()) {
        return Err(Error::domain("t_total", format!("must be positive, got {t_total}")));
    }
    let j0 = nearest_node(cfg, x_start).ok_or_else(|| {
        Error::domain(
            "x_start",
            format!("{x_start} lies outside [{}, {}]", cfg.x_min, cfg.x_max),
        )
    })?;
    let snapped = cfg.x(j0);
    let dt = t_total / cfg.n_slices as f64;
    let layout = Layout::build(cfg, lf.mass, dt, t_total);
    let use_fft = matches!(cfg.quadrature, Quadrature::Refined { .. });
    let op = SliceOperator::new(lf, cfg.hbar, dt, layout.x0, layout.dx, layout.n, cfg.rule, use_fft)?;

    let mut psi = vec![Complex64::new(0.0, 0.0); layout.n];
    psi[layout.output_index(j0)] = Complex64::new(1.0 / layout.dx, 0.0);
    for _ in 0..cfg.n_slices {
        psi = op.apply(&psi);
        if let Some(w) = &layout.taper {
            psi.iter_mut().zip(w).for_each(|(p, w)| *p *= w);
        }
    }
    let values: Vec<Complex64> = (0..cfg.n_grid).map(|j| psi[layout.output_index(j)]).collect();
    if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("propagator values"));
    }

    let span = (layout.n - 1) as f64 * layout.dx;
    let warnings = Warnings {
        under_resolved: cfg.dx() * cfg.dx() > cfg.hbar * dt / lf.mass,
        aliased: lf.mass * span * layout.dx / (cfg.hbar * dt) > PI,
        x_start_snapped: (snapped - x_start).abs() > 1e-9 * cfg.dx(),
    };
    let meta = PropagatorMeta {
        hbar: cfg.hbar,
        n_slices: cfg.n_slices,
        dt,
        dx: cfg.dx(),
        window: [cfg.x_min, cfg.x_max],
        rule: cfg.rule,
        quadrature: cfg.quadrature,
        internal_dx: layout.dx,
        internal_window: [layout.x0, layout.x0 + span],
        refinement: layout.refinement,
        warnings,
    };
    Ok(Propagator {
        config: *cfg,
        t_total,
        x_start: snapped,
        values,
        meta,
    })
}

/// One dense kernel application `ψ'(x') = Σ_x dx·A·e^{iS(x,x')/ħ}·ψ(x)` on
/// the output grid of `cfg` with time step `dt`.
pub fn apply_slice(model: &DynamicalModel, cfg: &SlicingConfig, psi: &[Complex64], dt: f64) -> Result<Vec<Complex64>> {
    cfg.validate()?;
    let lf = lagrangian_1d(model, "a kernel application")?;
    if psi.len() != cfg.n_grid {
        return Err(Error::DimensionMismatch {
            what: "wavefunction",
            expected: cfg.n_grid,
            got: psi.len(),
        });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::domain("dt", format!("must be positive, got {dt}")));
    }
    let op = SliceOperator::new(lf, cfg.hbar, dt, cfg.x_min, cfg.dx(), cfg.n_grid, cfg.rule, false)?;
    Ok(op.apply(psi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::PathLattice;
    use crate::quantum::{analytic_propagator, propagator_lattice_sum_with_rule, quantum_probability, PropagatorKind};
    use std::f64::consts::FRAC_PI_2;

    fn free() -> DynamicalModel {
        DynamicalModel::free_particle(1.0).unwrap()
    }

    #[test]
    fn single_slice_is_the_kernel() {
        for quad in [Quadrature::OutputGrid, Quadrature::default()] {
            let cfg = SlicingConfig::new(1.0, 1, -5.0, 5.0, 101)
                .unwrap()
                .with_quadrature(quad);
            let prop = propagator_time_sliced(&free(), &cfg, 0.0, 0.7).unwrap();
            for j in [0, 37, 50, 100] {
                let x = prop.x(j);
                let want = slice_normalization(1.0, 1.0, 0.7) * Complex64::cis(x * x / (2.0 * 0.7));
                assert!((prop.values()[j] - want).norm() < 1e-13, "{quad:?} {j}");
            }
        }
    }

    #[test]
    fn free_particle_matches_closed_form() {
        let cfg = SlicingConfig::new(1.0, 10, -20.0, 20.0, 2001).unwrap();
        let prop = propagator_time_sliced(&free(), &cfg, 0.0, 1.0).unwrap();
        assert!(!prop.warnings().any());
        for dx in [0.0, 1.0, 2.0] {
            let got = prop.value_at(dx).unwrap();
            let want = analytic_propagator(PropagatorKind::Free, 1.0, 0.0, 1.0, 0.0, dx, 1.0)
                .unwrap()
                .to_complex();
            assert!((got.norm() / want.norm() - 1.0).abs() < 1e-3);
            let dphi = (got / want).arg();
            assert!(dphi.abs() < 2e-2);
        }
        // |K|² = 1/(2π) everywhere on the window, so the cell sum is ~ 40/(2π).
        let total = prop.total_probability();
        assert!((total / (40.0 / (2.0 * PI)) - 1.0).abs() < 1e-3, "{total}");
    }

    #[test]
    fn oscillator_converges_at_second_order() {
        let ho = DynamicalModel::harmonic_oscillator(1.0, 1.0).unwrap();
        let exact = analytic_propagator(PropagatorKind::Oscillator, 1.0, 1.0, 1.0, 0.0, 0.0, FRAC_PI_2)
            .unwrap()
            .norm();
        let err = |n| {
            let cfg = SlicingConfig::default_window(1.0, 1.0, FRAC_PI_2, 0.0, 0.0, n, 201).unwrap();
            (propagator_time_sliced(&ho, &cfg, 0.0, FRAC_PI_2)
                .unwrap()
                .value_at(0.0)
                .unwrap()
                .norm()
                - exact)
                .abs()
        };
        let (e64, e128) = (err(64), err(128));
        assert!(e128 < 1e-2);
        let ratio = e64 / e128;
        assert!((2.5..=6.0).contains(&ratio), "{e64} {e128} {ratio}");
    }

    #[test]
    fn lattice_sum_equals_output_grid_slicing() {
        let model = DynamicalModel::polynomial(1.3, vec![0.0, 0.2, 0.5, 0.0, 0.1]).unwrap();
        for rule in [ActionRule::Midpoint, ActionRule::Trapezoid] {
            let lat = PathLattice::new(4, 0.3, 5, 0.25, 0.0, 0.0).unwrap();
            let cfg = SlicingConfig::new(0.7, 4, -0.5, 0.5, 5)
                .unwrap()
                .with_rule(rule)
                .with_quadrature(Quadrature::OutputGrid);
            let sliced = propagator_time_sliced(&model, &cfg, 0.0, 1.2)
                .unwrap()
                .value_at(0.0)
                .unwrap();
            let summed = propagator_lattice_sum_with_rule(&lat, &model, 0.7, rule)
                .unwrap()
                .to_complex();
            assert!(
                (sliced - summed).norm() <= 1e-12 * summed.norm(),
                "{rule:?}: {sliced} vs {summed}"
            );
        }
    }

    #[test]
    fn one_step_conserves_norm() {
        let cfg = SlicingConfig::new(1.0, 1, -20.0, 20.0, 2001)
            .unwrap()
            .with_quadrature(Quadrature::OutputGrid);
        let dt = 0.5;
        assert!(cfg.dx() * cfg.dx() <= dt / 10.0);
        let psi: Vec<Complex64> = (0..cfg.n_grid)
            .map(|j| {
                let x = cfg.x(j);
                Complex64::from_polar((-x * x / 2.0).exp() / PI.powf(0.25), 0.8 * x)
            })
            .collect();
        let before: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * cfg.dx();
        let after: f64 = apply_slice(&free(), &cfg, &psi, dt)
            .unwrap()
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            * cfg.dx();
        assert!((after / before - 1.0).abs() < 1e-3, "{before} {after}");
    }

    #[test]
    fn cell_probability() {
        let cfg = SlicingConfig::new(1.0, 1, -1.0, 1.0, 21).unwrap();
        let prop = propagator_time_sliced(&free(), &cfg, 0.0, 1.0).unwrap();
        let p = quantum_probability(&prop, 3).unwrap();
        assert!((p - 0.1 / (2.0 * PI)).abs() < 1e-15);
        assert!(quantum_probability(&prop, 21).is_err());
        let mut zero = prop.clone();
        zero.values[4] = Complex64::new(0.0, 0.0);
        assert_eq!(quantum_probability(&zero, 4).unwrap(), 0.0);
        zero.values[5] = Complex64::new(0.6, 0.8);
        assert!((quantum_probability(&zero, 5).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn warnings_and_errors() {
        let coarse = SlicingConfig::new(1.0, 10, -20.0, 20.0, 41)
            .unwrap()
            .with_quadrature(Quadrature::OutputGrid);
        let prop = propagator_time_sliced(&free(), &coarse, 0.3, 1.0).unwrap();
        let w = prop.warnings();
        assert!(w.under_resolved && w.aliased && w.x_start_snapped);
        assert_eq!(prop.x_start(), 0.0);
        assert!(propagator_time_sliced(&free(), &coarse, 25.0, 1.0).is_err());
        assert!(propagator_time_sliced(&free(), &coarse, 0.0, 0.0).is_err());
        assert!(SlicingConfig::new(1.0, 0, -1.0, 1.0, 3).is_err());
        assert!(SlicingConfig::new(1.0, 1, 1.0, 1.0, 3).is_err());
        assert!(SlicingConfig::new(0.0, 1, -1.0, 1.0, 3).is_err());
    }

    #[test]
    fn csv_and_meta() {
        let cfg = SlicingConfig::new(1.0, 2, -1.0, 1.0, 3).unwrap();
        let prop = propagator_time_sliced(&free(), &cfg, 0.0, 1.0).unwrap();
        let csv = prop.to_csv();
        assert!(csv.starts_with("x,re,im,abs2\n-1.0000000000000000e0,"));
        assert_eq!(csv.lines().count(), 4);
        let meta = serde_json::to_value(prop.meta()).unwrap();
        assert_eq!(meta["N"], 2);
        assert_eq!(meta["quadrature"]["mode"], "refined");
    }
}
