use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DynamicalModel, PhasePoint};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Kick-drift-kick Störmer–Verlet; separable models only.
    #[default]
    Leapfrog,
    /// Classical fourth-order Runge–Kutta on `(q, p)`.
    Rk4,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Leapfrog => "leapfrog",
            Scheme::Rk4 => "rk4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub n_steps: usize,
}

impl IntegratorConfig {
    pub fn new(scheme: Scheme, dt: f64, n_steps: usize) -> Result<Self> {
        let cfg = Self { scheme, dt, n_steps };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Steps of at most `max_dt` covering exactly `span`; `dt·n_steps`
    /// reproduces `span` to rounding.
    pub fn for_span(scheme: Scheme, span: f64, max_dt: f64) -> Result<Self> {
        if !(span >= 0.0 && span.is_finite()) {
            return Err(Error::domain(
                "span",
                format!("must be non-negative and finite, got {span}"),
            ));
        }
        if !(max_dt > 0.0 && max_dt.is_finite()) {
            return Err(Error::domain(
                "dt",
                format!("must be positive and finite, got {max_dt}"),
            ));
        }
        if span == 0.0 {
            return Self::new(scheme, max_dt, 0);
        }
        // Tolerate spans that are an integer multiple of dt up to rounding.
        let n = ((span / max_dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        Self::new(scheme, span / n as f64, n)
    }

    pub fn span(&self) -> f64 {
        self.dt * self.n_steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::domain(
                "dt",
                format!("must be positive and finite, got {}", self.dt),
            ));
        }
        Ok(())
    }
}

struct Stepper<'a> {
    model: &'a DynamicalModel,
    scheme: Scheme,
    dt: f64,
    buf: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(model: &'a DynamicalModel, cfg: &IntegratorConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.scheme == Scheme::Leapfrog && model.lagrangian().is_none() {
            return Err(Error::UnsupportedScheme {
                scheme: "leapfrog",
                model: model.name().to_string(),
                reason: "requires a separable Hamiltonian (lagrangian form)",
            });
        }
        let n = model.dim();
        Ok(Self {
            model,
            scheme: cfg.scheme,
            dt: cfg.dt,
            buf: vec![0.0; 8 * n],
        })
    }

    fn step(&mut self, t: f64, q: &mut [f64], p: &mut [f64]) {
        match self.scheme {
            Scheme::Leapfrog => self.leapfrog(t, q, p),
            Scheme::Rk4 => self.rk4(t, q, p),
        }
    }

    fn leapfrog(&mut self, _t: f64, q: &mut [f64], p: &mut [f64]) {
        let lf = self.model.lagrangian().expect("checked in Stepper::new");
        let dt = self.dt;
        let inv_m = 1.0 / lf.mass;
        let grad = &mut self.buf[..q.len()];
        lf.potential.gradient(q, grad);
        for (pi, g) in p.iter_mut().zip(grad.iter()) {
            *pi -= 0.5 * dt * g;
        }
        for (qi, pi) in q.iter_mut().zip(p.iter()) {
            *qi += dt * pi * inv_m;
        }
        lf.potential.gradient(q, grad);
        for (pi, g) in p.iter_mut().zip(grad.iter()) {
            *pi -= 0.5 * dt * g;
        }
    }

    fn rk4(&mut self, t: f64, q: &mut [f64], p: &mut [f64]) {
        let n = q.len();
        let dt = self.dt;
        let (stage, rest) = self.buf.split_at_mut(2 * n);
        let (sq, sp) = stage.split_at_mut(n);
        let (k, acc) = rest.split_at_mut(2 * n);
        let (kq, kp) = k.split_at_mut(n);
        let (acc_q, acc_p) = acc.split_at_mut(n);
        let acc_p = &mut acc_p[..n];
        acc_q.fill(0.0);
        acc_p.fill(0.0);
        sq.copy_from_slice(q);
        sp.copy_from_slice(p);
        // (stage time offset, weight, offset of the next stage's input)
        for (c, w, c_next) in [(0.0, 1.0, 0.5), (0.5, 2.0, 0.5), (0.5, 2.0, 1.0), (1.0, 1.0, 0.0)] {
            self.model.rhs_into(t + c * dt, sq, sp, kq, kp);
            for i in 0..n {
                acc_q[i] += w * kq[i];
                acc_p[i] += w * kp[i];
                sq[i] = q[i] + c_next * dt * kq[i];
                sp[i] = p[i] + c_next * dt * kp[i];
            }
        }
        for i in 0..n {
            q[i] += dt * acc_q[i] / 6.0;
            p[i] += dt * acc_p[i] / 6.0;
        }
    }
}

/// Integrates the characteristic equations from `x0`, recording every node.
pub fn integrate_characteristic(model: &DynamicalModel, x0: &PhasePoint, cfg: &IntegratorConfig) -> Result<Trajectory> {
    model.check_point(x0)?;
    if cfg.n_steps == 0 {
        return Err(Error::domain("n_steps", "must be positive to record a trajectory"));
    }
    let mut stepper = Stepper::new(model, cfg)?;
    let n = model.dim();
    let mut q = x0.q.clone();
    let mut p = x0.p.clone();
    let mut nodes = Vec::with_capacity((cfg.n_steps + 1) * n);
    let mut momenta = Vec::with_capacity((cfg.n_steps + 1) * n);
    nodes.extend_from_slice(&q);
    momenta.extend_from_slice(&p);
    for k in 0..cfg.n_steps {
        stepper.step(x0.t + k as f64 * cfg.dt, &mut q, &mut p);
        nodes.extend_from_slice(&q);
        momenta.extend_from_slice(&p);
    }
    if nodes.iter().chain(&momenta).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("integrated trajectory"));
    }
    Trajectory::new(x0.t, cfg.dt, n, nodes)?.with_momenta(momenta)
}

/// Final phase point after `cfg.n_steps` steps, without storing the path.
pub fn evolve(model: &DynamicalModel, x0: &PhasePoint, cfg: &IntegratorConfig) -> Result<PhasePoint> {
    model.check_point(x0)?;
    let mut stepper = Stepper::new(model, cfg)?;
    let mut q = x0.q.clone();
    let mut p = x0.p.clone();
    for k in 0..cfg.n_steps {
        stepper.step(x0.t + k as f64 * cfg.dt, &mut q, &mut p);
    }
    if q.iter().chain(&p).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("evolved phase point"));
    }
    Ok(PhasePoint::new(x0.t + cfg.span(), q, p))
}
