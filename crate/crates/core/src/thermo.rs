//! Ideal-gas thermodynamics written as Hamiltonian flows.
//!
//! Two characteristic systems are modelled. In the adiabatic case entropy is
//! the order parameter, volume the coordinate and pressure the momentum, with
//! temperature `T = pV/nR` as the Hamiltonian. In the second case temperature
//! is the order parameter, pressure the coordinate and volume the momentum,
//! with the entropy `S = c_v ln p + c_p ln V` as the Hamiltonian. Both flows
//! conserve their Hamiltonian, which is what the Maxwell-relation residuals
//! check numerically.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate_characteristic, IntegratorConfig, Scheme};
use crate::error::{Error, Result};
use crate::model::{DynamicalModel, PhasePoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasState {
    pub p: f64,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "nR")]
    pub n_r: f64,
    pub cv: f64,
}

impl GasState {
    /// State with `T = pV/nR`.
    pub fn ideal(p: f64, v: f64, s: f64, n_r: f64, cv: f64) -> Result<Self> {
        check_gas(n_r, cv)?;
        if !(v > 0.0) {
            return Err(Error::domain("V", format!("must be positive, got {v}")));
        }
        let t = p * v / n_r;
        if !(t > 0.0) {
            return Err(Error::domain("T", format!("must be positive, got {t}")));
        }
        Ok(Self { p, v, s, t, n_r, cv })
    }

    /// `|T − pV/nR| / T`
    pub fn ideal_gas_residual(&self) -> f64 {
        (self.t - self.p * self.v / self.n_r).abs() / self.t.abs()
    }
}

/// `f = pV − ST`
pub fn td_characteristic(state: &GasState) -> f64 {
    state.p * state.v - state.s * state.t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GasModelKind {
    /// Order parameter S, coordinate V, momentum p, H = T(p, V).
    Adiabatic,
    /// Order parameter T, coordinate p, momentum V, H = S(V, p). The flow is
    /// isentropic although the transition is traditionally called isothermal.
    IsothermalNamed,
}

impl GasModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            GasModelKind::Adiabatic => "adiabatic",
            GasModelKind::IsothermalNamed => "isothermal_named",
        }
    }

    /// `(t, q, p)` of a gas state in this model's phase space.
    pub fn phase_point(&self, state: &GasState) -> PhasePoint {
        match self {
            GasModelKind::Adiabatic => PhasePoint::scalar(state.s, state.v, state.p),
            GasModelKind::IsothermalNamed => PhasePoint::scalar(state.t, state.p, state.v),
        }
    }
}

fn check_gas(n_r: f64, cv: f64) -> Result<()> {
    if !(n_r > 0.0 && n_r.is_finite()) {
        return Err(Error::domain("nR", format!("must be positive, got {n_r}")));
    }
    if !(cv > 0.0 && cv.is_finite()) {
        return Err(Error::domain("cv", format!("must be positive, got {cv}")));
    }
    Ok(())
}

/// Default heat capacity of a monatomic gas, `3/2·nR`.
pub fn monatomic_cv(n_r: f64) -> f64 {
    1.5 * n_r
}

pub fn gas_model(kind: GasModelKind, n_r: f64, cv: f64) -> Result<DynamicalModel> {
    check_gas(n_r, cv)?;
    let model = match kind {
        GasModelKind::Adiabatic => {
            let inv = 1.0 / n_r;
            DynamicalModel::new(kind.name(), 1, move |_, v, p| p[0] * v[0] * inv)?
                .with_dh_dq(move |_, _, p, out| out[0] = p[0] * inv)
                .with_dh_dp(move |_, v, _, out| out[0] = v[0] * inv)
        }
        GasModelKind::IsothermalNamed => {
            let cp = cv + n_r;
            DynamicalModel::new(kind.name(), 1, move |_, p, v| cv * p[0].ln() + cp * v[0].ln())?
                .with_dh_dq(move |_, p, _, out| out[0] = cv / p[0])
                .with_dh_dp(move |_, _, v, out| out[0] = cp / v[0])
        }
    };
    Ok(model.with_dh_dt(|_, _, _| 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxwellResiduals {
    /// `max |dq/ds − ∂H/∂p|`
    pub r1: f64,
    /// `max |dp/ds + ∂H/∂q|`
    pub r2: f64,
    /// `max |H − H_0|`
    pub r3: f64,
    /// `H_0`, for turning `r3` into a relative drift.
    pub h0: f64,
}

impl MaxwellResiduals {
    /// `r3 / max(|H_0|, 1)`.
    pub fn relative_drift(&self) -> f64 {
        self.r3 / self.h0.abs().max(1.0)
    }
}

/// Integrates a gas flow with RK4 and measures how well the trajectory
/// satisfies its characteristic equations.
///
/// Flow derivatives are fourth-order centred differences along the
/// trajectory, taken at every node where the five-point stencil fits (the
/// three-point stencil on trajectories shorter than five nodes). Hamiltonian
/// partials are centred differences with step `h`.
pub fn maxwell_residual(
    kind: GasModelKind,
    n_r: f64,
    cv: f64,
    state0: &GasState,
    span: f64,
    cfg: &IntegratorConfig,
    h: f64,
) -> Result<MaxwellResiduals> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::domain("h", format!("must be positive, got {h}")));
    }
    if cfg.scheme != Scheme::Rk4 {
        return Err(Error::UnsupportedScheme {
            scheme: cfg.scheme.name(),
            model: kind.name().to_string(),
            reason: "gas flows are not separable; use rk4",
        });
    }
    if !(span >= 0.0 && span.is_finite()) {
        return Err(Error::domain("span", format!("must be finite and ≥ 0, got {span}")));
    }
    let model = gas_model(kind, n_r, cv)?;
    let x0 = kind.phase_point(state0);
    let h0 = model.eval_hamiltonian(&x0)?;
    if span == 0.0 {
        return Ok(MaxwellResiduals {
            r1: 0.0,
            r2: 0.0,
            r3: 0.0,
            h0,
        });
    }
    let cfg = IntegratorConfig::for_span(Scheme::Rk4, span, cfg.dt)?;
    let traj = integrate_characteristic(&model, &x0, &cfg)?;
    let ham = |s: f64, q: f64, p: f64| model.eval_hamiltonian(&PhasePoint::scalar(s, q, p));
    let dt = traj.dt();
    let n = traj.len();
    let q_at = |k: usize| traj.node(k)[0];
    let p_at = |k: usize| traj.momentum(k).unwrap()[0];
    let wide = n >= 5;
    let reach = if wide { 2 } else { 1 };
    let deriv = |f: &dyn Fn(usize) -> f64, k: usize| {
        if wide {
            (f(k - 2) - 8.0 * f(k - 1) + 8.0 * f(k + 1) - f(k + 2)) / (12.0 * dt)
        } else {
            (f(k + 1) - f(k - 1)) / (2.0 * dt)
        }
    };
    let (mut r1, mut r2, mut r3) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..n {
        let (s, q, p) = (traj.time(k), q_at(k), p_at(k));
        r3 = r3.max((ham(s, q, p)? - h0).abs());
        if k < reach || k + reach >= n {
            continue;
        }
        let dq = deriv(&q_at, k);
        let dp = deriv(&p_at, k);
        let h_p = (ham(s, q, p + h)? - ham(s, q, p - h)?) / (2.0 * h);
        let h_q = (ham(s, q + h, p)? - ham(s, q - h, p)?) / (2.0 * h);
        r1 = r1.max((dq - h_p).abs());
        r2 = r2.max((dp + h_q).abs());
    }
    if !(r1.is_finite() && r2.is_finite() && r3.is_finite()) {
        return Err(Error::NonFinite("Maxwell residuals"));
    }
    Ok(MaxwellResiduals { r1, r2, r3, h0 })
}

/// `p·V^(c_p/c_v)`, constant along the isentropic flow.
pub fn isentrope_invariant(p: f64, v: f64, n_r: f64, cv: f64) -> f64 {
    p * v.powf((cv + n_r) / cv)
}

/// Entropy `c_v ln p + c_p ln(nR·T/p)` with the additive constant set to 0.
pub fn ideal_entropy(t: f64, p: f64, n_r: f64, cv: f64) -> f64 {
    cv * p.ln() + (cv + n_r) * (n_r * t / p).ln()
}

/// Closed-form Gibbs potential with `dG = V dp − S dT`, up to a constant.
pub fn gibbs_potential(t: f64, p: f64, n_r: f64, cv: f64) -> f64 {
    let cp = cv + n_r;
    -cv * t * p.ln() - cp * t * ((n_r * t / p).ln() - 1.0)
}

/// `∫ (V dp − S dT)` from `from = (T, p)` to `to` along three different
/// paths: p-leg then T-leg, T-leg then p-leg, and a curved path that bulges
/// off the straight line. Each is integrated with composite Simpson on
/// `n_intervals` (rounded up to even) per leg.
pub fn gibbs_path_integrals(
    n_r: f64,
    cv: f64,
    from: (f64, f64),
    to: (f64, f64),
    n_intervals: usize,
) -> Result<[f64; 3]> {
    check_gas(n_r, cv)?;
    for (t, p) in [from, to] {
        if !(t > 0.0 && p > 0.0) {
            return Err(Error::domain(
                "state",
                format!("T and p must be positive, got ({t}, {p})"),
            ));
        }
    }
    let n = n_intervals.max(2).div_ceil(2) * 2;
    let (t1, p1) = from;
    let (t2, p2) = to;
    // A path is (T(u), p(u), T'(u), p'(u)) on u ∈ [0, 1].
    let integrate = |path: &dyn Fn(f64) -> (f64, f64, f64, f64)| {
        simpson(n, |u| {
            let (t, p, dt, dp) = path(u);
            n_r * t / p * dp - ideal_entropy(t, p, n_r, cv) * dt
        })
    };
    let lerp = |a: f64, b: f64, u: f64| a + (b - a) * u;
    let pressure_first =
        integrate(&|u| (t1, lerp(p1, p2, u), 0.0, p2 - p1)) + integrate(&|u| (lerp(t1, t2, u), p2, t2 - t1, 0.0));
    let temperature_first =
        integrate(&|u| (lerp(t1, t2, u), p1, t2 - t1, 0.0)) + integrate(&|u| (t2, lerp(p1, p2, u), 0.0, p2 - p1));
    // Straight line plus a sine bump in both coordinates, kept positive.
    let bump_t = 0.25 * t1.min(t2);
    let bump_p = 0.25 * p1.min(p2);
    let pi = std::f64::consts::PI;
    let curved = integrate(&|u| {
        let (s, c) = (pi * u).sin_cos();
        (
            lerp(t1, t2, u) + bump_t * s,
            lerp(p1, p2, u) - bump_p * s,
            t2 - t1 + bump_t * pi * c,
            p2 - p1 - bump_p * pi * c,
        )
    });
    Ok([pressure_first, temperature_first, curved])
}

fn simpson(n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = 1.0 / n as f64;
    let inner: f64 = (1..n)
        .map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h))
        .sum();
    (f(0.0) + inner + f(1.0)) * h / 3.0
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalogyEntry {
    pub name: String,
    pub symbol: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalogyRow {
    pub quantity: String,
    pub adiabatic_free_expansion: AnalogyEntry,
    pub isothermal_reversible_transition: AnalogyEntry,
    pub statistical_dynamics_of_paths: AnalogyEntry,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalogyTable {
    pub title: String,
    pub columns: [String; 3],
    pub rows: Vec<AnalogyRow>,
}

/// Correspondence between the two gas transitions and path dynamics.
pub fn analogy_table() -> AnalogyTable {
    let e = |name: &str, symbol: &str| AnalogyEntry {
        name: name.to_string(),
        symbol: symbol.to_string(),
    };
    let row = |quantity: &str, a: AnalogyEntry, b: AnalogyEntry, c: AnalogyEntry| AnalogyRow {
        quantity: quantity.to_string(),
        adiabatic_free_expansion: a,
        isothermal_reversible_transition: b,
        statistical_dynamics_of_paths: c,
    };
    AnalogyTable {
        title: "Analogies between isothermal reversible thermodynamics and statistical dynamics of particle paths"
            .to_string(),
        columns: [
            "adiabatic free expansion".to_string(),
            "isothermal reversible transition".to_string(),
            "statistical dynamics of paths".to_string(),
        ],
        rows: vec![
            row(
                "Order parameter",
                e("entropy", "S"),
                e("temperature", "T"),
                e("time", "t"),
            ),
            row(
                "Momentum vector",
                e("pressure", "p"),
                e("volume", "V"),
                e("momentum", "π"),
            ),
            row(
                "Space coordinate",
                e("volume", "V"),
                e("pressure", "p"),
                e("position", "γ(t)"),
            ),
            row(
                "Hamiltonian",
                e("temperature", "T"),
                e("entropy", "S"),
                e("Hamiltonian", "ℋ"),
            ),
            row(
                "Lagrangian",
                e("internal energy", "−dU = p dV − T dS"),
                e("Gibbs free energy", "dG = V dp − S dT"),
                e("Lagrangian", "ℒdt = π dγ − ℋ dt"),
            ),
        ],
    }
}

impl AnalogyTable {
    /// Fixed-width text rendering.
    pub fn to_text(&self) -> String {
        let cell = |e: &AnalogyEntry| format!("{}: {}", e.name, e.symbol);
        let mut grid: Vec<[String; 4]> = vec![[
            String::new(),
            self.columns[0].clone(),
            self.columns[1].clone(),
            self.columns[2].clone(),
        ]];
        for r in &self.rows {
            grid.push([
                r.quantity.clone(),
                cell(&r.adiabatic_free_expansion),
                cell(&r.isothermal_reversible_transition),
                cell(&r.statistical_dynamics_of_paths),
            ]);
        }
        let widths: Vec<usize> = (0..4)
            .map(|c| grid.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = format!("{}\n\n", self.title);
        for (i, r) in grid.iter().enumerate() {
            let line: Vec<String> = r
                .iter()
                .zip(&widths)
                .map(|(s, w)| format!("{s}{}", " ".repeat(w - s.chars().count())))
                .collect();
            writeln!(out, "{}", line.join(" | ").trim_end()).unwrap();
            if i == 0 {
                let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
                writeln!(out, "{}", rule.join("-+-")).unwrap();
            }
        }
        out
    }
}
