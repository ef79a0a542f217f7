//! One function per subcommand. Each parses its configuration, runs the
//! computation and writes its artifacts.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use trajthermo::dynamics::{loop_1form_integral, loop_invariance_deviation};
use trajthermo::ensemble::{most_probable_path, solve_beta, DistributionSummary};
use trajthermo::quantum::propagator_time_sliced;
use trajthermo::sampler::{anneal_to_classical, metropolis_chain, minimize_action};
use trajthermo::thermo::{
    analogy_table, gas_model, gibbs_path_integrals, gibbs_potential, maxwell_residual, monatomic_cv,
};
use trajthermo::{
    action_of_path, boltzmann_distribution, integrate_characteristic, GasState, IntegratorConfig, McmcConfig,
    OptimizerConfig, PathDistribution, PhaseLoop, PhasePoint, Scheme, SlicingConfig, Trajectory,
};

use crate::config::*;
use crate::error::CliError;
use crate::output::OutputDir;

/// What a command reports back for the manifest.
pub struct RunInfo {
    pub config: serde_json::Value,
    pub seed: u64,
}

fn info<T: Serialize>(cfg: &T, seed: u64) -> RunInfo {
    RunInfo {
        config: serde_json::to_value(cfg).expect("config serialises"),
        seed,
    }
}

fn require(text: Option<&str>) -> Result<&str, CliError> {
    text.ok_or_else(|| CliError::Validation("this command requires --config <path>".into()))
}

pub fn integrate(text: Option<&str>, seed: Option<u64>, out: &mut OutputDir) -> Result<RunInfo, CliError> {
    let cfg: IntegrateConfig = parse(require(text)?)?;
    let model = cfg.model.build()?;
    let step = IntegratorConfig::for_span(cfg.scheme, cfg.span, cfg.dt)?;
    let x0 = PhasePoint::new(cfg.t0, cfg.q0.clone(), cfg.p0.clone());
    let traj = integrate_characteristic(&model, &x0, &step)?;

    let e0 = model.eval_hamiltonian(&x0)?;
    let mut max_abs_drift: f64 = 0.0;
    for k in 0..traj.len() {
        let x = traj.phase_point(k).expect("integrated trajectories carry momenta");
        max_abs_drift = max_abs_drift.max((model.eval_hamiltonian(&x)? - e0).abs());
    }
    let e_final = model.eval_hamiltonian(&traj.phase_point(traj.segments()).expect("momenta"))?;
    let action = model.lagrangian().map(|_| action_of_path(&model, &traj)).transpose()?;
    out.write("trajectory.csv", traj.to_csv().as_bytes())?;
    out.write_json(
        "summary.json",
        &json!({
            "model": model.name(),
            "scheme": step.scheme.name(),
            "dt": step.dt,
            "n_steps": step.n_steps,
            "energy_initial": e0,
            "energy_final": e_final,
            "max_abs_energy_drift": max_abs_drift,
            "max_rel_energy_drift": if e0 != 0.0 { Some(max_abs_drift / e0.abs()) } else { None },
            "action": action,
        }),
    )?;
    Ok(info(&cfg, seed.unwrap_or(0)))
}

pub fn loop_invariant(text: Option<&str>, seed: Option<u64>, out: &mut OutputDir) -> Result<RunInfo, CliError> {
    let cfg: LoopConfig = parse(require(text)?)?;
    let model = cfg.model.build()?;
    let lp = PhaseLoop::circle(
        cfg.t0,
        (cfg.center[0], cfg.center[1]),
        cfg.radius,
        cfg.n_points,
        cfg.counterclockwise,
    )?;
    let step = IntegratorConfig::new(cfg.scheme, cfg.dt, 1)?;
    let before = loop_1form_integral(&model, &lp)?;
    let deviation = loop_invariance_deviation(&model, &lp, cfg.span, &step)?;
    out.write_json(
        "loop.json",
        &json!({
            "model": model.name(),
            "scheme": cfg.scheme.name(),
            "n_points": cfg.n_points,
            "span": cfg.span,
            "integral_initial": before,
            "deviation": deviation,
        }),
    )?;
    Ok(info(&cfg, seed.unwrap_or(0)))
}

fn paths_csv(lattice: &trajthermo::PathLattice, actions: &[f64]) -> Result<String, CliError> {
    let n = lattice.n_slices();
    let mut csv = String::from("index,action");
    for k in 0..=n {
        write!(csv, ",q{k}").unwrap();
    }
    csv.push('\n');
    for (i, a) in actions.iter().enumerate() {
        write!(csv, "{i},{a}").unwrap();
        for v in lattice.path(i)?.nodes_flat() {
            write!(csv, ",{v}").unwrap();
        }
        csv.push('\n');
    }
    Ok(csv)
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

pub fn enumerate(text: Option<&str>, seed: Option<u64>, out: &mut OutputDir) -> Result<RunInfo, CliError> {
    let cfg: EnumerateConfig = parse(require(text)?)?;
    let model = cfg.model.build()?;
    let lattice = cfg.lattice.build()?;
    let actions = lattice.actions(&model)?;
    let best = argmin(&actions);
    out.write("paths.csv", paths_csv(&lattice, &actions)?.as_bytes())?;
    out.write_json(
        "summary.json",
        &json!({
            "n_paths": actions.len(),
            "interior_nodes": lattice.interior_nodes(),
            "levels": lattice.level_values(),
            "argmin_index": best,
            "min_action": actions[best],
        }),
    )?;
    Ok(info(&cfg, seed.unwrap_or(0)))
}

#[derive(Serialize)]
struct EnsembleSummary {
    #[serde(flatten)]
    base: DistributionSummary,
    log_z: Option<f64>,
    alpha: Option<f64>,
    min_action: f64,
    beta_times_min_action: f64,
}

fn write_distribution(dist: &PathDistribution, out: &mut OutputDir) -> Result<(), CliError> {
    let actions = dist.actions();
    let min_action = actions[argmin(actions)];
    let summary = EnsembleSummary {
        base: dist.summary(),
        log_z: dist.log_z(),
        alpha: dist.multipliers().map(|m| m.alpha),
        min_action,
        beta_times_min_action: dist.beta() * min_action,
    };
    let (_, path) = most_probable_path(dist)?;
    out.write("distribution.csv", dist.to_csv().as_bytes())?;
    out.write_json("summary.json", &summary)?;
    out.write("most_probable_path.csv", path.to_csv().as_bytes())?;
    Ok(())
}

pub fn ensemble(text: Option<&str>, seed: Option<u64>, out: &mut OutputDir) -> Result<RunInfo, CliError> {
    let cfg: EnsembleConfig = parse(require(text)?)?;
    let model = cfg.model.build()?;
    let lattice = cfg.lattice.build()?;
    let dist = boltzmann_distribution(&lattice, &model, cfg.beta)?;
    write_distribution(&dist, out)?;
    Ok(info(&cfg, seed.unwrap_or(0)))
}

pub fn solve_beta_cmd(text: Option<&str>, seed: Option<u64>, out: &mut OutputDir) -> Result<RunInfo, CliError> {
    let cfg: SolveBetaConfig = parse(require(text)?)?;
    let model = cfg.model.build()?;
    let lattice = cfg.lattice.build()?;
    let beta = solve_beta(&lattice, &model, cfg.target_mean_action, cfg.tol)?;
    let dist = boltzmann_distribution(&lattice, &model, beta)?;
    out.write_json(
        "solution.json",
        &json!({
            "target_mean_action": cfg.target_mean_action,
            "beta": beta,
            "achieved_mean_action": dist.mean_action(),
        }),
    )?;
    write_distribution(&dist, out)?;
    Ok(info(&cfg, seed.unwrap_or(0)))
}

pub fn sample(text: Option<&str>, seed: Option<u64>, out: &mut OutputDir) -> Result<RunInfo, CliError> {
    let mut cfg: SampleConfig = parse(require(text)?)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let model = cfg.model.build()?;
    let init = cfg.path.straight()?;
    let stats = match &cfg.schedule {
        Some(schedule) => {
            if cfg.beta.is_some() || cfg.n_steps.is_some() {
                return Err(CliError::Validation(
                    "schedule: give either `schedule` or `beta` with `n_steps`, not both".into(),
                ));
            }
            anneal_to_classical(&model, &init, schedule, cfg.seed)?
        }
        None => {
            let beta = cfg.beta.ok_or_else(|| CliError::Validation("beta: missing".into()))?;
            let n_steps = cfg
                .n_steps
                .ok_or_else(|| CliError::Validation("n_steps: missing".into()))?;
            let mut mc = McmcConfig::new(beta, n_steps, cfg.seed)
                .with_burn_in(cfg.burn_in)
                .with_thin(cfg.thin);
            if let Some(w) = cfg.proposal_width {
                mc = mc.with_proposal_width(w);
            }
            metropolis_chain(&model, &init, &mc)?
        }
    };
    out.write("chain.jsonl", stats.trace_jsonl().as_bytes())?;
    out.write_json("stats.json", &stats)?;
    out.write("mean_path.csv", stats.mean_path.to_csv().as_bytes())?;
    out.write("argmin_path.csv", stats.argmin_path.to_csv().as_bytes())?;
    Ok(info(&cfg, cfg.seed))
}

/// Displaces every interior node component of `path` according to `kind`.
fn initial_path(cfg: &MinimizeConfig) -> Result<Trajectory, CliError> {
    let mut path = cfg.path.straight()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let a = cfg.init_amplitude;
    for k in 1..path.segments() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        for v in path.node_mut(k) {
            match cfg.init {
                InitKind::Straight => {}
                InitKind::Zigzag => *v += sign * a,
                InitKind::Random => *v += a * rng.random_range(-1.0..1.0),
            }
        }
    }
    Ok(path)
}

pub fn minimize(text: Option<&str>, seed: Option<u64>, out: &mut OutputDir) -> Result<RunInfo, CliError> {
    let mut cfg: MinimizeConfig = parse(require(text)?)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let model = cfg.model.build()?;
    let init = initial_path(&cfg)?;
    let opt = OptimizerConfig {
        max_iters: cfg.max_iters,
        grad_tol: cfg.grad_tol,
        step_rule: cfg.step_rule(),
    };
    let result = minimize_action(&model, &init, &opt)?;
    out.write("path.csv", result.path.to_csv().as_bytes())?;
    out.write_json(
        "result.json",
        &json!({
            "action": result.action,
            "iterations": result.iterations,
            "gradient_norm": result.gradient_norm,
            "initial_action": action_of_path(&model, &init)?,
        }),
    )?;
    Ok(info(&cfg, cfg.seed))
}

pub fn propagate(text: Option<&str>, seed: Option<u64>, out: &mut OutputDir) -> Result<RunInfo, CliError> {
    let cfg: PropagateConfig = parse(require(text)?)?;
    let model = cfg.model.build()?;
    let mass = model.require_lagrangian("a time-sliced propagator")?.mass;
    let slicing = match (cfg.x_min, cfg.x_max) {
        (Some(lo), Some(hi)) => SlicingConfig::new(cfg.hbar, cfg.n_slices, lo, hi, cfg.n_grid)?,
        (None, None) => SlicingConfig::default_window(
            cfg.hbar,
            mass,
            cfg.t_total,
            cfg.x_start,
            cfg.x_start,
            cfg.n_slices,
            cfg.n_grid,
        )?,
        _ => {
            return Err(CliError::Validation(
                "x_min/x_max: give both window bounds or neither".into(),
            ))
        }
    }
    .with_rule(cfg.rule)
    .with_quadrature(cfg.quadrature);
    let prop = propagator_time_sliced(&model, &slicing, cfg.x_start, cfg.t_total)?;
    if prop.warnings().any() {
        eprintln!("warning: {:?}", prop.warnings());
    }
    out.write("propagator.csv", prop.to_csv().as_bytes())?;
    out.write_json("meta.json", prop.meta())?;
    out.write_json(
        "summary.json",
        &json!({
            "x_start": prop.x_start(),
            "t_total": prop.t_total(),
            "total_probability": prop.total_probability(),
        }),
    )?;
    Ok(info(&cfg, seed.unwrap_or(0)))
}

pub fn thermo(text: Option<&str>, seed: Option<u64>, out: &mut OutputDir) -> Result<RunInfo, CliError> {
    let cfg: ThermoConfig = parse(require(text)?)?;
    let cv = cfg.cv.unwrap_or(monatomic_cv(cfg.n_r));
    let state = GasState::ideal(cfg.state.p, cfg.state.v, cfg.state.s, cfg.n_r, cv)?;
    gas_model(cfg.kind, cfg.n_r, cv)?;
    let step = IntegratorConfig::for_span(Scheme::Rk4, cfg.span, cfg.dt)?;
    let res = maxwell_residual(cfg.kind, cfg.n_r, cv, &state, cfg.span, &step, cfg.h)?;
    out.write_json(
        "residuals.json",
        &json!({
            "kind": cfg.kind.name(),
            "state": state,
            "r1": res.r1,
            "r2": res.r2,
            "r3": res.r3,
            "h0": res.h0,
            "relative_drift": res.relative_drift(),
        }),
    )?;
    if let Some(g) = &cfg.gibbs {
        let from = (g.from[0], g.from[1]);
        let to = (g.to[0], g.to[1]);
        let integrals = gibbs_path_integrals(cfg.n_r, cv, from, to, g.n_intervals)?;
        let exact = gibbs_potential(to.0, to.1, cfg.n_r, cv) - gibbs_potential(from.0, from.1, cfg.n_r, cv);
        let spread = integrals.iter().fold(0.0f64, |m, a| m.max((a - integrals[0]).abs()));
        out.write_json(
            "gibbs.json",
            &json!({
                "from": g.from,
                "to": g.to,
                "path_integrals": integrals,
                "potential_difference": exact,
                "max_path_spread": spread,
            }),
        )?;
    }
    Ok(info(&cfg, seed.unwrap_or(0)))
}

pub fn table(text: Option<&str>, seed: Option<u64>, out: &mut OutputDir) -> Result<RunInfo, CliError> {
    let cfg: TableConfig = match text {
        Some(t) => parse(t)?,
        None => TableConfig::default(),
    };
    let table = analogy_table();
    out.write_json("table.json", &table)?;
    out.write("table.txt", table.to_text().as_bytes())?;
    Ok(info(&cfg, seed.unwrap_or(0)))
}
