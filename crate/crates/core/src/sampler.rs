//! Monte Carlo sampling of the continuous path ensemble and deterministic
//! action minimisation.
//!
//! The chain targets `exp(−β I[q])` over the interior nodes of a discretised
//! path with fixed endpoints. Each update moves one randomly chosen interior
//! node, so only the two adjacent segments enter the acceptance ratio.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{action_gradient, action_of_path, lagrangian_sum_flat, segment_action, ActionRule};
use crate::ensemble::PathLattice;
use crate::error::{Error, Result};
use crate::model::{DynamicalModel, LagrangianForm};
use crate::numeric::max_abs;
use crate::trajectory::Trajectory;

/// Number of batches used for the batch-means standard error.
pub const N_BATCHES: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcConfig {
    pub beta: f64,
    /// Standard deviation of the Gaussian node proposal. Defaults to
    /// `√(dt/(β·m))`.
    #[serde(default)]
    pub proposal_width: Option<f64>,
    /// Number of sweeps; one sweep is `N − 1` single-site updates.
    pub n_steps: usize,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default = "one")]
    pub thin: usize,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}

impl McmcConfig {
    pub fn new(beta: f64, n_steps: usize, seed: u64) -> Self {
        Self {
            beta,
            proposal_width: None,
            n_steps,
            burn_in: 0,
            thin: 1,
            seed,
        }
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_thin(mut self, thin: usize) -> Self {
        self.thin = thin;
        self
    }

    pub fn with_proposal_width(mut self, width: f64) -> Self {
        self.proposal_width = Some(width);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::domain(
                "beta",
                format!("beta must be positive, got {}", self.beta),
            ));
        }
        if let Some(w) = self.proposal_width {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::domain(
                    "proposal_width",
                    format!("must be finite and ≥ 0, got {w}"),
                ));
            }
        }
        if self.thin == 0 {
            return Err(Error::domain("thin", "must be at least 1"));
        }
        if self.burn_in >= self.n_steps {
            return Err(Error::domain(
                "burn_in",
                format!("must be smaller than n_steps ({} ≥ {})", self.burn_in, self.n_steps),
            ));
        }
        Ok(())
    }

    /// Number of sweeps that contribute to the statistics.
    pub fn retained(&self) -> usize {
        (self.n_steps - self.burn_in).div_ceil(self.thin)
    }
}

/// Default proposal width `√(dt/(β·m))`.
pub fn default_proposal_width(beta: f64, mass: f64, dt: f64) -> f64 {
    (dt / (beta * mass)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub sweep: usize,
    pub action: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStats {
    pub mean_path: Trajectory,
    /// Batch-means standard error of every node component (zero at the endpoints).
    pub stderr: Vec<f64>,
    pub acceptance_rate: f64,
    pub min_action_seen: f64,
    pub argmin_path: Trajectory,
    pub n_samples: usize,
    #[serde(skip)]
    pub trace: Vec<TraceRecord>,
}

impl ChainStats {
    /// One JSON object `{sweep, action}` per retained sample.
    pub fn trace_jsonl(&self) -> String {
        let mut out = String::new();
        for rec in &self.trace {
            out.push_str(&serde_json::to_string(rec).expect("trace record serialises"));
            out.push('\n');
        }
        out
    }
}

/// Running state of one chain. Kept separate from the statistics so that
/// annealing can continue the same path and RNG stream across stages.
struct Chain<'a> {
    lf: &'a LagrangianForm,
    t0: f64,
    dim: usize,
    dt: f64,
    nodes: Vec<f64>,
    action: f64,
    best_nodes: Vec<f64>,
    best_action: f64,
    proposal: Vec<f64>,
}

impl<'a> Chain<'a> {
    fn new(model: &'a DynamicalModel, init: &Trajectory) -> Result<Self> {
        let lf = model.require_lagrangian("path sampling")?;
        if init.dim() != model.dim() {
            return Err(Error::DimensionMismatch {
                what: "initial path",
                expected: model.dim(),
                got: init.dim(),
            });
        }
        let nodes = init.nodes_flat().to_vec();
        let action = lagrangian_sum_flat(lf, &nodes, init.dim(), init.dt(), ActionRule::Midpoint);
        if !action.is_finite() {
            return Err(Error::domain(
                "initial path",
                format!("action is not finite ({action})"),
            ));
        }
        Ok(Self {
            lf,
            t0: init.t0(),
            dim: init.dim(),
            dt: init.dt(),
            best_nodes: nodes.clone(),
            nodes,
            action,
            best_action: action,
            proposal: vec![0.0; init.dim()],
        })
    }

    fn segments(&self) -> usize {
        self.nodes.len() / self.dim - 1
    }

    fn node(&self, k: usize) -> &[f64] {
        &self.nodes[k * self.dim..(k + 1) * self.dim]
    }

    fn local_action(&self, k: usize, q: &[f64]) -> f64 {
        segment_action(self.lf, self.node(k - 1), q, self.dt, ActionRule::Midpoint)
            + segment_action(self.lf, q, self.node(k + 1), self.dt, ActionRule::Midpoint)
    }

    /// One random-scan sweep; returns the number of accepted moves.
    fn sweep(&mut self, rng: &mut ChaCha8Rng, beta: f64, width: f64) -> usize {
        let n = self.segments();
        let mut accepted = 0;
        for _ in 1..n {
            let k = rng.random_range(1..n);
            let mut proposal = std::mem::take(&mut self.proposal);
            for (i, slot) in proposal.iter_mut().enumerate() {
                let z: f64 = rng.sample(StandardNormal);
                *slot = self.nodes[k * self.dim + i] + width * z;
            }
            let old = self.local_action(k, self.node(k));
            let new = self.local_action(k, &proposal);
            let delta = new - old;
            let u: f64 = rng.random();
            if delta.is_finite() && (delta <= 0.0 || u < (-beta * delta).exp()) {
                self.nodes[k * self.dim..(k + 1) * self.dim].copy_from_slice(&proposal);
                self.action += delta;
                accepted += 1;
                if self.action < self.best_action {
                    self.best_action = self.action;
                    self.best_nodes.copy_from_slice(&self.nodes);
                }
            }
            self.proposal = proposal;
        }
        // Resynchronise the incremental action to keep rounding from drifting.
        self.action = lagrangian_sum_flat(self.lf, &self.nodes, self.dim, self.dt, ActionRule::Midpoint);
        accepted
    }

    fn width_for(&self, beta: f64, cfg_width: Option<f64>) -> f64 {
        cfg_width.unwrap_or_else(|| default_proposal_width(beta, self.lf.mass, self.dt))
    }

    /// Runs `cfg.n_steps` sweeps and gathers statistics over the retained ones.
    fn run(&mut self, rng: &mut ChaCha8Rng, cfg: &McmcConfig) -> Result<ChainStats> {
        let width = self.width_for(cfg.beta, cfg.proposal_width);
        let retained = cfg.retained();
        let batches = retained.clamp(1, N_BATCHES);
        let batch_len = retained / batches;
        let len = self.nodes.len();
        let mut total = vec![0.0; len];
        let mut batch_sum = vec![0.0; len];
        let mut batch_means: Vec<Vec<f64>> = Vec::with_capacity(batches);
        let mut trace = Vec::with_capacity(retained);
        let mut accepted = 0usize;
        let mut proposals = 0usize;
        let mut in_batch = 0;
        for sweep in 0..cfg.n_steps {
            accepted += self.sweep(rng, cfg.beta, width);
            proposals += self.segments() - 1;
            if sweep < cfg.burn_in || (sweep - cfg.burn_in) % cfg.thin != 0 {
                continue;
            }
            trace.push(TraceRecord {
                sweep,
                action: self.action,
            });
            for (t, q) in total.iter_mut().zip(&self.nodes) {
                *t += q;
            }
            if batch_means.len() < batches {
                for (b, q) in batch_sum.iter_mut().zip(&self.nodes) {
                    *b += q;
                }
                in_batch += 1;
                if in_batch == batch_len {
                    batch_means.push(batch_sum.iter().map(|s| s / batch_len as f64).collect());
                    batch_sum.iter_mut().for_each(|s| *s = 0.0);
                    in_batch = 0;
                }
            }
        }
        if !self.action.is_finite() {
            return Err(Error::NonFinite("chain action"));
        }
        let n_samples = trace.len();
        let mean: Vec<f64> = total.iter().map(|s| s / n_samples as f64).collect();
        let stderr = batch_stderr(&batch_means, len);
        let acceptance_rate = if proposals == 0 {
            1.0
        } else {
            accepted as f64 / proposals as f64
        };
        let mean_path = Trajectory::new(self.t0, self.dt, self.dim, mean)?;
        let (argmin_path, min_action_seen) = self.best()?;
        Ok(ChainStats {
            mean_path,
            stderr,
            acceptance_rate,
            min_action_seen,
            argmin_path,
            n_samples,
            trace,
        })
    }

    fn best(&self) -> Result<(Trajectory, f64)> {
        let exact = lagrangian_sum_flat(self.lf, &self.best_nodes, self.dim, self.dt, ActionRule::Midpoint);
        Ok((
            Trajectory::new(self.t0, self.dt, self.dim, self.best_nodes.clone())?,
            exact,
        ))
    }
}

fn batch_stderr(batch_means: &[Vec<f64>], len: usize) -> Vec<f64> {
    let b = batch_means.len();
    if b < 2 {
        return vec![0.0; len];
    }
    (0..len)
        .map(|i| {
            let mean = batch_means.iter().map(|m| m[i]).sum::<f64>() / b as f64;
            let var = batch_means.iter().map(|m| (m[i] - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
            (var / b as f64).sqrt()
        })
        .collect()
}

/// Single-site random-scan Metropolis chain over the interior nodes of `init`.
pub fn metropolis_chain(model: &DynamicalModel, init: &Trajectory, cfg: &McmcConfig) -> Result<ChainStats> {
    cfg.validate()?;
    if init.segments() < 2 {
        return Err(Error::NoInteriorNodes { nodes: init.len() });
    }
    let mut chain = Chain::new(model, init)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    chain.run(&mut rng, cfg)
}

/// Independent chains in parallel; results are returned in input order.
pub fn run_chains(model: &DynamicalModel, init: &Trajectory, cfgs: &[McmcConfig]) -> Result<Vec<ChainStats>> {
    cfgs.par_iter().map(|cfg| metropolis_chain(model, init, cfg)).collect()
}

/// Simulated annealing over a strictly increasing β schedule.
///
/// Every stage runs `n_steps` sweeps with the default proposal width for its
/// β, continuing the previous stage's path and RNG stream. The returned
/// statistics are those of the final stage (first half discarded as burn-in)
/// with the argmin taken over all stages.
pub fn anneal_to_classical(
    model: &DynamicalModel,
    init: &Trajectory,
    schedule: &[(f64, usize)],
    seed: u64,
) -> Result<ChainStats> {
    if schedule.is_empty() {
        return Err(Error::domain("schedule", "must contain at least one stage"));
    }
    for w in schedule.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(Error::domain(
                "schedule",
                format!("β must be strictly increasing ({} then {})", w[0].0, w[1].0),
            ));
        }
    }
    if init.segments() < 2 {
        return Err(Error::NoInteriorNodes { nodes: init.len() });
    }
    let mut chain = Chain::new(model, init)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = None;
    for &(beta, n_steps) in schedule {
        let cfg = McmcConfig::new(beta, n_steps, seed).with_burn_in(n_steps / 2);
        cfg.validate()?;
        stats = Some(chain.run(&mut rng, &cfg)?);
    }
    // `run` reports the argmin over every sweep so far, not just its own.
    Ok(stats.expect("schedule is non-empty"))
}

/// Metropolis walk restricted to the paths of a lattice.
///
/// Each step picks an interior node and proposes one of the other `K − 1`
/// levels uniformly, which is symmetric. Returns visit counts per path in
/// enumeration order; used to check detailed balance against the exact
/// Boltzmann weights.
pub fn lattice_visit_counts(
    lattice: &PathLattice,
    model: &DynamicalModel,
    beta: f64,
    n_steps: usize,
    seed: u64,
) -> Result<Vec<u64>> {
    if !(beta > 0.0) {
        return Err(Error::domain("beta", format!("beta must be positive, got {beta}")));
    }
    let actions = lattice.actions(model)?;
    let k = lattice.levels();
    let interior = lattice.interior_nodes();
    let mut counts = vec![0u64; actions.len()];
    if k == 1 || interior == 0 {
        counts[0] = n_steps as u64;
        return Ok(counts);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut digits = vec![k / 2; interior];
    let index = |d: &[usize]| d.iter().fold(0, |acc, &x| acc * k + x);
    let mut cur = index(&digits);
    for _ in 0..n_steps {
        let site = rng.random_range(0..interior);
        let old = digits[site];
        let mut new = rng.random_range(0..k - 1);
        if new >= old {
            new += 1;
        }
        digits[site] = new;
        let prop = index(&digits);
        let delta = actions[prop] - actions[cur];
        let u: f64 = rng.random();
        if delta <= 0.0 || u < (-beta * delta).exp() {
            cur = prop;
        } else {
            digits[site] = old;
        }
        counts[cur] += 1;
    }
    Ok(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "rule")]
pub enum StepRule {
    Fixed { step: f64 },
    Backtracking,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub step_rule: StepRule,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 100_000,
            grad_tol: 1e-10,
            step_rule: StepRule::Backtracking,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(Error::domain(
                "grad_tol",
                format!("must be positive, got {}", self.grad_tol),
            ));
        }
        if let StepRule::Fixed { step } = self.step_rule {
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::domain("step", format!("must be positive, got {step}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimized {
    pub path: Trajectory,
    pub action: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gradient descent on the discrete action with the endpoints held fixed.
///
/// With [`StepRule::Backtracking`] each iteration starts from the
/// Barzilai–Borwein step and halves it until the Armijo condition holds.
pub fn minimize_action(model: &DynamicalModel, init: &Trajectory, cfg: &OptimizerConfig) -> Result<Minimized> {
    cfg.validate()?;
    let mut path = init.clone().without_momenta();
    let dim = path.dim();
    let mut action = action_of_path(model, &path)?;
    let mut grad = action_gradient(model, &path)?;
    if !action.is_finite() {
        return Err(Error::NonFinite("initial action"));
    }
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut trial = path.clone();
    for iter in 0..=cfg.max_iters {
        let gnorm = max_abs(grad.iter().copied());
        if !gnorm.is_finite() {
            return Err(Error::NonFinite("action gradient"));
        }
        if gnorm <= cfg.grad_tol {
            return Ok(Minimized {
                path,
                action,
                iterations: iter,
                gradient_norm: gnorm,
            });
        }
        if iter == cfg.max_iters {
            return Err(Error::NonConvergence {
                iterations: iter,
                gradient_norm: gnorm,
                last: Box::new(path),
            });
        }
        let interior = &path.nodes_flat()[dim..path.nodes_flat().len() - dim];
        let step = match cfg.step_rule {
            StepRule::Fixed { step } => step,
            StepRule::Backtracking => {
                let mut t = match &prev {
                    Some((dq, dg)) => {
                        let sy = dot(dq, dg);
                        if sy > 0.0 {
                            dot(dq, dq) / sy
                        } else {
                            1.0 / gnorm
                        }
                    }
                    None => (1.0 / gnorm).min(1.0),
                };
                let g2 = dot(&grad, &grad);
                // Armijo with a rounding allowance so tiny gradients still make progress.
                let slack = 8.0 * f64::EPSILON * action.abs().max(1.0);
                loop {
                    set_interior(&mut trial, interior, &grad, t);
                    let a = action_of_path(model, &trial)?;
                    if a.is_finite() && a <= action - 1e-4 * t * g2 + slack {
                        break t;
                    }
                    t *= 0.5;
                    if t < 1e-300 {
                        return Err(Error::NonConvergence {
                            iterations: iter,
                            gradient_norm: gnorm,
                            last: Box::new(path),
                        });
                    }
                }
            }
        };
        set_interior(&mut trial, interior, &grad, step);
        let new_grad = action_gradient(model, &trial)?;
        let new_interior = &trial.nodes_flat()[dim..trial.nodes_flat().len() - dim];
        let dq: Vec<f64> = new_interior.iter().zip(interior).map(|(a, b)| a - b).collect();
        let dg: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        prev = Some((dq, dg));
        std::mem::swap(&mut path, &mut trial);
        action = action_of_path(model, &path)?;
        grad = new_grad;
    }
    unreachable!("loop returns on its last iteration")
}

fn set_interior(target: &mut Trajectory, base: &[f64], grad: &[f64], step: f64) {
    let dim = target.dim();
    let nodes = target.nodes_flat_mut();
    let n = nodes.len();
    for ((slot, b), g) in nodes[dim..n - dim].iter_mut().zip(base).zip(grad) {
        *slot = b - step * g;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::boltzmann_distribution;
    use std::f64::consts::FRAC_PI_2;

    fn zigzag(n: usize) -> Trajectory {
        let nodes = (0..=n)
            .map(|k| {
                let t = k as f64 / n as f64;
                if k == 0 || k == n {
                    t
                } else {
                    t + if k % 2 == 0 { 0.3 } else { -0.3 }
                }
            })
            .collect();
        Trajectory::from_scalars(0.0, 1.0 / n as f64, nodes).unwrap()
    }

    fn oscillator_line(n: usize) -> Trajectory {
        Trajectory::straight_line(0.0, FRAC_PI_2, &[0.0], &[1.0], n).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(McmcConfig::new(0.0, 10, 0).validate().is_err());
        assert!(McmcConfig::new(1.0, 10, 0).with_burn_in(10).validate().is_err());
        assert!(McmcConfig::new(1.0, 10, 0).with_thin(0).validate().is_err());
        assert!(McmcConfig::new(1.0, 10, 0)
            .with_proposal_width(-1.0)
            .validate()
            .is_err());
        assert_eq!(McmcConfig::new(1.0, 10, 0).with_burn_in(3).with_thin(2).retained(), 4);
        let err = McmcConfig::new(-2.0, 10, 0).validate().unwrap_err();
        assert!(err.to_string().contains("beta must be positive"));
    }

    #[test]
    fn null_proposals_accept_everything() {
        let free = DynamicalModel::free_particle(1.0).unwrap();
        let init = zigzag(8);
        let cfg = McmcConfig::new(5.0, 50, 1).with_proposal_width(0.0);
        let stats = metropolis_chain(&free, &init, &cfg).unwrap();
        assert_eq!(stats.acceptance_rate, 1.0);
        assert!(stats.mean_path.max_node_distance(&init).unwrap() < 1e-14);
        assert!(stats.stderr.iter().all(|s| *s < 1e-14));
    }

    #[test]
    fn tiny_beta_accepts_almost_everything() {
        let model = DynamicalModel::polynomial(1.0, vec![0.0, 0.0, 1.0, 0.0, 0.5]).unwrap();
        let cfg = McmcConfig::new(1e-12, 200, 4).with_proposal_width(0.5);
        let stats = metropolis_chain(&model, &zigzag(10), &cfg).unwrap();
        assert!(stats.acceptance_rate >= 0.999, "{}", stats.acceptance_rate);
    }

    #[test]
    fn chain_is_deterministic() {
        let ho = DynamicalModel::harmonic_oscillator(1.0, 1.0).unwrap();
        let cfg = McmcConfig::new(20.0, 500, 99).with_burn_in(100).with_thin(3);
        let a = metropolis_chain(&ho, &oscillator_line(16), &cfg).unwrap();
        let b = metropolis_chain(&ho, &oscillator_line(16), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.n_samples, cfg.retained());
        let c = metropolis_chain(&ho, &oscillator_line(16), &McmcConfig { seed: 100, ..cfg }).unwrap();
        assert_ne!(a.mean_path, c.mean_path);
    }

    #[test]
    fn endpoints_stay_fixed_and_argmin_is_exact() {
        let ho = DynamicalModel::harmonic_oscillator(1.0, 1.0).unwrap();
        let stats = metropolis_chain(&ho, &oscillator_line(12), &McmcConfig::new(10.0, 300, 5)).unwrap();
        for path in [&stats.mean_path, &stats.argmin_path] {
            assert_eq!(path.node(0), &[0.0]);
            assert_eq!(path.node(12), &[1.0]);
        }
        assert_eq!(stats.min_action_seen, action_of_path(&ho, &stats.argmin_path).unwrap());
        assert!(stats.stderr.iter().all(|s| *s >= 0.0));
        assert!((0.0..=1.0).contains(&stats.acceptance_rate));
        let lines = stats.trace_jsonl();
        assert_eq!(lines.lines().count(), 300);
        assert!(lines.starts_with("{\"sweep\":0,\"action\":"));
    }

    #[test]
    fn rejects_bad_inputs() {
        let ho = DynamicalModel::harmonic_oscillator(1.0, 1.0).unwrap();
        let short = Trajectory::from_scalars(0.0, 1.0, vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            metropolis_chain(&ho, &short, &McmcConfig::new(1.0, 10, 0)),
            Err(Error::NoInteriorNodes { .. })
        ));
        let bad = Trajectory::from_scalars(0.0, 1.0, vec![0.0, f64::NAN, 1.0]).unwrap();
        assert!(matches!(
            metropolis_chain(&ho, &bad, &McmcConfig::new(1.0, 10, 0)),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn mean_path_tightens_with_beta() {
        let ho = DynamicalModel::harmonic_oscillator(1.0, 1.0).unwrap();
        let init = oscillator_line(16);
        let exact = minimize_action(&ho, &init, &OptimizerConfig::default()).unwrap().path;
        for seed in [1, 2, 3] {
            let dev = |beta: f64| {
                let cfg = McmcConfig::new(beta, 4000, seed).with_burn_in(1000);
                metropolis_chain(&ho, &init, &cfg)
                    .unwrap()
                    .mean_path
                    .max_node_distance(&exact)
                    .unwrap()
            };
            let (lo, hi) = (dev(20.0), dev(200.0));
            assert!(hi < lo, "seed {seed}: {hi} !< {lo}");
        }
    }

    #[test]
    fn parallel_chains_match_sequential() {
        let ho = DynamicalModel::harmonic_oscillator(1.0, 1.0).unwrap();
        let cfgs: Vec<_> = (0..4).map(|s| McmcConfig::new(10.0, 100, s)).collect();
        let par = run_chains(&ho, &oscillator_line(8), &cfgs).unwrap();
        for (cfg, stats) in cfgs.iter().zip(&par) {
            assert_eq!(stats, &metropolis_chain(&ho, &oscillator_line(8), cfg).unwrap());
        }
    }

    #[test]
    fn lattice_walk_satisfies_detailed_balance() {
        let lat = PathLattice::new(2, 1.0, 3, 1.0, 0.0, 0.0).unwrap();
        let free = DynamicalModel::free_particle(1.0).unwrap();
        let n = 1_000_000;
        let counts = lattice_visit_counts(&lat, &free, 1.0, n, 17).unwrap();
        let d = boltzmann_distribution(&lat, &free, 1.0).unwrap();
        for (c, p) in counts.iter().zip(d.weights()) {
            let freq = *c as f64 / n as f64;
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((freq - p).abs() <= 3.0 * sigma, "{freq} vs {p}");
        }
    }

    #[test]
    fn minimize_free_particle_from_zigzag() {
        let free = DynamicalModel::free_particle(1.0).unwrap();
        let out = minimize_action(&free, &zigzag(32), &OptimizerConfig::default()).unwrap();
        for k in 0..=32 {
            assert!((out.path.node(k)[0] - k as f64 / 32.0).abs() < 1e-8);
        }
        assert!((out.action - 0.5).abs() < 1e-12);
    }

    #[test]
    fn minimize_oscillator_matches_sine() {
        let ho = DynamicalModel::harmonic_oscillator(1.0, 1.0).unwrap();
        let out = minimize_action(&ho, &oscillator_line(128), &OptimizerConfig::default()).unwrap();
        for k in 0..=128 {
            assert!((out.path.node(k)[0] - out.path.time(k).sin()).abs() < 2e-3);
        }
    }

    #[test]
    fn minimize_from_optimum_returns_at_once() {
        let free = DynamicalModel::free_particle(1.0).unwrap();
        let line = Trajectory::straight_line(0.0, 1.0, &[0.0], &[1.0], 16).unwrap();
        let out = minimize_action(&free, &line, &OptimizerConfig::default()).unwrap();
        assert!(out.iterations <= 1);
    }

    #[test]
    fn minimize_reports_nonconvergence() {
        let free = DynamicalModel::free_particle(1.0).unwrap();
        let cfg = OptimizerConfig {
            max_iters: 3,
            ..OptimizerConfig::default()
        };
        match minimize_action(&free, &zigzag(32), &cfg) {
            Err(Error::NonConvergence { iterations, last, .. }) => {
                assert_eq!(iterations, 3);
                assert_eq!(last.len(), 33);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fixed_step_descent() {
        let free = DynamicalModel::free_particle(1.0).unwrap();
        // Hessian eigenvalues are below 4m/dt = 16, so a step of 1/16 is stable.
        let cfg = OptimizerConfig {
            max_iters: 10_000,
            grad_tol: 1e-12,
            step_rule: StepRule::Fixed { step: 1.0 / 16.0 },
        };
        let out = minimize_action(&free, &zigzag(4), &cfg).unwrap();
        assert!((out.action - 0.5).abs() < 1e-12);
    }

    #[test]
    fn anneal_free_particle() {
        let free = DynamicalModel::free_particle(1.0).unwrap();
        let schedule = [(1.0, 2000), (10.0, 2000), (100.0, 2000), (1000.0, 4000)];
        let stats = anneal_to_classical(&free, &zigzag(4), &schedule, 7).unwrap();
        assert!((stats.min_action_seen - 0.5).abs() < 1e-4, "{}", stats.min_action_seen);

        let two = Trajectory::from_scalars(0.0, 0.5, vec![0.0, 0.9, 1.0]).unwrap();
        let stats = anneal_to_classical(&free, &two, &schedule, 8).unwrap();
        assert!((stats.argmin_path.node(1)[0] - 0.5).abs() < 1e-3);
    }

    #[test]
    fn anneal_schedule_errors() {
        let free = DynamicalModel::free_particle(1.0).unwrap();
        assert!(anneal_to_classical(&free, &zigzag(4), &[], 0).is_err());
        assert!(anneal_to_classical(&free, &zigzag(4), &[(10.0, 10), (10.0, 10)], 0).is_err());
        assert!(anneal_to_classical(&free, &zigzag(4), &[(10.0, 10), (1.0, 10)], 0).is_err());
    }
}
