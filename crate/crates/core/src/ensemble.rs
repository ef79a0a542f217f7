//! Exact canonical ensemble over a finite lattice of fixed-endpoint paths.
//!
//! Every interior node of a path takes one of `K` equally spaced levels
//! centred between the endpoints, so the path space has exactly
//! `K^(N_t − 1)` members and the partition function is a finite sum.
//! Weights are `exp(−β(I − I_min))` normalised by the shifted partition sum;
//! the shift is recorded so `log Z` is always recoverable.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{lagrangian_sum_flat, ActionRule};
use crate::error::{Error, Result};
use crate::model::DynamicalModel;
use crate::numeric::{pairwise_sum, pairwise_sum_by};
use crate::trajectory::Trajectory;

pub const DEFAULT_PATH_LIMIT: u64 = 10_000_000;

/// Probabilities below this contribute nothing to the entropy sum.
const ENTROPY_CUTOFF: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathLattice {
    n_slices: usize,
    dt: f64,
    levels: usize,
    dx: f64,
    q_start: f64,
    q_end: f64,
    limit: u64,
}

impl PathLattice {
    pub fn new(n_slices: usize, dt: f64, levels: usize, dx: f64, q_start: f64, q_end: f64) -> Result<Self> {
        if n_slices == 0 {
            return Err(Error::domain("n_slices", "must be at least 1"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::domain("dt", format!("must be positive and finite, got {dt}")));
        }
        if levels == 0 || levels % 2 == 0 {
            return Err(Error::domain(
                "levels",
                format!("must be odd and positive, got {levels}"),
            ));
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::domain("dx", format!("must be positive and finite, got {dx}")));
        }
        if !(q_start.is_finite() && q_end.is_finite()) {
            return Err(Error::NonFinite("lattice endpoints"));
        }
        Ok(Self {
            n_slices,
            dt,
            levels,
            dx,
            q_start,
            q_end,
            limit: DEFAULT_PATH_LIMIT,
        })
    }

    pub fn with_limit(mut self, limit: u64) -> Self {
        self.limit = limit;
        self
    }

    pub fn n_slices(&self) -> usize {
        self.n_slices
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn q_start(&self) -> f64 {
        self.q_start
    }

    pub fn q_end(&self) -> f64 {
        self.q_end
    }

    pub fn interior_nodes(&self) -> usize {
        self.n_slices - 1
    }

    /// Number of paths, or a capacity error when it exceeds the limit.
    pub fn size(&self) -> Result<usize> {
        let interior = self.interior_nodes();
        let exact = (self.levels as u64).checked_pow(interior as u32);
        match exact {
            Some(n) if n <= self.limit => Ok(n as usize),
            _ => Err(Error::Capacity {
                levels: self.levels,
                interior,
                size: (self.levels as f64).powi(interior as i32),
                limit: self.limit,
            }),
        }
    }

    /// Value of level `j ∈ 0..K`.
    pub fn level_value(&self, j: usize) -> f64 {
        let mid = 0.5 * (self.q_start + self.q_end);
        mid + (j as f64 - (self.levels - 1) as f64 / 2.0) * self.dx
    }

    /// All level values in increasing order.
    pub fn level_values(&self) -> Vec<f64> {
        (0..self.levels).map(|j| self.level_value(j)).collect()
    }

    /// Writes the nodes of path `index` into `nodes` (length `N_t + 1`).
    /// The first interior node is the most significant digit, so indices
    /// follow lexicographic order over the level indices.
    fn fill_nodes(&self, mut index: usize, nodes: &mut [f64]) {
        let n = self.n_slices;
        nodes[0] = self.q_start;
        nodes[n] = self.q_end;
        for k in (1..n).rev() {
            nodes[k] = self.level_value(index % self.levels);
            index /= self.levels;
        }
    }

    pub fn path(&self, index: usize) -> Result<Trajectory> {
        let size = self.size()?;
        if index >= size {
            return Err(Error::domain("path index", format!("{index} out of range 0..{size}")));
        }
        let mut nodes = vec![0.0; self.n_slices + 1];
        self.fill_nodes(index, &mut nodes);
        Trajectory::from_scalars(0.0, self.dt, nodes)
    }

    /// Midpoint-rule action of every path, in enumeration order.
    pub fn actions(&self, model: &DynamicalModel) -> Result<Vec<f64>> {
        self.actions_with_rule(model, ActionRule::Midpoint)
    }

    pub fn actions_with_rule(&self, model: &DynamicalModel, rule: ActionRule) -> Result<Vec<f64>> {
        let lf = model.require_lagrangian("path-lattice actions")?;
        if model.dim() != 1 {
            return Err(Error::DimensionMismatch {
                what: "lattice model",
                expected: 1,
                got: model.dim(),
            });
        }
        let size = self.size()?;
        let n = self.n_slices;
        let actions: Vec<f64> = (0..size)
            .into_par_iter()
            .map_init(
                || vec![0.0; n + 1],
                |buf, idx| {
                    self.fill_nodes(idx, buf);
                    lagrangian_sum_flat(lf, buf, 1, self.dt, rule)
                },
            )
            .collect();
        if actions.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("path action"));
        }
        Ok(actions)
    }
}

/// Every path of the lattice in enumeration order.
pub fn enumerate_paths(lattice: &PathLattice) -> Result<Vec<Trajectory>> {
    let size = lattice.size()?;
    let n = lattice.n_slices;
    (0..size)
        .map(|idx| {
            let mut nodes = vec![0.0; n + 1];
            lattice.fill_nodes(idx, &mut nodes);
            Trajectory::from_scalars(0.0, lattice.dt, nodes)
        })
        .collect()
}

/// Lagrange multipliers of the constrained entropy maximisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierState {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    /// `Σ exp(−β(I − shift))`
    pub z_shifted: f64,
    /// The smallest action, subtracted before exponentiation.
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathDistribution {
    lattice: PathLattice,
    beta: f64,
    actions: Vec<f64>,
    weights: Vec<f64>,
    partition: Option<Partition>,
    entropy: f64,
    mean_action: f64,
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0) || beta.is_nan() {
        return Err(Error::domain("beta", format!("beta must be positive, got {beta}")));
    }
    Ok(())
}

fn min_action(actions: &[f64]) -> f64 {
    actions.iter().copied().fold(f64::INFINITY, f64::min)
}

fn shifted_weights(actions: &[f64], beta: f64, shift: f64) -> Vec<f64> {
    actions.iter().map(|a| (-beta * (a - shift)).exp()).collect()
}

fn mean_action_at(actions: &[f64], beta: f64, shift: f64) -> f64 {
    let w = shifted_weights(actions, beta, shift);
    let z = pairwise_sum(&w);
    pairwise_sum_by(actions.len(), |i| w[i] * actions[i]) / z
}

impl PathDistribution {
    /// Boltzmann weights for precomputed actions.
    pub fn boltzmann(lattice: PathLattice, actions: Vec<f64>, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        if actions.is_empty() {
            return Err(Error::domain("actions", "empty path set"));
        }
        let shift = min_action(&actions);
        let mut weights = shifted_weights(&actions, beta, shift);
        let z_shifted = pairwise_sum(&weights);
        for w in &mut weights {
            *w /= z_shifted;
        }
        let mut dist = Self::assemble(lattice, beta, actions, weights);
        dist.partition = Some(Partition { z_shifted, shift });
        Ok(dist)
    }

    /// An arbitrary normalised distribution over the lattice paths, e.g. for
    /// comparing against the Boltzmann optimum.
    pub fn from_weights(lattice: PathLattice, actions: Vec<f64>, weights: Vec<f64>, beta: f64) -> Result<Self> {
        if actions.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                what: "weights",
                expected: actions.len(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::domain("weights", "must lie in [0, 1]"));
        }
        let total = pairwise_sum(&weights);
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::domain("weights", format!("must sum to 1, got {total}")));
        }
        Ok(Self::assemble(lattice, beta, actions, weights))
    }

    fn assemble(lattice: PathLattice, beta: f64, actions: Vec<f64>, weights: Vec<f64>) -> Self {
        let entropy = entropy_of(&weights);
        let mean_action = pairwise_sum_by(weights.len(), |i| weights[i] * actions[i]);
        Self {
            lattice,
            beta,
            actions,
            weights,
            partition: None,
            entropy,
            mean_action,
        }
    }

    pub fn lattice(&self) -> &PathLattice {
        &self.lattice
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn actions(&self) -> &[f64] {
        &self.actions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn partition(&self) -> Option<Partition> {
        self.partition
    }

    pub fn entropy(&self) -> f64 {
        self.entropy
    }

    pub fn mean_action(&self) -> f64 {
        self.mean_action
    }

    /// `log Z(β)` of the unshifted partition sum.
    pub fn log_z(&self) -> Option<f64> {
        self.partition.map(|p| p.z_shifted.ln() - self.beta * p.shift)
    }

    /// `α = log Z − 1`, the normalisation multiplier at the optimum.
    pub fn multipliers(&self) -> Option<MultiplierState> {
        self.log_z().map(|lz| MultiplierState {
            alpha: lz - 1.0,
            beta: self.beta,
        })
    }

    /// CSV `index,action,weight` in enumeration order.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("index,action,weight\n");
        for (i, (a, w)) in self.actions.iter().zip(&self.weights).enumerate() {
            writeln!(
                out,
                "{i},{},{}",
                crate::trajectory::fmt_f64(*a),
                crate::trajectory::fmt_f64(*w)
            )
            .unwrap();
        }
        out
    }

    pub fn summary(&self) -> DistributionSummary {
        let p = self.partition.unwrap_or(Partition {
            z_shifted: f64::NAN,
            shift: f64::NAN,
        });
        DistributionSummary {
            beta: self.beta,
            z_shifted: p.z_shifted,
            shift: p.shift,
            entropy: self.entropy,
            mean_action: self.mean_action,
            argmax_index: most_probable_index(self),
        }
    }
}

/// Summary record of a distribution dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub beta: f64,
    #[serde(rename = "Z_shifted")]
    pub z_shifted: f64,
    pub shift: f64,
    pub entropy: f64,
    pub mean_action: f64,
    pub argmax_index: usize,
}

fn entropy_of(weights: &[f64]) -> f64 {
    -pairwise_sum_by(weights.len(), |i| {
        let p = weights[i];
        if p < ENTROPY_CUTOFF {
            0.0
        } else {
            p * p.ln()
        }
    })
}

pub fn boltzmann_distribution(lattice: &PathLattice, model: &DynamicalModel, beta: f64) -> Result<PathDistribution> {
    check_beta(beta)?;
    let actions = lattice.actions(model)?;
    PathDistribution::boltzmann(lattice.clone(), actions, beta)
}

/// `S = −Σ p log p` (natural log).
pub fn path_entropy(dist: &PathDistribution) -> f64 {
    entropy_of(&dist.weights)
}

pub fn mean_action(dist: &PathDistribution) -> f64 {
    dist.mean_action
}

/// Finds `β > 0` whose Boltzmann mean action equals `target` within `tol`.
///
/// `⟨I⟩(β)` decreases strictly from the uniform mean (β → 0) to `I_min`
/// (β → ∞), so only targets strictly between the two are feasible.
pub fn solve_beta(lattice: &PathLattice, model: &DynamicalModel, target: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::domain("tol", format!("must be positive, got {tol}")));
    }
    let actions = lattice.actions(model)?;
    solve_beta_for_actions(&actions, target, tol)
}

pub fn solve_beta_for_actions(actions: &[f64], target: f64, tol: f64) -> Result<f64> {
    let shift = min_action(actions);
    let uniform = pairwise_sum(actions) / actions.len() as f64;
    if !(target > shift && target < uniform) {
        return Err(Error::Infeasible(format!(
            "target mean action {target} must lie strictly between I_min = {shift} and the β→0 mean {uniform}"
        )));
    }
    let f = |b: f64| mean_action_at(actions, b, shift) - target;
    let (mut lo, mut hi) = (1e-6, 1e6);
    while f(lo) < 0.0 {
        lo /= 10.0;
        if lo < 1e-300 {
            return Err(Error::Infeasible(format!("no β > 0 reaches mean action {target}")));
        }
    }
    while f(hi) > 0.0 {
        hi *= 10.0;
        if hi > 1e300 {
            return Err(Error::Infeasible(format!("no finite β reaches mean action {target}")));
        }
    }
    // Bisection in log β; the bracket spans many decades.
    let mut mid = (lo * hi).sqrt();
    for _ in 0..400 {
        mid = (lo * hi).sqrt();
        let v = f(mid);
        if v.abs() <= tol || hi / lo - 1.0 < 4.0 * f64::EPSILON {
            break;
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

/// `max_γ |log p(γ) + 1 + α + β·I(γ)|`, the residual of the stationarity
/// condition of the entropy Lagrangian.
///
/// Every weight must be a normal float: subnormal weights carry too few
/// significant bits for their logarithm to mean anything.
pub fn maxent_stationarity(dist: &PathDistribution, mult: MultiplierState) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (p, a) in dist.weights.iter().zip(&dist.actions) {
        if !(*p >= f64::MIN_POSITIVE) {
            return Err(Error::domain(
                "weights",
                format!("stationarity needs normal positive weights, got {p:e}"),
            ));
        }
        worst = worst.max((p.ln() + 1.0 + mult.alpha + mult.beta * a).abs());
    }
    Ok(worst)
}

fn most_probable_index(dist: &PathDistribution) -> usize {
    // Ties in weight fall back to the action and then to the lower index, so
    // the mode always coincides with the first minimum-action path.
    let mut best = 0;
    for i in 1..dist.weights.len() {
        let (wi, wb) = (dist.weights[i], dist.weights[best]);
        if wi > wb || (wi == wb && dist.actions[i] < dist.actions[best]) {
            best = i;
        }
    }
    best
}

/// Index and nodes of the highest-weight path.
pub fn most_probable_path(dist: &PathDistribution) -> Result<(usize, Trajectory)> {
    let idx = most_probable_index(dist);
    Ok((idx, dist.lattice.path(idx)?))
}
