//! TOML experiment configurations, one schema per subcommand.

use serde::{Deserialize, Serialize};
use trajthermo::dynamics::ActionRule;
use trajthermo::quantum::Quadrature;
use trajthermo::sampler::StepRule;
use trajthermo::thermo::{gas_model, monatomic_cv, GasModelKind};
use trajthermo::{DynamicalModel, PathLattice, Scheme, Trajectory};

use crate::error::CliError;

fn one() -> f64 {
    1.0
}

/// Model selection shared by the mechanical commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Free {
        #[serde(default = "one")]
        mass: f64,
    },
    Harmonic {
        #[serde(default = "one")]
        mass: f64,
        #[serde(default = "one")]
        omega: f64,
    },
    /// `V(q) = Σ_j coeffs[j]·q^j`
    Polynomial {
        #[serde(default = "one")]
        mass: f64,
        coeffs: Vec<f64>,
    },
    Adiabatic {
        #[serde(default = "one", rename = "nR")]
        n_r: f64,
        cv: Option<f64>,
    },
    IsothermalNamed {
        #[serde(default = "one", rename = "nR")]
        n_r: f64,
        cv: Option<f64>,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<DynamicalModel, CliError> {
        let model = match self {
            ModelSpec::Free { mass } => DynamicalModel::free_particle(*mass)?,
            ModelSpec::Harmonic { mass, omega } => DynamicalModel::harmonic_oscillator(*mass, *omega)?,
            ModelSpec::Polynomial { mass, coeffs } => DynamicalModel::polynomial(*mass, coeffs.clone())?,
            ModelSpec::Adiabatic { n_r, cv } => {
                gas_model(GasModelKind::Adiabatic, *n_r, cv.unwrap_or(monatomic_cv(*n_r)))?
            }
            ModelSpec::IsothermalNamed { n_r, cv } => {
                gas_model(GasModelKind::IsothermalNamed, *n_r, cv.unwrap_or(monatomic_cv(*n_r)))?
            }
        };
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrateConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub scheme: Scheme,
    pub dt: f64,
    pub span: f64,
    #[serde(default)]
    pub t0: f64,
    pub q0: Vec<f64>,
    pub p0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub scheme: Scheme,
    pub dt: f64,
    pub span: f64,
    #[serde(default)]
    pub t0: f64,
    /// `(q, p)` of the circle centre.
    #[serde(default)]
    pub center: [f64; 2],
    #[serde(default = "one")]
    pub radius: f64,
    pub n_points: usize,
    #[serde(default = "yes")]
    pub counterclockwise: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub n_slices: usize,
    pub dt: f64,
    pub levels: usize,
    pub dx: f64,
    #[serde(default)]
    pub q_start: f64,
    #[serde(default)]
    pub q_end: f64,
    pub limit: Option<u64>,
}

impl LatticeSpec {
    pub fn build(&self) -> Result<PathLattice, CliError> {
        let lat = PathLattice::new(self.n_slices, self.dt, self.levels, self.dx, self.q_start, self.q_end)?;
        Ok(match self.limit {
            Some(limit) => lat.with_limit(limit),
            None => lat,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnumerateConfig {
    pub model: ModelSpec,
    pub lattice: LatticeSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub model: ModelSpec,
    pub lattice: LatticeSpec,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveBetaConfig {
    pub model: ModelSpec,
    pub lattice: LatticeSpec,
    pub target_mean_action: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    1e-12
}

/// Fixed-endpoint straight-line path used to initialise samplers and the
/// optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    #[serde(default)]
    pub t0: f64,
    pub t1: f64,
    pub q_start: Vec<f64>,
    pub q_end: Vec<f64>,
    pub n_segments: usize,
}

impl PathSpec {
    pub fn straight(&self) -> Result<Trajectory, CliError> {
        Ok(Trajectory::straight_line(
            self.t0,
            self.t1,
            &self.q_start,
            &self.q_end,
            self.n_segments,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub model: ModelSpec,
    pub path: PathSpec,
    pub beta: Option<f64>,
    pub proposal_width: Option<f64>,
    pub n_steps: Option<usize>,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default = "one_usize")]
    pub thin: usize,
    #[serde(default)]
    pub seed: u64,
    /// `[[beta, sweeps], ...]`; when present the run anneals instead of
    /// sampling at a single β.
    pub schedule: Option<Vec<(f64, usize)>>,
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    #[default]
    Straight,
    Zigzag,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinimizeConfig {
    pub model: ModelSpec,
    pub path: PathSpec,
    #[serde(default)]
    pub init: InitKind,
    /// Size of the zigzag or random displacement of interior nodes.
    #[serde(default = "default_amplitude")]
    pub init_amplitude: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    /// Fixed step size; backtracking line search when absent.
    pub step: Option<f64>,
}

impl MinimizeConfig {
    pub fn step_rule(&self) -> StepRule {
        match self.step {
            Some(step) => StepRule::Fixed { step },
            None => StepRule::Backtracking,
        }
    }
}

fn default_amplitude() -> f64 {
    0.3
}

fn default_max_iters() -> usize {
    100_000
}

fn default_grad_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagateConfig {
    pub model: ModelSpec,
    #[serde(default = "one")]
    pub hbar: f64,
    pub n_slices: usize,
    /// Output window; defaults to `±20·√(ħT/m)` around `x_start`.
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub n_grid: usize,
    #[serde(default)]
    pub x_start: f64,
    pub t_total: f64,
    #[serde(default = "trapezoid")]
    pub rule: ActionRule,
    #[serde(default)]
    pub quadrature: Quadrature,
}

fn trapezoid() -> ActionRule {
    ActionRule::Trapezoid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasStateSpec {
    pub p: f64,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(default, rename = "S")]
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GibbsSpec {
    /// `(T, p)`
    pub from: [f64; 2],
    pub to: [f64; 2],
    #[serde(default = "default_intervals")]
    pub n_intervals: usize,
}

fn default_intervals() -> usize {
    2000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermoConfig {
    pub kind: GasModelKind,
    #[serde(default = "one", rename = "nR")]
    pub n_r: f64,
    pub cv: Option<f64>,
    pub state: GasStateSpec,
    pub span: f64,
    #[serde(default = "default_thermo_dt")]
    pub dt: f64,
    #[serde(default = "default_h")]
    pub h: f64,
    pub gibbs: Option<GibbsSpec>,
}

fn default_thermo_dt() -> f64 {
    1e-3
}

fn default_h() -> f64 {
    1e-5
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {}

pub fn parse<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, CliError> {
    toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {}", e.message())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_keys() {
        let bad = "beta = 1.0\nbogus = 2\n[model]\nkind = \"free\"\n[lattice]\nn_slices=2\ndt=1.0\nlevels=3\ndx=1.0\n";
        assert!(parse::<EnsembleConfig>(bad).is_err());
        let bad_model =
            "beta = 1.0\n[model]\nkind = \"free\"\nmas = 1\n[lattice]\nn_slices=2\ndt=1.0\nlevels=3\ndx=1.0\n";
        assert!(parse::<EnsembleConfig>(bad_model).is_err());
    }

    #[test]
    fn parses_ensemble() {
        let ok = "beta = 1.0\n[model]\nkind = \"free\"\n[lattice]\nn_slices=2\ndt=1.0\nlevels=3\ndx=1.0\n";
        let cfg: EnsembleConfig = parse(ok).unwrap();
        assert_eq!(cfg.model, ModelSpec::Free { mass: 1.0 });
        assert_eq!(cfg.lattice.q_end, 0.0);
    }

    #[test]
    fn parses_propagate_quadrature() {
        let text = "n_slices = 4\nn_grid = 11\nt_total = 1.0\n[model]\nkind = \"harmonic\"\n[quadrature]\nmode = \"output_grid\"\n";
        let cfg: PropagateConfig = parse(text).unwrap();
        assert_eq!(cfg.quadrature, Quadrature::OutputGrid);
        assert_eq!(cfg.rule, ActionRule::Trapezoid);
    }
}
