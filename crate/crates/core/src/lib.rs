//! Hamiltonian dynamics, maximum-entropy ensembles of discretized paths,
//! and time-sliced path-integral propagators.
//!
//! The crate is organised by subsystem:
//!
//! * [`model`] and [`dynamics`]: Hamiltonian models, characteristic-equation
//!   integrators, discrete actions and the Poincaré–Cartan loop invariant.
//! * [`ensemble`]: the exact canonical ensemble over an enumerable lattice of
//!   fixed-endpoint paths.
//! * [`sampler`]: Metropolis sampling of continuous path ensembles, action
//!   minimization and annealing.
//! * [`quantum`]: path amplitudes, lattice sums and time-sliced propagators.
//! * [`thermo`]: ideal-gas characteristic flows and the mechanics/thermodynamics
//!   analogy table.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod ensemble;
mod error;
pub mod model;
pub mod numeric;
pub mod quantum;
pub mod sampler;
pub mod thermo;
pub mod trajectory;

pub use dynamics::{
    action_gradient, action_of_path, integrate_characteristic, loop_1form_integral, loop_invariance_deviation,
    ActionRule, IntegratorConfig, Scheme,
};
pub use ensemble::{boltzmann_distribution, PathDistribution, PathLattice};
pub use error::{Error, Result};
pub use model::{DynamicalModel, LagrangianForm, PhasePoint, Potential};
pub use quantum::{Amplitude, Propagator, SlicingConfig};
pub use sampler::{ChainStats, McmcConfig, OptimizerConfig};
pub use thermo::{GasModelKind, GasState};
pub use trajectory::{PhaseLoop, Trajectory};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
