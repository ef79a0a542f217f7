//! Characteristic-equation integration, discrete actions and the
//! loop-integral invariant.

mod action;
mod integrate;
mod loops;

pub use action::{action_gradient, action_of_path, action_with_rule, momentum_action, ActionRule};
pub use integrate::{evolve, integrate_characteristic, IntegratorConfig, Scheme};
pub use loops::{loop_1form_integral, loop_invariance_deviation};

pub(crate) use action::{lagrangian_sum_flat, segment_action};
