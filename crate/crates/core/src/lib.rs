//! Online portfolio selection with damped online Newton steps and adaptive
//! mixing over geometric covering intervals.
//!
//! Portfolios over `d` assets are stored in the lifted parametrization
//! [`Weights`]: the first `d - 1` coordinates, with the last one implied.
//! [`dons`] runs a single expert, [`adamix`] mixes experts over intervals
//! and learning rates, [`baselines`] holds reference learners, and
//! [`harness`] turns all of it into experiments, checks and benchmarks.

pub mod adamix;
pub mod baselines;
pub mod covering;
pub mod dons;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod selfconcordant;

pub use adamix::{adamix_dons, AdaMixDons, ExpertFamily, MetaState};
pub use dons::{dons_init, DonsParams, DonsState, GradientForm};
pub use error::{Error, Result};
pub use geometry::{ReturnVector, SimplexPoint, Weights};
