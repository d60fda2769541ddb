//! Reference learners and the best constant-rebalanced portfolio in hindsight.
//!
//! The multiplicative and Newton baselines work directly on the simplex in
//! `R^d`; [`PortfolioLearner`] adapts them, and the algorithms of this crate,
//! to one predict/update interface over [`Weights`].

mod crp;
mod eg;
mod ons;
mod softbayes;

pub use crp::{best_crp, CrpSolution};
pub use eg::{eg_step, Eg};
pub use ons::{ons_project, ons_step, Ons, OnsParams, OnsState};
pub use softbayes::{softbayes_step, SoftBayes};

use crate::adamix::AdaMixDons;
use crate::dons::DonsState;
use crate::error::Result;
use crate::geometry::{ReturnVector, SimplexPoint, Weights};

/// An online portfolio learner.
pub trait PortfolioLearner {
    fn name(&self) -> &'static str;
    /// Portfolio for the next round.
    fn predict(&mut self) -> Result<Weights>;
    /// Observes the returns of the round just predicted.
    fn update(&mut self, r: &ReturnVector) -> Result<()>;
    /// Number of base experts currently maintained.
    fn active_experts(&self) -> usize {
        1
    }
}

impl PortfolioLearner for AdaMixDons {
    fn name(&self) -> &'static str {
        "adamix-dons"
    }

    fn predict(&mut self) -> Result<Weights> {
        crate::adamix::MetaState::predict(self)
    }

    fn update(&mut self, r: &ReturnVector) -> Result<()> {
        self.meta_round(r).map(|_| ())
    }

    fn active_experts(&self) -> usize {
        self.active_count()
    }
}

impl PortfolioLearner for DonsState {
    fn name(&self) -> &'static str {
        "dons"
    }

    fn predict(&mut self) -> Result<Weights> {
        Ok(DonsState::predict(self))
    }

    fn update(&mut self, r: &ReturnVector) -> Result<()> {
        self.observe(r)
    }
}

/// `(1 - 1/T) p + 1/(dT)` on the full simplex.
pub(crate) fn mix_simplex(p: &SimplexPoint, horizon: usize) -> SimplexPoint {
    let d = p.dim() as f64;
    let t = horizon as f64;
    let mixed = p.as_slice().iter().map(|x| (1.0 - 1.0 / t) * x + 1.0 / (d * t)).collect();
    renormalized(mixed)
}

/// Rescales to sum 1. Only used on vectors that sum to 1 up to rounding.
pub(crate) fn renormalized(mut p: Vec<f64>) -> SimplexPoint {
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    SimplexPoint::new(p).expect("renormalized point lies on the simplex")
}

/// Gradient of `-ln <r, p>` in `R^d`.
pub(crate) fn simplex_loss_grad(p: &SimplexPoint, r: &ReturnVector) -> Result<Vec<f64>> {
    let dot = p.dot(r);
    if dot <= 0.0 || !dot.is_finite() {
        return Err(crate::error::Error::DegenerateReturn(dot));
    }
    Ok(r.as_slice().iter().map(|x| -x / dot).collect())
}
