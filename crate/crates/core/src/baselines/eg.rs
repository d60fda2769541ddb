use crate::error::Result;
use crate::geometry::{ReturnVector, SimplexPoint, Weights};

use super::{mix_simplex, renormalized, simplex_loss_grad, PortfolioLearner};

/// `p'_i ∝ p_i exp(-step g_i)`, normalized in the log domain.
pub fn eg_step(p: &SimplexPoint, g: &[f64], step: f64) -> SimplexPoint {
    let shift = g.iter().map(|g| step * g).fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = p.as_slice().iter().zip(g).map(|(p, g)| p * (shift - step * g).exp()).collect();
    renormalized(w)
}

/// Exponentiated gradient, playing the iterate mixed with `1/(dT)` of the uniform portfolio.
#[derive(Clone, Debug)]
pub struct Eg {
    p: SimplexPoint,
    horizon: usize,
    step: f64,
}

impl Eg {
    /// Step `sqrt(ln d / T)`.
    pub fn new(assets: usize, horizon: usize) -> Self {
        let step = ((assets as f64).ln() / horizon as f64).sqrt();
        Self::with_step(assets, horizon, step)
    }

    pub fn with_step(assets: usize, horizon: usize, step: f64) -> Self {
        Eg { p: SimplexPoint::uniform(assets), horizon, step }
    }

    pub fn iterate(&self) -> &SimplexPoint {
        &self.p
    }

    fn played(&self) -> SimplexPoint {
        mix_simplex(&self.p, self.horizon)
    }
}

impl PortfolioLearner for Eg {
    fn name(&self) -> &'static str {
        "eg"
    }

    fn predict(&mut self) -> Result<Weights> {
        Ok(self.played().to_weights())
    }

    fn update(&mut self, r: &ReturnVector) -> Result<()> {
        let g = simplex_loss_grad(&self.played(), r)?;
        self.p = eg_step(&self.p, &g, self.step);
        Ok(())
    }
}
