use crate::error::{Error, Result};
use crate::geometry::{ReturnVector, SimplexPoint, Weights};

use super::{renormalized, PortfolioLearner};

/// `p' = (1 - gamma) p + gamma p ⊙ r / <p, r>`.
pub fn softbayes_step(p: &SimplexPoint, r: &ReturnVector, gamma: f64) -> Result<SimplexPoint> {
    let dot = p.dot(r);
    if dot <= 0.0 || !dot.is_finite() {
        return Err(Error::DegenerateReturn(dot));
    }
    let next = p
        .as_slice()
        .iter()
        .zip(r.as_slice())
        .map(|(p, r)| (1.0 - gamma) * p + gamma * p * r / dot)
        .collect();
    Ok(renormalized(next))
}

#[derive(Clone, Debug)]
pub struct SoftBayes {
    p: SimplexPoint,
    gamma: f64,
}

impl SoftBayes {
    /// Rate `sqrt(ln d / (dT))`.
    pub fn new(assets: usize, horizon: usize) -> Self {
        let d = assets as f64;
        Self::with_gamma(assets, (d.ln() / (d * horizon as f64)).sqrt())
    }

    pub fn with_gamma(assets: usize, gamma: f64) -> Self {
        SoftBayes { p: SimplexPoint::uniform(assets), gamma }
    }

    pub fn iterate(&self) -> &SimplexPoint {
        &self.p
    }
}

impl PortfolioLearner for SoftBayes {
    fn name(&self) -> &'static str {
        "softbayes"
    }

    fn predict(&mut self) -> Result<Weights> {
        Ok(self.p.to_weights())
    }

    fn update(&mut self, r: &ReturnVector) -> Result<()> {
        self.p = softbayes_step(&self.p, r, self.gamma)?;
        Ok(())
    }
}
