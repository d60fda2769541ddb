use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{barrier_eval, barrier_grad, barrier_hess, cover_loss, BarrierParams, ReturnVector, Weights};
use crate::selfconcordant::{minimize_sc, MinimizeOptions, ScFunction};

/// Barrier weights visited by the continuation, largest first.
const MU_SCHEDULE: [f64; 9] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10];

/// The best constant-rebalanced portfolio of a return sequence.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrpSolution {
    /// Free coordinates of the minimizer.
    pub u_star: Vec<f64>,
    /// Cumulative Cover loss of `u_star`.
    pub loss_star: f64,
    /// Newton decrement of the last barrier-augmented objective at `u_star`.
    pub certificate: f64,
}

impl CrpSolution {
    pub fn weights(&self) -> Weights {
        Weights::new(self.u_star.clone()).expect("solution lies in the domain")
    }
}

/// `sum_t -ln <r_t, lift(x)> + mu * sum_i -ln lift(x)_i`.
struct CrpObjective<'a> {
    returns: &'a [ReturnVector],
    /// `J r_t` for every round.
    diffs: Vec<DVector<f64>>,
    barrier: BarrierParams,
}

impl<'a> CrpObjective<'a> {
    fn new(returns: &'a [ReturnVector], mu: f64) -> Self {
        let d = returns[0].dim();
        let diffs = returns
            .iter()
            .map(|r| {
                let r = r.as_slice();
                DVector::from_iterator(d - 1, r[..d - 1].iter().map(|x| x - r[d - 1]))
            })
            .collect();
        CrpObjective { returns, diffs, barrier: BarrierParams::constant(d, 1.0 / mu) }
    }

    fn dots(&self, x: &DVector<f64>) -> impl Iterator<Item = f64> + '_ {
        let x = x.clone();
        self.returns.iter().zip(&self.diffs).map(move |(r, a)| r.as_slice()[r.dim() - 1] + a.dot(&x))
    }
}

impl ScFunction for CrpObjective<'_> {
    fn value(&self, x: &DVector<f64>) -> f64 {
        let w = match Weights::from_vector(x.clone()) {
            Ok(w) if w.is_interior() => w,
            _ => return f64::INFINITY,
        };
        let mut total = barrier_eval(&w, &self.barrier).unwrap_or(f64::INFINITY);
        for dot in self.dots(x) {
            if dot <= 0.0 {
                return f64::INFINITY;
            }
            total -= dot.ln();
        }
        total
    }

    fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        let w = Weights::from_vector(x.clone()).expect("gradient requested at a domain point");
        let mut g = barrier_grad(&w, &self.barrier).expect("gradient requested at an interior point");
        for (dot, a) in self.dots(x).zip(&self.diffs) {
            g.axpy(-1.0 / dot, a, 1.0);
        }
        g
    }

    fn hess(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let w = Weights::from_vector(x.clone()).expect("Hessian requested at a domain point");
        let mut h = barrier_hess(&w, &self.barrier).expect("Hessian requested at an interior point");
        for (dot, a) in self.dots(x).zip(&self.diffs) {
            h.ger(1.0 / (dot * dot), a, a, 1.0);
        }
        h
    }

    // each -ln(affine) term is 1-self-concordant, mu * (-ln x) is 1/sqrt(mu)
    fn sc_constant(&self) -> f64 {
        1f64.max(self.barrier.eta[0].sqrt())
    }
}

/// Minimizes the cumulative Cover loss over constant portfolios.
///
/// Uses Newton's method on the loss plus `mu` times the log-barrier, with
/// `mu` decreasing from `1e-2` to `1e-10`.
pub fn best_crp(returns: &[ReturnVector]) -> Result<CrpSolution> {
    let first = returns.first().ok_or_else(|| Error::Data("empty return sequence".into()))?;
    let d = first.dim();
    if returns.iter().any(|r| r.dim() != d) {
        return Err(Error::Data("return vectors have different lengths".into()));
    }
    let mut x = Weights::uniform(d).into_vector();
    let mut certificate = f64::INFINITY;
    for (k, &mu) in MU_SCHEDULE.iter().enumerate() {
        let last = k + 1 == MU_SCHEDULE.len();
        let opts = MinimizeOptions { tol: if last { 1e-10 } else { 1e-8 }, max_iter: 500 };
        let min = minimize_sc(&CrpObjective::new(returns, mu), &x, opts)?;
        x = min.x;
        certificate = min.decrement;
    }
    let u = Weights::from_vector(x)?;
    let loss_star = returns.iter().map(|r| cover_loss(r, &u)).sum::<Result<f64>>()?;
    Ok(CrpSolution { u_star: u.as_slice().to_vec(), loss_star, certificate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::lift;

    fn r(v: &[f64]) -> ReturnVector {
        ReturnVector::from_normalized(v.to_vec()).unwrap()
    }

    #[test]
    fn dominant_asset_wins() {
        let rs: Vec<_> = (0..50).map(|t| r(&[0.3 + 0.01 * (t % 7) as f64, 1.0, 0.5])).collect();
        let sol = best_crp(&rs).unwrap();
        let u = lift(&sol.weights());
        assert!((u.as_slice()[1] - 1.0).abs() < 1e-6, "{:?}", u);
        assert!(sol.certificate <= 1e-10);
    }

    #[test]
    fn alternating_returns_give_uniform() {
        let rs: Vec<_> = (0..40).map(|t| if t % 2 == 0 { r(&[1.0, 0.5]) } else { r(&[0.5, 1.0]) }).collect();
        let sol = best_crp(&rs).unwrap();
        assert!((sol.u_star[0] - 0.5).abs() < 1e-9);
        assert!((sol.loss_star - 40.0 * -(0.75f64.ln())).abs() < 1e-9);
    }
}
