use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{ReturnVector, SimplexPoint, Weights};
use crate::selfconcordant::QuadraticForm;

use super::{mix_simplex, renormalized, simplex_loss_grad, PortfolioLearner};

const KKT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug)]
pub struct OnsParams {
    pub epsilon: f64,
    pub gamma: f64,
    pub horizon: usize,
}

impl OnsParams {
    pub fn new(horizon: usize) -> Self {
        OnsParams { epsilon: 1.0, gamma: 0.125, horizon }
    }
}

#[derive(Clone, Debug)]
pub struct OnsState {
    pub p: SimplexPoint,
    pub a: DMatrix<f64>,
}

impl OnsState {
    pub fn new(assets: usize, params: &OnsParams) -> Self {
        OnsState {
            p: SimplexPoint::uniform(assets),
            a: DMatrix::identity(assets, assets) * params.epsilon,
        }
    }
}

/// `A += g g^T`, then projects `p - A^{-1} g / gamma` onto the simplex in the `A`-norm.
pub fn ons_step(state: &mut OnsState, g: &[f64], params: &OnsParams) -> Result<SimplexPoint> {
    let g = DVector::from_column_slice(g);
    state.a.ger(1.0, &g, &g, 1.0);
    let form = QuadraticForm::new(state.a.clone())?;
    let y = DVector::from_column_slice(state.p.as_slice()) - form.solve(&g) / params.gamma;
    state.p = ons_project(&y, &state.a)?;
    Ok(state.p.clone())
}

/// Minimizes `(x - y)^T A (x - y)` over the simplex by a primal active-set method.
pub fn ons_project(y: &DVector<f64>, a: &DMatrix<f64>) -> Result<SimplexPoint> {
    let d = y.len();
    let ay = a * y;
    let mut x = DVector::from_element(d, 1.0 / d as f64);
    // true = held at zero
    let mut fixed = vec![false; d];
    let max_iter = 50 * d + 50;
    for iter in 0..max_iter {
        let free: Vec<usize> = (0..d).filter(|&i| !fixed[i]).collect();
        let (z_free, nu) = equality_solve(a, &ay, &free)?;
        let mut z = DVector::zeros(d);
        for (k, &i) in free.iter().enumerate() {
            z[i] = z_free[k];
        }
        let step = &z - &x;
        if step.amax() <= 1e-15 * (1.0 + x.amax()) {
            let grad = a * (&x - y);
            let worst = (0..d)
                .filter(|&i| fixed[i])
                .map(|i| (i, grad[i] + nu))
                .min_by(|p, q| p.1.total_cmp(&q.1));
            let scale = 1.0 + grad.amax();
            match worst {
                Some((i, mu)) if mu < -KKT_TOL * scale => fixed[i] = false,
                _ => return finish(x, y, a, &fixed, nu),
            }
            continue;
        }
        let mut alpha = 1.0;
        let mut blocking = None;
        for &i in &free {
            if step[i] < 0.0 {
                let ratio = -x[i] / step[i];
                if ratio < alpha {
                    alpha = ratio;
                    blocking = Some(i);
                }
            }
        }
        x += &step * alpha;
        if let Some(i) = blocking {
            x[i] = 0.0;
            fixed[i] = true;
        }
        if free.len() == 1 && blocking.is_some() {
            return Err(Error::NoConvergence { iterations: iter, decrement: f64::NAN });
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, decrement: f64::NAN })
}

/// Minimizer of the quadratic on `{x_free sums to 1, other coordinates 0}` and its multiplier.
fn equality_solve(a: &DMatrix<f64>, ay: &DVector<f64>, free: &[usize]) -> Result<(DVector<f64>, f64)> {
    let sub = a.select_rows(free).select_columns(free);
    let b = DVector::from_iterator(free.len(), free.iter().map(|&i| ay[i]));
    let ones = DVector::from_element(free.len(), 1.0);
    let form = QuadraticForm::new(sub)?;
    let sb = form.solve(&b);
    let s1 = form.solve(&ones);
    let nu = (sb.sum() - 1.0) / s1.sum();
    Ok((sb - s1 * nu, nu))
}

fn finish(mut x: DVector<f64>, y: &DVector<f64>, a: &DMatrix<f64>, fixed: &[bool], nu: f64) -> Result<SimplexPoint> {
    let grad = a * (&x - y);
    let scale = 1.0 + grad.amax();
    let stationarity = (0..x.len())
        .map(|i| {
            let mu = grad[i] + nu;
            if fixed[i] {
                (-mu).max(0.0)
            } else {
                mu.abs()
            }
        })
        .fold(0.0, f64::max);
    let feasibility = (x.sum() - 1.0).abs().max(x.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max));
    let residual = stationarity / scale + feasibility;
    if residual > KKT_TOL {
        return Err(Error::NoConvergence { iterations: 0, decrement: residual });
    }
    x.iter_mut().for_each(|v| *v = v.max(0.0));
    Ok(renormalized(x.iter().copied().collect()))
}

/// Online Newton step on the simplex, playing the iterate mixed with `1/(dT)` of the uniform portfolio.
#[derive(Clone, Debug)]
pub struct Ons {
    state: OnsState,
    params: OnsParams,
}

impl Ons {
    pub fn new(assets: usize, horizon: usize) -> Self {
        Self::with_params(assets, OnsParams::new(horizon))
    }

    pub fn with_params(assets: usize, params: OnsParams) -> Self {
        Ons { state: OnsState::new(assets, &params), params }
    }

    pub fn state(&self) -> &OnsState {
        &self.state
    }

    fn played(&self) -> SimplexPoint {
        mix_simplex(&self.state.p, self.params.horizon)
    }
}

impl PortfolioLearner for Ons {
    fn name(&self) -> &'static str {
        "ons"
    }

    fn predict(&mut self) -> Result<Weights> {
        Ok(self.played().to_weights())
    }

    fn update(&mut self, r: &ReturnVector) -> Result<()> {
        let g = simplex_loss_grad(&self.played(), r)?;
        ons_step(&mut self.state, &g, &self.params)?;
        Ok(())
    }
}
