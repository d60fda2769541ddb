//! Damped online Newton step base learner.
//!
//! Each round plays the uniformly mixed iterate, observes Cover's loss, and
//! moves the iterate by a single damped Newton step on the follow-the-
//! regularized-leader objective
//!
//! ```text
//! F_{t+1}(w) = Psi_t(w) + 1/2 w^T V_t w + <G_t, w>        (up to a constant)
//! ```
//!
//! whose gradient at `w_t` is the step direction `nabla_t` and whose Hessian
//! is `H_t = hess Psi_t(w_t) + V_t`. `Psi_t` is the log-barrier with rates
//! `eta_{t,i} = eta * exp(log_T(rho_{t,i} / d))`, where `rho` only changes when
//! a lifted coordinate of the played point halves relative to the last change.

use std::f64::consts::E;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    barrier_eval, barrier_grad, barrier_hess, cover_loss, lift, loss_grad, mix_uniform, BarrierParams,
    ReturnVector, SimplexPoint, Weights,
};
use crate::selfconcordant::{minimize_sc, MinimizeOptions, QuadraticForm, ScFunction};

/// Largest base rate for which the tracking guarantees of the damped step hold.
pub const TRACKING_ETA_MAX: f64 = 1.0 / 16384.0;

/// Slack on the `[d, dT]` range check of `rho`.
const RHO_RANGE_SLACK: f64 = 1e-9;

/// Which step direction the update uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientForm {
    /// `nabla_t = G_t + V_t w_t + grad Psi_t(w_t)`, the gradient of `F_{t+1}` at `w_t`.
    #[default]
    Consistent,
    /// Adds a second `beta d w_t / 4` to the step direction.
    AsWritten,
}

/// Base rate used by the full algorithm: `1 / (286^2 d ln^3 T)`.
pub fn default_eta(assets: usize, horizon: usize) -> f64 {
    let log_t = (horizon as f64).ln();
    1.0 / (286.0 * 286.0 * assets as f64 * log_t.powi(3))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DonsParams {
    pub assets: usize,
    pub horizon: usize,
    pub eta: f64,
    pub beta: f64,
    pub gradient_form: GradientForm,
}

impl DonsParams {
    pub fn new(assets: usize, horizon: usize, beta: f64) -> Result<Self> {
        if horizon < 2 {
            return Err(Error::Param(format!("horizon must be >= 2, got {horizon}")));
        }
        let params = DonsParams {
            assets,
            horizon,
            eta: default_eta(assets.max(2), horizon),
            beta,
            gradient_form: GradientForm::Consistent,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        self.eta = eta;
        self.validate()?;
        if eta > TRACKING_ETA_MAX {
            log::warn!("eta = {eta:e} exceeds 2^-14; the damped step is no longer guaranteed to track the FTRL minimizer");
        }
        Ok(self)
    }

    pub fn with_gradient_form(mut self, form: GradientForm) -> Self {
        self.gradient_form = form;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.assets < 2 {
            return Err(Error::Param(format!("need at least 2 assets, got {}", self.assets)));
        }
        if self.horizon < 2 {
            return Err(Error::Param(format!("horizon must be >= 2, got {}", self.horizon)));
        }
        if !(self.beta > 0.0 && self.beta < 0.125) {
            return Err(Error::Param(format!("beta must lie in (0, 1/8), got {}", self.beta)));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Param(format!("eta must be positive, got {}", self.eta)));
        }
        Ok(())
    }

    /// Damping constant `4 sqrt(e eta)` of the Newton step.
    pub fn damping(&self) -> f64 {
        4.0 * (E * self.eta).sqrt()
    }
}

/// Per-round quantities used by the verification suite.
///
/// Indices follow the round being played: `w_t` is the iterate before the
/// update, `F_t` the objective it was computed from, `F_{t+1}` the objective
/// minimized by the step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `lambda(w_t, F_t)`.
    pub decrement: f64,
    /// `lambda(w_{t-1}, F_t)`; at the first round it equals `decrement`.
    pub prev_decrement: f64,
    /// `lambda(w_t, F_{t+1})`.
    pub step_decrement: f64,
    /// `||w_t - p_t||` in the Hessian of `F_t` at `w_t`, `p_t = argmin F_t`.
    /// `None` when the oracle is off.
    pub oracle_distance: Option<f64>,
    /// `max_i |lift(p_t)_i / lift(w_t)_i - 1|`.
    pub oracle_ratio_dev: Option<f64>,
    /// `||g_t||^2` in the inverse Hessian of `F_t` at `w_t`.
    pub grad_energy_f: f64,
    /// `||g_t||^2` in the inverse Hessian of `Phi_t` at `w_t`.
    pub grad_energy_phi: f64,
    /// `||w_{t+1} - w_t||_{H_t}`.
    pub step_norm: f64,
    pub w_ratio_min: f64,
    pub w_ratio_max: f64,
    /// `max_i lift(u_t)_i / lift(u_{t+1})_i`.
    pub u_ratio_max: f64,
    /// Smallest margin of `rho_t` inside its bracket (negative means violated).
    pub rho_bracket_slack: f64,
    /// Rounds so far at which `rho` changed.
    pub barrier_changes: usize,
}

/// One round of the base learner.
#[derive(Clone, Debug)]
pub struct RoundRecord {
    pub round: usize,
    pub returns: ReturnVector,
    /// Iterate `w_t` before the update.
    pub iterate: Weights,
    /// Played point `u_t`.
    pub played: Weights,
    pub loss: f64,
    pub grad: DVector<f64>,
    /// Barrier rates `eta_{t,.}` after this round's `rho` update.
    pub barrier: BarrierParams,
    pub barrier_changed: bool,
    pub diagnostics: Option<Diagnostics>,
}

#[derive(Clone, Debug)]
struct Tracker {
    inv_u_max: Vec<f64>,
    barrier_changes: usize,
    prev_step_decrement: Option<f64>,
    oracle: Option<MinimizeOptions>,
}

/// Full state of one base learner.
#[derive(Clone, Debug)]
pub struct DonsState {
    params: DonsParams,
    w: Weights,
    rho: Vec<f64>,
    g_acc: DVector<f64>,
    v: DMatrix<f64>,
    t: usize,
    barrier: BarrierParams,
    tracker: Option<Box<Tracker>>,
}

pub fn dons_init(params: DonsParams) -> Result<DonsState> {
    params.validate()?;
    let d = params.assets;
    let m = d - 1;
    let barrier = BarrierParams::constant(d, params.eta);
    Ok(DonsState {
        w: Weights::uniform(d),
        rho: vec![d as f64; d],
        g_acc: DVector::zeros(m),
        v: DMatrix::identity(m, m) * (params.beta * d as f64 / 4.0),
        t: 0,
        barrier,
        tracker: None,
        params,
    })
}

/// `rho_{t,i} = 1/u_i` if `2 rho_{t-1,i} < 1/u_i`, else `rho_{t-1,i}`.
pub fn rho_update(rho_prev: &[f64], u_bar: &SimplexPoint) -> Vec<f64> {
    rho_prev
        .iter()
        .zip(u_bar.as_slice())
        .map(|(&rho, &u)| {
            let inv = 1.0 / u;
            if 2.0 * rho < inv {
                inv
            } else {
                rho
            }
        })
        .collect()
}

/// `eta_{t,i} = eta * exp(ln(rho_i / d) / ln T)`.
pub fn eta_schedule(rho: &[f64], eta: f64, assets: usize, horizon: usize) -> Result<BarrierParams> {
    if horizon < 2 {
        return Err(Error::Param(format!("horizon must be >= 2, got {horizon}")));
    }
    let d = assets as f64;
    let (lo, hi) = (d * (1.0 - RHO_RANGE_SLACK), d * horizon as f64 * (1.0 + RHO_RANGE_SLACK));
    if let Some(bad) = rho.iter().find(|r| !(lo..=hi).contains(*r)) {
        return Err(Error::Param(format!("rho = {bad} outside [d, dT] = [{d}, {}]", d * horizon as f64)));
    }
    let log_t = (horizon as f64).ln();
    Ok(BarrierParams {
        eta: rho.iter().map(|r| eta * ((r / d).ln() / log_t).exp()).collect(),
        base_eta: eta,
    })
}

impl DonsState {
    /// Turns on per-round diagnostics, including an oracle minimization of `F_t` every round.
    pub fn enable_verification(&mut self) {
        self.enable_verification_with(Some(MinimizeOptions::default()));
    }

    /// With `oracle = None` only the cheap diagnostics are kept.
    pub fn enable_verification_with(&mut self, oracle: Option<MinimizeOptions>) {
        let d = self.params.assets;
        let inv_u_max = if self.t == 0 {
            vec![0.0; d]
        } else {
            self.rho.clone()
        };
        self.tracker = Some(Box::new(Tracker {
            inv_u_max,
            barrier_changes: 0,
            prev_step_decrement: None,
            oracle,
        }));
    }

    pub fn params(&self) -> &DonsParams {
        &self.params
    }

    /// Current iterate `w_t`.
    pub fn iterate(&self) -> &Weights {
        &self.w
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn accumulated_gradient(&self) -> &DVector<f64> {
        &self.g_acc
    }

    pub fn curvature(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn barrier(&self) -> &BarrierParams {
        &self.barrier
    }

    /// Number of completed updates.
    pub fn round(&self) -> usize {
        self.t
    }

    /// Point to play next: `(1 - 1/T) w_t + 1/(dT)`.
    pub fn predict(&self) -> Weights {
        mix_uniform(&self.w, self.params.horizon)
    }

    /// Gradient of the current objective `F_{t+1}` (`t` = completed updates).
    pub fn grad_f(&self, w: &Weights) -> Result<DVector<f64>> {
        Ok(barrier_grad(w, &self.barrier)? + &self.v * w.as_vector() + &self.g_acc)
    }

    pub fn hess_f(&self, w: &Weights) -> Result<DMatrix<f64>> {
        Ok(barrier_hess(w, &self.barrier)? + &self.v)
    }

    /// Value of the current objective, up to an additive constant.
    pub fn value_f(&self, w: &Weights) -> Result<f64> {
        let x = w.as_vector();
        Ok(barrier_eval(w, &self.barrier)? + 0.5 * x.dot(&(&self.v * x)) + self.g_acc.dot(x))
    }

    /// The current objective as a self-concordant oracle.
    pub fn objective(&self) -> FtrlObjective<'_> {
        FtrlObjective { state: self }
    }

    /// Plays, observes `r`, and takes one damped Newton step.
    pub fn update(&mut self, r: &ReturnVector) -> Result<RoundRecord> {
        let round = self.t + 1;
        let played = self.predict();
        let loss = cover_loss(r, &played)?;
        let grad = loss_grad(r, &played)?;
        let iterate = self.w.clone();
        let (barrier_changed, diagnostics) = self.step(&played, &grad)?;
        Ok(RoundRecord {
            round,
            returns: r.clone(),
            iterate,
            played,
            loss,
            grad,
            barrier: self.barrier.clone(),
            barrier_changed,
            diagnostics,
        })
    }

    /// Like [`update`](Self::update) but without building a record.
    pub fn observe(&mut self, r: &ReturnVector) -> Result<()> {
        let played = self.predict();
        let grad = loss_grad(r, &played)?;
        self.step(&played, &grad).map(|_| ())
    }

    fn step(&mut self, played: &Weights, g: &DVector<f64>) -> Result<(bool, Option<Diagnostics>)> {
        let p = &self.params;
        let d = p.assets;
        let u_bar = lift(played);

        let pre = match self.tracker.as_deref() {
            Some(tracker) => Some(self.pre_step(g, tracker.oracle)?),
            None => None,
        };

        let rho = rho_update(&self.rho, &u_bar);
        let barrier_changed = rho != self.rho;
        let barrier = eta_schedule(&rho, p.eta, d, p.horizon)?;
        let w = self.w.as_vector();

        let psi_grad_new = barrier_grad(&self.w, &barrier)?;
        let psi_grad_old = barrier_grad(&self.w, &self.barrier)?;
        let gw = g.dot(w);
        self.g_acc += g * (1.0 - p.beta * gw / 4.0) - &psi_grad_new + psi_grad_old;
        self.v.ger(p.beta / 4.0, g, g, 1.0);

        let consistent = &self.g_acc + &self.v * w + &psi_grad_new;
        let nabla = match p.gradient_form {
            GradientForm::Consistent => consistent.clone(),
            GradientForm::AsWritten => &consistent + w * (p.beta * d as f64 / 4.0),
        };
        let h = QuadraticForm::new(barrier_hess(&self.w, &barrier)? + &self.v)?;
        let dir = h.solve(&nabla);
        let lambda = nabla.dot(&dir).max(0.0).sqrt();
        let next = w - dir / (1.0 + p.damping() * lambda);
        let next = Weights::interior(next).map_err(|e| {
            Error::InvariantViolation(format!("damped Newton step left the interior at round {}: {e}", self.t + 1))
        })?;

        let diagnostics = match pre {
            Some(pre) => {
                let tracker = self.tracker.as_deref_mut().expect("tracker present");
                Some(finish_diagnostics(
                    pre, tracker, &self.params, &h, g, &consistent, &self.w, &next, &u_bar, &rho, barrier_changed,
                ))
            }
            None => None,
        };

        self.w = next;
        self.rho = rho;
        self.barrier = barrier;
        self.t += 1;
        Ok((barrier_changed, diagnostics))
    }

    fn pre_step(&self, g: &DVector<f64>, oracle: Option<MinimizeOptions>) -> Result<PreStep> {
        let hf = QuadraticForm::new(self.hess_f(&self.w)?)?;
        let decrement = hf.dual_norm(&self.grad_f(&self.w)?);
        let grad_energy_f = g.dot(&hf.solve(g));
        let Some(oracle) = oracle else {
            return Ok(PreStep { decrement, oracle_distance: None, oracle_ratio_dev: None, grad_energy_f });
        };
        // barrier gradients of size ~1/eta carry rounding noise ~eps sqrt(d/eta) in the local norm
        let eta_min = self.barrier.eta.iter().copied().fold(f64::INFINITY, f64::min);
        let floor = 16.0 * f64::EPSILON * (self.params.assets as f64 / eta_min).sqrt();
        let oracle = MinimizeOptions { tol: oracle.tol.max(floor), ..oracle };
        let min = minimize_sc(&self.objective(), self.w.as_vector(), oracle)?;
        let diff = self.w.as_vector() - &min.x;
        let p_bar = lift(&Weights::from_vector(min.x.clone())?);
        let w_bar = lift(&self.w);
        let oracle_ratio_dev = p_bar
            .as_slice()
            .iter()
            .zip(w_bar.as_slice())
            .map(|(p, w)| (p / w - 1.0).abs())
            .fold(0.0, f64::max);
        Ok(PreStep {
            decrement,
            oracle_distance: Some(hf.norm(&diff)),
            oracle_ratio_dev: Some(oracle_ratio_dev),
            grad_energy_f,
        })
    }
}

struct PreStep {
    decrement: f64,
    oracle_distance: Option<f64>,
    oracle_ratio_dev: Option<f64>,
    grad_energy_f: f64,
}

#[allow(clippy::too_many_arguments)]
fn finish_diagnostics(
    pre: PreStep,
    tracker: &mut Tracker,
    params: &DonsParams,
    h: &QuadraticForm,
    g: &DVector<f64>,
    consistent: &DVector<f64>,
    w: &Weights,
    next: &Weights,
    u_bar: &SimplexPoint,
    rho: &[f64],
    barrier_changed: bool,
) -> Diagnostics {
    for (m, u) in tracker.inv_u_max.iter_mut().zip(u_bar.as_slice()) {
        *m = m.max(1.0 / u);
    }
    let rho_bracket_slack = rho
        .iter()
        .zip(&tracker.inv_u_max)
        .map(|(r, m)| (r - m / 2.0).min(m - r))
        .fold(f64::INFINITY, f64::min);
    if barrier_changed {
        tracker.barrier_changes += 1;
    }
    let step_decrement = h.dual_norm(consistent);
    let prev_decrement = tracker.prev_step_decrement.unwrap_or(pre.decrement);
    tracker.prev_step_decrement = Some(step_decrement);

    let w_bar = lift(w);
    let next_bar = lift(next);
    let (mut w_ratio_min, mut w_ratio_max) = (f64::INFINITY, 0.0f64);
    for (a, b) in next_bar.as_slice().iter().zip(w_bar.as_slice()) {
        let ratio = a / b;
        w_ratio_min = w_ratio_min.min(ratio);
        w_ratio_max = w_ratio_max.max(ratio);
    }
    let u_next = lift(&mix_uniform(next, params.horizon));
    let u_ratio_max = u_bar
        .as_slice()
        .iter()
        .zip(u_next.as_slice())
        .map(|(a, b)| a / b)
        .fold(0.0, f64::max);

    Diagnostics {
        decrement: pre.decrement,
        prev_decrement,
        step_decrement,
        oracle_distance: pre.oracle_distance,
        oracle_ratio_dev: pre.oracle_ratio_dev,
        grad_energy_f: pre.grad_energy_f,
        grad_energy_phi: g.dot(&h.solve(g)),
        step_norm: h.norm(&(next.as_vector() - w.as_vector())),
        w_ratio_min,
        w_ratio_max,
        u_ratio_max,
        rho_bracket_slack,
        barrier_changes: tracker.barrier_changes,
    }
}

/// `F_{t+1}` of a [`DonsState`] as a self-concordant function of free coordinates.
pub struct FtrlObjective<'a> {
    state: &'a DonsState,
}

impl ScFunction for FtrlObjective<'_> {
    fn value(&self, x: &DVector<f64>) -> f64 {
        match Weights::from_vector(x.clone()) {
            Ok(w) if w.is_interior() => self.state.value_f(&w).unwrap_or(f64::INFINITY),
            _ => f64::INFINITY,
        }
    }

    fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        let w = Weights::from_vector(x.clone()).expect("gradient requested at a domain point");
        self.state.grad_f(&w).expect("gradient requested at an interior point")
    }

    fn hess(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let w = Weights::from_vector(x.clone()).expect("Hessian requested at a domain point");
        self.state.hess_f(&w).expect("Hessian requested at an interior point")
    }

    fn sc_constant(&self) -> f64 {
        self.state.barrier.eta.iter().copied().fold(0.0, f64::max).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(d: usize, t: usize, beta: f64) -> DonsParams {
        DonsParams::new(d, t, beta).unwrap()
    }

    #[test]
    fn init_examples() {
        let s = dons_init(params(2, 16, 1.0 / 32.0)).unwrap();
        assert_relative_eq!(s.curvature()[(0, 0)], 1.0 / 64.0, epsilon = 1e-17);
        let s = dons_init(params(3, 16, 1.0 / 48.0)).unwrap();
        assert_eq!(s.iterate().as_slice(), &[1.0 / 3.0, 1.0 / 3.0]);
        for x in lift(s.iterate()).as_slice() {
            assert_relative_eq!(*x, 1.0 / 3.0, epsilon = 1e-16);
        }
        assert_eq!(s.rho(), &[3.0; 3]);
        assert!(s.accumulated_gradient().iter().all(|x| *x == 0.0));
        assert_eq!(s.round(), 0);
    }

    #[test]
    fn params_reject_bad_ranges() {
        assert!(matches!(DonsParams::new(2, 16, 0.2), Err(Error::Param(_))));
        assert!(matches!(DonsParams::new(1, 16, 0.01), Err(Error::Param(_))));
        assert!(matches!(DonsParams::new(2, 1, 0.01), Err(Error::Param(_))));
        assert!(DonsParams::new(2, 16, 0.01).unwrap().with_eta(-1.0).is_err());
    }

    #[test]
    fn predict_examples() {
        let s = dons_init(params(2, 2, 0.01)).unwrap();
        assert_relative_eq!(s.predict().as_slice()[0], 0.5, epsilon = 1e-16);
        let w = mix_uniform(&Weights::new(vec![1.0, 0.0]).unwrap(), 10);
        assert_relative_eq!(w.as_slice()[0], 0.9 + 1.0 / 30.0, epsilon = 1e-15);
        assert_relative_eq!(w.as_slice()[1], 1.0 / 30.0, epsilon = 1e-15);
    }

    #[test]
    fn rho_update_examples() {
        let u = SimplexPoint::new(vec![0.1, 0.5, 0.25, 0.15]).unwrap();
        let rho = rho_update(&[2.0, 2.0, 2.0, 100.0], &u);
        assert_relative_eq!(rho[0], 10.0, epsilon = 1e-14);
        assert_eq!(rho[1], 2.0);
        // tie keeps the old value
        assert_eq!(rho[2], 2.0);
        assert_eq!(rho[3], 100.0);
    }

    #[test]
    fn eta_schedule_examples() {
        let bp = eta_schedule(&[4.0, 400.0, 40.0, 4.0], 0.01, 4, 100).unwrap();
        assert_relative_eq!(bp.eta[0], 0.01, epsilon = 1e-16);
        assert_relative_eq!(bp.eta[1], 0.01 * E, epsilon = 1e-15);
        // ln(40/4) / ln(100) = 1/2
        assert_relative_eq!(bp.eta[2], 0.01 * 0.5f64.exp(), epsilon = 1e-15);
        assert!(matches!(eta_schedule(&[3.0, 4.0, 4.0, 4.0], 0.01, 4, 100), Err(Error::Param(_))));
        assert!(matches!(eta_schedule(&[500.0, 4.0, 4.0, 4.0], 0.01, 4, 100), Err(Error::Param(_))));
    }

    #[test]
    fn grad_f_at_start() {
        let beta = 1.0 / 32.0;
        let s = dons_init(params(2, 16, beta)).unwrap();
        let g = s.grad_f(s.iterate()).unwrap();
        assert_relative_eq!(g[0], beta / 4.0, epsilon = 1e-15);
    }

    #[test]
    fn constant_unit_returns_give_zero_gradients() {
        let mut s = dons_init(params(3, 32, 1.0 / 48.0)).unwrap();
        for _ in 0..10 {
            let rec = s.update(&ReturnVector::ones(3)).unwrap();
            assert_eq!(rec.loss, 0.0);
            assert!(rec.grad.iter().all(|x| *x == 0.0));
            assert!(!rec.barrier_changed);
        }
    }

    #[test]
    fn played_points_keep_the_floor() {
        let mut s = dons_init(params(3, 200, 1.0 / 48.0).with_eta(1e-3).unwrap()).unwrap();
        let r = ReturnVector::from_normalized(vec![1.0, 1e-6, 1e-6]).unwrap();
        for _ in 0..200 {
            let rec = s.update(&r).unwrap();
            let floor = 1.0 / (3.0 * 200.0);
            assert!(lift(&rec.played).as_slice().iter().all(|x| *x >= floor * (1.0 - 1e-12)));
        }
        // the iterate has moved towards the winning asset
        assert!(s.iterate().as_slice()[0] > 1.0 / 3.0);
    }
}
