use std::collections::BTreeMap;
use std::f64::consts::E;
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::adamix::adamix_dons_with;
use crate::covering::{active_at, partition, Interval};
use crate::dons::{dons_init, DonsParams, GradientForm, RoundRecord};
use crate::error::{Error, Result};
use crate::geometry::ReturnVector;
use crate::selfconcordant::MinimizeOptions;

use super::SCHEMA_VERSION;

/// One invariant, evaluated at many points. `slack >= 0` means it held.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub checks: usize,
    pub worst_slack: Option<f64>,
    pub worst_round: usize,
}

impl Check {
    pub fn new(name: &str) -> Self {
        Check { name: name.into(), passed: true, checks: 0, worst_slack: None, worst_round: 0 }
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn record(&mut self, round: usize, slack: f64) {
        self.checks += 1;
        // NaN counts as a failure
        let worse = match self.worst_slack {
            None => true,
            Some(w) => !(slack >= w),
        };
        if worse && !self.worst_slack.is_some_and(f64::is_nan) {
            self.worst_slack = Some(slack);
            self.worst_round = round;
        }
        self.passed = self.worst_slack.is_some_and(|w| w >= 0.0);
    }

    pub fn summary(&self) -> String {
        match self.worst_slack {
            Some(w) => format!(
                "{}: {} ({} checks, worst slack {w:e} at round {})",
                self.name,
                if self.passed { "pass" } else { "FAIL" },
                self.checks,
                self.worst_round
            ),
            None => format!("{}: not evaluated", self.name),
        }
    }
}

/// Per-round invariants of one damped Newton run with diagnostics enabled.
#[derive(Clone, Debug)]
pub struct DonsChecker {
    assets: usize,
    horizon: usize,
    eta: f64,
    beta: f64,
    c: f64,
    floor: Check,
    rho_bracket: Check,
    barrier_changes: Check,
    chain_contraction: Check,
    chain_start: Check,
    decrement: Check,
    oracle_distance: Check,
    oracle_ratio: Check,
    oracle_sum: Check,
    w_ratio: Check,
    u_ratio: Check,
    energy_round: Check,
    energy_sum: Check,
    gradient_identity: Check,
    gradient_norm: Check,
    dikin: Check,
    oracle_sq_sum: f64,
    energy_total: f64,
    changes: usize,
    last_round: usize,
}

/// Additive slack on the tracking and energy bounds.
const BOUND_SLACK: f64 = 1e-8;

impl DonsChecker {
    pub fn new(params: &DonsParams) -> Self {
        let t = params.horizon as f64;
        let c = 4.0 * E / 0.25f64.max((1.0 - 1.0 / t).powi(2));
        DonsChecker {
            assets: params.assets,
            horizon: params.horizon,
            eta: params.eta,
            beta: params.beta,
            c,
            floor: Check::new("played point keeps the 1/(dT) floor"),
            rho_bracket: Check::new("rho bracketing"),
            barrier_changes: Check::new("barrier changes <= d log2(dT)"),
            chain_contraction: Check::new("decrement chain: lambda(w_t,F_t)/(8 sqrt(e eta)) <= lambda(w_{t-1},F_t)^2"),
            chain_start: Check::new("decrement chain: lambda(w_{t-1},F_t)^2 <= C eta"),
            decrement: Check::new("lambda(w_t,F_t) <= 8 sqrt(e eta) C eta"),
            oracle_distance: Check::new("||w_t - p_t|| <= 16 sqrt(e eta) C eta"),
            oracle_ratio: Check::new("|lift(p_t)/lift(w_t) - 1| <= 64 (e eta)^2"),
            oracle_sum: Check::new("sum ||w_t - p_t||^2 <= 1 + 15 d ln T / beta"),
            w_ratio: Check::new("3/4 <= lift(w_{t+1})/lift(w_t) <= 5/4"),
            u_ratio: Check::new("lift(u_t)/lift(u_{t+1}) <= 4/3"),
            energy_round: Check::new("||g_t||^2 in hess(Phi_t)^-1 <= e eta / (1 - 1/T)^2"),
            energy_sum: Check::new("sum ||g_t||^2 in hess(F_t)^-1 <= 16 d ln T / beta"),
            gradient_identity: Check::new("grad F_{t+1}(w_t) - grad F_t(w_t) = g_t"),
            gradient_norm: Check::new("||g_t||^2 <= d^2 T^2"),
            dikin: Check::new("damped step stays in the Dikin ellipsoid"),
            oracle_sq_sum: 0.0,
            energy_total: 0.0,
            changes: 0,
            last_round: 0,
        }
    }

    /// The constant `C = 4e / max(1/4, (1 - 1/T)^2)`.
    pub fn c(&self) -> f64 {
        self.c
    }

    /// Consumes one round. `gradients` are `grad F_t(w_t)` and `grad F_{t+1}(w_t)` when available.
    pub fn observe(&mut self, record: &RoundRecord, gradients: Option<(&DVector<f64>, &DVector<f64>)>) {
        let t = record.round;
        self.last_round = t;
        let (d, horizon) = (self.assets as f64, self.horizon as f64);
        let floor = 1.0 / (d * horizon);
        self.floor.record(t, record.played.min_lifted() - floor * (1.0 - 1e-12));
        let g2 = record.grad.norm_squared();
        self.gradient_norm.record(t, d * d * horizon * horizon - g2);
        if let Some((before, after)) = gradients {
            let residual = (after - before - &record.grad).amax();
            self.gradient_identity.record(t, 1e-10 * (1.0 + before.amax()) - residual);
        }
        if record.barrier_changed {
            self.changes += 1;
        }
        let Some(diag) = &record.diagnostics else { return };
        let root = (E * self.eta).sqrt();
        let c_eta = self.c * self.eta;
        self.rho_bracket.record(t, diag.rho_bracket_slack + 1e-9 * d * horizon);
        if t >= 2 {
            self.chain_contraction
                .record(t, diag.prev_decrement.powi(2) - diag.decrement / (8.0 * root) + BOUND_SLACK);
            self.chain_start.record(t, c_eta - diag.prev_decrement.powi(2) + BOUND_SLACK);
        }
        self.decrement.record(t, 8.0 * root * c_eta - diag.decrement + BOUND_SLACK);
        if let Some(dist) = diag.oracle_distance {
            self.oracle_distance.record(t, 16.0 * root * c_eta - dist + BOUND_SLACK);
            self.oracle_sq_sum += dist * dist;
        }
        if let Some(dev) = diag.oracle_ratio_dev {
            self.oracle_ratio.record(t, 64.0 * (E * self.eta).powi(2) - dev + 1e-10);
        }
        self.w_ratio.record(t, (diag.w_ratio_min - 0.75).min(1.25 - diag.w_ratio_max));
        self.u_ratio.record(t, 4.0 / 3.0 - diag.u_ratio_max);
        self.energy_round
            .record(t, E * self.eta / (1.0 - 1.0 / horizon).powi(2) - diag.grad_energy_phi + BOUND_SLACK);
        self.energy_total += diag.grad_energy_f;
        self.dikin.record(t, 1.0 / (4.0 * root) - diag.step_norm);
    }

    pub fn finish(&self) -> Vec<Check> {
        let (d, horizon) = (self.assets as f64, self.horizon as f64);
        let t = self.last_round;
        let mut changes = self.barrier_changes.clone();
        changes.record(t, d * (d * horizon).log2() - self.changes as f64);
        let mut energy = self.energy_sum.clone();
        if self.decrement.checks > 0 {
            energy.record(t, 16.0 * d * horizon.ln() / self.beta - self.energy_total + BOUND_SLACK);
        }
        let mut oracle_sum = self.oracle_sum.clone();
        if self.oracle_distance.checks > 0 {
            oracle_sum.record(t, 1.0 + 15.0 * d * horizon.ln() / self.beta - self.oracle_sq_sum);
        }
        [
            self.floor.clone(),
            self.gradient_norm.clone(),
            self.gradient_identity.clone(),
            self.rho_bracket.clone(),
            changes,
            self.chain_contraction.clone(),
            self.chain_start.clone(),
            self.decrement.clone(),
            self.oracle_distance.clone(),
            oracle_sum,
            self.oracle_ratio.clone(),
            self.w_ratio.clone(),
            self.u_ratio.clone(),
            self.energy_round.clone(),
            energy,
            self.dikin.clone(),
        ]
        .into_iter()
        .filter(|c| c.checks > 0)
        .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyLevel {
    /// Every cheap invariant; no minimizer oracle.
    Fast,
    /// Adds the oracle `p_t = argmin F_t` every round and the restart emulation check.
    Full,
}

impl fmt::Display for VerifyLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerifyLevel::Fast => "fast",
            VerifyLevel::Full => "full",
        })
    }
}

impl FromStr for VerifyLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(VerifyLevel::Fast),
            "full" => Ok(VerifyLevel::Full),
            _ => Err(Error::Param(format!("unknown level {s:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub level: VerifyLevel,
    /// Base rate of the standalone damped Newton run.
    pub eta: f64,
    /// Defaults to `1/(16 d)`, the largest grid value.
    pub beta: Option<f64>,
    pub gradient_form: GradientForm,
    /// Base rate of the full algorithm's experts; the theory value if `None`.
    pub adamix_eta: Option<f64>,
}

impl VerifyOptions {
    pub fn new(level: VerifyLevel) -> Self {
        VerifyOptions {
            level,
            eta: 1.0 / 16384.0,
            beta: None,
            gradient_form: GradientForm::Consistent,
            adamix_eta: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub assets: usize,
    pub horizon: usize,
    pub level: VerifyLevel,
    pub gradient_form: GradientForm,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn check(&self, name_prefix: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name.starts_with(name_prefix))
    }
}

/// Runs the damped Newton invariant suite and the meta-algorithm checks over `returns`.
pub fn verify(returns: &[ReturnVector], options: &VerifyOptions) -> Result<VerifyReport> {
    let horizon = returns.len();
    let assets = returns.first().ok_or_else(|| Error::Data("empty return sequence".into()))?.dim();
    let mut checks = dons_suite(returns, options)?;
    checks.extend(adamix_suite(returns, options)?);
    Ok(VerifyReport {
        schema_version: SCHEMA_VERSION,
        assets,
        horizon,
        level: options.level,
        gradient_form: options.gradient_form,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

fn dons_suite(returns: &[ReturnVector], options: &VerifyOptions) -> Result<Vec<Check>> {
    let (assets, horizon) = (returns[0].dim(), returns.len());
    let beta = options.beta.unwrap_or(1.0 / (16.0 * assets as f64));
    let params = DonsParams::new(assets, horizon, beta)?
        .with_eta(options.eta)?
        .with_gradient_form(options.gradient_form);
    let mut state = dons_init(params)?;
    state.enable_verification_with(match options.level {
        VerifyLevel::Fast => None,
        VerifyLevel::Full => Some(MinimizeOptions::default()),
    });
    let mut checker = DonsChecker::new(state.params());
    let mut interior = Check::new("iterates stay interior");
    for (i, r) in returns.iter().enumerate() {
        let before = state.grad_f(state.iterate())?;
        match state.update(r) {
            Ok(record) => {
                let after = state.grad_f(&record.iterate)?;
                checker.observe(&record, Some((&before, &after)));
                interior.record(i + 1, state.iterate().min_lifted());
            }
            Err(e) if e.is_invariant_violation() => {
                interior.record(i + 1, -1.0);
                break;
            }
            Err(e) => return Err(e.at_round(i + 1)),
        }
    }
    let mut checks = vec![interior];
    checks.extend(checker.finish());
    Ok(checks)
}

fn adamix_suite(returns: &[ReturnVector], options: &VerifyOptions) -> Result<Vec<Check>> {
    let (assets, horizon) = (returns[0].dim(), returns.len());
    let mut meta = adamix_dons_with(assets, horizon, options.adamix_eta, options.gradient_form)?;
    if options.level == VerifyLevel::Full {
        meta.record_retirements();
    }
    let mut counts = Check::new("active experts = |grid| * |active_at(t)|");
    let mut weights = Check::new("meta weights sum to 1");
    let mut losses = Vec::with_capacity(horizon);
    for (i, r) in returns.iter().enumerate() {
        let t = i + 1;
        let round = meta.meta_round(r).map_err(|e| e.at_round(t))?;
        let expected = meta.grid().len() * active_at(t, horizon).len();
        counts.record(t, 0.0 - (round.active as f64 - expected as f64).abs());
        weights.record(t, 1e-12 - (round.weights.iter().sum::<f64>() - 1.0).abs());
        losses.push(round.loss);
    }
    let stats = meta.adaptive_regret();
    let mut prop = Check::new("adaptive regret: sum_I (meta - expert) <= 2 ln t + ln M");
    prop.record(stats.worst_round, stats.worst_margin + 1e-9);
    prop.checks = stats.checks;
    let mut spawned = Check::new("experts spawned <= |grid| (T (floor(log2 T) + 1) + 1)");
    let bound = meta.grid().len() * (horizon * (horizon.ilog2() as usize + 1) + 1);
    spawned.record(horizon, bound as f64 - meta.spawned_total() as f64);
    let mut checks = vec![counts, weights, prop, spawned];

    if options.level == VerifyLevel::Full {
        let ledger: BTreeMap<(usize, Interval), f64> =
            meta.retired().iter().map(|e| ((e.key.beta_index, e.key.interval), e.expert_loss)).collect();
        let per_piece = 2.0 * (horizon as f64).ln() + (meta.grid().len() as f64).ln();
        let mut restarts = Check::new("restart emulation over partition([tau, T])");
        let taus: Vec<usize> = (0..8).map(|k| 1 + k * horizon / 8).collect();
        for tau in taus {
            let tail: f64 = losses[tau - 1..].iter().sum();
            let pieces = partition(tau, horizon, horizon);
            let best = (0..meta.grid().len())
                .map(|b| {
                    pieces
                        .iter()
                        .map(|iv| ledger.get(&(b, *iv)).map(|l| l + per_piece).unwrap_or(f64::NAN))
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min);
            restarts.record(tau, best - tail + 1e-9);
        }
        checks.push(restarts);
    }
    Ok(checks)
}
