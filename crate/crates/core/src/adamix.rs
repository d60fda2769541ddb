//! Adaptive meta-algorithm for mixable losses over geometric covering
//! intervals, and its instantiation with damped online Newton experts.
//!
//! One expert runs for every `(beta, I)` with `beta` in the grid and `I` in
//! the covering family. An expert is spawned at `min I` with a zero loss
//! balance and retired after `max I`. Each round the meta-learner weights the
//! active experts by `exp(-eta * F)`, where `F` is the expert's cumulative
//! loss minus the meta-learner's loss over the rounds it has been active, and
//! plays the substitution of their predictions.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::covering::{ending_at, starting_at, Interval};
use crate::dons::{default_eta, dons_init, DonsParams, DonsState, GradientForm};
use crate::error::{Error, Result};
use crate::geometry::{cover_loss, ReturnVector, Weights};

/// The grid `{1 / (d 2^{i+3}) : i = 1..ceil(log2 T)}`, in descending order.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    betas: Vec<f64>,
}

impl Grid {
    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.betas[0]
    }
}

/// `ceil(log2 n)` for `n >= 1`.
pub fn ceil_log2(n: usize) -> usize {
    assert!(n >= 1);
    (usize::BITS - (n - 1).leading_zeros()) as usize
}

pub fn grid(assets: usize, horizon: usize) -> Result<Grid> {
    if horizon < 2 {
        return Err(Error::Param(format!("horizon must be >= 2, got {horizon}")));
    }
    if assets < 2 {
        return Err(Error::Param(format!("need at least 2 assets, got {assets}")));
    }
    let betas = (1..=ceil_log2(horizon))
        .map(|i| 1.0 / (assets as f64 * 2f64.powi(i as i32 + 3)))
        .collect();
    Ok(Grid { betas })
}

/// Identifies one expert: a grid entry and the interval it is active on.
///
/// Keys order by grid index (largest `beta` first), then by interval.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ExpertKey {
    pub beta_index: usize,
    pub beta: f64,
    pub interval: Interval,
}

impl PartialEq for ExpertKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ExpertKey {}

impl PartialOrd for ExpertKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExpertKey {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.beta_index, self.interval).cmp(&(other.beta_index, other.interval))
    }
}

impl fmt::Display for ExpertKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "beta={:e} I={}", self.beta, self.interval)
    }
}

/// Normalized `exp(-eta * f_i)`, computed with max-subtraction.
pub fn log_domain_weights(values: &[f64], eta: f64) -> Vec<f64> {
    let top = values.iter().map(|f| -eta * f).fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = values.iter().map(|f| (-eta * f - top).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= z);
    w
}

/// Exponential weights over a keyed ledger of loss differences.
pub fn meta_weights<K: Ord + Clone>(ledger: &BTreeMap<K, f64>, eta: f64) -> BTreeMap<K, f64> {
    let values: Vec<f64> = ledger.values().copied().collect();
    ledger.keys().cloned().zip(log_domain_weights(&values, eta)).collect()
}

/// Weighted mean of portfolios; the substitution for Cover's loss.
pub fn weighted_mean(weights: &[f64], points: &[Weights]) -> Result<Weights> {
    let first = points.first().ok_or(Error::KeyMismatch)?;
    if weights.len() != points.len() {
        return Err(Error::KeyMismatch);
    }
    let mut acc = first.as_vector() * 0.0;
    for (q, p) in weights.iter().zip(points) {
        acc.axpy(*q, p.as_vector(), 1.0);
    }
    Weights::from_vector(acc)
}

/// Keyed version of [`weighted_mean`], summed in key order.
pub fn substitute(q: &BTreeMap<ExpertKey, f64>, u: &BTreeMap<ExpertKey, Weights>) -> Result<Weights> {
    if q.len() != u.len() || q.keys().zip(u.keys()).any(|(a, b)| a != b) {
        return Err(Error::KeyMismatch);
    }
    let weights: Vec<f64> = q.values().copied().collect();
    let points: Vec<Weights> = u.values().cloned().collect();
    weighted_mean(&weights, &points)
}

/// A family of experts together with its mixable loss and substitution.
pub trait ExpertFamily {
    type Expert;
    type Prediction: Clone;
    type Outcome: ?Sized;

    fn spawn(&self, key: &ExpertKey) -> Result<Self::Expert>;
    fn predict(&self, expert: &Self::Expert) -> Self::Prediction;
    fn loss(&self, outcome: &Self::Outcome, prediction: &Self::Prediction) -> Result<f64>;
    /// Must satisfy `loss(substitute(Q, U)) <= -1/eta ln sum_i Q_i exp(-eta loss(U_i))`.
    fn substitute(&self, weights: &[f64], predictions: &[Self::Prediction]) -> Result<Self::Prediction>;
    fn update(&self, expert: &mut Self::Expert, outcome: &Self::Outcome) -> Result<()>;
    /// Mixability constant used as the meta learning rate.
    fn mixability(&self) -> f64 {
        1.0
    }
}

struct Slot<E> {
    expert: E,
    balance: f64,
    expert_loss: f64,
    meta_loss: f64,
}

struct Pending<P> {
    predictions: Vec<P>,
    weights: Vec<f64>,
    played: P,
}

/// Running check of `sum_{s in I, s <= t} (meta loss - expert loss) <= (2 ln t + ln M) / eta`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct AdaptiveRegretStats {
    pub checks: usize,
    /// Smallest `bound - lhs` seen; negative means the inequality failed.
    pub worst_margin: f64,
    pub worst_round: usize,
    pub worst_key: Option<ExpertKey>,
}

/// Final ledger of an expert at retirement.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RetiredExpert {
    pub key: ExpertKey,
    pub expert_loss: f64,
    pub meta_loss: f64,
}

/// Result of one meta round.
#[derive(Clone, Debug)]
pub struct MetaRound<P> {
    pub round: usize,
    pub played: P,
    pub loss: f64,
    pub active: usize,
    pub weights: Vec<f64>,
}

pub struct MetaState<F: ExpertFamily> {
    family: F,
    grid: Grid,
    horizon: usize,
    t: usize,
    active: BTreeMap<ExpertKey, Slot<F::Expert>>,
    pending: Option<Pending<F::Prediction>>,
    spawned: usize,
    stats: AdaptiveRegretStats,
    retired: Option<Vec<RetiredExpert>>,
}

impl<F: ExpertFamily> MetaState<F> {
    pub fn new(family: F, grid: Grid, horizon: usize) -> Result<Self> {
        if horizon < 2 {
            return Err(Error::Param(format!("horizon must be >= 2, got {horizon}")));
        }
        if grid.is_empty() {
            return Err(Error::Param("empty grid".into()));
        }
        Ok(MetaState {
            family,
            grid,
            horizon,
            t: 0,
            active: BTreeMap::new(),
            pending: None,
            spawned: 0,
            stats: AdaptiveRegretStats {
                worst_margin: f64::INFINITY,
                ..Default::default()
            },
            retired: None,
        })
    }

    /// Keeps the final ledgers of retired experts.
    pub fn record_retirements(&mut self) {
        self.retired.get_or_insert_with(Vec::new);
    }

    pub fn retired(&self) -> &[RetiredExpert] {
        self.retired.as_deref().unwrap_or(&[])
    }

    pub fn family(&self) -> &F {
        &self.family
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Completed rounds.
    pub fn round(&self) -> usize {
        self.t
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    pub fn spawned_total(&self) -> usize {
        self.spawned
    }

    pub fn active_keys(&self) -> impl Iterator<Item = &ExpertKey> {
        self.active.keys()
    }

    pub fn expert(&self, key: &ExpertKey) -> Option<&F::Expert> {
        self.active.get(key).map(|s| &s.expert)
    }

    /// The ledger `F` of every active expert.
    pub fn balances(&self) -> BTreeMap<ExpertKey, f64> {
        self.active.iter().map(|(k, s)| (*k, s.balance)).collect()
    }

    pub fn adaptive_regret(&self) -> &AdaptiveRegretStats {
        &self.stats
    }

    /// Right-hand side `(2 ln t + ln M) / eta` of the adaptive regret bound.
    pub fn adaptive_bound(&self, t: usize) -> f64 {
        (2.0 * (t as f64).ln() + (self.grid.len() as f64).ln()) / self.family.mixability()
    }

    /// Spawns this round's experts and returns the point to play.
    pub fn predict(&mut self) -> Result<F::Prediction> {
        if let Some(p) = &self.pending {
            return Ok(p.played.clone());
        }
        let t = self.t + 1;
        if t > self.horizon {
            return Err(Error::Param(format!("round {t} beyond horizon {}", self.horizon)));
        }
        for interval in starting_at(t, self.horizon) {
            for (beta_index, &beta) in self.grid.betas.iter().enumerate() {
                let key = ExpertKey { beta_index, beta, interval };
                let expert = self.family.spawn(&key).map_err(|e| keyed(&key, e))?;
                self.active.insert(key, Slot { expert, balance: 0.0, expert_loss: 0.0, meta_loss: 0.0 });
                self.spawned += 1;
            }
        }
        let predictions: Vec<F::Prediction> = self.active.values().map(|s| self.family.predict(&s.expert)).collect();
        let balances: Vec<f64> = self.active.values().map(|s| s.balance).collect();
        let weights = log_domain_weights(&balances, self.family.mixability());
        let played = self.family.substitute(&weights, &predictions)?;
        self.pending = Some(Pending { predictions, weights, played: played.clone() });
        Ok(played)
    }

    /// Observes the outcome, updates ledgers and experts, and retires finished experts.
    pub fn update(&mut self, outcome: &F::Outcome) -> Result<MetaRound<F::Prediction>> {
        self.predict()?;
        let pending = self.pending.take().expect("predict fills the pending round");
        let t = self.t + 1;
        let meta_loss = self.family.loss(outcome, &pending.played)?;
        let bound = self.adaptive_bound(t);
        for ((key, slot), prediction) in self.active.iter_mut().zip(&pending.predictions) {
            let loss = self.family.loss(outcome, prediction).map_err(|e| keyed(key, e))?;
            slot.balance += loss - meta_loss;
            slot.expert_loss += loss;
            slot.meta_loss += meta_loss;
            let margin = bound + slot.balance;
            self.stats.checks += 1;
            if margin < self.stats.worst_margin {
                self.stats.worst_margin = margin;
                self.stats.worst_round = t;
                self.stats.worst_key = Some(*key);
            }
            self.family.update(&mut slot.expert, outcome).map_err(|e| keyed(key, e))?;
        }
        let active = self.active.len();
        for interval in ending_at(t, self.horizon) {
            for (beta_index, &beta) in self.grid.betas.iter().enumerate() {
                let key = ExpertKey { beta_index, beta, interval };
                if let Some(slot) = self.active.remove(&key) {
                    if let Some(log) = self.retired.as_mut() {
                        log.push(RetiredExpert { key, expert_loss: slot.expert_loss, meta_loss: slot.meta_loss });
                    }
                }
            }
        }
        self.t = t;
        Ok(MetaRound { round: t, played: pending.played, loss: meta_loss, active, weights: pending.weights })
    }

    /// One full round: predict, observe, update.
    pub fn meta_round(&mut self, outcome: &F::Outcome) -> Result<MetaRound<F::Prediction>> {
        self.update(outcome)
    }
}

fn keyed(key: &ExpertKey, e: Error) -> Error {
    Error::Expert { key: key.to_string(), source: Box::new(e) }
}

/// Damped online Newton experts on Cover's loss with weighted-mean substitution.
#[derive(Clone, Debug)]
pub struct DonsFamily {
    pub assets: usize,
    pub horizon: usize,
    pub eta: f64,
    pub gradient_form: GradientForm,
}

impl ExpertFamily for DonsFamily {
    type Expert = DonsState;
    type Prediction = Weights;
    type Outcome = ReturnVector;

    fn spawn(&self, key: &ExpertKey) -> Result<DonsState> {
        let params = DonsParams {
            assets: self.assets,
            horizon: self.horizon,
            eta: self.eta,
            beta: key.beta,
            gradient_form: self.gradient_form,
        };
        dons_init(params)
    }

    fn predict(&self, expert: &DonsState) -> Weights {
        expert.predict()
    }

    fn loss(&self, outcome: &ReturnVector, prediction: &Weights) -> Result<f64> {
        cover_loss(outcome, prediction)
    }

    fn substitute(&self, weights: &[f64], predictions: &[Weights]) -> Result<Weights> {
        weighted_mean(weights, predictions)
    }

    fn update(&self, expert: &mut DonsState, outcome: &ReturnVector) -> Result<()> {
        expert.observe(outcome)
    }
}

pub type AdaMixDons = MetaState<DonsFamily>;

/// The full algorithm with its default constants.
pub fn adamix_dons(assets: usize, horizon: usize) -> Result<AdaMixDons> {
    adamix_dons_with(assets, horizon, None, GradientForm::Consistent)
}

/// As [`adamix_dons`], optionally overriding the experts' base rate.
pub fn adamix_dons_with(
    assets: usize,
    horizon: usize,
    eta: Option<f64>,
    gradient_form: GradientForm,
) -> Result<AdaMixDons> {
    let grid = grid(assets, horizon)?;
    let eta = eta.unwrap_or_else(|| default_eta(assets, horizon));
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Param(format!("eta must be positive, got {eta}")));
    }
    MetaState::new(DonsFamily { assets, horizon, eta, gradient_form }, grid, horizon)
}
