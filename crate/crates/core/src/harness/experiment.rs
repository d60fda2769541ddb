use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::adamix::adamix_dons_with;
use crate::baselines::{best_crp, Eg, Ons, PortfolioLearner, SoftBayes};
use crate::dons::{dons_init, DonsParams, GradientForm};
use crate::error::{Error, Result};
use crate::geometry::{cover_loss, lift, ReturnVector};

use super::verify::DonsChecker;
use super::SCHEMA_VERSION;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    AdamixDons,
    Dons,
    Ons,
    Eg,
    Softbayes,
}

impl Algo {
    pub const ALL: [Algo; 5] = [Algo::AdamixDons, Algo::Dons, Algo::Ons, Algo::Eg, Algo::Softbayes];
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algo::AdamixDons => "adamix-dons",
            Algo::Dons => "dons",
            Algo::Ons => "ons",
            Algo::Eg => "eg",
            Algo::Softbayes => "softbayes",
        })
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algo::ALL
            .into_iter()
            .find(|a| a.to_string() == s)
            .ok_or_else(|| Error::Param(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub algo: Algo,
    /// Base rate of the damped Newton experts.
    pub eta: Option<f64>,
    /// Curvature budget of a standalone damped Newton run (defaults to `1/(16 d)`).
    pub beta: Option<f64>,
    pub as_written: bool,
    /// Check invariants every round and list violations in the report.
    pub verify: bool,
    /// Keep per-round rows for a trace file.
    pub trace: bool,
}

impl ExperimentConfig {
    pub fn new(algo: Algo) -> Self {
        ExperimentConfig { algo, eta: None, beta: None, as_written: false, verify: false, trace: false }
    }

    fn gradient_form(&self) -> GradientForm {
        if self.as_written {
            GradientForm::AsWritten
        } else {
            GradientForm::Consistent
        }
    }

    fn dons_params(&self, assets: usize, horizon: usize) -> Result<DonsParams> {
        let beta = self.beta.unwrap_or(1.0 / (16.0 * assets as f64));
        let mut params = DonsParams::new(assets, horizon, beta)?.with_gradient_form(self.gradient_form());
        if let Some(eta) = self.eta {
            params = params.with_eta(eta)?;
        }
        Ok(params)
    }
}

/// Builds the learner named by `config` for a market of the given size.
pub fn build_learner(config: &ExperimentConfig, assets: usize, horizon: usize) -> Result<Box<dyn PortfolioLearner>> {
    Ok(match config.algo {
        Algo::AdamixDons => Box::new(adamix_dons_with(assets, horizon, config.eta, config.gradient_form())?),
        Algo::Dons => Box::new(dons_init(config.dons_params(assets, horizon)?)?),
        Algo::Ons => Box::new(Ons::new(assets, horizon)),
        Algo::Eg => Box::new(Eg::new(assets, horizon)),
        Algo::Softbayes => Box::new(SoftBayes::new(assets, horizon)),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub algo: Algo,
    pub assets: usize,
    pub horizon: usize,
    pub cumulative_loss: f64,
    /// `-cumulative_loss`, the log of the wealth multiplier.
    pub log_wealth: f64,
    pub best_crp: Vec<f64>,
    pub best_crp_loss: f64,
    pub regret: f64,
    /// Regret after each round against the full-horizon best CRP.
    pub regret_trajectory: Vec<f64>,
    pub active_experts: Vec<usize>,
    pub round_seconds: Vec<f64>,
    pub mean_round_seconds: f64,
    pub violations: Vec<String>,
}

impl MetricsReport {
    /// The report with every wall-clock field zeroed.
    pub fn without_timing(&self) -> MetricsReport {
        MetricsReport {
            round_seconds: vec![0.0; self.round_seconds.len()],
            mean_round_seconds: 0.0,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub round: usize,
    pub loss: f64,
    pub cumulative_loss: f64,
    pub regret: f64,
    pub active_experts: usize,
    pub seconds: f64,
    /// Lifted played portfolio.
    pub played: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Experiment {
    pub report: MetricsReport,
    pub trace: Vec<TraceRow>,
}

/// Runs `config.algo` over `returns` and measures regret against the best CRP.
pub fn run_experiment(config: &ExperimentConfig, returns: &[ReturnVector]) -> Result<Experiment> {
    let horizon = returns.len();
    let assets = returns.first().ok_or_else(|| Error::Data("empty return sequence".into()))?.dim();
    if returns.iter().any(|r| r.dim() != assets) {
        return Err(Error::Data("return vectors have different lengths".into()));
    }
    if horizon < 2 {
        return Err(Error::Param("need at least 2 rounds".into()));
    }

    let mut played = Vec::with_capacity(horizon);
    let mut losses = Vec::with_capacity(horizon);
    let mut active = Vec::with_capacity(horizon);
    let mut seconds = Vec::with_capacity(horizon);
    let mut violations = Vec::new();

    if config.algo == Algo::Dons && config.verify {
        let mut state = dons_init(config.dons_params(assets, horizon)?)?;
        state.enable_verification();
        let mut checker = DonsChecker::new(state.params());
        for (i, r) in returns.iter().enumerate() {
            let start = Instant::now();
            let before = state.grad_f(state.iterate())?;
            let record = state.update(r).map_err(|e| e.at_round(i + 1))?;
            let after = state.grad_f(&record.iterate)?;
            seconds.push(start.elapsed().as_secs_f64());
            checker.observe(&record, Some((&before, &after)));
            played.push(record.played.clone());
            losses.push(record.loss);
            active.push(1);
        }
        violations.extend(checker.finish().iter().filter(|c| !c.passed).map(|c| c.summary()));
    } else {
        let mut learner = build_learner(config, assets, horizon)?;
        for (i, r) in returns.iter().enumerate() {
            let start = Instant::now();
            let u = learner.predict().map_err(|e| e.at_round(i + 1))?;
            let n = learner.active_experts();
            learner.update(r).map_err(|e| e.at_round(i + 1))?;
            seconds.push(start.elapsed().as_secs_f64());
            losses.push(cover_loss(r, &u).map_err(|e| e.at_round(i + 1))?);
            if config.verify {
                let floor = 1.0 / (assets * horizon) as f64;
                let min = u.min_lifted();
                if config.algo != Algo::Softbayes && min < floor * (1.0 - 1e-12) {
                    violations.push(format!("round {}: played coordinate {min:e} below 1/(dT) = {floor:e}", i + 1));
                }
            }
            played.push(u);
            active.push(n);
        }
    }

    let crp = best_crp(returns)?;
    let comparator = crp.weights();
    let mut cumulative = 0.0;
    let mut crp_cumulative = 0.0;
    let mut trajectory = Vec::with_capacity(horizon);
    let mut trace = Vec::new();
    for (t, r) in returns.iter().enumerate() {
        cumulative += losses[t];
        crp_cumulative += cover_loss(r, &comparator)?;
        trajectory.push(cumulative - crp_cumulative);
        if config.trace {
            trace.push(TraceRow {
                round: t + 1,
                loss: losses[t],
                cumulative_loss: cumulative,
                regret: cumulative - crp_cumulative,
                active_experts: active[t],
                seconds: seconds[t],
                played: lift(&played[t]).as_slice().to_vec(),
            });
        }
    }
    let mean_round_seconds = seconds.iter().sum::<f64>() / horizon as f64;
    let report = MetricsReport {
        schema_version: SCHEMA_VERSION,
        algo: config.algo,
        assets,
        horizon,
        cumulative_loss: cumulative,
        log_wealth: -cumulative,
        best_crp: lift(&comparator).as_slice().to_vec(),
        best_crp_loss: crp.loss_star,
        regret: cumulative - crp.loss_star,
        regret_trajectory: trajectory,
        active_experts: active,
        round_seconds: seconds,
        mean_round_seconds,
        violations,
    };
    Ok(Experiment { report, trace })
}

/// Writes trace rows as CSV with columns `round,loss,cumulative_loss,regret,active_experts,seconds,played_1..played_d`.
pub fn write_trace<W: Write>(writer: W, rows: &[TraceRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let d = rows.first().map_or(0, |r| r.played.len());
    let mut header: Vec<String> =
        ["round", "loss", "cumulative_loss", "regret", "active_experts", "seconds"].map(String::from).to_vec();
    header.extend((1..=d).map(|i| format!("played_{i}")));
    wtr.write_record(&header)?;
    for row in rows {
        let mut fields = vec![
            row.round.to_string(),
            row.loss.to_string(),
            row.cumulative_loss.to_string(),
            row.regret.to_string(),
            row.active_experts.to_string(),
            row.seconds.to_string(),
        ];
        fields.extend(row.played.iter().map(|x| x.to_string()));
        wtr.write_record(&fields)?;
    }
    wtr.flush()?;
    Ok(())
}
