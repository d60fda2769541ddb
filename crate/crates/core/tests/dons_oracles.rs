//! The damped Newton learner against hand-written two-asset recurrences.

use std::f64::consts::E;

use proptest::prelude::*;

use adamix_dons::dons::{dons_init, DonsParams, GradientForm};
use adamix_dons::geometry::{lift, ReturnVector};
use adamix_dons::harness::{generate, Model};

/// The whole learner for `d = 2` in scalar arithmetic: `w` is the weight on asset 1.
struct Scalar {
    horizon: f64,
    eta: f64,
    beta: f64,
    w: f64,
    g_acc: f64,
    v: f64,
    rho: [f64; 2],
    rates: [f64; 2],
}

impl Scalar {
    fn new(horizon: usize, eta: f64, beta: f64) -> Self {
        Scalar {
            horizon: horizon as f64,
            eta,
            beta,
            w: 0.5,
            g_acc: 0.0,
            v: beta / 2.0,
            rho: [2.0, 2.0],
            rates: [eta, eta],
        }
    }

    fn played(&self) -> f64 {
        (1.0 - 1.0 / self.horizon) * self.w + 1.0 / (2.0 * self.horizon)
    }

    fn psi_prime(w: f64, rates: [f64; 2]) -> f64 {
        -1.0 / (rates[0] * w) + 1.0 / (rates[1] * (1.0 - w))
    }

    fn step(&mut self, r: [f64; 2], as_written: bool) {
        let u = self.played();
        let g = -(r[0] - r[1]) / (r[0] * u + r[1] * (1.0 - u));
        let ub = [u, 1.0 - u];
        for (rho, u) in self.rho.iter_mut().zip(ub) {
            if 2.0 * *rho < 1.0 / u {
                *rho = 1.0 / u;
            }
        }
        let rates = self.rho.map(|rho| self.eta * ((rho / 2.0).ln() / self.horizon.ln()).exp());
        let w = self.w;
        self.g_acc += g * (1.0 - self.beta * g * w / 4.0) - Self::psi_prime(w, rates) + Self::psi_prime(w, self.rates);
        self.v += self.beta * g * g / 4.0;
        let mut nabla = self.g_acc + self.v * w + Self::psi_prime(w, rates);
        if as_written {
            nabla += self.beta * 2.0 * w / 4.0;
        }
        let h = 1.0 / (rates[0] * w * w) + 1.0 / (rates[1] * (1.0 - w) * (1.0 - w)) + self.v;
        let lambda = nabla.abs() / h.sqrt();
        self.w = w - nabla / h / (1.0 + 4.0 * (E * self.eta).sqrt() * lambda);
        self.rates = rates;
    }
}

fn compare(returns: &[ReturnVector], eta: f64, beta: f64, as_written: bool) -> f64 {
    let horizon = returns.len();
    let form = if as_written { GradientForm::AsWritten } else { GradientForm::Consistent };
    let params = DonsParams::new(2, horizon, beta).unwrap().with_eta(eta).unwrap().with_gradient_form(form);
    let mut state = dons_init(params).unwrap();
    let mut oracle = Scalar::new(horizon, eta, beta);
    let mut worst = 0.0f64;
    for r in returns {
        let rec = state.update(r).unwrap();
        worst = worst.max((rec.played.as_slice()[0] - oracle.played()).abs());
        oracle.step([r.as_slice()[0], r.as_slice()[1]], as_written);
        worst = worst.max((state.iterate().as_slice()[0] - oracle.w).abs() / oracle.w.min(1.0 - oracle.w));
        assert_eq!(state.rho(), &oracle.rho);
    }
    worst
}

#[test]
fn constant_returns_match_scalar_recurrence() {
    let returns = vec![ReturnVector::from_normalized(vec![1.0, 0.5]).unwrap(); 300];
    let err = compare(&returns, 2f64.powi(-10), 1.0 / 32.0, false);
    assert!(err <= 1e-12, "{err:e}");
}

#[test]
fn market_returns_match_scalar_recurrence() {
    for (model, seed) in [(Model::IidDirichlet, 3), (Model::KellyDrift, 4), (Model::Crash, 5)] {
        let returns = generate(model, 2, 400, seed).unwrap();
        for as_written in [false, true] {
            let err = compare(&returns, 2f64.powi(-8), 1.0 / 32.0, as_written);
            assert!(err <= 1e-10, "{model} as_written={as_written}: {err:e}");
        }
    }
}

/// One round with `r = (1, 0)` from the start point, with every quantity written out.
#[test]
fn single_round_tracking_bounds() {
    let (horizon, eta, beta) = (64usize, 2f64.powi(-14), 1.0 / 32.0);
    let params = DonsParams::new(2, horizon, beta).unwrap().with_eta(eta).unwrap();
    let mut state = dons_init(params).unwrap();
    state.enable_verification();
    let rec = state.update(&ReturnVector::from_normalized(vec![1.0, 0.0]).unwrap()).unwrap();
    let diag = rec.diagnostics.unwrap();
    let t = horizon as f64;
    let c = 4.0 * E / 0.25f64.max((1.0 - 1.0 / t).powi(2));
    let bound = 8.0 * (E * eta).sqrt() * c * eta;
    assert!(diag.decrement <= bound, "{} > {bound}", diag.decrement);
    assert!(diag.oracle_distance.unwrap() <= 2.0 * bound);
    // g = -1/u_1 = -2 at the uniform start
    assert!((rec.grad[0] + 2.0).abs() < 1e-15);
    // the learner moves toward the asset that paid
    assert!(state.iterate().as_slice()[0] > 0.5);
    assert!(diag.w_ratio_max <= 1.25 && diag.w_ratio_min >= 0.75);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn played_points_stay_above_floor(
        d in 2usize..6,
        horizon in 16usize..200,
        seed in 0u64..1000,
        log_eta in -14i32..-2,
    ) {
        let returns = generate(Model::Crash, d, horizon, seed).unwrap();
        let params = DonsParams::new(d, horizon, 1.0 / (16.0 * d as f64)).unwrap().with_eta(2f64.powi(log_eta)).unwrap();
        let mut state = dons_init(params).unwrap();
        let floor = 1.0 / (d * horizon) as f64;
        for r in &returns {
            let rec = state.update(r).unwrap();
            for x in lift(&rec.played).as_slice() {
                prop_assert!(*x >= floor * (1.0 - 1e-12));
            }
            prop_assert!(state.iterate().is_interior());
        }
    }

    #[test]
    fn rho_is_monotone_and_within_range(d in 2usize..6, horizon in 16usize..200, seed in 0u64..1000) {
        let returns = generate(Model::KellyDrift, d, horizon, seed).unwrap();
        let params = DonsParams::new(d, horizon, 1.0 / (16.0 * d as f64)).unwrap().with_eta(2f64.powi(-6)).unwrap();
        let mut state = dons_init(params).unwrap();
        let mut prev = state.rho().to_vec();
        for r in &returns {
            state.observe(r).unwrap();
            for (a, b) in prev.iter().zip(state.rho()) {
                prop_assert!(b >= a);
                prop_assert!(*b <= (d * horizon) as f64 * (1.0 + 1e-12));
            }
            prev = state.rho().to_vec();
        }
    }
}
