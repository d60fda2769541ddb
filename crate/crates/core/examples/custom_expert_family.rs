// The meta-algorithm is generic: here it runs Krichevsky-Trofimov estimators
// on a binary sequence whose bias switches halfway, under log loss.

use adamix_dons::adamix::{grid, ExpertKey};
use adamix_dons::{Error, ExpertFamily, MetaState};

struct KtFamily;

/// Counts of ones and zeros seen since the expert woke up.
struct Kt {
    ones: f64,
    zeros: f64,
}

impl ExpertFamily for KtFamily {
    type Expert = Kt;
    type Prediction = f64;
    type Outcome = bool;

    fn spawn(&self, _key: &ExpertKey) -> adamix_dons::Result<Kt> {
        Ok(Kt { ones: 0.0, zeros: 0.0 })
    }

    fn predict(&self, e: &Kt) -> f64 {
        (e.ones + 0.5) / (e.ones + e.zeros + 1.0)
    }

    fn loss(&self, bit: &bool, p: &f64) -> adamix_dons::Result<f64> {
        let q = if *bit { *p } else { 1.0 - p };
        if q <= 0.0 {
            return Err(Error::DegenerateReturn(q));
        }
        Ok(-q.ln())
    }

    // log loss is 1-mixable and the mean forecast attains the mixture bound exactly
    fn substitute(&self, w: &[f64], ps: &[f64]) -> adamix_dons::Result<f64> {
        Ok(w.iter().zip(ps).map(|(w, p)| w * p).sum())
    }

    fn update(&self, e: &mut Kt, bit: &bool) -> adamix_dons::Result<()> {
        if *bit {
            e.ones += 1.0;
        } else {
            e.zeros += 1.0;
        }
        Ok(())
    }
}

pub fn run_example() -> adamix_dons::Result<()> {
    let horizon = 1024;
    // deterministic pattern: mostly ones, then mostly zeros
    let bits: Vec<bool> = (0..horizon).map(|t| if t < horizon / 2 { t % 10 != 0 } else { t % 10 == 0 }).collect();
    let mut meta = MetaState::new(KtFamily, grid(2, horizon)?, horizon)?;
    let mut global = Kt { ones: 0.0, zeros: 0.0 };
    let (mut meta_loss, mut global_loss) = (0.0, 0.0);
    for (t, bit) in bits.iter().enumerate() {
        global_loss += KtFamily.loss(bit, &KtFamily.predict(&global))?;
        KtFamily.update(&mut global, bit)?;
        let round = meta.meta_round(bit)?;
        meta_loss += round.loss;
        if (t + 1) % 256 == 0 {
            println!("t={:4} forecast {:.3} meta loss {:7.2} single estimator {:7.2}", t + 1, round.played, meta_loss, global_loss);
        }
    }
    println!("worst adaptive-regret margin {:.3}", meta.adaptive_regret().worst_margin);
    Ok(())
}

fn main() -> adamix_dons::Result<()> {
    run_example()
}
