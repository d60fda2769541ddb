// A single damped online Newton learner with per-round diagnostics.

use adamix_dons::geometry::lift;
use adamix_dons::harness::{generate, Model};
use adamix_dons::{dons_init, DonsParams};

pub fn run_example() -> adamix_dons::Result<()> {
    let (d, horizon) = (3, 256);
    let returns = generate(Model::KellyDrift, d, horizon, 7)?;
    let params = DonsParams::new(d, horizon, 1.0 / (16.0 * d as f64))?.with_eta(2f64.powi(-14))?;
    let mut learner = dons_init(params)?;
    learner.enable_verification();

    let mut loss = 0.0;
    for r in &returns {
        let rec = learner.update(r)?;
        loss += rec.loss;
        if rec.round % 64 == 0 {
            let diag = rec.diagnostics.as_ref().expect("verification is on");
            println!(
                "round {:3}: decrement {:.3e}, distance to minimizer {:.3e}, barrier changes {}",
                rec.round,
                diag.decrement,
                diag.oracle_distance.unwrap_or(f64::NAN),
                diag.barrier_changes
            );
        }
    }
    println!("cumulative loss {loss:.4}");
    println!("final portfolio {:?}", lift(learner.iterate()).as_slice());
    Ok(())
}

fn main() -> adamix_dons::Result<()> {
    run_example()
}
