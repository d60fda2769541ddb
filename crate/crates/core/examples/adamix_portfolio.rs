// The adaptive meta-algorithm over damped Newton experts on a simulated market.

use adamix_dons::baselines::best_crp;
use adamix_dons::geometry::{cover_loss, lift};
use adamix_dons::harness::{generate, Model};
use adamix_dons::adamix_dons;

pub fn run_example() -> adamix_dons::Result<()> {
    let (d, horizon) = (3, 512);
    let returns = generate(Model::IidDirichlet, d, horizon, 11)?;
    let mut meta = adamix_dons(d, horizon)?;
    println!("grid of {} curvature values: {:?}", meta.grid().len(), meta.grid().betas());

    let mut loss = 0.0;
    for r in &returns {
        let round = meta.meta_round(r)?;
        loss += round.loss;
        if round.round.is_power_of_two() {
            println!("round {:3}: {:2} experts, playing {:?}", round.round, round.active, lift(&round.played).as_slice());
        }
    }
    let star = best_crp(&returns)?;
    let star_loss: f64 = returns.iter().map(|r| cover_loss(r, &star.weights())).sum::<adamix_dons::Result<f64>>()?;
    println!("loss {loss:.4}, best constant portfolio {star_loss:.4}, regret {:.4}", loss - star_loss);
    let stats = meta.adaptive_regret();
    println!("adaptive regret: {} checks, worst margin {:.3}", stats.checks, stats.worst_margin);
    Ok(())
}

fn main() -> adamix_dons::Result<()> {
    run_example()
}
