// Every learner on the same market, with regret against the best constant portfolio.

use adamix_dons::harness::{generate, run_experiment, Algo, ExperimentConfig, Model};

pub fn run_example() -> adamix_dons::Result<()> {
    let returns = generate(Model::KellyDrift, 4, 512, 3)?;
    println!("{:<12} {:>12} {:>10}", "algorithm", "log wealth", "regret");
    for algo in Algo::ALL {
        let report = run_experiment(&ExperimentConfig::new(algo), &returns)?.report;
        println!("{:<12} {:>12.4} {:>10.4}", algo.to_string(), report.log_wealth, report.regret);
    }
    Ok(())
}

fn main() -> adamix_dons::Result<()> {
    run_example()
}
