// Synthetic markets and the returns CSV format.

use adamix_dons::harness::{generate, read_returns, write_returns, Model};

pub fn run_example() -> adamix_dons::Result<()> {
    let dir = std::env::temp_dir().join(format!("adamix-dons-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    for model in Model::ALL {
        let returns = generate(model, 3, 64, 1)?;
        let path = dir.join(format!("{model}.csv"));
        write_returns(&path, &returns)?;
        let back = read_returns(&path)?;
        assert_eq!(back, returns);
        let worst = returns.iter().flat_map(|r| r.as_slice().iter().copied()).fold(f64::INFINITY, f64::min);
        println!("{:<17} {} rows, smallest relative {worst:.2e}, first {:?}", model.to_string(), back.len(), returns[0].as_slice());
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

fn main() -> adamix_dons::Result<()> {
    run_example()
}
