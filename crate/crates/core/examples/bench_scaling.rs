// Per-round cost of the meta-algorithm as the horizon grows.

use adamix_dons::harness::{bench, format_bench_table};

pub fn run_example() -> adamix_dons::Result<()> {
    let rows = bench(&[2, 4], &[128, 512], 1)?;
    print!("{}", format_bench_table(&rows));
    Ok(())
}

fn main() -> adamix_dons::Result<()> {
    run_example()
}
