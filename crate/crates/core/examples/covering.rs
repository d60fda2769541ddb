// Geometric covering intervals: which are alive, and how a range decomposes.

use adamix_dons::covering::{active_at, ending_at, family_size, partition, starting_at, Interval};

fn show(ivs: &[Interval], sep: &str) -> String {
    ivs.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(sep)
}

pub fn run_example() -> adamix_dons::Result<()> {
    let horizon = 20;
    println!("{} intervals cover [1, {horizon}]", family_size(horizon));
    for t in [1, 6, 12, 16] {
        println!("t={t:2} active {}", show(&active_at(t, horizon), " "));
    }
    println!("start at 8: {}", show(&starting_at(8, horizon), " "));
    println!("end at 15:  {}", show(&ending_at(15, horizon), " "));
    println!("[3, 17] = {}", show(&partition(3, 17, horizon), " + "));
    Ok(())
}

fn main() -> adamix_dons::Result<()> {
    run_example()
}
