// Lifted portfolios, Cover's loss and the log-barrier.

use adamix_dons::geometry::{barrier_grad, cover_loss, lift, loss_grad, mix_uniform, BarrierParams};
use adamix_dons::{ReturnVector, Weights};

pub fn run_example() -> adamix_dons::Result<()> {
    // three assets, free coordinates are the first two weights
    let v = Weights::new(vec![0.5, 0.3])?;
    println!("lifted portfolio {:?}", lift(&v).as_slice());

    let r = ReturnVector::normalized(vec![1.10, 0.95, 1.02])?;
    println!("price relatives  {:?}", r.as_slice());
    println!("loss             {:.6}", cover_loss(&r, &v)?);
    println!("gradient         {:?}", loss_grad(&r, &v)?.as_slice());

    let mixed = mix_uniform(&v, 100);
    println!("mixed for T=100  {:?}", lift(&mixed).as_slice());

    let barrier = BarrierParams::constant(3, 0.01);
    println!("barrier gradient {:?}", barrier_grad(&v, &barrier)?.as_slice());
    Ok(())
}

fn main() -> adamix_dons::Result<()> {
    run_example()
}
