// The invariant suite, once with the consistent step and once with the literal one.

use adamix_dons::harness::{generate, verify, Model, VerifyLevel, VerifyOptions};
use adamix_dons::GradientForm;

pub fn run_example() -> adamix_dons::Result<()> {
    let returns = generate(Model::IidDirichlet, 3, 256, 1)?;
    for form in [GradientForm::Consistent, GradientForm::AsWritten] {
        let mut options = VerifyOptions::new(VerifyLevel::Fast);
        options.gradient_form = form;
        let report = verify(&returns, &options)?;
        println!("{form:?}: {}", if report.passed { "all invariants hold" } else { "violations found" });
        for check in report.checks.iter().filter(|c| !c.passed) {
            println!("  {}", check.summary());
        }
    }
    Ok(())
}

fn main() -> adamix_dons::Result<()> {
    run_example()
}
