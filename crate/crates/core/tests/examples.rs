macro_rules! example {
    ($module:ident, $file:literal, $test:ident) => {
        #[allow(dead_code)]
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }

        #[test]
        fn $test() {
            $module::run_example().expect(concat!($file, " should run"));
        }
    };
}

example!(geometry, "geometry.rs", geometry_example_runs);
example!(damped_newton, "damped_newton.rs", damped_newton_example_runs);
example!(dons_learner, "dons_learner.rs", dons_learner_example_runs);
example!(covering, "covering.rs", covering_example_runs);
example!(adamix_portfolio, "adamix_portfolio.rs", adamix_portfolio_example_runs);
example!(custom_expert_family, "custom_expert_family.rs", custom_expert_family_example_runs);
example!(compare_baselines, "compare_baselines.rs", compare_baselines_example_runs);
example!(market_data, "market_data.rs", market_data_example_runs);
example!(verify_invariants, "verify_invariants.rs", verify_invariants_example_runs);
example!(bench_scaling, "bench_scaling.rs", bench_scaling_example_runs);
