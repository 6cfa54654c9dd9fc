//! Runs the named scenarios and prints their summaries.
//!
//! cargo run --release --example scenarios [name ...]

use dressed_gate::experiment::{run_scenario, scenario, SCENARIO_NAMES};
use dressed_gate::propagation::IntegratorConfig;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let names: Vec<&str> = if args.is_empty() {
        SCENARIO_NAMES.to_vec()
    } else {
        args.iter().map(|s| s.as_str()).collect()
    };
    for name in names {
        let sc = scenario(name).expect("known scenario");
        let started = std::time::Instant::now();
        let (_, summary) = run_scenario(&sc.plan, &sc.schedule, &IntegratorConfig::default())
            .expect("scenario run");
        let dt = started.elapsed().as_secs_f64();
        println!(
            "{name}: F = {:.6}  IF = {:.3e}  peak<N> = {:.4}  norm_err = {:.2e}  ({dt:.1} s)",
            summary.final_fidelity,
            summary.infidelity,
            summary.peak_mean_phonons,
            summary.max_norm_error
        );
    }
}
