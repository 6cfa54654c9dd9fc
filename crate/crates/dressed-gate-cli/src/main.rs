//! Command-line runner: scenario execution, parameter sweeps and the
//! assumption-hierarchy report, with CSV/text outputs.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use dressed_gate::error::GateError;
use dressed_gate::experiment::run_scenario;

use crate::config::{parse_config, RunConfig};
use crate::output::SweepRow;

#[derive(Parser)]
#[command(
    name = "dressed-gate",
    about = "Simulator for a gradient-driven dressed-state two-qubit gate",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration file (flat key: value format).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides output.dir from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Maximum concurrent scenario jobs; overrides parallel_jobs.
    #[arg(long)]
    jobs: Option<usize>,
    /// Assert the run involves no randomness anywhere (it never does;
    /// the assertion is recorded in summary.txt).
    #[arg(long)]
    seedless: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one scenario and write trajectory.csv, summary.txt and
    /// budget.csv.
    Run(CommonArgs),
    /// Execute the configured sweep and write sweep.csv.
    Sweep(CommonArgs),
    /// Print the assumption-hierarchy report for the configured
    /// parameters (always exits 0).
    Validate(CommonArgs),
}

fn exit_code_for(err: &GateError) -> u8 {
    match err {
        GateError::Config(_)
        | GateError::InvalidArgument(_)
        | GateError::ShapeMismatch(_)
        | GateError::Truncation(_) => 2,
        GateError::Integration(_) | GateError::Singular(_) | GateError::NoSolution(_) => 3,
        GateError::InvariantViolation(_) => 4,
    }
}

fn load(common: &CommonArgs) -> Result<RunConfig, GateError> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| GateError::Config(format!("cannot read {}: {e}", common.config.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    if let Some(jobs) = common.jobs {
        if jobs == 0 {
            return Err(GateError::Config("--jobs must be >= 1".into()));
        }
        cfg.parallel_jobs = jobs;
    }
    Ok(cfg)
}

fn cmd_run(common: &CommonArgs) -> Result<(), GateError> {
    let cfg = load(common)?;
    let schedule = cfg.plan.schedule();
    let (traj, summary) = run_scenario(&cfg.plan, &schedule, &cfg.integrator)?;
    let io = |e: std::io::Error| GateError::Config(format!("writing outputs: {e}"));
    output::write_file(&cfg.out_dir, "trajectory.csv", &output::trajectory_csv(&traj)).map_err(io)?;
    output::write_file(
        &cfg.out_dir,
        "summary.txt",
        &output::summary_txt(cfg.scenario_name.as_deref(), &summary, &schedule, common.seedless),
    )
    .map_err(io)?;
    output::write_file(
        &cfg.out_dir,
        "budget.csv",
        &output::budget_csv(&summary.params, summary.gate_time),
    )
    .map_err(io)?;
    println!(
        "{}: F = {:.6}, IF = {:.3e}, outputs in {}",
        cfg.scenario_name.as_deref().unwrap_or("run"),
        summary.final_fidelity,
        summary.infidelity,
        cfg.out_dir.display()
    );
    Ok(())
}

fn cmd_sweep(common: &CommonArgs) -> Result<(), GateError> {
    let cfg = load(common)?;
    let Some(sweep) = cfg.sweep.clone() else {
        return Err(GateError::Config("sweep block missing (sweep.parameter, sweep.values)".into()));
    };
    let n = sweep.values.len();
    let results: Mutex<Vec<Option<Result<SweepRow, GateError>>>> =
        Mutex::new((0..n).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let cancel = AtomicBool::new(false);

    std::thread::scope(|scope| {
        for _ in 0..cfg.parallel_jobs.min(n) {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::SeqCst);
                if idx >= n || cancel.load(Ordering::SeqCst) {
                    return;
                }
                let value = sweep.values[idx];
                let outcome = (|| {
                    let plan = sweep.parameter.apply(&cfg.plan, value)?;
                    let schedule = plan.schedule();
                    let started = Instant::now();
                    let (_, summary) = run_scenario(&plan, &schedule, &cfg.integrator)?;
                    Ok(SweepRow {
                        value,
                        final_fidelity: summary.final_fidelity,
                        peak_phonons: summary.peak_mean_phonons,
                        gate_time_s: summary.gate_time,
                        runtime_s: started.elapsed().as_secs_f64(),
                    })
                })();
                if outcome.is_err() {
                    cancel.store(true, Ordering::SeqCst);
                }
                results.lock().unwrap()[idx] = Some(outcome);
            });
        }
    });

    let mut rows = Vec::new();
    let mut first_error: Option<GateError> = None;
    for slot in results.into_inner().unwrap() {
        match slot {
            Some(Ok(row)) => rows.push(row),
            Some(Err(e)) => {
                first_error.get_or_insert(e);
            }
            None => {}
        }
    }
    // partial results are flushed even when a job failed
    output::write_file(
        &cfg.out_dir,
        "sweep.csv",
        &output::sweep_csv(sweep.parameter.name(), &rows),
    )
    .map_err(|e| GateError::Config(format!("writing outputs: {e}")))?;
    match first_error {
        Some(e) => Err(e),
        None => {
            println!(
                "sweep over {}: {} rows in {}",
                sweep.parameter.name(),
                rows.len(),
                cfg.out_dir.display()
            );
            Ok(())
        }
    }
}

fn cmd_validate(common: &CommonArgs) -> Result<(), GateError> {
    let cfg = load(common)?;
    print!("{}", output::validate_report(&cfg.plan.params, 4.0));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(common) => cmd_run(common),
        Command::Sweep(common) => cmd_sweep(common),
        Command::Validate(common) => cmd_validate(common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
