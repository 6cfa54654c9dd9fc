//! End-to-end checks of the command-line interface: exit codes, file
//! formats and reproducibility.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_dressed-gate")
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dressed-gate-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.cfg");
    fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

#[test]
fn run_gate_only_scenario_writes_all_outputs() {
    let dir = tmp_dir("run");
    let cfg = write_config(&dir, "scenario: fig4-baseline\n");
    let out = dir.join("out");
    let result = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seedless",
    ]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));

    let traj = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = traj.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t_s,fidelity,p_dd,p_uu,re_rho_dd_uu,im_rho_dd_uu,mean_phonons"
    );
    assert_eq!(traj.lines().count(), 501, "header plus 500 records");
    let last: Vec<&str> = traj.lines().last().unwrap().split(',').collect();
    let final_f: f64 = last[1].parse().unwrap();
    assert!(final_f > 0.9999);

    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("scenario: fig4-baseline"));
    assert!(summary.contains("enabled_terms: gate"));
    assert!(summary.contains("seedless: asserted"));

    let budget = fs::read_to_string(out.join("budget.csv")).unwrap();
    assert!(budget.starts_with("section,quantity,value,unit,note\n"));
    assert!(budget.contains("single_ion_shift"));
    assert!(budget.contains("total_infidelity"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tmp_dir("repro");
    let cfg = write_config(&dir, "scenario: fig4-baseline\n");
    let (out1, out2) = (dir.join("a"), dir.join("b"));
    for out in [&out1, &out2] {
        let result = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(result.status.success());
    }
    for name in ["trajectory.csv", "summary.txt", "budget.csv"] {
        let a = fs::read(out1.join(name)).unwrap();
        let b = fs::read(out2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn malformed_config_key_exits_2_and_names_it() {
    let dir = tmp_dir("badkey");
    let cfg = write_config(&dir, "scenario: fig4-baseline\nnot_a_real_key: 7\n");
    let result = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("not_a_real_key"), "{stderr}");
}

#[test]
fn empty_term_set_keeps_fidelity_at_half() {
    let dir = tmp_dir("empty");
    let cfg = write_config(&dir, "terms:\nintegrator.output_points: 50\n");
    let out = dir.join("out");
    let result = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let traj = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    for line in traj.lines().skip(1) {
        let f: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((f - 0.5).abs() < 1e-12, "fidelity {f} drifted from 0.5");
    }
}

#[test]
fn oversized_step_is_a_config_error() {
    let dir = tmp_dir("step");
    let cfg = write_config(
        &dir,
        "scenario: fig4-baseline\nintegrator.max_step_s: 1.0\n",
    );
    let result = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&result.stderr).contains("f_max"));
}

#[test]
fn impossible_norm_tolerance_exits_4() {
    let dir = tmp_dir("norm");
    let cfg = write_config(
        &dir,
        "scenario: fig4-baseline\nintegrator.tolerance: 1e-30\n",
    );
    let result = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&result.stderr).contains("norm drift"));
}

#[test]
fn sweep_over_loops_reports_gate_times() {
    let dir = tmp_dir("sweep");
    let cfg = write_config(
        &dir,
        "scenario: fig4-baseline\nsweep.parameter: loops\nsweep.values: 4, 1\nparallel_jobs: 2\n",
    );
    let out = dir.join("out");
    let result = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let sweep = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = sweep.lines().collect();
    assert_eq!(rows[0], "loops,final_fidelity,peak_phonons,gate_time_s,runtime_s");
    assert_eq!(rows.len(), 3);
    // deterministic row order by value, gate time doubling with √K·√K
    let row1: Vec<&str> = rows[1].split(',').collect();
    let row4: Vec<&str> = rows[2].split(',').collect();
    let (k1, k4): (f64, f64) = (row1[0].parse().unwrap(), row4[0].parse().unwrap());
    assert_eq!((k1, k4), (1.0, 4.0));
    let (t1, t4): (f64, f64) = (row1[3].parse().unwrap(), row4[3].parse().unwrap());
    assert!((t1 - 2e-4).abs() < 1e-9 && (t4 - 4e-4).abs() < 1e-9);
}

#[test]
fn flip_sweep_with_crosstalk_off_improves_fidelity() {
    // echo ladder on the electric-drive family: more flips, less infidelity
    let dir = tmp_dir("ladder");
    let cfg = write_config(
        &dir,
        "terms: gate, xy_residual, zz_residual, electric\n\
         omega_e_over_omega_r: 0.033333333333333\n\
         phonon_cutoff: 16\n\
         sweep.parameter: n_phase_flips\n\
         sweep.values: 1, 19, 99\n",
    );
    let out = dir.join("out");
    let result = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let sweep = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let fidelities: Vec<f64> = sweep
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(fidelities.len(), 3);
    assert!(
        fidelities[0] < fidelities[1] && fidelities[1] < fidelities[2],
        "infidelity not decreasing along the flip ladder: {fidelities:?}"
    );
}

#[test]
fn single_value_sweep_matches_run() {
    let dir = tmp_dir("sweep1");
    let cfg_run = write_config(&dir, "scenario: fig4-baseline\n");
    let out_run = dir.join("run");
    assert!(run(&["run", "--config", cfg_run.to_str().unwrap(), "--out", out_run.to_str().unwrap()])
        .status
        .success());
    let cfg_sweep = dir.join("sweep.cfg");
    fs::write(
        &cfg_sweep,
        "scenario: fig4-baseline\nsweep.parameter: n_phase_flips\nsweep.values: 1\n",
    )
    .unwrap();
    let out_sweep = dir.join("sweep");
    assert!(run(&[
        "sweep",
        "--config",
        cfg_sweep.to_str().unwrap(),
        "--out",
        out_sweep.to_str().unwrap()
    ])
    .status
    .success());

    let summary = fs::read_to_string(out_run.join("summary.txt")).unwrap();
    let f_run: f64 = summary
        .lines()
        .find(|l| l.starts_with("final_fidelity:"))
        .unwrap()
        .split(": ")
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    let sweep = fs::read_to_string(out_sweep.join("sweep.csv")).unwrap();
    let f_sweep: f64 = sweep.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(f_run.to_bits(), f_sweep.to_bits(), "sweep row differs from the plain run");
}

#[test]
fn sweep_without_block_exits_2() {
    let dir = tmp_dir("nosweep");
    let cfg = write_config(&dir, "scenario: fig4-baseline\n");
    let result = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn validate_prints_hierarchy_and_passes() {
    let dir = tmp_dir("validate");
    let cfg = write_config(&dir, "scenario: fig5-1flip\n");
    let result = run(&["validate", "--config", cfg.to_str().unwrap()]);
    assert!(result.status.success());
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("assumption hierarchy"));
    assert!(stdout.contains("matched by construction"));
    assert!(stdout.contains("pass"));
    assert!(!stdout.contains("warn"));
}

#[test]
fn validate_flags_degenerate_dressing() {
    let dir = tmp_dir("validate-warn");
    // Ω_r equal to ε breaks the first hierarchy link
    let cfg = write_config(&dir, "omega_r_khz_2pi: 5\n");
    let result = run(&["validate", "--config", cfg.to_str().unwrap()]);
    assert!(result.status.success(), "validate is advisory and always exits 0");
    assert!(String::from_utf8_lossy(&result.stdout).contains("warn"));
}
