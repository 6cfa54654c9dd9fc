//! Data-file writers. All numbers use '.' decimals and a fixed exponent
//! format, so re-running a command with the same configuration produces
//! byte-identical file bodies (sweep.csv's runtime column excepted).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use dressed_gate::analysis::{
    noise_budget, residual_coupling_infidelities, NoiseInputs,
};
use dressed_gate::experiment::{PulseSchedule, RunSummary};
use dressed_gate::model::{stark_budget_with_delta, TermLabel};
use dressed_gate::params::{PhysicalParams, TAU};
use dressed_gate::propagation::Trajectory;

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t_s,fidelity,p_dd,p_uu,re_rho_dd_uu,im_rho_dd_uu,mean_phonons\n");
    for (t, obs) in traj.times.iter().zip(traj.observables.iter()) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            num(*t),
            num(obs.fidelity),
            num(obs.p_dd),
            num(obs.p_uu),
            num(obs.re_rho_dd_uu),
            num(obs.im_rho_dd_uu),
            num(obs.mean_phonons)
        );
    }
    out
}

pub fn summary_txt(
    scenario: Option<&str>,
    summary: &RunSummary,
    schedule: &PulseSchedule,
    seedless: bool,
) -> String {
    let p = &summary.params;
    let mut out = String::new();
    let mut line = |k: &str, v: String| {
        let _ = writeln!(out, "{k}: {v}");
    };
    line("scenario", scenario.unwrap_or("(inline)").to_string());
    line("final_fidelity", num(summary.final_fidelity));
    line("infidelity", num(summary.infidelity));
    line("peak_mean_phonons", num(summary.peak_mean_phonons));
    line("final_mean_phonons", num(summary.final_mean_phonons));
    line("max_norm_error", num(summary.max_norm_error));
    line("gate_time_s", num(summary.gate_time));
    line("epsilon_rad_s", num(summary.epsilon));
    line(
        "enabled_terms",
        summary
            .enabled_terms
            .iter()
            .map(TermLabel::name)
            .collect::<Vec<_>>()
            .join(","),
    );
    line("n_phase_flips", summary.n_phase_flips.to_string());
    line(
        "flip_times_s",
        schedule
            .events
            .iter()
            .map(|e| num(e.time))
            .collect::<Vec<_>>()
            .join(","),
    );
    line("loops", summary.loops.to_string());
    line("nu_rad_s", num(p.nu));
    line("eta", format!("{}", p.eta));
    line("omega_drive_rad_s", num(p.omega_drive));
    line("omega_r_rad_s", num(p.omega_r));
    line("delta_omega0_rad_s", num(p.delta_omega0));
    line("omega_e_rad_s", num(p.omega_e));
    line("ion_mass_kg", num(p.ion_mass));
    line("b_gradient_t_per_m", num(p.b_gradient));
    if seedless {
        line("seedless", "asserted: no randomness in any code path".to_string());
    }
    out
}

pub fn budget_csv(p: &PhysicalParams, gate_time: f64) -> String {
    let mut out = String::from("section,quantity,value,unit,note\n");
    let mut row = |section: &str, quantity: &str, value: f64, unit: &str, note: &str| {
        let _ = writeln!(out, "{section},{quantity},{},{unit},{note}", num(value));
    };
    if let Ok(b) = stark_budget_with_delta(p, p.delta_omega0) {
        row("stark", "single_ion_shift", b.single_ion_shift, "rad_s", "delta=addressing_splitting");
        row("stark", "phonon_coupled_shift", b.phonon_coupled_shift, "rad_s_per_phonon", "");
        row("stark", "xy_coupling", b.xy_coupling, "rad_s", "");
        row("stark", "zz_coupling", b.zz_coupling, "rad_s", "");
        let (if_xy, if_zz) = residual_coupling_infidelities(&b, gate_time);
        row("stark", "xy_residual_infidelity", if_xy, "dimensionless", "pair-phase estimate");
        row("stark", "zz_residual_infidelity", if_zz, "dimensionless", "pair-phase estimate");
    }
    if let Ok(alt) = stark_budget_with_delta(p, p.omega_drive) {
        row(
            "stark",
            "single_ion_shift_alt",
            alt.single_ion_shift,
            "rad_s",
            "delta=omega_drive reading",
        );
    }
    if let Ok(n) = noise_budget(p, gate_time, &NoiseInputs::default()) {
        row("noise", "s_bb_dressed", n.s_bb_dressed, "hz", "");
        row("noise", "s_rabi_second_order", n.s_rabi_second_order, "hz", "echo_refocused");
        row("noise", "s_rabi_r", n.s_rabi_r, "hz", "echo_refocused");
        row("noise", "total_infidelity", n.total_infidelity, "dimensionless", "");
    }
    out
}

pub struct SweepRow {
    pub value: f64,
    pub final_fidelity: f64,
    pub peak_phonons: f64,
    pub gate_time_s: f64,
    pub runtime_s: f64,
}

pub fn sweep_csv(parameter: &str, rows: &[SweepRow]) -> String {
    let mut out = format!("{parameter},final_fidelity,peak_phonons,gate_time_s,runtime_s\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.3}",
            num(r.value),
            num(r.final_fidelity),
            num(r.peak_phonons),
            num(r.gate_time_s),
            r.runtime_s
        );
    }
    out
}

pub fn validate_report(p: &PhysicalParams, slack: f64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "assumption hierarchy (slack {slack}):");
    for check in p.hierarchy_report(slack) {
        let status = match check.kind {
            dressed_gate::params::LinkKind::Matched => "matched by construction",
            dressed_gate::params::LinkKind::MuchLess => {
                if check.pass {
                    "pass"
                } else {
                    "warn"
                }
            }
        };
        let _ = writeln!(out, "  {:<28} ratio {:>12.3}  {status}", check.label, check.ratio);
    }
    let eps = p.epsilon();
    let _ = writeln!(out, "epsilon_rad_s: {} (= 2pi * {:.3} kHz)", num(eps), eps / TAU / 1e3);
    out
}

pub fn write_file(dir: &Path, name: &str, body: &str) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), body)
}
