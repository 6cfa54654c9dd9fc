//! Gate-experiment orchestration: loop-closure conditions, echo schedules,
//! interaction-picture phase bookkeeping and the named end-to-end
//! scenarios used by the CLI and the acceptance suite.

use std::collections::BTreeSet;

use num_complex::Complex64 as C64;

use crate::analysis::{self, Dressed};
use crate::error::{GateError, Result};
use crate::hilbert::{phonon_coherent, Axis, CVec, SpaceShape, StateVector, ONE};
use crate::model::{
    dressed_frame_hamiltonian, laser_gate_model, HamiltonianModel, TermLabel,
};
use crate::params::{PhysicalParams, TAU};
use crate::propagation::{evolve, IntegratorConfig, Trajectory};

/// Instantaneous control events on top of the continuous evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseKind {
    /// Simultaneous π rotation about a production-frame axis on all ions.
    /// Only legal at closed-loop times, hence the even-K restriction for
    /// a mid-gate pulse.
    PiPulse { axis: Axis },
    /// Sign reversal of the second dressing field: Ω_r (and the electric
    /// drive that field produces) is negated in all terms from this time
    /// on, phase exponents included.
    RfPhaseFlip,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseEvent {
    pub time: f64,
    pub kind: PulseKind,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PulseSchedule {
    pub events: Vec<PulseEvent>,
}

impl PulseSchedule {
    pub fn empty() -> Self {
        Self { events: Vec::new() }
    }

    pub fn n_phase_flips(&self) -> usize {
        self.events
            .iter()
            .filter(|e| e.kind == PulseKind::RfPhaseFlip)
            .count()
    }

    /// Times strictly increasing, all inside (0, gate_time).
    pub fn validate(&self, gate_time: f64) -> Result<()> {
        let mut prev = 0.0;
        for ev in &self.events {
            if ev.time <= prev || ev.time >= gate_time {
                return Err(GateError::InvalidArgument(format!(
                    "event time {:.6e} s outside (0, {:.6e}) or not increasing",
                    ev.time, gate_time
                )));
            }
            prev = ev.time;
        }
        Ok(())
    }
}

/// Loop-closure conditions: ε = ην√K, τ = 2π√K/(ην) (stored as 2πK/ε so
/// ε·τ = 2πK holds exactly in floating point), and the matching drive
/// Rabi frequency Ω = ν − ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateConditions {
    pub epsilon: f64,
    pub gate_time: f64,
    pub omega_drive: f64,
}

pub fn gate_conditions(eta: f64, nu: f64, loops: u32) -> Result<GateConditions> {
    if loops == 0 {
        return Err(GateError::InvalidArgument("loops (K) must be >= 1".into()));
    }
    if eta <= 0.0 || nu <= 0.0 {
        return Err(GateError::InvalidArgument("eta and nu must be positive".into()));
    }
    let epsilon = eta * nu * (loops as f64).sqrt();
    let gate_time = TAU * loops as f64 / epsilon;
    Ok(GateConditions { epsilon, gate_time, omega_drive: nu - epsilon })
}

/// Uniformly spaced π-phase flips at i·τ/(n+1), i = 1..n. Odd counts
/// refocus completely; an even nonzero count leaves the final Ω_r sign
/// history unbalanced, which is reported as a warning.
pub fn build_schedule(n_flips: usize, gate_time: f64, loops: u32) -> (PulseSchedule, Vec<String>) {
    let _ = loops; // flips are legal anywhere in the cycle, even for K = 1
    let mut warnings = Vec::new();
    if n_flips > 0 && n_flips % 2 == 0 {
        warnings.push(format!(
            "{n_flips} phase flips leave the second drive's sign history unbalanced; refocusing is incomplete"
        ));
    }
    let events = (1..=n_flips)
        .map(|i| PulseEvent {
            time: i as f64 * gate_time / (n_flips as f64 + 1.0),
            kind: PulseKind::RfPhaseFlip,
        })
        .collect();
    (PulseSchedule { events }, warnings)
}

/// Single mid-gate π pulse; requires an even loop count so the pulse
/// lands on a closed loop.
pub fn pi_pulse_schedule(gate_time: f64, loops: u32, axis: Axis) -> Result<PulseSchedule> {
    if loops % 2 != 0 {
        return Err(GateError::InvalidArgument(
            "a mid-gate pi pulse requires an even number of loops K".into(),
        ));
    }
    Ok(PulseSchedule {
        events: vec![PulseEvent { time: gate_time / 2.0, kind: PulseKind::PiPulse { axis } }],
    })
}

/// Which drive realizes the gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateVariant {
    Microwave,
    Laser,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpinInit {
    /// Product of dressed single-ion states, e.g. [D, D].
    Dressed(Vec<Dressed>),
    /// Computational (double-dressed) basis state by spin index.
    Computational(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhononInit {
    Fock(usize),
    Coherent(C64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    pub spin: SpinInit,
    pub phonon: PhononInit,
}

impl InitialState {
    /// |dd⟩ ⊗ |0⟩, the reference initial state.
    pub fn dressed_dd() -> Self {
        Self {
            spin: SpinInit::Dressed(vec![Dressed::D, Dressed::D]),
            phonon: PhononInit::Fock(0),
        }
    }

    pub fn build(&self, shape: SpaceShape) -> Result<StateVector> {
        let spin = match &self.spin {
            SpinInit::Dressed(labels) => {
                if labels.len() != shape.n_ions {
                    return Err(GateError::ShapeMismatch(format!(
                        "{} dressed labels for {} ions",
                        labels.len(),
                        shape.n_ions
                    )));
                }
                let mut acc = CVec::from_vec(vec![ONE]);
                for l in labels {
                    let single = analysis::dressed_single_spin(*l);
                    let mut next = CVec::zeros(acc.len() * 2);
                    for i in 0..acc.len() {
                        for j in 0..2 {
                            next[i * 2 + j] = acc[i] * single[j];
                        }
                    }
                    acc = next;
                }
                acc
            }
            SpinInit::Computational(idx) => {
                if *idx >= shape.spin_dim() {
                    return Err(GateError::InvalidArgument(format!(
                        "spin index {idx} outside the {}-ion space",
                        shape.n_ions
                    )));
                }
                let mut v = CVec::zeros(shape.spin_dim());
                v[*idx] = ONE;
                v
            }
        };
        let phonon = match &self.phonon {
            PhononInit::Fock(n) => {
                if *n >= shape.phonon_cutoff {
                    return Err(GateError::Truncation(format!(
                        "Fock state {n} outside cutoff {}",
                        shape.phonon_cutoff
                    )));
                }
                let mut v = CVec::zeros(shape.phonon_cutoff);
                v[*n] = ONE;
                v
            }
            PhononInit::Coherent(alpha) => phonon_coherent(*alpha, shape.phonon_cutoff)?,
        };
        StateVector::product(shape, &spin, &phonon)
    }
}

/// A fully specified gate run.
#[derive(Debug, Clone, PartialEq)]
pub struct GatePlan {
    pub params: PhysicalParams,
    pub shape: SpaceShape,
    pub enabled_terms: BTreeSet<TermLabel>,
    pub n_phase_flips: usize,
    pub initial_state: InitialState,
    pub variant: GateVariant,
}

impl GatePlan {
    /// Reference microwave plan: the loop-matched parameter set, |dd⟩⊗|0⟩,
    /// cutoff 16 (or 30 when the electric drive is on).
    pub fn reference(terms: &BTreeSet<TermLabel>, n_phase_flips: usize) -> Result<GatePlan> {
        let mut params = PhysicalParams::reference();
        let electric = terms.contains(&TermLabel::Electric);
        if electric {
            params.omega_e = params.omega_r / 30.0;
        }
        let cutoff = if electric { 30 } else { 16 };
        Ok(GatePlan {
            params,
            shape: SpaceShape::new(2, cutoff)?,
            enabled_terms: terms.clone(),
            n_phase_flips,
            initial_state: InitialState::dressed_dd(),
            variant: GateVariant::Microwave,
        })
    }

    /// Gate detuning from the loop closure: ε = ην√K for the microwave
    /// drive, ε = η_LΩ√K for the laser drive.
    pub fn epsilon(&self) -> f64 {
        let k = self.params.loops as f64;
        match self.variant {
            GateVariant::Microwave => self.params.eta * self.params.nu * k.sqrt(),
            GateVariant::Laser => self.params.eta_laser * self.params.omega_drive * k.sqrt(),
        }
    }

    /// τ = 2πK/ε, so ε·τ = 2πK exactly.
    pub fn gate_time(&self) -> f64 {
        TAU * self.params.loops as f64 / self.epsilon()
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.variant == GateVariant::Microwave {
            let eps = self.epsilon();
            if (self.params.epsilon() - eps).abs() > 1e-9 * eps.abs() {
                return Err(GateError::InvalidArgument(format!(
                    "plan inconsistent: nu − omega_drive = {:.6e} but the loop closure requires ε = ην√K = {:.6e}",
                    self.params.epsilon(),
                    eps
                )));
            }
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<HamiltonianModel> {
        match self.variant {
            GateVariant::Microwave => {
                dressed_frame_hamiltonian(&self.params, self.shape, &self.enabled_terms)
            }
            GateVariant::Laser => {
                let gate_only: BTreeSet<TermLabel> = [TermLabel::Gate].into_iter().collect();
                if self.enabled_terms != gate_only {
                    return Err(GateError::InvalidArgument(
                        "the laser variant models the gate term only".into(),
                    ));
                }
                laser_gate_model(&self.params, self.shape)
            }
        }
    }

    /// Uniform flip schedule for this plan.
    pub fn schedule(&self) -> PulseSchedule {
        build_schedule(self.n_phase_flips, self.gate_time(), self.params.loops).0
    }
}

/// Deterministic outcome record of a scenario run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub final_fidelity: f64,
    pub infidelity: f64,
    pub peak_mean_phonons: f64,
    pub final_mean_phonons: f64,
    pub max_norm_error: f64,
    pub gate_time: f64,
    pub epsilon: f64,
    pub enabled_terms: Vec<TermLabel>,
    pub n_phase_flips: usize,
    pub loops: u32,
    pub params: PhysicalParams,
}

/// Builds the plan's model, evolves from its initial state over one gate
/// time under the schedule, and reduces the trajectory to a summary.
pub fn run_scenario(
    plan: &GatePlan,
    schedule: &PulseSchedule,
    cfg: &IntegratorConfig,
) -> Result<(Trajectory, RunSummary)> {
    plan.validate()?;
    let model = plan.build_model()?;
    let psi0 = plan.initial_state.build(plan.shape)?;
    let gate_time = plan.gate_time();
    let traj = evolve(&model, &psi0, gate_time, cfg, schedule)?;
    let final_fidelity = traj.final_observables().fidelity;
    let summary = RunSummary {
        final_fidelity,
        infidelity: 1.0 - final_fidelity,
        peak_mean_phonons: traj.peak_mean_phonons(),
        final_mean_phonons: traj.final_observables().mean_phonons,
        max_norm_error: traj.max_norm_error(),
        gate_time,
        epsilon: plan.epsilon(),
        enabled_terms: plan.enabled_terms.iter().copied().collect(),
        n_phase_flips: schedule.n_phase_flips(),
        loops: plan.params.loops,
        params: plan.params.clone(),
    };
    Ok((traj, summary))
}

/// Residual phase bookkeeping of the dressed interaction picture: after
/// the gate the drive switches to a far-detuned Rabi frequency Ω_new and
/// runs for the smallest t_add ≥ 0 with (Ω/2)τ + (Ω_new/2)t_add = 2πn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Closeout {
    pub extra_time: f64,
    pub winding: i64,
}

pub fn closeout_phase(p: &PhysicalParams, gate_time: f64, omega_new: f64) -> Result<Closeout> {
    let phase = p.omega_drive / 2.0 * gate_time;
    let residual = phase.rem_euclid(TAU);
    let eps = 1e-9 * phase.abs().max(1.0);
    if omega_new == 0.0 {
        if residual < eps || TAU - residual < eps {
            return Ok(Closeout { extra_time: 0.0, winding: (phase / TAU).round() as i64 });
        }
        return Err(GateError::NoSolution(format!(
            "residual dressed phase {residual:.6} rad cannot vanish without a closeout drive"
        )));
    }
    if (omega_new - p.nu).abs() < 0.2 * p.nu {
        return Err(GateError::InvalidArgument(format!(
            "omega_new = {omega_new:.3e} rad/s is not far detuned from the secular frequency {:.3e}",
            p.nu
        )));
    }
    if residual < eps || TAU - residual < eps {
        return Ok(Closeout { extra_time: 0.0, winding: (phase / TAU).round() as i64 });
    }
    let extra_time = (TAU - residual) / (omega_new / 2.0);
    let winding = ((phase + (TAU - residual)) / TAU).round() as i64;
    Ok(Closeout { extra_time, winding })
}

/// Named scenario with its plan and schedule.
#[derive(Debug, Clone)]
pub struct NamedScenario {
    pub name: &'static str,
    pub plan: GatePlan,
    pub schedule: PulseSchedule,
}

pub const SCENARIO_NAMES: [&str; 7] = [
    "fig4-baseline",
    "fig5-1flip",
    "fig5-19flip",
    "fig5-99flip-no-crosstalk",
    "crosstalk-only",
    "electric-field",
    "laser-variant",
];

fn terms(list: &[TermLabel]) -> BTreeSet<TermLabel> {
    list.iter().copied().collect()
}

/// Builds one of the named scenarios.
///
/// The reproduction scenarios carry the sideband residuals of the
/// double-dressed frame (xy, zz) alongside the gate; the fast
/// counter-rotating part of the second dressing field enters the library
/// as a toggleable term and the shift budget, but not these runs, whose
/// reference fidelities it does not reproduce (see the scenario docs).
pub fn scenario(name: &str) -> Result<NamedScenario> {
    use TermLabel::*;
    let (static_name, plan) = match name {
        "fig4-baseline" => (
            "fig4-baseline",
            GatePlan::reference(&terms(&[Gate]), 1)?,
        ),
        "fig5-1flip" => (
            "fig5-1flip",
            GatePlan::reference(&terms(&[Gate, Crosstalk, XyResidual, ZzResidual]), 1)?,
        ),
        "fig5-19flip" => (
            "fig5-19flip",
            GatePlan::reference(&terms(&[Gate, Crosstalk, XyResidual, ZzResidual]), 19)?,
        ),
        "fig5-99flip-no-crosstalk" => (
            "fig5-99flip-no-crosstalk",
            GatePlan::reference(&terms(&[Gate, XyResidual, ZzResidual]), 99)?,
        ),
        "crosstalk-only" => (
            "crosstalk-only",
            GatePlan::reference(&terms(&[Gate, Crosstalk]), 1)?,
        ),
        "electric-field" => (
            "electric-field",
            GatePlan::reference(&terms(&[Gate, Crosstalk, XyResidual, ZzResidual, Electric]), 1)?,
        ),
        "laser-variant" => {
            let mut plan = GatePlan::reference(&terms(&[Gate]), 1)?;
            plan.variant = GateVariant::Laser;
            // the laser carrier plays the role of the microwave drive at
            // Ω = ν, so η_LΩ/4 matches ην/4
            plan.params.omega_drive = plan.params.nu;
            plan.params.eta_laser = plan.params.eta;
            ("laser-variant", plan)
        }
        other => {
            return Err(GateError::InvalidArgument(format!(
                "unknown scenario '{other}'; known: {}",
                SCENARIO_NAMES.join(", ")
            )));
        }
    };
    let schedule = plan.schedule();
    Ok(NamedScenario { name: static_name, plan, schedule })
}
