//! Flat key–value run configuration with dotted section prefixes.
//!
//! Lines are `key: value`; `#` starts a comment line; blank lines are
//! ignored. The schema is strict: unknown or duplicate keys are rejected
//! with the offending key named. Frequency keys carry their unit in the
//! suffix (`_khz_2pi`, `_mhz_2pi`, `_hz_2pi`, `_rad_s`) so no 2π
//! bookkeeping happens outside this module.

use std::collections::BTreeSet;
use std::path::PathBuf;

use dressed_gate::error::{GateError, Result};
use dressed_gate::experiment::{
    scenario, GatePlan, GateVariant, InitialState, PhononInit, SpinInit,
};
use dressed_gate::hilbert::SpaceShape;
use dressed_gate::model::TermLabel;
use dressed_gate::params::TAU;
use dressed_gate::propagation::{IntegratorConfig, Method};

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub plan: GatePlan,
    pub integrator: IntegratorConfig,
    pub out_dir: PathBuf,
    pub sweep: Option<Sweep>,
    pub parallel_jobs: usize,
    pub scenario_name: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    NPhaseFlips,
    Loops,
    PhononCutoff,
    Eta,
    OmegaEOverOmegaR,
}

impl SweepParameter {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "n_phase_flips" => Ok(Self::NPhaseFlips),
            "loops" => Ok(Self::Loops),
            "phonon_cutoff" => Ok(Self::PhononCutoff),
            "eta" => Ok(Self::Eta),
            "omega_e_over_omega_r" => Ok(Self::OmegaEOverOmegaR),
            other => Err(GateError::Config(format!(
                "unknown sweep parameter '{other}'"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::NPhaseFlips => "n_phase_flips",
            Self::Loops => "loops",
            Self::PhononCutoff => "phonon_cutoff",
            Self::Eta => "eta",
            Self::OmegaEOverOmegaR => "omega_e_over_omega_r",
        }
    }

    /// Applies one sweep value to a copy of the base plan.
    pub fn apply(&self, base: &GatePlan, value: f64) -> Result<GatePlan> {
        let mut plan = base.clone();
        match self {
            Self::NPhaseFlips => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(GateError::Config(format!(
                        "n_phase_flips sweep value {value} is not a nonnegative integer"
                    )));
                }
                plan.n_phase_flips = value as usize;
            }
            Self::Loops => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(GateError::Config(format!(
                        "loops sweep value {value} is not a positive integer"
                    )));
                }
                plan.params.loops = value as u32;
                retune_drive(&mut plan);
            }
            Self::PhononCutoff => {
                if value < 2.0 || value.fract() != 0.0 {
                    return Err(GateError::Config(format!(
                        "phonon_cutoff sweep value {value} is not an integer >= 2"
                    )));
                }
                plan.shape = SpaceShape::new(plan.shape.n_ions, value as usize)?;
            }
            Self::Eta => {
                if value <= 0.0 {
                    return Err(GateError::Config(format!("eta sweep value {value} <= 0")));
                }
                plan.params.eta = value;
                retune_drive(&mut plan);
            }
            Self::OmegaEOverOmegaR => {
                if value < 0.0 {
                    return Err(GateError::Config(format!(
                        "omega_e_over_omega_r sweep value {value} < 0"
                    )));
                }
                plan.params.omega_e = value * plan.params.omega_r;
            }
        }
        Ok(plan)
    }
}

/// Re-derives Ω = ν − ε after a change to η, ν or K (microwave variant).
fn retune_drive(plan: &mut GatePlan) {
    if plan.variant == GateVariant::Microwave {
        let eps = plan.params.eta * plan.params.nu * (plan.params.loops as f64).sqrt();
        plan.params.omega_drive = plan.params.nu - eps;
    }
}

struct RawEntry {
    key: String,
    value: String,
    used: bool,
}

struct Raw {
    entries: Vec<RawEntry>,
}

impl Raw {
    fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<RawEntry> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once(':') else {
                return Err(GateError::Config(format!(
                    "line {}: expected 'key: value', got '{trimmed}'",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            if entries.iter().any(|e| e.key == key) {
                return Err(GateError::Config(format!("duplicate key '{key}'")));
            }
            entries.push(RawEntry { key, value: value.trim().to_string(), used: false });
        }
        Ok(Self { entries })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        for e in &mut self.entries {
            if e.key == key {
                e.used = true;
                return Some(e.value.clone());
            }
        }
        None
    }

    fn finish(self) -> Result<()> {
        if let Some(unused) = self.entries.iter().find(|e| !e.used) {
            return Err(GateError::Config(format!("unknown key '{}'", unused.key)));
        }
        Ok(())
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| GateError::Config(format!("key '{key}': '{v}' is not a number")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>()
        .map_err(|_| GateError::Config(format!("key '{key}': '{v}' is not a nonnegative integer")))
}

/// Angular frequency keys: the suffix picks the unit.
fn frequency(raw: &mut Raw, stem: &str) -> Result<Option<f64>> {
    let mut found: Option<f64> = None;
    for (suffix, scale) in [
        ("_hz_2pi", TAU),
        ("_khz_2pi", TAU * 1e3),
        ("_mhz_2pi", TAU * 1e6),
        ("_ghz_2pi", TAU * 1e9),
        ("_rad_s", 1.0),
    ] {
        let key = format!("{stem}{suffix}");
        if let Some(v) = raw.take(&key) {
            if found.is_some() {
                return Err(GateError::Config(format!(
                    "key '{key}': '{stem}' was already given in another unit"
                )));
            }
            found = Some(parse_f64(&key, &v)? * scale);
        }
    }
    Ok(found)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut raw = Raw::parse(text)?;

    let scenario_name = raw.take("scenario");
    let mut plan = match &scenario_name {
        Some(name) => scenario(name)
            .map_err(|e| GateError::Config(format!("scenario: {e}")))?
            .plan,
        None => {
            let gate_only: BTreeSet<TermLabel> = [TermLabel::Gate].into_iter().collect();
            GatePlan::reference(&gate_only, 0)?
        }
    };

    if let Some(v) = raw.take("variant") {
        plan.variant = match v.as_str() {
            "microwave" => GateVariant::Microwave,
            "laser" => GateVariant::Laser,
            other => {
                return Err(GateError::Config(format!("unknown variant '{other}'")));
            }
        };
    }
    if let Some(v) = raw.take("terms") {
        let mut set = BTreeSet::new();
        for part in v.split(',') {
            let name = part.trim();
            if name.is_empty() {
                continue;
            }
            set.insert(TermLabel::parse(name).map_err(|e| GateError::Config(e.to_string()))?);
        }
        plan.enabled_terms = set;
    }
    if let Some(v) = raw.take("n_phase_flips") {
        plan.n_phase_flips = parse_usize("n_phase_flips", &v)?;
    }
    if let Some(v) = raw.take("loops") {
        let loops = parse_usize("loops", &v)?;
        if loops == 0 {
            return Err(GateError::Config("loops must be >= 1".into()));
        }
        plan.params.loops = loops as u32;
    }
    if let Some(v) = raw.take("eta") {
        plan.params.eta = parse_f64("eta", &v)?;
    }
    if let Some(v) = raw.take("eta_laser") {
        plan.params.eta_laser = parse_f64("eta_laser", &v)?;
    }
    if let Some(nu) = frequency(&mut raw, "nu")? {
        plan.params.nu = nu;
    }
    if let Some(omega_r) = frequency(&mut raw, "omega_r")? {
        plan.params.omega_r = omega_r;
    }
    if let Some(d) = frequency(&mut raw, "delta_omega0")? {
        plan.params.delta_omega0 = d;
    }
    if let Some(om) = frequency(&mut raw, "omega_drive")? {
        if plan.variant == GateVariant::Microwave {
            return Err(GateError::Config(
                "omega_drive is derived from the loop closure for the microwave variant".into(),
            ));
        }
        plan.params.omega_drive = om;
    }
    let omega_e = frequency(&mut raw, "omega_e")?;
    let omega_e_ratio = raw
        .take("omega_e_over_omega_r")
        .map(|v| parse_f64("omega_e_over_omega_r", &v))
        .transpose()?;
    if omega_e.is_some() && omega_e_ratio.is_some() {
        return Err(GateError::Config(
            "give omega_e either directly or as omega_e_over_omega_r, not both".into(),
        ));
    }
    if let Some(om) = omega_e {
        plan.params.omega_e = om;
    }
    if let Some(ratio) = omega_e_ratio {
        plan.params.omega_e = ratio * plan.params.omega_r;
    }
    if let Some(v) = raw.take("b_gradient_t_per_m") {
        plan.params.b_gradient = parse_f64("b_gradient_t_per_m", &v)?;
    }
    if let Some(v) = raw.take("ion_mass_amu") {
        plan.params.ion_mass =
            parse_f64("ion_mass_amu", &v)? * dressed_gate::params::constants::AMU;
    }
    if let Some(omega0) = frequency(&mut raw, "omega0_nominal")? {
        plan.params.omega0_nominal = omega0;
    }

    retune_drive(&mut plan);

    if plan.enabled_terms.contains(&TermLabel::Electric) && plan.params.omega_e == 0.0 {
        return Err(GateError::Config(
            "the electric term is enabled but omega_e is zero; set omega_e_khz_2pi or omega_e_over_omega_r".into(),
        ));
    }

    if let Some(v) = raw.take("phonon_cutoff") {
        plan.shape = SpaceShape::new(plan.shape.n_ions, parse_usize("phonon_cutoff", &v)?)?;
    }
    if let Some(v) = raw.take("initial_state") {
        use dressed_gate::analysis::Dressed::{D, U};
        let spin = match v.as_str() {
            "dd" => SpinInit::Dressed(vec![D, D]),
            "du" => SpinInit::Dressed(vec![D, U]),
            "ud" => SpinInit::Dressed(vec![U, D]),
            "uu" => SpinInit::Dressed(vec![U, U]),
            other => {
                return Err(GateError::Config(format!(
                    "unknown initial_state '{other}' (expected dd, du, ud or uu)"
                )));
            }
        };
        plan.initial_state.spin = spin;
    }
    if let Some(v) = raw.take("initial_phonons") {
        plan.initial_state.phonon = PhononInit::Fock(parse_usize("initial_phonons", &v)?);
    }

    let mut integrator = IntegratorConfig::default();
    if let Some(v) = raw.take("integrator.method") {
        integrator.method = match v.as_str() {
            "stepwise_exponential" => Method::StepwiseExponential,
            "rk4" => Method::Rk4,
            other => {
                return Err(GateError::Config(format!(
                    "unknown integrator.method '{other}'"
                )));
            }
        };
    }
    if let Some(v) = raw.take("integrator.max_step_s") {
        integrator.max_step = Some(parse_f64("integrator.max_step_s", &v)?);
    }
    if let Some(v) = raw.take("integrator.tolerance") {
        integrator.tolerance = parse_f64("integrator.tolerance", &v)?;
    }
    if let Some(v) = raw.take("integrator.output_points") {
        integrator.output_points = parse_usize("integrator.output_points", &v)?;
    }

    let out_dir = PathBuf::from(raw.take("output.dir").unwrap_or_else(|| "out".into()));

    let sweep = match (raw.take("sweep.parameter"), raw.take("sweep.values")) {
        (Some(p), Some(vals)) => {
            let parameter = SweepParameter::parse(&p)?;
            let mut values = Vec::new();
            for part in vals.split(',') {
                let part = part.trim();
                if part.is_empty() {
                    continue;
                }
                values.push(parse_f64("sweep.values", part)?);
            }
            if values.is_empty() {
                return Err(GateError::Config("sweep.values is empty".into()));
            }
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            Some(Sweep { parameter, values })
        }
        (None, None) => None,
        _ => {
            return Err(GateError::Config(
                "sweep.parameter and sweep.values must be given together".into(),
            ));
        }
    };

    let parallel_jobs = match raw.take("parallel_jobs") {
        Some(v) => {
            let jobs = parse_usize("parallel_jobs", &v)?;
            if jobs == 0 {
                return Err(GateError::Config("parallel_jobs must be >= 1".into()));
            }
            jobs
        }
        None => 1,
    };

    raw.finish()?;

    // keep config errors at the boundary instead of failing inside a run
    plan.validate().map_err(|e| GateError::Config(e.to_string()))?;
    let _ = InitialState { spin: plan.initial_state.spin.clone(), phonon: plan.initial_state.phonon.clone() };

    Ok(RunConfig { plan, integrator, out_dir, sweep, parallel_jobs, scenario_name })
}
