//! Experimental parameter set and the assumption-hierarchy checks.
//!
//! All frequencies are stored as angular frequencies (rad/s). Conversions
//! from "2π·kHz"-style inputs happen once, at the configuration boundary.

use crate::error::{GateError, Result};

/// CODATA values used throughout.
pub mod constants {
    /// Reduced Planck constant, J·s.
    pub const HBAR: f64 = 1.054_571_817e-34;
    /// Bohr magneton, J/T.
    pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
    /// Elementary charge, C.
    pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
    /// Vacuum permittivity, F/m.
    pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
    /// Atomic mass unit, kg.
    pub const AMU: f64 = 1.660_539_066_60e-27;
}

pub const TAU: f64 = std::f64::consts::TAU;

/// Every experimental symbol of the driven two-ion system.
///
/// `epsilon` is derived (ν − Ω) and never stored independently.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    /// Secular frequency of the selected common mode, rad/s.
    pub nu: f64,
    /// Effective Lamb-Dicke parameter of the gradient coupling.
    pub eta: f64,
    /// Rabi frequency of the resonant microwave drive (Ω), rad/s.
    pub omega_drive: f64,
    /// Rabi frequency of the second dressing field (Ω_r = Ω_2/2 for the
    /// detuned-microwave realization; the notations are merged), rad/s.
    pub omega_r: f64,
    /// Addressing splitting between the two ions (Δω0), rad/s.
    pub delta_omega0: f64,
    /// Electric coupling strength of the RF field to the motion (Ω_E), rad/s.
    pub omega_e: f64,
    /// Number of closed loops in phase space (K).
    pub loops: u32,
    /// Ion mass, kg.
    pub ion_mass: f64,
    /// Static magnetic-field gradient, T/m.
    pub b_gradient: f64,
    /// Nominal bare qubit splitting, rad/s. Only used by lab-frame
    /// validation runs; the production frames transform it away.
    pub omega0_nominal: f64,
    /// Landé g-factor.
    pub g_factor: f64,
    /// Lamb-Dicke parameter of the laser realization (η_L).
    pub eta_laser: f64,
    /// Physical constants, configurable for unit tests.
    pub bohr_magneton: f64,
    pub elementary_charge: f64,
    pub vacuum_permittivity: f64,
    pub hbar: f64,
}

impl PhysicalParams {
    /// Parameter set of the reference simulation: two ions of mass 173 amu,
    /// ∂_zB = 65 T/m, ν = 2π·500 kHz, η = 0.01, Ω = 2π·495 kHz,
    /// Ω_r = 2π·99 kHz, Δω0 = 2π·5 MHz, K = 1.
    pub fn reference() -> Self {
        Self {
            nu: TAU * 500e3,
            eta: 0.01,
            omega_drive: TAU * 495e3,
            omega_r: TAU * 99e3,
            delta_omega0: TAU * 5e6,
            omega_e: 0.0,
            loops: 1,
            ion_mass: 173.0 * constants::AMU,
            b_gradient: 65.0,
            omega0_nominal: TAU * 12.6e9,
            g_factor: 2.0,
            eta_laser: 0.01,
            bohr_magneton: constants::BOHR_MAGNETON,
            elementary_charge: constants::ELEMENTARY_CHARGE,
            vacuum_permittivity: constants::VACUUM_PERMITTIVITY,
            hbar: constants::HBAR,
        }
    }

    /// Gate detuning ε = ν − Ω (derived, rad/s).
    pub fn epsilon(&self) -> f64 {
        self.nu - self.omega_drive
    }

    /// Checks the assumption chain ε/4 ≪ Ω_r/4 ≪ ν ∼ Ω ≪ 4ω0.
    /// Each "≪" link must hold by at least `slack` (default 4); the
    /// ν ∼ Ω link is matched by construction and only reported.
    pub fn hierarchy_report(&self, slack: f64) -> Vec<HierarchyCheck> {
        let eps = self.epsilon().abs();
        let ratio1 = if eps > 0.0 { self.omega_r / eps } else { f64::INFINITY };
        let ratio2 = if self.omega_r > 0.0 {
            self.nu / (self.omega_r / 4.0)
        } else {
            f64::INFINITY
        };
        let ratio3 = if self.omega_drive > 0.0 {
            (self.nu / self.omega_drive).max(self.omega_drive / self.nu)
        } else {
            f64::INFINITY
        };
        let ratio4 = if self.omega_drive > 0.0 {
            4.0 * self.omega0_nominal / self.omega_drive
        } else {
            f64::INFINITY
        };
        vec![
            HierarchyCheck {
                label: "epsilon/4 << omega_r/4".into(),
                ratio: ratio1,
                kind: LinkKind::MuchLess,
                pass: ratio1 >= slack,
            },
            HierarchyCheck {
                label: "omega_r/4 << nu".into(),
                ratio: ratio2,
                kind: LinkKind::MuchLess,
                pass: ratio2 >= slack,
            },
            HierarchyCheck {
                label: "nu ~ omega_drive".into(),
                ratio: ratio3,
                kind: LinkKind::Matched,
                pass: true,
            },
            HierarchyCheck {
                label: "omega_drive << 4*omega0".into(),
                ratio: ratio4,
                kind: LinkKind::MuchLess,
                pass: ratio4 >= slack,
            },
        ]
    }

    /// Human-readable warnings for every failed hierarchy link at the
    /// default slack of 4.
    pub fn hierarchy_warnings(&self) -> Vec<String> {
        self.hierarchy_report(4.0)
            .into_iter()
            .filter(|c| !c.pass)
            .map(|c| format!("assumption '{}' holds only by factor {:.3}", c.label, c.ratio))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.nu <= 0.0 {
            return Err(GateError::InvalidArgument("nu must be positive".into()));
        }
        if self.loops == 0 {
            return Err(GateError::InvalidArgument("loops (K) must be >= 1".into()));
        }
        if self.omega_e < 0.0 {
            return Err(GateError::InvalidArgument("omega_e must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    /// A "≪" link that must hold by the slack factor.
    MuchLess,
    /// The ν ∼ Ω link, matched by construction of the gate condition.
    Matched,
}

#[derive(Debug, Clone)]
pub struct HierarchyCheck {
    pub label: String,
    pub ratio: f64,
    pub kind: LinkKind,
    pub pass: bool,
}
