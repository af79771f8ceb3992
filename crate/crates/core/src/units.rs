//! Physical constants and unit systems.

use serde::{Deserialize, Serialize};

/// Unit system in which every quantity handed to the library is expressed.
///
/// `Si` uses CODATA values. `Normalized` sets c₀ = ε₀ = ħ = k_B = 1, which
/// keeps desk-scale problems well conditioned; lengths, times and
/// frequencies are then measured in any consistent reference scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum UnitSystem {
    #[default]
    Si,
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub system: UnitSystem,
    /// Speed of light in vacuum.
    pub c0: f64,
    /// Vacuum permittivity.
    pub eps0: f64,
    /// Reduced Planck constant.
    pub hbar: f64,
    /// Boltzmann constant.
    pub kb: f64,
}

impl Units {
    pub const SI: Units = Units {
        system: UnitSystem::Si,
        c0: 299_792_458.0,
        eps0: 8.854_187_812_8e-12,
        hbar: 1.054_571_817e-34,
        kb: 1.380_649e-23,
    };

    pub const NORMALIZED: Units = Units {
        system: UnitSystem::Normalized,
        c0: 1.0,
        eps0: 1.0,
        hbar: 1.0,
        kb: 1.0,
    };

    pub fn of(system: UnitSystem) -> Units {
        match system {
            UnitSystem::Si => Units::SI,
            UnitSystem::Normalized => Units::NORMALIZED,
        }
    }

    /// Vacuum permeability, μ₀ = 1/(ε₀c₀²).
    pub fn mu0(&self) -> f64 {
        1.0 / (self.eps0 * self.c0 * self.c0)
    }
}

impl Default for Units {
    fn default() -> Self {
        Units::SI
    }
}
