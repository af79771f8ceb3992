//! Driving terms, per-frequency solves, frequency sweeps with causal
//! reconstruction, and the marching-on-in-time oracle.
//!
//! Every coefficient p = p_f + q splits into the analytically known free
//! evolution p_f of the driving oscillator and a response q that starts
//! from rest. In the frequency domain the full P̂ solves
//! `(1/χ̃)P̂ − K(s)P̂ = D̂`; in the time domain q obeys
//! `(1/ω_p²)(q̈ + γq̇ + ω₀²q) = ε₀L{p_f + q} + F` with the driving's forcing F.

mod driving;
mod mot;
mod sweep;

pub(crate) use driving::free_surface_field;
pub use driving::{driving_classical_freq, driving_mat_freq, driving_rad_freq, DrivingSpec, FreePolarization, Waveform};
pub use mot::{history_distance, march_on_time_oracle, max_oracle_step, MOT_MAX_VOXELS};
pub use sweep::{solve_frequency, sweep_and_reconstruct, sweep_many, FrequencySolution, SolveResult, SweepOptions};

use crate::assembly::{assemble_with_rules, collocation_rules, FrequencyOperator, QuadratureOptions, TargetRules};
use crate::dispersion::LorentzModel;
use crate::geometry::{BasisKind, MatterBasis, VoxelMesh};
use crate::greens::ComplexFrequency;
use crate::par::Execution;
use crate::Result;

/// A discretized scatterer: mesh, material, matter basis and the collocation
/// quadrature shared by every solve.
#[derive(Debug, Clone)]
pub struct Problem {
    mesh: VoxelMesh,
    model: LorentzModel,
    basis: MatterBasis,
    quadrature: QuadratureOptions,
    rules: Vec<TargetRules>,
    fingerprint: String,
}

impl Problem {
    pub fn new(
        mesh: VoxelMesh,
        model: LorentzModel,
        basis: BasisKind,
        quadrature: QuadratureOptions,
        exec: Execution,
    ) -> Result<Self> {
        let rules = collocation_rules(&mesh, &quadrature, exec)?;
        let basis = MatterBasis::build(basis, &mesh);
        let fingerprint = mesh.fingerprint();
        Ok(Problem { mesh, model, basis, quadrature, rules, fingerprint })
    }

    pub fn mesh(&self) -> &VoxelMesh {
        &self.mesh
    }
    pub fn model(&self) -> &LorentzModel {
        &self.model
    }
    pub fn basis(&self) -> &MatterBasis {
        &self.basis
    }
    pub fn quadrature(&self) -> &QuadratureOptions {
        &self.quadrature
    }
    pub fn rules(&self) -> &[TargetRules] {
        &self.rules
    }
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }
    pub fn c0(&self) -> f64 {
        self.model.units.c0
    }

    /// Assembles A(s) from the stored rules.
    pub fn operator(&self, s: ComplexFrequency, exec: Execution) -> Result<FrequencyOperator> {
        assemble_with_rules(&self.mesh, &self.rules, &self.model, s, exec)
    }
}
