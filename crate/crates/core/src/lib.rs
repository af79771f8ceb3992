//! Volume integral equation solver for the c-field expansion of the
//! polarization, electric and magnetic field operators of a finite,
//! homogeneous, dispersive dielectric object.
//!
//! The polarization density operator is expanded over the annihilation
//! operators of the radiation modes and of the matter oscillators. Each
//! expansion coefficient is an ordinary complex vector field obeying a
//! classical retarded volume integral equation. This crate discretizes that
//! equation on a voxel mesh, solves it per complex frequency, reconstructs
//! causal time histories, rebuilds the electric and magnetic coefficient
//! fields, and evaluates photodetection counting rates.
//!
//! Module map:
//!
//! * [`dispersion`]: causal Lorentz susceptibility and its time kernels.
//! * [`geometry`]: voxel meshes, matter bases and plane-wave modes.
//! * [`greens`]: vacuum scalar and dyadic Green functions.
//! * [`assembly`]: discretized integral operator in frequency and time.
//! * [`solver`]: driving terms, frequency sweeps and the time-marching oracle.
//! * [`fields`]: electric and magnetic coefficient fields.
//! * [`qstat`]: single counting rates.
//! * [`cli`]: run configuration, pipeline and on-disk artifacts.
//!
//! Parallel execution uses rayon behind the `parallel` feature (on by
//! default); see [`par::Execution`].

pub mod assembly;
pub mod cli;
pub mod dispersion;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod greens;
pub mod par;
pub mod qstat;
pub mod quadrature;
pub mod solver;
pub mod spectral;
pub mod units;

pub use num_complex::Complex64;

/// Complex 3-vector sample (one voxel, one observation point).
pub type CVec3 = nalgebra::Vector3<Complex64>;
/// Real 3-vector (positions, directions, wave vectors).
pub type Vec3 = nalgebra::Vector3<f64>;

/// A complex vector sample per voxel.
pub type CVectorField = Vec<CVec3>;

pub use error::{Error, Result};

/// Promotes a real vector to a complex one.
#[inline]
pub fn complexify(v: &Vec3) -> CVec3 {
    v.map(Complex64::from)
}

/// Bilinear (non-conjugating) product of a real and a complex vector.
#[inline]
pub(crate) fn rdot(a: &Vec3, b: &CVec3) -> Complex64 {
    b[0] * a[0] + b[1] * a[1] + b[2] * a[2]
}

