//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use qvie::assembly::QuadratureOptions;
use qvie::dispersion::LorentzModel;
use qvie::geometry::{build_box_mesh, BasisKind, PlaneWaveMode};
use qvie::par::Execution;
use qvie::solver::{DrivingSpec, Problem};
use qvie::spectral::SweepPlan;
use qvie::units::Units;
use qvie::Vec3;

pub fn lorentz() -> LorentzModel {
    LorentzModel::new(1.0, 1.0, 0.2, Units::NORMALIZED).unwrap()
}

/// Box of `n` voxels of edge 0.3 in normalized units.
pub fn box_problem(n: [usize; 3]) -> Problem {
    let extents = [0.3 * n[0] as f64, 0.3 * n[1] as f64, 0.3 * n[2] as f64];
    let mesh = build_box_mesh(extents, n).unwrap();
    Problem::new(mesh, lorentz(), BasisKind::UniformTriplet, QuadratureOptions::default(), Execution::Parallel).unwrap()
}

pub fn two_voxels() -> Problem {
    box_problem([2, 1, 1])
}

/// Grid for matter and radiation drives with poles near ω = 1: wide band for
/// the algebraic spectral tails, shifted off the real-axis pole.
pub fn wide_plan() -> SweepPlan {
    SweepPlan::new(8192, 48.0, 0.05).unwrap().with_oversample(2).unwrap().with_shift(0.005859375).unwrap()
}

pub fn radiation(k: [f64; 3], pol: u8) -> DrivingSpec {
    DrivingSpec::Radiation(PlaneWaveMode::new(Vec3::from(k), pol, &Units::NORMALIZED).unwrap())
}

/// Relative L² distance between two sample sets.
pub fn rel_l2<'a>(a: impl IntoIterator<Item = &'a qvie::CVec3>, b: impl IntoIterator<Item = &'a qvie::CVec3>) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in a.into_iter().zip(b) {
        num += (x - y).norm_squared();
        den += x.norm_squared();
    }
    (num / den).sqrt()
}

/// Box with ωp = 1e-4: scattered fields are ~1e-8 of the incident ones.
pub fn weak_problem(n: [usize; 3]) -> Problem {
    let extents = [0.3 * n[0] as f64, 0.3 * n[1] as f64, 0.3 * n[2] as f64];
    let mesh = build_box_mesh(extents, n).unwrap();
    let model = LorentzModel::new(1e-4, 1.0, 0.2, Units::NORMALIZED).unwrap();
    Problem::new(mesh, model, BasisKind::UniformTriplet, QuadratureOptions::default(), Execution::Parallel).unwrap()
}

/// Cheaper grid for stages that sweep many drives; Δω is still a quarter of
/// min(γ, ε).
pub fn rates_plan() -> SweepPlan {
    SweepPlan::new(2048, 24.0, 0.1).unwrap().with_oversample(2).unwrap()
}
