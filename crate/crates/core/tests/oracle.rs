//! Frequency sweep against time marching on tiny meshes.

use qvie::assembly::{QuadratureOptions, TimeHistory};
use qvie::dispersion::LorentzModel;
use qvie::geometry::{build_box_mesh, BasisKind, PlaneWaveMode};
use qvie::par::Execution;
use qvie::solver::{march_on_time_oracle, sweep_and_reconstruct, DrivingSpec, Problem, SweepOptions, Waveform};
use qvie::spectral::SweepPlan;
use qvie::units::Units;
use qvie::Vec3;

fn two_voxels() -> Problem {
    let mesh = build_box_mesh([0.6, 0.3, 0.3], [2, 1, 1]).unwrap();
    let model = LorentzModel::new(1.0, 1.0, 0.2, Units::NORMALIZED).unwrap();
    Problem::new(mesh, model, BasisKind::UniformTriplet, QuadratureOptions::default(), Execution::Parallel).unwrap()
}

/// Relative L² distance over t ∈ [0, t_end] sampled on the oracle grid.
fn l2_error(oracle: &TimeHistory, swept: &TimeHistory, t_end: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    let steps = (t_end / oracle.dt()).floor() as usize;
    for v in 0..oracle.voxels() {
        for k in 0..=steps {
            let t = k as f64 * oracle.dt();
            let a = oracle.sample(v, k);
            let b = swept.value(v, t).unwrap();
            num += (a - b).norm_squared();
            den += a.norm_squared();
        }
    }
    (num / den).sqrt()
}

fn compare(drive: DrivingSpec, plan: SweepPlan, t_end: f64) -> f64 {
    let p = two_voxels();
    let swept = sweep_and_reconstruct(&p, &plan, drive, &SweepOptions { t_max: Some(t_end), ..Default::default() }).unwrap();
    let oracle = march_on_time_oracle(&p, &drive, 0.02, t_end).unwrap();
    l2_error(&oracle, &swept.history, t_end)
}

#[test]
fn pulse_driving_matches_time_marching() {
    let drive = DrivingSpec::Classical { m: 0, amplitude: 1.0, waveform: Waveform::Gaussian { t0: 18.0, width: 3.0, carrier: 1.0 } };
    let plan = SweepPlan::new(4096, 12.0, 0.05).unwrap().with_oversample(8).unwrap();
    let e = compare(drive, plan, 150.0);
    println!("pulse: {e:e}");
    assert!(e < 1e-2, "{e}");
}

#[test]
fn matter_driving_matches_time_marching() {
    let drive = DrivingSpec::Matter { m: 2, nu: 1.3 };
    let plan = SweepPlan::new(8192, 48.0, 0.05).unwrap().with_oversample(2).unwrap().with_shift(0.005859375).unwrap();
    let e = compare(drive, plan, 40.0);
    println!("matter: {e:e}");
    assert!(e < 1e-2, "{e}");
}

#[test]
fn radiation_driving_matches_time_marching() {
    let mode = PlaneWaveMode::new(Vec3::new(0.95, 0.0, 0.0), 2, &Units::NORMALIZED).unwrap();
    let drive = DrivingSpec::Radiation(mode);
    let plan = SweepPlan::new(8192, 48.0, 0.05).unwrap().with_oversample(2).unwrap().with_shift(0.005859375).unwrap();
    let e = compare(drive, plan, 40.0);
    println!("radiation: {e:e}");
    assert!(e < 1e-2, "{e}");
}
