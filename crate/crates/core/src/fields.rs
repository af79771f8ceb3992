//! Electric and magnetic coefficient fields on observation grids.
//!
//! Time route: `E = (1/ε₀)L{p} + free part`, with L evaluated on the stored
//! history by the same quadrature as the operator, and
//! `B = (μ₀/4π)Σ w[ṗ(t')×r̂/R² + ∂ₜ(ṗu)(t')×r̂/(c₀R)] + free part`.
//! Frequency route: per-frequency kernels applied to P̂ and inverse
//! transformed. The two routes are independent checks of each other.

use num_complex::Complex64;

use crate::assembly::{hat, QuadratureOptions, TargetRules, TimeHistory, INV_4PI};
use crate::geometry::VoxelMesh;
use crate::par::Execution;
use crate::solver::{free_surface_field, DrivingSpec, Problem, SolveResult};
use crate::spectral::reconstruct;
use crate::{complexify, CVec3, Error, Result, Vec3};

/// Observation points and sample times.
#[derive(Debug, Clone)]
pub struct ObservationGrid {
    points: Vec<Vec3>,
    inside: Vec<bool>,
    times: Vec<f64>,
    rules: Vec<TargetRules>,
}

impl ObservationGrid {
    /// Builds the grid and its quadrature. Every point must keep a distance
    /// of at least h/10 from all voxel and face centroids.
    pub fn new(mesh: &VoxelMesh, points: Vec<Vec3>, times: Vec<f64>, opts: &QuadratureOptions) -> Result<Self> {
        let clearance = 0.1 * mesh.h();
        let interior = mesh.interior_faces();
        for (i, p) in points.iter().enumerate() {
            if !p.iter().all(|x| x.is_finite()) {
                return Err(Error::Clearance { index: i, reason: "non-finite coordinates".into() });
            }
            let near_centroid = mesh.centroids().iter().any(|c| (p - c).norm() < clearance);
            let near_facet = mesh.facets().iter().chain(&interior).any(|f| (p - f.centroid).norm() < clearance);
            if near_centroid || near_facet {
                return Err(Error::Clearance {
                    index: i,
                    reason: format!("closer than h/10 = {clearance:e} to a voxel or facet centroid"),
                });
            }
        }
        if let Some(t) = times.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
            return Err(Error::param("times", format!("sample time {t} must be finite and non-negative")));
        }
        let rules = points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                TargetRules::observation(mesh, *p, opts)
                    .map_err(|e| Error::Clearance { index: i, reason: e.to_string() })
            })
            .collect::<Result<Vec<_>>>()?;
        let inside = points.iter().map(|p| mesh.voxel_containing(p).is_some()).collect();
        Ok(ObservationGrid { points, inside, times, rules })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }
    pub fn inside(&self) -> &[bool] {
        &self.inside
    }
    pub fn times(&self) -> &[f64] {
        &self.times
    }
    pub fn rules(&self) -> &[TargetRules] {
        &self.rules
    }
    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// E and B samples of one expansion coefficient, `e[time][point]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldCoefficient {
    pub label: String,
    pub times: Vec<f64>,
    pub points: Vec<Vec3>,
    pub e: Vec<Vec<CVec3>>,
    pub b: Vec<Vec<CVec3>>,
}

impl FieldCoefficient {
    /// CSV rows `t,x,y,z,ReEx,ImEx,...,ReBz,ImBz`.
    pub fn write_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "t,x,y,z,ReEx,ImEx,ReEy,ImEy,ReEz,ImEz,ReBx,ImBx,ReBy,ImBy,ReBz,ImBz")?;
        for (k, t) in self.times.iter().enumerate() {
            for (j, p) in self.points.iter().enumerate() {
                write!(w, "{t:e},{:e},{:e},{:e}", p.x, p.y, p.z)?;
                for v in [&self.e[k][j], &self.b[k][j]] {
                    for z in v.iter() {
                        write!(w, ",{:e},{:e}", z.re, z.im)?;
                    }
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

fn check_history(problem: &Problem, history: &TimeHistory, grid: &ObservationGrid) -> Result<()> {
    if history.voxels() != problem.mesh().len() {
        return Err(Error::Mismatch("history and mesh sizes differ".into()));
    }
    if let Some(t) = grid.times.iter().find(|t| **t > history.t_end() * (1.0 + 1e-12)) {
        return Err(Error::HistoryRange { t: *t, t_end: history.t_end() });
    }
    // Light-cone shells are resolved with the history's step; they must not
    // reach back to t = 0 at any observation point.
    let c0 = problem.c0();
    let nearest = grid.rules.iter().flat_map(|r| r.volume.iter().map(|n| n.distance)).fold(f64::INFINITY, f64::min);
    if c0 * history.dt() >= nearest {
        return Err(Error::param(
            "dt",
            format!("history step {:e} exceeds the shortest observation delay {:e}", history.dt(), nearest / c0),
        ));
    }
    Ok(())
}

/// Free electric field of the driving at one point.
fn free_e(problem: &Problem, drive: &DrivingSpec, rules: &TargetRules, t: f64) -> Result<CVec3> {
    let eps0 = problem.model().units.eps0;
    Ok(match *drive {
        DrivingSpec::Radiation(mode) => mode.e_free(&rules.point, t),
        DrivingSpec::Matter { m, nu } => {
            let a = problem.model().matter_amplitude(nu) / eps0;
            free_surface_field(rules, problem.basis().field(m)?, t, problem.c0()) * Complex64::from(a)
        }
        DrivingSpec::Classical { .. } => CVec3::zeros(),
    })
}

fn free_b(drive: &DrivingSpec, point: &Vec3, t: f64) -> CVec3 {
    match drive {
        DrivingSpec::Radiation(mode) => mode.b_free(point, t),
        _ => CVec3::zeros(),
    }
}

/// E(r; t) on the grid from a solved history (time route), `[time][point]`.
pub fn efield_coefficient(
    problem: &Problem,
    history: &TimeHistory,
    drive: &DrivingSpec,
    grid: &ObservationGrid,
    exec: Execution,
) -> Result<Vec<Vec<CVec3>>> {
    check_history(problem, history, grid)?;
    let inv_eps0 = 1.0 / problem.model().units.eps0;
    let c0 = problem.c0();
    grid.times
        .iter()
        .map(|&t| {
            exec.map(grid.len(), |j| {
                let r = &grid.rules[j];
                let l = crate::assembly::apply_l_time(history, std::slice::from_ref(r), t, c0, Execution::Sequential)?;
                Ok(l[0].scale(inv_eps0) + free_e(problem, drive, r, t)?)
            })
            .into_iter()
            .collect()
        })
        .collect()
}

/// B(r; t) on the grid from a solved history, `[time][point]`. The host
/// cell of an interior point is a sphere centred on the point and adds no
/// curl.
pub fn bfield_coefficient(
    problem: &Problem,
    history: &TimeHistory,
    drive: &DrivingSpec,
    grid: &ObservationGrid,
    exec: Execution,
) -> Result<Vec<Vec<CVec3>>> {
    check_history(problem, history, grid)?;
    let units = problem.model().units;
    let mu0 = units.mu0();
    let c0 = units.c0;
    let dt = history.dt();
    grid.times
        .iter()
        .map(|&t| {
            exec.map(grid.len(), |j| {
                let r = &grid.rules[j];
                let mut out = CVec3::zeros();
                for n in &r.volume {
                    let tr = t - n.distance / c0;
                    let dir = complexify(&n.direction);
                    let mut accel = history.accel(n.source, tr)?;
                    if let Some(rate0) = history.initial_rate() {
                        accel += rate0[n.source].scale(hat(tr, dt));
                    }
                    let k = mu0 * n.weight * INV_4PI;
                    out += history.rate(n.source, tr)?.cross(&dir).scale(k / (n.distance * n.distance));
                    out += accel.cross(&dir).scale(k / (c0 * n.distance));
                }
                Ok(out + free_b(drive, &r.point, t))
            })
            .into_iter()
            .collect()
        })
        .collect()
}

/// E and B of one solved coefficient on the grid.
pub fn field_coefficient(problem: &Problem, result: &SolveResult, grid: &ObservationGrid, exec: Execution) -> Result<FieldCoefficient> {
    Ok(FieldCoefficient {
        label: result.drive.label(),
        times: grid.times.clone(),
        points: grid.points.clone(),
        e: efield_coefficient(problem, &result.history, &result.drive, grid, exec)?,
        b: bfield_coefficient(problem, &result.history, &result.drive, grid, exec)?,
    })
}

/// Free longitudinal field N_m(r; t) of the unit basis field U_m:
/// `(1/ε₀)Σ_f Σ_q (w r̂/4πR²)·[u(t) − u(t − R/c₀)]·(n_f·U_m)`.
pub fn free_n_m(problem: &Problem, m: usize, grid: &ObservationGrid, t: f64) -> Result<Vec<CVec3>> {
    if t < 0.0 {
        return Err(Error::param("t", "free field is defined for t >= 0"));
    }
    let u = problem.basis().field(m)?;
    let inv_eps0 = 1.0 / problem.model().units.eps0;
    Ok(grid.rules.iter().map(|r| free_surface_field(r, u, t, problem.c0()).scale(inv_eps0)).collect())
}

/// E(r; t) on the grid through the frequency route, `[time][point]`.
///
/// Per frequency, `ε₀Ê = K(s)(P̂ − p(0)/s) + S(0)p(0)/s + ε₀ê_free(s)`. The
/// step E(0⁺)/s is removed before the inverse transform and restored after.
pub fn efield_spectral(problem: &Problem, result: &SolveResult, grid: &ObservationGrid) -> Result<Vec<Vec<CVec3>>> {
    let plan = result.plan;
    let eps0 = problem.model().units.eps0;
    let c0 = problem.c0();
    let p0 = &result.expected_initial;
    let jump: Vec<CVec3> = grid
        .rules
        .iter()
        .map(|r| {
            let rad = match result.drive {
                DrivingSpec::Radiation(mode) => mode.e_free(&r.point, 0.0),
                _ => CVec3::zeros(),
            };
            r.apply_static(p0).scale(1.0 / eps0) + rad
        })
        .collect();
    let spectra: Vec<Vec<CVec3>> = result
        .spectra
        .iter()
        .enumerate()
        .map(|(k, pk)| {
            let s = plan.frequency(k).s();
            let shifted: Vec<CVec3> = pk.iter().zip(p0).map(|(p, a)| p - a / s).collect();
            grid.rules
                .iter()
                .zip(&jump)
                .map(|(r, e0)| {
                    let mut e = (r.apply_frequency(&shifted, s, c0) + r.apply_static(p0) / s).scale(1.0 / eps0);
                    if let DrivingSpec::Radiation(mode) = result.drive {
                        e += mode.w(&r.point) * (mode.amplitude / (s + Complex64::new(0.0, mode.omega)));
                    }
                    e - e0 / s
                })
                .collect()
        })
        .collect();
    let rec = reconstruct(&plan, &spectra)?;
    grid.times
        .iter()
        .map(|&t| {
            let x = t / rec.dt;
            let k = x.floor() as usize;
            let f = x - k as f64;
            (0..grid.len())
                .map(|j| {
                    let series = &rec.positive[j];
                    if k + 1 >= series.len() {
                        return Err(Error::HistoryRange { t, t_end: (series.len() - 1) as f64 * rec.dt });
                    }
                    Ok(series[k].scale(1.0 - f) + series[k + 1].scale(f) + jump[j])
                })
                .collect()
        })
        .collect()
}
