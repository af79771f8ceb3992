//! Pipeline orchestration: validate → assemble → sweep → fields → oracle →
//! rates, each stage a barrier. Artifacts go under the output directory and
//! `manifest.json` is written atomically at the end, marked failed if any
//! stage errors.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use super::config::{ConfigIssue, RunConfig, Validated};
use crate::assembly::QuadratureOptions;
use crate::fields::field_coefficient;
use crate::par::{self, Execution};
use crate::qstat::{evaluate_counting_rates, NuQuadrature, NORMALIZATION_TOLERANCE, NU_THRESHOLD, TRUNCATION_LIMIT};
use crate::solver::{history_distance, march_on_time_oracle, max_oracle_step, sweep_many, Problem, SolveResult, SweepOptions};
use crate::units::Units;
use crate::{CVec3, Error, Result};

/// The time-marching comparison is offered on meshes up to this size.
pub const ORACLE_MAX_VOXELS: usize = 8;

/// Relative tolerance between parallel and sequential reductions.
pub const REDUCTION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Worker threads; 0 means the rayon default, 1 runs sequentially.
    pub threads: usize,
    /// Also run the time-marching oracle for every drive.
    pub oracle_mot: bool,
}

impl RunOptions {
    fn exec(&self) -> Execution {
        if self.threads == 1 {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Running,
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshSummary {
    pub fingerprint: String,
    pub voxels: usize,
    pub facets: usize,
    pub h: f64,
    pub volume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTime {
    pub name: &'static str,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    pub causality_limit: f64,
    pub quadrature: QuadratureOptions,
    pub normalization: f64,
    pub nu_threshold: f64,
    pub truncation_limit: f64,
    pub reduction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriveReport {
    pub label: String,
    pub omega_shift: f64,
    pub max_residual: f64,
    pub initial_error: f64,
    pub causality_leak: f64,
    pub amplification: f64,
}

impl DriveReport {
    fn of(r: &SolveResult) -> Self {
        DriveReport {
            label: r.drive.label(),
            omega_shift: r.plan.omega_shift,
            max_residual: r.max_residual(),
            initial_error: r.initial_error,
            causality_leak: r.causality_leak,
            amplification: r.amplification,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatesReport {
    pub modes: Vec<String>,
    pub nu: NuQuadrature,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub label: String,
    pub dt: f64,
    pub t_end: f64,
    /// Relative L² distance of the swept history from the marched one.
    pub rel_l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub version: &'static str,
    pub config: RunConfig,
    /// Constants of the unit system the run was expressed in.
    pub units: Units,
    pub threads: usize,
    pub mesh: MeshSummary,
    pub t_max: f64,
    pub stages: Vec<StageTime>,
    pub tolerances: Tolerances,
    pub drives: Vec<DriveReport>,
    /// Largest relative residual over the configured drives, per grid
    /// frequency (0 where the taper skipped the sample).
    pub residual_max_per_frequency: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rates: Option<RatesReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub oracle: Vec<OracleReport>,
    pub artifacts: Vec<String>,
}

impl RunManifest {
    fn new(config: &RunConfig, v: &Validated, opts: &RunOptions) -> Self {
        RunManifest {
            status: RunStatus::Running,
            error: None,
            version: env!("CARGO_PKG_VERSION"),
            config: config.clone(),
            units: v.units,
            threads: opts.threads,
            mesh: summary(&v.mesh),
            t_max: v.t_max,
            stages: Vec::new(),
            tolerances: Tolerances {
                causality_limit: config.tolerances.causality_limit,
                quadrature: config.tolerances.quadrature,
                normalization: NORMALIZATION_TOLERANCE,
                nu_threshold: NU_THRESHOLD,
                truncation_limit: TRUNCATION_LIMIT,
                reduction: REDUCTION_TOLERANCE,
            },
            drives: Vec::new(),
            residual_max_per_frequency: Vec::new(),
            rates: None,
            oracle: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    fn stage(&mut self, name: &'static str, started: Instant) {
        self.stages.push(StageTime { name, seconds: started.elapsed().as_secs_f64() });
    }
}

fn summary(mesh: &crate::geometry::VoxelMesh) -> MeshSummary {
    MeshSummary {
        fingerprint: mesh.fingerprint(),
        voxels: mesh.len(),
        facets: mesh.facets().len(),
        h: mesh.h(),
        volume: mesh.total_volume(),
    }
}

/// Writes through a temporary file and renames, so readers never see a
/// partial document.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

struct Artifacts<'a> {
    dir: &'a Path,
    names: &'a mut Vec<String>,
}

impl Artifacts<'_> {
    fn write(&mut self, name: String, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
        let mut w = BufWriter::new(File::create(self.dir.join(&name))?);
        f(&mut w)?;
        w.flush()?;
        self.names.push(name);
        Ok(())
    }
}

fn write_cvec(w: &mut impl Write, v: &CVec3) -> std::io::Result<()> {
    for z in v.iter() {
        write!(w, ",{:e},{:e}", z.re, z.im)?;
    }
    Ok(())
}

/// Rows `omega,residual,ReP̄x,ImP̄x,...` with P̄ the voxel mean of P̂.
fn write_spectrum(w: &mut impl Write, r: &SolveResult) -> std::io::Result<()> {
    writeln!(w, "omega,residual,RePx,ImPx,RePy,ImPy,RePz,ImPz")?;
    for ((omega, res), p) in r.omegas.iter().zip(&r.residuals).zip(&r.spectra) {
        let mean = p.iter().fold(CVec3::zeros(), |a, b| a + b) / crate::Complex64::from(p.len().max(1) as f64);
        write!(w, "{omega:e},{res:e}")?;
        write_cvec(w, &mean)?;
        writeln!(w)?;
    }
    Ok(())
}

/// Rows `t,voxel,RePx,...,ImPz` for t ≤ t_max.
fn write_history(w: &mut impl Write, r: &SolveResult) -> std::io::Result<()> {
    writeln!(w, "t,voxel,RePx,ImPx,RePy,ImPy,RePz,ImPz")?;
    let h = &r.history;
    for k in 0..h.steps() {
        let t = k as f64 * h.dt();
        for v in 0..h.voxels() {
            write!(w, "{t:e},{v}")?;
            write_cvec(w, &h.sample(v, k))?;
            writeln!(w)?;
        }
    }
    Ok(())
}

/// Validates and runs the whole pipeline. On a stage error the manifest is
/// still written, with status `failed`, and the error is returned.
pub fn run(config: &RunConfig, opts: &RunOptions) -> Result<RunManifest> {
    let started = Instant::now();
    let v = config.validate()?;
    if opts.oracle_mot && v.mesh.len() > ORACLE_MAX_VOXELS {
        return Err(Error::Config(vec![ConfigIssue {
            path: "geometry".into(),
            message: format!("the time-marching oracle needs at most {ORACLE_MAX_VOXELS} voxels, mesh has {}", v.mesh.len()),
        }]));
    }
    let dir = config.output.dir.clone();
    std::fs::create_dir_all(&dir)?;
    let mut manifest = RunManifest::new(config, &v, opts);
    manifest.stage("validate", started);

    let outcome = par::with_threads(opts.threads, || pipeline(config, v, opts, &dir, &mut manifest));
    match &outcome {
        Ok(()) => manifest.status = RunStatus::Ok,
        Err(e) => {
            manifest.status = RunStatus::Failed;
            manifest.error = Some(e.to_string());
        }
    }
    write_atomic(&dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    outcome.map(|()| manifest)
}

fn pipeline(config: &RunConfig, v: Validated, opts: &RunOptions, dir: &Path, m: &mut RunManifest) -> Result<()> {
    let exec = opts.exec();
    let mut names = Vec::new();
    let result = stages(config, v, opts, exec, dir, m, &mut names);
    m.artifacts = names;
    result
}

fn stages(
    config: &RunConfig,
    v: Validated,
    opts: &RunOptions,
    exec: Execution,
    dir: &Path,
    m: &mut RunManifest,
    names: &mut Vec<String>,
) -> Result<()> {
    let mut out = Artifacts { dir, names };
    let clock = Instant::now();
    let problem = Problem::new(v.mesh, v.model, config.basis, config.tolerances.quadrature, exec)?;
    m.stage("assemble", clock);
    let sweep_opts = SweepOptions { t_max: Some(v.t_max), causality_limit: config.tolerances.causality_limit, exec };

    if !v.drives.is_empty() {
        let clock = Instant::now();
        let results = sweep_many(&problem, &v.plan, &v.drives, &sweep_opts)?;
        m.stage("sweep", clock);
        m.residual_max_per_frequency = (0..v.plan.n_omega)
            .map(|k| results.iter().map(|r| r.residuals[k]).fold(0.0, f64::max))
            .collect();
        for r in &results {
            let label = r.drive.label();
            m.drives.push(DriveReport::of(r));
            out.write(format!("spectrum_{label}.csv"), |w| write_spectrum(w, r))?;
            out.write(format!("history_{label}.csv"), |w| write_history(w, r))?;
        }

        if let Some(grid) = &v.grid {
            let clock = Instant::now();
            for r in &results {
                let f = field_coefficient(&problem, r, grid, exec)?;
                out.write(format!("fields_{}.csv", f.label), |w| f.write_csv(w))?;
            }
            m.stage("fields", clock);
        }

        if opts.oracle_mot {
            let clock = Instant::now();
            let dt = 0.25 * max_oracle_step(&problem);
            for r in &results {
                let marched = march_on_time_oracle(&problem, &r.drive, dt, v.t_max)?;
                let rel_l2 = history_distance(&marched, &r.history, v.t_max)?;
                m.oracle.push(OracleReport { label: r.drive.label(), dt, t_end: v.t_max, rel_l2 });
            }
            let report = serde_json::to_string_pretty(&m.oracle)?;
            out.write("oracle_mot.json".into(), |w| w.write_all(report.as_bytes()))?;
            m.stage("oracle", clock);
        }
    }

    if let (Some(state), Some(grid)) = (&v.state, &v.grid) {
        let clock = Instant::now();
        let nu_order = config.state.as_ref().map_or(crate::qstat::DEFAULT_NU_ORDER, |s| s.nu_order);
        let rates = evaluate_counting_rates(&problem, &v.plan, state, nu_order, grid, &sweep_opts)?;
        out.write("rates.csv".into(), |w| rates.map.write_csv(w))?;
        for f in &rates.radiation {
            out.write(format!("fields_{}.csv", f.label), |w| f.write_csv(w))?;
        }
        m.rates = Some(RatesReport {
            modes: rates.radiation.iter().map(|f| f.label.clone()).collect(),
            nu: rates.quadrature.clone(),
            max_residual: rates.max_residual,
        });
        m.stage("rates", clock);
    }
    Ok(())
}

/// Builds the mesh only and writes `voxels.csv` and `facets.csv`.
pub fn dump_mesh(config: &RunConfig) -> Result<MeshSummary> {
    let mesh = config.geometry.build().map_err(|e| {
        Error::Config(vec![ConfigIssue { path: "geometry".into(), message: e.to_string() }])
    })?;
    let dir = &config.output.dir;
    std::fs::create_dir_all(dir)?;
    let mut names = Vec::new();
    let mut out = Artifacts { dir, names: &mut names };
    out.write("voxels.csv".into(), |w| mesh.write_voxels_csv(w))?;
    out.write("facets.csv".into(), |w| mesh.write_facets_csv(w))?;
    Ok(summary(&mesh))
}
