//! Run configuration: one JSON document, unknown keys rejected.
//!
//! [`RunConfig::validate`] checks every block and every cross-block
//! constraint (grid resolution, pole clearance, observation clearance) before
//! any compute and reports all violations at once, each with a path into the
//! document.

use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::assembly::QuadratureOptions;
use crate::dispersion::{LorentzModel, ThermalReservoir};
use crate::fields::ObservationGrid;
use crate::geometry::{build_box_mesh, build_sphere_mesh, BasisKind, MatterBasis, PlaneWaveMode, VoxelMesh};
use crate::qstat::{InitialState, PhotonMode, DEFAULT_NU_ORDER};
use crate::solver::{DrivingSpec, Waveform};
use crate::spectral::SweepPlan;
use crate::units::{UnitSystem, Units};
use crate::{Error, Result, Vec3};

/// One violated constraint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigIssue {
    /// Dotted path into the document, e.g. `drives[1].nu`.
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub units: UnitSystem,
    pub dispersion: DispersionConfig,
    pub geometry: GeometryConfig,
    #[serde(default = "default_basis")]
    pub basis: BasisKind,
    pub sweep: SweepConfig,
    #[serde(default)]
    pub drives: Vec<DriveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<ObservationConfig>,
    pub output: OutputConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
}

fn default_basis() -> BasisKind {
    BasisKind::UniformTriplet
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionConfig {
    pub omega_p: f64,
    pub omega_0: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeometryConfig {
    Sphere { radius: f64, n_per_diameter: usize },
    Box { extents: [f64; 3], n: [usize; 3] },
}

impl GeometryConfig {
    pub fn build(&self) -> Result<VoxelMesh> {
        match *self {
            GeometryConfig::Sphere { radius, n_per_diameter } => build_sphere_mesh(radius, n_per_diameter),
            GeometryConfig::Box { extents, n } => build_box_mesh(extents, n),
        }
    }
}

/// Frequency grid plus the length of the returned histories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n_omega: usize,
    pub omega_max: f64,
    pub eps_reg: f64,
    #[serde(default = "default_taper")]
    pub taper_fraction: f64,
    #[serde(default)]
    pub omega_shift: f64,
    #[serde(default = "default_oversample")]
    pub oversample: usize,
    /// Defaults to a quarter of the repetition period.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
}

fn default_taper() -> f64 {
    0.1
}
fn default_oversample() -> usize {
    1
}

impl SweepConfig {
    pub fn plan(&self) -> Result<SweepPlan> {
        let plan = SweepPlan {
            n_omega: self.n_omega,
            omega_max: self.omega_max,
            eps_reg: self.eps_reg,
            taper_fraction: self.taper_fraction,
            omega_shift: self.omega_shift,
            oversample: self.oversample,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// History length actually used.
    pub fn history_length(&self, plan: &SweepPlan) -> f64 {
        self.t_max.unwrap_or(0.25 * plan.period())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DriveConfig {
    Radiation { k: [f64; 3], polarization: u8 },
    Matter { m: usize, nu: f64 },
    Classical { m: usize, amplitude: f64, waveform: Waveform },
}

impl DriveConfig {
    pub fn spec(&self, units: &Units) -> Result<DrivingSpec> {
        Ok(match *self {
            DriveConfig::Radiation { k, polarization } => {
                DrivingSpec::Radiation(PlaneWaveMode::new(Vec3::from(k), polarization, units)?)
            }
            DriveConfig::Matter { m, nu } => DrivingSpec::Matter { m, nu },
            DriveConfig::Classical { m, amplitude, waveform } => DrivingSpec::Classical { m, amplitude, waveform },
        })
    }
}

/// Factorized initial state: thermal matter at `t0` and a one-photon
/// wavepacket given either mode by mode or as a Gaussian packet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub t0: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub photons: Vec<PhotonConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packet: Option<PacketConfig>,
    #[serde(default = "default_nu_order")]
    pub nu_order: usize,
}

fn default_nu_order() -> usize {
    DEFAULT_NU_ORDER
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotonConfig {
    pub k: [f64; 3],
    pub polarization: u8,
    /// Complex amplitude b_μ as `[re, im]`.
    pub amplitude: [f64; 2],
    #[serde(default = "default_weight")]
    pub weight: f64,
}

fn default_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketConfig {
    pub k0: [f64; 3],
    pub sigma_k: f64,
    pub per_axis: usize,
    pub polarization: u8,
}

impl StateConfig {
    pub fn build(&self, units: &Units) -> Result<InitialState> {
        let reservoir = ThermalReservoir::new(self.t0, *units)?;
        match (&self.packet, self.photons.is_empty()) {
            (Some(_), false) => Err(Error::param("packet", "give either photons or packet, not both")),
            (Some(p), true) => {
                InitialState::gaussian_packet(reservoir, Vec3::from(p.k0), p.sigma_k, p.per_axis, p.polarization, units)
            }
            (None, _) => {
                let photons = self
                    .photons
                    .iter()
                    .map(|p| {
                        Ok(PhotonMode {
                            mode: PlaneWaveMode::new(Vec3::from(p.k), p.polarization, units)?,
                            amplitude: Complex64::new(p.amplitude[0], p.amplitude[1]),
                            weight: p.weight,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                InitialState::new(reservoir, photons)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationConfig {
    pub points: Vec<[f64; 3]>,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

/// Overrides of the numerical tolerances; every field has a default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceConfig {
    pub causality_limit: f64,
    pub quadrature: QuadratureOptions,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig { causality_limit: 0.01, quadrature: QuadratureOptions::default() }
    }
}

/// Pieces of a validated configuration that later stages reuse.
#[derive(Debug, Clone)]
pub struct Validated {
    pub units: Units,
    pub model: LorentzModel,
    pub mesh: VoxelMesh,
    pub plan: SweepPlan,
    pub t_max: f64,
    pub drives: Vec<DrivingSpec>,
    pub state: Option<InitialState>,
    pub grid: Option<ObservationGrid>,
}

/// Collects issues while validating.
#[derive(Default)]
struct Issues(Vec<ConfigIssue>);

impl Issues {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(ConfigIssue { path: path.into(), message: message.into() });
    }

    /// Records an error under `block`, refining the path with the parameter
    /// name when the library reports one.
    fn error(&mut self, block: &str, e: Error) {
        match e {
            Error::InvalidParameter { name, reason } => self.push(format!("{block}.{name}"), reason),
            Error::Config(list) => self.0.extend(list),
            other => self.push(block, other.to_string()),
        }
    }

    fn check<T>(&mut self, block: &str, r: Result<T>) -> Option<T> {
        r.map_err(|e| self.error(block, e)).ok()
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::Config(vec![ConfigIssue { path: format!("line {} column {}", e.line(), e.column()), message: e.to_string() }])
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(vec![ConfigIssue { path: path.display().to_string(), message: e.to_string() }])
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Checks the whole document; either everything is usable or every
    /// violation is returned in [`Error::Config`].
    pub fn validate(&self) -> Result<Validated> {
        let mut issues = Issues::default();
        let units = Units::of(self.units);
        let d = self.dispersion;
        let model = issues.check("dispersion", LorentzModel::new(d.omega_p, d.omega_0, d.gamma, units));
        let mesh = issues.check("geometry", self.geometry.build());
        let plan = issues.check("sweep", self.sweep.plan());

        let tol = &self.tolerances;
        if !(tol.causality_limit > 0.0 && tol.causality_limit < 1.0) {
            issues.push("tolerances.causality_limit", "must lie in (0, 1)");
        }
        let q = &tol.quadrature;
        if !(q.near_distance >= 0.0 && q.facet_near_distance >= 0.0) {
            issues.push("tolerances.quadrature", "near distances must be non-negative");
        }
        if !(q.facet_static_tolerance > 0.0 && q.facet_static_tolerance < 1.0) {
            issues.push("tolerances.quadrature.facet_static_tolerance", "must lie in (0, 1)");
        }
        if q.facet_max_order == 0 {
            issues.push("tolerances.quadrature.facet_max_order", "must be at least 1");
        }

        let mut t_max = None;
        if let (Some(plan), Some(model)) = (&plan, &model) {
            issues.check("sweep", plan.check_resolution(model.gamma));
            let t = self.sweep.history_length(plan);
            if !(t > 0.0 && t <= 0.5 * plan.period()) {
                issues.push("sweep.t_max", format!("must lie in (0, {:e}], half the repetition period", 0.5 * plan.period()));
            } else {
                t_max = Some(t);
            }
        }

        let basis_len = mesh.as_ref().map(|m| MatterBasis::build(self.basis, m).len());
        let mut drives = Vec::with_capacity(self.drives.len());
        for (i, dc) in self.drives.iter().enumerate() {
            let path = format!("drives[{i}]");
            let Some(spec) = issues.check(&path, dc.spec(&units)) else { continue };
            match spec {
                DrivingSpec::Matter { m, nu } => {
                    if basis_len.is_some_and(|n| m >= n) {
                        issues.push(format!("{path}.m"), format!("basis has {} fields", basis_len.unwrap_or(0)));
                    }
                    if !(nu > 0.0 && nu.is_finite()) {
                        issues.push(format!("{path}.nu"), "matter frequency must be positive");
                    }
                }
                DrivingSpec::Classical { m, amplitude, waveform } => {
                    if basis_len.is_some_and(|n| m >= n) {
                        issues.push(format!("{path}.m"), format!("basis has {} fields", basis_len.unwrap_or(0)));
                    }
                    if !amplitude.is_finite() {
                        issues.push(format!("{path}.amplitude"), "must be finite");
                    }
                    issues.check(&format!("{path}.waveform"), waveform.validate());
                }
                DrivingSpec::Radiation(_) => {}
            }
            if let (Some(plan), Some(pole)) = (&plan, spec.pole()) {
                if let Err(Error::PoleCollision { pole, distance, suggested_shift }) = plan.check_pole(pole) {
                    issues.push(
                        "sweep.omega_shift",
                        format!(
                            "grid passes within {distance:e} of the pole at omega = {pole:e} of {path} \
                             (limit eps_reg/10); use omega_shift = {suggested_shift:e}"
                        ),
                    );
                }
            }
            drives.push(spec);
        }

        let state = self.state.as_ref().and_then(|s| {
            if s.nu_order == 0 {
                issues.push("state.nu_order", "must be at least 1");
            }
            issues.check("state", s.build(&units))
        });

        let mut grid = None;
        match &self.observation {
            Some(obs) => {
                if obs.points.is_empty() {
                    issues.push("observation.points", "at least one point required");
                }
                if obs.times.is_empty() {
                    issues.push("observation.times", "at least one time required");
                }
                if let (Some(t), Some(limit)) = (obs.times.iter().find(|t| !(**t >= 0.0 && **t <= t_max.unwrap_or(f64::INFINITY))), t_max) {
                    issues.push("observation.times", format!("sample time {t} outside [0, t_max = {limit:e}]"));
                }
                if let Some(mesh) = &mesh {
                    let points = obs.points.iter().map(|p| Vec3::from(*p)).collect();
                    grid = issues.check("observation", ObservationGrid::new(mesh, points, obs.times.clone(), q));
                }
            }
            None if self.state.is_some() => issues.push("observation", "counting rates need an observation block"),
            None => {}
        }

        if self.output.dir.as_os_str().is_empty() {
            issues.push("output.dir", "must not be empty");
        }

        if !issues.0.is_empty() {
            return Err(Error::Config(issues.0));
        }
        Ok(Validated {
            units,
            model: model.expect("checked"),
            mesh: mesh.expect("checked"),
            plan: plan.expect("checked"),
            t_max: t_max.expect("checked"),
            drives,
            state,
            grid,
        })
    }
}
