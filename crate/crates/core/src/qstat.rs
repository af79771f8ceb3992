//! Single counting rates for a factorized initial state: thermal matter
//! reservoir ⊗ one-photon radiation wavepacket.
//!
//! `w_I = w_rad + w_mat` with `w_rad = |Σ_μ w_μ b_μ E_μ|²` (coherent over the
//! wavepacket) and `w_mat = ∫dν ρ_ν Σ_m |E_{m,ν}|²` (incoherent over
//! frequencies and over the independent basis oscillators m). Both are built
//! from (+)-frequency coefficients only, so vacuum fluctuations never enter.

use num_complex::Complex64;
use serde::Serialize;

use crate::dispersion::{bose_occupation, LorentzModel, ThermalReservoir};
use crate::fields::{field_coefficient, FieldCoefficient, ObservationGrid};
use crate::geometry::PlaneWaveMode;
use crate::quadrature::gauss_legendre_on;
use crate::solver::{sweep_many, DrivingSpec, Problem, SweepOptions};
use crate::spectral::SweepPlan;
use crate::units::Units;
use crate::{CVec3, Error, Result, Vec3};

/// Tolerance on Σ w_μ|b_μ|² = 1.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;
/// The ν interval keeps ρ_ν σ(ν) above this fraction of its maximum.
pub const NU_THRESHOLD: f64 = 1e-6;
/// Largest accepted share of the matter weight outside the ν interval.
pub const TRUNCATION_LIMIT: f64 = 0.01;
/// Default Gauss–Legendre order of the ν quadrature.
pub const DEFAULT_NU_ORDER: usize = 32;

/// One member of the wavepacket: mode μ, amplitude b_μ and the quadrature
/// weight standing in for the continuum measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonMode {
    pub mode: PlaneWaveMode,
    pub amplitude: Complex64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    reservoir: ThermalReservoir,
    photons: Vec<PhotonMode>,
}

impl InitialState {
    /// A non-empty mode set must satisfy Σ w_μ|b_μ|² = 1; an empty one is
    /// the radiation vacuum.
    pub fn new(reservoir: ThermalReservoir, photons: Vec<PhotonMode>) -> Result<Self> {
        if let Some(p) = photons.iter().find(|p| !(p.weight > 0.0 && p.weight.is_finite())) {
            return Err(Error::param("photon_modes", format!("quadrature weight {} must be positive", p.weight)));
        }
        if !photons.is_empty() {
            let norm: f64 = photons.iter().map(|p| p.weight * p.amplitude.norm_sqr()).sum();
            if (norm - 1.0).abs() > NORMALIZATION_TOLERANCE {
                return Err(Error::param("photon_modes", format!("sum of w|b|^2 is {norm}, expected 1")));
            }
        }
        Ok(InitialState { reservoir, photons })
    }

    pub fn vacuum(reservoir: ThermalReservoir) -> Self {
        InitialState { reservoir, photons: Vec::new() }
    }

    pub fn single_mode(reservoir: ThermalReservoir, mode: PlaneWaveMode) -> Self {
        InitialState { reservoir, photons: vec![PhotonMode { mode, amplitude: Complex64::from(1.0), weight: 1.0 }] }
    }

    /// Gaussian-windowed wavepacket on a `per_axis³` grid of wave vectors
    /// spanning ±2σ_k about `k0`, with |b|² ∝ exp(−|k − k0|²/2σ_k²) and
    /// weights equal to the cell volume of the k grid.
    pub fn gaussian_packet(
        reservoir: ThermalReservoir,
        k0: Vec3,
        sigma_k: f64,
        per_axis: usize,
        polarization: u8,
        units: &Units,
    ) -> Result<Self> {
        if !(sigma_k > 0.0 && sigma_k.is_finite()) {
            return Err(Error::param("sigma_k", "must be positive"));
        }
        if per_axis == 0 {
            return Err(Error::param("per_axis", "need at least one mode per axis"));
        }
        let step = 4.0 * sigma_k / per_axis as f64;
        let offset = |i: usize| (i as f64 - 0.5 * (per_axis - 1) as f64) * step;
        let mut photons = Vec::with_capacity(per_axis.pow(3));
        for i in 0..per_axis {
            for j in 0..per_axis {
                for l in 0..per_axis {
                    let dk = Vec3::new(offset(i), offset(j), offset(l));
                    let mode = PlaneWaveMode::new(k0 + dk, polarization, units)?;
                    let b = (-dk.norm_squared() / (4.0 * sigma_k * sigma_k)).exp();
                    photons.push(PhotonMode { mode, amplitude: Complex64::from(b), weight: step.powi(3) });
                }
            }
        }
        let norm: f64 = photons.iter().map(|p| p.weight * p.amplitude.norm_sqr()).sum();
        for p in &mut photons {
            p.amplitude /= norm.sqrt();
        }
        InitialState::new(reservoir, photons)
    }

    pub fn reservoir(&self) -> &ThermalReservoir {
        &self.reservoir
    }
    pub fn photons(&self) -> &[PhotonMode] {
        &self.photons
    }
}

/// Gauss–Legendre rule over the truncated ν interval.
///
/// Nodes are placed in θ with ν = ν_c + g·tan θ, which turns a resonance of
/// width g at ν_c into a smooth integrand.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NuQuadrature {
    pub lo: f64,
    pub hi: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Share of ∫ρσ/ν outside [lo, hi].
    pub truncation: f64,
}

impl NuQuadrature {
    /// Rule for a zero-temperature reservoir: no nodes, so w_mat ≡ 0.
    pub fn empty() -> Self {
        NuQuadrature { lo: 0.0, hi: 0.0, nodes: Vec::new(), weights: Vec::new(), truncation: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Σ W_j f(ν_j).
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(n, w)| w * f(*n)).sum()
    }
}

/// Builds the ν rule of `order` nodes where ρ_ν σ(ν) exceeds
/// [`NU_THRESHOLD`] of its maximum.
pub fn nu_quadrature(model: &LorentzModel, reservoir: &ThermalReservoir, order: usize) -> Result<NuQuadrature> {
    if order == 0 {
        return Err(Error::param("nu_order", "need at least one node"));
    }
    if reservoir.t0 == 0.0 {
        return Ok(NuQuadrature::empty());
    }
    // Geometric scan wide enough for both the resonance and the thermal
    // scale ħν ~ k_B T₀.
    let thermal = reservoir.units.kb * reservoir.t0 / reservoir.units.hbar;
    let top = 1e3 * model.omega_0.max(thermal);
    let bottom = 1e-9 * model.omega_0.min(thermal);
    let n = 40_000;
    let ratio = (top / bottom).powf(1.0 / n as f64);
    let mut grid = Vec::with_capacity(n + 1);
    let mut density = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let nu = bottom * ratio.powi(i as i32);
        grid.push(nu);
        density.push(bose_occupation(reservoir, nu)? * model.sigma(nu));
    }
    let peak = density.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::param("t0", "thermal weight vanishes or overflows on the scanned band"));
    }
    let centre = grid[density.iter().position(|d| *d == peak).unwrap_or(0)];
    let first = density.iter().position(|d| *d > NU_THRESHOLD * peak).unwrap_or(0);
    let last = density.iter().rposition(|d| *d > NU_THRESHOLD * peak).unwrap_or(n);
    let (lo, hi) = (grid[first], grid[last]);

    // Truncation share of ∫ρσ/ν, trapezoid on the scan grid.
    let (mut inside, mut outside) = (0.0, 0.0);
    for i in 0..n {
        let f = 0.5 * (density[i] / grid[i] + density[i + 1] / grid[i + 1]) * (grid[i + 1] - grid[i]);
        if i >= first && i < last {
            inside += f;
        } else {
            outside += f;
        }
    }
    let truncation = outside / (inside + outside);
    if truncation > TRUNCATION_LIMIT {
        return Err(Error::Truncation { estimate: truncation, limit: TRUNCATION_LIMIT });
    }

    let g = model.gamma;
    let (a, b) = (((lo - centre) / g).atan(), ((hi - centre) / g).atan());
    let (theta, w) = gauss_legendre_on(order, a, b);
    let nodes = theta.iter().map(|t| centre + g * t.tan()).collect();
    let weights = theta.iter().zip(&w).map(|(t, w)| w * g / t.cos().powi(2)).collect();
    Ok(NuQuadrature { lo, hi, nodes, weights, truncation })
}

fn check_shape(c: &FieldCoefficient, grid: &ObservationGrid) -> Result<()> {
    if c.times != grid.times() || c.points != grid.points() {
        return Err(Error::Mismatch(format!("coefficient {} was sampled on a different grid", c.label)));
    }
    Ok(())
}

fn zeros(grid: &ObservationGrid) -> Vec<Vec<f64>> {
    vec![vec![0.0; grid.len()]; grid.times().len()]
}

/// w_rad[time][point] = |Σ_μ w_μ b_μ E_μ|² over the wavepacket. Only modes of
/// the state contribute; a missing coefficient is an error.
pub fn counting_rate_rad(state: &InitialState, coefficients: &[FieldCoefficient], grid: &ObservationGrid) -> Result<Vec<Vec<f64>>> {
    let mut sum = vec![vec![CVec3::zeros(); grid.len()]; grid.times().len()];
    for p in &state.photons {
        let label = DrivingSpec::Radiation(p.mode).label();
        let c = coefficients
            .iter()
            .find(|c| c.label == label)
            .ok_or_else(|| Error::Mismatch(format!("no field coefficient for mode {label}")))?;
        check_shape(c, grid)?;
        let f = p.amplitude * p.weight;
        for (acc, e) in sum.iter_mut().zip(&c.e) {
            for (a, v) in acc.iter_mut().zip(e) {
                *a += v * f;
            }
        }
    }
    Ok(sum.iter().map(|row| row.iter().map(|v| v.norm_squared()).collect()).collect())
}

/// w_mat[time][point] = Σ_j W_j ρ(ν_j) Σ_m |E_{m,ν_j}|², with
/// `coefficients[j][m]` the matter coefficient at node ν_j (its amplitude
/// √(ħσ/νπ) already included).
pub fn counting_rate_mat(
    state: &InitialState,
    quad: &NuQuadrature,
    coefficients: &[Vec<FieldCoefficient>],
    grid: &ObservationGrid,
) -> Result<Vec<Vec<f64>>> {
    if coefficients.len() != quad.len() {
        return Err(Error::Mismatch(format!("{} ν nodes but {} coefficient sets", quad.len(), coefficients.len())));
    }
    let mut out = zeros(grid);
    for ((nu, w), set) in quad.nodes.iter().zip(&quad.weights).zip(coefficients) {
        let weight = w * bose_occupation(&state.reservoir, *nu)?;
        for c in set {
            check_shape(c, grid)?;
            for (acc, e) in out.iter_mut().zip(&c.e) {
                for (a, v) in acc.iter_mut().zip(e) {
                    *a += weight * v.norm_squared();
                }
            }
        }
    }
    Ok(out)
}

/// Counting rates on an observation grid, `[time][point]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountingRateMap {
    pub times: Vec<f64>,
    pub points: Vec<Vec3>,
    pub w_rad: Vec<Vec<f64>>,
    pub w_mat: Vec<Vec<f64>>,
    pub w_total: Vec<Vec<f64>>,
}

impl CountingRateMap {
    pub fn write_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "t,x,y,z,w_rad,w_mat,w_total")?;
        for (k, t) in self.times.iter().enumerate() {
            for (j, p) in self.points.iter().enumerate() {
                writeln!(
                    w,
                    "{t:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                    p.x, p.y, p.z, self.w_rad[k][j], self.w_mat[k][j], self.w_total[k][j]
                )?;
            }
        }
        Ok(())
    }
}

/// Adds the two partial rates. Mixed terms vanish for the factorized state.
pub fn counting_rate_total(w_rad: Vec<Vec<f64>>, w_mat: Vec<Vec<f64>>, grid: &ObservationGrid) -> Result<CountingRateMap> {
    let shape = |w: &Vec<Vec<f64>>| w.len() == grid.times().len() && w.iter().all(|r| r.len() == grid.len());
    if !shape(&w_rad) || !shape(&w_mat) {
        return Err(Error::Mismatch("partial rates do not match the observation grid".into()));
    }
    let w_total: Vec<Vec<f64>> = w_rad.iter().zip(&w_mat).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect()).collect();
    if let Some(v) = w_total.iter().flatten().chain(w_rad.iter().flatten()).chain(w_mat.iter().flatten()).find(|v| !(**v >= 0.0)) {
        return Err(Error::Mismatch(format!("counting rate {v} is negative or not finite")));
    }
    Ok(CountingRateMap { times: grid.times().to_vec(), points: grid.points().to_vec(), w_rad, w_mat, w_total })
}

/// Everything the counting-rate stage solved, for reporting.
#[derive(Debug, Clone)]
pub struct CountingRates {
    pub map: CountingRateMap,
    pub quadrature: NuQuadrature,
    pub radiation: Vec<FieldCoefficient>,
    pub matter: Vec<Vec<FieldCoefficient>>,
    /// Largest relative residual over all sweeps.
    pub max_residual: f64,
}

/// Solves every coefficient the state needs (one sweep per photon mode, one
/// multi-drive sweep per ν node over the basis) and assembles the rates.
/// Each sweep shifts the grid off its own driving pole.
pub fn evaluate_counting_rates(
    problem: &Problem,
    plan: &SweepPlan,
    state: &InitialState,
    nu_order: usize,
    grid: &ObservationGrid,
    opts: &SweepOptions,
) -> Result<CountingRates> {
    let mut max_residual = 0.0f64;
    let mut radiation = Vec::with_capacity(state.photons.len());
    for p in &state.photons {
        let drive = DrivingSpec::Radiation(p.mode);
        let r = sweep_many(problem, &plan.avoiding(-p.mode.omega)?, &[drive], opts)?.remove(0);
        max_residual = max_residual.max(r.max_residual());
        radiation.push(field_coefficient(problem, &r, grid, opts.exec)?);
    }

    let quadrature = nu_quadrature(problem.model(), &state.reservoir, nu_order)?;
    let mut matter = Vec::with_capacity(quadrature.len());
    for &nu in &quadrature.nodes {
        let drives: Vec<DrivingSpec> = (0..problem.basis().len()).map(|m| DrivingSpec::Matter { m, nu }).collect();
        let results = sweep_many(problem, &plan.avoiding(-nu)?, &drives, opts)?;
        let mut set = Vec::with_capacity(drives.len());
        for r in &results {
            max_residual = max_residual.max(r.max_residual());
            set.push(field_coefficient(problem, r, grid, opts.exec)?);
        }
        matter.push(set);
    }

    let w_rad = counting_rate_rad(state, &radiation, grid)?;
    let w_mat = counting_rate_mat(state, &quadrature, &matter, grid)?;
    let map = counting_rate_total(w_rad, w_mat, grid)?;
    Ok(CountingRates { map, quadrature, radiation, matter, max_residual })
}
