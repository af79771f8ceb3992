//! Driving fields and free evolutions of the three driving kinds.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Problem;
use crate::dispersion::LorentzModel;
use crate::geometry::PlaneWaveMode;
use crate::greens::ComplexFrequency;
use crate::{complexify, rdot, CVec3, CVectorField, Error, Result};

/// Time profile of a classical driving field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Waveform {
    /// Unit step switched on at t = 0.
    Step,
    /// `exp(−(t − t0)²/(2τ²))·cos(Ω(t − t0))`.
    Gaussian { t0: f64, width: f64, carrier: f64 },
}

impl Waveform {
    pub fn validate(&self) -> Result<()> {
        if let Waveform::Gaussian { t0, width, carrier } = *self {
            if !(width > 0.0 && width.is_finite()) {
                return Err(Error::param("width", "pulse width must be positive"));
            }
            if !(carrier >= 0.0 && carrier.is_finite()) {
                return Err(Error::param("carrier", "carrier frequency must be non-negative"));
            }
            // The transform below integrates over the whole line; the part
            // cut off at t < 0 is below exp(−t0²/(2τ²)) ≤ 4e-6.
            if !(t0 >= 5.0 * width) {
                return Err(Error::param("t0", "pulse centre must satisfy t0 >= 5·width"));
            }
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match *self {
            Waveform::Step => 1.0,
            Waveform::Gaussian { t0, width, carrier } => {
                let x = t - t0;
                (-0.5 * x * x / (width * width)).exp() * (carrier * x).cos()
            }
        }
    }

    /// Laplace transform. For the pulse, the negligible tail before t = 0
    /// is included so that the transform is closed form.
    pub fn laplace(&self, s: Complex64) -> Complex64 {
        match *self {
            Waveform::Step => 1.0 / s,
            Waveform::Gaussian { t0, width, carrier } => {
                let half_var = 0.5 * width * width;
                let branch = |a: Complex64| (a * a * half_var).exp();
                let i_carrier = Complex64::new(0.0, carrier);
                let norm = 0.5 * width * (2.0 * std::f64::consts::PI).sqrt();
                (-s * t0).exp() * norm * (branch(s - i_carrier) + branch(s + i_carrier))
            }
        }
    }
}

/// Which expansion coefficient is being solved for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DrivingSpec {
    /// Radiation mode μ; initial condition p(0) = 0.
    Radiation(PlaneWaveMode),
    /// Matter oscillator (m, ν); initial condition p(0) = U_m·√(ħσ(ν)/(νπ)).
    Matter { m: usize, nu: f64 },
    /// Classical driving `amplitude·U_m(r)·waveform(t)` of a medium at rest.
    Classical { m: usize, amplitude: f64, waveform: Waveform },
}

impl DrivingSpec {
    pub fn validate(&self, problem: &Problem) -> Result<()> {
        match *self {
            DrivingSpec::Radiation(mode) => {
                if !(mode.omega > 0.0) {
                    return Err(Error::param("k", "mode frequency must be positive"));
                }
            }
            DrivingSpec::Matter { m, nu } => {
                problem.basis().field(m)?;
                if !(nu > 0.0 && nu.is_finite()) {
                    return Err(Error::param("nu", "matter frequency must be positive"));
                }
            }
            DrivingSpec::Classical { m, amplitude, waveform } => {
                problem.basis().field(m)?;
                if !amplitude.is_finite() {
                    return Err(Error::param("amplitude", "must be finite"));
                }
                waveform.validate()?;
            }
        }
        Ok(())
    }

    /// Whether the driving is real, so that p(t) is real and the spectrum
    /// Hermitian.
    pub fn is_real(&self) -> bool {
        matches!(self, DrivingSpec::Classical { .. })
    }

    /// Angular frequency of the driving's pole at s = −iω on the real axis.
    pub fn pole(&self) -> Option<f64> {
        match *self {
            DrivingSpec::Radiation(mode) => Some(-mode.omega),
            DrivingSpec::Matter { nu, .. } => Some(-nu),
            DrivingSpec::Classical { .. } => None,
        }
    }

    /// Short label used in file names and reports.
    pub fn label(&self) -> String {
        match *self {
            DrivingSpec::Radiation(mode) => {
                format!("rad_k{:.6e}_{:.6e}_{:.6e}_s{}", mode.k.x, mode.k.y, mode.k.z, mode.polarization)
            }
            DrivingSpec::Matter { m, nu } => format!("mat_m{m}_nu{nu:.6e}"),
            DrivingSpec::Classical { m, .. } => format!("cls_m{m}"),
        }
    }

    pub fn free_polarization(&self, problem: &Problem) -> Result<FreePolarization> {
        self.validate(problem)?;
        let model = *problem.model();
        let centroids = problem.mesh().centroids();
        Ok(match *self {
            DrivingSpec::Radiation(mode) => {
                let c = Complex64::new(0.0, model.units.eps0 * mode.amplitude / mode.omega);
                let amplitude = centroids.iter().map(|r| mode.w(r) * c).collect();
                FreePolarization { amplitude, kind: FreeKind::Impulse(model) }
            }
            DrivingSpec::Matter { m, nu } => {
                let a = model.matter_amplitude(nu);
                let amplitude = problem.basis().field(m)?.iter().map(|u| complexify(&(u * a))).collect();
                FreePolarization { amplitude, kind: FreeKind::Oscillating(nu) }
            }
            DrivingSpec::Classical { .. } => {
                FreePolarization { amplitude: vec![CVec3::zeros(); centroids.len()], kind: FreeKind::None }
            }
        })
    }

    /// Prescribed initial polarization p(0).
    pub fn initial_polarization(&self, problem: &Problem) -> Result<CVectorField> {
        let free = self.free_polarization(problem)?;
        Ok((0..free.len()).map(|v| free.value(v, 0.0)).collect())
    }

    /// Laplace-domain driving D̂(s) at the collocation points.
    pub fn rhs(&self, problem: &Problem, s: ComplexFrequency) -> Result<CVectorField> {
        match *self {
            DrivingSpec::Radiation(mode) => driving_rad_freq(&mode, s, problem),
            DrivingSpec::Matter { m, nu } => driving_mat_freq(m, nu, s, problem),
            DrivingSpec::Classical { m, amplitude, waveform } => driving_classical_freq(m, amplitude, &waveform, s, problem),
        }
    }

    /// Time-domain forcing F(t) of the response equation at the collocation
    /// points (light-cone shells excluded; they follow from ṗ_f(0⁺)).
    pub fn forcing(&self, problem: &Problem, t: f64) -> Result<CVectorField> {
        let n = problem.mesh().len();
        if t < 0.0 {
            return Ok(vec![CVec3::zeros(); n]);
        }
        Ok(match *self {
            DrivingSpec::Radiation(mode) => {
                let a = problem.model().units.eps0;
                problem.mesh().centroids().iter().map(|r| mode.e_free(r, t) * Complex64::from(a)).collect()
            }
            DrivingSpec::Matter { m, nu } => {
                let a = problem.model().matter_amplitude(nu);
                let u = problem.basis().field(m)?;
                problem.rules().iter().map(|r| free_surface_field(r, u, t, problem.c0()) * Complex64::from(a)).collect()
            }
            DrivingSpec::Classical { m, amplitude, waveform } => {
                let w = amplitude * waveform.value(t);
                problem.basis().field(m)?.iter().map(|u| complexify(&(u * w))).collect()
            }
        })
    }
}

/// ε₀N(t) for a unit basis field on one target's facet nodes:
/// `Σ_f Σ_q coulomb_q·[u(t) − u(t − R_q/c)]·(n_f·U)`.
pub(crate) fn free_surface_field(rules: &crate::assembly::TargetRules, u: &[crate::Vec3], t: f64, c0: f64) -> CVec3 {
    let mut out = crate::Vec3::zeros();
    if t < 0.0 {
        return CVec3::zeros();
    }
    for f in &rules.facets {
        let sigma = f.normal.dot(&u[f.owner]);
        if sigma == 0.0 {
            continue;
        }
        for q in &f.nodes {
            if c0 * t < q.distance {
                out += q.coulomb() * sigma;
            }
        }
    }
    complexify(&out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum FreeKind {
    None,
    /// p_f = a·e^{−iνt}.
    Oscillating(f64),
    /// p_f = a·h_χ(t).
    Impulse(LorentzModel),
}

/// Free evolution p_f(t) of the driving, per voxel, null for t < 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FreePolarization {
    amplitude: CVectorField,
    kind: FreeKind,
}

impl FreePolarization {
    pub fn len(&self) -> usize {
        self.amplitude.len()
    }
    pub fn is_empty(&self) -> bool {
        self.amplitude.is_empty()
    }
    pub fn is_zero(&self) -> bool {
        self.kind == FreeKind::None
    }

    fn scalar(&self, t: f64, order: u8) -> Complex64 {
        if t < 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        match self.kind {
            FreeKind::None => Complex64::new(0.0, 0.0),
            FreeKind::Oscillating(nu) => {
                let e = Complex64::from_polar(1.0, -nu * t);
                match order {
                    0 => e,
                    1 => e * Complex64::new(0.0, -nu),
                    _ => e * (-nu * nu),
                }
            }
            FreeKind::Impulse(m) => Complex64::from(match order {
                0 => m.h_chi(t),
                1 => m.h_chi_rate(t),
                _ => m.h_chi_accel(t),
            }),
        }
    }

    pub fn value(&self, voxel: usize, t: f64) -> CVec3 {
        self.amplitude[voxel] * self.scalar(t, 0)
    }
    pub fn rate(&self, voxel: usize, t: f64) -> CVec3 {
        self.amplitude[voxel] * self.scalar(t, 1)
    }
    pub fn accel(&self, voxel: usize, t: f64) -> CVec3 {
        self.amplitude[voxel] * self.scalar(t, 2)
    }

    /// ṗ_f(0⁺) per voxel.
    pub fn initial_rate(&self) -> CVectorField {
        (0..self.len()).map(|v| self.rate(v, 0.0)).collect()
    }

    /// Laplace transform p̂_f(s) per voxel.
    pub fn transform(&self, s: Complex64) -> CVectorField {
        let f = match self.kind {
            FreeKind::None => Complex64::new(0.0, 0.0),
            FreeKind::Oscillating(nu) => 1.0 / (s + Complex64::new(0.0, nu)),
            FreeKind::Impulse(m) => 1.0 / (m.inverse_chi_tilde(s)),
        };
        self.amplitude.iter().map(|a| a * f).collect()
    }
}

fn pole_guard(s: ComplexFrequency, omega: f64) -> Result<Complex64> {
    let d = s.s() + Complex64::new(0.0, omega);
    if d.norm() == 0.0 {
        return Err(Error::PoleCollision { pole: -omega, distance: 0.0, suggested_shift: f64::NAN });
    }
    Ok(d)
}

/// D̂_μ(s) = ε₀𝓔_μ(1/(s + iω_μ) + i/ω_μ)·w_μ at the voxel centroids.
pub fn driving_rad_freq(mode: &PlaneWaveMode, s: ComplexFrequency, problem: &Problem) -> Result<CVectorField> {
    if !(mode.omega > 0.0) {
        return Err(Error::param("k", "mode frequency must be positive"));
    }
    let d = pole_guard(s, mode.omega)?;
    let factor = problem.model().units.eps0 * mode.amplitude * (1.0 / d + Complex64::new(0.0, 1.0 / mode.omega));
    Ok(problem.mesh().centroids().iter().map(|r| mode.w(r) * factor).collect())
}

/// D̂_{m,ν}(s) = √(ħσ/(νπ))·[U_m/(χ̃(s)(s + iν)) − V(s)U_m/s + (S(0) − S(s))(n·U_m)/s],
/// with V and S the volume and surface parts of the discretized operator.
pub fn driving_mat_freq(m: usize, nu: f64, s: ComplexFrequency, problem: &Problem) -> Result<CVectorField> {
    if !(nu > 0.0) {
        return Err(Error::param("nu", "matter frequency must be positive"));
    }
    let sv = s.s();
    if sv.norm() == 0.0 {
        return Err(Error::Singular("matter driving evaluated at s = 0".into()));
    }
    let d = pole_guard(s, nu)?;
    let model = problem.model();
    let a = model.matter_amplitude(nu);
    let u: Vec<CVec3> = problem.basis().field(m)?.iter().map(complexify).collect();
    let resonant = model.inverse_chi_tilde(sv) / d;
    let c0 = problem.c0();
    Ok(problem
        .rules()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut surface = CVec3::zeros();
            for f in &r.facets {
                surface += f.dynamic(sv, c0) * rdot(&f.normal, &u[f.owner]);
            }
            let m_term = -(r.apply_volume(&u, sv, c0) + surface) / sv;
            (u[i] * resonant + m_term).scale(a)
        })
        .collect())
}

/// D̂(s) = amplitude·U_m·W(s) for a classical waveform W.
pub fn driving_classical_freq(
    m: usize,
    amplitude: f64,
    waveform: &Waveform,
    s: ComplexFrequency,
    problem: &Problem,
) -> Result<CVectorField> {
    let w = waveform.laplace(s.s()) * amplitude;
    Ok(problem.basis().field(m)?.iter().map(|u| complexify(u) * w).collect())
}
