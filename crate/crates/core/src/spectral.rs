//! Frequency grids and causal inverse transforms.
//!
//! A history q(t) is recovered from samples of its Laplace transform on the
//! line s = iω + ε by
//! `q(t) ≈ e^{εt} (Δω/2π) Σ_k W(ω_k) Q̂(iω_k + ε) e^{iω_k t}`,
//! evaluated for all t at once with an inverse FFT. The damping ε pushes the
//! periodic images of a causal signal down by `e^{-εT}`, T = 2π/Δω.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::greens::ComplexFrequency;
use crate::{CVec3, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    /// Number of frequency samples; a power of two.
    pub n_omega: usize,
    /// Grid spans [−ω_max, ω_max).
    pub omega_max: f64,
    /// Real part ε of every sample point.
    pub eps_reg: f64,
    /// Fraction of the band at each end covered by the raised-cosine taper.
    #[serde(default = "default_taper")]
    pub taper_fraction: f64,
    /// Constant offset added to every grid frequency.
    #[serde(default)]
    pub omega_shift: f64,
    /// Zero-padding factor for the time grid (power of two).
    #[serde(default = "default_oversample")]
    pub oversample: usize,
}

fn default_taper() -> f64 {
    0.1
}
fn default_oversample() -> usize {
    1
}

impl SweepPlan {
    pub fn new(n_omega: usize, omega_max: f64, eps_reg: f64) -> Result<Self> {
        let plan = SweepPlan {
            n_omega,
            omega_max,
            eps_reg,
            taper_fraction: default_taper(),
            omega_shift: 0.0,
            oversample: default_oversample(),
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn with_oversample(mut self, factor: usize) -> Result<Self> {
        self.oversample = factor;
        self.validate()?;
        Ok(self)
    }

    pub fn with_shift(mut self, shift: f64) -> Result<Self> {
        self.omega_shift = shift;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_omega < 4 || !self.n_omega.is_power_of_two() {
            return Err(Error::param("n_omega", "must be a power of two >= 4"));
        }
        if !(self.omega_max > 0.0 && self.omega_max.is_finite()) {
            return Err(Error::param("omega_max", "must be positive"));
        }
        if !(self.eps_reg > 0.0 && self.eps_reg.is_finite()) {
            return Err(Error::param("eps_reg", "must be positive"));
        }
        if !(0.0..=0.5).contains(&self.taper_fraction) {
            return Err(Error::param("taper_fraction", "must lie in [0, 0.5]"));
        }
        if !(self.omega_shift.abs() < self.delta_omega()) {
            return Err(Error::param("omega_shift", "must be smaller than the grid spacing"));
        }
        if self.oversample == 0 || !self.oversample.is_power_of_two() {
            return Err(Error::param("oversample", "must be a power of two"));
        }
        Ok(())
    }

    pub fn delta_omega(&self) -> f64 {
        2.0 * self.omega_max / self.n_omega as f64
    }

    /// Repetition period 2π/Δω of the reconstruction.
    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.delta_omega()
    }

    pub fn fft_len(&self) -> usize {
        self.n_omega * self.oversample
    }

    /// Time step of the reconstructed history.
    pub fn dt(&self) -> f64 {
        self.period() / self.fft_len() as f64
    }

    /// Ascending grid ω_k = (k − n/2)Δω + shift.
    pub fn omegas(&self) -> Vec<f64> {
        let dw = self.delta_omega();
        let half = (self.n_omega / 2) as f64;
        (0..self.n_omega).map(|k| (k as f64 - half) * dw + self.omega_shift).collect()
    }

    pub fn frequency(&self, k: usize) -> ComplexFrequency {
        let w = self.omegas()[k];
        ComplexFrequency::from_omega(w, self.eps_reg).expect("eps_reg > 0")
    }

    /// Raised-cosine weight: 1 in the passband, falling to 0 at |ω| = ω_max.
    pub fn taper(&self, omega: f64) -> f64 {
        let edge = (1.0 - self.taper_fraction) * self.omega_max;
        let a = omega.abs();
        if a <= edge || self.taper_fraction == 0.0 {
            1.0
        } else if a >= self.omega_max {
            0.0
        } else {
            0.5 * (1.0 + (std::f64::consts::PI * (a - edge) / (self.omega_max - edge)).cos())
        }
    }

    /// Closest approach of the grid to a real-axis pole at `omega_pole`.
    pub fn pole_distance(&self, omega_pole: f64) -> f64 {
        self.omegas().iter().map(|w| (w - omega_pole).abs()).fold(f64::INFINITY, f64::min)
    }

    /// Rejects grids that pass within ε/10 of a pole on the real ω axis and
    /// suggests the shift that puts the pole midway between two samples.
    pub fn check_pole(&self, omega_pole: f64) -> Result<()> {
        let d = self.pole_distance(omega_pole);
        if d < self.eps_reg / 10.0 {
            return Err(Error::PoleCollision {
                pole: omega_pole,
                distance: d,
                suggested_shift: self.centred_shift(omega_pole),
            });
        }
        Ok(())
    }

    /// Shift in [0, Δω) that places `omega_pole` midway between samples.
    pub fn centred_shift(&self, omega_pole: f64) -> f64 {
        let dw = self.delta_omega();
        (omega_pole - 0.5 * dw).rem_euclid(dw)
    }

    /// This plan if it clears `omega_pole`, otherwise the same plan with the
    /// centring shift.
    pub fn avoiding(&self, omega_pole: f64) -> Result<SweepPlan> {
        match self.check_pole(omega_pole) {
            Ok(()) => Ok(*self),
            Err(Error::PoleCollision { suggested_shift, .. }) => self.with_shift(suggested_shift),
            Err(e) => Err(e),
        }
    }

    /// Rejects grids coarser than a quarter of the narrowest spectral
    /// feature min(γ, ε).
    pub fn check_resolution(&self, gamma: f64) -> Result<()> {
        let need = 0.25 * gamma.min(self.eps_reg);
        if self.delta_omega() > need * (1.0 + 1e-12) {
            return Err(Error::param(
                "n_omega",
                format!("grid spacing {:e} exceeds min(gamma, eps_reg)/4 = {:e}", self.delta_omega(), need),
            ));
        }
        Ok(())
    }

    /// Whether the grid is mirror-symmetric, so that real signals can be
    /// solved on ω ≥ 0 only.
    pub fn is_symmetric(&self) -> bool {
        self.omega_shift == 0.0
    }

    /// Grid index of −ω_k on a symmetric grid (none for k = 0).
    pub fn mirror(&self, k: usize) -> Option<usize> {
        (k > 0).then(|| self.n_omega - k)
    }
}

/// Time samples of a reconstructed history.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub dt: f64,
    /// `positive[voxel][n]` at t = n·dt, 0 ≤ t < T/2.
    pub positive: Vec<Vec<CVec3>>,
    /// `negative[voxel][n]` at t = −(n + 1)·dt.
    pub negative: Vec<Vec<CVec3>>,
}

/// Inverse transform of per-frequency fields `spectra[k][voxel]`.
pub fn reconstruct(plan: &SweepPlan, spectra: &[Vec<CVec3>]) -> Result<Reconstruction> {
    if spectra.len() != plan.n_omega {
        return Err(Error::Mismatch(format!("{} spectra for {} frequencies", spectra.len(), plan.n_omega)));
    }
    let voxels = spectra.first().map_or(0, Vec::len);
    if spectra.iter().any(|s| s.len() != voxels) {
        return Err(Error::Mismatch("ragged spectra".into()));
    }
    let len = plan.fft_len();
    let fft = FftPlanner::new().plan_fft_inverse(len);
    let omegas = plan.omegas();
    let weights: Vec<f64> = omegas.iter().map(|w| plan.taper(*w)).collect();
    let half = (plan.n_omega / 2) as isize;
    let dt = plan.dt();
    let norm = plan.delta_omega() / (2.0 * std::f64::consts::PI);
    let factor = |n: usize| {
        let t = if n < len / 2 { n as f64 * dt } else { (n as f64 - len as f64) * dt };
        Complex64::new(plan.eps_reg * t, plan.omega_shift * t).exp() * norm
    };
    let factors: Vec<Complex64> = (0..len).map(factor).collect();

    let mut positive = vec![vec![CVec3::zeros(); len / 2]; voxels];
    let mut negative = vec![vec![CVec3::zeros(); len / 2]; voxels];
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for v in 0..voxels {
        for c in 0..3 {
            buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            for (k, spec) in spectra.iter().enumerate() {
                let j = (k as isize - half).rem_euclid(len as isize) as usize;
                buf[j] = spec[v][c] * weights[k];
            }
            fft.process(&mut buf);
            for n in 0..len / 2 {
                positive[v][n][c] = buf[n] * factors[n];
                negative[v][n][c] = buf[len - 1 - n] * factors[len - 1 - n];
            }
        }
    }
    Ok(Reconstruction { dt, positive, negative })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::LorentzModel;
    use crate::units::Units;

    #[test]
    fn grid_geometry() {
        let p = SweepPlan::new(8, 4.0, 0.1).unwrap();
        assert_eq!(p.omegas(), vec![-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
        assert_eq!(p.mirror(3), Some(5));
        assert!((p.dt() - std::f64::consts::PI / 4.0).abs() < 1e-15);
        assert_eq!(p.taper(0.0), 1.0);
        assert_eq!(p.taper(4.0), 0.0);
        assert!(SweepPlan::new(12, 4.0, 0.1).is_err());
        assert!(SweepPlan::new(8, 4.0, 0.0).is_err());
    }

    #[test]
    fn pole_checks() {
        let p = SweepPlan::new(8, 4.0, 0.1).unwrap();
        let err = p.check_pole(-2.0).unwrap_err();
        assert!(matches!(err, Error::PoleCollision { suggested_shift, .. } if suggested_shift == 0.5));
        assert!(p.with_shift(0.5).unwrap().check_pole(-2.0).is_ok());
        let q = p.avoiding(-1.995).unwrap();
        assert!((q.pole_distance(-1.995) - 0.5 * q.delta_omega()).abs() < 1e-12);
        assert_eq!(p.with_shift(0.5).unwrap().avoiding(-2.0).unwrap(), p.with_shift(0.5).unwrap());
        assert!(p.check_resolution(0.2).is_err());
    }

    /// Inverse transform of χ̃ recovers h_χ, including h_χ(0) = 0.
    #[test]
    fn recovers_lorentz_impulse_response() {
        let m = LorentzModel::new(1.0, 1.0, 0.2, Units::NORMALIZED).unwrap();
        let plan = SweepPlan::new(1 << 15, 400.0, 0.05).unwrap();
        let spectra: Vec<Vec<CVec3>> = (0..plan.n_omega)
            .map(|k| {
                let x = m.chi_tilde(plan.frequency(k).s()).unwrap();
                vec![CVec3::new(x, x * 0.0, x * 0.0)]
            })
            .collect();
        let r = reconstruct(&plan, &spectra).unwrap();
        let peak = (0..2000).map(|n| m.h_chi(n as f64 * r.dt).abs()).fold(0.0, f64::max);
        assert!(r.positive[0][0].x.norm() < 1e-3 * peak);
        for n in (50..2000).step_by(37) {
            let t = n as f64 * r.dt;
            assert!((r.positive[0][n].x.re - m.h_chi(t)).abs() < 1e-3 * peak, "t={t}");
        }
        let leak: f64 = r.negative[0].iter().map(|v| v.x.norm_sqr()).sum::<f64>().sqrt();
        let total: f64 = r.positive[0].iter().map(|v| v.x.norm_sqr()).sum::<f64>().sqrt();
        assert!(leak < 1e-2 * total);
    }
}
