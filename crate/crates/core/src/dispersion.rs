//! Single-resonance Lorentz dielectric and its kernels.
//!
//! Sign convention: Laplace variable `s = iω + ε` with temporal phase
//! `e^{+iωt}`, so absorption shows up as `Im χ(ω) ≤ 0` for `ω > 0` and the
//! Lorentz denominator carries `+iγω`.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use crate::quadrature::{integrate, integrate_to_infinity};
use crate::units::Units;
use crate::{Error, Result};

/// Causal susceptibility χ(ω) = ω_p² / (ω₀² − ω² + iγω).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzModel {
    pub omega_p: f64,
    pub omega_0: f64,
    pub gamma: f64,
    pub units: Units,
}

impl LorentzModel {
    pub fn new(omega_p: f64, omega_0: f64, gamma: f64, units: Units) -> Result<Self> {
        let finite_pos = |x: f64| x.is_finite() && x > 0.0;
        if !finite_pos(omega_p) {
            return Err(Error::param("omega_p", "must be positive"));
        }
        if !finite_pos(omega_0) {
            return Err(Error::param("omega_0", "must be positive (Drude limit not supported)"));
        }
        if !finite_pos(gamma) {
            return Err(Error::param("gamma", "strictly lossy required (gamma > 0)"));
        }
        if gamma >= 2.0 * omega_0 {
            return Err(Error::param("gamma", "must be below 2*omega_0 (underdamped)"));
        }
        Ok(LorentzModel { omega_p, omega_0, gamma, units })
    }

    /// Damped oscillation frequency √(ω₀² − γ²/4).
    pub fn damped_frequency(&self) -> f64 {
        (self.omega_0 * self.omega_0 - 0.25 * self.gamma * self.gamma).sqrt()
    }

    /// Static susceptibility ω_p²/ω₀².
    pub fn static_chi(&self) -> f64 {
        (self.omega_p / self.omega_0).powi(2)
    }

    pub fn chi(&self, omega: f64) -> Complex64 {
        let den = Complex64::new(self.omega_0 * self.omega_0 - omega * omega, self.gamma * omega);
        self.omega_p * self.omega_p / den
    }

    /// Denominator s² + γs + ω₀² of the Laplace-domain susceptibility.
    fn denominator(&self, s: Complex64) -> Complex64 {
        s * s + self.gamma * s + self.omega_0 * self.omega_0
    }

    pub fn chi_tilde(&self, s: Complex64) -> Result<Complex64> {
        let den = self.denominator(s);
        if den.norm() == 0.0 {
            return Err(Error::Singular(format!("s = {s} is a pole of the susceptibility")));
        }
        Ok(self.omega_p * self.omega_p / den)
    }

    /// 1/χ̃(s), which is entire for this model.
    pub fn inverse_chi_tilde(&self, s: Complex64) -> Complex64 {
        self.denominator(s) / (self.omega_p * self.omega_p)
    }

    /// Conductivity-like loss density σ(ν) = −ε₀ν Im χ(ν).
    pub fn sigma(&self, nu: f64) -> f64 {
        (-self.units.eps0 * nu * self.chi(nu).im).max(0.0)
    }

    /// Coupling strength α_ν = √(2σ(ν)/π).
    pub fn alpha(&self, nu: f64) -> f64 {
        (2.0 * self.sigma(nu) / std::f64::consts::PI).sqrt()
    }

    /// Amplitude √(ħσ(ν)/(νπ)) of the matter initial condition.
    pub fn matter_amplitude(&self, nu: f64) -> f64 {
        if nu <= 0.0 {
            return 0.0;
        }
        (self.units.hbar * self.sigma(nu) / (nu * std::f64::consts::PI)).sqrt()
    }

    /// Impulse response h_χ(t) (zero for t < 0).
    pub fn h_chi(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let wd = self.damped_frequency();
        self.omega_p * self.omega_p / wd * (-0.5 * self.gamma * t).exp() * (wd * t).sin()
    }

    /// First time derivative of h_χ for t > 0.
    pub fn h_chi_rate(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let wd = self.damped_frequency();
        let g2 = 0.5 * self.gamma;
        self.omega_p * self.omega_p / wd * (-g2 * t).exp() * (wd * (wd * t).cos() - g2 * (wd * t).sin())
    }

    /// Second time derivative of h_χ for t > 0, from the oscillator equation.
    pub fn h_chi_accel(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        -self.gamma * self.h_chi_rate(t) - self.omega_0 * self.omega_0 * self.h_chi(t)
    }

    /// Re χ(ω) rebuilt from σ through the Kramers–Kronig principal value
    /// `(2/(πε₀)) PV∫₀^∞ σ(ν)/(ν² − ω²) dν`.
    ///
    /// Uses `PV∫₀^∞ dν/(ν² − ω²) = 0` to subtract the singular part, leaving a
    /// regular integrand.
    pub fn kramers_kronig_real(&self, omega: f64) -> Result<f64> {
        let scale = 2.0 / (std::f64::consts::PI * self.units.eps0);
        let f = |nu: f64| scale * self.sigma(nu);
        let w = omega.abs();
        let tol = 1e-10 * self.static_chi();
        if w == 0.0 {
            return integrate_to_infinity(|nu| if nu == 0.0 { 0.0 } else { f(nu) / (nu * nu) }, 0.0, tol, 1e-10);
        }
        let fw = f(w);
        let g = |nu: f64| {
            let d = nu * nu - w * w;
            if d == 0.0 {
                0.0
            } else {
                (f(nu) - fw) / d
            }
        };
        let mut total = 0.0;
        let mut a = 0.0;
        // Break points around the resonance and the evaluation frequency.
        let mut breaks = vec![w, 2.0 * w, self.omega_0, self.omega_0 + 4.0 * self.gamma];
        breaks.retain(|b| *b > 0.0);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        for b in breaks {
            total += integrate(g, a, b, tol, 1e-10)?;
            a = b;
        }
        total += integrate_to_infinity(g, a, tol, 1e-10)?;
        Ok(total)
    }
}

/// Thermal reservoir of the matter oscillators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalReservoir {
    pub t0: f64,
    pub units: Units,
}

impl ThermalReservoir {
    pub fn new(t0: f64, units: Units) -> Result<Self> {
        if !(t0.is_finite() && t0 >= 0.0) {
            return Err(Error::param("t0", "temperature must be non-negative"));
        }
        Ok(ThermalReservoir { t0, units })
    }
}

/// Bose–Einstein occupation 1/(e^{ħν/k_B T₀} − 1).
pub fn bose_occupation(res: &ThermalReservoir, nu: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::param("nu", "frequency must be positive"));
    }
    if res.t0 == 0.0 {
        return Ok(0.0);
    }
    let x = res.units.hbar * nu / (res.units.kb * res.t0);
    Ok(1.0 / x.exp_m1())
}

/// Applies h_η, realized as (1/ω_p²)(f̈ + γḟ + ω₀²f), to uniformly sampled
/// data starting at t = 0.
///
/// Second-order central differences in the interior, second-order one-sided
/// stencils at both ends.
pub fn h_eta_convolve<T>(model: &LorentzModel, samples: &[T], dt: f64) -> Result<Vec<T>>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let n = samples.len();
    if n < 4 {
        return Err(Error::param("samples", "need at least 4 samples"));
    }
    if !(dt > 0.0) {
        return Err(Error::param("dt", "must be positive"));
    }
    let f = samples;
    let (i1, i2) = (1.0 / dt, 1.0 / (dt * dt));
    let w02 = model.omega_0 * model.omega_0;
    let scale = 1.0 / (model.omega_p * model.omega_p);
    let combine = |v: T, d1: T, d2: T| (d2 * i2 + d1 * (model.gamma * i1) + v * w02) * scale;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let (d1, d2) = if k == 0 {
            (
                f[0] * -1.5 + f[1] * 2.0 - f[2] * 0.5,
                f[0] * 2.0 - f[1] * 5.0 + f[2] * 4.0 - f[3],
            )
        } else if k == n - 1 {
            (
                f[k] * 1.5 - f[k - 1] * 2.0 + f[k - 2] * 0.5,
                f[k] * 2.0 - f[k - 1] * 5.0 + f[k - 2] * 4.0 - f[k - 3],
            )
        } else {
            ((f[k + 1] - f[k - 1]) * 0.5, f[k + 1] - f[k] * 2.0 + f[k - 1])
        };
        out.push(combine(f[k], d1, d2));
    }
    Ok(out)
}

/// Causal convolution `∫₀^t h_χ(t − τ) f(τ) dτ` by the trapezoidal rule.
pub fn h_chi_convolve<T>(model: &LorentzModel, samples: &[T], dt: f64) -> Vec<T>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
{
    let kernel: Vec<f64> = (0..samples.len()).map(|k| model.h_chi(k as f64 * dt)).collect();
    (0..samples.len())
        .map(|n| {
            let mut acc = samples[0] * 0.0;
            for j in 0..=n {
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                acc = acc + samples[j] * (w * dt * kernel[n - j]);
            }
            acc
        })
        .collect()
}
