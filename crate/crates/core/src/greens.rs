//! Vacuum Green functions in the Laplace and time domains.
//!
//! All functions take the speed of light explicitly so they work in any unit
//! system. Off-origin evaluation only: the distributional δ(r) parts are
//! owned by the assembly self-term.

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::{CVec3, Error, Result, Vec3};

const INV_4PI: f64 = 0.25 / std::f64::consts::PI;

/// Complex 3×3 dyadic.
pub type Dyadic = Matrix3<Complex64>;

/// Laplace variable `s = iω + ε` with `Re s ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexFrequency(Complex64);

impl ComplexFrequency {
    pub fn new(s: Complex64) -> Result<Self> {
        if !(s.re >= 0.0) || !s.im.is_finite() || !s.re.is_finite() {
            return Err(Error::param("s", format!("need finite s with Re s >= 0, got {s}")));
        }
        Ok(ComplexFrequency(s))
    }

    /// `s = iω + ε`.
    pub fn from_omega(omega: f64, eps: f64) -> Result<Self> {
        Self::new(Complex64::new(eps, omega))
    }

    pub fn s(self) -> Complex64 {
        self.0
    }
    pub fn omega(self) -> f64 {
        self.0.im
    }
    pub fn eps(self) -> f64 {
        self.0.re
    }
}

impl From<ComplexFrequency> for Complex64 {
    fn from(f: ComplexFrequency) -> Self {
        f.0
    }
}

fn check_r(r: &Vec3) -> Result<f64> {
    let d = r.norm();
    if !(d > 0.0) {
        return Err(Error::Singular("Green function evaluated at r = 0".into()));
    }
    Ok(d)
}

fn outer(u: &Vec3) -> Matrix3<f64> {
    u * u.transpose()
}

fn promote(m: Matrix3<f64>) -> Dyadic {
    m.map(Complex64::from)
}

/// `e^{-x}(1 + x) − 1`, accurate for small |x|.
pub fn retarded_self_factor(x: Complex64) -> Complex64 {
    if x.norm() < 0.5 {
        x * x * transverse_near_factor(x)
    } else {
        (-x).exp() * (1.0 + x) - 1.0
    }
}

/// `[e^{-x}(1 + x) − 1]/x²`, finite at x = 0 (value −½).
pub fn transverse_near_factor(x: Complex64) -> Complex64 {
    if x.norm() >= 0.5 {
        return ((-x).exp() * (1.0 + x) - 1.0) / (x * x);
    }
    // Σ_{n≥2} (1 − n)(−x)^{n−2}/n!
    let mut power = Complex64::new(1.0, 0.0);
    let mut factorial = 2.0;
    let mut sum = Complex64::new(-0.5, 0.0);
    for n in 3..=30u32 {
        power *= -x;
        factorial *= n as f64;
        sum += power * ((1.0 - n as f64) / factorial);
    }
    sum
}

/// Scalar kernel e^{-s|r|/c}/(4π|r|).
pub fn scalar_g(r: &Vec3, s: ComplexFrequency, c0: f64) -> Result<Complex64> {
    let d = check_r(r)?;
    Ok((-s.s() * d / c0).exp() * (INV_4PI / d))
}

/// ∇G = −(s/c + 1/|r|) G r̂.
pub fn grad_scalar_g(r: &Vec3, s: ComplexFrequency, c0: f64) -> Result<CVec3> {
    let d = check_r(r)?;
    let g = scalar_g(r, s, c0)?;
    let f = -(s.s() / c0 + 1.0 / d) * g;
    Ok((r / d).map(|x| f * x))
}

/// Hessian ∇∇G = G[(κ² + 3κ/R + 3/R²) r̂r̂ − (κ/R + 1/R²) I], κ = s/c.
pub fn hessian_scalar_g(r: &Vec3, s: ComplexFrequency, c0: f64) -> Result<Dyadic> {
    let d = check_r(r)?;
    let g = scalar_g(r, s, c0)?;
    let k = s.s() / c0;
    let rr = promote(outer(&(r / d)));
    let a = g * (k * k + 3.0 * k / d + 3.0 / (d * d));
    let b = g * (k / d + 1.0 / (d * d));
    Ok(rr * a - Dyadic::identity() * b)
}

/// Full dyadic G I − (c²/s²)∇∇G off the origin.
pub fn dyadic_g(r: &Vec3, s: ComplexFrequency, c0: f64) -> Result<Dyadic> {
    let d = check_r(r)?;
    if s.s().norm() == 0.0 {
        return Err(Error::Singular("dyadic Green function has a pole at s = 0".into()));
    }
    let g = scalar_g(r, s, c0)?;
    let u = c0 / (s.s() * d);
    let rr = promote(outer(&(r / d)));
    let id = Dyadic::identity();
    Ok(((id - rr) + (id - rr.scale(3.0)) * (u * (1.0 + u))) * g)
}

/// Longitudinal part (c²/s²)(I − 3r̂r̂)/(4π|r|³) off the origin.
pub fn dyadic_g_long(r: &Vec3, s: ComplexFrequency, c0: f64) -> Result<Dyadic> {
    let d = check_r(r)?;
    if s.s().norm() == 0.0 {
        return Err(Error::Singular("longitudinal dyadic has a pole at s = 0".into()));
    }
    let pre = c0 * c0 / (s.s() * s.s()) * (INV_4PI / (d * d * d));
    Ok(promote(Matrix3::identity() - outer(&(r / d)) * 3.0) * pre)
}

/// Transverse part, evaluated in closed form so it stays finite as s → 0.
pub fn dyadic_g_perp(r: &Vec3, s: ComplexFrequency, c0: f64) -> Result<Dyadic> {
    let d = check_r(r)?;
    let x = s.s() * d / c0;
    let rr = outer(&(r / d));
    let id = Matrix3::identity();
    let far = (-x).exp() * (INV_4PI / d);
    let near = transverse_near_factor(x) * (INV_4PI / d);
    Ok(promote(id - rr) * far + promote(id - rr * 3.0) * near)
}

/// Time-domain dyadic kernel split into its retarded pieces.
///
/// `g(r,t) = impulse·δ(t − R/c) + ramp·u(t − R/c)[1 + (c/R)(t − R/c)]`, whose
/// Laplace transform is [`dyadic_g`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetardedDyadic {
    pub delay: f64,
    /// Transverse far-zone weight (I − r̂r̂)/(4πR).
    pub impulse: Matrix3<f64>,
    /// Near-zone weight (I − 3r̂r̂)c/(4πR²).
    pub ramp: Matrix3<f64>,
    c_over_r: f64,
}

impl RetardedDyadic {
    /// Value of the regular (ramp) part at time t; zero before the light cone.
    pub fn ramp_at(&self, t: f64) -> Matrix3<f64> {
        if t < self.delay {
            return Matrix3::zeros();
        }
        self.ramp * (1.0 + self.c_over_r * (t - self.delay))
    }

    /// Weight of the impulse if it falls inside `[t0, t1)`.
    pub fn impulse_in(&self, t0: f64, t1: f64) -> Matrix3<f64> {
        if self.delay >= t0 && self.delay < t1 {
            self.impulse
        } else {
            Matrix3::zeros()
        }
    }
}

pub fn g_time(r: &Vec3, c0: f64) -> Result<RetardedDyadic> {
    let d = check_r(r)?;
    let rr = outer(&(r / d));
    let id = Matrix3::identity();
    Ok(RetardedDyadic {
        delay: d / c0,
        impulse: (id - rr) * (INV_4PI / d),
        ramp: (id - rr * 3.0) * (c0 * INV_4PI / (d * d)),
        c_over_r: c0 / d,
    })
}
