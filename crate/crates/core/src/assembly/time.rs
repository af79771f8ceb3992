//! Time-domain evaluation of the integral operator on stored histories.

use super::rules::{TargetRules, INV_4PI};
use crate::par::Execution;
use crate::quadrature::gauss_legendre_on;
use crate::{rdot, CVec3, Error, Result};

/// Per-voxel samples p(t_k), t_k = k·dt, k ≥ 0.
///
/// Queries before t = 0 return zero. Derivatives are classical: a jump of
/// p at t = 0 does not produce an impulse. The impulse carried by a jump of
/// ṗ is accounted for separately through [`TimeHistory::with_initial_rate`].
#[derive(Debug, Clone, PartialEq)]
pub struct TimeHistory {
    dt: f64,
    samples: Vec<Vec<CVec3>>,
    initial_rate: Option<Vec<CVec3>>,
}

impl TimeHistory {
    pub fn new(dt: f64, voxels: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", "time step must be positive"));
        }
        Ok(TimeHistory { dt, samples: vec![Vec::new(); voxels], initial_rate: None })
    }

    /// Builds from voxel-major samples (`samples[voxel][step]`).
    pub fn from_samples(dt: f64, samples: Vec<Vec<CVec3>>) -> Result<Self> {
        let mut h = Self::new(dt, samples.len())?;
        let steps = samples.first().map_or(0, Vec::len);
        if samples.iter().any(|s| s.len() != steps) {
            return Err(Error::Mismatch("ragged history".into()));
        }
        h.samples = samples;
        Ok(h)
    }

    /// Appends the samples of the next time step.
    pub fn push(&mut self, step: &[CVec3]) -> Result<()> {
        if step.len() != self.samples.len() {
            return Err(Error::Mismatch(format!("{} samples for {} voxels", step.len(), self.samples.len())));
        }
        for (s, v) in self.samples.iter_mut().zip(step) {
            s.push(*v);
        }
        Ok(())
    }

    /// Records ṗ(0⁺) per voxel. The volume term then includes the light-cone
    /// shell `−(1/c²)·w·ṗ(0⁺)·δ(t − R/c)/(4πR)`, with δ represented by a
    /// unit-area hat of half-width dt.
    pub fn with_initial_rate(mut self, rate: Vec<CVec3>) -> Result<Self> {
        if rate.len() != self.samples.len() {
            return Err(Error::Mismatch(format!("{} rates for {} voxels", rate.len(), self.samples.len())));
        }
        self.initial_rate = Some(rate);
        Ok(self)
    }

    pub fn initial_rate(&self) -> Option<&[CVec3]> {
        self.initial_rate.as_deref()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn voxels(&self) -> usize {
        self.samples.len()
    }
    pub fn steps(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }
    pub fn t_end(&self) -> f64 {
        self.steps().saturating_sub(1) as f64 * self.dt
    }
    pub fn voxel(&self, i: usize) -> &[CVec3] {
        &self.samples[i]
    }
    pub fn sample(&self, voxel: usize, step: usize) -> CVec3 {
        self.samples[voxel][step]
    }

    fn locate(&self, t: f64) -> Result<Option<(usize, f64)>> {
        if t < 0.0 {
            return Ok(None);
        }
        let n = self.steps();
        let end = self.t_end();
        if n == 0 || t > end * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::HistoryRange { t, t_end: end });
        }
        if n == 1 {
            return Ok(Some((0, 0.0)));
        }
        let x = (t / self.dt).min((n - 1) as f64);
        let k = (x.floor() as usize).min(n - 2);
        Ok(Some((k, x - k as f64)))
    }

    /// Linearly interpolated p(t).
    pub fn value(&self, voxel: usize, t: f64) -> Result<CVec3> {
        Ok(match self.locate(t)? {
            None => CVec3::zeros(),
            Some((k, f)) if self.steps() == 1 => self.samples[voxel][k].scale(1.0 - f),
            Some((k, f)) => self.samples[voxel][k].scale(1.0 - f) + self.samples[voxel][k + 1].scale(f),
        })
    }

    fn node_rate(&self, voxel: usize, k: usize) -> CVec3 {
        let p = &self.samples[voxel];
        let n = p.len();
        let dt = self.dt;
        if n < 3 {
            return if n == 2 { (p[1] - p[0]).scale(1.0 / dt) } else { CVec3::zeros() };
        }
        if k == 0 {
            (p[0].scale(-3.0) + p[1].scale(4.0) - p[2]).scale(0.5 / dt)
        } else if k == n - 1 {
            (p[k].scale(3.0) - p[k - 1].scale(4.0) + p[k - 2]).scale(0.5 / dt)
        } else {
            (p[k + 1] - p[k - 1]).scale(0.5 / dt)
        }
    }

    /// ṗ(t) from differenced samples, linearly interpolated.
    pub fn rate(&self, voxel: usize, t: f64) -> Result<CVec3> {
        Ok(match self.locate(t)? {
            None => CVec3::zeros(),
            Some((k, _)) if self.steps() == 1 => self.node_rate(voxel, k),
            Some((k, f)) => self.node_rate(voxel, k).scale(1.0 - f) + self.node_rate(voxel, k + 1).scale(f),
        })
    }

    /// p̈(t) by central differences of [`Self::rate`] (one-sided at the end).
    pub fn accel(&self, voxel: usize, t: f64) -> Result<CVec3> {
        if t < 0.0 {
            return Ok(CVec3::zeros());
        }
        let dt = self.dt;
        let end = self.t_end();
        if t > end * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::HistoryRange { t, t_end: end });
        }
        if t + dt <= end {
            let lo = if t - dt < 0.0 { self.rate(voxel, 0.0)? } else { self.rate(voxel, t - dt)? };
            let span = if t - dt < 0.0 { t + dt } else { 2.0 * dt };
            Ok((self.rate(voxel, t + dt)? - lo).scale(1.0 / span))
        } else {
            Ok((self.rate(voxel, t)? - self.rate(voxel, (t - dt).max(0.0))?).scale(1.0 / dt))
        }
    }
}

const SELF_ORDER: usize = 8;

/// Unit-area hat of half-width `dt`.
pub(crate) fn hat(x: f64, dt: f64) -> f64 {
    (1.0 - x.abs() / dt).max(0.0) / dt
}

/// Light-cone shell of a jump `rate0` in ṗ at t = 0 (see
/// [`TimeHistory::with_initial_rate`]).
pub(crate) fn shell_at(rate0: &[CVec3], rules: &TargetRules, t: f64, dt: f64, c0: f64) -> CVec3 {
    let mut out = CVec3::zeros();
    if t < 0.0 {
        return out;
    }
    let inv_c2 = 1.0 / (c0 * c0);
    for n in &rules.volume {
        let w = hat(t - n.distance / c0, dt);
        if w != 0.0 {
            out -= rate0[n.source].scale(inv_c2 * n.weight * INV_4PI / n.distance * w);
        }
    }
    if let Some(sc) = rules.self_cell {
        if c0 * t < sc.radius {
            out -= rate0[sc.voxel].scale(t);
        }
    }
    out
}

/// Evaluates ε₀L{p}(r; t) at each target of `rules`.
///
/// Volume term `−(1/c²)∂t Σ w ṗ(t − R/c)/(4πR)` (the equivalent-sphere self
/// cell integrated radially); surface term `Σ_f [S_f σ(t) + Σ_q
/// (w r̂/4πR²)(σ(t − R/c) + (R/c)σ̇(t − R/c) − σ(t))]` with σ = n·p. The
/// retarded correction uses the same node sets as the frequency operator.
pub fn apply_l_time(
    history: &TimeHistory,
    rules: &[TargetRules],
    t: f64,
    c0: f64,
    exec: Execution,
) -> Result<Vec<CVec3>> {
    if t > history.t_end() * (1.0 + 1e-12) + 1e-300 {
        return Err(Error::HistoryRange { t, t_end: history.t_end() });
    }
    exec.map(rules.len(), |i| apply_at(history, &rules[i], t, c0)).into_iter().collect()
}

pub(crate) fn apply_at(history: &TimeHistory, rules: &TargetRules, t: f64, c0: f64) -> Result<CVec3> {
    let mut out = CVec3::zeros();
    let inv_c2 = 1.0 / (c0 * c0);
    for n in &rules.volume {
        let a = history.accel(n.source, t - n.distance / c0)?;
        out -= a.scale(inv_c2 * n.weight * INV_4PI / n.distance);
    }
    if let Some(sc) = rules.self_cell {
        let (rs, ws) = gauss_legendre_on(SELF_ORDER, 0.0, sc.radius);
        for (r, w) in rs.iter().zip(&ws) {
            out -= history.accel(sc.voxel, t - r / c0)?.scale(inv_c2 * w * r);
        }
    }
    if let Some(rate0) = history.initial_rate() {
        out += shell_at(rate0, rules, t, history.dt, c0);
    }
    for f in &rules.facets {
        let now = rdot(&f.normal, &history.value(f.owner, t)?);
        let mut field = crate::complexify(&f.static_field) * now;
        for q in &f.nodes {
            let tr = t - q.distance / c0;
            let past = rdot(&f.normal, &history.value(f.owner, tr)?);
            let slope = rdot(&f.normal, &history.rate(f.owner, tr)?);
            let k = q.coulomb();
            field += crate::complexify(&k) * (past + slope * (q.distance / c0) - now);
        }
        out += field;
    }
    Ok(out)
}
