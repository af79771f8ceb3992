//! Marching-on-in-time oracle for tiny meshes.
//!
//! Central differences for the oscillator operator with the damping term
//! treated semi-implicitly. The instantaneous part −(a²/2c²)q̈ of the self
//! cell moves to the left-hand side; its remainder is lagged by one step.
//! Neighbour and surface-node terms are strictly retarded (R/c ≥ dt), and the
//! instantaneous surface-charge terms use the current sample.

use super::{DrivingSpec, FreePolarization, Problem};
use crate::assembly::{shell_at, TargetRules, TimeHistory, INV_4PI};
use crate::quadrature::gauss_legendre_on;
use crate::{rdot, CVec3, Error, Result};

/// Largest mesh accepted by the oracle.
pub const MOT_MAX_VOXELS: usize = 64;
const SELF_ORDER: usize = 8;
const GROWTH_LIMIT: f64 = 1e6;

/// Response samples q_k = q(k·dt) with stencils for the derivatives.
struct Response {
    dt: f64,
    q: Vec<Vec<CVec3>>,
}

impl Response {
    fn known(&self) -> usize {
        self.q[0].len() - 1
    }

    /// q_k with q_{−1} = q_1 (q starts from rest, so it is even to second
    /// order about t = 0).
    fn at(&self, v: usize, k: isize) -> CVec3 {
        let k = if k < 0 { -k } else { k } as usize;
        self.q[v].get(k).copied().unwrap_or_else(CVec3::zeros)
    }

    fn node(&self, v: usize, k: usize, order: u8) -> CVec3 {
        let k = k as isize;
        match order {
            0 => self.at(v, k),
            1 => (self.at(v, k + 1) - self.at(v, k - 1)).scale(0.5 / self.dt),
            _ => (self.at(v, k + 1) - self.at(v, k).scale(2.0) + self.at(v, k - 1)).scale(1.0 / (self.dt * self.dt)),
        }
    }

    /// Linear interpolation of the node quantity; null before t = 0.
    fn interp(&self, v: usize, t: f64, order: u8) -> Result<CVec3> {
        if t < 0.0 {
            return Ok(CVec3::zeros());
        }
        // Derivative stencils at node k need sample k + 1.
        let last = self.known().saturating_sub(usize::from(order > 0));
        let x = t / self.dt;
        let k = x.floor() as usize;
        if k >= last {
            if x > last as f64 + 1e-9 {
                return Err(Error::HistoryRange { t, t_end: last as f64 * self.dt });
            }
            return Ok(self.node(v, last, order));
        }
        let f = x - k as f64;
        Ok(self.node(v, k, order).scale(1.0 - f) + self.node(v, k + 1, order).scale(f))
    }
}

struct Total<'a> {
    free: &'a FreePolarization,
    q: &'a Response,
}

impl Total<'_> {
    fn value(&self, v: usize, t: f64) -> Result<CVec3> {
        Ok(self.free.value(v, t) + self.q.interp(v, t, 0)?)
    }
    fn rate(&self, v: usize, t: f64) -> Result<CVec3> {
        Ok(self.free.rate(v, t) + self.q.interp(v, t, 1)?)
    }
    fn accel(&self, v: usize, t: f64) -> Result<CVec3> {
        Ok(self.free.accel(v, t) + self.q.interp(v, t, 2)?)
    }
}

/// Explicit time stepping of the response equation on a mesh of at most
/// [`MOT_MAX_VOXELS`] voxels. Returns p = p_f + q on t = k·dt, k·dt ≤ t_end.
pub fn march_on_time_oracle(problem: &Problem, drive: &DrivingSpec, dt: f64, t_end: f64) -> Result<TimeHistory> {
    let n = problem.mesh().len();
    if n > MOT_MAX_VOXELS {
        return Err(Error::param("mesh", format!("{n} voxels exceed the oracle limit of {MOT_MAX_VOXELS}")));
    }
    let c0 = problem.c0();
    let h = problem.mesh().h();
    if !(dt > 0.0 && c0 * dt < 0.25 * h) {
        return Err(Error::param("dt", format!("time step must satisfy 0 < c0·dt < h/4 = {:e}", 0.25 * h / c0)));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::param("t_end", "must be non-negative"));
    }
    let rules = problem.rules();
    if let Some(i) = rules.iter().position(|r| r.min_delay(c0) < dt) {
        return Err(Error::param("dt", format!("target {i} has an interaction delay shorter than dt")));
    }

    let model = problem.model();
    let wp2 = model.omega_p * model.omega_p;
    let free = drive.free_polarization(problem)?;
    let rate0 = free.initial_rate();
    let steps = (t_end / dt).round() as usize;
    let inv_c2 = 1.0 / (c0 * c0);

    let radius: Vec<f64> = rules.iter().map(|r| r.self_cell.map_or(0.0, |s| s.radius)).collect();
    let kappa: Vec<f64> = radius.iter().map(|a| 0.5 * wp2 * a * a * inv_c2).collect();
    let nodes: Vec<(Vec<f64>, Vec<f64>)> = radius.iter().map(|a| gauss_legendre_on(SELF_ORDER, 0.0, *a)).collect();

    let mut q = Response { dt, q: vec![vec![CVec3::zeros()]; n] };
    let mut out = TimeHistory::new(dt, n)?.with_initial_rate(rate0.clone())?;
    out.push(&(0..n).map(|v| free.value(v, 0.0)).collect::<Vec<_>>())?;
    let mut scale = 0.0f64;

    for step in 0..steps {
        let t = step as f64 * dt;
        let forcing = drive.forcing(problem, t)?;
        let total = Total { free: &free, q: &q };
        let mut next = Vec::with_capacity(n);
        for (i, r) in rules.iter().enumerate() {
            let rhs = retarded_field(&total, r, t, c0)?
                + self_field(&total, i, &nodes[i], radius[i], t, dt, c0)?
                + shell_at(&rate0, r, t, dt, c0)
                + forcing[i];
            scale = scale.max(forcing[i].norm() * model.static_chi()).max(free.value(i, t).norm());
            let (qn, qp) = (q.at(i, step as isize), q.at(i, step as isize - 1));
            let mass = (1.0 + kappa[i]) / (dt * dt);
            let damp = model.gamma / (2.0 * dt);
            let w02 = model.omega_0 * model.omega_0;
            let value = if step == 0 {
                // Start from rest with q_{−1} = q_1.
                rhs.scale(0.5 * wp2 / mass)
            } else {
                let lhs = rhs.scale(wp2) - qn.scale(w02) + (qn.scale(2.0) - qp).scale(mass) + qp.scale(damp);
                lhs.scale(1.0 / (mass + damp))
            };
            next.push(value);
        }
        if next.iter().any(|v| !v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) || v.norm() > GROWTH_LIMIT * scale.max(f64::MIN_POSITIVE)) {
            return Err(Error::Unstable { step: step + 1, dt });
        }
        for (v, x) in next.iter().enumerate() {
            q.q[v].push(*x);
        }
        let tn = (step + 1) as f64 * dt;
        out.push(&(0..n).map(|v| free.value(v, tn) + next[v]).collect::<Vec<_>>())?;
    }
    Ok(out)
}

/// Strictly retarded volume and surface terms at the current time (the
/// instantaneous surface pieces use the current sample).
fn retarded_field(p: &Total, r: &TargetRules, t: f64, c0: f64) -> Result<CVec3> {
    let inv_c2 = 1.0 / (c0 * c0);
    let mut out = CVec3::zeros();
    for node in &r.volume {
        out -= p.accel(node.source, t - node.distance / c0)?.scale(inv_c2 * node.weight * INV_4PI / node.distance);
    }
    for f in &r.facets {
        let now = rdot(&f.normal, &p.value(f.owner, t)?);
        let mut field = crate::complexify(&f.static_field) * now;
        for qn in &f.nodes {
            let tr = t - qn.distance / c0;
            let past = rdot(&f.normal, &p.value(f.owner, tr)?);
            let slope = rdot(&f.normal, &p.rate(f.owner, tr)?);
            field += crate::complexify(&qn.coulomb()) * (past + slope * (qn.distance / c0) - now);
        }
        out += field;
    }
    Ok(out)
}

/// Largest step the oracle accepts: below h/(4c₀) and every interaction
/// delay.
pub fn max_oracle_step(problem: &Problem) -> f64 {
    let c0 = problem.c0();
    let delay = problem.rules().iter().map(|r| r.min_delay(c0)).fold(f64::INFINITY, f64::min);
    (0.25 * problem.mesh().h() / c0).min(delay)
}

/// Relative L² distance of `other` from `reference`, summed over all voxels
/// and the reference samples with t ≤ t_end.
pub fn history_distance(reference: &TimeHistory, other: &TimeHistory, t_end: f64) -> Result<f64> {
    if reference.voxels() != other.voxels() {
        return Err(Error::Mismatch("histories cover different meshes".into()));
    }
    let steps = ((t_end / reference.dt()).floor() as usize).min(reference.steps().saturating_sub(1));
    let (mut num, mut den) = (0.0, 0.0);
    for v in 0..reference.voxels() {
        for k in 0..=steps {
            let a = reference.sample(v, k);
            num += (a - other.value(v, k as f64 * reference.dt())?).norm_squared();
            den += a.norm_squared();
        }
    }
    Ok(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() })
}

/// Self cell without the −(a²/2c²)q̈(t) piece: the free part of that piece
/// at t plus the remainder `−(1/c²)∫₀^a r[p̈(t' − r/c) − p̈(t')]dr` at t' = t − dt.
fn self_field(p: &Total, i: usize, nodes: &(Vec<f64>, Vec<f64>), a: f64, t: f64, dt: f64, c0: f64) -> Result<CVec3> {
    let inv_c2 = 1.0 / (c0 * c0);
    let mut out = -p.free.accel(i, t).scale(0.5 * a * a * inv_c2);
    let lag = t - dt;
    if lag >= 0.0 {
        let centre = p.accel(i, lag)?;
        for (r, w) in nodes.0.iter().zip(&nodes.1) {
            out -= (p.accel(i, lag - r / c0)? - centre).scale(inv_c2 * w * r);
        }
    }
    Ok(out)
}
