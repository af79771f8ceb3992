//! Per-frequency solves and swept reconstruction of causal histories.

use super::{DrivingSpec, Problem};
use crate::assembly::{FrequencyOperator, TimeHistory};
use crate::par::Execution;
use crate::spectral::{reconstruct, SweepPlan};
use crate::{CVec3, CVectorField, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySolution {
    pub polarization: CVectorField,
    /// ‖A·P̂ − D̂‖/‖D̂‖.
    pub residual: f64,
}

/// Direct solve of A(s)P̂ = D̂ by pivoted LU.
pub fn solve_frequency(op: &FrequencyOperator, problem: &Problem, d: &[CVec3]) -> Result<FrequencySolution> {
    if op.fingerprint() != problem.fingerprint() {
        return Err(Error::Mismatch("operator and driving belong to different meshes".into()));
    }
    let polarization = op.factor()?.solve(d)?;
    let residual = op.residual(&polarization, d)?;
    Ok(FrequencySolution { polarization, residual })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    /// Length of the returned history; defaults to a quarter period.
    pub t_max: Option<f64>,
    /// Largest tolerated fraction of the L² norm at t < 0.
    pub causality_limit: f64,
    pub exec: Execution,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { t_max: None, causality_limit: 0.01, exec: Execution::Parallel }
    }
}

/// Spectra and reconstructed history of one expansion coefficient.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub drive: DrivingSpec,
    pub plan: SweepPlan,
    pub omegas: Vec<f64>,
    /// `spectra[k][voxel]` = P̂(iω_k + ε).
    pub spectra: Vec<CVectorField>,
    /// Relative residual per frequency (0 where not solved).
    pub residuals: Vec<f64>,
    /// p(t) on t = n·dt, carrying ṗ(0⁺) for the light-cone shell.
    pub history: TimeHistory,
    pub initial: CVectorField,
    pub expected_initial: CVectorField,
    /// ‖p(0) − p_expected(0)‖ over the larger of ‖p_expected(0)‖ and max‖p(t)‖.
    pub initial_error: f64,
    /// √(Σ_{t<0}|q|² / Σ_{0≤t≤t_max}|p|²).
    pub causality_leak: f64,
    /// e^{εt_max}: growth of spectral-truncation errors at the end of the
    /// history.
    pub amplification: f64,
    /// False when the spectrum was completed by Hermitian symmetry.
    pub complex_valued: bool,
}

impl SolveResult {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

pub fn sweep_and_reconstruct(problem: &Problem, plan: &SweepPlan, drive: DrivingSpec, opts: &SweepOptions) -> Result<SolveResult> {
    Ok(sweep_many(problem, plan, &[drive], opts)?.pop().expect("one result"))
}

/// Sweeps several drivings, sharing each frequency's factorization.
pub fn sweep_many(problem: &Problem, plan: &SweepPlan, drives: &[DrivingSpec], opts: &SweepOptions) -> Result<Vec<SolveResult>> {
    plan.validate()?;
    plan.check_resolution(problem.model().gamma)?;
    for d in drives {
        d.validate(problem)?;
        if let Some(pole) = d.pole() {
            plan.check_pole(pole)?;
        }
    }
    let omegas = plan.omegas();
    let hermitian = plan.is_symmetric() && drives.iter().all(DrivingSpec::is_real);
    // Frequencies with zero taper weight never reach the reconstruction.
    let solve: Vec<usize> = (0..plan.n_omega)
        .filter(|&k| plan.taper(omegas[k]) > 0.0 && (!hermitian || omegas[k] >= 0.0))
        .collect();

    let (outer, inner) = if solve.len() > 1 { (opts.exec, Execution::Sequential) } else { (Execution::Sequential, opts.exec) };
    let solved: Vec<Result<(Vec<CVectorField>, Vec<f64>)>> = outer.map(solve.len(), |j| {
        let s = plan.frequency(solve[j]);
        let op = problem.operator(s, inner)?;
        let lu = op.factor()?;
        let rhs: Vec<CVectorField> = drives.iter().map(|d| d.rhs(problem, s)).collect::<Result<_>>()?;
        let refs: Vec<&[CVec3]> = rhs.iter().map(Vec::as_slice).collect();
        let sol = lu.solve_many(&refs)?;
        let res = sol.iter().zip(&rhs).map(|(p, d)| op.residual(p, d)).collect::<Result<_>>()?;
        Ok((sol, res))
    });

    let n = problem.mesh().len();
    let zero = vec![CVec3::zeros(); n];
    let mut spectra = vec![vec![zero.clone(); plan.n_omega]; drives.len()];
    let mut residuals = vec![vec![0.0; plan.n_omega]; drives.len()];
    for (j, r) in solved.into_iter().enumerate() {
        let (sol, res) = r?;
        let k = solve[j];
        for (d, (p, e)) in sol.into_iter().zip(res).enumerate() {
            if hermitian {
                if let Some(mk) = plan.mirror(k).filter(|&mk| mk != k) {
                    spectra[d][mk] = p.iter().map(|v| v.map(|z| z.conj())).collect();
                    residuals[d][mk] = e;
                }
            }
            spectra[d][k] = p;
            residuals[d][k] = e;
        }
    }

    drives
        .iter()
        .zip(spectra)
        .zip(residuals)
        .map(|((drive, spec), res)| finish(problem, plan, *drive, spec, res, !hermitian, opts))
        .collect()
}

fn finish(
    problem: &Problem,
    plan: &SweepPlan,
    drive: DrivingSpec,
    spectra: Vec<CVectorField>,
    residuals: Vec<f64>,
    complex_valued: bool,
    opts: &SweepOptions,
) -> Result<SolveResult> {
    let free = drive.free_polarization(problem)?;
    let omegas = plan.omegas();
    let response: Vec<CVectorField> = spectra
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let pf = free.transform(plan.frequency(k).s());
            p.iter().zip(pf).map(|(a, b)| a - b).collect()
        })
        .collect();
    let rec = reconstruct(plan, &response)?;

    let dt = rec.dt;
    let available = rec.positive.first().map_or(0, Vec::len);
    let t_max = opts.t_max.unwrap_or(0.25 * plan.period());
    if !(t_max > 0.0) {
        return Err(Error::param("t_max", "history length must be positive"));
    }
    let steps = ((t_max / dt).ceil() as usize + 1).min(available);
    let mut samples = Vec::with_capacity(rec.positive.len());
    let (mut pos, mut neg) = (0.0, 0.0);
    for (v, (qp, qn)) in rec.positive.iter().zip(&rec.negative).enumerate() {
        let mut p: Vec<CVec3> = qp.iter().enumerate().map(|(i, q)| q + free.value(v, i as f64 * dt)).collect();
        p.truncate(steps);
        pos += p.iter().map(|x| x.norm_squared()).sum::<f64>();
        neg += qn.iter().map(|x| x.norm_squared()).sum::<f64>();
        samples.push(p);
    }
    let causality_leak = if pos > 0.0 { (neg / pos).sqrt() } else { 0.0 };
    if causality_leak > opts.causality_limit {
        return Err(Error::NonCausal { fraction: causality_leak });
    }
    let history = TimeHistory::from_samples(dt, samples)?.with_initial_rate(free.initial_rate())?;

    let initial: CVectorField = (0..history.voxels()).map(|v| history.sample(v, 0)).collect();
    let expected_initial = drive.initial_polarization(problem)?;
    let norm = |f: &[CVec3]| f.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt();
    let diff: Vec<CVec3> = initial.iter().zip(&expected_initial).map(|(a, b)| a - b).collect();
    let peak = (0..history.steps())
        .map(|k| norm(&(0..history.voxels()).map(|v| history.sample(v, k)).collect::<Vec<_>>()))
        .fold(0.0, f64::max);
    let scale = norm(&expected_initial).max(peak);
    let initial_error = if scale > 0.0 { norm(&diff) / scale } else { 0.0 };

    Ok(SolveResult {
        drive,
        plan: *plan,
        omegas,
        spectra,
        residuals,
        amplification: (plan.eps_reg * history.t_end()).exp(),
        history,
        initial,
        expected_initial,
        initial_error,
        causality_leak,
        complex_valued,
    })
}
