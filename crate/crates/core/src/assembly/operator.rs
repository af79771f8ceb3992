//! Dense frequency-domain operator A(s) = (1/χ̃(s))I − K(s).

use std::io::{Read, Write};

use faer::prelude::*;
use faer::MatRef;
use num_complex::Complex64;

use super::rules::{QuadratureOptions, TargetRules};
use crate::dispersion::LorentzModel;
use crate::geometry::VoxelMesh;
use crate::greens::{ComplexFrequency, Dyadic};
use crate::par::Execution;
use crate::{CVec3, Error, Result};

const DUMP_MAGIC: &[u8; 8] = b"QVIEMAT1";

/// Discretized operator at one complex frequency, stored row-major over
/// unknowns ordered `(voxel, component)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyOperator {
    s: ComplexFrequency,
    voxels: usize,
    data: Vec<Complex64>,
    fingerprint: String,
}

/// Self-cell dyadic: −(s²/c²)∫G over the equivalent sphere,
/// `I·(e^{-x}(1 + x) − 1)` with x = sa/c.
pub fn self_term(h: f64, s: ComplexFrequency, c0: f64) -> Dyadic {
    let cell = super::rules::SelfCell { voxel: 0, radius: super::rules::SelfCell::equivalent_radius(h) };
    Dyadic::identity() * cell.factor(s.s(), c0)
}

fn fill_rows(rows: &mut [Complex64], rules: &TargetRules, diag: Complex64, i: usize, n: usize, s: Complex64, c0: f64) {
    // rows holds the three rows of voxel i, each of length 3n.
    let stride = 3 * n;
    let mut add = |a: usize, col: usize, v: Complex64| rows[a * stride + col] += v;
    for a in 0..3 {
        add(a, 3 * i + a, diag);
    }
    for node in &rules.volume {
        let k = TargetRules::volume_weight(node, s, c0);
        for a in 0..3 {
            add(a, 3 * node.source + a, -k);
        }
    }
    if let Some(sc) = rules.self_cell {
        let k = sc.factor(s, c0);
        for a in 0..3 {
            add(a, 3 * sc.voxel + a, -k);
        }
    }
    for f in &rules.facets {
        let kern = f.kernel(s, c0);
        for a in 0..3 {
            for b in 0..3 {
                if f.normal[b] != 0.0 {
                    add(a, 3 * f.owner + b, -kern[a] * f.normal[b]);
                }
            }
        }
    }
}

/// Assembles the operator, building each row's quadrature on the fly so
/// that extra memory stays O(N) per worker.
pub fn assemble(
    mesh: &VoxelMesh,
    model: &LorentzModel,
    s: ComplexFrequency,
    opts: &QuadratureOptions,
    exec: Execution,
) -> Result<FrequencyOperator> {
    let n = mesh.len();
    let c0 = model.units.c0;
    let diag = model.inverse_chi_tilde(s.s());
    let mut data = vec![Complex64::new(0.0, 0.0); 9 * n * n];
    let failure = std::sync::Mutex::new(None);
    exec.for_each_chunk(&mut data, 9 * n, |i, rows| match TargetRules::collocation(mesh, i, opts) {
        Ok(r) => fill_rows(rows, &r, diag, i, n, s.s(), c0),
        Err(e) => *failure.lock().expect("poisoned") = Some(e),
    });
    if let Some(e) = failure.into_inner().expect("poisoned") {
        return Err(e);
    }
    Ok(FrequencyOperator { s, voxels: n, data, fingerprint: mesh.fingerprint() })
}

/// Assembles from precomputed collocation rules (reused across a sweep).
pub fn assemble_with_rules(
    mesh: &VoxelMesh,
    rules: &[TargetRules],
    model: &LorentzModel,
    s: ComplexFrequency,
    exec: Execution,
) -> Result<FrequencyOperator> {
    let n = mesh.len();
    if rules.len() != n {
        return Err(Error::Mismatch(format!("{} rules for {} voxels", rules.len(), n)));
    }
    let c0 = model.units.c0;
    let diag = model.inverse_chi_tilde(s.s());
    let mut data = vec![Complex64::new(0.0, 0.0); 9 * n * n];
    exec.for_each_chunk(&mut data, 9 * n, |i, rows| fill_rows(rows, &rules[i], diag, i, n, s.s(), c0));
    Ok(FrequencyOperator { s, voxels: n, data, fingerprint: mesh.fingerprint() })
}

/// Scalar volume couplings (including the self cell) as an N×N row-major
/// matrix; the volume block of the operator is this matrix ⊗ I₃.
pub fn volume_kernel_matrix(rules: &[TargetRules], s: ComplexFrequency, c0: f64) -> Vec<Complex64> {
    let n = rules.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for (i, r) in rules.iter().enumerate() {
        for node in &r.volume {
            out[i * n + node.source] += TargetRules::volume_weight(node, s.s(), c0);
        }
        if let Some(sc) = r.self_cell {
            out[i * n + sc.voxel] += sc.factor(s.s(), c0);
        }
    }
    out
}

impl FrequencyOperator {
    pub fn s(&self) -> ComplexFrequency {
        self.s
    }
    pub fn voxels(&self) -> usize {
        self.voxels
    }
    pub fn dim(&self) -> usize {
        3 * self.voxels
    }
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim() + col]
    }
    pub fn as_row_major(&self) -> &[Complex64] {
        &self.data
    }

    /// Matrix-vector product A·p.
    pub fn apply(&self, p: &[CVec3]) -> Result<Vec<CVec3>> {
        if p.len() != self.voxels {
            return Err(Error::Mismatch(format!("field has {} samples, operator {}", p.len(), self.voxels)));
        }
        let dim = self.dim();
        let flat: Vec<Complex64> = p.iter().flat_map(|v| v.iter().copied()).collect();
        let y: Vec<Complex64> = self
            .data
            .chunks(dim)
            .map(|row| row.iter().zip(&flat).map(|(a, x)| a * x).sum())
            .collect();
        Ok(y.chunks(3).map(|c| CVec3::new(c[0], c[1], c[2])).collect())
    }

    /// LU factorization with partial pivoting.
    pub fn factor(&self) -> Result<FactoredOperator> {
        let dim = self.dim();
        let lu = MatRef::from_row_major_slice(&self.data, dim, dim).partial_piv_lu();
        // A zero pivot shows up as a non-finite diagonal of U.
        let u = lu.U();
        for k in 0..dim {
            let d = u[(k, k)];
            if !(d.norm() > 0.0) || !d.re.is_finite() || !d.im.is_finite() {
                return Err(Error::SolveFailed { omega: self.s.omega(), reason: format!("zero pivot at {k}") });
            }
        }
        Ok(FactoredOperator { lu, voxels: self.voxels, s: self.s, fingerprint: self.fingerprint.clone() })
    }

    /// Relative residual ‖A·p − d‖/‖d‖ (0 when d = 0 and p = 0).
    pub fn residual(&self, p: &[CVec3], d: &[CVec3]) -> Result<f64> {
        let ap = self.apply(p)?;
        let num: f64 = ap.iter().zip(d).map(|(a, b)| (a - b).norm_squared()).sum();
        let den: f64 = d.iter().map(|b| b.norm_squared()).sum();
        Ok(if den == 0.0 { num.sqrt() } else { (num / den).sqrt() })
    }

    /// Binary dump: 32-byte header (magic, N as u64, ω, ε as f64, all
    /// little-endian) followed by the row-major complex128 entries.
    pub fn write_dump(&self, mut w: impl Write) -> Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&(self.voxels as u64).to_le_bytes())?;
        w.write_all(&self.s.omega().to_le_bytes())?;
        w.write_all(&self.s.eps().to_le_bytes())?;
        let mut buf = Vec::with_capacity(16 * self.data.len());
        for z in &self.data {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Reads a dump back. The mesh fingerprint is not stored in the file and
    /// must be supplied by the caller.
    pub fn read_dump(mut r: impl Read, fingerprint: impl Into<String>) -> Result<Self> {
        let mut head = [0u8; 32];
        r.read_exact(&mut head)?;
        if &head[..8] != DUMP_MAGIC {
            return Err(Error::Mismatch("not a QVIEMAT1 matrix dump".into()));
        }
        let word = |k: usize| <[u8; 8]>::try_from(&head[8 * k..8 * k + 8]).expect("8 bytes");
        let voxels = u64::from_le_bytes(word(1)) as usize;
        let s = ComplexFrequency::from_omega(f64::from_le_bytes(word(2)), f64::from_le_bytes(word(3)))?;
        let mut bytes = vec![0u8; 16 * 9 * voxels * voxels];
        r.read_exact(&mut bytes)?;
        let data = bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                Complex64::new(re, im)
            })
            .collect();
        Ok(FrequencyOperator { s, voxels, data, fingerprint: fingerprint.into() })
    }
}

/// Factored operator, reusable for any number of right-hand sides.
pub struct FactoredOperator {
    lu: faer::linalg::solvers::PartialPivLu<Complex64>,
    voxels: usize,
    s: ComplexFrequency,
    fingerprint: String,
}

impl std::fmt::Debug for FactoredOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FactoredOperator").field("voxels", &self.voxels).field("s", &self.s).finish()
    }
}

impl FactoredOperator {
    pub fn s(&self) -> ComplexFrequency {
        self.s
    }
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn solve(&self, rhs: &[CVec3]) -> Result<Vec<CVec3>> {
        Ok(self.solve_many(&[rhs])?.pop().expect("one column"))
    }

    /// Solves for several right-hand sides at once.
    pub fn solve_many(&self, rhs: &[&[CVec3]]) -> Result<Vec<Vec<CVec3>>> {
        let dim = 3 * self.voxels;
        if let Some(bad) = rhs.iter().find(|r| r.len() != self.voxels) {
            return Err(Error::Mismatch(format!("driving has {} samples, operator {}", bad.len(), self.voxels)));
        }
        let mut b = Mat::<Complex64>::from_fn(dim, rhs.len(), |i, j| rhs[j][i / 3][i % 3]);
        self.lu.solve_in_place(b.as_mut());
        let out: Vec<Vec<CVec3>> = (0..rhs.len())
            .map(|j| (0..self.voxels).map(|v| CVec3::new(b[(3 * v, j)], b[(3 * v + 1, j)], b[(3 * v + 2, j)])).collect())
            .collect();
        if out.iter().flatten().any(|v| v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
            return Err(Error::SolveFailed { omega: self.s.omega(), reason: "non-finite solution".into() });
        }
        Ok(out)
    }
}
