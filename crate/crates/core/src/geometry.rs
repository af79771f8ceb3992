//! Voxel discretization of the dielectric region, its boundary facets,
//! matter bases and free-space plane-wave modes.

use std::collections::HashSet;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::quadrature::Rectangle;
use crate::units::Units;
use crate::{CVec3, Error, Result, Vec3};

/// Outward directions in facet order: -x, +x, -y, +y, -z, +z.
const DIRECTIONS: [(usize, i64); 6] = [(0, -1), (0, 1), (1, -1), (1, 1), (2, -1), (2, 1)];

/// One exposed face of a voxel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Facet {
    pub centroid: Vec3,
    /// Outward unit normal (one of ±x̂, ±ŷ, ±ẑ).
    pub normal: Vec3,
    /// Coordinate axis the normal is aligned with.
    pub axis: usize,
    pub area: f64,
    /// Index of the voxel this face belongs to.
    pub owner: usize,
}

impl Facet {
    pub fn rectangle(&self, h: f64) -> Rectangle {
        let (iu, iv) = ((self.axis + 1) % 3, (self.axis + 2) % 3);
        let c = self.centroid;
        Rectangle {
            axis: self.axis,
            offset: c[self.axis],
            lo: [c[iu] - 0.5 * h, c[iv] - 0.5 * h],
            hi: [c[iu] + 0.5 * h, c[iv] + 0.5 * h],
        }
    }
}

/// Cubic voxel mesh with its boundary surface.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelMesh {
    h: f64,
    indices: Vec<[i64; 3]>,
    centroids: Vec<Vec3>,
    facets: Vec<Facet>,
}

impl VoxelMesh {
    /// Builds a mesh from integer cell indices; centroids sit at
    /// `origin + (index + ½)h`. Voxels are ordered lexicographically by index.
    pub fn from_indices(h: f64, origin: Vec3, mut indices: Vec<[i64; 3]>) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::Mesh("voxel edge must be positive".into()));
        }
        indices.sort_unstable();
        indices.dedup();
        if indices.is_empty() {
            return Err(Error::Mesh("mesh contains no voxels".into()));
        }
        let filled: HashSet<[i64; 3]> = indices.iter().copied().collect();
        let centroids: Vec<Vec3> = indices
            .iter()
            .map(|ix| origin + Vec3::new(ix[0] as f64 + 0.5, ix[1] as f64 + 0.5, ix[2] as f64 + 0.5) * h)
            .collect();
        let mut facets = Vec::new();
        for (owner, ix) in indices.iter().enumerate() {
            for &(axis, step) in &DIRECTIONS {
                let mut nb = *ix;
                nb[axis] += step;
                if filled.contains(&nb) {
                    continue;
                }
                let mut normal = Vec3::zeros();
                normal[axis] = step as f64;
                facets.push(Facet {
                    centroid: centroids[owner] + normal * (0.5 * h),
                    normal,
                    axis,
                    area: h * h,
                    owner,
                });
            }
        }
        Ok(VoxelMesh { h, indices, centroids, facets })
    }

    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn len(&self) -> usize {
        self.centroids.len()
    }
    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }
    pub fn voxel_volume(&self) -> f64 {
        self.h.powi(3)
    }
    pub fn total_volume(&self) -> f64 {
        self.len() as f64 * self.voxel_volume()
    }
    pub fn indices(&self) -> &[[i64; 3]] {
        &self.indices
    }
    pub fn centroids(&self) -> &[Vec3] {
        &self.centroids
    }
    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    /// Both sides of every face shared by two voxels, each with its owner's
    /// outward normal. They carry the charge n·(p_a − p_b) of a polarization
    /// that jumps between neighbours.
    pub fn interior_faces(&self) -> Vec<Facet> {
        let position: std::collections::HashMap<[i64; 3], usize> =
            self.indices.iter().enumerate().map(|(i, ix)| (*ix, i)).collect();
        let mut out = Vec::new();
        for (owner, ix) in self.indices.iter().enumerate() {
            for axis in 0..3 {
                let mut nb = *ix;
                nb[axis] += 1;
                let Some(&other) = position.get(&nb) else { continue };
                let mut normal = Vec3::zeros();
                normal[axis] = 1.0;
                let centroid = self.centroids[owner] + normal * (0.5 * self.h);
                let area = self.h * self.h;
                out.push(Facet { centroid, normal, axis, area, owner });
                out.push(Facet { centroid, normal: -normal, axis, area, owner: other });
            }
        }
        out
    }

    /// Voxels with no exposed face.
    pub fn interior_voxels(&self) -> Vec<usize> {
        let mut exposed = vec![false; self.len()];
        for f in &self.facets {
            exposed[f.owner] = true;
        }
        (0..self.len()).filter(|&i| !exposed[i]).collect()
    }

    /// Index of the voxel whose closed cell contains `x`, if any.
    pub fn voxel_containing(&self, x: &Vec3) -> Option<usize> {
        let half = 0.5 * self.h * (1.0 + 1e-12);
        self.centroids.iter().position(|c| (x - c).amax() <= half)
    }

    /// Upper bound on the distance between any two points of the region.
    pub fn diameter(&self) -> f64 {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for c in &self.centroids {
            lo = lo.inf(c);
            hi = hi.sup(c);
        }
        (hi - lo).norm() + self.h * 3f64.sqrt()
    }

    /// Short hex digest of the edge length and centroid list.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.h.to_le_bytes());
        for c in &self.centroids {
            for x in c.iter() {
                hasher.update(x.to_le_bytes());
            }
        }
        hasher.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Same voxels in a different order; facets are rebuilt accordingly.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.len() {
            return Err(Error::Mismatch("permutation length differs from voxel count".into()));
        }
        let mut seen = vec![false; self.len()];
        for &o in order {
            if o >= self.len() || std::mem::replace(&mut seen[o], true) {
                return Err(Error::Mismatch("not a permutation".into()));
            }
        }
        let indices: Vec<[i64; 3]> = order.iter().map(|&o| self.indices[o]).collect();
        let centroids: Vec<Vec3> = order.iter().map(|&o| self.centroids[o]).collect();
        let mut inverse = vec![0; self.len()];
        for (new, &old) in order.iter().enumerate() {
            inverse[old] = new;
        }
        let mut facets: Vec<Facet> = self.facets.iter().map(|f| Facet { owner: inverse[f.owner], ..*f }).collect();
        facets.sort_by_key(|f| f.owner);
        Ok(VoxelMesh { h: self.h, indices, centroids, facets })
    }

    pub fn write_voxels_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "ix,iy,iz,cx,cy,cz")?;
        for (ix, c) in self.indices.iter().zip(&self.centroids) {
            writeln!(w, "{},{},{},{:e},{:e},{:e}", ix[0], ix[1], ix[2], c.x, c.y, c.z)?;
        }
        Ok(())
    }

    pub fn write_facets_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "cx,cy,cz,nx,ny,nz,area")?;
        for f in &self.facets {
            let (c, n) = (f.centroid, f.normal);
            writeln!(w, "{:e},{:e},{:e},{},{},{},{:e}", c.x, c.y, c.z, n.x, n.y, n.z, f.area)?;
        }
        Ok(())
    }
}

/// Voxels of an `n³` grid spanning the bounding cube whose centroids fall
/// strictly inside the sphere.
pub fn build_sphere_mesh(radius: f64, n_per_diameter: usize) -> Result<VoxelMesh> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::Mesh("sphere radius must be positive".into()));
    }
    if n_per_diameter < 3 {
        return Err(Error::Mesh("need at least 3 voxels per diameter".into()));
    }
    let n = n_per_diameter as i64;
    let h = 2.0 * radius / n_per_diameter as f64;
    let origin = Vec3::repeat(-radius);
    let mut idx = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let c = origin + Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * h;
                if c.norm() < radius {
                    idx.push([i, j, k]);
                }
            }
        }
    }
    VoxelMesh::from_indices(h, origin, idx)
}

/// Box centred on the origin with `n[a]` cubic voxels along axis `a`.
///
/// Cells must be cubes, so `extents[a] / n[a]` has to agree across axes.
pub fn build_box_mesh(extents: [f64; 3], n: [usize; 3]) -> Result<VoxelMesh> {
    if extents.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::Mesh("box extents must be positive".into()));
    }
    if n.contains(&0) {
        return Err(Error::Mesh("box cell counts must be at least 1".into()));
    }
    let h = extents[0] / n[0] as f64;
    for a in 1..3 {
        let ha = extents[a] / n[a] as f64;
        if (ha - h).abs() > 1e-9 * h {
            return Err(Error::Mesh(format!("non-cubic cells: edge {h} along x but {ha} along axis {a}")));
        }
    }
    let origin = Vec3::new(-0.5 * extents[0], -0.5 * extents[1], -0.5 * extents[2]);
    let mut idx = Vec::with_capacity(n[0] * n[1] * n[2]);
    for i in 0..n[0] as i64 {
        for j in 0..n[1] as i64 {
            for k in 0..n[2] as i64 {
                idx.push([i, j, k]);
            }
        }
    }
    VoxelMesh::from_indices(h, origin, idx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    /// Three constant fields along x̂, ŷ, ẑ; solenoidal.
    UniformTriplet,
    /// One field per voxel and Cartesian direction; not solenoidal.
    VoxelPulse,
}

/// Real, orthonormal vector fields sampled at voxel centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct MatterBasis {
    kind: BasisKind,
    vectors: Vec<Vec<Vec3>>,
}

impl MatterBasis {
    pub fn uniform(mesh: &VoxelMesh) -> Self {
        let a = 1.0 / mesh.total_volume().sqrt();
        let vectors = (0..3)
            .map(|d| {
                let mut v = Vec3::zeros();
                v[d] = a;
                vec![v; mesh.len()]
            })
            .collect();
        MatterBasis { kind: BasisKind::UniformTriplet, vectors }
    }

    pub fn voxel_pulse(mesh: &VoxelMesh) -> Self {
        let a = 1.0 / mesh.voxel_volume().sqrt();
        let mut vectors = Vec::with_capacity(3 * mesh.len());
        for i in 0..mesh.len() {
            for d in 0..3 {
                let mut field = vec![Vec3::zeros(); mesh.len()];
                field[i][d] = a;
                vectors.push(field);
            }
        }
        MatterBasis { kind: BasisKind::VoxelPulse, vectors }
    }

    pub fn build(kind: BasisKind, mesh: &VoxelMesh) -> Self {
        match kind {
            BasisKind::UniformTriplet => Self::uniform(mesh),
            BasisKind::VoxelPulse => Self::voxel_pulse(mesh),
        }
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }
    pub fn len(&self) -> usize {
        self.vectors.len()
    }
    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn field(&self, m: usize) -> Result<&[Vec3]> {
        self.vectors
            .get(m)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::param("m", format!("basis index {m} out of range (M = {})", self.len())))
    }

    /// Voxel-quadrature inner product ⟨U_a, U_b⟩.
    pub fn inner(&self, a: usize, b: usize, mesh: &VoxelMesh) -> Result<f64> {
        let (fa, fb) = (self.field(a)?, self.field(b)?);
        Ok(fa.iter().zip(fb).map(|(x, y)| x.dot(y)).sum::<f64>() * mesh.voxel_volume())
    }
}

/// Transverse polarization pair for wave vector `k`.
///
/// Computed from the canonical representative of `{k, -k}` so that both
/// members of the pair share the same vectors.
pub fn polarization_vectors(k: &Vec3) -> Result<(Vec3, Vec3)> {
    if !(k.norm() > 0.0) || !k.iter().all(|x| x.is_finite()) {
        return Err(Error::param("k", "wave vector must be finite and nonzero"));
    }
    let first = k.iter().find(|x| **x != 0.0).copied().unwrap_or(1.0);
    let canonical = if first < 0.0 { -k } else { *k };
    let khat = canonical.normalize();
    let a = if khat.z.abs() > 0.9 { Vec3::x() } else { Vec3::z() };
    let e1 = khat.cross(&a).normalize();
    let e2 = khat.cross(&e1);
    Ok((e1, e2))
}

/// Transverse plane-wave mode μ = (k, s) of free space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWaveMode {
    pub k: Vec3,
    /// Polarization index, 1 or 2.
    pub polarization: u8,
    pub eps: Vec3,
    pub omega: f64,
    /// Field normalization √(ħω/(2ε₀(2π)³)).
    pub amplitude: f64,
}

impl PlaneWaveMode {
    pub fn new(k: Vec3, polarization: u8, units: &Units) -> Result<Self> {
        let (e1, e2) = polarization_vectors(&k)?;
        let eps = match polarization {
            1 => e1,
            2 => e2,
            _ => return Err(Error::param("s_pol", "polarization index must be 1 or 2")),
        };
        let omega = units.c0 * k.norm();
        let two_pi_cubed = (2.0 * std::f64::consts::PI).powi(3);
        let amplitude = (units.hbar * omega / (2.0 * units.eps0 * two_pi_cubed)).sqrt();
        Ok(PlaneWaveMode { k, polarization, eps, omega, amplitude })
    }

    /// Mode function w_μ(r) = ε e^{ik·r}/(2π)^{3/2}.
    pub fn w(&self, r: &Vec3) -> CVec3 {
        let phase = Complex64::from_polar((2.0 * std::f64::consts::PI).powf(-1.5), self.k.dot(r));
        self.eps.map(|x| phase * x)
    }

    /// Free electric field e_μ(r,t) = 𝓔 w_μ(r) e^{-iωt}.
    pub fn e_free(&self, r: &Vec3, t: f64) -> CVec3 {
        self.w(r) * Complex64::from_polar(self.amplitude, -self.omega * t)
    }

    /// Free magnetic field b_μ = k × e_μ / ω_μ.
    pub fn b_free(&self, r: &Vec3, t: f64) -> CVec3 {
        let e = self.e_free(r, t);
        let k = self.k.map(Complex64::from);
        k.cross(&e) / Complex64::from(self.omega)
    }
}
