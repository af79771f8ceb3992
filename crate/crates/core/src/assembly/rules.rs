//! Quadrature rules for one target point.
//!
//! A [`TargetRules`] lists every volume and surface contribution to the
//! integral operator at a single point. The same rules drive the frequency
//! matrix, the time-domain evaluator and the marching oracle, so all three
//! discretize the operator identically.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::geometry::{Facet, VoxelMesh};
use crate::greens::retarded_self_factor;
use crate::quadrature::{gauss_legendre, rectangle_field};
use crate::{rdot, CVec3, Error, Result, Vec3};

pub(crate) const INV_4PI: f64 = 0.25 / std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureOptions {
    /// Use 2×2×2 subcells for source voxels closer than `near_distance·h`.
    pub near_subcells: bool,
    pub near_distance: f64,
    /// Facets closer than `facet_near_distance·h` get the analytic static
    /// field and a refined node set; farther ones a single centroid node.
    pub facet_near_distance: f64,
    /// Refinement stops once the node sum reproduces the analytic static
    /// field to this relative accuracy.
    pub facet_static_tolerance: f64,
    pub facet_max_order: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            near_subcells: true,
            near_distance: 2.0,
            facet_near_distance: 3.0,
            facet_static_tolerance: 1e-5,
            facet_max_order: 32,
        }
    }
}

/// Point source of the volume term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeNode {
    pub source: usize,
    pub distance: f64,
    /// Unit vector from the node to the target.
    pub direction: Vec3,
    pub weight: f64,
}

/// Point sample of a facet's surface charge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacetNode {
    pub distance: f64,
    pub direction: Vec3,
    pub weight: f64,
}

impl FacetNode {
    /// Coulomb field direction·weight/(4πR²) of this node.
    pub fn coulomb(&self) -> Vec3 {
        self.direction * (self.weight * INV_4PI / (self.distance * self.distance))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FacetRule {
    pub facet: usize,
    pub owner: usize,
    pub normal: Vec3,
    /// Static field of a unit surface charge on the facet.
    pub static_field: Vec3,
    pub nodes: Vec<FacetNode>,
}

impl FacetRule {
    /// Static field reproduced by the node set.
    pub fn node_static(&self) -> Vec3 {
        self.nodes.iter().map(FacetNode::coulomb).sum()
    }

    /// S_f(s) − S_f(0) = Σ coulomb·[(1 + x)e^{-x} − 1], x = sR/c.
    pub fn dynamic(&self, s: Complex64, c0: f64) -> CVec3 {
        let mut out = CVec3::zeros();
        for n in &self.nodes {
            let f = retarded_self_factor(s * (n.distance / c0));
            out += n.coulomb().map(|x| f * x);
        }
        out
    }

    /// Full surface kernel S_f(s).
    pub fn kernel(&self, s: Complex64, c0: f64) -> CVec3 {
        crate::complexify(&self.static_field) + self.dynamic(s, c0)
    }
}

/// Equivalent sphere standing in for the target's own cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfCell {
    pub voxel: usize,
    pub radius: f64,
}

impl SelfCell {
    /// Radius of the sphere with volume h³.
    pub fn equivalent_radius(h: f64) -> f64 {
        h * (3.0 / (4.0 * std::f64::consts::PI)).cbrt()
    }

    /// −(s²/c²)∫_sphere G dV = e^{-x}(1 + x) − 1, x = sa/c.
    pub fn factor(&self, s: Complex64, c0: f64) -> Complex64 {
        retarded_self_factor(s * (self.radius / c0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetRules {
    pub point: Vec3,
    pub self_cell: Option<SelfCell>,
    pub volume: Vec<VolumeNode>,
    pub facets: Vec<FacetRule>,
}

fn subcell_offsets(k: usize) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(k * k * k);
    let step = 1.0 / k as f64;
    for a in 0..k {
        for b in 0..k {
            for c in 0..k {
                let o = |i: usize| (i as f64 + 0.5) * step - 0.5;
                out.push(Vec3::new(o(a), o(b), o(c)));
            }
        }
    }
    out
}

fn facet_nodes(f: &Facet, h: f64, point: &Vec3, order: usize) -> Vec<FacetNode> {
    let (iu, iv) = ((f.axis + 1) % 3, (f.axis + 2) % 3);
    let (x, w) = gauss_legendre(order);
    let mut nodes = Vec::with_capacity(order * order);
    for (xu, wu) in x.iter().zip(&w) {
        for (xv, wv) in x.iter().zip(&w) {
            let mut q = f.centroid;
            q[iu] += 0.5 * h * xu;
            q[iv] += 0.5 * h * xv;
            let d = point - q;
            let r = d.norm();
            nodes.push(FacetNode { distance: r, direction: d / r, weight: 0.25 * h * h * wu * wv });
        }
    }
    nodes
}

fn facet_rule(f: &Facet, index: usize, h: f64, point: &Vec3, opts: &QuadratureOptions) -> Result<FacetRule> {
    let d = point - f.centroid;
    let r = d.norm();
    if !(r > 0.0) {
        return Err(Error::Singular(format!("target coincides with the centroid of facet {index}")));
    }
    if r >= opts.facet_near_distance * h {
        let node = FacetNode { distance: r, direction: d / r, weight: f.area };
        return Ok(FacetRule { facet: index, owner: f.owner, normal: f.normal, static_field: node.coulomb(), nodes: vec![node] });
    }
    let exact = rectangle_field(&f.rectangle(h), point)?;
    let mut order = ((2.0 * h / r).ceil() as usize).clamp(2, opts.facet_max_order);
    loop {
        let nodes = facet_nodes(f, h, point, order);
        let approx: Vec3 = nodes.iter().map(FacetNode::coulomb).sum();
        let err = (approx - exact).norm();
        if err <= opts.facet_static_tolerance * exact.norm() || order >= opts.facet_max_order {
            return Ok(FacetRule { facet: index, owner: f.owner, normal: f.normal, static_field: exact, nodes });
        }
        order = (order * 2).min(opts.facet_max_order);
    }
}

impl TargetRules {
    /// Rules for collocation at the centroid of voxel `i`.
    pub fn collocation(mesh: &VoxelMesh, i: usize, opts: &QuadratureOptions) -> Result<Self> {
        let c = *mesh
            .centroids()
            .get(i)
            .ok_or_else(|| Error::Mismatch(format!("voxel {i} out of range")))?;
        Self::build(mesh, c, Some(i), false, opts)
    }

    /// Rules for an arbitrary observation point. A point inside a voxel
    /// treats that voxel through an equivalent sphere centred on the point.
    ///
    /// Unlike collocation rules, these also carry the charges on faces shared
    /// by two voxels. They vanish for a solenoidal polarization, but a pulse
    /// solution jumps between neighbours, and dropping the jump charges
    /// leaves the reconstructed field with a radial far-zone component.
    pub fn observation(mesh: &VoxelMesh, point: Vec3, opts: &QuadratureOptions) -> Result<Self> {
        let host = mesh.voxel_containing(&point);
        Self::build(mesh, point, host, true, opts)
    }

    fn build(mesh: &VoxelMesh, point: Vec3, host: Option<usize>, with_interior: bool, opts: &QuadratureOptions) -> Result<Self> {
        let h = mesh.h();
        let w = mesh.voxel_volume();
        let sub = subcell_offsets(2);
        let mut volume = Vec::with_capacity(mesh.len());
        for (j, c) in mesh.centroids().iter().enumerate() {
            if Some(j) == host {
                continue;
            }
            let d = point - c;
            let r = d.norm();
            if opts.near_subcells && r < opts.near_distance * h {
                for o in &sub {
                    let dd = d - o * h;
                    let rr = dd.norm();
                    volume.push(VolumeNode { source: j, distance: rr, direction: dd / rr, weight: w / 8.0 });
                }
            } else {
                volume.push(VolumeNode { source: j, distance: r, direction: d / r, weight: w });
            }
        }

        let mut facets = mesh
            .facets()
            .iter()
            .enumerate()
            .map(|(fi, f)| facet_rule(f, fi, h, &point, opts))
            .collect::<Result<Vec<_>>>()?;
        if with_interior {
            // Faces come in (a, b) pairs sharing one geometry.
            let offset = facets.len();
            let faces = mesh.interior_faces();
            for (k, pair) in faces.chunks_exact(2).enumerate() {
                let rule = facet_rule(&pair[0], offset + 2 * k, h, &point, opts)?;
                let twin = FacetRule { facet: offset + 2 * k + 1, owner: pair[1].owner, normal: pair[1].normal, ..rule.clone() };
                facets.push(rule);
                facets.push(twin);
            }
        }

        let self_cell = host.map(|voxel| SelfCell { voxel, radius: SelfCell::equivalent_radius(h) });
        Ok(TargetRules { point, self_cell, volume, facets })
    }

    /// Shortest retardation delay among all nodes (self cell excluded).
    pub fn min_delay(&self, c0: f64) -> f64 {
        let v = self.volume.iter().map(|n| n.distance);
        let f = self.facets.iter().flat_map(|r| r.nodes.iter().map(|n| n.distance));
        v.chain(f).fold(f64::INFINITY, f64::min) / c0
    }

    /// Longest retardation delay among all nodes.
    pub fn max_delay(&self, c0: f64) -> f64 {
        let v = self.volume.iter().map(|n| n.distance);
        let f = self.facets.iter().flat_map(|r| r.nodes.iter().map(|n| n.distance));
        let a = self.self_cell.map_or(0.0, |s| s.radius);
        v.chain(f).fold(a, f64::max) / c0
    }

    /// Scalar volume coupling −(s²/c²)·w·G(R; s) of one node.
    #[inline]
    pub fn volume_weight(node: &VolumeNode, s: Complex64, c0: f64) -> Complex64 {
        let k = s / c0;
        -(k * k) * (-k * node.distance).exp() * (node.weight * INV_4PI / node.distance)
    }

    /// Volume part of the operator at this target, V(s)P.
    pub fn apply_volume(&self, p: &[CVec3], s: Complex64, c0: f64) -> CVec3 {
        let mut out = CVec3::zeros();
        for n in &self.volume {
            out += p[n.source] * Self::volume_weight(n, s, c0);
        }
        if let Some(sc) = self.self_cell {
            out += p[sc.voxel] * sc.factor(s, c0);
        }
        out
    }

    /// Surface part of the operator at this target.
    pub fn apply_surface(&self, p: &[CVec3], s: Complex64, c0: f64) -> CVec3 {
        let mut out = CVec3::zeros();
        for f in &self.facets {
            out += f.kernel(s, c0) * rdot(&f.normal, &p[f.owner]);
        }
        out
    }

    /// Integral operator K(s)P = ε₀L_s{P} at this target.
    pub fn apply_frequency(&self, p: &[CVec3], s: Complex64, c0: f64) -> CVec3 {
        self.apply_volume(p, s, c0) + self.apply_surface(p, s, c0)
    }

    /// Electrostatic field of the surface charges of `p`, Σ S_f(0)(n·P).
    pub fn apply_static(&self, p: &[CVec3]) -> CVec3 {
        let mut out = CVec3::zeros();
        for f in &self.facets {
            out += crate::complexify(&f.static_field) * rdot(&f.normal, &p[f.owner]);
        }
        out
    }
}

/// Rules for every collocation point of the mesh.
pub fn collocation_rules(
    mesh: &VoxelMesh,
    opts: &QuadratureOptions,
    exec: crate::par::Execution,
) -> Result<Vec<TargetRules>> {
    exec.map(mesh.len(), |i| TargetRules::collocation(mesh, i, opts)).into_iter().collect()
}
