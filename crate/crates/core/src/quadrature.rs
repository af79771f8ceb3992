//! Numerical quadrature: Gauss–Legendre rules, adaptive Gauss–Kronrod
//! integration, and the closed-form field of a uniformly charged rectangle.

use crate::{Error, Result, Vec3};

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss–Legendre order must be positive");
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Gauss–Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    (x.iter().map(|t| mid + half * t).collect(), w.iter().map(|v| v * half).collect())
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let fc = f(c);
    let mut k = fc * GK_WK[7];
    let mut g = fc * GK_WG[3];
    for j in 0..7 {
        let dx = h * GK_NODES[j];
        let s = f(c - dx) + f(c + dx);
        k += GK_WK[j] * s;
        if j % 2 == 1 {
            g += GK_WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integration of `f` over [a, b].
///
/// Subdivides until the summed error estimate is below
/// `max(abs_tol, rel_tol·|I|)`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    let mut intervals = vec![(a, b, gk15(&f, a, b))];
    for _ in 0..5000 {
        let total: f64 = intervals.iter().map(|iv| iv.2 .0).sum();
        let err: f64 = intervals.iter().map(|iv| iv.2 .1).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .expect("non-empty");
        let (lo, hi, _) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        intervals.push((lo, mid, gk15(&f, lo, mid)));
        intervals.push((mid, hi, gk15(&f, mid, hi)));
    }
    Err(Error::Singular(format!("adaptive quadrature on [{a}, {b}] did not converge")))
}

/// Integral of `f` over [a, ∞) via the map x = a + u/(1-u).
pub fn integrate_to_infinity(f: impl Fn(f64) -> f64, a: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    integrate(
        |u| {
            let one_minus = 1.0 - u;
            f(a + u / one_minus) / (one_minus * one_minus)
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}

/// Axis-aligned rectangle in the plane `x[axis] = offset`.
///
/// `lo`/`hi` bound the two in-plane coordinates, taken in cyclic order
/// `(axis+1, axis+2) mod 3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rectangle {
    pub axis: usize,
    pub offset: f64,
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Rectangle {
    pub fn in_plane_axes(&self) -> (usize, usize) {
        ((self.axis + 1) % 3, (self.axis + 2) % 3)
    }
}

fn log_v_plus_r(u2z2: f64, v: f64) -> f64 {
    let r = (u2z2 + v * v).sqrt();
    if v >= 0.0 {
        (v + r).ln()
    } else {
        u2z2.ln() - (r - v).ln()
    }
}

/// ln(v + R) for one corner. On the line of an edge (d² → 0) the singular
/// ln d² parts of the two corners of that edge cancel and are dropped; a point
/// on the edge segment itself is rejected.
fn edge_log(d2: f64, v: f64, ends: [f64; 2], tiny: f64) -> Result<f64> {
    if d2 > tiny * tiny {
        return Ok(log_v_plus_r(d2, v));
    }
    if ends[0] < tiny && ends[1] > -tiny {
        return Err(Error::Singular("field point lies on a facet edge".into()));
    }
    Ok(if v >= 0.0 { (2.0 * v).ln() } else { -(-2.0 * v).ln() })
}

/// Coulomb field `(1/4π)∫ (x - x')/|x - x'|³ dA'` of a unit surface charge on
/// `rect`, evaluated at `x`.
///
/// Errors when `x` lies on the rectangle or on one of its edges, where the
/// field diverges.
pub fn rectangle_field(rect: &Rectangle, x: &Vec3) -> Result<Vec3> {
    let (iu, iv) = rect.in_plane_axes();
    let z = x[rect.axis] - rect.offset;
    let us = [rect.lo[0] - x[iu], rect.hi[0] - x[iu]];
    let vs = [rect.lo[1] - x[iv], rect.hi[1] - x[iv]];
    let scale = (rect.hi[0] - rect.lo[0]).max(rect.hi[1] - rect.lo[1]);
    let tiny = 1e-12 * scale;

    let mut normal = 0.0;
    if z.abs() > tiny {
        for (a, u) in us.iter().enumerate() {
            for (b, v) in vs.iter().enumerate() {
                let r = (u * u + v * v + z * z).sqrt();
                let sign = if a == b { 1.0 } else { -1.0 };
                normal += sign * (u * v / (z * r)).atan();
            }
        }
    } else if us[0] < -tiny && us[1] > tiny && vs[0] < -tiny && vs[1] > tiny {
        return Err(Error::Singular("field point lies on a charged facet".into()));
    }

    let mut along_u = 0.0;
    for (a, u) in us.iter().enumerate() {
        let u2z2 = u * u + z * z;
        let sign_u = if a == 1 { 1.0 } else { -1.0 };
        for (b, v) in vs.iter().enumerate() {
            let sign_v = if b == 1 { 1.0 } else { -1.0 };
            along_u += sign_u * sign_v * edge_log(u2z2, *v, vs, tiny)?;
        }
    }
    let mut along_v = 0.0;
    for (b, v) in vs.iter().enumerate() {
        let v2z2 = v * v + z * z;
        let sign_v = if b == 1 { 1.0 } else { -1.0 };
        for (a, u) in us.iter().enumerate() {
            let sign_u = if a == 1 { 1.0 } else { -1.0 };
            along_v += sign_u * sign_v * edge_log(v2z2, *u, us, tiny)?;
        }
    }

    let inv4pi = 0.25 / std::f64::consts::PI;
    let mut e = Vec3::zeros();
    e[rect.axis] = normal * inv4pi;
    e[iu] = along_u * inv4pi;
    e[iv] = along_v * inv4pi;
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in 1..=16 {
            let (x, w) = gauss_legendre(n);
            for p in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} p={p}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn adaptive_handles_peaked_integrands() {
        let v = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-12, 1e-12).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert_relative_eq!(v, exact, max_relative = 1e-10);
        let tail = integrate_to_infinity(|x| (-x).exp(), 0.0, 1e-13, 1e-12).unwrap();
        assert_relative_eq!(tail, 1.0, max_relative = 1e-10);
    }

    fn brute_force(rect: &Rectangle, x: &Vec3, n: usize) -> Vec3 {
        let (iu, iv) = rect.in_plane_axes();
        let (uu, wu) = gauss_legendre_on(n, rect.lo[0], rect.hi[0]);
        let (vv, wv) = gauss_legendre_on(n, rect.lo[1], rect.hi[1]);
        let mut e = Vec3::zeros();
        for (u, a) in uu.iter().zip(&wu) {
            for (v, b) in vv.iter().zip(&wv) {
                let mut src = Vec3::zeros();
                src[rect.axis] = rect.offset;
                src[iu] = *u;
                src[iv] = *v;
                let d = x - src;
                e += d * (a * b / (4.0 * std::f64::consts::PI * d.norm().powi(3)));
            }
        }
        e
    }

    #[test]
    fn rectangle_field_matches_brute_force() {
        let rects = [
            Rectangle { axis: 2, offset: 0.5, lo: [-0.5, -0.5], hi: [0.5, 0.5] },
            Rectangle { axis: 0, offset: -0.2, lo: [0.1, -0.3], hi: [0.4, 0.9] },
            Rectangle { axis: 1, offset: 1.0, lo: [-1.0, 0.0], hi: [0.0, 2.0] },
        ];
        let points = [Vec3::new(0.3, -0.7, 2.1), Vec3::new(-1.2, 0.4, -0.9), Vec3::new(2.0, 3.0, 0.1)];
        for r in &rects {
            for p in &points {
                let exact = rectangle_field(r, p).unwrap();
                let bf = brute_force(r, p, 40);
                assert!((exact - bf).norm() < 1e-10 * bf.norm(), "{exact:?} vs {bf:?}");
            }
        }
    }

    #[test]
    fn square_seen_from_its_axis_subtends_a_sixth_of_the_sphere() {
        let r = Rectangle { axis: 2, offset: 0.5, lo: [-0.5, -0.5], hi: [0.5, 0.5] };
        let e = rectangle_field(&r, &Vec3::zeros()).unwrap();
        assert_relative_eq!(e.z, -1.0 / 6.0, epsilon = 1e-14);
        assert!(e.x.abs() < 1e-14 && e.y.abs() < 1e-14);
    }

    #[test]
    fn in_plane_point_outside_gives_tangential_field_only() {
        let r = Rectangle { axis: 2, offset: 0.0, lo: [0.0, 0.0], hi: [1.0, 1.0] };
        let e = rectangle_field(&r, &Vec3::new(2.0, 0.5, 0.0)).unwrap();
        assert_eq!(e.z, 0.0);
        let bf = brute_force(&r, &Vec3::new(2.0, 0.5, 0.0), 40);
        assert!((e - bf).norm() < 1e-10 * bf.norm());
        assert!(rectangle_field(&r, &Vec3::new(0.5, 0.5, 0.0)).is_err());
    }

    #[test]
    fn points_on_extended_edge_lines_are_regular() {
        let r = Rectangle { axis: 2, offset: 0.0, lo: [0.0, 0.0], hi: [1.0, 1.0] };
        for p in [Vec3::new(2.0, 0.0, 0.0), Vec3::new(-0.5, 1.0, 0.0), Vec3::new(0.0, -3.0, 0.0)] {
            let e = rectangle_field(&r, &p).unwrap();
            let bf = brute_force(&r, &p, 60);
            assert!((e - bf).norm() < 1e-9 * bf.norm(), "{p:?}: {e:?} vs {bf:?}");
        }
        assert!(rectangle_field(&r, &Vec3::new(0.5, 0.0, 0.0)).is_err());
        assert!(rectangle_field(&r, &Vec3::new(1.0, 1.0, 0.0)).is_err());
    }
}
