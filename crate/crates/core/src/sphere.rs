//! Stratification of the unit sphere (d = 3) and the unit circle (d = 2)
//! into cells on which every configuration integrand is smooth.
//!
//! All integrands built from support functions of cell-vertex sets change
//! their active support points only across the great circles `⟨v, n⟩ = 0`
//! with `v ∈ {-1,0,1}^d`. In three dimensions those circles cut S² into 96
//! congruent-up-to-reflection triangles of two shapes; in the plane they cut
//! S¹ into 8 arcs of angle π/4.

use crate::configs::build_symmetry_group;
use crate::geom::{self, Vec3};
use crate::error::Result;
use crate::quadrature::{self, Estimate, Interval, QuadOptions, SphericalTriangle};

/// 3×3 rotation acting on column vectors, row-major.
pub type Mat3 = [[f64; 3]; 3];

pub const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

pub fn mat_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    [geom::dot(&m[0], v), geom::dot(&m[1], v), geom::dot(&m[2], v)]
}

pub fn mat_t_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    let mut out = [0.0; 3];
    for (i, row) in m.iter().enumerate() {
        for k in 0..3 {
            out[k] += row[k] * v[i];
        }
    }
    out
}

/// A cell of the 96-triangle stratification, tagged with its shape.
#[derive(Debug, Clone, Copy)]
pub struct Stratum {
    pub triangle: SphericalTriangle,
    /// 1: vertices at an axis, an edge midpoint direction and a (2,1,1)
    /// direction; 2: vertices at an edge midpoint direction, a (2,1,1)
    /// direction and a body diagonal.
    pub kind: u8,
}

/// The 96 triangles, 48 of each kind, covering S² without overlap.
pub fn triangle_decomposition() -> Vec<Stratum> {
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    let s3 = 1.0 / 3f64.sqrt();
    let s6 = 1.0 / 6f64.sqrt();
    let axis = [1.0, 0.0, 0.0];
    let edge = [s2, s2, 0.0];
    let split = [2.0 * s6, s6, s6];
    let diag = [s3, s3, s3];
    let group = build_symmetry_group(3).expect("d=3 is supported");
    let mut out = Vec::with_capacity(96);
    for (kind, base) in [(1u8, [axis, edge, split]), (2u8, [edge, split, diag])] {
        for g in &group.generators {
            let v = base.map(|p| g.map_direction(&p));
            out.push(Stratum {
                triangle: SphericalTriangle { v },
                kind,
            });
        }
    }
    out
}

/// Nonzero difference vectors of cell vertices, one per ± pair.
pub fn difference_directions(d: usize) -> Vec<Vec3> {
    let mut out = Vec::new();
    let range = if d == 3 { -1..=1 } else { 0..=0 };
    for z in range {
        for y in -1i32..=1 {
            for x in -1i32..=1 {
                let v = [x as f64, y as f64, z as f64];
                // Keep the representative whose first nonzero entry is positive.
                let first = v.iter().find(|c| **c != 0.0);
                if let Some(&c) = first {
                    if c > 0.0 {
                        out.push(v);
                    }
                }
            }
        }
    }
    out
}

const CLIP_EPS: f64 = 1e-14;

/// Convex spherical polygon clipped to `⟨n, c⟩ ≥ 0` (Sutherland–Hodgman on
/// great-circle edges).
fn clip_polygon(poly: &[Vec3], c: &Vec3) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let k = poly.len();
    for i in 0..k {
        let p = &poly[i];
        let q = &poly[(i + 1) % k];
        let sp = geom::dot(p, c);
        let sq = geom::dot(q, c);
        let pin = sp >= -CLIP_EPS;
        if pin {
            out.push(*p);
        }
        if (sp > CLIP_EPS && sq < -CLIP_EPS) || (sp < -CLIP_EPS && sq > CLIP_EPS) {
            let t = sp / (sp - sq);
            let x = geom::axpy(p, t, &geom::sub(q, p));
            out.push(geom::normalize(&x));
        }
    }
    out
}

/// Pieces of `tri` inside every halfspace `⟨n, c⟩ ≥ 0`, fan-triangulated.
pub fn clip_triangle(tri: &SphericalTriangle, constraints: &[Vec3]) -> Vec<SphericalTriangle> {
    let mut poly = tri.v.to_vec();
    for c in constraints {
        poly = clip_polygon(&poly, c);
        if poly.len() < 3 {
            return Vec::new();
        }
    }
    let mut out = Vec::new();
    for i in 1..poly.len() - 1 {
        let t = SphericalTriangle {
            v: [poly[0], poly[i], poly[i + 1]],
        };
        if t.area() > 1e-15 {
            out.push(t);
        }
    }
    out
}

/// Stratified cells of `{n ∈ S² : ⟨n, c⟩ ≥ 0 for all c}` for a lattice rotated
/// by `rot` (cells are images of the lattice-frame stratification).
pub fn sphere_cells(rot: &Mat3, constraints: &[Vec3]) -> Vec<SphericalTriangle> {
    triangle_decomposition()
        .into_iter()
        .flat_map(|s| {
            let t = SphericalTriangle {
                v: s.triangle.v.map(|p| mat_vec(rot, &p)),
            };
            clip_triangle(&t, constraints)
        })
        .collect()
}

/// A great circle `θ ↦ cos θ e + sin θ f` with orthonormal `e`, `f`.
#[derive(Debug, Clone, Copy)]
pub struct GreatCircle {
    pub e: Vec3,
    pub f: Vec3,
}

impl GreatCircle {
    pub const PLANE: GreatCircle = GreatCircle {
        e: [1.0, 0.0, 0.0],
        f: [0.0, 1.0, 0.0],
    };

    pub fn at(&self, theta: f64) -> Vec3 {
        let (s, c) = theta.sin_cos();
        geom::axpy(&geom::scale(&self.e, c), s, &self.f)
    }

    /// Arcs of `[0, 2π)` between consecutive zeros of `⟨v, n(θ)⟩` for the
    /// given directions, restricted to where every `⟨n(θ), c⟩ ≥ 0`.
    pub fn arcs(&self, splits: &[Vec3], constraints: &[Vec3]) -> Vec<Interval> {
        use std::f64::consts::TAU;
        let mut cuts = vec![0.0, TAU];
        for v in splits.iter().chain(constraints) {
            let (a, b) = (geom::dot(v, &self.e), geom::dot(v, &self.f));
            if a.hypot(b) < 1e-14 {
                continue;
            }
            // Zeros of a cos θ + b sin θ.
            let t0 = (-a).atan2(b).rem_euclid(TAU);
            cuts.push(t0);
            cuts.push((t0 + std::f64::consts::PI).rem_euclid(TAU));
        }
        cuts.sort_by(f64::total_cmp);
        let mut out = Vec::new();
        for w in cuts.windows(2) {
            if w[1] - w[0] < 1e-13 {
                continue;
            }
            let mid = self.at(0.5 * (w[0] + w[1]));
            if constraints.iter().all(|c| geom::dot(&mid, c) >= 0.0) {
                out.push(Interval { lo: w[0], hi: w[1] });
            }
        }
        out
    }
}

/// Integrates the vector valued `f` over the part of the unit sphere
/// (d = 3) or unit circle (d = 2) cut out by the halfspace constraints,
/// stratified for a lattice rotated by `rot`.
///
/// Measure is the unnormalized surface (or arc length) measure.
pub fn integrate_sphere<F>(
    d: usize,
    rot: &Mat3,
    constraints: &[Vec3],
    m: usize,
    f: F,
    opts: &QuadOptions,
) -> Result<Vec<Estimate>>
where
    F: Fn(&Vec3, &mut [f64]),
{
    match d {
        3 => quadrature::adaptive(sphere_cells(rot, constraints), m, f, opts),
        2 => {
            let splits: Vec<Vec3> = difference_directions(2)
                .iter()
                .map(|v| mat_vec(rot, v))
                .collect();
            let circle = GreatCircle::PLANE;
            quadrature::adaptive(
                circle.arcs(&splits, constraints),
                m,
                |t: &f64, out: &mut [f64]| f(&circle.at(*t), out),
                opts,
            )
        }
        other => Err(crate::error::Error::UnsupportedDimension(other)),
    }
}

/// Surface measure of the unit sphere in R^d.
pub fn sphere_area(d: usize) -> f64 {
    d as f64 * geom::unit_ball_volume(d)
}
