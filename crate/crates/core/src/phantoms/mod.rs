//! Exact r-regular test bodies.
//!
//! Every phantom is a parallel body `P ⊕ B(r)` of a convex core `P`: a point
//! (ball), a segment (capsule), or more generally an orthotope
//! `p + Σ [0, t_i u_i]` with orthonormal edge directions (orthobody). Such a
//! body is r-regular: each boundary point touches an inner ball of radius `r`
//! centred on the core and an outer ball centred at distance `2r`.

mod patches;

pub use patches::{Patch, PatchKind, SurfacePoint};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::quadrature::{Estimate, QuadOptions};
use crate::sphere::Mat3;

/// What the imaging and hit-or-miss code need to know about a set.
pub trait Body: Sync {
    fn dim(&self) -> usize;

    /// Closed-set membership.
    fn contains(&self, x: &Vec3) -> bool;

    /// Support function `h(X, n) = max_{x∈X} ⟨x, n⟩`; `-∞` for the empty set.
    fn support(&self, n: &Vec3) -> f64;

    /// Parameter range `{s : x0 + s·dir ∈ X}` of a line, for convex bodies.
    fn line_interval(&self, x0: &Vec3, dir: &Vec3) -> Option<(f64, f64)>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Ball,
    Capsule,
    Orthobody,
}

/// `(p + Σ_i [0, t_i u_i]) ⊕ B(r)` in two or three dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub dim: usize,
    pub variant: Variant,
    /// Corner of the core where all edge parameters vanish.
    pub origin: Vec3,
    pub dirs: Vec<Vec3>,
    pub lengths: Vec<f64>,
    pub r: f64,
}

const ORTHO_TOL: f64 = 1e-12;

impl Phantom {
    pub fn ball(center: &[f64], r: f64) -> Result<Self> {
        Self::build(Variant::Ball, center, &[], &[], r)
    }

    /// Segment core from `start` to `start + t u`.
    pub fn capsule(start: &[f64], u: &[f64], t: f64, r: f64) -> Result<Self> {
        Self::build(Variant::Capsule, start, &[u.to_vec()], &[t], r)
    }

    /// Orthotope core with corner `origin` and edges `t_i u_i`.
    pub fn orthobody(origin: &[f64], dirs: &[Vec<f64>], lengths: &[f64], r: f64) -> Result<Self> {
        Self::build(Variant::Orthobody, origin, dirs, lengths, r)
    }

    fn build(variant: Variant, origin: &[f64], dirs: &[Vec<f64>], lengths: &[f64], r: f64) -> Result<Self> {
        let dim = origin.len();
        if !(2..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid("r must be positive"));
        }
        if origin.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("non-finite coordinate"));
        }
        if dirs.len() != lengths.len() {
            return Err(Error::invalid("need one length per edge direction"));
        }
        if dirs.len() >= dim {
            return Err(Error::invalid(format!(
                "at most {} edge directions in dimension {dim}",
                dim - 1
            )));
        }
        let mut units = Vec::with_capacity(dirs.len());
        for (u, &t) in dirs.iter().zip(lengths) {
            if u.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: u.len(),
                });
            }
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::invalid("edge lengths must be positive"));
            }
            let v = geom::from_slice(u);
            let n = geom::norm(&v);
            if !(n > 0.0 && n.is_finite()) {
                return Err(Error::invalid("edge direction must be nonzero"));
            }
            units.push(geom::scale(&v, 1.0 / n));
        }
        for i in 0..units.len() {
            for j in 0..i {
                if geom::dot(&units[i], &units[j]).abs() > ORTHO_TOL {
                    return Err(Error::invalid("edge directions must be orthogonal"));
                }
            }
        }
        Ok(Phantom {
            dim,
            variant,
            origin: geom::from_slice(origin),
            dirs: units,
            lengths: lengths.to_vec(),
            r,
        })
    }

    /// Centre of the core.
    pub fn center(&self) -> Vec3 {
        self.dirs
            .iter()
            .zip(&self.lengths)
            .fold(self.origin, |c, (u, t)| geom::axpy(&c, 0.5 * t, u))
    }

    /// Nearest point of the core.
    pub fn nearest_core_point(&self, x: &Vec3) -> Vec3 {
        let rel = geom::sub(x, &self.origin);
        self.dirs
            .iter()
            .zip(&self.lengths)
            .fold(self.origin, |c, (u, &t)| {
                geom::axpy(&c, geom::dot(&rel, u).clamp(0.0, t), u)
            })
    }

    pub fn core_distance(&self, x: &Vec3) -> f64 {
        geom::norm(&geom::sub(x, &self.nearest_core_point(x)))
    }

    /// Intrinsic volumes `V_0, …, V_d` from the Steiner formula.
    pub fn intrinsic_volumes(&self) -> Vec<f64> {
        steiner_volumes(self.dim, &self.lengths, self.r)
    }

    /// The body scaled by `factor` about the coordinate origin.
    pub fn scaled(&self, factor: f64) -> Phantom {
        Phantom {
            origin: geom::scale(&self.origin, factor),
            lengths: self.lengths.iter().map(|t| t * factor).collect(),
            r: self.r * factor,
            ..self.clone()
        }
    }

    /// Boundary patches: one per face of the core and choice of normal cone
    /// side, see [`Patch`].
    pub fn boundary_patches(&self) -> Vec<Patch> {
        patches::boundary_patches(self)
    }

    /// `∫_{∂X} f dH^{d-1}` for the vector valued `f`, stratified for a
    /// lattice rotated by `rot`. The tolerance is shared among the patches.
    pub fn surface_integral<F>(&self, rot: &Mat3, m: usize, f: F, opts: &QuadOptions) -> Result<Vec<Estimate>>
    where
        F: Fn(&SurfacePoint, &mut [f64]),
    {
        let patches = self.boundary_patches();
        let local = QuadOptions {
            tol: opts.tol / patches.len() as f64,
            ..*opts
        };
        let mut total = vec![Estimate::exact(0.0); m];
        for p in &patches {
            let part = p.integrate(rot, m, &f, &local)?;
            for (t, e) in total.iter_mut().zip(part) {
                *t = *t + e;
            }
        }
        Ok(total)
    }

    pub fn surface_integral_scalar<F>(&self, rot: &Mat3, f: F, opts: &QuadOptions) -> Result<Estimate>
    where
        F: Fn(&SurfacePoint) -> f64,
    {
        let v = self.surface_integral(rot, 1, |p: &SurfacePoint, out: &mut [f64]| out[0] = f(p), opts)?;
        Ok(v[0])
    }

    /// Faces of the core: for each edge, free or pinned at its low/high end.
    /// Returns (free edge indices, pinned edges with `true` for the high end).
    fn faces(&self) -> Vec<(Vec<usize>, Vec<(usize, bool)>)> {
        let k = self.dirs.len();
        let mut out = Vec::new();
        for code in 0..3usize.pow(k as u32) {
            let mut c = code;
            let mut free = Vec::new();
            let mut pinned = Vec::new();
            for i in 0..k {
                match c % 3 {
                    0 => free.push(i),
                    1 => pinned.push((i, false)),
                    _ => pinned.push((i, true)),
                }
                c /= 3;
            }
            out.push((free, pinned));
        }
        out
    }
}

impl Body for Phantom {
    fn dim(&self) -> usize {
        self.dim
    }

    fn contains(&self, x: &Vec3) -> bool {
        let d = geom::sub(x, &self.nearest_core_point(x));
        geom::dot(&d, &d) <= self.r * self.r
    }

    fn support(&self, n: &Vec3) -> f64 {
        let core: f64 = self
            .dirs
            .iter()
            .zip(&self.lengths)
            .map(|(u, t)| t * geom::dot(u, n).max(0.0))
            .sum();
        geom::dot(&self.origin, n) + core + self.r * geom::norm(n)
    }

    /// Exact: the body is the union over core faces `F` of the sets of points
    /// projecting into `F` within distance `r` of its affine hull. Each piece
    /// meets the line in an interval cut out by linear and one quadratic
    /// constraint, and the union of the pieces is the convex body itself.
    fn line_interval(&self, x0: &Vec3, dir: &Vec3) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (free, pinned) in self.faces() {
            // Corner of the face.
            let base = pinned.iter().fold(self.origin, |c, &(i, high)| {
                if high {
                    geom::axpy(&c, self.lengths[i], &self.dirs[i])
                } else {
                    c
                }
            });
            let rel = geom::sub(x0, &base);
            let mut s_lo = f64::NEG_INFINITY;
            let mut s_hi = f64::INFINITY;
            // Projection onto each free edge stays within [0, t].
            let mut rel_perp = rel;
            let mut dir_perp = *dir;
            for &i in &free {
                let u = &self.dirs[i];
                let (a, b) = (geom::dot(&rel, u), geom::dot(dir, u));
                rel_perp = geom::axpy(&rel_perp, -a, u);
                dir_perp = geom::axpy(&dir_perp, -b, u);
                if !clip_linear(a, b, 0.0, self.lengths[i], &mut s_lo, &mut s_hi) {
                    s_lo = f64::INFINITY;
                    break;
                }
            }
            if s_lo > s_hi {
                continue;
            }
            // |rel_perp + s dir_perp|² ≤ r².
            let qa = geom::dot(&dir_perp, &dir_perp);
            let qb = 2.0 * geom::dot(&rel_perp, &dir_perp);
            let qc = geom::dot(&rel_perp, &rel_perp) - self.r * self.r;
            let (q_lo, q_hi) = if qa < 1e-300 {
                if qc <= 0.0 {
                    (f64::NEG_INFINITY, f64::INFINITY)
                } else {
                    continue;
                }
            } else {
                let disc = qb * qb - 4.0 * qa * qc;
                if disc < 0.0 {
                    continue;
                }
                let sq = disc.sqrt();
                // Stable roots.
                let q = -0.5 * (qb + qb.signum() * sq);
                let (r1, r2) = if q == 0.0 {
                    (0.0, 0.0)
                } else {
                    (q / qa, qc / q)
                };
                (r1.min(r2), r1.max(r2))
            };
            let a = s_lo.max(q_lo);
            let b = s_hi.min(q_hi);
            if a <= b {
                lo = lo.min(a);
                hi = hi.max(b);
            }
        }
        (lo <= hi).then_some((lo, hi))
    }
}

/// Intersects `[s_lo, s_hi]` with `{s : lo ≤ a + b s ≤ hi}`; false if empty.
fn clip_linear(a: f64, b: f64, lo: f64, hi: f64, s_lo: &mut f64, s_hi: &mut f64) -> bool {
    if b.abs() < 1e-300 {
        return (lo..=hi).contains(&a);
    }
    let (x, y) = ((lo - a) / b, (hi - a) / b);
    *s_lo = s_lo.max(x.min(y));
    *s_hi = s_hi.min(x.max(y));
    *s_lo <= *s_hi
}

/// Elementary symmetric polynomials `e_0, …, e_n` of `t`.
fn elementary_symmetric(t: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; t.len() + 1];
    e[0] = 1.0;
    for (k, &x) in t.iter().enumerate() {
        for m in (1..=k + 1).rev() {
            e[m] += x * e[m - 1];
        }
    }
    e
}

/// Intrinsic volumes of `P ⊕ B(r)` in R^d for an orthotope `P` with edge
/// lengths `t`: `V_j = Σ_{m≤j} C(d−m, j−m) κ_{d−m}/κ_{d−j} r^{j−m} V_m(P)`.
pub fn steiner_volumes(d: usize, t: &[f64], r: f64) -> Vec<f64> {
    let vp = elementary_symmetric(t);
    (0..=d)
        .map(|j| {
            (0..=j.min(t.len()))
                .map(|m| {
                    geom::binomial(d - m, j - m) * geom::unit_ball_volume(d - m)
                        / geom::unit_ball_volume(d - j)
                        * r.powi((j - m) as i32)
                        * vp[m]
                })
                .sum()
        })
        .collect()
}

/// JSON description of a phantom.
///
/// `center` is the centre of the core; `u` and `t` list the edge directions
/// and lengths (a single direction or length may be given bare).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PhantomSpec {
    pub variant: Variant,
    pub r: f64,
    pub center: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<OneOrMany<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<OneOrMany<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

impl PhantomSpec {
    pub fn build(&self) -> Result<Phantom> {
        let dirs = self.u.as_ref().map(OneOrMany::to_vec).unwrap_or_default();
        let lengths = self.t.as_ref().map(OneOrMany::to_vec).unwrap_or_default();
        match self.variant {
            Variant::Ball if !dirs.is_empty() || !lengths.is_empty() => {
                return Err(Error::invalid("a ball takes no u or t"))
            }
            Variant::Capsule if dirs.len() != 1 || lengths.len() != 1 => {
                return Err(Error::invalid("a capsule takes one u and one t"))
            }
            _ => {}
        }
        let mut p = Phantom::build(self.variant, &self.center, &dirs, &lengths, self.r)?;
        let shift = p
            .dirs
            .iter()
            .zip(&p.lengths)
            .fold(geom::ZERO, |c, (u, t)| geom::axpy(&c, -0.5 * t, u));
        p.origin = geom::add(&p.origin, &shift);
        Ok(p)
    }

    pub fn from_phantom(p: &Phantom) -> Self {
        let center = p.center()[..p.dim].to_vec();
        let dirs: Vec<Vec<f64>> = p.dirs.iter().map(|u| u[..p.dim].to_vec()).collect();
        let (u, t) = if dirs.is_empty() {
            (None, None)
        } else {
            (Some(OneOrMany::Many(dirs)), Some(OneOrMany::Many(p.lengths.clone())))
        };
        PhantomSpec {
            variant: p.variant,
            r: p.r,
            center,
            u,
            t,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn membership() {
        let b = Phantom::ball(&[0.0, 0.0, 0.0], 2.0).unwrap();
        assert!(b.contains(&[0.0; 3]));
        assert!(b.contains(&[2.0, 0.0, 0.0]));
        assert!(!b.contains(&[2.0 + 1e-12, 0.0, 0.0]));
        let c = Phantom::capsule(&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], 3.0, 1.0).unwrap();
        assert!(!c.contains(&[4.0 + 1e-9, 0.0, 0.0]));
        assert!(c.contains(&[4.0, 0.0, 0.0]));
        assert!(c.contains(&[1.5, 1.0, 0.0]));
    }

    #[test]
    fn validation() {
        assert!(Phantom::ball(&[0.0, 0.0], -1.0).is_err());
        assert!(Phantom::ball(&[0.0], 1.0).is_err());
        assert!(Phantom::capsule(&[0.0, 0.0], &[0.0, 0.0], 1.0, 1.0).is_err());
        assert!(Phantom::capsule(&[0.0, 0.0], &[1.0, 0.0], 0.0, 1.0).is_err());
        assert!(Phantom::orthobody(&[0.0; 3], &[vec![1.0, 0.0, 0.0], vec![1.0, 1.0, 0.0]], &[1.0, 1.0], 1.0).is_err());
        assert!(Phantom::orthobody(&[0.0, 0.0], &[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn steiner_examples() {
        let b = Phantom::ball(&[0.0; 3], 1.5).unwrap().intrinsic_volumes();
        assert!((b[0] - 1.0).abs() < 1e-15);
        assert!((b[1] - 6.0).abs() < 1e-14);
        assert!((b[2] - 2.0 * PI * 2.25).abs() < 1e-12);
        assert!((b[3] - 4.0 / 3.0 * PI * 1.5f64.powi(3)).abs() < 1e-12);
        let c = Phantom::capsule(&[0.0; 3], &[0.0, 0.0, 1.0], 2.0, 1.0).unwrap().intrinsic_volumes();
        assert!((c[1] - 6.0).abs() < 1e-14);
        assert!((c[2] - (2.0 * PI + PI * 2.0)).abs() < 1e-12);
        let d2 = Phantom::capsule(&[0.0, 0.0], &[1.0, 0.0], 2.0, 1.0).unwrap().intrinsic_volumes();
        assert!((d2[0] - 1.0).abs() < 1e-15);
        assert!((d2[1] - (PI + 2.0)).abs() < 1e-14);
        assert!((d2[2] - (PI + 4.0)).abs() < 1e-14);
    }

    #[test]
    fn support_function() {
        let c = Phantom::capsule(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0], 2.0, 0.5).unwrap();
        assert!((c.support(&[1.0, 0.0, 0.0]) - 3.5).abs() < 1e-15);
        assert!((c.support(&[-1.0, 0.0, 0.0]) + 0.5).abs() < 1e-15);
        assert!((c.support(&[0.0, 1.0, 0.0]) - 0.5).abs() < 1e-15);
    }

    fn brute_interval(p: &Phantom, x0: &Vec3, dir: &Vec3) -> Option<(f64, f64)> {
        let n = 200_000;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..=n {
            let s = -10.0 + 20.0 * i as f64 / n as f64;
            if p.contains(&geom::axpy(x0, s, dir)) {
                lo = lo.min(s);
                hi = hi.max(s);
            }
        }
        (lo <= hi).then_some((lo, hi))
    }

    #[test]
    fn line_intervals_match_sampling() {
        let plate = Phantom::orthobody(
            &[-1.0, -0.5, 0.0],
            &[vec![1.0, 1.0, 0.0], vec![-1.0, 1.0, 0.5]],
            &[2.0, 1.0],
            0.7,
        )
        .unwrap();
        let bodies = [
            Phantom::ball(&[0.2, -0.1, 0.3], 1.3).unwrap(),
            Phantom::capsule(&[-1.0, 0.0, 0.5], &[1.0, 2.0, -0.5], 2.5, 0.8).unwrap(),
            plate,
            Phantom::capsule(&[-1.0, 0.3], &[0.6, 0.8], 2.0, 0.6).unwrap(),
        ];
        let lines = [
            ([0.0, 0.0, -5.0], [0.0, 0.0, 1.0]),
            ([0.3, -0.2, 0.1], [0.3, 0.4, 0.1]),
            ([-3.0, 0.9, 0.0], [1.0, 0.0, 0.0]),
            ([0.0, 5.0, 5.0], [0.0, 0.0, 1.0]),
        ];
        for b in &bodies {
            for (x0, dir) in &lines {
                let mut x0 = *x0;
                let mut dir = *dir;
                if b.dim == 2 {
                    x0[2] = 0.0;
                    dir[2] = 0.0;
                    if geom::norm(&dir) == 0.0 {
                        dir = [0.0, 1.0, 0.0];
                    }
                }
                let exact = b.line_interval(&x0, &dir);
                let brute = brute_interval(b, &x0, &dir);
                match (exact, brute) {
                    (Some(e), Some(s)) => {
                        assert!((e.0 - s.0).abs() < 2e-4 && (e.1 - s.1).abs() < 2e-4, "{e:?} {s:?}");
                        assert!(b.contains(&geom::axpy(&x0, e.0 + 1e-9, &dir)));
                        assert!(!b.contains(&geom::axpy(&x0, e.1 + 1e-9, &dir)));
                    }
                    (None, None) => {}
                    (e, s) => {
                        // Sampling may miss a tangential graze.
                        let len = e.map(|e| e.1 - e.0).unwrap_or(0.0);
                        assert!(len < 2e-4 && s.is_none(), "{e:?} {s:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn spec_round_trip() {
        let json = r#"{"variant":"capsule","r":1.0,"center":[0,0,0],"u":[0,0,1],"t":4}"#;
        let spec: PhantomSpec = serde_json::from_str(json).unwrap();
        let p = spec.build().unwrap();
        assert!((p.origin[2] + 2.0).abs() < 1e-15);
        assert!(p.contains(&[0.0, 0.0, 3.0]));
        let back = PhantomSpec::from_phantom(&p).build().unwrap();
        assert_eq!(back, p);
        let bad: PhantomSpec = serde_json::from_str(r#"{"variant":"ball","r":1,"center":[0,0],"t":2}"#).unwrap();
        assert!(bad.build().is_err());
    }
}
