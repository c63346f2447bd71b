//! Boundary of `P ⊕ B(r)` split into smooth pieces.
//!
//! A face `F` of the orthotope core together with the part of its normal
//! cone on the unit sphere gives the patch `F + r·(normal cone ∩ S^{d-1})`.
//! Depending on the face dimension the patch is a piece of a sphere, a piece
//! of a circular cylinder, or a flat copy of the face.

use super::Phantom;
use crate::error::Result;
use crate::geom::{self, Vec3, ZERO};
use crate::quadrature::{self, Estimate, Interval, QuadOptions, Rect};
use crate::sphere::{self, GreatCircle, Mat3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchKind {
    SphericalCap,
    Cylinder,
    Flat,
}

/// A boundary point with its outward normal and second fundamental form.
#[derive(Debug, Clone, Copy)]
pub struct SurfacePoint {
    pub x: Vec3,
    pub n: Vec3,
    /// Principal directions (unused slots are zero).
    pub dirs: [Vec3; 2],
    /// Principal curvatures matching `dirs`.
    pub kappa: [f64; 2],
}

impl SurfacePoint {
    /// `II(s) = Σ k_i ⟨s, e_i⟩²`.
    pub fn second_form(&self, s: &Vec3) -> f64 {
        self.dirs
            .iter()
            .zip(&self.kappa)
            .map(|(e, k)| k * geom::dot(s, e).powi(2))
            .sum()
    }

    pub fn trace(&self) -> f64 {
        self.kappa.iter().sum()
    }

    /// `Q(s) = −II(s) + tr(II)·⟨s, n⟩²`.
    pub fn q_form(&self, s: &Vec3) -> f64 {
        -self.second_form(s) + self.trace() * geom::dot(s, &self.n).powi(2)
    }

    pub fn mean_curvature_sum(&self) -> f64 {
        self.trace()
    }
}

#[derive(Debug, Clone)]
pub struct Patch {
    pub kind: PatchKind,
    pub dim: usize,
    /// Corner of the core face.
    pub base: Vec3,
    /// Edges spanning the core face.
    pub face: Vec<(Vec3, f64)>,
    /// Normal cone: every normal satisfies `⟨n, c⟩ ≥ 0`.
    pub constraints: Vec<Vec3>,
    /// The constant normal of a flat patch.
    pub normal: Option<Vec3>,
    pub r: f64,
}

pub(super) fn boundary_patches(ph: &Phantom) -> Vec<Patch> {
    let d = ph.dim;
    let mut out = Vec::new();
    for (free, pinned) in ph.faces() {
        let base = pinned.iter().fold(ph.origin, |c, &(i, high)| {
            if high {
                geom::axpy(&c, ph.lengths[i], &ph.dirs[i])
            } else {
                c
            }
        });
        let face: Vec<(Vec3, f64)> = free.iter().map(|&i| (ph.dirs[i], ph.lengths[i])).collect();
        let constraints: Vec<Vec3> = pinned
            .iter()
            .map(|&(i, high)| {
                if high {
                    ph.dirs[i]
                } else {
                    geom::scale(&ph.dirs[i], -1.0)
                }
            })
            .collect();
        let patch = |kind, normal| Patch {
            kind,
            dim: d,
            base,
            face: face.clone(),
            constraints: constraints.clone(),
            normal,
            r: ph.r,
        };
        if free.len() == d - 1 {
            let n0 = if d == 2 {
                let u = face[0].0;
                [-u[1], u[0], 0.0]
            } else {
                geom::normalize(&geom::cross(&face[0].0, &face[1].0))
            };
            out.push(patch(PatchKind::Flat, Some(n0)));
            out.push(patch(PatchKind::Flat, Some(geom::scale(&n0, -1.0))));
        } else if free.is_empty() {
            out.push(patch(PatchKind::SphericalCap, None));
        } else {
            out.push(patch(PatchKind::Cylinder, None));
        }
    }
    out
}

fn rotated_splits(d: usize, rot: &Mat3) -> Vec<Vec3> {
    sphere::difference_directions(d)
        .iter()
        .map(|v| sphere::mat_vec(rot, v))
        .collect()
}

impl Patch {
    /// `∫_patch f dH^{d-1}`, stratified so that every configuration
    /// integrand for a lattice rotated by `rot` is smooth on each cell.
    pub fn integrate<F>(&self, rot: &Mat3, m: usize, f: &F, opts: &QuadOptions) -> Result<Vec<Estimate>>
    where
        F: Fn(&SurfacePoint, &mut [f64]),
    {
        let r = self.r;
        match (self.kind, self.dim) {
            (PatchKind::SphericalCap, 3) => {
                let cells = sphere::sphere_cells(rot, &self.constraints);
                quadrature::adaptive(
                    cells,
                    m,
                    |n: &Vec3, out: &mut [f64]| {
                        let (e, g) = geom::orthonormal_complement(n);
                        let sp = SurfacePoint {
                            x: geom::axpy(&self.base, r, n),
                            n: *n,
                            dirs: [e, g],
                            kappa: [1.0 / r, 1.0 / r],
                        };
                        f(&sp, out);
                        out.iter_mut().for_each(|v| *v *= r * r);
                    },
                    opts,
                )
            }
            (PatchKind::SphericalCap, _) => {
                let circle = GreatCircle::PLANE;
                let arcs = circle.arcs(&rotated_splits(2, rot), &self.constraints);
                quadrature::adaptive(
                    arcs,
                    m,
                    |t: &f64, out: &mut [f64]| {
                        let n = circle.at(*t);
                        let sp = SurfacePoint {
                            x: geom::axpy(&self.base, r, &n),
                            n,
                            dirs: [[-n[1], n[0], 0.0], ZERO],
                            kappa: [1.0 / r, 0.0],
                        };
                        f(&sp, out);
                        out.iter_mut().for_each(|v| *v *= r);
                    },
                    opts,
                )
            }
            (PatchKind::Cylinder, _) => {
                let (u, t) = self.face[0];
                let (e, g) = geom::orthonormal_complement(&u);
                let circle = GreatCircle { e, f: g };
                let rects: Vec<Rect> = circle
                    .arcs(&rotated_splits(3, rot), &self.constraints)
                    .into_iter()
                    .map(|a| Rect {
                        x: [0.0, t],
                        y: [a.lo, a.hi],
                    })
                    .collect();
                quadrature::adaptive(
                    rects,
                    m,
                    |p: &[f64; 2], out: &mut [f64]| {
                        let n = circle.at(p[1]);
                        let sp = SurfacePoint {
                            x: geom::axpy(&geom::axpy(&self.base, p[0], &u), r, &n),
                            n,
                            dirs: [u, geom::cross(&u, &n)],
                            kappa: [0.0, 1.0 / r],
                        };
                        f(&sp, out);
                        out.iter_mut().for_each(|v| *v *= r);
                    },
                    opts,
                )
            }
            (PatchKind::Flat, _) => {
                let n = self.normal.expect("flat patches carry a normal");
                let lift = geom::axpy(&self.base, r, &n);
                if self.dim == 2 {
                    let (u, t) = self.face[0];
                    quadrature::adaptive(
                        vec![Interval { lo: 0.0, hi: t }],
                        m,
                        |s: &f64, out: &mut [f64]| {
                            let sp = SurfacePoint {
                                x: geom::axpy(&lift, *s, &u),
                                n,
                                dirs: [u, ZERO],
                                kappa: [0.0, 0.0],
                            };
                            f(&sp, out);
                        },
                        opts,
                    )
                } else {
                    let (u1, t1) = self.face[0];
                    let (u2, t2) = self.face[1];
                    quadrature::adaptive(
                        vec![Rect {
                            x: [0.0, t1],
                            y: [0.0, t2],
                        }],
                        m,
                        |p: &[f64; 2], out: &mut [f64]| {
                            let sp = SurfacePoint {
                                x: geom::axpy(&geom::axpy(&lift, p[0], &u1), p[1], &u2),
                                n,
                                dirs: [u1, u2],
                                kappa: [0.0, 0.0],
                            };
                            f(&sp, out);
                        },
                        opts,
                    )
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantoms::Body;
    use crate::sphere::IDENTITY;
    use std::f64::consts::PI;

    fn opts() -> QuadOptions {
        QuadOptions::with_tol(1e-9)
    }

    fn area(p: &Phantom) -> f64 {
        p.surface_integral_scalar(&IDENTITY, |_| 1.0, &opts()).unwrap().value
    }

    fn sample_bodies() -> Vec<Phantom> {
        vec![
            Phantom::ball(&[0.1, 0.2, 0.3], 1.5).unwrap(),
            Phantom::capsule(&[0.0; 3], &[1.0, 1.0, 1.0], 2.0, 0.7).unwrap(),
            Phantom::orthobody(&[0.0; 3], &[vec![1.0, 0.0, 0.0], vec![0.0, 0.6, 0.8]], &[1.5, 0.5], 0.4).unwrap(),
            Phantom::ball(&[0.0, 0.0], 1.2).unwrap(),
            Phantom::capsule(&[0.0, 0.0], &[0.6, 0.8], 2.0, 0.5).unwrap(),
        ]
    }

    #[test]
    fn patch_counts_and_areas() {
        let ball = Phantom::ball(&[0.0; 3], 2.0).unwrap();
        assert_eq!(ball.boundary_patches().len(), 1);
        assert!((area(&ball) - 16.0 * PI).abs() < 1e-8);
        let cap = Phantom::capsule(&[0.0; 3], &[0.0, 0.0, 1.0], 3.0, 1.0).unwrap();
        let patches = cap.boundary_patches();
        assert_eq!(patches.len(), 3);
        let cyl = patches.iter().find(|p| p.kind == PatchKind::Cylinder).unwrap();
        let a = cyl
            .integrate(&IDENTITY, 1, &|_: &SurfacePoint, o: &mut [f64]| o[0] = 1.0, &opts())
            .unwrap();
        assert!((a[0].value - 6.0 * PI).abs() < 1e-9);
        let plate = Phantom::orthobody(&[0.0; 3], &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]], &[1.0, 2.0], 0.5).unwrap();
        let kinds = plate.boundary_patches();
        assert_eq!(kinds.iter().filter(|p| p.kind == PatchKind::SphericalCap).count(), 4);
        assert_eq!(kinds.iter().filter(|p| p.kind == PatchKind::Cylinder).count(), 4);
        assert_eq!(kinds.iter().filter(|p| p.kind == PatchKind::Flat).count(), 2);
    }

    #[test]
    fn steiner_consistency() {
        for p in sample_bodies() {
            let v = p.intrinsic_volumes();
            let d = p.dim;
            assert!((area(&p) - 2.0 * v[d - 1]).abs() < 1e-7, "{p:?}");
            let h = p
                .surface_integral_scalar(&IDENTITY, |sp| sp.mean_curvature_sum(), &opts())
                .unwrap()
                .value;
            // ∫ Σk_i = 2π V_{d-2} in d = 3 and 2π V_0 in d = 2.
            assert!((h / (2.0 * PI) - v[d - 2]).abs() < 1e-7, "{p:?}");
        }
    }

    #[test]
    fn points_lie_on_the_boundary() {
        for p in sample_bodies() {
            let worst = p
                .surface_integral(
                    &IDENTITY,
                    2,
                    |sp, o| {
                        o[0] = (p.core_distance(&sp.x) - p.r).abs();
                        // Inner and outer tangent balls.
                        let inner = geom::axpy(&sp.x, -p.r, &sp.n);
                        let outer = geom::axpy(&sp.x, p.r, &sp.n);
                        o[1] = p.core_distance(&inner) + (p.core_distance(&outer) - 2.0 * p.r).abs();
                        assert!(p.contains(&inner));
                        assert!((geom::norm(&sp.n) - 1.0).abs() < 1e-12);
                        assert!(sp.kappa.iter().all(|k| (0.0..=1.0 / p.r + 1e-12).contains(k)));
                    },
                    &opts(),
                )
                .unwrap();
            assert!(worst[0].value.abs() < 1e-9 && worst[1].value.abs() < 1e-9);
        }
    }

    #[test]
    fn cylinder_form() {
        // On the cylinder, Q(s) = (⟨s,n⟩² − ⟨s,u×n⟩²)/r.
        let cap = Phantom::capsule(&[0.0; 3], &[0.0, 0.6, 0.8], 1.0, 0.5).unwrap();
        let s = [0.3, -1.0, 0.4];
        cap.surface_integral(
            &IDENTITY,
            1,
            |sp, o| {
                o[0] = 0.0;
                if sp.kappa[0] == 0.0 && sp.kappa[1] > 0.0 {
                    let u = [0.0, 0.6, 0.8];
                    let want = (geom::dot(&s, &sp.n).powi(2) - geom::dot(&s, &geom::cross(&u, &sp.n)).powi(2)) / 0.5;
                    assert!((sp.q_form(&s) - want).abs() < 1e-12);
                }
            },
            &opts(),
        )
        .unwrap();
    }
}
