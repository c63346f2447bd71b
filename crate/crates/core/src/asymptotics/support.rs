//! Support functions of finite point sets and the curvature forms evaluated
//! at extremal support points.
//!
//! Throughout, `B` and `W` are the black and white vertices of a
//! configuration (scaled and posed as needed) and `n` is an outward unit
//! normal of the observed set.

use crate::configs::{vertex_count, vertex_point};
use crate::geom::{self, Vec3};
use crate::phantoms::SurfacePoint;
use crate::sphere::{mat_vec, Mat3};

/// Tolerance for ties between support values of cell vertices.
pub const TIE_TOL: f64 = 1e-12;

/// `h(S, n) = max_s ⟨s, n⟩`.
pub fn support(s: &[Vec3], n: &Vec3) -> f64 {
    s.iter().map(|p| geom::dot(p, n)).fold(f64::NEG_INFINITY, f64::max)
}

/// `min_s ⟨s, n⟩ = −h(Š, n)`.
pub fn lower_support(s: &[Vec3], n: &Vec3) -> f64 {
    s.iter().map(|p| geom::dot(p, n)).fold(f64::INFINITY, f64::min)
}

/// Indices of `S₊(n)`, the points attaining `h(S, n)` up to `tol`.
pub fn upper_set(s: &[Vec3], n: &Vec3, tol: f64) -> Vec<usize> {
    let h = support(s, n);
    (0..s.len()).filter(|&i| geom::dot(&s[i], n) >= h - tol).collect()
}

/// Indices of `S₋(n)`, the points attaining `min_s ⟨s, n⟩` up to `tol`.
pub fn lower_set(s: &[Vec3], n: &Vec3, tol: f64) -> Vec<usize> {
    let m = lower_support(s, n);
    (0..s.len()).filter(|&i| geom::dot(&s[i], n) <= m + tol).collect()
}

/// The unique point of `S₊(n)`, or `None` when `n` lies in the degenerate
/// set where the maximum is attained more than once.
pub fn p_plus(s: &[Vec3], n: &Vec3) -> Option<Vec3> {
    match upper_set(s, n, TIE_TOL).as_slice() {
        [i] => Some(s[*i]),
        _ => None,
    }
}

/// The unique point of `S₋(n)`, or `None` on the degenerate set.
pub fn p_minus(s: &[Vec3], n: &Vec3) -> Option<Vec3> {
    match lower_set(s, n, TIE_TOL).as_slice() {
        [i] => Some(s[*i]),
        _ => None,
    }
}

/// `δ_{(B,W)}(n) = 1{h(B ⊕ W̌, n) < 0}`, i.e. `max_b ⟨b,n⟩ < min_w ⟨w,n⟩`.
pub fn delta(b: &[Vec3], w: &[Vec3], n: &Vec3) -> bool {
    support(b, n) < lower_support(w, n)
}

/// `δ` with the strict inequality required to hold by more than `tol`, so
/// that directions in the degenerate set count as unseparated.
pub fn delta_tol(b: &[Vec3], w: &[Vec3], n: &Vec3, tol: f64) -> bool {
    lower_support(w, n) - support(b, n) > tol
}

/// `(−h(B ⊕ W̌, n))⁺`, the first-order hit-or-miss density.
pub fn first_order_density(b: &[Vec3], w: &[Vec3], n: &Vec3) -> f64 {
    (lower_support(w, n) - support(b, n)).max(0.0)
}

/// `II⁺(B)`: the largest second fundamental form over `B₊(n)`.
pub fn second_form_plus(sp: &SurfacePoint, b: &[Vec3]) -> f64 {
    upper_set(b, &sp.n, TIE_TOL)
        .into_iter()
        .map(|i| sp.second_form(&b[i]))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `II⁻(W)`: the smallest second fundamental form over `W₋(n)`.
pub fn second_form_minus(sp: &SurfacePoint, w: &[Vec3]) -> f64 {
    lower_set(w, &sp.n, TIE_TOL)
        .into_iter()
        .map(|i| sp.second_form(&w[i]))
        .fold(f64::INFINITY, f64::min)
}

/// `Q⁺(B) = Q(s⁺)` with `s⁺ ∈ B₊(n)` maximizing `II`.
pub fn q_plus(sp: &SurfacePoint, b: &[Vec3]) -> f64 {
    -second_form_plus(sp, b) + sp.trace() * support(b, &sp.n).powi(2)
}

/// `Q⁻(W) = Q(s⁻)` with `s⁻ ∈ W₋(n)` minimizing `II`.
pub fn q_minus(sp: &SurfacePoint, w: &[Vec3]) -> f64 {
    -second_form_minus(sp, w) + sp.trace() * lower_support(w, &sp.n).powi(2)
}

/// `½ (Q⁺(B) − Q⁻(W)) δ_{(B,W)}(n)`, the second-order density.
pub fn second_order_density(sp: &SurfacePoint, b: &[Vec3], w: &[Vec3]) -> f64 {
    if delta_tol(b, w, &sp.n, TIE_TOL) {
        0.5 * (q_plus(sp, b) - q_minus(sp, w))
    } else {
        0.0
    }
}

/// `½ (II⁻(W) − II⁺(B))⁺ 1{h(B ⊕ W̌, n) = 0}`, the contribution of normals
/// at which black and white touch the same supporting plane.
pub fn tie_density(sp: &SurfacePoint, b: &[Vec3], w: &[Vec3]) -> f64 {
    let gap = lower_support(w, &sp.n) - support(b, &sp.n);
    if gap.abs() <= TIE_TOL {
        0.5 * (second_form_minus(sp, w) - second_form_plus(sp, b)).max(0.0)
    } else {
        0.0
    }
}

/// Vertices of the unit cell `R·{0,1}^d`, scaled by `a`.
#[derive(Debug, Clone)]
pub struct CellVertices {
    pub dim: usize,
    pub points: Vec<Vec3>,
}

impl CellVertices {
    pub fn new(dim: usize, rot: &Mat3, a: f64) -> Self {
        let points = (0..vertex_count(dim))
            .map(|i| geom::scale(&mat_vec(rot, &vertex_point(i)), a))
            .collect();
        CellVertices { dim, points }
    }

    pub fn unit(dim: usize) -> Self {
        Self::new(dim, &crate::sphere::IDENTITY, 1.0)
    }

    /// Black and white vertex sets of configuration `l`.
    pub fn split(&self, l: u64) -> (Vec<Vec3>, Vec<Vec3>) {
        let mut b = Vec::new();
        let mut w = Vec::new();
        for (i, p) in self.points.iter().enumerate() {
            if (l >> i) & 1 == 1 {
                b.push(*p);
            } else {
                w.push(*p);
            }
        }
        (b, w)
    }
}
