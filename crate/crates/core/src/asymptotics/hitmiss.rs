//! Direct evaluation of hit-or-miss volumes
//! `|{z : z + aB ⊆ X, z + aW ⊆ X^c}|`.
//!
//! For a uniformly translated lattice this volume equals `a^d E N_l`, so it
//! is an exact finite-`a` reference for the configuration counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::phantoms::{Body, Phantom};
use crate::sphere::{mat_vec, Mat3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HitMissMethod {
    /// Exact along lines parallel to the last axis, randomly shifted
    /// midpoint grids across.
    Grid,
    /// Uniform points in a bounding box.
    MonteCarlo,
}

#[derive(Debug, Clone, Copy)]
pub struct HitMissBudget {
    /// Requested absolute error bound.
    pub target: f64,
    /// Grid: maximal number of lines; Monte Carlo: maximal number of points.
    pub max_evals: u64,
    pub seed: u64,
}

impl Default for HitMissBudget {
    fn default() -> Self {
        HitMissBudget {
            target: 1e-6,
            max_evals: 50_000_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HitMissResult {
    pub value: f64,
    /// Three standard errors over the shifted grids (grid) or the sample
    /// points (Monte Carlo).
    pub error: f64,
    pub evals: u64,
}

/// Radius of the smallest origin-centred ball containing the points.
fn radius(points: &[Vec3]) -> f64 {
    points.iter().map(geom::norm).fold(0.0, f64::max)
}

/// Hit-or-miss volume of `(B, W)` (unit-cell coordinates, posed by `rot`
/// and scaled by `a`) against `X`.
pub fn hit_or_miss_volume(
    body: &Phantom,
    black: &[Vec3],
    white: &[Vec3],
    a: f64,
    rot: &Mat3,
    method: HitMissMethod,
    budget: &HitMissBudget,
) -> Result<HitMissResult> {
    if black.is_empty() || white.is_empty() {
        return Err(Error::invalid("hit-or-miss needs non-empty black and white sets"));
    }
    if !(a > 0.0) {
        return Err(Error::invalid("spacing must be positive"));
    }
    let b: Vec<Vec3> = black.iter().map(|p| geom::scale(&mat_vec(rot, p), a)).collect();
    let w: Vec<Vec3> = white.iter().map(|p| geom::scale(&mat_vec(rot, p), a)).collect();
    let all: Vec<Vec3> = b.iter().chain(&w).copied().collect();
    if radius(&all) >= body.r {
        return Err(Error::invalid(format!(
            "a·ρ(B∪W) = {} is not below r = {}",
            radius(&all),
            body.r
        )));
    }
    let d = body.dim;
    // z + b₀ ∈ X confines z to the bounding box of X shifted by −b₀.
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    for k in 0..d {
        let mut e = [0.0; 3];
        e[k] = 1.0;
        hi[k] = body.support(&e) - b[0][k];
        e[k] = -1.0;
        lo[k] = -body.support(&e) - b[0][k];
    }
    match method {
        HitMissMethod::Grid => grid(body, &b, &w, d, &lo, &hi, budget),
        HitMissMethod::MonteCarlo => monte_carlo(body, &b, &w, d, &lo, &hi, budget),
    }
}

/// Length of `{s : z(s) + b ∈ X ∀b, z(s) + w ∉ X ∀w}` along the line
/// `z(s) = x0 + s e_{d-1}`.
fn line_length(body: &Phantom, b: &[Vec3], w: &[Vec3], x0: &Vec3, dir: &Vec3) -> f64 {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for p in b {
        match body.line_interval(&geom::add(x0, p), dir) {
            Some((l, h)) => {
                lo = lo.max(l);
                hi = hi.min(h);
            }
            None => return 0.0,
        }
        if lo >= hi {
            return 0.0;
        }
    }
    let mut holes: Vec<(f64, f64)> = w
        .iter()
        .filter_map(|p| body.line_interval(&geom::add(x0, p), dir))
        .map(|(l, h)| (l.max(lo), h.min(hi)))
        .filter(|(l, h)| l < h)
        .collect();
    holes.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut covered = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (l, h) in holes {
        match cur {
            Some((cl, ch)) if l <= ch => cur = Some((cl, ch.max(h))),
            Some((cl, ch)) => {
                covered += ch - cl;
                cur = Some((l, h));
            }
            None => cur = Some((l, h)),
        }
    }
    if let Some((cl, ch)) = cur {
        covered += ch - cl;
    }
    (hi - lo - covered).max(0.0)
}

/// Midpoint-type rule with `n` lines per transversal axis, the grid offset
/// by `shift` cells.
#[allow(clippy::too_many_arguments)]
fn grid_sum(
    body: &Phantom,
    b: &[Vec3],
    w: &[Vec3],
    d: usize,
    lo: &[f64; 3],
    hi: &[f64; 3],
    n: usize,
    shift: [f64; 2],
) -> f64 {
    let axis = d - 1;
    let mut dir = [0.0; 3];
    dir[axis] = 1.0;
    let hx = (hi[0] - lo[0]) / n as f64;
    if d == 2 {
        let rows: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let x0 = [lo[0] + (i as f64 + shift[0]) * hx, 0.0, 0.0];
                line_length(body, b, w, &x0, &dir)
            })
            .collect();
        rows.iter().sum::<f64>() * hx
    } else {
        let hy = (hi[1] - lo[1]) / n as f64;
        let rows: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let x = lo[0] + (i as f64 + shift[0]) * hx;
                (0..n)
                    .map(|j| {
                        let x0 = [x, lo[1] + (j as f64 + shift[1]) * hy, 0.0];
                        line_length(body, b, w, &x0, &dir)
                    })
                    .sum::<f64>()
            })
            .collect();
        rows.iter().sum::<f64>() * hx * hy
    }
}

/// Number of randomly shifted copies of the grid per refinement level.
const GRID_SHIFTS: usize = 8;

/// Randomly shifted grids: each shifted rule is an unbiased estimate, and the
/// spread over the shifts gives the error bound. Refines until it is met.
fn grid(
    body: &Phantom,
    b: &[Vec3],
    w: &[Vec3],
    d: usize,
    lo: &[f64; 3],
    hi: &[f64; 3],
    budget: &HitMissBudget,
) -> Result<HitMissResult> {
    let lines = |n: usize| (n as u64).pow((d - 1) as u32) * GRID_SHIFTS as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut n = 64usize;
    let mut evals = 0u64;
    let mut best: Option<(f64, f64)> = None;
    loop {
        if evals + lines(n) > budget.max_evals {
            let (estimate, error) = best.unwrap_or((f64::NAN, f64::INFINITY));
            return Err(Error::Budget {
                estimate,
                error,
                target: budget.target,
            });
        }
        let est: Vec<f64> = (0..GRID_SHIFTS)
            .map(|_| {
                let shift = [rng.gen::<f64>(), rng.gen::<f64>()];
                grid_sum(body, b, w, d, lo, hi, n, shift)
            })
            .collect();
        evals += lines(n);
        let k = GRID_SHIFTS as f64;
        let mean = est.iter().sum::<f64>() / k;
        let var = est.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1.0);
        let error = 3.0 * (var / k).sqrt();
        if error <= budget.target {
            return Ok(HitMissResult {
                value: mean,
                error,
                evals,
            });
        }
        best = Some((mean, error));
        n *= 2;
    }
}

fn monte_carlo(
    body: &Phantom,
    b: &[Vec3],
    w: &[Vec3],
    d: usize,
    lo: &[f64; 3],
    hi: &[f64; 3],
    budget: &HitMissBudget,
) -> Result<HitMissResult> {
    let volume: f64 = (0..d).map(|k| hi[k] - lo[k]).product();
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let batch = 100_000u64;
    let mut hits = 0u64;
    let mut total = 0u64;
    loop {
        for _ in 0..batch {
            let mut z = [0.0; 3];
            for k in 0..d {
                z[k] = rng.gen_range(lo[k]..hi[k]);
            }
            let hit = b.iter().all(|p| body.contains(&geom::add(&z, p)))
                && w.iter().all(|p| !body.contains(&geom::add(&z, p)));
            hits += hit as u64;
        }
        total += batch;
        let p = hits as f64 / total as f64;
        let value = p * volume;
        // Standard error, floored by the one-hit resolution.
        let se = ((p * (1.0 - p)).max(1.0 / total as f64) / total as f64).sqrt() * volume;
        let error = 3.0 * se;
        if error <= budget.target {
            return Ok(HitMissResult {
                value,
                error,
                evals: total,
            });
        }
        if total + batch > budget.max_evals {
            return Err(Error::Budget {
                estimate: value,
                error,
                target: budget.target,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::support::CellVertices;
    use crate::sphere::IDENTITY;

    #[test]
    fn preconditions() {
        let ball = Phantom::ball(&[0.0; 3], 1.0).unwrap();
        let cell = CellVertices::unit(3);
        let (b, _) = cell.split(1);
        let budget = HitMissBudget::default();
        assert!(hit_or_miss_volume(&ball, &b, &[], 0.01, &IDENTITY, HitMissMethod::Grid, &budget).is_err());
        let (b, w) = cell.split(1);
        assert!(hit_or_miss_volume(&ball, &b, &w, 0.9, &IDENTITY, HitMissMethod::Grid, &budget).is_err());
    }

    #[test]
    fn single_white_point_is_a_set_difference() {
        // B = {0}, W = {v}: the volume is |X \ (X − v)|, the disc minus a lens.
        let r = 1.0;
        let disc = Phantom::ball(&[0.0, 0.0], r).unwrap();
        let a = 0.1;
        let b = [[0.0; 3]];
        let w = [[1.0, 0.0, 0.0]];
        let budget = HitMissBudget {
            target: 1e-7,
            ..Default::default()
        };
        let g = hit_or_miss_volume(&disc, &b, &w, a, &IDENTITY, HitMissMethod::Grid, &budget).unwrap();
        // |D \ (D − v)| = π r² − lens area of two unit discs at distance a.
        let lens = 2.0 * r * r * (a / (2.0 * r)).acos() - 0.5 * a * (4.0 * r * r - a * a).sqrt();
        let want = std::f64::consts::PI * r * r - lens;
        assert!((g.value - want).abs() < 1e-6, "{} vs {want}", g.value);
        let mc = hit_or_miss_volume(
            &disc,
            &b,
            &w,
            a,
            &IDENTITY,
            HitMissMethod::MonteCarlo,
            &HitMissBudget {
                target: 2e-3,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((mc.value - want).abs() < mc.error);
    }
}
