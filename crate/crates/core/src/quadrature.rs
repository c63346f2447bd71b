//! Adaptive Gauss–Legendre quadrature on intervals, rectangles and spherical
//! triangles.
//!
//! Integrands are vector valued: one call fills a slice of `m` outputs, so a
//! single pass over a domain can integrate a whole family of functions (one per
//! configuration, say) against the same subdivision. Each region is estimated
//! with a rule of order `n` and of order `2n`; the difference is the error
//! indicator and the region with the largest indicator is split next.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};

/// Value with an absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, error: 0.0 }
    }
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, o: Estimate) -> Estimate {
        Estimate {
            value: self.value + o.value,
            error: self.error + o.error,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    /// Absolute tolerance applied to each output component.
    pub tol: f64,
    /// Gauss–Legendre order of the coarse rule; the fine rule doubles it.
    pub order: usize,
    /// Upper bound on the number of live regions.
    pub max_regions: usize,
}

impl QuadOptions {
    pub fn with_tol(tol: f64) -> Self {
        QuadOptions {
            tol,
            ..Self::default()
        }
    }
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            tol: 1e-9,
            order: 6,
            max_regions: 50_000,
        }
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess, then Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            z = 0.0;
            dp = 1.0;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// A rule mapped to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct UnitRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl UnitRule {
    pub fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        UnitRule {
            nodes: x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
            weights: w.iter().map(|v| 0.5 * v).collect(),
        }
    }
}

/// A subdivisible integration domain.
pub trait Region: Sized {
    type Point;

    /// Adds `∫ f` over the region, computed with `rule`, into `acc`.
    fn apply<F>(&self, rule: &UnitRule, f: &F, tmp: &mut [f64], acc: &mut [f64])
    where
        F: Fn(&Self::Point, &mut [f64]);

    fn split(&self) -> Vec<Self>;
}

struct Live<R> {
    region: R,
    value: Vec<f64>,
    error: Vec<f64>,
    key: f64,
}

impl<R> PartialEq for Live<R> {
    fn eq(&self, o: &Self) -> bool {
        self.key.total_cmp(&o.key) == Ordering::Equal
    }
}
impl<R> Eq for Live<R> {}
impl<R> PartialOrd for Live<R> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<R> Ord for Live<R> {
    fn cmp(&self, o: &Self) -> Ordering {
        self.key.total_cmp(&o.key)
    }
}

fn evaluate<R, F>(
    region: R,
    m: usize,
    rules: &(UnitRule, UnitRule),
    f: &F,
    tmp: &mut [f64],
) -> Live<R>
where
    R: Region,
    F: Fn(&R::Point, &mut [f64]),
{
    let mut coarse = vec![0.0; m];
    let mut fine = vec![0.0; m];
    region.apply(&rules.0, f, tmp, &mut coarse);
    region.apply(&rules.1, f, tmp, &mut fine);
    let error: Vec<f64> = coarse.iter().zip(&fine).map(|(c, v)| (c - v).abs()).collect();
    let key = error.iter().cloned().fold(0.0, f64::max);
    Live {
        region,
        value: fine,
        error,
        key,
    }
}

/// Integrates the `m`-vector valued `f` over the union of `regions`.
///
/// Fails with [`Error::Quadrature`] (carrying the worst component's estimate
/// and error) when the region budget runs out first.
pub fn adaptive<R, F>(regions: Vec<R>, m: usize, f: F, opts: &QuadOptions) -> Result<Vec<Estimate>>
where
    R: Region,
    F: Fn(&R::Point, &mut [f64]),
{
    let (out, ok) = adaptive_unchecked(regions, m, f, opts);
    if ok {
        return Ok(out);
    }
    let worst = out
        .iter()
        .max_by(|a, b| a.error.total_cmp(&b.error))
        .copied()
        .unwrap_or(Estimate::exact(0.0));
    Err(Error::Quadrature {
        estimate: worst.value,
        error: worst.error,
        tol: opts.tol,
    })
}

/// Like [`adaptive`] but returns the best estimates together with a flag
/// telling whether the tolerance was met.
pub fn adaptive_unchecked<R, F>(
    regions: Vec<R>,
    m: usize,
    f: F,
    opts: &QuadOptions,
) -> (Vec<Estimate>, bool)
where
    R: Region,
    F: Fn(&R::Point, &mut [f64]),
{
    let rules = (UnitRule::new(opts.order), UnitRule::new(2 * opts.order));
    let mut tmp = vec![0.0; m];
    let mut heap = BinaryHeap::new();
    let mut err = vec![0.0; m];
    for r in regions {
        let live = evaluate(r, m, &rules, &f, &mut tmp);
        for c in 0..m {
            err[c] += live.error[c];
        }
        heap.push(live);
    }
    let converged = |err: &[f64]| err.iter().all(|&e| e <= opts.tol);
    while !converged(&err) && heap.len() < opts.max_regions {
        let Some(worst) = heap.pop() else { break };
        for c in 0..m {
            err[c] -= worst.error[c];
        }
        for child in worst.region.split() {
            let live = evaluate(child, m, &rules, &f, &mut tmp);
            for c in 0..m {
                err[c] += live.error[c];
            }
            heap.push(live);
        }
    }
    // Re-sum from the live regions to shed cancellation in the running totals.
    let mut value = vec![0.0; m];
    let mut error = vec![0.0; m];
    for live in heap.iter() {
        for c in 0..m {
            value[c] += live.value[c];
            error[c] += live.error[c];
        }
    }
    let ok = converged(&error);
    let out = value
        .into_iter()
        .zip(error)
        .map(|(value, error)| Estimate { value, error })
        .collect();
    (out, ok)
}

/// Scalar convenience wrapper around [`adaptive`].
pub fn adaptive_scalar<R, F>(regions: Vec<R>, f: F, opts: &QuadOptions) -> Result<Estimate>
where
    R: Region,
    F: Fn(&R::Point) -> f64,
{
    let v = adaptive(regions, 1, |p: &R::Point, out: &mut [f64]| out[0] = f(p), opts)?;
    Ok(v[0])
}

/// A closed interval.
#[derive(Debug, Clone, Copy)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Region for Interval {
    type Point = f64;

    fn apply<F>(&self, rule: &UnitRule, f: &F, tmp: &mut [f64], acc: &mut [f64])
    where
        F: Fn(&f64, &mut [f64]),
    {
        let h = self.hi - self.lo;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            f(&(self.lo + h * x), tmp);
            for (a, t) in acc.iter_mut().zip(tmp.iter()) {
                *a += w * h * t;
            }
        }
    }

    fn split(&self) -> Vec<Self> {
        let mid = 0.5 * (self.lo + self.hi);
        vec![
            Interval {
                lo: self.lo,
                hi: mid,
            },
            Interval {
                lo: mid,
                hi: self.hi,
            },
        ]
    }
}

/// An axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy)]
pub struct Rect {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Region for Rect {
    type Point = [f64; 2];

    fn apply<F>(&self, rule: &UnitRule, f: &F, tmp: &mut [f64], acc: &mut [f64])
    where
        F: Fn(&[f64; 2], &mut [f64]),
    {
        let hx = self.x[1] - self.x[0];
        let hy = self.y[1] - self.y[0];
        for (s, ws) in rule.nodes.iter().zip(&rule.weights) {
            for (t, wt) in rule.nodes.iter().zip(&rule.weights) {
                f(&[self.x[0] + hx * s, self.y[0] + hy * t], tmp);
                let w = ws * wt * hx * hy;
                for (a, v) in acc.iter_mut().zip(tmp.iter()) {
                    *a += w * v;
                }
            }
        }
    }

    fn split(&self) -> Vec<Self> {
        let mx = 0.5 * (self.x[0] + self.x[1]);
        let my = 0.5 * (self.y[0] + self.y[1]);
        let mut out = Vec::with_capacity(4);
        for xs in [[self.x[0], mx], [mx, self.x[1]]] {
            for ys in [[self.y[0], my], [my, self.y[1]]] {
                out.push(Rect { x: xs, y: ys });
            }
        }
        out
    }
}

/// Geodesic triangle on the unit sphere S², given by its unit vertices.
///
/// The triangle is parametrized by radial projection of the flat triangle
/// with the same vertices; the flat triangle is in turn collapsed onto the
/// unit square (Duffy), so each rule is a tensor Gauss rule.
#[derive(Debug, Clone, Copy)]
pub struct SphericalTriangle {
    pub v: [Vec3; 3],
}

impl SphericalTriangle {
    pub fn new(a: Vec3, b: Vec3, c: Vec3) -> Self {
        SphericalTriangle {
            v: [geom::normalize(&a), geom::normalize(&b), geom::normalize(&c)],
        }
    }

    /// Exact area by the Van Oosterom–Strackee formula.
    pub fn area(&self) -> f64 {
        let [a, b, c] = &self.v;
        let num = geom::det3(a, b, c).abs();
        let den = 1.0 + geom::dot(a, b) + geom::dot(b, c) + geom::dot(c, a);
        2.0 * num.atan2(den)
    }

    /// Normalized centroid of the vertices, an interior point.
    pub fn center(&self) -> Vec3 {
        let [a, b, c] = &self.v;
        geom::normalize(&geom::add(&geom::add(a, b), c))
    }
}

impl Region for SphericalTriangle {
    type Point = Vec3;

    fn apply<F>(&self, rule: &UnitRule, f: &F, tmp: &mut [f64], acc: &mut [f64])
    where
        F: Fn(&Vec3, &mut [f64]),
    {
        let [a, b, c] = &self.v;
        let det = geom::det3(a, b, c).abs();
        let ab = geom::sub(b, a);
        let ac = geom::sub(c, a);
        for (u, wu) in rule.nodes.iter().zip(&rule.weights) {
            for (v, wv) in rule.nodes.iter().zip(&rule.weights) {
                let s = u * (1.0 - v);
                let t = u * v;
                let p = geom::axpy(&geom::axpy(a, s, &ab), t, &ac);
                let r = geom::norm(&p);
                let n = geom::scale(&p, 1.0 / r);
                f(&n, tmp);
                let w = wu * wv * u * det / (r * r * r);
                for (acc_c, val) in acc.iter_mut().zip(tmp.iter()) {
                    *acc_c += w * val;
                }
            }
        }
    }

    fn split(&self) -> Vec<Self> {
        let [a, b, c] = self.v;
        let mid = |p: &Vec3, q: &Vec3| geom::normalize(&geom::add(p, q));
        let (ab, bc, ca) = (mid(&a, &b), mid(&b, &c), mid(&c, &a));
        vec![
            SphericalTriangle { v: [a, ab, ca] },
            SphericalTriangle { v: [ab, b, bc] },
            SphericalTriangle { v: [ca, bc, c] },
            SphericalTriangle { v: [ab, bc, ca] },
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn legendre_rules_integrate_polynomials() {
        for n in 1..=20 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13, "n={n}");
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg + 1) as f64 };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn interval_runge() {
        let opts = QuadOptions::with_tol(1e-12);
        let f = |x: &f64| 1.0 / (1.0 + 25.0 * x * x);
        let est = adaptive_scalar(vec![Interval { lo: -1.0, hi: 1.0 }], f, &opts).unwrap();
        assert!((est.value - 0.4 * 5f64.atan()).abs() < 1e-12, "{est:?}");
        // The error indicator is not a proof; a kink off the dyadic grid
        // still converges, just without a trustworthy bound.
        let est = adaptive_scalar(vec![Interval { lo: -1.0, hi: 2.0 }], |x| x.abs(), &opts);
        let v = match est {
            Ok(e) => e.value,
            Err(Error::Quadrature { estimate, .. }) => estimate,
            Err(e) => panic!("{e}"),
        };
        assert!((v - 2.5).abs() < 1e-8);
    }

    #[test]
    fn rectangle_integral() {
        let opts = QuadOptions::with_tol(1e-11);
        let r = Rect {
            x: [0.0, 1.0],
            y: [0.0, PI],
        };
        let est = adaptive_scalar(vec![r], |p| p[0] * p[1].sin(), &opts).unwrap();
        assert!((est.value - 1.0).abs() < 1e-11);
    }

    #[test]
    fn octant_area_and_moments() {
        let t = SphericalTriangle::new([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]);
        assert!((t.area() - PI / 2.0).abs() < 1e-14);
        let opts = QuadOptions::with_tol(1e-12);
        let v = adaptive(
            vec![t],
            2,
            |n: &Vec3, out: &mut [f64]| {
                out[0] = 1.0;
                out[1] = n[2] * n[2];
            },
            &opts,
        )
        .unwrap();
        assert!((v[0].value - PI / 2.0).abs() < 1e-12);
        // z² averages to 1/3 over the sphere.
        assert!((v[1].value - PI / 6.0).abs() < 1e-12);
    }

    #[test]
    fn budget_failure_reports_estimate() {
        let opts = QuadOptions {
            tol: 1e-15,
            order: 2,
            max_regions: 4,
        };
        let err = adaptive_scalar(vec![Interval { lo: 0.0, hi: 1.0 }], |x| x.sqrt(), &opts).unwrap_err();
        match err {
            Error::Quadrature { estimate, .. } => assert!((estimate - 2.0 / 3.0).abs() < 1e-2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
