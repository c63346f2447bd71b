use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Replicate statistics at one spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacingSummary {
    pub a: f64,
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl SpacingSummary {
    pub fn from_samples(a: f64, xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        SpacingSummary {
            a,
            mean,
            stderr: (var / n as f64).sqrt(),
            n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intervals {
    pub c_minus1: Interval,
    pub c0: Interval,
}

/// Weighted least-squares fit of `mean(a) ≈ c₋₁/a + c₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub c_minus1: f64,
    pub c0: f64,
    pub se_c_minus1: f64,
    pub se_c0: f64,
    /// `Σ ((mean − model)/stderr)²` over the spacings.
    pub residual: f64,
    pub dof: usize,
    /// Intervals of `sigmas` standard errors around the coefficients.
    pub ci: Intervals,
    pub sigmas: f64,
}

impl FitReport {
    /// Distance of `c₋₁` from `x` in standard errors.
    pub fn z_minus1(&self, x: f64) -> f64 {
        (self.c_minus1 - x) / self.se_c_minus1
    }

    pub fn z0(&self, x: f64) -> f64 {
        (self.c0 - x) / self.se_c0
    }
}

/// Width of the reported intervals in standard errors.
pub const CI_SIGMAS: f64 = 3.0;

/// Fits the two-term model with inverse-variance weights. Standard errors
/// are floored at 1% of the largest one (and at a relative 1e-12 of the
/// means), so a spacing whose replicates happen to agree does not take all
/// the weight.
pub fn fit_limits(summaries: &[SpacingSummary]) -> Result<FitReport> {
    let mut spacings: Vec<f64> = summaries.iter().map(|s| s.a).collect();
    spacings.sort_by(f64::total_cmp);
    spacings.dedup();
    if spacings.len() < 3 {
        return Err(Error::invalid("the fit needs at least three distinct spacings"));
    }
    if summaries.iter().any(|s| !(s.a > 0.0) || !s.mean.is_finite() || !(s.stderr >= 0.0)) {
        return Err(Error::invalid("spacings must be positive and statistics finite"));
    }
    let scale = summaries.iter().map(|s| s.mean.abs()).fold(1.0, f64::max);
    let max_se = summaries.iter().map(|s| s.stderr).fold(0.0, f64::max);
    let floor = (0.01 * max_se).max(1e-12 * scale);
    let sig: Vec<f64> = summaries.iter().map(|s| s.stderr.max(floor)).collect();
    // Normal equations in (c₋₁, c₀) with x = 1/a.
    let (mut sxx, mut sx, mut s1, mut sxy, mut sy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (s, sg) in summaries.iter().zip(&sig) {
        let w = 1.0 / (sg * sg);
        let x = 1.0 / s.a;
        sxx += w * x * x;
        sx += w * x;
        s1 += w;
        sxy += w * x * s.mean;
        sy += w * s.mean;
    }
    let det = sxx * s1 - sx * sx;
    let c_minus1 = (s1 * sxy - sx * sy) / det;
    let c0 = (sxx * sy - sx * sxy) / det;
    let se_c_minus1 = (s1 / det).sqrt();
    let se_c0 = (sxx / det).sqrt();
    let residual = summaries
        .iter()
        .zip(&sig)
        .map(|(s, sg)| ((s.mean - c_minus1 / s.a - c0) / sg).powi(2))
        .sum();
    let iv = |c: f64, se: f64| Interval {
        lo: c - CI_SIGMAS * se,
        hi: c + CI_SIGMAS * se,
    };
    Ok(FitReport {
        c_minus1,
        c0,
        se_c_minus1,
        se_c0,
        residual,
        dof: summaries.len() - 2,
        ci: Intervals {
            c_minus1: iv(c_minus1, se_c_minus1),
            c0: iv(c0, se_c0),
        },
        sigmas: CI_SIGMAS,
    })
}
