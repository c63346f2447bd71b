use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::{replicate_rng, sample_pose, Mode};
use super::{rotation_matrix, MARGIN_SPACINGS};
use crate::asymptotics::{hit_or_miss_volume, lambda_l, phi_l, HitMissBudget, HitMissMethod};
use crate::configs::{full_mask, Configuration};
use crate::error::{Error, Result};
use crate::imaging::{count_configurations, voxelize};
use crate::phantoms::PhantomSpec;

/// Comparison of the three routes to `a^d E N_l` for one configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HitMissDesign {
    pub phantom: PhantomSpec,
    pub l: u64,
    pub spacings: Vec<f64>,
    /// Random translations per spacing for the lattice count.
    pub replicates: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Vec<Vec<f64>>>,
    /// Hit-or-miss error target as a fraction of the second-order term.
    #[serde(default = "default_fraction")]
    pub target_fraction: f64,
    /// Quadrature tolerance of the coefficients.
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_fraction() -> f64 {
    0.02
}

fn default_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HitMissRow {
    pub a: f64,
    /// `a^d · mean(N_l)` over random translations.
    pub empirical: f64,
    pub empirical_se: f64,
    /// Hit-or-miss volume and its (three standard error) bound.
    pub hit_or_miss: f64,
    pub hit_or_miss_error: f64,
    /// `a φ_l`
    pub first_order: f64,
    /// `a φ_l + a² λ_l`
    pub second_order: f64,
    /// `|hit_or_miss − prediction| / hit_or_miss`
    pub rel_residual_first: f64,
    pub rel_residual_second: f64,
    /// `|empirical − hit_or_miss|` in combined standard errors.
    pub deviation_sigmas: f64,
}

pub fn hitmiss_vs_theory(design: &HitMissDesign) -> Result<Vec<HitMissRow>> {
    let body = design.phantom.build()?;
    let d = body.dim;
    if design.l == 0 || design.l >= full_mask(d) {
        return Err(Error::invalid(format!("configuration {} has an empty black or white set", design.l)));
    }
    if design.replicates < 2 {
        return Err(Error::invalid("replicates: at least 2 are needed"));
    }
    let rot = rotation_matrix(d, design.rotation.as_ref())?;
    let cfg = Configuration::new(d, design.l)?;
    let (black, white) = (cfg.black_points(), cfg.white_points());
    let phi = phi_l(&body, &rot, design.l, design.tol)?.value;
    let lambda = lambda_l(&body, &rot, design.l, design.tol)?.value;
    let mut rows = Vec::new();
    for (ai, &a) in design.spacings.iter().enumerate() {
        let vol = a.powi(d as i32);
        let samples = (0..design.replicates)
            .into_par_iter()
            .map(|rep| {
                let mut rng = replicate_rng(design.seed, ai, rep);
                let pose = sample_pose(Mode::Stationary, d, a, &rot, &mut rng)?;
                let img = voxelize(&body, &pose, MARGIN_SPACINGS * a)?;
                Ok(count_configurations(&img)?.counts[design.l as usize] as f64 * vol)
            })
            .collect::<Result<Vec<f64>>>()?;
        let n = samples.len() as f64;
        let empirical = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - empirical).powi(2)).sum::<f64>() / (n - 1.0);
        let empirical_se = (var / n).sqrt();
        let scale = if lambda != 0.0 { a * a * lambda.abs() } else { vol };
        let budget = HitMissBudget {
            target: design.target_fraction * scale,
            max_evals: 200_000_000,
            seed: design.seed ^ ai as u64,
        };
        let hm = hit_or_miss_volume(&body, &black, &white, a, &rot, HitMissMethod::Grid, &budget)?;
        let first_order = a * phi;
        let second_order = first_order + a * a * lambda;
        let rel = |p: f64| if hm.value != 0.0 { (hm.value - p).abs() / hm.value.abs() } else { p.abs() };
        let combined = (empirical_se.powi(2) + (hm.error / 3.0).powi(2)).sqrt();
        let gap = (empirical - hm.value).abs();
        rows.push(HitMissRow {
            a,
            empirical,
            empirical_se,
            hit_or_miss: hm.value,
            hit_or_miss_error: hm.error,
            first_order,
            second_order,
            rel_residual_first: rel(first_order),
            rel_residual_second: rel(second_order),
            deviation_sigmas: if combined > 0.0 {
                gap / combined
            } else if gap == 0.0 {
                0.0
            } else {
                f64::INFINITY
            },
        });
    }
    Ok(rows)
}

/// `a,empirical,empirical_se,hit_or_miss,hit_or_miss_error,first_order,second_order,rel_residual_first,rel_residual_second,deviation_sigmas`
pub fn hitmiss_csv(rows: &[HitMissRow]) -> String {
    use std::fmt::Write as _;
    let mut s = String::from(
        "a,empirical,empirical_se,hit_or_miss,hit_or_miss_error,first_order,second_order,rel_residual_first,rel_residual_second,deviation_sigmas\n",
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.a,
            r.empirical,
            r.empirical_se,
            r.hit_or_miss,
            r.hit_or_miss_error,
            r.first_order,
            r.second_order,
            r.rel_residual_first,
            r.rel_residual_second,
            r.deviation_sigmas
        );
    }
    s
}
