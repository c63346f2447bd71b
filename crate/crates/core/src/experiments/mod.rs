//! Design-based Monte Carlo: random lattice poses, replicate estimates, and
//! extraction of the limits of `a E V̂` and `E V̂` by regression.

pub mod fit;
pub mod hitmiss;
pub mod sampling;

pub use fit::{fit_limits, FitReport, Interval, Intervals, SpacingSummary, CI_SIGMAS};
pub use hitmiss::{hitmiss_csv, hitmiss_vs_theory, HitMissDesign, HitMissRow};
pub use sampling::{haar_rotation, replicate_rng, sample_pose, Mode};

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::configs::{orbit_classes, ClassPartition};
use crate::error::{Error, Result};
use crate::estimators::{euler_2d_weights, isotropic_3d_unbiased_weights, WeightVector};
use crate::imaging::{count_classes, count_configurations, voxelize};
use crate::phantoms::{Body, Phantom, PhantomSpec};
use crate::sphere::{Mat3, IDENTITY};

/// Window margin in lattice spacings.
pub const MARGIN_SPACINGS: f64 = 2.0;

/// A design-based experiment: one body, one estimator, several spacings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec {
    pub phantom: PhantomSpec,
    /// `"euler-2d"`, `"isotropic-3d"`, or `{i, d, weights: {class_id: value}}`.
    pub weights: serde_json::Value,
    pub mode: Mode,
    pub spacings: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    /// Rotation of a stationary design, row-major `d×d`; identity if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Vec<Vec<f64>>>,
}

/// Resolves a weight preset name or an inline weight object.
pub fn resolve_weights(value: &serde_json::Value, partition: &ClassPartition) -> Result<WeightVector> {
    match value {
        serde_json::Value::String(name) => match name.as_str() {
            "euler-2d" => euler_2d_weights(partition),
            "isotropic-3d" => isotropic_3d_unbiased_weights(partition),
            other => Err(Error::invalid(format!("unknown weight preset `{other}`"))),
        },
        obj @ serde_json::Value::Object(_) => WeightVector::from_json(&obj.to_string(), partition),
        _ => Err(Error::invalid("weights must be a preset name or a weight object")),
    }
}

/// Builds a `d×d` row-major rotation into the embedded 3×3 form, checked.
pub fn rotation_matrix(d: usize, rows: Option<&Vec<Vec<f64>>>) -> Result<Mat3> {
    match rows {
        None => Ok(IDENTITY),
        Some(rows) => Ok(crate::imaging::LatticePose::from_rows(d, 1.0, rows, &vec![0.0; d])?.rot),
    }
}

/// Everything a run needs, checked.
pub struct ResolvedDesign {
    pub spec: DesignSpec,
    pub phantom: Phantom,
    pub partition: ClassPartition,
    pub weights: WeightVector,
    pub rotation: Mat3,
}

impl DesignSpec {
    /// Validates every field, reporting all offending ones at once.
    pub fn resolve(&self) -> Result<ResolvedDesign> {
        let mut problems = Vec::new();
        let phantom = match self.phantom.build() {
            Ok(p) => Some(p),
            Err(e) => {
                problems.push(format!("phantom: {e}"));
                None
            }
        };
        if self.spacings.is_empty() {
            problems.push("spacings: empty".into());
        }
        if self.spacings.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            problems.push("spacings: must be positive".into());
        }
        if self.replicates < 2 {
            problems.push("replicates: at least 2 are needed for standard errors".into());
        }
        let mut out = None;
        if let Some(phantom) = phantom {
            let d = phantom.dim;
            let amax = self.spacings.iter().copied().fold(0.0, f64::max);
            if amax * (d as f64).sqrt() >= phantom.r {
                problems.push(format!(
                    "spacings: largest spacing {amax} times the cell diameter √{d} is not below r = {}",
                    phantom.r
                ));
            }
            let partition = orbit_classes(d)?;
            let weights = resolve_weights(&self.weights, &partition)
                .map_err(|e| problems.push(format!("weights: {e}")))
                .ok();
            let rotation = rotation_matrix(d, self.rotation.as_ref())
                .map_err(|e| problems.push(format!("rotation: {e}")))
                .ok();
            if self.mode == Mode::Isotropic && self.rotation.is_some() {
                problems.push("rotation: only meaningful in stationary mode".into());
            }
            if let (Some(weights), Some(rotation)) = (weights, rotation) {
                out = Some(ResolvedDesign {
                    spec: self.clone(),
                    phantom,
                    partition,
                    weights,
                    rotation,
                });
            }
        }
        match out {
            Some(r) if problems.is_empty() => Ok(r),
            _ => Err(Error::InvalidInput(problems.join("; "))),
        }
    }
}

/// One replicate: the sampled pose, the class counts and the estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub a_index: usize,
    pub a: f64,
    pub replicate: usize,
    pub rotation: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    pub class_counts: Vec<u64>,
    pub estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub replicates: Vec<ReplicateRecord>,
    pub summaries: Vec<SpacingSummary>,
    /// Present when there are at least three distinct spacings.
    pub fit: Option<FitReport>,
}

/// Voxelizes, counts and evaluates one replicate.
pub fn run_replicate(design: &ResolvedDesign, a_index: usize, rep: usize) -> Result<ReplicateRecord> {
    let a = design.spec.spacings[a_index];
    let d = design.phantom.dim();
    let mut rng = replicate_rng(design.spec.seed, a_index, rep);
    let pose = sample_pose(design.spec.mode, d, a, &design.rotation, &mut rng)?;
    let img = voxelize(&design.phantom, &pose, MARGIN_SPACINGS * a)?;
    let hist = count_configurations(&img)?;
    let class_counts = count_classes(&hist, &design.partition)?;
    let estimate = design.weights.evaluate(&class_counts, a)?;
    Ok(ReplicateRecord {
        a_index,
        a,
        replicate: rep,
        rotation: pose.rows(),
        c: pose.c[..d].to_vec(),
        class_counts,
        estimate,
    })
}

/// Runs every replicate in parallel; the output is ordered by spacing and
/// replicate, so it does not depend on scheduling.
pub fn run(design: &DesignSpec) -> Result<ExperimentRecord> {
    let resolved = design.resolve()?;
    let jobs: Vec<(usize, usize)> = (0..design.spacings.len())
        .flat_map(|i| (0..design.replicates).map(move |r| (i, r)))
        .collect();
    let replicates = jobs
        .par_iter()
        .map(|&(i, r)| run_replicate(&resolved, i, r))
        .collect::<Result<Vec<_>>>()?;
    let summaries: Vec<SpacingSummary> = design
        .spacings
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let xs: Vec<f64> = replicates.iter().filter(|r| r.a_index == i).map(|r| r.estimate).collect();
            SpacingSummary::from_samples(a, &xs)
        })
        .collect();
    let mut distinct = design.spacings.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let fit = if distinct.len() >= 3 { Some(fit_limits(&summaries)?) } else { None };
    Ok(ExperimentRecord {
        replicates,
        summaries,
        fit,
    })
}

impl ExperimentRecord {
    /// `a,replicate,estimate`
    pub fn results_csv(&self) -> String {
        let mut s = String::from("a,replicate,estimate\n");
        for r in &self.replicates {
            let _ = writeln!(s, "{},{},{}", r.a, r.replicate, r.estimate);
        }
        s
    }

    /// `a,mean,stderr,n`
    pub fn summary_csv(&self) -> String {
        let mut s = String::from("a,mean,stderr,n\n");
        for r in &self.summaries {
            let _ = writeln!(s, "{},{},{},{}", r.a, r.mean, r.stderr, r.n);
        }
        s
    }
}
