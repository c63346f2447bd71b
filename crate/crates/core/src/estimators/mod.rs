//! Weighted configuration-count estimators of intrinsic volumes, their
//! asymptotic means, and the linear systems deciding whether unbiased
//! weights exist.

pub mod system;
pub mod weights;

pub use system::{
    build_euler_system_2d, build_isotropic_system, build_nonexistence_system_3d,
    build_nonexistence_system_3d_quadrature, capsule_axes, capsule_constraint, check_feasibility,
    FeasibilityReport, LinearSystem, RowResidual,
};
pub use weights::WeightVector;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{closed_form_mu, CoefficientTable};
use crate::configs::ClassPartition;
use crate::error::{Error, Result};
use crate::quadrature::{Estimate, QuadOptions};

/// The unbiased Euler characteristic weights in the plane:
/// `w(1) = 1/4`, `w(3) = −1/4`.
pub fn euler_2d_weights(partition: &ClassPartition) -> Result<WeightVector> {
    if partition.dim != 2 {
        return Err(Error::UnsupportedDimension(partition.dim));
    }
    WeightVector::zeros(0, partition)?
        .with_label(partition, "1", 0.25)?
        .with_label(partition, "3", -0.25)
}

/// `w(1) = −w(7) = 1/(2μ̄₁)` with `μ̄₁ = 3 − √3`: unbiased for `V_1` in an
/// isotropic lattice.
pub fn isotropic_3d_unbiased_weights(partition: &ClassPartition) -> Result<WeightVector> {
    if partition.dim != 3 {
        return Err(Error::UnsupportedDimension(partition.dim));
    }
    let w = 0.5 / closed_form_mu(3, "1").expect("known in three dimensions");
    WeightVector::zeros(1, partition)?
        .with_label(partition, "1", w)?
        .with_label(partition, "7", -w)
}

/// All isotropically unbiased `V_{d-2}` weights: `particular + Σ t_k directions[k]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AffineFamily {
    pub particular: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
    pub residual: f64,
}

pub fn isotropic_unbiased_family(partition: &ClassPartition, opts: &QuadOptions) -> Result<AffineFamily> {
    let sys = build_isotropic_system(partition, opts)?;
    let rep = check_feasibility(&sys, 10.0 * opts.tol);
    if !rep.feasible {
        return Err(Error::invalid(format!(
            "isotropic unbiasedness system is inconsistent (residual {:e})",
            rep.residual
        )));
    }
    Ok(AffineFamily {
        particular: rep.solution,
        directions: rep.null_space,
        residual: rep.residual,
    })
}

/// How the lattice is laid over the body.
#[derive(Debug, Clone, Copy)]
pub enum MeanDesign {
    /// Isotropic lattice; the body enters through `V_{d-1}` and `V_{d-2}`.
    Isotropic { v_dm1: f64, v_dm2: f64 },
    /// Fixed rotation; uses the `φ̄_j(X)`, `λ̄_j(X)` columns of the table.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticMean {
    /// `lim a E V̂`.
    pub first_order: Estimate,
    /// `lim E V̂`, or `None` when the first-order term does not vanish and
    /// the mean diverges.
    pub zeroth_order: Option<Estimate>,
}

fn weighted(weights: &WeightVector, col: impl Fn(usize) -> Option<Estimate>, name: &str) -> Result<Estimate> {
    let mut acc = Estimate::exact(0.0);
    for (j, &w) in weights.weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let e = col(j).ok_or_else(|| Error::MissingCoefficient(format!("{name} of class {j}")))?;
        acc = acc
            + Estimate {
                value: w * e.value,
                error: w.abs() * e.error,
            };
    }
    Ok(acc)
}

/// Limits of `a E V̂_{d-2}` and `E V̂_{d-2}` as `a → 0`. The first-order
/// term counts as vanishing when it is within `tol` plus its error bound.
pub fn asymptotic_mean(
    weights: &WeightVector,
    table: &CoefficientTable,
    design: MeanDesign,
    tol: f64,
) -> Result<AsymptoticMean> {
    if table.d != weights.d || table.rows.len() != weights.weights.len() {
        return Err(Error::DimensionMismatch {
            expected: table.d,
            found: weights.d,
        });
    }
    if weights.i + 2 != weights.d {
        return Err(Error::invalid(format!(
            "asymptotic means are available for V_{} only",
            weights.d - 2
        )));
    }
    let (first, zeroth) = match design {
        MeanDesign::Isotropic { v_dm1, v_dm2 } => {
            let f = weighted(weights, |j| table.rows[j].psi_bar, "psi_bar")?;
            let z = weighted(weights, |j| table.rows[j].mu_bar, "mu_bar")?;
            (scale(f, v_dm1), scale(z, v_dm2))
        }
        MeanDesign::Fixed => (
            weighted(weights, |j| table.rows[j].phi_bar, "phi_bar")?,
            weighted(weights, |j| table.rows[j].lambda_bar, "lambda_bar")?,
        ),
    };
    let vanishes = first.value.abs() <= tol + first.error;
    Ok(AsymptoticMean {
        first_order: first,
        zeroth_order: vanishes.then_some(zeroth),
    })
}

fn scale(e: Estimate, s: f64) -> Estimate {
    Estimate {
        value: e.value * s,
        error: e.error * s.abs(),
    }
}
