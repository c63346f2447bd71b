//! Asymptotic coefficients of configuration counts as the lattice spacing
//! shrinks, and direct evaluation of the hit-or-miss volumes they expand.

pub mod coefficients;
pub mod hitmiss;
pub mod support;

pub use coefficients::{
    body_coefficients, body_coefficients_for, closed_form_mu, closed_form_psi, cylinder_coefficients,
    isotropic_coefficients, isotropic_coefficients_for, separable_configs, zeta, BodyCoefficients,
    ClassCoefficients, CoefficientTable, ConfigCoefficients, IsotropicCoefficients, Provenance,
    PATCH_TOL, SPHERE_TOL,
};
pub use hitmiss::{hit_or_miss_volume, HitMissBudget, HitMissMethod, HitMissResult};
pub use support::{delta, first_order_density, CellVertices};

use crate::configs::{full_mask, ClassPartition};
use crate::error::{Error, Result};
use crate::phantoms::Phantom;
use crate::quadrature::{Estimate, QuadOptions};
use crate::sphere::Mat3;

fn class_members(partition: &ClassPartition, j: usize) -> Result<Vec<u64>> {
    if j >= partition.len() {
        return Err(Error::invalid(format!("no class {j}")));
    }
    let d = partition.dim;
    let sep = separable_configs(d)?;
    Ok(partition
        .members(j)
        .iter()
        .copied()
        .filter(|l| sep.contains(l))
        .collect())
}

fn summed(values: &[Estimate]) -> Estimate {
    values.iter().fold(Estimate::exact(0.0), |a, &e| a + e)
}

/// `ψ̄_j` by quadrature.
pub fn psi_bar(partition: &ClassPartition, j: usize, tol: f64) -> Result<Estimate> {
    let members = class_members(partition, j)?;
    if members.is_empty() {
        return Ok(Estimate::exact(0.0));
    }
    let opts = QuadOptions::with_tol(tol / members.len() as f64);
    Ok(summed(&isotropic_coefficients_for(partition.dim, &members, &opts)?.psi))
}

/// `μ̄_j` by quadrature of the reduced formula.
pub fn mu_bar(partition: &ClassPartition, j: usize, tol: f64) -> Result<Estimate> {
    let members = class_members(partition, j)?;
    if members.is_empty() {
        return Ok(Estimate::exact(0.0));
    }
    let opts = QuadOptions::with_tol(tol / members.len() as f64);
    Ok(summed(&isotropic_coefficients_for(partition.dim, &members, &opts)?.mu_reduced))
}

/// `μ_l` by quadrature of its defining formula.
pub fn mu_l(l: u64, d: usize, tol: f64) -> Result<Estimate> {
    if l == 0 || l >= full_mask(d) {
        return Err(Error::invalid(format!("configuration {l} has an empty black or white set")));
    }
    if !separable_configs(d)?.contains(&l) {
        return Ok(Estimate::exact(0.0));
    }
    Ok(isotropic_coefficients_for(d, &[l], &QuadOptions::with_tol(tol))?.mu[0])
}

/// `φ̄_j(X)` for a lattice rotated by `rot`.
pub fn phi_bar(body: &Phantom, rot: &Mat3, partition: &ClassPartition, j: usize, tol: f64) -> Result<Estimate> {
    let members = class_members(partition, j)?;
    if members.is_empty() {
        return Ok(Estimate::exact(0.0));
    }
    let opts = QuadOptions::with_tol(tol / members.len() as f64);
    Ok(summed(&body_coefficients_for(body, rot, &members, &opts)?.phi))
}

/// `λ_l(X)` for a lattice rotated by `rot`.
pub fn lambda_l(body: &Phantom, rot: &Mat3, l: u64, tol: f64) -> Result<Estimate> {
    let d = body.dim;
    if l == 0 || l >= full_mask(d) {
        return Err(Error::invalid(format!("configuration {l} has an empty black or white set")));
    }
    if !separable_configs(d)?.contains(&l) {
        return Ok(Estimate::exact(0.0));
    }
    Ok(body_coefficients_for(body, rot, &[l], &QuadOptions::with_tol(tol))?.lambda[0])
}

/// `φ_l(X)`, the first-order coefficient of a single configuration.
pub fn phi_l(body: &Phantom, rot: &Mat3, l: u64, tol: f64) -> Result<Estimate> {
    let d = body.dim;
    if l == 0 || l >= full_mask(d) {
        return Err(Error::invalid(format!("configuration {l} has an empty black or white set")));
    }
    if !separable_configs(d)?.contains(&l) {
        return Ok(Estimate::exact(0.0));
    }
    Ok(body_coefficients_for(body, rot, &[l], &QuadOptions::with_tol(tol))?.phi[0])
}
