use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::weights::WeightVector;
use crate::asymptotics::{cylinder_coefficients, isotropic_coefficients, separable_configs};
use crate::configs::ClassPartition;
use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::quadrature::{Estimate, QuadOptions};

/// Labelled linear constraints `rows · x = rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSystem {
    pub unknowns: Vec<String>,
    pub labels: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

impl LinearSystem {
    pub fn new(unknowns: Vec<String>) -> Self {
        LinearSystem {
            unknowns,
            labels: Vec::new(),
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn push(&mut self, label: &str, row: Vec<f64>, rhs: f64) -> Result<()> {
        if row.len() != self.unknowns.len() {
            return Err(Error::DimensionMismatch {
                expected: self.unknowns.len(),
                found: row.len(),
            });
        }
        if self.labels.iter().any(|l| l == label) {
            return Err(Error::invalid(format!("duplicate constraint label {label}")));
        }
        self.labels.push(label.to_owned());
        self.rows.push(row);
        self.rhs.push(rhs);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// The subsystem made of the named rows, in the given order.
    pub fn select(&self, labels: &[&str]) -> Result<LinearSystem> {
        let mut out = LinearSystem::new(self.unknowns.clone());
        for l in labels {
            let k = self.row(l).ok_or_else(|| Error::invalid(format!("no constraint {l}")))?;
            out.push(l, self.rows[k].clone(), self.rhs[k])?;
        }
        Ok(out)
    }

    /// `row · x − rhs` for every row.
    pub fn residuals(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(r, b)| r.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() - b)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowResidual {
    pub label: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// The solution set is a single point.
    pub unique: bool,
    pub rank: usize,
    /// Minimum-norm least-squares solution.
    pub solution: Vec<f64>,
    /// Euclidean norm of the least-squares residual.
    pub residual: f64,
    /// Residuals above this count as inconsistency.
    pub threshold: f64,
    pub rows: Vec<RowResidual>,
    /// Orthonormal basis of the null space (directions of non-uniqueness).
    pub null_space: Vec<Vec<f64>>,
}

/// Decides consistency of a linear system from its singular values.
///
/// The system is infeasible when the least-squares residual exceeds both
/// `tol` and a rounding floor of 100 ε times the scale of the rows.
pub fn check_feasibility(system: &LinearSystem, tol: f64) -> FeasibilityReport {
    let n = system.unknowns.len();
    let m = system.len();
    if m == 0 || n == 0 {
        let residual = system.rhs.iter().map(|b| b * b).sum::<f64>().sqrt();
        let feasible = residual <= tol;
        return FeasibilityReport {
            feasible,
            unique: n == 0,
            rank: 0,
            solution: vec![0.0; n],
            residual,
            threshold: tol,
            rows: row_report(system, &vec![0.0; n]),
            null_space: (0..n)
                .map(|k| (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect())
                .collect(),
        };
    }
    // Zero rows make the factorisation square so that V is complete.
    let rows = m.max(n);
    let a = DMatrix::from_fn(rows, n, |i, j| if i < m { system.rows[i][j] } else { 0.0 });
    let b = DVector::from_fn(rows, |i, _| if i < m { system.rhs[i] } else { 0.0 });
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let rank_tol = rows as f64 * f64::EPSILON * smax;
    let rank = svd.singular_values.iter().filter(|&&s| s > rank_tol).count();
    let x = svd.solve(&b, rank_tol).expect("both factors were computed");
    let v_t = svd.v_t.as_ref().expect("right factor computed");
    let null_space = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= rank_tol)
        .map(|(k, _)| v_t.row(k).iter().copied().collect())
        .collect();
    let solution: Vec<f64> = x.iter().copied().collect();
    let residual = (&a * &x - &b).norm();
    let xnorm = x.norm();
    let scale: f64 = system
        .rows
        .iter()
        .zip(&system.rhs)
        .map(|(r, rhs)| r.iter().map(|v| v * v).sum::<f64>().sqrt() * xnorm + rhs.abs())
        .sum();
    let threshold = tol.max(100.0 * f64::EPSILON * scale);
    FeasibilityReport {
        feasible: residual <= threshold,
        unique: rank == n,
        rank,
        rows: row_report(system, &solution),
        solution,
        residual,
        threshold,
        null_space,
    }
}

fn row_report(system: &LinearSystem, x: &[f64]) -> Vec<RowResidual> {
    system
        .labels
        .iter()
        .zip(system.residuals(x))
        .map(|(l, r)| RowResidual {
            label: l.clone(),
            residual: r,
        })
        .collect()
}

/// Unbiasedness for the Euler characteristic in the plane, in the weights of
/// the classes `1`, `2`, `3`: the edge class carries no weight, complements
/// carry opposite weights, and `2(w₁ − w₃) = 1`.
pub fn build_euler_system_2d() -> LinearSystem {
    let mut s = LinearSystem::new(vec!["w1".into(), "w2".into(), "w3".into()]);
    s.push("w2=0", vec![0.0, 1.0, 0.0], 0.0).unwrap();
    s.push("complement", vec![1.0, 0.0, 1.0], 0.0).unwrap();
    s.push("normalize", vec![2.0, 0.0, -2.0], 1.0).unwrap();
    s
}

/// Unbiasedness for `V_1` in R³ on capsules along `e₁`, `(1,1,0)/√2`,
/// `(1,1,1)/√3` (rows `h1=t1`, `h2=t2`, `h3=t3`, per unit length) and on
/// balls (row `wer`), in `A = w₁ − w₇`, `B = w₂ − w₆`, `C = w₃ − w₅`.
pub fn build_nonexistence_system_3d() -> LinearSystem {
    let (s2, s3) = (2f64.sqrt(), 3f64.sqrt());
    let mut s = LinearSystem::new(vec!["A".into(), "B".into(), "C".into()]);
    s.push("h1=t1", vec![0.0, 2.0, 0.0], 1.0).unwrap();
    s.push("h2=t2", vec![s2, 0.0, s2], 1.0).unwrap();
    s.push("h3=t3", vec![s3, s3, -s3], 1.0).unwrap();
    s.push("wer", vec![3.0 - s3, 3.0 * s3 - 3.0 * s2, -3.0 + 6.0 * s2 - 3.0 * s3], 1.0)
        .unwrap();
    s
}

/// Capsule axes of the non-existence argument.
pub fn capsule_axes() -> [Vec3; 3] {
    let (s2, s3) = (2f64.sqrt(), 3f64.sqrt());
    [[1.0, 0.0, 0.0], [1.0 / s2, 1.0 / s2, 0.0], [1.0 / s3, 1.0 / s3, 1.0 / s3]]
}

/// The same constraints in all class weights, with every coefficient
/// computed by quadrature; adds the forced zeros on the empty and full
/// classes.
pub fn build_nonexistence_system_3d_quadrature(partition: &ClassPartition, opts: &QuadOptions) -> Result<LinearSystem> {
    if partition.dim != 3 {
        return Err(Error::UnsupportedDimension(partition.dim));
    }
    let k = partition.len();
    let mut s = LinearSystem::new((0..k).map(|j| format!("w{j}")).collect());
    let configs = separable_configs(3)?;
    for (h, u) in capsule_axes().iter().enumerate() {
        let g = cylinder_coefficients(u, &configs, opts)?;
        s.push(&format!("h{}=t{}", h + 1, h + 1), class_sums(partition, &configs, &g), 1.0)?;
    }
    let iso = isotropic_coefficients(3, opts)?;
    s.push("wer", class_sums(partition, &iso.configs, &iso.mu_reduced), 1.0)?;
    let unit = |j: usize| (0..k).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
    s.push("empty", unit(partition.empty_class()), 0.0)?;
    s.push("full", unit(partition.full_class()), 0.0)?;
    Ok(s)
}

/// Isotropic unbiasedness for `V_{d-2}`: `Σ w_j ψ̄_j = 0`, `Σ w_j μ̄_j = 1`,
/// forced zeros on the empty and full classes.
pub fn build_isotropic_system(partition: &ClassPartition, opts: &QuadOptions) -> Result<LinearSystem> {
    let d = partition.dim;
    let k = partition.len();
    let iso = isotropic_coefficients(d, opts)?;
    let mut s = LinearSystem::new((0..k).map(|j| format!("w{j}")).collect());
    s.push("psi-vanish", class_sums(partition, &iso.configs, &iso.psi), 0.0)?;
    s.push("mu-normalize", class_sums(partition, &iso.configs, &iso.mu_reduced), 1.0)?;
    let unit = |j: usize| (0..k).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
    s.push("empty", unit(partition.empty_class()), 0.0)?;
    s.push("full", unit(partition.full_class()), 0.0)?;
    Ok(s)
}

fn class_sums(partition: &ClassPartition, configs: &[u64], values: &[Estimate]) -> Vec<f64> {
    (0..partition.len())
        .map(|j| {
            partition
                .members(j)
                .iter()
                .filter_map(|l| configs.iter().position(|c| c == l))
                .map(|i| values[i].value)
                .sum()
        })
        .collect()
}

/// Second-order coefficient per unit length of a capsule with axis `u`
/// under weights `w`: `Σ_l w_l · ½∫_{S¹(u)} (Q⁺ − Q⁻) δ`.
pub fn capsule_constraint(
    u: &Vec3,
    weights: &WeightVector,
    partition: &ClassPartition,
    opts: &QuadOptions,
) -> Result<Estimate> {
    if weights.d != 3 || partition.dim != 3 {
        return Err(Error::UnsupportedDimension(weights.d));
    }
    if (geom::norm(u) - 1.0).abs() > 1e-12 {
        return Err(Error::invalid("capsule axis must be a unit vector"));
    }
    let per_config = weights.per_configuration(partition);
    let configs: Vec<u64> = separable_configs(3)?
        .into_iter()
        .filter(|&l| per_config[l as usize] != 0.0)
        .collect();
    if configs.is_empty() {
        return Ok(Estimate::exact(0.0));
    }
    let g = cylinder_coefficients(u, &configs, opts)?;
    Ok(configs.iter().zip(&g).fold(Estimate::exact(0.0), |acc, (&l, e)| {
        let w = per_config[l as usize];
        acc + Estimate {
            value: w * e.value,
            error: w.abs() * e.error,
        }
    }))
}
