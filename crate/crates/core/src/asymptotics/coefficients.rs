//! First- and second-order coefficients of the configuration counts.
//!
//! For a configuration `l` with black/white vertex sets `B_l`, `W_l`:
//!
//! * `φ_l(X) = ∫_{∂X} (−h(B_l ⊕ W̌_l, n))⁺ dH^{d-1}` and
//!   `λ_l(X) = ∫_{∂X} ½(Q⁺(B_l) − Q⁻(W_l)) δ(n) dH^{d-1}` give
//!   `a^d E N_l = a φ_l(X) + a² λ_l(X) + o(a²)` for a stationary lattice;
//! * `ψ_l = 2 ⨍_{S^{d-1}} (−h(B_l ⊕ W̌_l, n))⁺ dn` and
//!   `μ_l = π/(d−1) ⨍ (d(h(B_l,n)² − h(W̌_l,n)²) − (|p⁺_B|² − |p⁻_W|²)) δ dn`
//!   are their isotropic counterparts, `⨍` the uniform probability measure.
//!
//! Class values (`φ̄_j`, `ψ̄_j`, `λ̄_j`, `μ̄_j`) sum over the class members.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::support::{CellVertices, TIE_TOL};
use crate::configs::{full_mask, strictly_separable, ClassPartition};
use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::phantoms::{Phantom, SurfacePoint};
use crate::quadrature::{self, Estimate, QuadOptions};
use crate::sphere::{self, GreatCircle, Mat3, IDENTITY};

/// Default absolute tolerance for integrals over the unit sphere.
pub const SPHERE_TOL: f64 = 1e-8;
/// Default absolute tolerance for integrals over phantom boundaries.
pub const PATCH_TOL: f64 = 1e-9;

/// Configurations with separable black and white sets; every coefficient
/// vanishes for the others.
pub fn separable_configs(d: usize) -> Result<Vec<u64>> {
    (1..full_mask(d)).filter_map(|l| match strictly_separable(l, d) {
        Ok(true) => Some(Ok(l)),
        Ok(false) => None,
        Err(e) => Some(Err(e)),
    })
    .collect()
}

/// Per-node evaluation of the configuration densities from the vertex
/// projections `proj[i] = ⟨x_i, n⟩`.
struct Extremes {
    hb: f64,
    mw: f64,
    ib: usize,
    iw: usize,
}

#[inline]
fn extremes(l: u64, proj: &[f64]) -> Extremes {
    let mut e = Extremes {
        hb: f64::NEG_INFINITY,
        mw: f64::INFINITY,
        ib: 0,
        iw: 0,
    };
    for (i, &p) in proj.iter().enumerate() {
        if (l >> i) & 1 == 1 {
            if p > e.hb {
                e.hb = p;
                e.ib = i;
            }
        } else if p < e.mw {
            e.mw = p;
            e.iw = i;
        }
    }
    e
}

/// Largest `II` over black vertices within `TIE_TOL` of `hb`, smallest over
/// white vertices within `TIE_TOL` of `mw`.
#[inline]
fn extremal_forms(l: u64, proj: &[f64], ii: &[f64], e: &Extremes) -> (f64, f64) {
    let mut plus = f64::NEG_INFINITY;
    let mut minus = f64::INFINITY;
    for i in 0..proj.len() {
        if (l >> i) & 1 == 1 {
            if proj[i] >= e.hb - TIE_TOL {
                plus = plus.max(ii[i]);
            }
        } else if proj[i] <= e.mw + TIE_TOL {
            minus = minus.min(ii[i]);
        }
    }
    (plus, minus)
}

/// Isotropic per-configuration coefficients.
#[derive(Debug, Clone)]
pub struct IsotropicCoefficients {
    pub d: usize,
    pub configs: Vec<u64>,
    pub psi: Vec<Estimate>,
    /// From the defining formula with the `|p±|²` terms.
    pub mu: Vec<Estimate>,
    /// From `dπ/(d−1) ⨍ (h(B,n)² − h(W̌,n)²) δ dn`; agrees with `mu` after
    /// summing over a class.
    pub mu_reduced: Vec<Estimate>,
}

impl IsotropicCoefficients {
    pub fn get(&self, l: u64) -> Option<usize> {
        self.configs.iter().position(|&c| c == l)
    }
}

/// `ψ_l`, `μ_l` for every separable `l` by stratified sphere quadrature.
pub fn isotropic_coefficients(d: usize, opts: &QuadOptions) -> Result<IsotropicCoefficients> {
    let configs = separable_configs(d)?;
    isotropic_coefficients_for(d, &configs, opts)
}

pub fn isotropic_coefficients_for(d: usize, configs: &[u64], opts: &QuadOptions) -> Result<IsotropicCoefficients> {
    let cell = CellVertices::unit(d);
    let sq: Vec<f64> = cell.points.iter().map(|p| geom::dot(p, p)).collect();
    let k = configs.len();
    let area = sphere::sphere_area(d);
    let df = d as f64;
    let psi_scale = 2.0 / area;
    let mu_scale = std::f64::consts::PI / (df - 1.0) / area;
    let red_scale = df * mu_scale;
    // Tolerances on the unnormalized integrals.
    let inner = QuadOptions {
        tol: opts.tol / psi_scale.max(red_scale),
        ..*opts
    };
    let raw = sphere::integrate_sphere(
        d,
        &IDENTITY,
        &[],
        3 * k,
        |n: &Vec3, out: &mut [f64]| {
            let proj: Vec<f64> = cell.points.iter().map(|p| geom::dot(p, n)).collect();
            for (c, &l) in configs.iter().enumerate() {
                let e = extremes(l, &proj);
                let gap = e.mw - e.hb;
                out[c] = gap.max(0.0);
                if gap > TIE_TOL {
                    let red = e.hb * e.hb - e.mw * e.mw;
                    out[k + c] = df * red - (sq[e.ib] - sq[e.iw]);
                    out[2 * k + c] = red;
                } else {
                    out[k + c] = 0.0;
                    out[2 * k + c] = 0.0;
                }
            }
        },
        &inner,
    )?;
    let scaled = |range: std::ops::Range<usize>, s: f64| -> Vec<Estimate> {
        raw[range]
            .iter()
            .map(|e| Estimate {
                value: e.value * s,
                error: e.error * s,
            })
            .collect()
    };
    Ok(IsotropicCoefficients {
        d,
        configs: configs.to_vec(),
        psi: scaled(0..k, psi_scale),
        mu: scaled(k..2 * k, mu_scale),
        mu_reduced: scaled(2 * k..3 * k, red_scale),
    })
}

/// Per-configuration coefficients of a body for a lattice rotated by `rot`.
#[derive(Debug, Clone)]
pub struct BodyCoefficients {
    pub configs: Vec<u64>,
    pub phi: Vec<Estimate>,
    pub lambda: Vec<Estimate>,
    /// Integral of the tie term over the normals with `h(B ⊕ W̌, n) = 0`.
    /// Identically zero on the supported patch kinds; computed as a check.
    pub tie: Vec<Estimate>,
}

/// `φ_l(X)` and `λ_l(X)` for the given configurations.
pub fn body_coefficients_for(
    body: &Phantom,
    rot: &Mat3,
    configs: &[u64],
    opts: &QuadOptions,
) -> Result<BodyCoefficients> {
    let cell = CellVertices::new(body.dim, rot, 1.0);
    let k = configs.len();
    let raw = body.surface_integral(
        rot,
        3 * k,
        |sp: &SurfacePoint, out: &mut [f64]| {
            let proj: Vec<f64> = cell.points.iter().map(|p| geom::dot(p, &sp.n)).collect();
            let ii: Vec<f64> = cell.points.iter().map(|p| sp.second_form(p)).collect();
            let tr = sp.trace();
            for (c, &l) in configs.iter().enumerate() {
                let e = extremes(l, &proj);
                let gap = e.mw - e.hb;
                out[c] = gap.max(0.0);
                out[k + c] = 0.0;
                out[2 * k + c] = 0.0;
                if gap > TIE_TOL {
                    let (plus, minus) = extremal_forms(l, &proj, &ii, &e);
                    let qp = -plus + tr * e.hb * e.hb;
                    let qm = -minus + tr * e.mw * e.mw;
                    out[k + c] = 0.5 * (qp - qm);
                } else if gap.abs() <= TIE_TOL {
                    let (plus, minus) = extremal_forms(l, &proj, &ii, &e);
                    out[2 * k + c] = 0.5 * (minus - plus).max(0.0);
                }
            }
        },
        opts,
    )?;
    Ok(BodyCoefficients {
        configs: configs.to_vec(),
        phi: raw[..k].to_vec(),
        lambda: raw[k..2 * k].to_vec(),
        tie: raw[2 * k..].to_vec(),
    })
}

pub fn body_coefficients(body: &Phantom, rot: &Mat3, opts: &QuadOptions) -> Result<BodyCoefficients> {
    let configs = separable_configs(body.dim)?;
    body_coefficients_for(body, rot, &configs, opts)
}

/// Second-order coefficient per unit length of the cylinder `[0, u] ⊕ B(r)`
/// in R³: `½∫_{S¹(u)} (Q⁺(B_l) − Q⁻(W_l)) δ dθ` with `Q(s) = ⟨s,n⟩² − ⟨s,u×n⟩²`
/// (the curvature scale cancels against the arc length scale).
pub fn cylinder_coefficients(u: &Vec3, configs: &[u64], opts: &QuadOptions) -> Result<Vec<Estimate>> {
    let u = geom::normalize(u);
    let (e, f) = geom::orthonormal_complement(&u);
    let circle = GreatCircle { e, f };
    let arcs = circle.arcs(&sphere::difference_directions(3), &[]);
    let cell = CellVertices::unit(3);
    let k = configs.len();
    quadrature::adaptive(
        arcs,
        k,
        |t: &f64, out: &mut [f64]| {
            let n = circle.at(*t);
            let sp = SurfacePoint {
                x: n,
                n,
                dirs: [u, geom::cross(&u, &n)],
                kappa: [0.0, 1.0],
            };
            let proj: Vec<f64> = cell.points.iter().map(|p| geom::dot(p, &n)).collect();
            let ii: Vec<f64> = cell.points.iter().map(|p| sp.second_form(p)).collect();
            for (c, &l) in configs.iter().enumerate() {
                let ex = extremes(l, &proj);
                out[c] = if ex.mw - ex.hb > TIE_TOL {
                    let (plus, minus) = extremal_forms(l, &proj, &ii, &ex);
                    0.5 * ((-plus + ex.hb * ex.hb) - (-minus + ex.mw * ex.mw))
                } else {
                    0.0
                };
            }
        },
        opts,
    )
}

/// `ζ = 3√2 arctan(√2) / (2π)`.
pub fn zeta() -> f64 {
    3.0 * 2f64.sqrt() * 2f64.sqrt().atan() / (2.0 * std::f64::consts::PI)
}

/// Closed-form `ψ̄_j` of the separable classes in R³, by class label.
pub fn closed_form_psi(d: usize, label: &str) -> Option<f64> {
    if d != 3 {
        return None;
    }
    let z = zeta();
    let (s2, s3) = (2f64.sqrt(), 3f64.sqrt());
    Some(match label {
        "1" | "7" => 3.0 - 4.0 * z,
        "2" | "6" => -3.0 + 12.0 * z - 3.0 * s2,
        "3" | "5" => 3.0 - 12.0 * z + 6.0 * s2 - 2.0 * s3,
        "4,1" => -3.0 + 2.0 * s3,
        "4,2" => 8.0 * z - 6.0 * s2 + 2.0 * s3,
        _ => return None,
    })
}

/// Closed-form `μ̄_j` of the separable classes in R³, by class label.
pub fn closed_form_mu(d: usize, label: &str) -> Option<f64> {
    if d != 3 {
        return None;
    }
    let (s2, s3) = (2f64.sqrt(), 3f64.sqrt());
    let m1 = 3.0 - s3;
    let m2 = 3.0 * s3 - 3.0 * s2;
    let m3 = -3.0 + 6.0 * s2 - 3.0 * s3;
    Some(match label {
        "1" => m1,
        "2" => m2,
        "3" => m3,
        "4,1" | "4,2" => 0.0,
        "5" => -m3,
        "6" => -m2,
        "7" => -m1,
        _ => return None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    Quadrature,
    /// Non-separable configurations: every coefficient vanishes identically.
    Exact,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::ClosedForm => "closed-form",
            Provenance::Quadrature => "quadrature",
            Provenance::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassCoefficients {
    pub class: usize,
    pub representative: u64,
    pub label: Option<String>,
    pub phi_bar: Option<Estimate>,
    pub psi_bar: Option<Estimate>,
    pub lambda_bar: Option<Estimate>,
    pub mu_bar: Option<Estimate>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigCoefficients {
    pub l: u64,
    pub phi: Option<Estimate>,
    pub lambda: Option<Estimate>,
    pub mu: Option<Estimate>,
}

/// Coefficients per class (and per configuration where computed).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub d: usize,
    pub rows: Vec<ClassCoefficients>,
    pub configs: Vec<ConfigCoefficients>,
}

fn sum_over(members: &[u64], configs: &[u64], values: &[Estimate]) -> Estimate {
    members
        .iter()
        .filter_map(|m| configs.iter().position(|c| c == m))
        .fold(Estimate::exact(0.0), |acc, i| acc + values[i])
}

impl CoefficientTable {
    fn empty(partition: &ClassPartition) -> Self {
        let d = partition.dim;
        let rows = (0..partition.len())
            .map(|j| {
                let rep = partition.representative(j);
                let sep = rep != 0 && rep != full_mask(d) && strictly_separable(rep, d).unwrap_or(false);
                ClassCoefficients {
                    class: j,
                    representative: rep,
                    label: partition.label(j).map(str::to_owned),
                    phi_bar: None,
                    psi_bar: None,
                    lambda_bar: None,
                    mu_bar: None,
                    provenance: if sep { Provenance::Quadrature } else { Provenance::Exact },
                }
            })
            .collect();
        CoefficientTable {
            d,
            rows,
            configs: Vec::new(),
        }
    }

    fn config_entry(&mut self, l: u64) -> &mut ConfigCoefficients {
        if let Some(i) = self.configs.iter().position(|c| c.l == l) {
            return &mut self.configs[i];
        }
        self.configs.push(ConfigCoefficients {
            l,
            phi: None,
            lambda: None,
            mu: None,
        });
        self.configs.last_mut().unwrap()
    }

    /// `ψ̄_j` and `μ̄_j` by quadrature.
    pub fn isotropic(partition: &ClassPartition, opts: &QuadOptions) -> Result<Self> {
        let iso = isotropic_coefficients(partition.dim, opts)?;
        let mut t = Self::empty(partition);
        for j in 0..partition.len() {
            let members = partition.members(j);
            t.rows[j].psi_bar = Some(sum_over(members, &iso.configs, &iso.psi));
            t.rows[j].mu_bar = Some(sum_over(members, &iso.configs, &iso.mu));
        }
        for (i, &l) in iso.configs.iter().enumerate() {
            t.config_entry(l).mu = Some(iso.mu[i]);
        }
        Ok(t)
    }

    /// `ψ̄_j`, `μ̄_j` from the known closed forms (three dimensions), falling
    /// back to quadrature where none is known.
    pub fn isotropic_closed_form(partition: &ClassPartition, opts: &QuadOptions) -> Result<Self> {
        let d = partition.dim;
        let mut t = Self::isotropic(partition, opts)?;
        for row in t.rows.iter_mut() {
            let Some(label) = row.label.clone() else { continue };
            if let (Some(p), Some(m)) = (closed_form_psi(d, &label), closed_form_mu(d, &label)) {
                row.psi_bar = Some(Estimate::exact(p));
                row.mu_bar = Some(Estimate::exact(m));
                row.provenance = Provenance::ClosedForm;
            }
        }
        Ok(t)
    }

    /// `φ̄_j(X)` and `λ̄_j(X)` for a lattice rotated by `rot`.
    pub fn for_body(partition: &ClassPartition, body: &Phantom, rot: &Mat3, opts: &QuadOptions) -> Result<Self> {
        if body.dim != partition.dim {
            return Err(Error::DimensionMismatch {
                expected: partition.dim,
                found: body.dim,
            });
        }
        let bc = body_coefficients(body, rot, opts)?;
        let mut t = Self::empty(partition);
        t.fill_body(partition, &bc);
        Ok(t)
    }

    pub fn fill_body(&mut self, partition: &ClassPartition, bc: &BodyCoefficients) {
        for j in 0..partition.len() {
            let members = partition.members(j);
            self.rows[j].phi_bar = Some(sum_over(members, &bc.configs, &bc.phi));
            self.rows[j].lambda_bar = Some(sum_over(members, &bc.configs, &bc.lambda));
        }
        for (i, &l) in bc.configs.iter().enumerate() {
            let e = self.config_entry(l);
            e.phi = Some(bc.phi[i]);
            e.lambda = Some(bc.lambda[i]);
        }
    }

    /// Copies the isotropic columns of `other` into `self`.
    pub fn merge_isotropic(&mut self, other: &CoefficientTable) {
        for (row, o) in self.rows.iter_mut().zip(&other.rows) {
            row.psi_bar = o.psi_bar;
            row.mu_bar = o.mu_bar;
            if o.provenance == Provenance::ClosedForm {
                row.provenance = Provenance::ClosedForm;
            }
        }
        for c in &other.configs {
            if let Some(mu) = c.mu {
                self.config_entry(c.l).mu = Some(mu);
            }
        }
    }

    /// CSV `class,phi_bar,psi_bar,lambda_bar,mu_bar,provenance,err`; missing
    /// columns are left empty and `err` is the largest error bound in the row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,phi_bar,psi_bar,lambda_bar,mu_bar,provenance,err\n");
        let cell = |e: &Option<Estimate>| e.map(|e| format!("{:.12}", e.value)).unwrap_or_default();
        for r in &self.rows {
            let err = [r.phi_bar, r.psi_bar, r.lambda_bar, r.mu_bar]
                .iter()
                .flatten()
                .map(|e| e.error)
                .fold(0.0, f64::max);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:.3e}",
                r.class,
                cell(&r.phi_bar),
                cell(&r.psi_bar),
                cell(&r.lambda_bar),
                cell(&r.mu_bar),
                r.provenance.as_str(),
                err
            );
        }
        out
    }

    pub fn class_by_label(&self, label: &str) -> Option<&ClassCoefficients> {
        self.rows.iter().find(|r| r.label.as_deref() == Some(label))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configs::orbit_classes;
    use crate::phantoms::Body;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn closed_form_numbers() {
        assert!((zeta() - 0.645_065).abs() < 1e-6);
        assert!((closed_form_psi(3, "1").unwrap() - 0.419_739).abs() < 1e-6);
        assert!((closed_form_mu(3, "2").unwrap() - 0.953_512).abs() < 1e-6);
        assert!(closed_form_mu(2, "1").is_none());
    }

    #[test]
    fn two_dimensional_isotropic_values() {
        // Oracle: in the plane the class sums reduce to elementary integrals
        // over one arc of angle π/4, e.g. ψ̄₁ = (8/π)(1 − 1/√2).
        let p = orbit_classes(2).unwrap();
        let t = CoefficientTable::isotropic(&p, &QuadOptions::with_tol(1e-11)).unwrap();
        let get = |label: &str| t.class_by_label(label).unwrap();
        let psi13 = 8.0 / PI * (1.0 - FRAC_1_SQRT_2);
        let psi2 = 8.0 / PI * (2f64.sqrt() - 1.0);
        assert!((get("1").psi_bar.unwrap().value - psi13).abs() < 1e-9);
        assert!((get("3").psi_bar.unwrap().value - psi13).abs() < 1e-9);
        assert!((get("2").psi_bar.unwrap().value - psi2).abs() < 1e-9);
        assert!((get("1").mu_bar.unwrap().value - 2.0).abs() < 1e-9);
        assert!(get("2").mu_bar.unwrap().value.abs() < 1e-9);
        assert!((get("3").mu_bar.unwrap().value + 2.0).abs() < 1e-9);
    }

    #[test]
    fn ball_lambda_is_rotation_average() {
        // For a ball every lattice rotation sees the same boundary, so
        // λ_l(Ball) = μ_l V_{d-2}(Ball) and φ̄_j = |∂X| ψ̄_j / 2.
        for d in [2, 3] {
            let r = 1.7;
            let ball = Phantom::ball(&vec![0.3; d], r).unwrap();
            let iso = isotropic_coefficients(d, &QuadOptions::with_tol(1e-10)).unwrap();
            let bc = body_coefficients(&ball, &IDENTITY, &QuadOptions::with_tol(1e-9)).unwrap();
            let v = ball.intrinsic_volumes();
            for (i, _) in iso.configs.iter().enumerate() {
                let want = iso.mu[i].value * v[d - 2];
                assert!((bc.lambda[i].value - want).abs() < 1e-7, "d={d}");
                let phi_want = 2.0 * v[d - 1] * iso.psi[i].value / 2.0;
                assert!((bc.phi[i].value - phi_want).abs() < 1e-7);
                assert_eq!(bc.tie[i].value, 0.0);
            }
        }
    }

    #[test]
    fn tie_term_vanishes_on_flat_and_cylindrical_patches() {
        let plate = Phantom::orthobody(&[0.0; 3], &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]], &[1.0, 2.0], 0.5).unwrap();
        let capsule = Phantom::capsule(&[0.0; 3], &[1.0, 0.0, 0.0], 2.0, 0.5).unwrap();
        for body in [plate, capsule] {
            let bc = body_coefficients(&body, &IDENTITY, &QuadOptions::with_tol(1e-8)).unwrap();
            assert!(bc.tie.iter().all(|e| e.value.abs() < 1e-12));
        }
    }

    #[test]
    fn capsule_lambda_splits_into_ball_and_cylinder() {
        let u = geom::normalize(&[1.0, 2.0, 2.0]);
        let (r, t) = (0.8, 1.5);
        let cap = Phantom::capsule(&[0.0; 3], &u, t, r).unwrap();
        let ball = Phantom::ball(&[0.0; 3], r).unwrap();
        let configs = separable_configs(3).unwrap();
        let opts = QuadOptions::with_tol(1e-9);
        let lc = body_coefficients_for(&cap, &IDENTITY, &configs, &opts).unwrap();
        let lb = body_coefficients_for(&ball, &IDENTITY, &configs, &opts).unwrap();
        let g = cylinder_coefficients(&u, &configs, &QuadOptions::with_tol(1e-11)).unwrap();
        for i in 0..configs.len() {
            let want = lb.lambda[i].value + t * g[i].value;
            assert!((lc.lambda[i].value - want).abs() < 1e-7);
        }
        assert!(cap.contains(&[0.0; 3]));
    }
}
