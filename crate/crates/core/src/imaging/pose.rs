use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::sphere::{mat_vec, Mat3, IDENTITY};

/// The lattice `aR(ℤ^d + c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePose {
    pub dim: usize,
    pub a: f64,
    /// `R` embedded in a 3×3 matrix (identity on the third axis when d = 2).
    pub rot: Mat3,
    pub c: Vec3,
}

const ORTHO_TOL: f64 = 1e-12;

impl LatticePose {
    pub fn new(dim: usize, a: f64, rot: Mat3, c: &[f64]) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::invalid("lattice spacing must be positive"));
        }
        if c.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: c.len(),
            });
        }
        if c.iter().any(|x| !(0.0..1.0).contains(x)) {
            return Err(Error::invalid("translation must lie in [0,1)^d"));
        }
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| rot[k][i] * rot[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > ORTHO_TOL {
                    return Err(Error::invalid("rotation is not orthonormal"));
                }
            }
        }
        if dim == 2 && (rot[2] != [0.0, 0.0, 1.0] || rot[0][2] != 0.0 || rot[1][2] != 0.0) {
            return Err(Error::invalid("planar rotation must fix the third axis"));
        }
        if det(&rot) < 0.0 {
            return Err(Error::invalid("rotation must have determinant +1"));
        }
        let mut cc = [0.0; 3];
        cc[..dim].copy_from_slice(c);
        Ok(LatticePose { dim, a, rot, c: cc })
    }

    pub fn axis_aligned(dim: usize, a: f64) -> Result<Self> {
        Self::new(dim, a, IDENTITY, &vec![0.0; dim])
    }

    /// From a `d×d` row-major rotation.
    pub fn from_rows(dim: usize, a: f64, rows: &[Vec<f64>], c: &[f64]) -> Result<Self> {
        if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid(format!("rotation must be {dim}×{dim}")));
        }
        let mut m = IDENTITY;
        for i in 0..dim {
            for j in 0..dim {
                m[i][j] = rows[i][j];
            }
        }
        Self::new(dim, a, m, c)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.rot[i][..self.dim].to_vec()).collect()
    }

    /// Position of the lattice point with integer coordinates `k`.
    pub fn point(&self, k: &[i64]) -> Vec3 {
        let mut v = self.c;
        for (i, &ki) in k.iter().enumerate() {
            v[i] += ki as f64;
        }
        let p = mat_vec(&self.rot, &v);
        [p[0] * self.a, p[1] * self.a, p[2] * self.a]
    }

    /// `a R e_k`, the step along lattice axis `k`.
    pub fn step(&self, k: usize) -> Vec3 {
        [self.rot[0][k] * self.a, self.rot[1][k] * self.a, self.rot[2][k] * self.a]
    }
}

fn det(m: &Mat3) -> f64 {
    crate::geom::det3(&m[0], &m[1], &m[2])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(LatticePose::axis_aligned(3, 0.1).is_ok());
        assert!(LatticePose::axis_aligned(3, 0.0).is_err());
        assert!(LatticePose::new(2, 1.0, IDENTITY, &[1.0, 0.0]).is_err());
        let flip = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]];
        assert!(LatticePose::new(3, 1.0, flip, &[0.0; 3]).is_err());
        let skew = [[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(LatticePose::new(3, 1.0, skew, &[0.0; 3]).is_err());
    }

    #[test]
    fn points() {
        let (s, c) = 0.3f64.sin_cos();
        let p = LatticePose::from_rows(2, 2.0, &[vec![c, -s], vec![s, c]], &[0.5, 0.25]).unwrap();
        let x = p.point(&[1, 0]);
        assert!((x[0] - 2.0 * (1.5 * c - 0.25 * s)).abs() < 1e-15);
        assert_eq!(p.rows()[0], vec![c, -s]);
        assert!((p.step(1)[0] + 2.0 * s).abs() < 1e-15);
    }
}
