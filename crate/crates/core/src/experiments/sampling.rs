use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::imaging::LatticePose;
use crate::sphere::Mat3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Uniform translation, fixed rotation.
    Stationary,
    /// Uniform translation and Haar-uniform rotation.
    Isotropic,
}

/// Haar-uniform rotation: a uniform angle in the plane, a normalized
/// Gaussian quaternion in space.
pub fn haar_rotation(d: usize, rng: &mut ChaCha8Rng) -> Mat3 {
    if d == 2 {
        let (s, c) = rng.gen_range(0.0..std::f64::consts::TAU).sin_cos();
        return [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]];
    }
    let mut q = [0.0f64; 4];
    loop {
        for x in q.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            q.iter_mut().for_each(|x| *x /= n);
            break;
        }
    }
    let [w, x, y, z] = q;
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

/// A random lattice pose: `c` uniform on `[0,1)^d`, and `R` either `fixed`
/// or Haar-uniform.
pub fn sample_pose(mode: Mode, d: usize, a: f64, fixed: &Mat3, rng: &mut ChaCha8Rng) -> Result<LatticePose> {
    let c: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
    let rot = match mode {
        Mode::Stationary => *fixed,
        Mode::Isotropic => haar_rotation(d, rng),
    };
    LatticePose::new(d, a, rot, &c)
}

/// The stream of replicate `rep` at spacing index `a_index`.
pub fn replicate_rng(seed: u64, a_index: usize, rep: usize) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((a_index as u64) << 32) | rep as u64);
    rng
}
