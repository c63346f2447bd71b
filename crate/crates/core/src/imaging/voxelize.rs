use rayon::prelude::*;

use super::image::BinaryImage;
use super::pose::LatticePose;
use crate::error::{Error, Result};
use crate::geom;
use crate::phantoms::Body;

/// Lattice-coordinate window `[lo_k, hi_k]` covering `X ⊕ B(margin)`.
fn window(body: &dyn Body, pose: &LatticePose, margin: f64) -> (Vec<i64>, Vec<usize>) {
    let d = pose.dim;
    let mut origin = Vec::with_capacity(d);
    let mut dims = Vec::with_capacity(d);
    for k in 0..d {
        let e = geom::normalize(&pose.step(k));
        let mut up = body.support(&e);
        let mut down = -body.support(&geom::scale(&e, -1.0));
        if !up.is_finite() || !down.is_finite() {
            // Empty body: a window around the origin is as good as any.
            up = 0.0;
            down = 0.0;
        }
        let lo = ((down - margin) / pose.a - pose.c[k]).floor() as i64;
        let hi = ((up + margin) / pose.a - pose.c[k]).ceil() as i64;
        origin.push(lo);
        dims.push((hi - lo + 1) as usize);
    }
    (origin, dims)
}

/// Samples `X` on every lattice point of a window containing `X ⊕ B(margin)`.
/// Boundary points count as inside.
pub fn voxelize(body: &dyn Body, pose: &LatticePose, margin: f64) -> Result<BinaryImage> {
    if body.dim() != pose.dim {
        return Err(Error::DimensionMismatch {
            expected: pose.dim,
            found: body.dim(),
        });
    }
    if !(margin >= pose.a) {
        return Err(Error::invalid(format!(
            "margin {margin} is smaller than the spacing {}",
            pose.a
        )));
    }
    let d = pose.dim;
    let (origin, dims) = window(body, pose, margin);
    let mut img = BinaryImage::zeros(&dims, &origin, pose.clone())?;
    let rb = img.row_bytes();
    let n = dims[d - 1] as i64;
    let step = pose.step(d - 1);
    img.bits.par_chunks_mut(rb).enumerate().for_each(|(r, row)| {
        // Row r enumerates the leading axes in row-major order.
        let mut k = vec![0i64; d];
        let mut rest = r;
        for ax in (0..d - 1).rev() {
            k[ax] = origin[ax] + (rest % dims[ax]) as i64;
            rest /= dims[ax];
        }
        k[d - 1] = origin[d - 1];
        let x0 = pose.point(&k);
        let Some((s0, s1)) = body.line_interval(&x0, &step) else {
            return;
        };
        let inside = |j: i64| body.contains(&geom::axpy(&x0, j as f64, &step));
        let mut lo = (s0.ceil() as i64).max(0);
        let mut hi = (s1.floor() as i64).min(n - 1);
        // The interval ends carry rounding; settle them with exact membership.
        while lo > 0 && inside(lo - 1) {
            lo -= 1;
        }
        while lo <= hi && !inside(lo) {
            lo += 1;
        }
        while hi < n - 1 && inside(hi + 1) {
            hi += 1;
        }
        while hi >= lo && !inside(hi) {
            hi -= 1;
        }
        for j in lo..=hi {
            let j = j as usize;
            row[j / 8] |= 1 << (j % 8);
        }
    });
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{unit_ball_volume, Vec3};
    use crate::phantoms::Phantom;

    struct Empty(usize);

    impl Body for Empty {
        fn dim(&self) -> usize {
            self.0
        }
        fn contains(&self, _: &Vec3) -> bool {
            false
        }
        fn support(&self, _: &Vec3) -> f64 {
            f64::NEG_INFINITY
        }
        fn line_interval(&self, _: &Vec3, _: &Vec3) -> Option<(f64, f64)> {
            None
        }
    }

    /// Every sample agrees with pointwise membership.
    fn check_pointwise(body: &dyn Body, img: &BinaryImage) {
        let d = img.dim();
        let total: usize = img.dims.iter().product();
        for flat in 0..total {
            let mut idx = vec![0usize; d];
            let mut rest = flat;
            for ax in (0..d).rev() {
                idx[ax] = rest % img.dims[ax];
                rest /= img.dims[ax];
            }
            let k: Vec<i64> = idx.iter().zip(&img.origin).map(|(&i, &o)| o + i as i64).collect();
            assert_eq!(img.get(&idx), body.contains(&img.pose.point(&k)), "{k:?}");
        }
    }

    #[test]
    fn ball_centre_is_set() {
        let a = 0.1;
        let ball = Phantom::ball(&[0.0; 3], 10.0 * a).unwrap();
        let img = voxelize(&ball, &LatticePose::axis_aligned(3, a).unwrap(), a).unwrap();
        let idx: Vec<usize> = img.origin.iter().map(|&o| (-o) as usize).collect();
        assert!(img.get(&idx));
        check_pointwise(&ball, &img);
    }

    #[test]
    fn empty_body() {
        let img = voxelize(&Empty(2), &LatticePose::axis_aligned(2, 0.5).unwrap(), 1.0).unwrap();
        assert_eq!(img.count_ones(), 0);
        assert!(img.dims.iter().all(|&n| n >= 2));
    }

    #[test]
    fn margin_too_small() {
        let ball = Phantom::ball(&[0.0; 2], 1.0).unwrap();
        assert!(voxelize(&ball, &LatticePose::axis_aligned(2, 0.1).unwrap(), 0.05).is_err());
    }

    #[test]
    fn volume_within_two_percent() {
        let r = 1.0;
        let a = r / 20.0;
        let (s, c) = (0.4f64.sin(), 0.4f64.cos());
        let pose = LatticePose::new(3, a, [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]], &[0.3, 0.1, 0.7]).unwrap();
        let ball = Phantom::ball(&[0.01, 0.02, -0.03], r).unwrap();
        let img = voxelize(&ball, &pose, a).unwrap();
        let vol = img.count_ones() as f64 * a.powi(3);
        let want = unit_ball_volume(3) * r.powi(3);
        assert!((vol / want - 1.0).abs() < 0.02, "{vol} vs {want}");
    }

    #[test]
    fn rotated_capsule_and_orthobody_match_membership() {
        let (s, c) = (0.7f64.sin(), 0.7f64.cos());
        let pose = LatticePose::new(2, 0.13, [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]], &[0.5, 0.25]).unwrap();
        let cap = Phantom::capsule(&[0.1, -0.2], &[1.0, 1.0], 1.5, 0.6).unwrap();
        check_pointwise(&cap, &voxelize(&cap, &pose, 0.26).unwrap());
        let pose3 = LatticePose::new(3, 0.21, crate::sphere::IDENTITY, &[0.5, 0.5, 0.0]).unwrap();
        let ob = Phantom::orthobody(
            &[0.0, 0.0, 0.0],
            &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
            &[1.0, 1.0],
            0.5,
        )
        .unwrap();
        check_pointwise(&ob, &voxelize(&ob, &pose3, 0.21).unwrap());
    }

    #[test]
    fn window_contains_dilated_body() {
        let r = 0.7;
        let a = 0.1;
        let ball = Phantom::ball(&[0.3, 0.0], r).unwrap();
        let img = voxelize(&ball, &LatticePose::axis_aligned(2, a).unwrap(), 2.0 * a).unwrap();
        // Border rows and columns lie farther than 2a from X.
        for k in 0..2 {
            let lo = img.origin[k] as f64 * a;
            let hi = (img.origin[k] + img.dims[k] as i64 - 1) as f64 * a;
            let centre = [0.3, 0.0][k];
            assert!(lo <= centre - r - 2.0 * a && hi >= centre + r + 2.0 * a);
        }
    }
}
