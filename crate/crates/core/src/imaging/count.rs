use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::image::BinaryImage;
use crate::configs::{config_count, ClassPartition};
use crate::error::{Error, Result};

/// `N_l` for every configuration `l` over the cells inside a window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigHistogram {
    pub dim: usize,
    pub counts: Vec<u64>,
    pub window_cells: u64,
}

impl ConfigHistogram {
    pub fn empty(dim: usize) -> Self {
        ConfigHistogram {
            dim,
            counts: vec![0; config_count(dim)],
            window_cells: 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// One `l,count` row per configuration.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("l,count\n");
        for (l, c) in self.counts.iter().enumerate() {
            s.push_str(&format!("{l},{c}\n"));
        }
        s
    }

    pub fn from_csv(dim: usize, text: &str) -> Result<Self> {
        let mut h = Self::empty(dim);
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("l,count") {
            return Err(Error::Format("histogram CSV must start with `l,count`".into()));
        }
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let (l, c) = line
                .split_once(',')
                .ok_or_else(|| Error::Format(format!("bad histogram row `{line}`")))?;
            let l: usize = l.trim().parse().map_err(|_| Error::Format(format!("bad index `{l}`")))?;
            let c: u64 = c.trim().parse().map_err(|_| Error::Format(format!("bad count `{c}`")))?;
            *h.counts
                .get_mut(l)
                .ok_or_else(|| Error::Format(format!("configuration {l} out of range")))? = c;
        }
        h.window_cells = h.total();
        Ok(h)
    }
}

fn check_dim(img: &BinaryImage) -> Result<usize> {
    match img.dim() {
        d @ 2..=3 => Ok(d),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

/// Places bit `t` of a byte at position `t·m`.
fn spread_table(m: usize) -> [u32; 256] {
    let mut t = [0u32; 256];
    for (b, e) in t.iter_mut().enumerate() {
        for bit in 0..8 {
            if b >> bit & 1 == 1 {
                *e |= 1 << (bit * m);
            }
        }
    }
    t
}

/// Histogram of cell codes. Streams the `2^{d-1}` rows of each cell row a
/// byte at a time: the spread bytes interleave into `m`-bit column codes, and
/// two adjacent columns form a cell code.
pub fn count_configurations(img: &BinaryImage) -> Result<ConfigHistogram> {
    let d = check_dim(img)?;
    let mut hist = ConfigHistogram::empty(d);
    hist.window_cells = img.cell_count();
    if hist.window_cells == 0 {
        return Ok(hist);
    }
    let m = 1usize << (d - 1);
    let spread = spread_table(m);
    let n = img.dims[d - 1];
    let rb = img.row_bytes();
    let cell_mask = (1u64 << (2 * m)) - 1;
    let col_bits = 8 * m;
    // Row offsets of the cell's leading-axis corners, indexed by their bits.
    let stride1 = if d == 3 { img.dims[1] } else { 1 };
    let offsets: Vec<usize> = (0..m)
        .map(|u| if d == 2 { u } else { (u & 1) * stride1 + (u >> 1) })
        .collect();
    let anchors_per_slab = if d == 3 { img.dims[1] - 1 } else { 1 };
    let slabs = img.dims[0] - 1;
    let counts = (0..slabs)
        .into_par_iter()
        .fold(
            || vec![0u64; config_count(d)],
            |mut local, s| {
                for t in 0..anchors_per_slab {
                    let base = s * stride1 + t;
                    let rows: Vec<&[u8]> = offsets.iter().map(|o| img.row(base + o)).collect();
                    let cols = |k: usize| -> u64 {
                        let mut c = 0u32;
                        for (u, row) in rows.iter().enumerate() {
                            c |= spread[row[k] as usize] << u;
                        }
                        c as u64
                    };
                    let mut cur = cols(0);
                    for k in 0..rb {
                        let next = if k + 1 < rb { cols(k + 1) } else { 0 };
                        let w = cur | (next << col_bits);
                        let first = 8 * k;
                        let last = (first + 8).min(n - 1);
                        for j in first..last {
                            local[((w >> ((j - first) * m)) & cell_mask) as usize] += 1;
                        }
                        cur = next;
                    }
                }
                local
            },
        )
        .reduce(
            || vec![0u64; config_count(d)],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    hist.counts = counts;
    Ok(hist)
}

/// Per-cell, per-corner reference count.
pub fn brute_force_count(img: &BinaryImage) -> Result<ConfigHistogram> {
    let d = check_dim(img)?;
    let mut hist = ConfigHistogram::empty(d);
    hist.window_cells = img.cell_count();
    let cells: Vec<usize> = img.dims.iter().map(|&n| n.saturating_sub(1)).collect();
    let total: usize = cells.iter().product();
    let mut z = [0usize; 3];
    let mut corner = [0usize; 3];
    for flat in 0..total {
        let mut rest = flat;
        for ax in (0..d).rev() {
            z[ax] = rest % cells[ax];
            rest /= cells[ax];
        }
        let mut code = 0usize;
        for i in 0..(1usize << d) {
            for k in 0..d {
                corner[k] = z[k] + (i >> k & 1);
            }
            if img.get(&corner[..d]) {
                code |= 1 << i;
            }
        }
        hist.counts[code] += 1;
    }
    Ok(hist)
}

/// `N̄_j = Σ_{l∈η_j} N_l`.
pub fn count_classes(hist: &ConfigHistogram, partition: &ClassPartition) -> Result<Vec<u64>> {
    if hist.dim != partition.dim {
        return Err(Error::DimensionMismatch {
            expected: partition.dim,
            found: hist.dim,
        });
    }
    Ok((0..partition.len())
        .map(|j| partition.members(j).iter().map(|&l| hist.counts[l as usize]).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configs::orbit_classes;
    use crate::imaging::LatticePose;
    use proptest::prelude::*;

    fn image(dims: &[usize], ones: &[bool]) -> BinaryImage {
        let pose = LatticePose::axis_aligned(dims.len(), 1.0).unwrap();
        let mut img = BinaryImage::zeros(dims, &vec![0; dims.len()], pose).unwrap();
        let d = dims.len();
        for (flat, &v) in ones.iter().enumerate() {
            let mut idx = vec![0; d];
            let mut rest = flat;
            for ax in (0..d).rev() {
                idx[ax] = rest % dims[ax];
                rest /= dims[ax];
            }
            img.set(&idx, v);
        }
        img
    }

    #[test]
    fn constant_images() {
        for d in 2..=3 {
            let n: usize = 7;
            let dims = vec![n; d];
            let size = n.pow(d as u32);
            let cells = ((n - 1) as u64).pow(d as u32);
            let zero = count_configurations(&image(&dims, &vec![false; size])).unwrap();
            assert_eq!(zero.counts[0], cells);
            assert_eq!(zero.total(), cells);
            let one = count_configurations(&image(&dims, &vec![true; size])).unwrap();
            assert_eq!(*one.counts.last().unwrap(), cells);
            let classes = count_classes(&zero, &orbit_classes(d).unwrap()).unwrap();
            assert_eq!(classes[orbit_classes(d).unwrap().empty_class()], cells);
        }
    }

    #[test]
    fn single_pixel() {
        let n = 6;
        let mut ones = vec![false; n * n];
        ones[2 * n + 3] = true;
        let h = count_configurations(&image(&[n, n], &ones)).unwrap();
        for l in [1, 2, 4, 8] {
            assert_eq!(h.counts[l], 1);
        }
        assert_eq!(h.counts[0], ((n - 1) * (n - 1) - 4) as u64);
        let p = orbit_classes(2).unwrap();
        let classes = count_classes(&h, &p).unwrap();
        assert_eq!(classes[p.class_by_label("1").unwrap()], 4);
        assert!(count_classes(&h, &orbit_classes(3).unwrap()).is_err());
    }

    #[test]
    fn unit_counts_give_class_sizes() {
        let p = orbit_classes(3).unwrap();
        let h = ConfigHistogram {
            dim: 3,
            counts: vec![1; 256],
            window_cells: 256,
        };
        let classes = count_classes(&h, &p).unwrap();
        for j in 0..p.len() {
            assert_eq!(classes[j], p.members(j).len() as u64);
        }
    }

    #[test]
    fn degenerate_windows() {
        let h = count_configurations(&image(&[1, 5], &[true; 5])).unwrap();
        assert_eq!(h.total(), 0);
        let h = count_configurations(&image(&[3, 1, 4], &[true; 12])).unwrap();
        assert_eq!(h.total(), 0);
    }

    #[test]
    fn csv_round_trip() {
        let mut h = ConfigHistogram::empty(2);
        h.counts[0] = 9;
        h.counts[5] = 2;
        h.window_cells = 11;
        let back = ConfigHistogram::from_csv(2, &h.to_csv()).unwrap();
        assert_eq!(back, h);
        assert!(ConfigHistogram::from_csv(2, "l,count\n16,1\n").is_err());
    }

    fn arb_image(d: usize) -> impl Strategy<Value = (Vec<usize>, Vec<bool>)> {
        proptest::collection::vec(1usize..20, d).prop_flat_map(|dims| {
            let size: usize = dims.iter().product();
            (Just(dims), proptest::collection::vec(any::<bool>(), size))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn fast_equals_oracle_2d((dims, ones) in arb_image(2)) {
            let img = image(&dims, &ones);
            prop_assert_eq!(count_configurations(&img).unwrap(), brute_force_count(&img).unwrap());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn fast_equals_oracle_3d((dims, ones) in arb_image(3)) {
            let img = image(&dims, &ones);
            let h = count_configurations(&img).unwrap();
            prop_assert_eq!(&h, &brute_force_count(&img).unwrap());
            prop_assert_eq!(h.total(), img.cell_count());
        }

        #[test]
        fn complement_duality((dims, ones) in arb_image(3)) {
            let img = image(&dims, &ones);
            let h = count_configurations(&img).unwrap();
            let g = count_configurations(&img.inverted()).unwrap();
            for l in 0..256 {
                prop_assert_eq!(h.counts[l], g.counts[255 - l]);
            }
        }
    }
}
