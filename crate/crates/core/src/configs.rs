//! Configurations of the unit cell, the cube symmetry group and its orbits.
//!
//! The vertices of the unit cell `{0,1}^d` are numbered so that vertex `i` has
//! coordinate `k` equal to bit `k` of `i`. A configuration is a subset of the
//! vertices (the foreground, or black, vertices) and is identified with the
//! integer mask whose bit `i` is set exactly when vertex `i` is black.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest dimension for which configurations and orbits are enumerated.
pub const MAX_CONFIG_DIM: usize = 4;

fn check_dim(d: usize) -> Result<()> {
    if (1..=MAX_CONFIG_DIM).contains(&d) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(d))
    }
}

/// Number of cell vertices, `2^d`.
pub fn vertex_count(d: usize) -> usize {
    1 << d
}

/// Number of configurations, `2^(2^d)`.
pub fn config_count(d: usize) -> usize {
    1 << (1 << d)
}

/// Mask of the configuration with every vertex black.
pub fn full_mask(d: usize) -> u64 {
    (config_count(d) - 1) as u64
}

/// Integer coordinates of cell vertex `i`.
pub fn vertex_coords(i: usize, d: usize) -> Vec<u8> {
    (0..d).map(|k| ((i >> k) & 1) as u8).collect()
}

/// Real coordinates of cell vertex `i`, padded to three components.
pub fn vertex_point(i: usize) -> [f64; 3] {
    [(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64]
}

/// A subset of the unit-cell vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    pub dim: usize,
    pub mask: u64,
}

impl Configuration {
    pub fn new(dim: usize, mask: u64) -> Result<Self> {
        check_dim(dim)?;
        if mask > full_mask(dim) {
            return Err(Error::invalid(format!(
                "mask {mask} out of range for d={dim}"
            )));
        }
        Ok(Configuration { dim, mask })
    }

    /// The configuration index `l`; identical to the mask.
    pub fn index(&self) -> u64 {
        self.mask
    }

    /// Black/white swap.
    pub fn complement(&self) -> Configuration {
        Configuration {
            dim: self.dim,
            mask: full_mask(self.dim) ^ self.mask,
        }
    }

    pub fn contains_vertex(&self, i: usize) -> bool {
        (self.mask >> i) & 1 == 1
    }

    /// Indices of the black vertices.
    pub fn black(&self) -> Vec<usize> {
        (0..vertex_count(self.dim))
            .filter(|&i| self.contains_vertex(i))
            .collect()
    }

    /// Indices of the white vertices.
    pub fn white(&self) -> Vec<usize> {
        (0..vertex_count(self.dim))
            .filter(|&i| !self.contains_vertex(i))
            .collect()
    }

    pub fn black_points(&self) -> Vec<[f64; 3]> {
        self.black().into_iter().map(vertex_point).collect()
    }

    pub fn white_points(&self) -> Vec<[f64; 3]> {
        self.white().into_iter().map(vertex_point).collect()
    }

    pub fn black_count(&self) -> u32 {
        self.mask.count_ones()
    }
}

/// Index of the configuration whose black vertices are `vertex_subset`.
///
/// Every vector must have `d` coordinates in `{0,1}`; duplicates are rejected.
pub fn config_index<T>(vertex_subset: &[Vec<T>], d: usize) -> Result<u64>
where
    T: Copy + Into<i64>,
{
    check_dim(d)?;
    let mut mask = 0u64;
    for v in vertex_subset {
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: v.len(),
            });
        }
        let mut i = 0usize;
        for (k, &c) in v.iter().enumerate() {
            match c.into() {
                0 => {}
                1 => i |= 1 << k,
                other => {
                    return Err(Error::invalid(format!(
                        "vertex coordinate {other} is not 0 or 1"
                    )))
                }
            }
        }
        if mask & (1 << i) != 0 {
            return Err(Error::invalid("duplicate vertex in configuration"));
        }
        mask |= 1 << i;
    }
    Ok(mask)
}

/// A cube symmetry: coordinate `k` of a point is sent to coordinate `perm[k]`,
/// after reflecting it (`x -> 1 - x` on the cell) when bit `k` of `flips` is set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedPermutation {
    pub perm: Vec<usize>,
    pub flips: u32,
}

impl SignedPermutation {
    /// Image of a cell vertex index.
    pub fn map_vertex(&self, i: usize) -> usize {
        let mut out = 0;
        for (k, &pk) in self.perm.iter().enumerate() {
            let bit = ((i >> k) & 1) ^ ((self.flips as usize >> k) & 1);
            out |= bit << pk;
        }
        out
    }

    /// The linear part acting on direction vectors (reflections drop the
    /// translation back into the cell).
    pub fn map_direction(&self, v: &[f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (k, &pk) in self.perm.iter().enumerate() {
            let s = if (self.flips >> k) & 1 == 1 { -1.0 } else { 1.0 };
            out[pk] = s * v[k];
        }
        out
    }
}

/// The rigid motions and reflections preserving the unit cell, acting on
/// vertex indices.
#[derive(Debug, Clone)]
pub struct SymmetryGroup {
    pub dim: usize,
    pub generators: Vec<SignedPermutation>,
    /// `elements[g][i]` is the image of vertex `i` under element `g`.
    pub elements: Vec<Vec<usize>>,
}

impl SymmetryGroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// Image of a configuration mask under element `g`.
    pub fn act(&self, g: usize, mask: u64) -> u64 {
        let map = &self.elements[g];
        let mut out = 0u64;
        let mut m = mask;
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            out |= 1 << map[i];
            m &= m - 1;
        }
        out
    }

    /// Number of vertex cycles of element `g`.
    pub fn cycle_count(&self, g: usize) -> usize {
        let map = &self.elements[g];
        let mut seen = vec![false; map.len()];
        let mut cycles = 0;
        for start in 0..map.len() {
            if seen[start] {
                continue;
            }
            cycles += 1;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = map[i];
            }
        }
        cycles
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                rec(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// All `d! * 2^d` signed permutations of the cell, identity first.
pub fn build_symmetry_group(d: usize) -> Result<SymmetryGroup> {
    check_dim(d)?;
    let mut generators = Vec::new();
    for perm in permutations(d) {
        for flips in 0..(1u32 << d) {
            generators.push(SignedPermutation {
                perm: perm.clone(),
                flips,
            });
        }
    }
    let elements = generators
        .iter()
        .map(|g| (0..vertex_count(d)).map(|i| g.map_vertex(i)).collect())
        .collect();
    Ok(SymmetryGroup {
        dim: d,
        generators,
        elements,
    })
}

/// The orbits of all configurations under the cube symmetry group.
///
/// Classes are numbered by increasing representative, where the
/// representative is the smallest mask in the orbit.
#[derive(Debug, Clone)]
pub struct ClassPartition {
    pub dim: usize,
    pub classes: Vec<Vec<u64>>,
    pub class_of: Vec<usize>,
}

impl ClassPartition {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn representative(&self, j: usize) -> u64 {
        self.classes[j][0]
    }

    pub fn representatives(&self) -> Vec<u64> {
        self.classes.iter().map(|c| c[0]).collect()
    }

    pub fn members(&self, j: usize) -> &[u64] {
        &self.classes[j]
    }

    pub fn class_of_mask(&self, mask: u64) -> usize {
        self.class_of[mask as usize]
    }

    /// Class holding the complements of the members of class `j`.
    pub fn complement_class(&self, j: usize) -> usize {
        self.class_of_mask(full_mask(self.dim) ^ self.representative(j))
    }

    pub fn empty_class(&self) -> usize {
        self.class_of_mask(0)
    }

    pub fn full_class(&self) -> usize {
        self.class_of_mask(full_mask(self.dim))
    }

    /// Conventional label of class `j`, where one exists (see [`class_label`]).
    pub fn label(&self, j: usize) -> Option<&'static str> {
        class_label(self.dim, self.representative(j))
    }

    /// Class carrying a conventional label such as `"1"` or `"4,2"`.
    pub fn class_by_label(&self, label: &str) -> Option<usize> {
        (0..self.len()).find(|&j| self.label(j) == Some(label))
    }
}

/// Conventional names of the strictly separable classes, keyed by
/// representative mask.
///
/// In the plane: `1` one black vertex, `2` an edge, `3` three black vertices.
/// In space: `1` a single vertex, `2` an edge, `3` three vertices of a face,
/// `4,1` a face, `4,2` a vertex with its three neighbours, and `5`, `6`, `7`
/// the complements of `3`, `2`, `1`. The remaining classes are unnamed.
pub fn class_label(d: usize, representative: u64) -> Option<&'static str> {
    match (d, representative) {
        (2, 1) => Some("1"),
        (2, 3) => Some("2"),
        (2, 7) => Some("3"),
        (3, 1) => Some("1"),
        (3, 3) => Some("2"),
        (3, 7) => Some("3"),
        (3, 15) => Some("4,1"),
        (3, 23) => Some("4,2"),
        (3, 31) => Some("5"),
        (3, 63) => Some("6"),
        (3, 127) => Some("7"),
        _ => None,
    }
}

pub fn orbit_classes(d: usize) -> Result<ClassPartition> {
    let group = build_symmetry_group(d)?;
    Ok(orbit_classes_of(&group))
}

pub fn orbit_classes_of(group: &SymmetryGroup) -> ClassPartition {
    let d = group.dim;
    let n = config_count(d);
    let mut class_of = vec![usize::MAX; n];
    let mut classes = Vec::new();
    // Scanning masks in increasing order makes the first unseen mask the
    // minimal member of its orbit, so classes come out sorted by representative.
    for l in 0..n as u64 {
        if class_of[l as usize] != usize::MAX {
            continue;
        }
        let mut orbit: Vec<u64> = (0..group.order()).map(|g| group.act(g, l)).collect();
        orbit.sort_unstable();
        orbit.dedup();
        let j = classes.len();
        for &m in &orbit {
            class_of[m as usize] = j;
        }
        classes.push(orbit);
    }
    ClassPartition {
        dim: d,
        classes,
        class_of,
    }
}

/// Number of orbits by Burnside's lemma.
pub fn burnside_count(group: &SymmetryGroup) -> u64 {
    let total: u64 = (0..group.order()).map(|g| 1u64 << group.cycle_count(g)).sum();
    total / group.order() as u64
}

/// Bound on the integer weights needed to realise any threshold function of
/// `d` boolean variables, `(d+1)^((d+1)/2) / 2^d`, rounded up.
fn threshold_weight_bound(d: usize) -> i64 {
    let b = ((d + 1) as f64).powf((d + 1) as f64 / 2.0) / (1u64 << d) as f64;
    b.ceil() as i64
}

/// Whether the black and white vertices of `l` can be strictly separated by a
/// hyperplane, i.e. their convex hulls are disjoint.
///
/// Decided in exact integer arithmetic: two sets of cube vertices are strictly
/// separable exactly when some integer normal with entries bounded by the
/// threshold-function weight bound separates them.
pub fn strictly_separable(l: u64, d: usize) -> Result<bool> {
    check_dim(d)?;
    if l == 0 || l >= full_mask(d) {
        return Err(Error::invalid(format!(
            "configuration {l} has an empty black or white set"
        )));
    }
    let k = threshold_weight_bound(d);
    let side = (2 * k + 1) as usize;
    let nv = vertex_count(d);
    let mut normal = vec![0i64; d];
    for code in 0..side.pow(d as u32) {
        let mut c = code;
        for nk in normal.iter_mut() {
            *nk = (c % side) as i64 - k;
            c /= side;
        }
        let mut max_black = i64::MIN;
        let mut min_white = i64::MAX;
        for i in 0..nv {
            let p: i64 = (0..d).map(|t| ((i >> t) & 1) as i64 * normal[t]).sum();
            if (l >> i) & 1 == 1 {
                max_black = max_black.max(p);
            } else {
                min_white = min_white.min(p);
            }
        }
        if max_black < min_white {
            return Ok(true);
        }
    }
    Ok(false)
}

/// One row of the exported class table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassRow {
    pub id: usize,
    pub representative_mask: u64,
    pub label: Option<String>,
    pub members: Vec<u64>,
    /// `None` for the all-white and all-black classes.
    pub separable: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassTable {
    pub d: usize,
    pub classes: Vec<ClassRow>,
}

impl ClassTable {
    pub fn new(partition: &ClassPartition) -> Result<Self> {
        let d = partition.dim;
        let classes = (0..partition.len())
            .map(|j| {
                let rep = partition.representative(j);
                let separable = if rep == 0 || rep == full_mask(d) {
                    None
                } else {
                    Some(strictly_separable(rep, d)?)
                };
                Ok(ClassRow {
                    id: j,
                    representative_mask: rep,
                    label: partition.label(j).map(str::to_owned),
                    members: partition.members(j).to_vec(),
                    separable,
                })
            })
            .collect::<Result<_>>()?;
        Ok(ClassTable { d, classes })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,representative_mask,label,size,separable\n");
        for row in &self.classes {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.id,
                row.representative_mask,
                row.label.as_deref().unwrap_or(""),
                row.members.len(),
                row.separable.map(|s| s.to_string()).unwrap_or_default()
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_examples() {
        assert_eq!(config_index(&[vec![0u8, 0]], 2).unwrap(), 1);
        assert_eq!(config_index::<u8>(&[], 2).unwrap(), 0);
        assert_eq!(config_index(&[vec![1u8, 0], vec![1, 1]], 2).unwrap(), 10);
        assert!(config_index(&[vec![2i64, 0]], 2).is_err());
        assert!(config_index(&[vec![1u8, 0], vec![1, 0]], 2).is_err());
        assert!(config_index(&[vec![1u8, 0, 0]], 2).is_err());
    }

    #[test]
    fn vertex_numbering() {
        assert_eq!(vertex_coords(6, 3), vec![0, 1, 1]);
        assert_eq!(vertex_point(5), [1.0, 0.0, 1.0]);
        let c = Configuration::new(2, 6).unwrap();
        assert_eq!(c.complement().mask, 9);
        assert_eq!(c.black(), vec![1, 2]);
        assert_eq!(c.white(), vec![0, 3]);
        assert!(Configuration::new(2, 16).is_err());
    }

    #[test]
    fn group_orders_and_identity() {
        assert_eq!(build_symmetry_group(2).unwrap().order(), 8);
        let g3 = build_symmetry_group(3).unwrap();
        assert_eq!(g3.order(), 48);
        assert_eq!(g3.elements[0], (0..8).collect::<Vec<_>>());
        assert!(build_symmetry_group(0).is_err());
        assert!(build_symmetry_group(5).is_err());
    }

    #[test]
    fn group_is_closed() {
        let g = build_symmetry_group(3).unwrap();
        let set: std::collections::HashSet<Vec<usize>> = g.elements.iter().cloned().collect();
        assert_eq!(set.len(), 48);
        for a in &g.elements {
            let mut seen = [false; 8];
            for &x in a {
                seen[x] = true;
            }
            assert!(seen.iter().all(|&s| s));
            for b in &g.elements {
                let comp: Vec<usize> = (0..8).map(|i| a[b[i]]).collect();
                assert!(set.contains(&comp));
            }
            let mut inv = vec![0; 8];
            for i in 0..8 {
                inv[a[i]] = i;
            }
            assert!(set.contains(&inv));
        }
    }

    #[test]
    fn orbit_sizes() {
        let p2 = orbit_classes(2).unwrap();
        let sizes: Vec<usize> = p2.classes.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![1, 4, 4, 2, 4, 1]);
        let p3 = orbit_classes(3).unwrap();
        assert_eq!(p3.len(), 22);
        assert_eq!(p3.classes.iter().map(Vec::len).sum::<usize>(), 256);
        assert_eq!(p3.members(p3.class_of_mask(1)).len(), 8);
    }

    #[test]
    fn burnside_agrees() {
        for d in 1..=4 {
            let g = build_symmetry_group(d).unwrap();
            let p = orbit_classes_of(&g);
            assert_eq!(burnside_count(&g), p.len() as u64, "d={d}");
        }
    }

    #[test]
    fn labelled_classes() {
        let p3 = orbit_classes(3).unwrap();
        for (label, size) in [
            ("1", 8),
            ("2", 12),
            ("3", 24),
            ("4,1", 6),
            ("4,2", 8),
            ("5", 24),
            ("6", 12),
            ("7", 8),
        ] {
            let j = p3.class_by_label(label).unwrap();
            assert_eq!(p3.members(j).len(), size, "class {label}");
        }
        let j1 = p3.class_by_label("1").unwrap();
        assert_eq!(p3.complement_class(j1), p3.class_by_label("7").unwrap());
    }

    #[test]
    fn separability_examples() {
        assert!(!strictly_separable(6, 2).unwrap());
        assert!(!strictly_separable(9, 2).unwrap());
        assert!(strictly_separable(1, 2).unwrap());
        assert!(strictly_separable(0, 2).is_err());
        assert!(strictly_separable(15, 2).is_err());
        let count = (1..255).filter(|&l| strictly_separable(l, 3).unwrap()).count();
        assert_eq!(count, 102);
    }

    #[test]
    fn separability_matches_labels() {
        // Exactly the labelled classes are separable.
        for d in [2, 3] {
            let p = orbit_classes(d).unwrap();
            for j in 0..p.len() {
                let rep = p.representative(j);
                if rep == 0 || rep == full_mask(d) {
                    continue;
                }
                let sep = strictly_separable(rep, d).unwrap();
                assert_eq!(sep, p.label(j).is_some(), "d={d} rep={rep}");
                for &m in p.members(j) {
                    assert_eq!(strictly_separable(m, d).unwrap(), sep);
                    let c = full_mask(d) ^ m;
                    assert_eq!(strictly_separable(c, d).unwrap(), sep);
                }
            }
        }
    }

    #[test]
    fn class_table_json() {
        let t = ClassTable::new(&orbit_classes(2).unwrap()).unwrap();
        let v = serde_json::to_value(&t).unwrap();
        assert_eq!(v["d"], 2);
        assert_eq!(v["classes"].as_array().unwrap().len(), 6);
        assert_eq!(v["classes"][3]["representative_mask"], 6);
        assert_eq!(v["classes"][3]["separable"], false);
        assert!(v["classes"][0]["separable"].is_null());
        assert_eq!(t.to_csv().lines().count(), 7);
    }
}
