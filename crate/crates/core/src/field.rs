//! Scalar data on the input grid and its restriction to each level.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::hierarchy::{Hierarchy, VertexId};

/// Scalar values on the vertices of the input grid, x fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    verts: [usize; 3],
    values: Vec<f64>,
}

impl ScalarField {
    /// `verts` holds vertex counts per axis (z = 1 for 2D data).
    pub fn new(verts: [usize; 3], values: Vec<f64>) -> Result<Self> {
        let n: usize = verts.iter().product();
        if n == 0 {
            return Err(Error::invalid("empty grid"));
        }
        if values.len() != n {
            return Err(Error::invalid(format!(
                "expected {n} values for dims {verts:?}, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::invalid(format!("NaN value at index {i}")));
        }
        Ok(ScalarField { verts, values })
    }

    /// Builds a field by evaluating `f` at every grid vertex.
    pub fn from_fn(verts: [usize; 3], mut f: impl FnMut([usize; 3]) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(verts.iter().product());
        for z in 0..verts[2] {
            for y in 0..verts[1] {
                for x in 0..verts[0] {
                    values.push(f([x, y, z]));
                }
            }
        }
        Self::new(verts, values)
    }

    pub fn verts(&self) -> [usize; 3] {
        self.verts
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index(&self, c: [usize; 3]) -> usize {
        c[0] + self.verts[0] * (c[1] + self.verts[1] * c[2])
    }

    pub fn at(&self, c: [usize; 3]) -> f64 {
        self.values[self.index(c)]
    }

    /// 2 if the z axis is flat, 3 otherwise.
    pub fn dimension(&self) -> usize {
        if self.verts[2] == 1 {
            2
        } else {
            3
        }
    }

    /// Cell counts per axis, as expected by [`Hierarchy::build`].
    pub fn cells(&self) -> [usize; 3] {
        [
            self.verts[0].saturating_sub(1),
            self.verts[1].saturating_sub(1),
            self.verts[2].saturating_sub(1),
        ]
    }

    /// Value range `(min, max)`.
    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    fn check(&self, hierarchy: &Hierarchy) -> Result<()> {
        if hierarchy.grid0_verts() != self.verts {
            return Err(Error::invalid(format!(
                "field dims {:?} do not match hierarchy dims {:?}",
                self.verts,
                hierarchy.grid0_verts()
            )));
        }
        Ok(())
    }

    /// Value of `v` at its level: the input value at its grid-0 location.
    pub fn sample(&self, hierarchy: &Hierarchy, v: VertexId) -> f64 {
        let g = hierarchy.level(v.level).grid0_coords(hierarchy.coords(v));
        self.at(g)
    }

    /// Restriction of the field to one level.
    pub fn level_view(&self, hierarchy: &Hierarchy, level: usize) -> Result<LevelField> {
        self.check(hierarchy)?;
        if level >= hierarchy.level_count() {
            return Err(Error::invalid(format!("level {level} out of range")));
        }
        let grid = hierarchy.level(level);
        let n = grid.vertex_count();
        let mut values = Vec::with_capacity(n);
        let mut order_key = Vec::with_capacity(n);
        for idx in 0..n {
            let g = grid.grid0_coords(grid.coords(idx));
            let gi = self.index(g);
            values.push(self.values[gi]);
            order_key.push(gi as u32);
        }
        Ok(LevelField {
            level,
            values,
            grid0: order_key,
        })
    }
}

/// Values of one level and their grid-0 indices, which break ties.
///
/// `a` is below `b` iff `(f(a), grid0(a)) < (f(b), grid0(b))`. Old vertices
/// keep both value and index across levels, so the order is level-consistent.
#[derive(Clone, Debug)]
pub struct LevelField {
    level: usize,
    values: Vec<f64>,
    grid0: Vec<u32>,
}

impl LevelField {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn value(&self, v: usize) -> f64 {
        self.values[v]
    }

    #[inline]
    pub fn grid0_index(&self, v: usize) -> usize {
        self.grid0[v] as usize
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Strict perturbed order. Panics in debug builds when `a == b`.
    #[inline]
    pub fn is_lower(&self, a: usize, b: usize) -> bool {
        debug_assert_ne!(a, b, "a vertex is not comparable to itself");
        let (fa, fb) = (self.values[a], self.values[b]);
        fa < fb || (fa == fb && self.grid0[a] < self.grid0[b])
    }

    #[inline]
    pub fn compare(&self, a: usize, b: usize) -> Ordering {
        self.values[a]
            .partial_cmp(&self.values[b])
            .unwrap_or(Ordering::Equal)
            .then(self.grid0[a].cmp(&self.grid0[b]))
    }
}

/// Perturbed order between two vertices of the same level.
pub fn is_lower(field: &ScalarField, hierarchy: &Hierarchy, a: VertexId, b: VertexId) -> bool {
    assert!(
        a != b,
        "is_lower requires distinct vertices, got {a:?} twice"
    );
    let (fa, fb) = (field.sample(hierarchy, a), field.sample(hierarchy, b));
    let (ga, gb) = (hierarchy.grid0_index(a), hierarchy.grid0_index(b));
    fa < fb || (fa == fb && ga < gb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(verts: [usize; 3]) -> ScalarField {
        ScalarField::from_fn(verts, |c| c[0] as f64).unwrap()
    }

    #[test]
    fn rejects_nan_and_bad_length() {
        assert!(ScalarField::new([2, 2, 1], vec![0.0; 3]).is_err());
        assert!(ScalarField::new([2, 1, 1], vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn finest_level_is_raw() {
        let f = ScalarField::from_fn([5, 5, 1], |c| (c[0] * 7 + c[1]) as f64).unwrap();
        let h = Hierarchy::build(f.cells(), 2, None).unwrap();
        let fin = h.finest();
        for idx in 0..h.vertex_count(fin) {
            let v = VertexId::new(fin, idx);
            assert_eq!(f.sample(&h, v), f.values()[idx]);
        }
    }

    #[test]
    fn elevation_at_every_level() {
        let f = ramp([9, 9, 9]);
        let h = Hierarchy::build(f.cells(), 3, None).unwrap();
        for level in 0..h.level_count() {
            for idx in 0..h.vertex_count(level) {
                let v = VertexId::new(level, idx);
                let g = h.to_grid0_coords(level, h.coords(v)).unwrap();
                assert_eq!(f.sample(&h, v), g[0] as f64);
            }
        }
    }

    #[test]
    fn coarse_sample_reads_doubled_coords() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let f = ScalarField::from_fn([9, 9, 9], |_| rng.gen()).unwrap();
        let h = Hierarchy::build(f.cells(), 3, None).unwrap();
        let v = h.vertex_at(h.finest() - 1, [1, 1, 1]).unwrap();
        assert_eq!(f.sample(&h, v), f.at([2, 2, 2]));
    }

    #[test]
    fn old_vertices_keep_values() {
        let f = ScalarField::from_fn([10, 7, 1], |c| ((c[0] * 31 + c[1] * 17) % 11) as f64).unwrap();
        let h = Hierarchy::build(f.cells(), 2, None).unwrap();
        for level in 0..h.finest() {
            let grid = h.level(level);
            for idx in 0..grid.vertex_count() {
                let c = grid.coords(idx);
                let fine = h.vertex_at(level + 1, h.fine_coords(level, c)).unwrap();
                let a = f.sample(&h, VertexId::new(level, idx));
                assert_eq!(a.to_bits(), f.sample(&h, fine).to_bits());
                assert_eq!(h.grid0_index(VertexId::new(level, idx)), h.grid0_index(fine));
            }
        }
    }

    #[test]
    fn ties_break_by_index() {
        let f = ScalarField::new([2, 2, 1], vec![1.0, 1.0, 2.0, 0.5]).unwrap();
        let h = Hierarchy::build(f.cells(), 2, None).unwrap();
        let view = f.level_view(&h, 0).unwrap();
        assert!(view.is_lower(0, 1));
        assert!(!view.is_lower(1, 0));
        assert!(view.is_lower(1, 2));
        assert!(view.is_lower(3, 0));
        let (a, b) = (VertexId::new(0, 0), VertexId::new(0, 1));
        assert!(is_lower(&f, &h, a, b));
    }

    #[test]
    #[should_panic]
    fn equal_vertices_panic() {
        let f = ScalarField::new([2, 2, 1], vec![0.0; 4]).unwrap();
        let h = Hierarchy::build(f.cells(), 2, None).unwrap();
        let v = VertexId::new(0, 0);
        is_lower(&f, &h, v, v);
    }

    proptest! {
        #[test]
        fn perturbed_order_is_strict_total(values in proptest::collection::vec(0u8..4, 25)) {
            let f = ScalarField::new([5, 5, 1], values.iter().map(|&v| v as f64).collect()).unwrap();
            let h = Hierarchy::build(f.cells(), 2, None).unwrap();
            let view = f.level_view(&h, h.finest()).unwrap();
            let mut idx: Vec<usize> = (0..view.len()).collect();
            idx.sort_by(|&a, &b| view.compare(a, b));
            for w in idx.windows(2) {
                prop_assert!(view.is_lower(w[0], w[1]));
                prop_assert!(!view.is_lower(w[1], w[0]));
            }
            // transitivity over the sorted chain
            for i in 0..idx.len() {
                for j in (i + 1)..idx.len() {
                    prop_assert!(view.is_lower(idx[i], idx[j]));
                }
            }
        }
    }
}
