//! Extremum-saddle persistence diagrams.
//!
//! Part A walks steepest-descent paths from every merge saddle, one per
//! lower-link component, and records the minimum each path reaches. Part B
//! turns those representants into triplets `(s, m0, mi)` and pairs them in
//! saddle order with a union-find over minima (Elder rule). Saddle-maximum
//! pairs run the same pipeline under the reversed order.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU32, Ordering as AtomicOrdering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::critical::ProgressiveState;
use crate::error::{Error, Result};
use crate::field::{LevelField, ScalarField};
use crate::hierarchy::Hierarchy;
use crate::link::{mask_members, Side};

/// Kind of a persistence pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairClass {
    MinSaddle,
    SaddleMax,
    Global,
}

impl PairClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            PairClass::MinSaddle => "min-saddle",
            PairClass::SaddleMax => "saddle-max",
            PairClass::Global => "global",
        }
    }
}

impl fmt::Display for PairClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PairClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min-saddle" => Ok(PairClass::MinSaddle),
            "saddle-max" => Ok(PairClass::SaddleMax),
            "global" => Ok(PairClass::Global),
            _ => Err(Error::invalid(format!("unknown pair class `{s}`"))),
        }
    }
}

/// Which parts of the diagram to compute. The global pair is always included.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PairSelection {
    MinSaddle,
    SaddleMax,
    #[default]
    Both,
}

impl PairSelection {
    pub fn min_saddle(self) -> bool {
        matches!(self, PairSelection::MinSaddle | PairSelection::Both)
    }

    pub fn saddle_max(self) -> bool {
        matches!(self, PairSelection::SaddleMax | PairSelection::Both)
    }
}

impl FromStr for PairSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min-saddle" => Ok(PairSelection::MinSaddle),
            "saddle-max" => Ok(PairSelection::SaddleMax),
            "both" => Ok(PairSelection::Both),
            _ => Err(Error::invalid(format!(
                "unknown pair selection `{s}` (expected min-saddle, saddle-max or both)"
            ))),
        }
    }
}

/// A birth/death pair of critical vertices, located by grid-0 coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersistencePair {
    pub class: PairClass,
    pub birth_vertex: [usize; 3],
    pub death_vertex: [usize; 3],
    pub birth: f64,
    pub death: f64,
}

impl PersistencePair {
    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

/// All pairs of one level.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PersistenceDiagram {
    pub level: usize,
    pub pairs: Vec<PersistencePair>,
}

impl PersistenceDiagram {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn of_class(&self, class: PairClass) -> impl Iterator<Item = &PersistencePair> {
        self.pairs.iter().filter(move |p| p.class == class)
    }

    pub fn count(&self, class: PairClass) -> usize {
        self.of_class(class).count()
    }

    /// Sorts pairs by class, then birth value, then birth vertex in grid-0
    /// linear order (`verts` are the grid-0 vertex counts).
    pub fn sort_canonical(&mut self, verts: [usize; 3]) {
        let lin = |c: [usize; 3]| c[0] + verts[0] * (c[1] + verts[1] * c[2]);
        self.pairs.sort_by(|a, b| {
            a.class
                .cmp(&b.class)
                .then(a.birth.total_cmp(&b.birth))
                .then(lin(a.birth_vertex).cmp(&lin(b.birth_vertex)))
                .then(lin(a.death_vertex).cmp(&lin(b.death_vertex)))
        });
    }

    /// Multiset of `(birth, death)` values of one class, sorted.
    pub fn value_pairs(&self, class: PairClass) -> Vec<(f64, f64)> {
        let mut v: Vec<(f64, f64)> = self.of_class(class).map(|p| (p.birth, p.death)).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        v
    }
}

/// A merge event: saddle `s` joins the components of `m0` and `m1`.
///
/// Indices are level-local; on the upper side "lower" means higher in value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Triplet {
    pub saddle: usize,
    pub m0: usize,
    pub m1: usize,
}

/// Perturbed order seen from one side: on `Upper` everything is reversed.
#[derive(Clone, Copy)]
struct SidedOrder<'a> {
    field: &'a LevelField,
    side: Side,
}

impl SidedOrder<'_> {
    #[inline]
    fn below(&self, a: usize, b: usize) -> bool {
        match self.side {
            Side::Lower => self.field.is_lower(a, b),
            Side::Upper => self.field.is_lower(b, a),
        }
    }

    #[inline]
    fn cmp(&self, a: usize, b: usize) -> Ordering {
        match self.side {
            Side::Lower => self.field.compare(a, b),
            Side::Upper => self.field.compare(b, a),
        }
    }
}

const NO_REP: u32 = u32::MAX;

/// Representants collected at every merge saddle of `side`, as
/// `(saddle, representants)` with representants sorted from oldest to
/// youngest and deduplicated.
///
/// Every vertex a path visits stores the extremum it leads to; later paths
/// stop as soon as they reach a stored vertex. Steepest descent is
/// deterministic, so concurrent writers always agree on the stored value.
pub fn saddle_paths(
    state: &ProgressiveState,
    hierarchy: &Hierarchy,
    side: Side,
) -> Vec<(usize, Vec<usize>)> {
    let grid = hierarchy.level(state.level());
    let table = hierarchy.slots();
    let order = SidedOrder {
        field: state.field(),
        side,
    };
    let n = grid.vertex_count();
    let store: Vec<AtomicU32> = (0..n).map(|_| AtomicU32::new(NO_REP)).collect();

    let saddles: Vec<usize> = (0..n)
        .into_par_iter()
        .filter(|&i| state.kind(i).is_merge(side))
        .collect();

    let steepest = |v: usize| -> Option<usize> {
        let mut best: Option<usize> = None;
        for nb in grid.neighbor_indices(table, v) {
            if order.below(nb, v) && best.is_none_or(|b| order.below(nb, b)) {
                best = Some(nb);
            }
        }
        best
    };

    saddles
        .into_par_iter()
        .map(|s| {
            let c = grid.coords(s);
            let mut reps = Vec::new();
            let mut path = Vec::new();
            for mask in state.link_components(hierarchy, s, side) {
                let seed = mask_members(mask)
                    .into_iter()
                    .map(|k| grid.index(grid.step(table, c, k)))
                    .min_by(|&a, &b| order.cmp(a, b))
                    .expect("link component is not empty");
                path.clear();
                let mut v = seed;
                let rep = loop {
                    let stored = store[v].load(AtomicOrdering::Relaxed);
                    if stored != NO_REP {
                        break stored as usize;
                    }
                    path.push(v);
                    match steepest(v) {
                        Some(next) => v = next,
                        None => break v,
                    }
                };
                for &p in &path {
                    store[p].store(rep as u32, AtomicOrdering::Relaxed);
                }
                reps.push(rep);
            }
            reps.sort_by(|&a, &b| order.cmp(a, b));
            reps.dedup();
            (s, reps)
        })
        .collect()
}

/// `d - 1` triplets `(s, m0, mi)` per saddle with `d` distinct representants.
pub fn build_triplets(representants: &[(usize, Vec<usize>)]) -> Vec<Triplet> {
    representants
        .iter()
        .flat_map(|(s, reps)| {
            reps.iter().skip(1).map(move |&mi| Triplet {
                saddle: *s,
                m0: reps[0],
                m1: mi,
            })
        })
        .collect()
}

fn find_root(parent: &mut [u32], m: usize) -> Result<usize> {
    let mut r = m;
    let mut steps = 0usize;
    while parent[r] as usize != r {
        r = parent[r] as usize;
        steps += 1;
        if steps > parent.len() {
            return Err(Error::Internal(format!(
                "representant cycle reached from vertex {m}"
            )));
        }
    }
    let mut v = m;
    while parent[v] as usize != r {
        let next = parent[v] as usize;
        parent[v] = r as u32;
        v = next;
    }
    Ok(r)
}

/// Elder-rule pairing of `triplets` at one level. Returns
/// `(extremum, saddle)` index pairs; the extremum is the younger root.
pub fn pair_triplets(
    mut triplets: Vec<Triplet>,
    field: &LevelField,
    side: Side,
) -> Result<Vec<(usize, usize)>> {
    let order = SidedOrder { field, side };
    triplets.par_sort_by(|a, b| {
        order
            .cmp(a.saddle, b.saddle)
            .then(order.cmp(a.m1, b.m1))
    });
    let mut parent: Vec<u32> = (0..field.len() as u32).collect();
    let mut pairs = Vec::new();
    for t in triplets {
        let r0 = find_root(&mut parent, t.m0)?;
        let r1 = find_root(&mut parent, t.m1)?;
        if r0 == r1 {
            continue;
        }
        let (old, young) = if order.below(r0, r1) { (r0, r1) } else { (r1, r0) };
        pairs.push((young, t.saddle));
        parent[young] = old as u32;
    }
    Ok(pairs)
}

/// Diagram of the level held by `state`.
pub fn compute_diagram(
    state: &ProgressiveState,
    hierarchy: &Hierarchy,
    selection: PairSelection,
) -> Result<PersistenceDiagram> {
    let level = state.level();
    let grid = hierarchy.level(level);
    let field = state.field();
    let g0 = |i: usize| grid.grid0_coords(grid.coords(i));
    let mut pairs = Vec::new();

    let sides = [
        (selection.min_saddle(), Side::Lower),
        (selection.saddle_max(), Side::Upper),
    ];
    for (enabled, side) in sides {
        if !enabled {
            continue;
        }
        let reps = saddle_paths(state, hierarchy, side);
        let triplets = build_triplets(&reps);
        for (ext, s) in pair_triplets(triplets, field, side)? {
            let (b, d) = match side {
                Side::Lower => (ext, s),
                Side::Upper => (s, ext),
            };
            pairs.push(PersistencePair {
                class: match side {
                    Side::Lower => PairClass::MinSaddle,
                    Side::Upper => PairClass::SaddleMax,
                },
                birth_vertex: g0(b),
                death_vertex: g0(d),
                birth: field.value(b),
                death: field.value(d),
            });
        }
    }

    let (lo, hi) = global_extrema(field);
    pairs.push(PersistencePair {
        class: PairClass::Global,
        birth_vertex: g0(lo),
        death_vertex: g0(hi),
        birth: field.value(lo),
        death: field.value(hi),
    });

    let mut diagram = PersistenceDiagram { level, pairs };
    diagram.sort_canonical(hierarchy.grid0_verts());
    Ok(diagram)
}

fn global_extrema(field: &LevelField) -> (usize, usize) {
    let mut lo = 0;
    let mut hi = 0;
    for i in 1..field.len() {
        if field.is_lower(i, lo) {
            lo = i;
        }
        if field.is_lower(hi, i) {
            hi = i;
        }
    }
    (lo, hi)
}

/// Diagram of one level computed directly, without progressive state.
pub fn compute_diagram_at_level(
    hierarchy: &Hierarchy,
    field: &ScalarField,
    level: usize,
    selection: PairSelection,
) -> Result<PersistenceDiagram> {
    let state = ProgressiveState::from_scratch(hierarchy, field, level)?;
    compute_diagram(&state, hierarchy, selection)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critical::CriticalType;

    fn field_2d(w: usize, h: usize, f: impl Fn(usize, usize) -> f64) -> ScalarField {
        ScalarField::from_fn([w, h, 1], |c| f(c[0], c[1])).unwrap()
    }

    #[test]
    fn triplets_follow_representant_count() {
        let reps = vec![(10, vec![1]), (11, vec![1, 2]), (12, vec![0, 3, 4])];
        let t = build_triplets(&reps);
        assert_eq!(
            t,
            vec![
                Triplet { saddle: 11, m0: 1, m1: 2 },
                Triplet { saddle: 12, m0: 0, m1: 3 },
                Triplet { saddle: 12, m0: 0, m1: 4 },
            ]
        );
    }

    #[test]
    fn elevation_has_only_the_global_pair() {
        let f = ScalarField::from_fn([9, 9, 9], |c| c[0] as f64).unwrap();
        let h = Hierarchy::build(f.cells(), 3, None).unwrap();
        let d = compute_diagram_at_level(&h, &f, h.finest(), PairSelection::Both).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.pairs[0].class, PairClass::Global);
        assert_eq!((d.pairs[0].birth, d.pairs[0].death), (0.0, 8.0));
    }

    #[test]
    fn two_basins_meet_at_one_saddle() {
        // Two valleys along x separated by a ridge at x = 3.
        let vals = [2.0, 0.0, 1.0, 5.0, 1.5, 0.5, 3.0];
        let f = field_2d(7, 4, |x, y| vals[x] + 0.01 * y as f64);
        let h = Hierarchy::build(f.cells(), 2, None).unwrap();
        let state = ProgressiveState::from_scratch(&h, &f, h.finest()).unwrap();
        let reps = saddle_paths(&state, &h, Side::Lower);
        assert_eq!(reps.len(), 1);
        assert_eq!(reps[0].1.len(), 2);
        let d = compute_diagram(&state, &h, PairSelection::MinSaddle).unwrap();
        let ms: Vec<_> = d.of_class(PairClass::MinSaddle).collect();
        assert_eq!(ms.len(), 1);
        assert_eq!(ms[0].birth, 0.5);
        assert_eq!(ms[0].death, 5.0);
        assert_eq!(ms[0].birth_vertex, [5, 0, 0]);
        assert_eq!(ms[0].death_vertex, [3, 0, 0]);
        let minima = state
            .kinds()
            .iter()
            .filter(|k| matches!(k, CriticalType::Minimum))
            .count();
        assert_eq!(minima, 2);
    }

    #[test]
    fn negation_swaps_classes() {
        // Distinct values, so negating the field mirrors the perturbed order.
        let h = Hierarchy::build([6, 5, 4], 3, None).unwrap();
        let distinct = ScalarField::from_fn([7, 6, 5], |c| {
            ((c[0] * 37 + c[1] * 101 + c[2] * 53) % 97) as f64 + c[0] as f64 * 1e-3
        })
        .unwrap();
        let neg = ScalarField::new(distinct.verts(), distinct.values().iter().map(|v| -v).collect()).unwrap();
        let a = compute_diagram_at_level(&h, &distinct, h.finest(), PairSelection::Both).unwrap();
        let b = compute_diagram_at_level(&h, &neg, h.finest(), PairSelection::Both).unwrap();
        let mirror = |v: Vec<(f64, f64)>| {
            let mut m: Vec<(f64, f64)> = v.into_iter().map(|(x, y)| (-y, -x)).collect();
            m.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            m
        };
        assert_eq!(a.value_pairs(PairClass::MinSaddle), mirror(b.value_pairs(PairClass::SaddleMax)));
        assert_eq!(a.value_pairs(PairClass::SaddleMax), mirror(b.value_pairs(PairClass::MinSaddle)));
    }

    #[test]
    fn pair_counts_match_extrema() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let f = ScalarField::from_fn([9, 8, 7], |_| rng.gen()).unwrap();
        let h = Hierarchy::build(f.cells(), 3, None).unwrap();
        for level in 0..h.level_count() {
            let state = ProgressiveState::from_scratch(&h, &f, level).unwrap();
            let d = compute_diagram(&state, &h, PairSelection::Both).unwrap();
            let st = state.stats();
            assert_eq!(d.count(PairClass::MinSaddle), st.minima - 1);
            assert_eq!(d.count(PairClass::SaddleMax), st.maxima - 1);
            assert_eq!(d.count(PairClass::Global), 1);
        }
    }
}
