//! Implicit edge-nested triangulation hierarchy over a 2D or 3D regular grid.
//!
//! Level 0 is the coarsest triangulation and level `h` is the Kuhn
//! triangulation of the input grid. A coarser grid keeps every vertex with
//! even coordinates of the next finer one; when a finer axis has an odd cell
//! count, its last vertex is kept as well. Nothing is materialized: adjacency
//! is derived from level-local coordinates and a fixed table of offsets.
//!
//! Every quad is split along its `(0,0)-(1,1)` diagonal and every hexahedron
//! into the six tetrahedra sharing its `(0,0,0)-(1,1,1)` diagonal, so two
//! grid vertices are adjacent iff their offset lies in `{0,1}^d` or in
//! `{0,-1}^d`.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Upper bound on the number of neighbors of a vertex (interior 3D vertex).
pub const MAX_SLOTS: usize = 14;

/// Neighbor offsets, lexicographic over `(x, y, z)`.
static OFFSETS_2D: [[i32; 3]; 6] = [
    [-1, -1, 0],
    [-1, 0, 0],
    [0, -1, 0],
    [0, 1, 0],
    [1, 0, 0],
    [1, 1, 0],
];

static OFFSETS_3D: [[i32; 3]; 14] = [
    [-1, -1, -1],
    [-1, -1, 0],
    [-1, 0, -1],
    [-1, 0, 0],
    [0, -1, -1],
    [0, -1, 0],
    [0, 0, -1],
    [0, 0, 1],
    [0, 1, 0],
    [0, 1, 1],
    [1, 0, 0],
    [1, 0, 1],
    [1, 1, 0],
    [1, 1, 1],
];

/// The full link of an interior vertex, expressed over neighbor slots.
///
/// Slot `k` always denotes the same offset, at every level, so polarity bit
/// `k` and local edge `(a, b)` keep their meaning as the hierarchy is
/// refined.
#[derive(Debug)]
pub struct SlotTable {
    offsets: &'static [[i32; 3]],
    adjacency: [u16; MAX_SLOTS],
    edges: Vec<(u8, u8)>,
    // Valid-slot masks indexed by a 6-bit boundary class (2 bits per axis:
    // "has a lower neighbor", "has an upper neighbor").
    mask_by_class: [u16; 64],
}

impl SlotTable {
    fn build(offsets: &'static [[i32; 3]]) -> Self {
        let n = offsets.len();
        let mut adjacency = [0u16; MAX_SLOTS];
        let mut edges = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                let d = [
                    offsets[b][0] - offsets[a][0],
                    offsets[b][1] - offsets[a][1],
                    offsets[b][2] - offsets[a][2],
                ];
                if is_kuhn_edge(d) {
                    adjacency[a] |= 1 << b;
                    adjacency[b] |= 1 << a;
                    edges.push((a as u8, b as u8));
                }
            }
        }
        let mut mask_by_class = [0u16; 64];
        for (class, mask) in mask_by_class.iter_mut().enumerate() {
            for (k, o) in offsets.iter().enumerate() {
                let ok = (0..3).all(|axis| {
                    let bits = (class >> (2 * axis)) & 3;
                    match o[axis] {
                        -1 => bits & 1 != 0,
                        1 => bits & 2 != 0,
                        _ => true,
                    }
                });
                if ok {
                    *mask |= 1 << k;
                }
            }
        }
        SlotTable {
            offsets,
            adjacency,
            edges,
            mask_by_class,
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn offset(&self, slot: usize) -> [i32; 3] {
        self.offsets[slot]
    }

    pub fn offsets(&self) -> &[[i32; 3]] {
        self.offsets
    }

    /// Bitmask of the slots adjacent to `slot` in the interior link.
    pub fn adjacency(&self, slot: usize) -> u16 {
        self.adjacency[slot]
    }

    pub fn adjacency_masks(&self) -> &[u16; MAX_SLOTS] {
        &self.adjacency
    }

    /// Interior link edges as slot pairs `(a, b)` with `a < b`.
    pub fn edges(&self) -> &[(u8, u8)] {
        &self.edges
    }

    /// Mask of all slots.
    pub fn full_mask(&self) -> u16 {
        ((1u32 << self.offsets.len()) - 1) as u16
    }
}

/// An offset is a Kuhn edge iff it is nonzero with entries all in `{0,1}` or
/// all in `{0,-1}`.
fn is_kuhn_edge(d: [i32; 3]) -> bool {
    let nonzero = d.iter().any(|&c| c != 0);
    let pos = d.iter().all(|&c| c == 0 || c == 1);
    let neg = d.iter().all(|&c| c == 0 || c == -1);
    nonzero && (pos || neg)
}

/// Slot table for a grid of the given dimension (2 or 3).
pub fn slot_table(dimension: usize) -> &'static SlotTable {
    static T2: OnceLock<SlotTable> = OnceLock::new();
    static T3: OnceLock<SlotTable> = OnceLock::new();
    if dimension == 2 {
        T2.get_or_init(|| SlotTable::build(&OFFSETS_2D))
    } else {
        T3.get_or_init(|| SlotTable::build(&OFFSETS_3D))
    }
}

/// A vertex of the triangulation at a given level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId {
    pub level: usize,
    pub index: usize,
}

impl VertexId {
    pub fn new(level: usize, index: usize) -> Self {
        VertexId { level, index }
    }
}

/// Whether a vertex already existed at the previous level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VertexAge {
    Old {
        /// The same vertex at the previous level.
        coarse: VertexId,
    },
    New {
        /// Endpoints of the previous-level edge this vertex subdivides;
        /// `None` at level 0.
        parent: Option<[VertexId; 2]>,
    },
}

/// Neighbors of a vertex and the local edges of its link.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinkPattern {
    pub center: VertexId,
    /// Neighbors in slot order.
    pub neighbors: Vec<VertexId>,
    /// Slot of each neighbor.
    pub slots: Vec<usize>,
    /// Link edges as pairs of indices into `neighbors`.
    pub edges: Vec<(usize, usize)>,
}

/// One level of the hierarchy.
#[derive(Clone, Debug)]
pub struct LevelGrid {
    cells: [usize; 3],
    verts: [usize; 3],
    odd: [bool; 3],
    to_grid0: [Vec<usize>; 3],
}

impl LevelGrid {
    /// Cell counts per axis (0 for z in 2D).
    pub fn cells(&self) -> [usize; 3] {
        self.cells
    }

    /// Vertex counts per axis (1 for z in 2D).
    pub fn verts(&self) -> [usize; 3] {
        self.verts
    }

    /// Per axis, whether the coarser level kept this level's last vertex
    /// because the cell count here is odd.
    pub fn odd_flags(&self) -> [bool; 3] {
        self.odd
    }

    pub fn vertex_count(&self) -> usize {
        self.verts[0] * self.verts[1] * self.verts[2]
    }

    #[inline]
    pub fn index(&self, c: [usize; 3]) -> usize {
        c[0] + self.verts[0] * (c[1] + self.verts[1] * c[2])
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let x = index % self.verts[0];
        let r = index / self.verts[0];
        [x, r % self.verts[1], r / self.verts[1]]
    }

    pub fn contains(&self, c: [usize; 3]) -> bool {
        (0..3).all(|a| c[a] < self.verts[a])
    }

    #[inline]
    fn boundary_class(&self, c: [usize; 3]) -> usize {
        let mut class = 0;
        for (axis, &coord) in c.iter().enumerate() {
            if coord > 0 {
                class |= 1 << (2 * axis);
            }
            if coord < self.cells[axis] {
                class |= 2 << (2 * axis);
            }
        }
        class
    }

    /// Mask of the slots whose neighbor lies inside this level.
    #[inline]
    pub fn valid_slots(&self, table: &SlotTable, c: [usize; 3]) -> u16 {
        table.mask_by_class[self.boundary_class(c)]
    }

    /// Neighbor coordinates through `slot`; the slot must be valid.
    #[inline]
    pub fn step(&self, table: &SlotTable, c: [usize; 3], slot: usize) -> [usize; 3] {
        let o = table.offsets[slot];
        [
            (c[0] as i64 + o[0] as i64) as usize,
            (c[1] as i64 + o[1] as i64) as usize,
            (c[2] as i64 + o[2] as i64) as usize,
        ]
    }

    /// Linear indices of the neighbors of `index`, in slot order.
    #[inline]
    pub fn neighbor_indices<'a>(
        &'a self,
        table: &'a SlotTable,
        index: usize,
    ) -> impl Iterator<Item = usize> + 'a {
        let c = self.coords(index);
        let mut rest = self.valid_slots(table, c);
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let k = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(self.index(self.step(table, c, k)))
        })
    }

    #[inline]
    pub fn grid0_coords(&self, c: [usize; 3]) -> [usize; 3] {
        [
            self.to_grid0[0][c[0]],
            self.to_grid0[1][c[1]],
            self.to_grid0[2][c[2]],
        ]
    }
}

/// The whole hierarchy, from level 0 (coarsest) to level `h` (input grid).
#[derive(Clone, Debug)]
pub struct Hierarchy {
    dimension: usize,
    levels: Vec<LevelGrid>,
}

impl Hierarchy {
    /// Builds the hierarchy for a grid with `dims0` cells per axis.
    ///
    /// Levels are added while every axis of the current coarsest grid still
    /// has at least two cells, optionally capped at `max_levels` levels.
    pub fn build(dims0: [usize; 3], dimension: usize, max_levels: Option<usize>) -> Result<Self> {
        match dimension {
            2 => {
                if dims0[2] != 0 {
                    return Err(Error::invalid("2D grids must have zero z cells"));
                }
            }
            3 => {
                if dims0[2] == 0 {
                    return Err(Error::invalid("3D grids need at least one z cell"));
                }
            }
            d => return Err(Error::invalid(format!("unsupported dimension {d}"))),
        }
        if dims0[0] == 0 || dims0[1] == 0 {
            return Err(Error::invalid("grid must have at least one cell per axis"));
        }
        if max_levels == Some(0) {
            return Err(Error::invalid("level cap must be at least 1"));
        }
        let active = dimension;

        let mut dims = vec![dims0];
        loop {
            let cur = *dims.last().unwrap();
            if max_levels.is_some_and(|m| dims.len() >= m) {
                break;
            }
            if (0..active).any(|a| cur[a] < 2) {
                break;
            }
            let mut next = [0; 3];
            for a in 0..active {
                next[a] = cur[a].div_ceil(2);
            }
            dims.push(next);
        }
        dims.reverse();

        let count = dims.len();
        let mut levels: Vec<LevelGrid> = Vec::with_capacity(count);
        // Finest level first: identity map to grid 0.
        let mut fine_maps: [Vec<usize>; 3] = [
            (0..=dims[count - 1][0]).collect(),
            (0..=dims[count - 1][1]).collect(),
            (0..=dims[count - 1][2]).collect(),
        ];
        let mut rev = Vec::with_capacity(count);
        for i in (0..count).rev() {
            let cells = dims[i];
            let verts = [cells[0] + 1, cells[1] + 1, cells[2] + 1];
            let mut odd = [false; 3];
            if i > 0 {
                for (a, flag) in odd.iter_mut().enumerate().take(active) {
                    *flag = cells[a] % 2 == 1;
                }
            }
            let maps = fine_maps.clone();
            if i > 0 {
                // Map for level i - 1 in terms of grid 0.
                let coarse = dims[i - 1];
                let mut next: [Vec<usize>; 3] = Default::default();
                for a in 0..3 {
                    next[a] = (0..=coarse[a])
                        .map(|c| {
                            let fine = if cells[a] % 2 == 1 && c == coarse[a] {
                                cells[a]
                            } else {
                                2 * c
                            };
                            maps[a][fine]
                        })
                        .collect();
                }
                fine_maps = next;
            }
            rev.push(LevelGrid {
                cells,
                verts,
                odd,
                to_grid0: maps,
            });
        }
        rev.reverse();
        levels.extend(rev);
        Ok(Hierarchy { dimension, levels })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Index of the finest level.
    pub fn finest(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, i: usize) -> &LevelGrid {
        &self.levels[i]
    }

    pub fn levels(&self) -> &[LevelGrid] {
        &self.levels
    }

    pub fn slots(&self) -> &'static SlotTable {
        slot_table(self.dimension)
    }

    /// Vertex counts per axis of the input grid.
    pub fn grid0_verts(&self) -> [usize; 3] {
        self.levels[self.finest()].verts
    }

    pub fn vertex_count(&self, i: usize) -> usize {
        self.levels[i].vertex_count()
    }

    fn check_level(&self, i: usize) -> Result<&LevelGrid> {
        self.levels
            .get(i)
            .ok_or_else(|| Error::invalid(format!("level {i} out of range")))
    }

    fn check_vertex(&self, v: VertexId) -> Result<&LevelGrid> {
        let grid = self.check_level(v.level)?;
        if v.index >= grid.vertex_count() {
            return Err(Error::invalid(format!(
                "vertex {} out of range at level {}",
                v.index, v.level
            )));
        }
        Ok(grid)
    }

    pub fn coords(&self, v: VertexId) -> [usize; 3] {
        self.levels[v.level].coords(v.index)
    }

    pub fn vertex_at(&self, level: usize, coords: [usize; 3]) -> Result<VertexId> {
        let grid = self.check_level(level)?;
        if !grid.contains(coords) {
            return Err(Error::invalid(format!(
                "coordinates {coords:?} out of range at level {level}"
            )));
        }
        Ok(VertexId::new(level, grid.index(coords)))
    }

    /// Location in the input grid of the level-`i` vertex at `coords`.
    pub fn to_grid0_coords(&self, level: usize, coords: [usize; 3]) -> Result<[usize; 3]> {
        let grid = self.check_level(level)?;
        if !grid.contains(coords) {
            return Err(Error::invalid(format!(
                "coordinates {coords:?} out of range at level {level}"
            )));
        }
        Ok(grid.grid0_coords(coords))
    }

    /// Linear index in the input grid (x fastest).
    pub fn grid0_index(&self, v: VertexId) -> usize {
        let g = self.levels[v.level].grid0_coords(self.coords(v));
        self.levels[self.finest()].index(g)
    }

    /// Neighbors of `v` in slot order.
    pub fn neighbors(&self, v: VertexId) -> Result<Vec<VertexId>> {
        let grid = self.check_vertex(v)?;
        let table = self.slots();
        let c = grid.coords(v.index);
        let valid = grid.valid_slots(table, c);
        Ok((0..table.len())
            .filter(|k| valid & (1 << k) != 0)
            .map(|k| VertexId::new(v.level, grid.index(grid.step(table, c, k))))
            .collect())
    }

    pub fn link_pattern(&self, v: VertexId) -> Result<LinkPattern> {
        let grid = self.check_vertex(v)?;
        let table = self.slots();
        let c = grid.coords(v.index);
        let valid = grid.valid_slots(table, c);
        let slots: Vec<usize> = (0..table.len()).filter(|k| valid & (1 << k) != 0).collect();
        let mut local = [usize::MAX; MAX_SLOTS];
        for (i, &k) in slots.iter().enumerate() {
            local[k] = i;
        }
        let neighbors = slots
            .iter()
            .map(|&k| VertexId::new(v.level, grid.index(grid.step(table, c, k))))
            .collect();
        let edges = table
            .edges()
            .iter()
            .filter(|(a, b)| valid & (1 << a) != 0 && valid & (1 << b) != 0)
            .map(|&(a, b)| (local[a as usize], local[b as usize]))
            .collect();
        Ok(LinkPattern {
            center: v,
            neighbors,
            slots,
            edges,
        })
    }

    /// Old/new status of `v` with respect to level `v.level - 1`.
    pub fn vertex_age(&self, v: VertexId) -> Result<VertexAge> {
        let grid = self.check_vertex(v)?;
        if v.level == 0 {
            return Ok(VertexAge::New { parent: None });
        }
        let coarse = &self.levels[v.level - 1];
        let c = grid.coords(v.index);
        match self.coarse_coords(v.level, c) {
            Some(cc) => Ok(VertexAge::Old {
                coarse: VertexId::new(v.level - 1, coarse.index(cc)),
            }),
            None => {
                let (e0, e1) = parent_edge(c, grid.cells());
                let a = self.coarse_coords(v.level, e0).expect("parent endpoint is old");
                let b = self.coarse_coords(v.level, e1).expect("parent endpoint is old");
                Ok(VertexAge::New {
                    parent: Some([
                        VertexId::new(v.level - 1, coarse.index(a)),
                        VertexId::new(v.level - 1, coarse.index(b)),
                    ]),
                })
            }
        }
    }

    /// Coordinates at level `level - 1` of the level-`level` vertex at `c`,
    /// or `None` if it is a new vertex. Requires `level >= 1`.
    #[inline]
    pub fn coarse_coords(&self, level: usize, c: [usize; 3]) -> Option<[usize; 3]> {
        let grid = &self.levels[level];
        let mut out = [0; 3];
        for a in 0..3 {
            let m = grid.cells[a];
            let j = c[a];
            if j.is_multiple_of(2) {
                out[a] = j / 2;
            } else if m % 2 == 1 && j == m {
                out[a] = m.div_ceil(2);
            } else {
                return None;
            }
        }
        Some(out)
    }

    /// Coordinates at level `level + 1` of the level-`level` vertex at `c`.
    #[inline]
    pub fn fine_coords(&self, level: usize, c: [usize; 3]) -> [usize; 3] {
        let coarse = &self.levels[level];
        let fine = &self.levels[level + 1];
        let mut out = [0; 3];
        for a in 0..3 {
            out[a] = if fine.cells[a] % 2 == 1 && c[a] == coarse.cells[a] {
                fine.cells[a]
            } else {
                2 * c[a]
            };
        }
        out
    }

    /// True for vertices next to the unsubdivided last cell left by an odd
    /// axis; their links do not follow the regular refinement and are
    /// recomputed from scratch.
    #[inline]
    pub fn is_irregular(&self, level: usize, c: [usize; 3]) -> bool {
        let grid = &self.levels[level];
        (0..3).any(|a| grid.odd[a] && c[a] + 1 >= grid.cells[a])
    }
}

/// Endpoints (same level) of the old edge a new vertex subdivides: axes where
/// the vertex is new are moved one step down and one step up. A kept last
/// vertex on an odd axis is old along that axis.
#[inline]
pub(crate) fn parent_edge(c: [usize; 3], cells: [usize; 3]) -> ([usize; 3], [usize; 3]) {
    let mut lo = c;
    let mut hi = c;
    for a in 0..3 {
        if c[a] % 2 == 1 && c[a] != cells[a] {
            lo[a] -= 1;
            hi[a] += 1;
        }
    }
    (lo, hi)
}
