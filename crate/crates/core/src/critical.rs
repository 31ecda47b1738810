//! Progressive classification of critical points.
//!
//! Level 0 is classified from scratch. Each following level runs four
//! data-parallel steps separated by barriers:
//!
//! 1. every new vertex is tested for monotonicity along its parent edge;
//! 2. new vertices get their full polarity, old vertices only re-evaluate
//!    the bits of non-monotonic neighbors;
//! 3. old vertices with flipped bits update their link components, the
//!    others keep their type untouched;
//! 4. interpolating new vertices are regular without further work, other new
//!    vertices are classified from a freshly initialized link.
//!
//! Steps 2 to 4 only touch the state of the vertex being processed, so they
//! run as one pass after the step-1 barrier.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{LevelField, ScalarField};
use crate::hierarchy::{parent_edge, Hierarchy, LevelGrid, SlotTable, VertexId};
use crate::link::{LinkGraph, PolarizedLink, Side};

/// Classification of a vertex from its link component counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CriticalType {
    Regular,
    Minimum,
    Maximum,
    Saddle {
        lower_components: u8,
        upper_components: u8,
    },
}

impl CriticalType {
    pub fn from_counts(lower: u8, upper: u8) -> Self {
        if lower == 0 {
            CriticalType::Minimum
        } else if upper == 0 {
            CriticalType::Maximum
        } else if lower == 1 && upper == 1 {
            CriticalType::Regular
        } else {
            CriticalType::Saddle {
                lower_components: lower,
                upper_components: upper,
            }
        }
    }

    pub fn is_critical(&self) -> bool {
        !matches!(self, CriticalType::Regular)
    }

    /// Extremum with an empty `side` link: a minimum for `Lower`.
    pub fn is_extremum(&self, side: Side) -> bool {
        matches!(
            (self, side),
            (CriticalType::Minimum, Side::Lower) | (CriticalType::Maximum, Side::Upper)
        )
    }

    /// Saddle where at least two `side` components meet.
    pub fn is_merge(&self, side: Side) -> bool {
        match (self, side) {
            (CriticalType::Saddle { lower_components, .. }, Side::Lower) => *lower_components >= 2,
            (CriticalType::Saddle { upper_components, .. }, Side::Upper) => *upper_components >= 2,
            _ => false,
        }
    }

    /// Morse-style index: 0 for minima, `dimension` for maxima, `None` for
    /// regular vertices. Saddles report 1 when the lower link splits and
    /// `dimension - 1` otherwise.
    pub fn index(&self, dimension: usize) -> Option<usize> {
        match self {
            CriticalType::Regular => None,
            CriticalType::Minimum => Some(0),
            CriticalType::Maximum => Some(dimension),
            CriticalType::Saddle {
                lower_components, ..
            } => Some(if *lower_components >= 2 { 1 } else { dimension - 1 }),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            CriticalType::Regular => "regular",
            CriticalType::Minimum => "minimum",
            CriticalType::Maximum => "maximum",
            CriticalType::Saddle { .. } => "saddle",
        }
    }
}

const NEW: u8 = 1;
const MONOTONIC: u8 = 2;
const INVARIANT: u8 = 4;
const IRREGULAR: u8 = 8;
const IMPACTED: u8 = 16;

/// Progressive state of one vertex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VertexTopo {
    polarity: u16,
    link: Option<PolarizedLink>,
    kind: CriticalType,
    flags: u8,
}

impl VertexTopo {
    /// Bit `k` set iff the neighbor in slot `k` is above the vertex.
    pub fn polarity(&self) -> u16 {
        self.polarity
    }

    pub fn link(&self) -> Option<&PolarizedLink> {
        self.link.as_ref()
    }

    pub fn kind(&self) -> CriticalType {
        self.kind
    }

    pub fn is_new(&self) -> bool {
        self.flags & NEW != 0
    }

    /// Meaningful for new vertices only.
    pub fn is_monotonic(&self) -> bool {
        self.flags & MONOTONIC != 0
    }

    /// Skipped at this level: an old vertex with unchanged polarity or an
    /// interpolating new vertex.
    pub fn is_invariant(&self) -> bool {
        self.flags & INVARIANT != 0
    }

    pub fn is_irregular(&self) -> bool {
        self.flags & IRREGULAR != 0
    }
}

/// Per-level bookkeeping.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelStats {
    pub level: usize,
    pub vertices: usize,
    pub old_vertices: usize,
    pub new_vertices: usize,
    pub invariant_old: usize,
    pub invariant_new: usize,
    pub impacted_old: usize,
    pub irregular: usize,
    pub links_allocated: usize,
    pub minima: usize,
    pub maxima: usize,
    pub saddles: usize,
}

impl LevelStats {
    pub fn invariant(&self) -> usize {
        self.invariant_old + self.invariant_new
    }

    pub fn invariant_fraction(&self) -> f64 {
        if self.vertices == 0 {
            0.0
        } else {
            self.invariant() as f64 / self.vertices as f64
        }
    }
}

/// Fraction of invariant vertices over every level processed so far.
pub fn hierarchy_invariant_fraction(stats: &[LevelStats]) -> f64 {
    let total: usize = stats.iter().map(|s| s.vertices).sum();
    let ti: usize = stats.iter().map(|s| s.invariant()).sum();
    if total == 0 {
        0.0
    } else {
        ti as f64 / total as f64
    }
}

/// A critical vertex reported at some level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub level: usize,
    pub grid0: [usize; 3],
    pub value: f64,
    pub kind: CriticalType,
}

/// Classification of every vertex of the current level.
#[derive(Clone, Debug)]
pub struct ProgressiveState {
    level: usize,
    field: LevelField,
    topo: Vec<VertexTopo>,
    stats: LevelStats,
}

#[inline]
fn full_polarity(
    grid: &LevelGrid,
    table: &SlotTable,
    view: &LevelField,
    idx: usize,
    c: [usize; 3],
    valid: u16,
) -> u16 {
    let mut pol = 0u16;
    let mut rest = valid;
    while rest != 0 {
        let k = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let nb = grid.index(grid.step(table, c, k));
        if view.is_lower(idx, nb) {
            pol |= 1 << k;
        }
    }
    pol
}

fn finish_stats(level: usize, topo: &[VertexTopo]) -> LevelStats {
    let mut s = LevelStats {
        level,
        vertices: topo.len(),
        ..Default::default()
    };
    for t in topo {
        if t.is_new() {
            s.new_vertices += 1;
            if t.is_invariant() {
                s.invariant_new += 1;
            }
        } else {
            s.old_vertices += 1;
            if t.is_invariant() {
                s.invariant_old += 1;
            }
            if t.flags & IMPACTED != 0 {
                s.impacted_old += 1;
            }
        }
        if t.is_irregular() {
            s.irregular += 1;
        }
        if t.link.is_some() {
            s.links_allocated += 1;
        }
        match t.kind {
            CriticalType::Minimum => s.minima += 1,
            CriticalType::Maximum => s.maxima += 1,
            CriticalType::Saddle { .. } => s.saddles += 1,
            CriticalType::Regular => {}
        }
    }
    s
}

impl ProgressiveState {
    /// Classifies every vertex of level 0, allocating a link for each.
    pub fn initialize_level0(hierarchy: &Hierarchy, field: &ScalarField) -> Result<Self> {
        Self::init_level(hierarchy, field, 0, true)
    }

    /// Classifies every vertex of `level` directly, without progressive
    /// bookkeeping (links are not stored).
    pub fn from_scratch(hierarchy: &Hierarchy, field: &ScalarField, level: usize) -> Result<Self> {
        Self::init_level(hierarchy, field, level, false)
    }

    fn init_level(
        hierarchy: &Hierarchy,
        field: &ScalarField,
        level: usize,
        keep_links: bool,
    ) -> Result<Self> {
        let view = field.level_view(hierarchy, level)?;
        let grid = hierarchy.level(level);
        let table = hierarchy.slots();
        let topo: Vec<VertexTopo> = (0..grid.vertex_count())
            .into_par_iter()
            .map(|idx| {
                let c = grid.coords(idx);
                let valid = grid.valid_slots(table, c);
                let polarity = full_polarity(grid, table, &view, idx, c, valid);
                let graph = LinkGraph::from_slots(table, valid);
                if keep_links {
                    let link = PolarizedLink::init(&graph, polarity);
                    VertexTopo {
                        polarity,
                        kind: CriticalType::from_counts(link.lower_components(), link.upper_components()),
                        link: Some(link),
                        flags: NEW,
                    }
                } else {
                    let (lo, up) = graph.component_counts(polarity);
                    VertexTopo {
                        polarity,
                        link: None,
                        kind: CriticalType::from_counts(lo, up),
                        flags: NEW,
                    }
                }
            })
            .collect();
        let stats = finish_stats(level, &topo);
        Ok(ProgressiveState {
            level,
            field: view,
            topo,
            stats,
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn field(&self) -> &LevelField {
        &self.field
    }

    pub fn topo(&self) -> &[VertexTopo] {
        &self.topo
    }

    pub fn vertex(&self, index: usize) -> &VertexTopo {
        &self.topo[index]
    }

    pub fn kind(&self, index: usize) -> CriticalType {
        self.topo[index].kind
    }

    pub fn kinds(&self) -> Vec<CriticalType> {
        self.topo.iter().map(|t| t.kind).collect()
    }

    pub fn stats(&self) -> &LevelStats {
        &self.stats
    }

    /// Critical vertices of the current level, in vertex order.
    pub fn critical_points(&self, hierarchy: &Hierarchy) -> Vec<CriticalPoint> {
        let grid = hierarchy.level(self.level);
        self.topo
            .iter()
            .enumerate()
            .filter(|(_, t)| t.kind.is_critical())
            .map(|(idx, t)| CriticalPoint {
                level: self.level,
                grid0: grid.grid0_coords(grid.coords(idx)),
                value: self.field.value(idx),
                kind: t.kind,
            })
            .collect()
    }

    /// Moves to the next finer level.
    pub fn advance_level(&self, hierarchy: &Hierarchy, field: &ScalarField) -> Result<Self> {
        if self.level >= hierarchy.finest() {
            return Err(Error::invalid(format!(
                "level {} is already the finest",
                self.level
            )));
        }
        let level = self.level + 1;
        let view = field.level_view(hierarchy, level)?;
        let grid = hierarchy.level(level);
        let coarse = hierarchy.level(self.level);
        let table = hierarchy.slots();
        let n = grid.vertex_count();

        // Step 1: monotonic new vertices.
        let monotonic: Vec<bool> = (0..n)
            .into_par_iter()
            .map(|idx| {
                let c = grid.coords(idx);
                if hierarchy.coarse_coords(level, c).is_some() {
                    return false;
                }
                let (e0, e1) = parent_edge(c, grid.cells());
                let (a, b) = (grid.index(e0), grid.index(e1));
                let (lo, hi) = if view.is_lower(a, b) { (a, b) } else { (b, a) };
                view.is_lower(lo, idx) && view.is_lower(idx, hi)
            })
            .collect();

        // Steps 2-4.
        let topo: Vec<VertexTopo> = (0..n)
            .into_par_iter()
            .map(|idx| {
                let c = grid.coords(idx);
                let valid = grid.valid_slots(table, c);
                let irregular = hierarchy.is_irregular(level, c);
                let irregular_flag = if irregular { IRREGULAR } else { 0 };
                match hierarchy.coarse_coords(level, c) {
                    Some(cc) => {
                        let prev = &self.topo[coarse.index(cc)];
                        if irregular {
                            let polarity = full_polarity(grid, table, &view, idx, c, valid);
                            let graph = LinkGraph::from_slots(table, valid);
                            let link = PolarizedLink::init(&graph, polarity);
                            return VertexTopo {
                                polarity,
                                kind: CriticalType::from_counts(
                                    link.lower_components(),
                                    link.upper_components(),
                                ),
                                link: Some(link),
                                flags: IRREGULAR,
                            };
                        }
                        let mut flips = 0u16;
                        let mut rest = valid;
                        while rest != 0 {
                            let k = rest.trailing_zeros() as usize;
                            rest &= rest - 1;
                            let nb = grid.index(grid.step(table, c, k));
                            if !monotonic[nb] {
                                let up = view.is_lower(idx, nb);
                                if up != (prev.polarity & (1 << k) != 0) {
                                    flips |= 1 << k;
                                }
                            }
                        }
                        if flips == 0 {
                            return VertexTopo {
                                flags: INVARIANT,
                                ..*prev
                            };
                        }
                        let polarity = prev.polarity ^ flips;
                        let graph = LinkGraph::from_slots(table, valid);
                        let link = match prev.link {
                            Some(mut link) => {
                                link.flip_and_update(&graph, flips);
                                link
                            }
                            None => PolarizedLink::init(&graph, polarity),
                        };
                        VertexTopo {
                            polarity,
                            kind: CriticalType::from_counts(
                                link.lower_components(),
                                link.upper_components(),
                            ),
                            link: Some(link),
                            flags: IMPACTED,
                        }
                    }
                    None => {
                        let polarity = full_polarity(grid, table, &view, idx, c, valid);
                        let mono = if monotonic[idx] { MONOTONIC } else { 0 };
                        let interpolating = !irregular
                            && monotonic[idx]
                            && slot_iter(valid).all(|k| {
                                let nc = grid.step(table, c, k);
                                hierarchy.coarse_coords(level, nc).is_some()
                                    || monotonic[grid.index(nc)]
                            });
                        if interpolating {
                            return VertexTopo {
                                polarity,
                                link: None,
                                kind: CriticalType::Regular,
                                flags: NEW | mono | INVARIANT,
                            };
                        }
                        let graph = LinkGraph::from_slots(table, valid);
                        let link = PolarizedLink::init(&graph, polarity);
                        VertexTopo {
                            polarity,
                            kind: CriticalType::from_counts(
                                link.lower_components(),
                                link.upper_components(),
                            ),
                            link: Some(link),
                            flags: NEW | mono | irregular_flag,
                        }
                    }
                }
            })
            .collect();

        let stats = finish_stats(level, &topo);
        Ok(ProgressiveState {
            level,
            field: view,
            topo,
            stats,
        })
    }

    /// Lower or upper link components of a vertex, as masks over slots.
    pub fn link_components(&self, hierarchy: &Hierarchy, index: usize, side: Side) -> Vec<u16> {
        let t = &self.topo[index];
        if let Some(link) = &t.link {
            return link.component_masks(side);
        }
        let grid = hierarchy.level(self.level);
        let table = hierarchy.slots();
        let valid = grid.valid_slots(table, grid.coords(index));
        LinkGraph::from_slots(table, valid).components(t.polarity, side)
    }
}

#[inline]
fn slot_iter(mask: u16) -> impl Iterator<Item = usize> {
    (0..16).filter(move |k| mask & (1 << k) != 0)
}

/// Classifies one vertex from its link, with no stored state.
pub fn classify_from_scratch(
    hierarchy: &Hierarchy,
    field: &ScalarField,
    v: VertexId,
) -> Result<CriticalType> {
    let pattern = hierarchy.link_pattern(v)?;
    let center = field.sample(hierarchy, v);
    let center_idx = hierarchy.grid0_index(v);
    let mut polarity = 0u16;
    for (i, &n) in pattern.neighbors.iter().enumerate() {
        let value = field.sample(hierarchy, n);
        let above = value > center || (value == center && hierarchy.grid0_index(n) > center_idx);
        if above {
            polarity |= 1 << i;
        }
    }
    let (lo, up) = LinkGraph::from_pattern(&pattern).component_counts(polarity);
    Ok(CriticalType::from_counts(lo, up))
}

/// Classifies every vertex of one level from scratch.
pub fn classify_level(hierarchy: &Hierarchy, field: &ScalarField, level: usize) -> Result<Vec<CriticalType>> {
    Ok(ProgressiveState::from_scratch(hierarchy, field, level)?.kinds())
}
