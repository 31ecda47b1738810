//! Connected components of the lower and upper links of a vertex under
//! polarity flips.
//!
//! Links have at most 14 vertices, so the graph is kept as one `u16`
//! adjacency mask per link vertex. Active edges (both ends with the same
//! polarity) are inserted and deleted explicitly as neighbors flip, and
//! component counts are refreshed by a flood fill over the masks.

use crate::hierarchy::{LinkPattern, SlotTable, MAX_SLOTS};

/// Which part of the link.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    /// Neighbors below the vertex (polarity bit 0).
    Lower,
    /// Neighbors above the vertex (polarity bit 1).
    Upper,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Lower => Side::Upper,
            Side::Upper => Side::Lower,
        }
    }
}

/// Link 1-skeleton with at most [`MAX_SLOTS`] vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LinkGraph {
    adjacency: [u16; MAX_SLOTS],
    present: u16,
}

impl LinkGraph {
    /// Graph over local neighbor indices of a pattern.
    pub fn from_pattern(pattern: &LinkPattern) -> Self {
        assert!(pattern.neighbors.len() <= MAX_SLOTS, "link too large");
        let mut adjacency = [0u16; MAX_SLOTS];
        for &(a, b) in &pattern.edges {
            adjacency[a] |= 1 << b;
            adjacency[b] |= 1 << a;
        }
        let present = ((1u32 << pattern.neighbors.len()) - 1) as u16;
        LinkGraph { adjacency, present }
    }

    /// Graph over slot indices, restricted to the `valid` slots.
    #[inline]
    pub fn from_slots(table: &SlotTable, valid: u16) -> Self {
        let mut adjacency = [0u16; MAX_SLOTS];
        let mut rest = valid;
        while rest != 0 {
            let k = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            adjacency[k] = table.adjacency(k) & valid;
        }
        LinkGraph {
            adjacency,
            present: valid,
        }
    }

    /// Explicit edge list over `n` nodes.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        assert!(n <= MAX_SLOTS, "link too large");
        let mut adjacency = [0u16; MAX_SLOTS];
        for &(a, b) in edges {
            adjacency[a] |= 1 << b;
            adjacency[b] |= 1 << a;
        }
        LinkGraph {
            adjacency,
            present: ((1u32 << n) - 1) as u16,
        }
    }

    pub fn present(&self) -> u16 {
        self.present
    }

    #[inline]
    pub fn adjacency(&self, node: usize) -> u16 {
        self.adjacency[node]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(|m| m.count_ones() as usize).sum::<usize>() / 2
    }

    /// Components of one side from scratch, as node masks.
    pub fn components(&self, polarity: u16, side: Side) -> Vec<u16> {
        let allowed = side_mask(self.present, polarity, side);
        let mut adjacency = self.adjacency;
        for m in adjacency.iter_mut() {
            *m &= allowed;
        }
        partition(&adjacency, allowed)
    }

    /// `(lower, upper)` component counts from scratch.
    #[inline]
    pub fn component_counts(&self, polarity: u16) -> (u8, u8) {
        let lower = side_mask(self.present, polarity, Side::Lower);
        let upper = side_mask(self.present, polarity, Side::Upper);
        (
            count_within(&self.adjacency, lower),
            count_within(&self.adjacency, upper),
        )
    }
}

#[inline]
fn side_mask(present: u16, polarity: u16, side: Side) -> u16 {
    match side {
        Side::Lower => present & !polarity,
        Side::Upper => present & polarity,
    }
}

#[inline]
fn flood(adjacency: &[u16; MAX_SLOTS], seed: usize, allowed: u16) -> u16 {
    let mut comp = 1u16 << seed;
    let mut frontier = comp;
    while frontier != 0 {
        let k = frontier.trailing_zeros() as usize;
        frontier &= frontier - 1;
        let next = adjacency[k] & allowed & !comp;
        comp |= next;
        frontier |= next;
    }
    comp
}

#[inline]
fn count_within(adjacency: &[u16; MAX_SLOTS], allowed: u16) -> u8 {
    let mut rest = allowed;
    let mut count = 0;
    while rest != 0 {
        let seed = rest.trailing_zeros() as usize;
        rest &= !flood(adjacency, seed, allowed);
        count += 1;
    }
    count
}

fn partition(adjacency: &[u16; MAX_SLOTS], allowed: u16) -> Vec<u16> {
    let mut rest = allowed;
    let mut out = Vec::new();
    while rest != 0 {
        let seed = rest.trailing_zeros() as usize;
        let comp = flood(adjacency, seed, allowed);
        rest &= !comp;
        out.push(comp);
    }
    out
}

/// Result of a polarity update.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LinkUpdate {
    pub removed: usize,
    pub added: usize,
    pub lower: u8,
    pub upper: u8,
}

/// Polarity bits, active edges and component counts of one vertex link.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PolarizedLink {
    present: u16,
    polarity: u16,
    active: [u16; MAX_SLOTS],
    lower: u8,
    upper: u8,
}

impl PolarizedLink {
    /// Inserts every link vertex, then every edge whose ends share polarity.
    pub fn init(graph: &LinkGraph, polarity: u16) -> Self {
        let polarity = polarity & graph.present;
        let mut active = [0u16; MAX_SLOTS];
        let mut rest = graph.present;
        while rest != 0 {
            let k = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let same = if polarity & (1 << k) != 0 {
                polarity
            } else {
                !polarity & graph.present
            };
            active[k] = graph.adjacency[k] & same;
        }
        let mut link = PolarizedLink {
            present: graph.present,
            polarity,
            active,
            lower: 0,
            upper: 0,
        };
        link.recount();
        link
    }

    fn recount(&mut self) {
        self.lower = count_within(&self.active, self.present & !self.polarity);
        self.upper = count_within(&self.active, self.present & self.polarity);
    }

    /// Toggles the polarity of every neighbor in `flips` and updates only
    /// the edges incident to them: an active edge is removed, an inactive
    /// one is inserted if its ends now share polarity.
    pub fn flip_and_update(&mut self, graph: &LinkGraph, flips: u16) -> LinkUpdate {
        let mut removed = 0;
        let mut added = 0;
        let mut rest = flips & self.present;
        while rest != 0 {
            let n = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            self.polarity ^= 1 << n;
            let up = self.polarity & (1 << n) != 0;
            let mut edges = graph.adjacency[n];
            while edges != 0 {
                let m = edges.trailing_zeros() as usize;
                edges &= edges - 1;
                if self.active[n] & (1 << m) != 0 {
                    self.active[n] &= !(1 << m);
                    self.active[m] &= !(1 << n);
                    removed += 1;
                } else if (self.polarity & (1 << m) != 0) == up {
                    self.active[n] |= 1 << m;
                    self.active[m] |= 1 << n;
                    added += 1;
                }
            }
        }
        self.recount();
        LinkUpdate {
            removed,
            added,
            lower: self.lower,
            upper: self.upper,
        }
    }

    pub fn polarity(&self) -> u16 {
        self.polarity
    }

    pub fn lower_components(&self) -> u8 {
        self.lower
    }

    pub fn upper_components(&self) -> u8 {
        self.upper
    }

    pub fn component_count(&self, side: Side) -> u8 {
        match side {
            Side::Lower => self.lower,
            Side::Upper => self.upper,
        }
    }

    pub fn is_active(&self, a: usize, b: usize) -> bool {
        self.active[a] & (1 << b) != 0
    }

    pub fn active_edge_count(&self) -> usize {
        self.active.iter().map(|m| m.count_ones() as usize).sum::<usize>() / 2
    }

    /// Components of one side as node masks, ordered by lowest node.
    pub fn component_masks(&self, side: Side) -> Vec<u16> {
        partition(&self.active, side_mask(self.present, self.polarity, side))
    }

    /// Components of one side as sorted node lists.
    pub fn component_members(&self, side: Side) -> Vec<Vec<usize>> {
        self.component_masks(side)
            .into_iter()
            .map(mask_members)
            .collect()
    }
}

/// Node indices set in `mask`, ascending.
pub fn mask_members(mask: u16) -> Vec<usize> {
    (0..16).filter(|k| mask & (1 << k) != 0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::slot_table;
    use proptest::prelude::*;

    fn hexagon() -> LinkGraph {
        LinkGraph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5)])
    }

    fn bits(pattern: &[bool]) -> u16 {
        pattern
            .iter()
            .enumerate()
            .fold(0, |acc, (k, &b)| acc | ((b as u16) << k))
    }

    /// Plain BFS over an explicit edge list.
    fn bfs_components(n: usize, edges: &[(usize, usize)], polarity: u16, side: Side) -> Vec<Vec<usize>> {
        let want = side == Side::Upper;
        let keep = |k: usize| (polarity & (1 << k) != 0) == want;
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] || !keep(s) {
                continue;
            }
            let mut comp = vec![s];
            seen[s] = true;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &(a, b) in edges {
                    let w = if a == u {
                        b
                    } else if b == u {
                        a
                    } else {
                        continue;
                    };
                    if keep(w) && !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        queue.push_back(w);
                    }
                }
            }
            comp.sort();
            out.push(comp);
        }
        out
    }

    #[test]
    fn all_upper_hexagon() {
        let link = PolarizedLink::init(&hexagon(), 0b111111);
        assert_eq!((link.lower_components(), link.upper_components()), (0, 1));
    }

    #[test]
    fn alternating_hexagon() {
        let link = PolarizedLink::init(&hexagon(), bits(&[true, false, true, false, true, false]));
        assert_eq!((link.lower_components(), link.upper_components()), (3, 3));
        assert_eq!(
            link.component_members(Side::Upper),
            vec![vec![0], vec![2], vec![4]]
        );
    }

    #[test]
    fn interior_3d_all_lower() {
        let table = slot_table(3);
        let graph = LinkGraph::from_slots(table, table.full_mask());
        assert_eq!(graph.edge_count(), 36);
        let link = PolarizedLink::init(&graph, 0);
        assert_eq!((link.lower_components(), link.upper_components()), (1, 0));
        assert_eq!(link.active_edge_count(), 36);
    }

    /// Two flips on the hexagon: 0 goes up, 4 goes down. Edges (0,1), (3,4)
    /// and (4,5) are deleted and (0,5) is inserted.
    #[test]
    fn two_flip_update() {
        let g = hexagon();
        let before = bits(&[false, false, false, true, true, true]);
        let mut link = PolarizedLink::init(&g, before);
        assert_eq!((link.lower_components(), link.upper_components()), (1, 1));
        let update = link.flip_and_update(&g, (1 << 0) | (1 << 4));
        assert_eq!(update.removed, 3);
        assert_eq!(update.added, 1);
        assert!(link.is_active(0, 5));
        assert!(!link.is_active(0, 1) && !link.is_active(3, 4) && !link.is_active(4, 5));
        assert_eq!((update.lower, update.upper), (2, 2));
        assert_eq!(link.component_members(Side::Lower), vec![vec![1, 2], vec![4]]);
        assert_eq!(link.component_members(Side::Upper), vec![vec![0, 5], vec![3]]);
    }

    #[test]
    fn flip_is_an_involution() {
        let g = hexagon();
        let start = PolarizedLink::init(&g, 0b010011);
        let mut link = start;
        link.flip_and_update(&g, 0b100100);
        link.flip_and_update(&g, 0b100100);
        assert_eq!(link, start);
    }

    #[test]
    fn bridge_deletion_adds_one_component() {
        // path 0-1-2-3, all lower
        let g = LinkGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]);
        let mut link = PolarizedLink::init(&g, 0);
        assert_eq!(link.lower_components(), 1);
        let up = link.flip_and_update(&g, 1 << 3);
        assert_eq!((up.lower, up.upper), (1, 1));
        let up = link.flip_and_update(&g, 1 << 1);
        assert_eq!(up.lower, 2);
    }

    #[test]
    fn every_hexagon_polarity_matches_bfs() {
        let edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5)];
        let g = LinkGraph::from_edges(6, &edges);
        for pol in 0u16..64 {
            let link = PolarizedLink::init(&g, pol);
            for side in [Side::Lower, Side::Upper] {
                assert_eq!(link.component_members(side), bfs_components(6, &edges, pol, side));
            }
        }
    }

    proptest! {
        #[test]
        fn random_flip_sequences_match_bfs(
            start in 0u16..(1 << 14),
            flips in proptest::collection::vec(1u16..(1 << 14), 1..20),
            subset in 1u16..(1 << 14),
        ) {
            let table = slot_table(3);
            // induced sub-link, as left by grid boundaries
            let valid = table.full_mask() & subset;
            prop_assume!(valid != 0);
            let graph = LinkGraph::from_slots(table, valid);
            let edges: Vec<(usize, usize)> = table
                .edges()
                .iter()
                .filter(|(a, b)| valid & (1 << a) != 0 && valid & (1 << b) != 0)
                .map(|&(a, b)| (a as usize, b as usize))
                .collect();
            let mut link = PolarizedLink::init(&graph, start);
            let mut pol = start & valid;
            for f in flips {
                link.flip_and_update(&graph, f);
                pol ^= f & valid;
                prop_assert_eq!(link.polarity(), pol);
                for side in [Side::Lower, Side::Upper] {
                    let mut expected = bfs_components(14, &edges, pol, side);
                    expected.retain(|c| c.iter().all(|&k| valid & (1 << k) != 0));
                    prop_assert_eq!(link.component_members(side), expected.clone());
                    prop_assert_eq!(link.component_count(side) as usize, expected.len());
                }
                prop_assert_eq!(link, PolarizedLink::init(&graph, pol));
                prop_assert_eq!(graph.component_counts(pol), (link.lower_components(), link.upper_components()));
            }
        }
    }
}
