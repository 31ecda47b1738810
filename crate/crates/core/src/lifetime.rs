//! Heuristic tracking of extrema across levels.
//!
//! After each refinement, every tracked maximum follows short ascending
//! integral lines from each of its neighbors; the highest maximum reached
//! becomes its new position. A maximum reached by several tracks keeps only
//! the oldest one; tracks that reach nothing disappear, and maxima no track
//! reached appear as new tracks. Minima use the mirrored procedure.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::critical::ProgressiveState;
use crate::hierarchy::Hierarchy;
use crate::link::Side;

/// Default cap on integral line length, in edges.
pub const DEFAULT_LMAX: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub level: usize,
    pub grid0: [usize; 3],
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremumTrack {
    pub id: usize,
    /// Level of appearance.
    pub l_a: usize,
    /// Level of disappearance, unset while alive.
    pub l_d: Option<usize>,
    pub trajectory: Vec<TrajectoryPoint>,
    #[serde(skip)]
    current: Option<usize>,
}

impl ExtremumTrack {
    pub fn is_alive(&self) -> bool {
        self.l_d.is_none()
    }

    /// `l_d - l_a`, or `None` while alive.
    pub fn lifetime(&self) -> Option<usize> {
        self.l_d.map(|d| d - self.l_a)
    }
}

/// Tracks of maxima (`Side::Upper`) or minima (`Side::Lower`).
#[derive(Clone, Debug)]
pub struct LifetimeTracker {
    side: Side,
    l_max: usize,
    level: Option<usize>,
    tracks: Vec<ExtremumTrack>,
}

impl LifetimeTracker {
    pub fn new(side: Side, l_max: usize) -> Self {
        LifetimeTracker {
            side,
            l_max,
            level: None,
            tracks: Vec::new(),
        }
    }

    pub fn tracks(&self) -> &[ExtremumTrack] {
        &self.tracks
    }

    pub fn alive(&self) -> usize {
        self.tracks.iter().filter(|t| t.is_alive()).count()
    }

    /// Feeds the next level. The first call starts one track per extremum;
    /// later calls must come one level at a time.
    pub fn update(&mut self, hierarchy: &Hierarchy, state: &ProgressiveState) {
        let level = state.level();
        let grid = hierarchy.level(level);
        let field = state.field();
        let extrema: Vec<usize> = (0..grid.vertex_count())
            .filter(|&i| state.kind(i).is_extremum(self.side))
            .collect();
        let point = |i: usize| TrajectoryPoint {
            level,
            grid0: grid.grid0_coords(grid.coords(i)),
            value: field.value(i),
        };

        let Some(prev_level) = self.level else {
            for &e in &extrema {
                self.spawn(level, e, point(e));
            }
            self.level = Some(level);
            return;
        };
        assert_eq!(prev_level + 1, level, "tracker levels must be consecutive");

        let table = hierarchy.slots();
        let side = self.side;
        let above = |a: usize, b: usize| match side {
            Side::Upper => field.is_lower(b, a),
            Side::Lower => field.is_lower(a, b),
        };
        let l_max = self.l_max;
        // Terminal extremum reached from `n` within `budget` edges.
        let ascend = |mut v: usize, mut budget: usize| -> Option<usize> {
            loop {
                let best = grid
                    .neighbor_indices(table, v)
                    .filter(|&nb| above(nb, v))
                    .reduce(|a, b| if above(b, a) { b } else { a });
                match best {
                    None => return Some(v),
                    Some(_) if budget == 0 => return None,
                    Some(nb) => {
                        v = nb;
                        budget -= 1;
                    }
                }
            }
        };

        let alive: Vec<usize> = (0..self.tracks.len())
            .filter(|&t| self.tracks[t].is_alive())
            .collect();
        let targets: Vec<Option<usize>> = alive
            .par_iter()
            .map(|&t| {
                let cur = self.tracks[t].current.expect("alive track has a vertex");
                let c = hierarchy.fine_coords(prev_level, hierarchy.level(prev_level).coords(cur));
                let v = grid.index(c);
                if l_max == 0 {
                    return None;
                }
                // The hop from v to n is the first edge of the line.
                grid.neighbor_indices(table, v)
                    .filter_map(|n| ascend(n, l_max - 1))
                    .reduce(|a, b| if a != b && above(b, a) { b } else { a })
            })
            .collect();

        // Collisions: the oldest track (smallest l_a, then smallest grid-0
        // index of its previous position) survives.
        let verts0 = hierarchy.grid0_verts();
        let lin = |c: [usize; 3]| c[0] + verts0[0] * (c[1] + verts0[1] * c[2]);
        let mut claims: Vec<(usize, usize, usize, usize)> = alive
            .iter()
            .zip(&targets)
            .filter_map(|(&t, target)| {
                let tr = &self.tracks[t];
                let last = tr.trajectory.last().expect("non-empty trajectory");
                target.map(|m| (m, tr.l_a, lin(last.grid0), t))
            })
            .collect();
        claims.sort_unstable();

        let mut claimed = vec![false; grid.vertex_count()];
        for &t in &alive {
            self.tracks[t].current = None;
        }
        for (m, _, _, t) in claims {
            if !claimed[m] {
                claimed[m] = true;
                let tr = &mut self.tracks[t];
                tr.current = Some(m);
                tr.trajectory.push(point(m));
            }
        }
        for &t in &alive {
            if self.tracks[t].current.is_none() {
                self.tracks[t].l_d = Some(level);
            }
        }
        for &e in &extrema {
            if !claimed[e] {
                self.spawn(level, e, point(e));
            }
        }
        self.level = Some(level);
    }

    fn spawn(&mut self, level: usize, v: usize, p: TrajectoryPoint) {
        let id = self.tracks.len();
        self.tracks.push(ExtremumTrack {
            id,
            l_a: level,
            l_d: None,
            trajectory: vec![p],
            current: Some(v),
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;
    use crate::progressive::{run_progressive, Budget};

    fn track(f: &ScalarField, side: Side, l_max: usize) -> LifetimeTracker {
        let h = Hierarchy::build(f.cells(), f.dimension(), None).unwrap();
        let mut tracker = LifetimeTracker::new(side, l_max);
        run_progressive(&h, f, None, &Budget::unlimited(), |out| {
            tracker.update(&h, out.state);
            let expected = match side {
                Side::Upper => out.state.stats().maxima,
                Side::Lower => out.state.stats().minima,
            };
            assert_eq!(tracker.alive(), expected);
            Ok(())
        })
        .unwrap();
        tracker
    }

    fn gaussian(verts: [usize; 3]) -> ScalarField {
        ScalarField::from_fn(verts, |c| {
            let d: f64 = (0..3)
                .map(|a| {
                    let t = c[a] as f64 / (verts[a].max(2) - 1) as f64 - 0.45;
                    t * t
                })
                .sum();
            (-d / 0.05).exp()
        })
        .unwrap()
    }

    #[test]
    fn single_maximum_lives_forever() {
        let f = gaussian([17, 17, 17]);
        let t = track(&f, Side::Upper, DEFAULT_LMAX);
        let levels = Hierarchy::build(f.cells(), 3, None).unwrap().level_count();
        assert_eq!(t.tracks().len(), 1);
        assert_eq!(t.tracks()[0].l_a, 0);
        assert!(t.tracks()[0].is_alive());
        assert_eq!(t.tracks()[0].trajectory.len(), levels);
    }

    #[test]
    fn zero_cap_kills_every_track() {
        let t = track(&gaussian([17, 17, 1]), Side::Upper, 0);
        // One fresh track per level, each dying at the next one.
        let h = Hierarchy::build([16, 16, 0], 2, None).unwrap();
        assert_eq!(t.tracks().len(), h.level_count());
        for tr in &t.tracks()[..t.tracks().len() - 1] {
            assert_eq!(tr.lifetime(), Some(1));
        }
    }

    #[test]
    fn oldest_survives_collision() {
        // Two bumps at level 0 merge into one at the finest level.
        let f = ScalarField::from_fn([9, 3, 1], |c| {
            [0.0, 1.0, 0.5, 1.2, 2.0, 1.3, 0.6, 1.1, 0.0][c[0]] + 0.01 * c[1] as f64
        })
        .unwrap();
        let t = track(&f, Side::Upper, DEFAULT_LMAX);
        assert!(t.tracks().iter().all(|tr| tr.l_a <= tr.l_d.unwrap_or(usize::MAX)));
        let minima = track(&f, Side::Lower, DEFAULT_LMAX);
        assert!(!minima.tracks().is_empty());
    }
}
