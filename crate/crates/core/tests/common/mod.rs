//! Independent oracles shared by the integration tests.
//!
//! Nothing here uses the library's slot tables, links or persistence code:
//! each level is rebuilt as an explicit simplicial complex (every grid cell
//! cut into Kuhn simplices along its main diagonal), vertices are classified
//! by counting lower/upper link components with a BFS, and diagrams come
//! from a sorted sweep with a plain union-find.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet};

use ptopo_core::{
    CriticalType, DiagramPoint, Hierarchy, PairClass, PairSelection, PersistenceDiagram, ProgressiveState,
    ScalarField,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One level as an explicit complex. Vertices are numbered in level-local
/// x-fastest order.
pub struct Complex {
    pub verts: [usize; 3],
    pub dimension: usize,
    /// Top simplices (triangles in 2D, tetrahedra in 3D).
    pub simplices: Vec<Vec<usize>>,
    pub neighbors: Vec<BTreeSet<usize>>,
    pub values: Vec<f64>,
    pub grid0: Vec<[usize; 3]>,
    pub order_key: Vec<usize>,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

impl Complex {
    pub fn build(h: &Hierarchy, field: &ScalarField, level: usize) -> Complex {
        let grid = h.level(level);
        let verts = grid.verts();
        let dimension = h.dimension();
        let cells = [
            verts[0] - 1,
            verts[1] - 1,
            if dimension == 3 { verts[2] - 1 } else { 1 },
        ];
        let idx = |c: [usize; 3]| c[0] + verts[0] * (c[1] + verts[1] * c[2]);
        let perms = permutations(dimension);
        let mut simplices = Vec::new();
        for z in 0..cells[2] {
            for y in 0..cells[1] {
                for x in 0..cells[0] {
                    for p in &perms {
                        let mut c = [x, y, z];
                        let mut s = vec![idx(c)];
                        for &axis in p {
                            c[axis] += 1;
                            s.push(idx(c));
                        }
                        simplices.push(s);
                    }
                }
            }
        }
        let n = verts.iter().product::<usize>();
        let mut neighbors = vec![BTreeSet::new(); n];
        for s in &simplices {
            for &a in s {
                for &b in s {
                    if a != b {
                        neighbors[a].insert(b);
                    }
                }
            }
        }
        let mut values = Vec::with_capacity(n);
        let mut grid0 = Vec::with_capacity(n);
        let mut order_key = Vec::with_capacity(n);
        let v0 = field.verts();
        for i in 0..n {
            let c = [i % verts[0], (i / verts[0]) % verts[1], i / (verts[0] * verts[1])];
            let g = grid.grid0_coords(c);
            values.push(field.at(g));
            grid0.push(g);
            order_key.push(g[0] + v0[0] * (g[1] + v0[1] * g[2]));
        }
        Complex {
            verts,
            dimension,
            simplices,
            neighbors,
            values,
            grid0,
            order_key,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn lower(&self, a: usize, b: usize) -> bool {
        (self.values[a], self.order_key[a]) < (self.values[b], self.order_key[b])
    }

    /// Edges `(a, b)` with `a < b`.
    pub fn edges(&self) -> BTreeSet<(usize, usize)> {
        let mut e = BTreeSet::new();
        for (a, nb) in self.neighbors.iter().enumerate() {
            for &b in nb {
                if a < b {
                    e.insert((a, b));
                }
            }
        }
        e
    }

    /// Banchoff classification of every vertex.
    pub fn classify(&self) -> Vec<CriticalType> {
        let mut star: Vec<Vec<usize>> = vec![Vec::new(); self.len()];
        for (i, s) in self.simplices.iter().enumerate() {
            for &v in s {
                star[v].push(i);
            }
        }
        (0..self.len())
            .map(|v| {
                let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
                for &si in &star[v] {
                    let s = &self.simplices[si];
                    for &a in s {
                        for &b in s {
                            if a != v && b != v && a != b {
                                adj.entry(a).or_default().push(b);
                            }
                        }
                    }
                }
                let count = |upper: bool| -> u8 {
                    let members: Vec<usize> = self.neighbors[v]
                        .iter()
                        .copied()
                        .filter(|&n| self.lower(v, n) == upper)
                        .collect();
                    let mut seen = HashSet::new();
                    let mut comps = 0;
                    for &m in &members {
                        if !seen.insert(m) {
                            continue;
                        }
                        comps += 1;
                        let mut stack = vec![m];
                        while let Some(x) = stack.pop() {
                            for &y in adj.get(&x).map(Vec::as_slice).unwrap_or(&[]) {
                                if self.lower(v, y) == upper && seen.insert(y) {
                                    stack.push(y);
                                }
                            }
                        }
                    }
                    comps
                };
                CriticalType::from_counts(count(false), count(true))
            })
            .collect()
    }

    /// Extremum-saddle diagram by a sorted sweep with union-find, as sorted
    /// `(birth, death)` lists per class.
    pub fn diagram(&self) -> OracleDiagram {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.values[a]
                .total_cmp(&self.values[b])
                .then(self.order_key[a].cmp(&self.order_key[b]))
        });
        let min_saddle = self.sweep(&order, false);
        order.reverse();
        let saddle_max = self.sweep(&order, true);
        let global = vec![(self.values[order[order.len() - 1]], self.values[order[0]])];
        OracleDiagram {
            min_saddle: sorted(min_saddle),
            saddle_max: sorted(saddle_max),
            global,
        }
    }

    fn sweep(&self, order: &[usize], reversed: bool) -> Vec<(f64, f64)> {
        let n = self.len();
        let mut rank = vec![0usize; n];
        for (r, &v) in order.iter().enumerate() {
            rank[v] = r;
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut pairs = Vec::new();
        for &v in order {
            let mut roots: Vec<usize> = self.neighbors[v]
                .iter()
                .filter(|&&u| rank[u] < rank[v])
                .map(|&u| find(&mut parent, u))
                .collect();
            roots.sort_by_key(|&r| rank[r]);
            roots.dedup();
            if let Some((&oldest, younger)) = roots.split_first() {
                for &r in younger {
                    let (ext, sad) = (self.values[r], self.values[v]);
                    pairs.push(if reversed { (sad, ext) } else { (ext, sad) });
                    parent[r] = oldest;
                }
                parent[v] = oldest;
            }
        }
        pairs
    }
}

fn sorted(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    v
}

#[derive(Debug, PartialEq)]
pub struct OracleDiagram {
    pub min_saddle: Vec<(f64, f64)>,
    pub saddle_max: Vec<(f64, f64)>,
    pub global: Vec<(f64, f64)>,
}

impl OracleDiagram {
    pub fn matches(&self, d: &PersistenceDiagram) -> bool {
        d.value_pairs(PairClass::MinSaddle) == self.min_saddle
            && d.value_pairs(PairClass::SaddleMax) == self.saddle_max
            && d.value_pairs(PairClass::Global) == self.global
    }
}

/// Structural checks every diagram must pass; returns a description of the
/// first violation.
///
/// Extrema are never shared between pairs. A saddle whose lower (upper) link
/// has `k` components closes up to `k - 1` pairs, so saddles may repeat up
/// to that multiplicity.
pub fn structural_violation(
    d: &PersistenceDiagram,
    h: &Hierarchy,
    state: &ProgressiveState,
    selection: PairSelection,
) -> Option<String> {
    let st = state.stats();
    if selection.min_saddle() && d.count(PairClass::MinSaddle) != st.minima - 1 {
        return Some(format!(
            "{} min-saddle pairs for {} minima",
            d.count(PairClass::MinSaddle),
            st.minima
        ));
    }
    if selection.saddle_max() && d.count(PairClass::SaddleMax) != st.maxima - 1 {
        return Some(format!(
            "{} saddle-max pairs for {} maxima",
            d.count(PairClass::SaddleMax),
            st.maxima
        ));
    }
    if d.count(PairClass::Global) != 1 {
        return Some("missing or duplicated global pair".into());
    }
    let grid = h.level(state.level());
    let kinds: HashMap<[usize; 3], CriticalType> = (0..grid.vertex_count())
        .map(|i| (grid.grid0_coords(grid.coords(i)), state.kind(i)))
        .collect();
    for class in [PairClass::MinSaddle, PairClass::SaddleMax] {
        let mut extrema = HashSet::new();
        let mut saddles: HashMap<[usize; 3], u8> = HashMap::new();
        for p in d.of_class(class) {
            let (ext, sad) = match class {
                PairClass::MinSaddle => (p.birth_vertex, p.death_vertex),
                _ => (p.death_vertex, p.birth_vertex),
            };
            if !extrema.insert(ext) {
                return Some(format!("{class}: extremum {ext:?} used by two pairs"));
            }
            *saddles.entry(sad).or_default() += 1;
        }
        for (sad, n) in saddles {
            let allowed = match (kinds.get(&sad), class) {
                (Some(CriticalType::Saddle { lower_components, .. }), PairClass::MinSaddle) => {
                    lower_components - 1
                }
                (Some(CriticalType::Saddle { upper_components, .. }), _) => upper_components - 1,
                _ => 0,
            };
            if n > allowed {
                return Some(format!("{class}: saddle {sad:?} closes {n} pairs, allows {allowed}"));
            }
        }
    }
    d.pairs
        .iter()
        .find(|p| p.persistence() < 0.0)
        .map(|p| format!("negative persistence {p:?}"))
}

/// A 2D or 3D seeded random field; `levels` > 0 quantizes values into that
/// many integers to force ties.
pub fn random_field(verts: [usize; 3], seed: u64, levels: u32) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ScalarField::from_fn(verts, |_| {
        if levels > 0 {
            rng.gen_range(0..levels) as f64
        } else {
            rng.gen()
        }
    })
    .unwrap()
}

/// The shared seeded corpus: grid vertex counts, seed and tie level.
pub fn corpus() -> Vec<([usize; 3], u64, u32)> {
    vec![
        ([3, 3, 3], 1, 0),
        ([4, 4, 4], 2, 3),
        ([5, 5, 5], 3, 0),
        ([6, 7, 5], 4, 0),
        ([8, 8, 8], 5, 4),
        ([9, 9, 9], 6, 0),
        ([9, 6, 4], 7, 2),
        ([10, 11, 12], 8, 0),
        ([12, 12, 12], 9, 0),
        ([13, 9, 17], 10, 5),
        ([16, 16, 16], 11, 0),
        ([17, 17, 17], 12, 0),
        ([17, 17, 17], 13, 6),
        ([5, 5, 1], 14, 0),
        ([6, 9, 1], 15, 2),
        ([9, 9, 1], 16, 0),
        ([12, 17, 1], 17, 0),
        ([17, 17, 1], 18, 3),
        ([20, 25, 1], 19, 0),
        ([31, 22, 1], 20, 0),
        ([33, 33, 1], 21, 0),
        ([33, 33, 1], 22, 8),
    ]
}

pub fn hierarchy_for(f: &ScalarField) -> Hierarchy {
    Hierarchy::build(f.cells(), f.dimension(), None).unwrap()
}

/// Minimum over every partial matching between `d1` and `d2` of
/// `sum d_q^q`, unmatched points paying their distance to the diagonal.
pub fn brute_force_wasserstein_cost(d1: &[DiagramPoint], d2: &[DiagramPoint], q: f64) -> f64 {
    fn dq(a: DiagramPoint, b: DiagramPoint, q: f64) -> f64 {
        if a.x == a.y && b.x == b.y {
            0.0
        } else {
            (a.x - b.x).abs().powf(q) + (a.y - b.y).abs().powf(q)
        }
    }
    fn diag(a: DiagramPoint, q: f64) -> f64 {
        let m = 0.5 * (a.x + a.y);
        dq(a, DiagramPoint::new(m, m), q)
    }
    fn rec(i: usize, d1: &[DiagramPoint], d2: &[DiagramPoint], used: &mut [bool], q: f64) -> f64 {
        if i == d1.len() {
            return d2
                .iter()
                .zip(used.iter())
                .filter(|(_, u)| !**u)
                .map(|(b, _)| diag(*b, q))
                .sum();
        }
        let mut best = diag(d1[i], q) + rec(i + 1, d1, d2, used, q);
        for j in 0..d2.len() {
            if !used[j] {
                used[j] = true;
                best = best.min(dq(d1[i], d2[j], q) + rec(i + 1, d1, d2, used, q));
                used[j] = false;
            }
        }
        best
    }
    rec(0, d1, d2, &mut vec![false; d2.len()], q)
}

pub fn random_points(rng: &mut ChaCha8Rng, max: usize) -> Vec<DiagramPoint> {
    let n = rng.gen_range(0..=max);
    (0..n)
        .map(|_| {
            let x: f64 = rng.gen_range(0.0..1.0);
            DiagramPoint::new(x, x + rng.gen_range(0.0..1.0))
        })
        .collect()
}
