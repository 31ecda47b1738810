//! Benchmark fixtures shared by the criterion benches.

use ptopo_core::metrics::DiagramPoint;
use ptopo_core::synth::generate;
use ptopo_core::{Hierarchy, ScalarField, Synthetic};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A synthetic field on `cells + 1` vertices per axis and its hierarchy.
pub fn fixture(kind: Synthetic, cells: [usize; 3], seed: u64) -> (ScalarField, Hierarchy) {
    let dimension = if cells[2] == 0 { 2 } else { 3 };
    let verts = [cells[0] + 1, cells[1] + 1, cells[2] + 1];
    let field = generate(kind, verts, seed).expect("valid synthetic field");
    let hierarchy = Hierarchy::build(cells, dimension, None).expect("valid grid");
    (field, hierarchy)
}

/// `n` random off-diagonal points in the unit square.
pub fn random_diagram(n: usize, seed: u64) -> Vec<DiagramPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x: f64 = rng.gen();
            DiagramPoint::new(x, x + rng.gen::<f64>() * (1.0 - x))
        })
        .collect()
}
