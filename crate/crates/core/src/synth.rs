//! Seeded synthetic fields.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::ScalarField;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Synthetic {
    /// Elevation along x: one minimum, one maximum.
    MinMax,
    /// Uniform noise in `[0, 1)`.
    Random,
    /// Sum of `k` Gaussian bumps.
    Hills { k: usize },
}

impl FromStr for Synthetic {
    type Err = Error;

    /// `minmax`, `random`, `hills` (3 bumps) or `hills:K`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minmax" => Ok(Synthetic::MinMax),
            "random" => Ok(Synthetic::Random),
            "hills" => Ok(Synthetic::Hills { k: 3 }),
            _ => match s.strip_prefix("hills:").map(str::parse::<usize>) {
                Some(Ok(k)) if k > 0 => Ok(Synthetic::Hills { k }),
                _ => Err(Error::invalid(format!(
                    "unknown synthetic field `{s}` (expected minmax, random, hills or hills:K)"
                ))),
            },
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Bump {
    center: [f64; 3],
    amplitude: f64,
    sigma: f64,
}

const MIN_SEPARATION: f64 = 0.35;
const SIGMA_LO: f64 = 0.1;
const SIGMA_HI: f64 = 0.16;

/// Generates a field on a grid of `verts` vertex counts (z = 1 for 2D).
pub fn generate(kind: Synthetic, verts: [usize; 3], seed: u64) -> Result<ScalarField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        Synthetic::MinMax => ScalarField::from_fn(verts, |c| c[0] as f64),
        Synthetic::Random => ScalarField::from_fn(verts, |_| rng.gen::<f64>()),
        Synthetic::Hills { k } => {
            let dim = if verts[2] == 1 { 2 } else { 3 };
            let mut bumps: Vec<Bump> = Vec::with_capacity(k);
            while bumps.len() < k {
                // Keep bumps apart so that each one stays a distinct maximum;
                // give up on spacing after a bounded number of draws.
                let mut center = [0.5; 3];
                for _ in 0..64 {
                    for c in center.iter_mut().take(dim) {
                        *c = rng.gen_range(0.25..0.75);
                    }
                    let apart = bumps.iter().all(|b| {
                        (0..dim).map(|a| (b.center[a] - center[a]).powi(2)).sum::<f64>()
                            >= MIN_SEPARATION * MIN_SEPARATION
                    });
                    if apart {
                        break;
                    }
                }
                bumps.push(Bump {
                    center,
                    amplitude: rng.gen_range(0.6..1.0),
                    sigma: rng.gen_range(SIGMA_LO..SIGMA_HI),
                });
            }
            let norm = |c: usize, n: usize| if n > 1 { c as f64 / (n - 1) as f64 } else { 0.5 };
            ScalarField::from_fn(verts, |c| {
                let p = [norm(c[0], verts[0]), norm(c[1], verts[1]), norm(c[2], verts[2])];
                bumps
                    .iter()
                    .map(|b| {
                        let d2: f64 = (0..dim).map(|a| (p[a] - b.center[a]).powi(2)).sum();
                        b.amplitude * (-d2 / (2.0 * b.sigma * b.sigma)).exp()
                    })
                    .sum()
            })
        }
    }
}
