//! Distances between persistence diagrams and convergence indicators.

use serde::{Deserialize, Serialize};

use crate::assignment;
use crate::error::{Error, Result};
use crate::persistence::{PairClass, PersistenceDiagram};

/// A diagram point `(birth, death)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagramPoint {
    pub x: f64,
    pub y: f64,
}

impl DiagramPoint {
    pub fn new(x: f64, y: f64) -> Self {
        DiagramPoint { x, y }
    }

    pub fn on_diagonal(&self) -> bool {
        self.x == self.y
    }

    /// Orthogonal projection onto the diagonal.
    pub fn projection(&self) -> DiagramPoint {
        let m = 0.5 * (self.x + self.y);
        DiagramPoint { x: m, y: m }
    }
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("exponent q must be positive and finite, got {q}")))
    }
}

#[inline]
fn dq_pow(a: DiagramPoint, b: DiagramPoint, q: f64) -> f64 {
    if a.on_diagonal() && b.on_diagonal() {
        return 0.0;
    }
    (b.x - a.x).abs().powf(q) + (b.y - a.y).abs().powf(q)
}

/// `d_q(a, b) = (|x_b - x_a|^q + |y_b - y_a|^q)^(1/q)`, zero when both
/// points lie on the diagonal.
pub fn pointwise_distance(a: DiagramPoint, b: DiagramPoint, q: f64) -> Result<f64> {
    check_q(q)?;
    Ok(dq_pow(a, b, q).powf(1.0 / q))
}

/// Optimal `sum d_q^q` over assignments where every point is matched to a
/// point of the other diagram or to its own diagonal projection.
pub fn wasserstein_cost(d1: &[DiagramPoint], d2: &[DiagramPoint], q: f64) -> Result<f64> {
    check_q(q)?;
    // Solve one canonical orientation so that the result is bit-for-bit
    // symmetric in its arguments.
    let key = |d: &[DiagramPoint]| -> Vec<(u64, u64)> {
        d.iter().map(|p| (p.x.to_bits(), p.y.to_bits())).collect()
    };
    let (d1, d2) = if (d1.len(), key(d1)) <= (d2.len(), key(d2)) {
        (d1, d2)
    } else {
        (d2, d1)
    };
    let (n, m) = (d1.len(), d2.len());
    let size = n + m;
    if size == 0 {
        return Ok(0.0);
    }
    let diag1: Vec<f64> = d1.iter().map(|a| dq_pow(*a, a.projection(), q)).collect();
    let diag2: Vec<f64> = d2.iter().map(|b| dq_pow(b.projection(), *b, q)).collect();
    let mut finite_sum: f64 = diag1.iter().chain(&diag2).sum();
    let mut cost = vec![0.0f64; size * size];
    for (i, a) in d1.iter().enumerate() {
        for (j, b) in d2.iter().enumerate() {
            let c = dq_pow(*a, *b, q);
            cost[i * size + j] = c;
            finite_sum += c;
        }
    }
    // Forbidden entries (a point matched to another point's projection).
    let big = 2.0 * finite_sum + 1.0;
    for i in 0..n {
        for k in 0..n {
            cost[i * size + m + k] = if k == i { diag1[i] } else { big };
        }
    }
    for k in 0..m {
        for j in 0..m {
            cost[(n + k) * size + j] = if k == j { diag2[j] } else { big };
        }
    }
    let (_, total) = assignment::solve(&cost, size);
    Ok(total)
}

/// `W_q(D1, D2)`.
pub fn wasserstein(d1: &[DiagramPoint], d2: &[DiagramPoint], q: f64) -> Result<f64> {
    Ok(wasserstein_cost(d1, d2, q)?.powf(1.0 / q))
}

pub fn points(diagram: &PersistenceDiagram, class: PairClass) -> Vec<DiagramPoint> {
    diagram
        .of_class(class)
        .map(|p| DiagramPoint::new(p.birth, p.death))
        .collect()
}

const CLASSES: [PairClass; 3] = [PairClass::MinSaddle, PairClass::SaddleMax, PairClass::Global];

/// `W_q` between two diagrams, matching each pair class separately and
/// combining the per-class costs.
pub fn diagram_distance(a: &PersistenceDiagram, b: &PersistenceDiagram, q: f64) -> Result<f64> {
    let mut total = 0.0;
    for class in CLASSES {
        total += wasserstein_cost(&points(a, class), &points(b, class), q)?;
    }
    Ok(total.powf(1.0 / q))
}

/// `W_2(D_final, D_level) / W_2(D_final, empty)`: 1 for an empty estimate,
/// 0 once the estimate equals the final diagram.
pub fn normalized_distance(final_: &PersistenceDiagram, level: &PersistenceDiagram) -> Result<f64> {
    if final_.is_empty() {
        return Err(Error::invalid("normalized distance needs a non-empty final diagram"));
    }
    let norm = diagram_distance(final_, &PersistenceDiagram::default(), 2.0)?;
    if norm == 0.0 {
        return Err(Error::invalid(
            "normalized distance is undefined: final diagram lies on the diagonal",
        ));
    }
    Ok(diagram_distance(final_, level, 2.0)? / norm)
}

/// Default relative-persistence threshold for significant pairs.
pub const SIGNIFICANT_THRESHOLD: f64 = 0.1;

/// How well an intermediate diagram captures the significant pairs of the
/// final one. The global pair is not counted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignificantPairs {
    /// Significant pairs in the final diagram.
    pub final_count: usize,
    /// Significant pairs among the `final_count` most persistent pairs of
    /// the intermediate diagram.
    pub level_count: usize,
    /// `level_count / final_count`; `None` when `final_count == 0`.
    pub ratio: Option<f64>,
    /// Mean persistence of the intermediate significant pairs over that of
    /// the final ones; `None` when either set is empty.
    pub avg_persistence_ratio: Option<f64>,
}

/// `range` is the global value range of the input, which normalizes
/// persistence.
pub fn significant_pair_indicators(
    final_: &PersistenceDiagram,
    level: &PersistenceDiagram,
    range: f64,
    threshold: f64,
) -> SignificantPairs {
    let significant = |d: &PersistenceDiagram| -> Vec<f64> {
        let mut p: Vec<f64> = d
            .pairs
            .iter()
            .filter(|p| p.class != PairClass::Global)
            .map(|p| p.persistence())
            .collect();
        p.sort_by(|a, b| b.total_cmp(a));
        p
    };
    let is_sig = |p: f64| range > 0.0 && p / range > threshold;

    let fin: Vec<f64> = significant(final_).into_iter().filter(|&p| is_sig(p)).collect();
    let n_p = fin.len();
    let lvl: Vec<f64> = significant(level)
        .into_iter()
        .take(n_p)
        .filter(|&p| is_sig(p))
        .collect();
    let n_pi = lvl.len();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    SignificantPairs {
        final_count: n_p,
        level_count: n_pi,
        ratio: (n_p > 0).then(|| n_pi as f64 / n_p as f64),
        avg_persistence_ratio: (n_p > 0 && n_pi > 0).then(|| mean(&lvl) / mean(&fin)),
    }
}

/// One row of a convergence report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub level: usize,
    pub elapsed_ms: f64,
    pub normalized_w2: f64,
    pub sig_ratio: f64,
    /// Reported as 0 when undefined, see `avg_defined`.
    pub avg_persistence_ratio: f64,
    pub avg_defined: bool,
}

/// Rows for a sequence of `(level, elapsed_ms, diagram)` against the last
/// (final) diagram.
pub fn convergence_report(
    diagrams: &[(usize, f64, PersistenceDiagram)],
    range: f64,
) -> Result<Vec<ConvergenceRow>> {
    let Some((_, _, final_)) = diagrams.last() else {
        return Ok(Vec::new());
    };
    diagrams
        .iter()
        .map(|(level, ms, d)| {
            let sig = significant_pair_indicators(final_, d, range, SIGNIFICANT_THRESHOLD);
            Ok(ConvergenceRow {
                level: *level,
                elapsed_ms: *ms,
                normalized_w2: normalized_distance(final_, d)?,
                sig_ratio: sig.ratio.unwrap_or(0.0),
                avg_persistence_ratio: sig.avg_persistence_ratio.unwrap_or(0.0),
                avg_defined: sig.avg_persistence_ratio.is_some(),
            })
        })
        .collect()
}
