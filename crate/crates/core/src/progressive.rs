//! Coarse-to-fine driver with level-granular interruption.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::critical::{LevelStats, ProgressiveState};
use crate::error::Result;
use crate::field::ScalarField;
use crate::hierarchy::Hierarchy;
use crate::persistence::{compute_diagram, PairSelection, PersistenceDiagram};

/// When to stop refining. Every check happens between levels: a level that
/// has started always completes and is emitted.
#[derive(Clone, Debug, Default)]
pub struct Budget {
    /// Wall-clock budget measured from the start of the run.
    pub time: Option<Duration>,
    /// Last level to compute.
    pub max_level: Option<usize>,
    /// External stop request (e.g. Ctrl-C).
    pub interrupt: Option<Arc<AtomicBool>>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Self::default()
    }

    pub fn time(d: Duration) -> Self {
        Budget {
            time: Some(d),
            ..Self::default()
        }
    }

    pub fn levels(max_level: usize) -> Self {
        Budget {
            max_level: Some(max_level),
            ..Self::default()
        }
    }

    fn exhausted(&self, next_level: usize, start: Instant) -> Option<StopReason> {
        if self.max_level.is_some_and(|m| next_level > m) {
            return Some(StopReason::LevelCap);
        }
        if self
            .interrupt
            .as_ref()
            .is_some_and(|f| f.load(Ordering::SeqCst))
        {
            return Some(StopReason::Interrupted);
        }
        if self.time.is_some_and(|t| start.elapsed() >= t) {
            return Some(StopReason::TimeBudget);
        }
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Completed,
    TimeBudget,
    LevelCap,
    Interrupted,
}

/// What the sink receives after each level.
pub struct LevelOutput<'a> {
    pub level: usize,
    pub state: &'a ProgressiveState,
    /// `None` when the run only classifies critical points.
    pub diagram: Option<&'a PersistenceDiagram>,
    /// Time since the start of the run, including this level.
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub last_level: usize,
    pub finest_level: usize,
    pub stop: StopReason,
    pub stats: Vec<LevelStats>,
    pub elapsed: Duration,
}

impl RunSummary {
    pub fn is_complete(&self) -> bool {
        self.last_level == self.finest_level
    }
}

/// Runs the hierarchy from level 0 upwards, handing every completed level to
/// `sink`. With `selection = None` only critical points are computed.
pub fn run_progressive<F>(
    hierarchy: &Hierarchy,
    field: &ScalarField,
    selection: Option<PairSelection>,
    budget: &Budget,
    mut sink: F,
) -> Result<RunSummary>
where
    F: FnMut(LevelOutput<'_>) -> Result<()>,
{
    let start = Instant::now();
    let mut stats = Vec::with_capacity(hierarchy.level_count());
    let mut state = ProgressiveState::initialize_level0(hierarchy, field)?;
    let mut stop = StopReason::Completed;
    loop {
        let diagram = match selection {
            Some(sel) => Some(compute_diagram(&state, hierarchy, sel)?),
            None => None,
        };
        stats.push(*state.stats());
        sink(LevelOutput {
            level: state.level(),
            state: &state,
            diagram: diagram.as_ref(),
            elapsed: start.elapsed(),
        })?;
        if state.level() == hierarchy.finest() {
            break;
        }
        if let Some(reason) = budget.exhausted(state.level() + 1, start) {
            stop = reason;
            break;
        }
        state = state.advance_level(hierarchy, field)?;
    }
    Ok(RunSummary {
        last_level: state.level(),
        finest_level: hierarchy.finest(),
        stop,
        stats,
        elapsed: start.elapsed(),
    })
}

/// Classification and diagram of the finest level only, computed directly.
pub fn run_nonprogressive(
    hierarchy: &Hierarchy,
    field: &ScalarField,
    selection: Option<PairSelection>,
) -> Result<(ProgressiveState, Option<PersistenceDiagram>)> {
    let state = ProgressiveState::from_scratch(hierarchy, field, hierarchy.finest())?;
    let diagram = match selection {
        Some(sel) => Some(compute_diagram(&state, hierarchy, sel)?),
        None => None,
    };
    Ok((state, diagram))
}
