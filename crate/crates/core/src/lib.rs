//! Progressive topological analysis of scalar fields on regular grids.
//!
//! The input grid is viewed as the finest level of an implicit, edge-nested
//! hierarchy of Kuhn triangulations. Critical points and extremum-saddle
//! persistence diagrams are computed coarse to fine; every level yields an
//! exact result for the field restricted to that level, and work at finer
//! levels is limited to vertices whose neighborhood actually changed.

pub mod assignment;
pub mod critical;
pub mod error;
pub mod field;
pub mod hierarchy;
pub mod io;
pub mod lifetime;
pub mod link;
pub mod metrics;
pub mod persistence;
pub mod progressive;
pub mod synth;

pub use critical::{CriticalPoint, CriticalType, LevelStats, ProgressiveState, VertexTopo};
pub use error::{Error, Result};
pub use field::{LevelField, ScalarField};
pub use hierarchy::{Hierarchy, LevelGrid, LinkPattern, VertexAge, VertexId};
pub use io::{DiagramFormat, Dtype, VolumeHeader};
pub use lifetime::{ExtremumTrack, LifetimeTracker};
pub use link::{LinkGraph, PolarizedLink, Side};
pub use metrics::{ConvergenceRow, DiagramPoint, SignificantPairs};
pub use persistence::{PairClass, PairSelection, PersistenceDiagram, PersistencePair, Triplet};
pub use progressive::{run_nonprogressive, run_progressive, Budget, LevelOutput, RunSummary, StopReason};
pub use synth::Synthetic;
