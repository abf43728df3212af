//! Connectivity-preserving swarm simulation on a trimmed visibility graph.
//!
//! Agents see each other within a range `V`. Each round the visibility graph
//! is trimmed to its relative neighbourhood graph (optionally relaxed to
//! allow up to `m` agents in an edge's lune), and every agent moves only
//! within the intersection of the pair discs it shares with its remaining
//! neighbours. The trimmed graph stays connected, so the swarm does too,
//! while carrying only O(n) constraints.

pub mod checks;
pub mod engine;
pub mod geom2d;
pub mod graph;
pub mod motion;
pub mod output;
pub mod scenario;

pub use engine::{run, step, Init, RoundReport, Simulation, SwarmState, WorldConfig};
pub use geom2d::{Disc, Point2, Polygon, Segment};
pub use graph::{effective_graph, is_connected, visibility_graph, Graph, GraphMetrics};
pub use motion::{BehaviorKind, BehaviorSpec};
