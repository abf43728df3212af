//! Synchronous round loop.
//!
//! Each round every agent reads the same round-`t` snapshot, proposes a move,
//! and all moves are committed together. In obstacle worlds the commit first
//! rolls back one moved endpoint of any effective edge whose new sight line
//! is blocked, repeating until nothing changes.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geom2d::{distance, segment_intersects_polygon, Point2, Polygon, Segment};
use crate::graph::{effective_graph, graph_metrics, is_connected, visibility_graph, GraphMetrics};
use crate::motion::{advance_waypoint, apply_motion_law, BehaviorKind, BehaviorSpec, MotionError};

/// Attempts at drawing a connected random start before giving up.
pub const MAX_INIT_ATTEMPTS: usize = 10_000;
/// Per-agent rejection budget inside one init attempt.
const MAX_POINT_TRIES: usize = 1_000;
/// Quiescence: displacement below this fraction of `V`...
pub const QUIESCENT_FRACTION: f64 = 1e-6;
/// ...for this many consecutive rounds.
pub const QUIESCENT_ROUNDS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Positions(Vec<Point2>),
    /// Uniform sampling in `[min.x, max.x] x [min.y, max.y]`.
    Box { min: Point2, max: Point2 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldConfig {
    pub n: usize,
    /// Visibility and communication range `V`.
    pub visibility: f64,
    /// RNG-Plus level: an edge survives while at most `m` agents sit in its lune.
    pub m: usize,
    /// Minimum pairwise distance; 0 disables separation.
    pub sep: f64,
    pub obstacles: Vec<Polygon>,
    pub behavior: BehaviorSpec,
    pub init: Init,
    pub max_rounds: usize,
    pub seed: u64,
}

/// A configuration problem tied to the scenario key that caused it.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{key}: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl WorldConfig {
    /// A config with defaults for everything but the essentials.
    pub fn new(n: usize, visibility: f64, kind: BehaviorKind, init: Init) -> Self {
        Self {
            n,
            visibility,
            m: 0,
            sep: 0.1 * visibility,
            obstacles: Vec::new(),
            behavior: BehaviorSpec::with_defaults(kind, visibility),
            init,
            max_rounds: 1_000,
            seed: 0,
        }
    }

    /// Checks every invariant that does not need a sampled start.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let v = self.visibility;
        if !(v.is_finite() && v > 0.0) {
            return Err(ConfigError::new("V", format!("must be positive and finite, got {v}")));
        }
        if self.n == 0 {
            return Err(ConfigError::new("n", "must be at least 1"));
        }
        if !(self.sep.is_finite() && self.sep >= 0.0) {
            return Err(ConfigError::new("sep", format!("must be >= 0, got {}", self.sep)));
        }
        if self.sep >= v {
            return Err(ConfigError::new(
                "sep",
                format!("must be smaller than V = {v}, got {}", self.sep),
            ));
        }
        let b = &self.behavior;
        if !(b.spring_gain > 0.0 && b.spring_gain <= 1.0) {
            return Err(ConfigError::new(
                "behavior.gain",
                format!("must lie in (0, 1], got {}", b.spring_gain),
            ));
        }
        if !(b.max_step.is_finite() && b.max_step > 0.0) {
            return Err(ConfigError::new(
                "behavior.max_step",
                format!("must be positive, got {}", b.max_step),
            ));
        }
        if self.sep > 0.0 && 2.0 * b.max_step > v - self.sep {
            return Err(ConfigError::new(
                "behavior.max_step",
                format!(
                    "must be at most (V - sep) / 2 = {} so unseen agents cannot collide, got {}",
                    0.5 * (v - self.sep),
                    b.max_step
                ),
            ));
        }
        if !(b.desired_spacing.is_finite() && b.desired_spacing >= self.sep) {
            return Err(ConfigError::new(
                "behavior.spacing",
                format!("must be at least sep = {}, got {}", self.sep, b.desired_spacing),
            ));
        }
        if !(b.waypoint_tolerance.is_finite() && b.waypoint_tolerance >= 0.0) {
            return Err(ConfigError::new(
                "behavior.waypoint_tolerance",
                format!("must be >= 0, got {}", b.waypoint_tolerance),
            ));
        }
        if b.kind == BehaviorKind::LeaderFollow && b.leader_index >= self.n {
            return Err(ConfigError::new(
                "behavior.leader_index",
                format!("must be below n = {}, got {}", self.n, b.leader_index),
            ));
        }
        if b.waypoints.iter().any(|w| !w.is_finite()) {
            return Err(ConfigError::new("behavior.waypoints", "non-finite waypoint"));
        }
        match &self.init {
            Init::Positions(pos) => self.validate_positions(pos, "init.positions")?,
            Init::Box { min, max } => {
                if !(min.is_finite() && max.is_finite() && min.x < max.x && min.y < max.y) {
                    return Err(ConfigError::new(
                        "init.box",
                        "expected [xmin, ymin, xmax, ymax] with xmin < xmax and ymin < ymax",
                    ));
                }
            }
        }
        Ok(())
    }

    fn validate_positions(&self, pos: &[Point2], key: &str) -> Result<(), ConfigError> {
        if pos.len() != self.n {
            return Err(ConfigError::new(
                key,
                format!("expected {} positions, got {}", self.n, pos.len()),
            ));
        }
        if let Some(i) = pos.iter().position(|p| !p.is_finite()) {
            return Err(ConfigError::new(key, format!("position {i} is not finite")));
        }
        for (i, &p) in pos.iter().enumerate() {
            if self.obstacles.iter().any(|o| o.contains(p)) {
                return Err(ConfigError::new(key, format!("position {i} lies in an obstacle")));
            }
        }
        if !is_connected(&visibility_graph(pos, self.visibility)) {
            return Err(ConfigError::new(
                key,
                format!("visibility graph at range {} is disconnected", self.visibility),
            ));
        }
        Ok(())
    }

    /// Round-0 state: explicit positions, or seeded sampling repeated until
    /// the visibility graph is connected.
    pub fn initial_state(&self) -> Result<SwarmState, EngineError> {
        self.validate()?;
        let positions = match &self.init {
            Init::Positions(pos) => pos.clone(),
            Init::Box { min, max } => self.sample_positions(*min, *max)?,
        };
        let mut state = SwarmState {
            round: 0,
            positions,
            waypoint_index: 0,
        };
        advance_waypoint(&mut state, &self.behavior);
        Ok(state)
    }

    fn sample_positions(&self, min: Point2, max: Point2) -> Result<Vec<Point2>, EngineError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        'attempt: for _ in 0..MAX_INIT_ATTEMPTS {
            let mut pos: Vec<Point2> = Vec::with_capacity(self.n);
            for _ in 0..self.n {
                let mut placed = false;
                for _ in 0..MAX_POINT_TRIES {
                    let p = Point2::new(rng.gen_range(min.x..=max.x), rng.gen_range(min.y..=max.y));
                    let clear = !self.obstacles.iter().any(|o| o.contains(p))
                        && pos.iter().all(|&q| distance(p, q) >= self.sep);
                    if clear {
                        pos.push(p);
                        placed = true;
                        break;
                    }
                }
                if !placed {
                    continue 'attempt;
                }
            }
            if is_connected(&visibility_graph(&pos, self.visibility)) {
                return Ok(pos);
            }
        }
        Err(ConfigError::new(
            "init.box",
            format!("no connected configuration after {MAX_INIT_ATTEMPTS} attempts"),
        )
        .into())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub round: usize,
    pub positions: Vec<Point2>,
    /// Next waypoint the leader heads for (leader-follow only).
    pub waypoint_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundReport {
    pub round: usize,
    pub metrics: GraphMetrics,
    /// Agents whose proposal was rolled back during the commit.
    pub reverted_agents: usize,
    pub leader_waypoint_index: Option<usize>,
    pub max_displacement: f64,
}

/// Snapshot attached to a broken runtime invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDump {
    pub round: usize,
    pub positions: Vec<Point2>,
}

impl fmt::Display for StateDump {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "state at round {}:", self.round)?;
        for (i, p) in self.positions.iter().enumerate() {
            writeln!(f, "  {i}: {:.17e} {:.17e}", p.x, p.y)?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Motion(#[from] MotionError),
    #[error("invariant violated after round {}: {what}\n{dump}", dump.round)]
    Invariant { what: String, dump: Box<StateDump> },
}

fn sight_clear(a: Point2, b: Point2, obstacles: &[Polygon]) -> bool {
    let seg = Segment::new(a, b);
    obstacles.iter().all(|o| !segment_intersects_polygon(&seg, o))
}

/// Advances the swarm by one synchronous round.
pub fn step(state: &SwarmState, world: &WorldConfig) -> Result<(SwarmState, RoundReport), EngineError> {
    let n = state.positions.len();
    let v = world.visibility;
    let old = &state.positions;
    let g = visibility_graph(old, v);
    let ge = effective_graph(&g, old, world.m);

    let mut next = (0..n)
        .map(|i| apply_motion_law(i, state, &ge, world))
        .collect::<Result<Vec<_>, _>>()?;

    // Verify/revert to a fixpoint, edges in sorted order. Each pass either
    // reverts at least one moved agent or stops, so there are at most n + 1
    // passes.
    let sight_at_t: Vec<((usize, usize), bool)> = ge
        .edges()
        .map(|(i, j)| {
            let clear = world.obstacles.is_empty() || sight_clear(old[i], old[j], &world.obstacles);
            ((i, j), clear)
        })
        .collect();
    let leader = world.behavior.leader();
    let mut reverted = vec![false; n];
    let mut passes = 0;
    loop {
        passes += 1;
        let mut changed = false;
        for &((i, j), clear_at_t) in &sight_at_t {
            let ok = distance(next[i], next[j]) <= v
                && (!clear_at_t || sight_clear(next[i], next[j], &world.obstacles));
            if ok {
                continue;
            }
            // A proposal was checked against its neighbours' round-t
            // positions, so rolling back one moved endpoint repairs the edge.
            let moved = |k: usize| next[k] != old[k];
            let k = match (moved(i), moved(j)) {
                (true, true) if leader == Some(j) => i,
                (true, true) => j,
                (true, false) => i,
                (false, true) => j,
                (false, false) => {
                    return Err(invariant(state.round, old, &format!("edge ({i}, {j}) invalid at round start")))
                }
            };
            next[k] = old[k];
            reverted[k] = true;
            changed = true;
        }
        if !changed {
            break;
        }
        if passes > n + 1 {
            return Err(invariant(state.round, old, "verify/revert did not reach a fixpoint"));
        }
    }

    let max_displacement = old
        .iter()
        .zip(&next)
        .map(|(&a, &b)| distance(a, b))
        .fold(0.0, f64::max);

    let g_next = visibility_graph(&next, v);
    if let Some((i, j)) = ge.edges().find(|&(i, j)| !g_next.has_edge(i, j)) {
        return Err(invariant(
            state.round + 1,
            &next,
            &format!("effective edge ({i}, {j}) was lost"),
        ));
    }
    if !is_connected(&g_next) {
        return Err(invariant(state.round + 1, &next, "visibility graph disconnected"));
    }

    let ge_next = effective_graph(&g_next, &next, world.m);
    let metrics = graph_metrics(&g_next, &ge_next, &next);
    let mut new_state = SwarmState {
        round: state.round + 1,
        positions: next,
        waypoint_index: state.waypoint_index,
    };
    advance_waypoint(&mut new_state, &world.behavior);
    let report = RoundReport {
        round: new_state.round,
        metrics,
        reverted_agents: reverted.iter().filter(|&&r| r).count(),
        leader_waypoint_index: world.behavior.leader().map(|_| new_state.waypoint_index),
        max_displacement,
    };
    Ok((new_state, report))
}

fn invariant(round: usize, positions: &[Point2], what: &str) -> EngineError {
    EngineError::Invariant {
        what: what.to_string(),
        dump: Box::new(StateDump {
            round,
            positions: positions.to_vec(),
        }),
    }
}

/// One simulation instance: a world plus its evolving state.
#[derive(Debug, Clone)]
pub struct Simulation {
    world: WorldConfig,
    state: SwarmState,
    quiescent_rounds: usize,
}

impl Simulation {
    pub fn new(world: WorldConfig) -> Result<Self, EngineError> {
        let state = world.initial_state()?;
        Ok(Self {
            world,
            state,
            quiescent_rounds: 0,
        })
    }

    pub fn world(&self) -> &WorldConfig {
        &self.world
    }

    pub fn state(&self) -> &SwarmState {
        &self.state
    }

    pub fn step(&mut self) -> Result<RoundReport, EngineError> {
        let (state, report) = step(&self.state, &self.world)?;
        self.state = state;
        if report.max_displacement < QUIESCENT_FRACTION * self.world.visibility {
            self.quiescent_rounds += 1;
        } else {
            self.quiescent_rounds = 0;
        }
        Ok(report)
    }

    /// Leader (if any) has no waypoints left and nothing has moved for a while.
    pub fn is_finished(&self) -> bool {
        let path_done = self.world.behavior.leader().is_none()
            || self.state.waypoint_index >= self.world.behavior.waypoints.len();
        path_done && self.quiescent_rounds >= QUIESCENT_ROUNDS
    }

    /// Steps until `max_rounds` or termination, calling `observe` after each
    /// committed round.
    pub fn run_with(
        &mut self,
        mut observe: impl FnMut(&SwarmState, &RoundReport),
    ) -> Result<Vec<RoundReport>, EngineError> {
        let mut reports = Vec::new();
        while self.state.round < self.world.max_rounds && !self.is_finished() {
            let report = self.step()?;
            observe(&self.state, &report);
            reports.push(report);
        }
        Ok(reports)
    }
}

/// Runs a world from its initial state to termination.
pub fn run(world: &WorldConfig) -> Result<Vec<RoundReport>, EngineError> {
    Simulation::new(world.clone())?.run_with(|_, _| {})
}
