//! Allowable regions, behaviour targets, and the per-agent motion law.
//!
//! Every step of agent `i` ends inside the intersection of the pair discs
//! `D(V/2, (p_i + p_j) / 2)` over its effective neighbours `j`. Two agents
//! that both stay in their shared disc end at most `V` apart, so every
//! effective edge survives the round.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{SwarmState, WorldConfig};
use crate::geom2d::{
    clamp_along_segment, distance, segment_intersects_polygon, Disc, GeomError, Point2, Polygon,
    Segment, LENGTH_TOL,
};
use crate::graph::Graph;

/// Inward shrink applied to allowable discs before clamping, so rounding in
/// the clamp can never push a pair past `V`.
pub const DISC_MARGIN: f64 = 1e-10;

/// Bisection depth for the obstacle and line-of-sight search.
pub const FEASIBILITY_BISECTIONS: usize = 40;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MotionError {
    #[error("agents {i} and {j} are {distance} apart, beyond visibility range {range}")]
    OutOfRange {
        i: usize,
        j: usize,
        distance: f64,
        range: f64,
    },
    #[error("agent {agent}: {source}")]
    Geometry {
        agent: usize,
        #[source]
        source: GeomError,
    },
}

/// Pair disc shared by agents at `p_i` and `p_j`.
pub fn allowable_disc(p_i: Point2, p_j: Point2, v: f64) -> Result<Disc, MotionError> {
    let d = distance(p_i, p_j);
    if d > v + LENGTH_TOL {
        return Err(MotionError::OutOfRange {
            i: 0,
            j: 1,
            distance: d,
            range: v,
        });
    }
    Ok(Disc::new(p_i.midpoint(p_j), 0.5 * v))
}

/// Constraint discs confining one agent's next position.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AllowableRegion {
    pub discs: Vec<Disc>,
}

impl AllowableRegion {
    /// An empty region places no restriction.
    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        self.discs.iter().all(|d| d.contains(p, tol))
    }

    fn shrunk(&self, margin: f64) -> Vec<Disc> {
        self.discs
            .iter()
            .map(|d| Disc::new(d.center, (d.radius - margin).max(0.0)))
            .collect()
    }
}

/// Intersection of pair discs over the neighbours of `i` in `graph`.
///
/// With the effective graph this is the region the motion law uses; with
/// the full visibility graph it is the stricter all-neighbour region.
pub fn effective_allowable_region(
    i: usize,
    positions: &[Point2],
    graph: &Graph,
    v: f64,
) -> Result<AllowableRegion, MotionError> {
    let discs = graph
        .neighbors(i)
        .iter()
        .map(|&j| {
            allowable_disc(positions[i], positions[j], v).map_err(|e| match e {
                MotionError::OutOfRange {
                    distance, range, ..
                } => MotionError::OutOfRange {
                    i,
                    j,
                    distance,
                    range,
                },
                other => other,
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(AllowableRegion { discs })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BehaviorKind {
    Gather,
    Formation,
    LeaderFollow,
    Idle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorSpec {
    pub kind: BehaviorKind,
    pub desired_spacing: f64,
    pub spring_gain: f64,
    pub leader_index: usize,
    pub waypoints: Vec<Point2>,
    pub waypoint_tolerance: f64,
    pub max_step: f64,
}

impl BehaviorSpec {
    /// Defaults scaled to the visibility range `v`.
    pub fn with_defaults(kind: BehaviorKind, v: f64) -> Self {
        Self {
            kind,
            desired_spacing: 0.1 * v,
            spring_gain: 0.5,
            leader_index: 0,
            waypoints: Vec::new(),
            waypoint_tolerance: 0.05 * v,
            max_step: 0.2 * v,
        }
    }

    pub fn leader(&self) -> Option<usize> {
        (self.kind == BehaviorKind::LeaderFollow).then_some(self.leader_index)
    }
}

fn centroid_of_neighbors(i: usize, positions: &[Point2], ge: &Graph) -> Point2 {
    let nb = ge.neighbors(i);
    if nb.is_empty() {
        return positions[i];
    }
    let sum = nb
        .iter()
        .fold(Point2::ORIGIN, |acc, &j| acc + positions[j]);
    sum * (1.0 / nb.len() as f64)
}

/// Where agent `i` would like to go this round, at most `max_step` away.
pub fn desired_target(i: usize, state: &SwarmState, ge: &Graph, spec: &BehaviorSpec) -> Point2 {
    let positions = &state.positions;
    let here = positions[i];
    let raw = match spec.kind {
        BehaviorKind::Idle => here,
        BehaviorKind::Gather => centroid_of_neighbors(i, positions, ge),
        BehaviorKind::Formation => {
            let mut pull = Point2::ORIGIN;
            for &j in ge.neighbors(i) {
                let delta = positions[j] - here;
                if let Some(dir) = delta.normalized() {
                    pull += dir * (delta.norm() - spec.desired_spacing);
                }
            }
            here + pull * spec.spring_gain
        }
        BehaviorKind::LeaderFollow if i == spec.leader_index => spec
            .waypoints
            .get(state.waypoint_index)
            .copied()
            .unwrap_or(here),
        BehaviorKind::LeaderFollow => centroid_of_neighbors(i, positions, ge),
    };
    here + (raw - here).capped(spec.max_step)
}

/// Skips every waypoint the leader is already within tolerance of.
pub fn advance_waypoint(state: &mut SwarmState, spec: &BehaviorSpec) {
    let Some(leader) = spec.leader() else {
        return;
    };
    while let Some(&wp) = spec.waypoints.get(state.waypoint_index) {
        if distance(state.positions[leader], wp) <= spec.waypoint_tolerance {
            state.waypoint_index += 1;
        } else {
            break;
        }
    }
}

/// Displacement budget that keeps agent `i` at least `sep` from everyone
/// even when all agents move at once.
///
/// Each visible pair gets half of its slack `d - sep`. Pairs beyond `v`
/// are covered by `max_step` as long as `2 * max_step <= v - sep`.
pub fn separation_cap(i: usize, positions: &[Point2], v: f64, sep: f64, max_step: f64) -> f64 {
    if sep <= 0.0 {
        return max_step;
    }
    let here = positions[i];
    let mut cap = max_step;
    for (j, &other) in positions.iter().enumerate() {
        if j == i {
            continue;
        }
        let d = distance(here, other);
        if d > v {
            continue;
        }
        if d < sep - LENGTH_TOL {
            log::warn!("agents {i} and {j} already closer ({d}) than separation {sep}");
        }
        cap = cap.min((0.5 * (d - sep)).max(0.0));
    }
    cap
}

/// Largest `s` in `[0, 1]` such that moving by `s * step` closes the gap to
/// each visible agent `j` by at most half the slack `d_ij - sep`.
///
/// Only the approach component counts, so agents resting at exactly `sep`
/// can still slide or back off. If `j` obeys the same bound,
/// `d' >= d - (d - sep) = sep` whatever both do sideways. A displacement
/// within [`separation_cap`] always passes.
pub fn separation_fraction(i: usize, positions: &[Point2], v: f64, sep: f64, step: Point2) -> f64 {
    if sep <= 0.0 {
        return 1.0;
    }
    let here = positions[i];
    let mut s = 1.0_f64;
    for (j, &other) in positions.iter().enumerate() {
        if j == i {
            continue;
        }
        let away = here - other;
        let d = away.norm();
        if d > v {
            continue;
        }
        let Some(u) = away.normalized() else {
            return 0.0;
        };
        let approach = -step.dot(u);
        if approach > 0.0 {
            s = s.min((0.5 * (d - sep)).max(0.0) / approach);
        }
    }
    s.clamp(0.0, 1.0)
}

/// Passes of cyclic projection in [`separation_slide`].
const SLIDE_PASSES: usize = 4;

/// Removes from `step` the part that would close a gap faster than
/// [`separation_fraction`] allows, by projecting onto each violated
/// half-plane in turn. The result is never longer than `step`; it may still
/// violate a constraint slightly, so callers scale it afterwards.
pub fn separation_slide(i: usize, positions: &[Point2], v: f64, sep: f64, step: Point2) -> Point2 {
    if sep <= 0.0 {
        return step;
    }
    let here = positions[i];
    let limits: Vec<(Point2, f64)> = positions
        .iter()
        .enumerate()
        .filter(|&(j, &other)| j != i && distance(here, other) <= v)
        .filter_map(|(_, &other)| {
            let away = here - other;
            let slack = (0.5 * (away.norm() - sep)).max(0.0);
            away.normalized().map(|u| (u, slack))
        })
        .collect();
    let mut out = step;
    for _ in 0..SLIDE_PASSES {
        let mut moved = false;
        for &(u, slack) in &limits {
            // require out . u >= -slack
            let excess = -slack - out.dot(u);
            if excess > 0.0 {
                out += u * excess;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    out
}

fn path_clear(from: Point2, to: Point2, obstacles: &[Polygon]) -> bool {
    let seg = Segment::new(from, to);
    obstacles.iter().all(|o| !segment_intersects_polygon(&seg, o))
}

/// Turning angles tried, in order, when an obstacle cuts the straight step.
const DETOUR_ANGLES_DEG: [f64; 12] = [
    15.0, -15.0, 30.0, -30.0, 45.0, -45.0, 60.0, -60.0, 75.0, -75.0, 90.0, -90.0,
];

fn rotate(v: Point2, deg: f64) -> Point2 {
    let (s, c) = deg.to_radians().sin_cos();
    Point2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

/// Round-`t` data shared by every candidate step of one agent.
struct StepContext<'a> {
    i: usize,
    here: Point2,
    positions: &'a [Point2],
    world: &'a WorldConfig,
    discs: Vec<Disc>,
    /// Effective neighbours currently in sight.
    sight: Vec<Point2>,
}

impl StepContext<'_> {
    /// Separation, then the allowable-region clamp.
    fn constrain(&self, step: Point2) -> Result<Point2, MotionError> {
        let w = self.world;
        let cap = separation_cap(self.i, self.positions, w.visibility, w.sep, w.behavior.max_step);
        let step = if step.norm() <= cap {
            step
        } else {
            let slid = separation_slide(self.i, self.positions, w.visibility, w.sep, step);
            slid * separation_fraction(self.i, self.positions, w.visibility, w.sep, slid)
        };
        clamp_along_segment(self.here, self.here + step, &self.discs)
            .map_err(|source| MotionError::Geometry { agent: self.i, source })
    }

    fn feasible(&self, q: Point2) -> bool {
        let obstacles = &self.world.obstacles;
        path_clear(self.here, q, obstacles) && self.sight.iter().all(|&pj| path_clear(q, pj, obstacles))
    }

    /// Farthest obstacle-feasible point on `here -> q`, by bisection.
    /// Returns whether the full segment was feasible.
    fn back_off(&self, q: Point2) -> (Point2, bool) {
        if q == self.here || self.feasible(q) {
            return (q, true);
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..FEASIBILITY_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if self.feasible(self.here.lerp(q, mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (if lo > 0.0 { self.here.lerp(q, lo) } else { self.here }, false)
    }
}

/// Next position proposed by agent `i` from the round-`t` snapshot.
///
/// The behaviour step is shortened (or slid sideways) to respect separation
/// and clamped into the effective allowable region. With obstacles, the
/// result is bisected back along its segment until the path, the end point,
/// and the sight lines to currently visible effective neighbours are all
/// obstacle-free; if that cut the step short, the same pipeline is retried
/// on rotated copies of the step and the candidate making the most progress
/// toward the target wins.
pub fn apply_motion_law(
    i: usize,
    state: &SwarmState,
    ge: &Graph,
    world: &WorldConfig,
) -> Result<Point2, MotionError> {
    let positions = &state.positions;
    let here = positions[i];
    let step = desired_target(i, state, ge, &world.behavior) - here;
    let region = effective_allowable_region(i, positions, ge, world.visibility)?;
    let mut ctx = StepContext {
        i,
        here,
        positions,
        world,
        discs: region.shrunk(DISC_MARGIN),
        sight: Vec::new(),
    };

    let straight = ctx.constrain(step)?;
    if world.obstacles.is_empty() {
        return Ok(straight);
    }
    // Sight lines blocked at time t are not ours to preserve.
    ctx.sight = ge
        .neighbors(i)
        .iter()
        .map(|&j| positions[j])
        .filter(|&pj| path_clear(here, pj, &world.obstacles))
        .collect();
    let (best, unobstructed) = ctx.back_off(straight);
    let Some(dir) = step.normalized() else {
        return Ok(best);
    };
    if unobstructed {
        return Ok(best);
    }
    let progress = |q: Point2| (q - here).dot(dir);
    let mut best = best;
    for deg in DETOUR_ANGLES_DEG {
        let (q, _) = ctx.back_off(ctx.constrain(rotate(step, deg))?);
        if progress(q) > progress(best) + LENGTH_TOL {
            best = q;
        }
    }
    Ok(best)
}
