#![allow(dead_code)]

use swarmlink::geom2d::distance;
use swarmlink::{BehaviorKind, Init, Point2, Polygon, WorldConfig};

pub const CORRIDOR_ENTRY: f64 = 2.0;
pub const CORRIDOR_EXIT: f64 = 3.0;
pub const CORRIDOR_HALF_WIDTH: f64 = 0.175;

/// Pins the sampled start and hands leadership to the agent nearest the
/// first waypoint, so the leader is not buried inside the cluster.
pub fn with_front_leader(mut world: WorldConfig) -> WorldConfig {
    let start = world.initial_state().expect("sampled start");
    let wp = world.behavior.waypoints[0];
    let front = (0..world.n)
        .min_by(|&a, &b| {
            distance(start.positions[a], wp).total_cmp(&distance(start.positions[b], wp))
        })
        .expect("n >= 1");
    world.init = Init::Positions(start.positions);
    world.behavior.leader_index = front;
    world
}

/// n = 15 agents west of a corridor 0.35 V wide, led through it and 2.5 V
/// beyond the exit.
pub fn narrow_passage(seed: u64) -> WorldConfig {
    let mut w = WorldConfig::new(
        15,
        1.0,
        BehaviorKind::LeaderFollow,
        Init::Box {
            min: Point2::new(0.0, -0.8),
            max: Point2::new(1.2, 0.8),
        },
    );
    w.seed = seed;
    w.m = 1;
    w.max_rounds = 5_000;
    w.obstacles = vec![
        Polygon::rectangle(
            Point2::new(CORRIDOR_ENTRY, -3.0),
            Point2::new(CORRIDOR_EXIT, -CORRIDOR_HALF_WIDTH),
        )
        .unwrap(),
        Polygon::rectangle(
            Point2::new(CORRIDOR_ENTRY, CORRIDOR_HALF_WIDTH),
            Point2::new(CORRIDOR_EXIT, 3.0),
        )
        .unwrap(),
    ];
    w.behavior.waypoints = vec![
        Point2::new(CORRIDOR_ENTRY - 0.1, 0.0),
        Point2::new(CORRIDOR_EXIT + 0.1, 0.0),
        Point2::new(CORRIDOR_EXIT + 2.5, 0.0),
    ];
    with_front_leader(w)
}

/// n = 10 agents in a 1.5 V box; the leader walks 15 V east of the box centre.
pub fn leader_stretch(seed: u64) -> WorldConfig {
    let mut w = WorldConfig::new(
        10,
        1.0,
        BehaviorKind::LeaderFollow,
        Init::Box {
            min: Point2::ORIGIN,
            max: Point2::new(1.5, 1.5),
        },
    );
    w.seed = seed;
    w.max_rounds = 3_000;
    w.behavior.waypoints = vec![Point2::new(15.75, 0.75)];
    with_front_leader(w)
}

pub fn formation(seed: u64) -> WorldConfig {
    let mut w = WorldConfig::new(
        20,
        1.0,
        BehaviorKind::Formation,
        Init::Box {
            min: Point2::ORIGIN,
            max: Point2::new(1.0, 1.0),
        },
    );
    w.seed = seed;
    w.m = 1;
    w.max_rounds = 2_000;
    w
}
