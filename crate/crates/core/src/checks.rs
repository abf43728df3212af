//! Randomized property suites behind `swarmlink check`.
//!
//! Every suite is a pure function of `(cases, seed)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{step, Init, WorldConfig};
use crate::geom2d::{clamp_along_segment, distance, Disc, Point2, LENGTH_TOL};
use crate::graph::{
    effective_graph, graph_metrics, is_connected, local_effective_neighbors, visibility_graph,
};
use crate::motion::BehaviorKind;

/// Outcome of one suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
}

impl SuiteResult {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            failures: 0,
            first_failure: None,
        }
    }

    fn record(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(detail());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// `n` uniform points in a square of side `V * sqrt(n) * density`, redrawn
/// until the visibility graph is connected.
pub fn random_connected_positions(rng: &mut impl Rng, n: usize, v: f64) -> Vec<Point2> {
    loop {
        let density = rng.gen_range(0.3..0.7);
        let side = v * (n as f64).sqrt() * density;
        let pos: Vec<Point2> = (0..n)
            .map(|_| Point2::new(rng.gen_range(0.0..side), rng.gen_range(0.0..side)))
            .collect();
        if is_connected(&visibility_graph(&pos, v)) {
            return pos;
        }
    }
}

fn config_rng(seed: u64, suite: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ suite.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Connected visibility graph implies connected effective graph (m = 0).
pub fn trimmed_connectivity(cases: usize, seed: u64) -> SuiteResult {
    let mut res = SuiteResult::new("trimmed-connectivity");
    let mut rng = config_rng(seed, 1);
    for _ in 0..cases {
        let n = rng.gen_range(3..=60);
        let pos = random_connected_positions(&mut rng, n, 1.0);
        let g = visibility_graph(&pos, 1.0);
        let ge = effective_graph(&g, &pos, 0);
        res.record(is_connected(&ge), || format!("disconnected effective graph, n={n}: {pos:?}"));
    }
    res
}

/// Each agent's locally computed effective neighbourhood agrees with its
/// neighbours' decisions and with the global construction.
pub fn trimming_symmetry(cases: usize, seed: u64) -> SuiteResult {
    let mut res = SuiteResult::new("trimming-symmetry");
    let mut rng = config_rng(seed, 2);
    for _ in 0..cases {
        let n = rng.gen_range(3..=40);
        let m = rng.gen_range(0..=2);
        let pos = random_connected_positions(&mut rng, n, 1.0);
        let ge = effective_graph(&visibility_graph(&pos, 1.0), &pos, m);
        let local: Vec<Vec<usize>> = (0..n)
            .map(|i| local_effective_neighbors(i, &pos, 1.0, m))
            .collect();
        let mut ok = true;
        for i in 0..n {
            ok &= local[i] == ge.neighbors(i);
            ok &= local[i].iter().all(|&j| local[j].contains(&i));
        }
        res.record(ok, || format!("asymmetric trimming, n={n}, m={m}: {pos:?}"));
    }
    res
}

/// `E(m=0) ⊆ E(m=1) ⊆ E(m=2) ⊆ E`.
pub fn plus_nesting(cases: usize, seed: u64) -> SuiteResult {
    let mut res = SuiteResult::new("rng-plus-nesting");
    let mut rng = config_rng(seed, 3);
    for _ in 0..cases {
        let n = rng.gen_range(3..=60);
        let pos = random_connected_positions(&mut rng, n, 1.0);
        let g = visibility_graph(&pos, 1.0);
        let e0 = effective_graph(&g, &pos, 0);
        let e1 = effective_graph(&g, &pos, 1);
        let e2 = effective_graph(&g, &pos, 2);
        let ok = e0.is_subgraph_of(&e1) && e1.is_subgraph_of(&e2) && e2.is_subgraph_of(&g);
        res.record(ok, || format!("nesting broken, n={n}: {pos:?}"));
    }
    res
}

/// `|E^e| <= 3n - 6` and `E^e ⊆ E` for m = 0.
pub fn edge_bound(cases: usize, seed: u64) -> SuiteResult {
    let mut res = SuiteResult::new("edge-bound-3n-6");
    let mut rng = config_rng(seed, 4);
    for _ in 0..cases {
        let n = rng.gen_range(3..=60);
        let pos = random_connected_positions(&mut rng, n, 1.0);
        let g = visibility_graph(&pos, 1.0);
        let ge = effective_graph(&g, &pos, 0);
        let ok = ge.edge_count() <= 3 * n - 6 && ge.is_subgraph_of(&g);
        res.record(ok, || {
            format!("n={n}: {} effective edges, bound {}", ge.edge_count(), 3 * n - 6)
        });
    }
    res
}

/// One synchronous round never brings two agents closer than `sep`.
pub fn separation_round(cases: usize, seed: u64) -> SuiteResult {
    let mut res = SuiteResult::new("separation-floor");
    let mut rng = config_rng(seed, 5);
    let kinds = [BehaviorKind::Gather, BehaviorKind::Formation, BehaviorKind::LeaderFollow];
    for case in 0..cases {
        let n = rng.gen_range(2..=30);
        let kind = kinds[case % kinds.len()];
        let side = (n as f64).sqrt() * rng.gen_range(0.2..0.6);
        let mut world = WorldConfig::new(
            n,
            1.0,
            kind,
            Init::Box {
                min: Point2::ORIGIN,
                max: Point2::new(side, side),
            },
        );
        world.seed = rng.gen();
        world.m = rng.gen_range(0..=1);
        world.behavior.leader_index = rng.gen_range(0..n);
        world.behavior.waypoints = vec![Point2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0))];
        let outcome = world
            .initial_state()
            .map_err(|e| e.to_string())
            .and_then(|s| step(&s, &world).map_err(|e| e.to_string()));
        match outcome {
            Ok((next, report)) => {
                let min = report.metrics.min_pair_distance;
                res.record(n < 2 || min >= world.sep - LENGTH_TOL, || {
                    format!("min distance {min} < sep {}: {:?}", world.sep, next.positions)
                });
            }
            Err(e) => res.record(false, || e),
        }
    }
    res
}

/// Largest feasible fraction along `current -> target` found by bisection on
/// direct disc membership. Independent of the closed-form clamp.
pub fn bisect_clamp_fraction(current: Point2, target: Point2, discs: &[Disc]) -> f64 {
    let inside = |s: f64| {
        let q = current.lerp(target, s);
        discs.iter().all(|d| distance(q, d.center) <= d.radius)
    };
    if inside(1.0) {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Random clamp instance: 0-6 discs that all contain `current`.
pub fn random_clamp_instance(rng: &mut impl Rng) -> (Point2, Point2, Vec<Disc>) {
    let current = Point2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    let k = rng.gen_range(0..=6);
    let discs = (0..k)
        .map(|_| {
            let r = rng.gen_range(0.05..1.5);
            // sometimes put `current` exactly on the rim
            let off = if rng.gen_bool(0.2) { r } else { rng.gen_range(0.0..r) };
            let ang: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            Disc::new(current + Point2::new(ang.cos(), ang.sin()) * off, r)
        })
        .filter(|d| d.contains(current, 0.0))
        .collect();
    let target = current + Point2::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
    (current, target, discs)
}

/// Closed-form clamp agrees with bisection to 1e-7 in `s` and returns points
/// feasible to 1e-9.
pub fn clamp_oracle(cases: usize, seed: u64) -> SuiteResult {
    let mut res = SuiteResult::new("clamp-oracle");
    let mut rng = config_rng(seed, 6);
    for _ in 0..cases {
        let (current, target, discs) = random_clamp_instance(&mut rng);
        let detail = || format!("current={current} target={target} discs={discs:?}");
        let q = match clamp_along_segment(current, target, &discs) {
            Ok(q) => q,
            Err(e) => {
                res.record(false, || format!("{e}: {}", detail()));
                continue;
            }
        };
        let s = distance(current, q) / distance(current, target);
        let s_ref = bisect_clamp_fraction(current, target, &discs);
        let feasible = discs.iter().all(|d| d.contains(q, LENGTH_TOL));
        res.record((s - s_ref).abs() <= 1e-7 && feasible, || {
            format!("s={s} oracle={s_ref} feasible={feasible}: {}", detail())
        });
    }
    res
}

/// Dense `n = 20` configurations: ratio of effective to visibility edges.
pub fn reduction_ratios(configs: usize, seed: u64) -> Vec<f64> {
    let mut rng = config_rng(seed, 7);
    let mut out = Vec::with_capacity(configs);
    while out.len() < configs {
        let pos = random_connected_positions(&mut rng, 20, 1.0);
        let g = visibility_graph(&pos, 1.0);
        if g.edge_count() < 40 {
            continue;
        }
        let ge = effective_graph(&g, &pos, 0);
        let m = graph_metrics(&g, &ge, &pos);
        out.push(m.effective_edge_count as f64 / m.edge_count as f64);
    }
    out
}

/// All suites run by `swarmlink check`.
pub fn run_all(cases: usize, seed: u64) -> Vec<SuiteResult> {
    vec![
        trimmed_connectivity(cases, seed),
        trimming_symmetry(cases, seed),
        plus_nesting(cases, seed),
        edge_bound(cases, seed),
        separation_round(cases, seed),
        clamp_oracle(cases, seed),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_small() {
        for r in run_all(50, 3) {
            assert!(r.passed(), "{}: {:?}", r.name, r.first_failure);
            assert_eq!(r.cases, 50);
        }
    }

    #[test]
    fn suites_are_deterministic() {
        assert_eq!(run_all(20, 9), run_all(20, 9));
    }

    #[test]
    fn bisection_oracle_known_value() {
        let s = bisect_clamp_fraction(
            Point2::ORIGIN,
            Point2::new(3.0, 0.0),
            &[Disc::new(Point2::new(0.5, 0.0), 1.0)],
        );
        assert!((s - 0.5).abs() < 1e-12);
    }
}
