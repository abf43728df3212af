//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use swarmlink::checks::{clamp_oracle, plus_nesting, random_connected_positions, reduction_ratios};
use swarmlink::geom2d::distance;
use swarmlink::output::write_metrics;
use swarmlink::{
    effective_graph, is_connected, run, step, visibility_graph, BehaviorKind, Init, Point2,
    Polygon, RoundReport, WorldConfig,
};

use common::{formation, leader_stretch, narrow_passage, CORRIDOR_EXIT};

const SEP_TOL: f64 = 1e-9;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

/// `"; first: ..."` when something went wrong, else nothing.
fn first(bad: &[String]) -> String {
    bad.first().map(|b| format!("; first: {b}")).unwrap_or_default()
}

/// Runs exactly `rounds` rounds, ignoring quiescence.
fn run_rounds(world: &WorldConfig, rounds: usize) -> Result<Vec<RoundReport>, String> {
    let mut state = world.initial_state().map_err(|e| e.to_string())?;
    let mut reports = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let (next, report) = step(&state, world).map_err(|e| e.to_string())?;
        state = next;
        reports.push(report);
    }
    Ok(reports)
}

fn random_rectangle(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Polygon {
    let min = Point2::new(rng.gen_range(lo..hi), rng.gen_range(lo..hi));
    let size = Point2::new(rng.gen_range(0.2..1.0), rng.gen_range(0.2..1.0));
    Polygon::rectangle(min, min + size).expect("positive size")
}

/// Scenario `k` of the random sweep: n in [5, 40], the three behaviours in
/// turn, obstacles in every other scenario, sep = V/10.
fn random_scenario(rng: &mut ChaCha8Rng, k: usize) -> WorldConfig {
    let kinds = [BehaviorKind::Gather, BehaviorKind::Formation, BehaviorKind::LeaderFollow];
    loop {
        let n = rng.gen_range(5..=40);
        let side = (n as f64).sqrt() * rng.gen_range(0.3..0.6);
        let mut w = WorldConfig::new(
            n,
            1.0,
            kinds[k % 3],
            Init::Box {
                min: Point2::ORIGIN,
                max: Point2::new(side, side),
            },
        );
        w.seed = rng.gen();
        w.m = rng.gen_range(0..=2);
        w.max_rounds = 500;
        if (k / 3) % 2 == 1 {
            let count = rng.gen_range(1..=3);
            w.obstacles = (0..count)
                .map(|_| random_rectangle(rng, -1.0, side + 1.0))
                .collect();
        }
        w.behavior.leader_index = rng.gen_range(0..n);
        w.behavior.waypoints = (0..rng.gen_range(1..=3))
            .map(|_| Point2::new(rng.gen_range(-3.0..side + 3.0), rng.gen_range(-3.0..side + 3.0)))
            .filter(|&p| !w.obstacles.iter().any(|o| o.contains(p)))
            .collect();
        if w.initial_state().is_ok() {
            return w;
        }
    }
}

fn sweep_scenarios() -> Vec<WorldConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..100).map(|k| random_scenario(&mut rng, k)).collect()
}

struct SweepRun {
    label: String,
    sep: f64,
    result: Result<Vec<RoundReport>, String>,
}

fn connectivity_sweep(runs: &[SweepRun]) -> Outcome {
    let mut rounds = 0;
    let mut bad = Vec::new();
    for r in runs.iter().filter(|r| r.label.starts_with("sweep")) {
        match &r.result {
            Ok(reports) => {
                rounds += reports.len();
                if let Some(x) = reports.iter().find(|x| !x.metrics.connected) {
                    bad.push(format!("{} disconnected at round {}", r.label, x.round));
                }
            }
            Err(e) => bad.push(format!("{}: {e}", r.label)),
        }
    }
    outcome(
        bad.is_empty(),
        format!("100 scenarios, {rounds} rounds, {} failing{}", bad.len(), first(&bad)),
    )
}

fn trimming_and_edge_bound() -> (Outcome, Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut split_bad, mut bound_bad) = (0, 0);
    let mut worst_slack = i64::MAX;
    for _ in 0..10_000 {
        let n = rng.gen_range(3..=60);
        let pos = random_connected_positions(&mut rng, n, 1.0);
        let g = visibility_graph(&pos, 1.0);
        let ge = effective_graph(&g, &pos, 0);
        split_bad += usize::from(!is_connected(&ge));
        let bound = 3 * n - 6;
        bound_bad += usize::from(ge.edge_count() > bound || !ge.is_subgraph_of(&g));
        worst_slack = worst_slack.min(bound as i64 - ge.edge_count() as i64);
    }
    (
        outcome(split_bad == 0, format!("10000 configurations, {split_bad} disconnected")),
        outcome(
            bound_bad == 0,
            format!("10000 configurations, {bound_bad} violations, tightest slack {worst_slack}"),
        ),
    )
}

fn reduction() -> Outcome {
    let ratios = reduction_ratios(100, 5);
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    outcome(mean <= 0.7, format!("mean |Ee|/|E| = {mean:.4} over 100 configurations (limit 0.7)"))
}

fn nesting() -> Outcome {
    let r = plus_nesting(1_000, 5);
    outcome(r.passed(), format!("{} configurations, {} failures", r.cases, r.failures))
}

fn separation(runs: &[SweepRun]) -> Outcome {
    let mut worst = f64::INFINITY;
    let mut bad = Vec::new();
    let mut rounds = 0;
    for r in runs {
        let Ok(reports) = &r.result else {
            bad.push(format!("{} did not run", r.label));
            continue;
        };
        for x in reports {
            rounds += 1;
            worst = worst.min(x.metrics.min_pair_distance);
            if x.metrics.min_pair_distance < r.sep - SEP_TOL {
                bad.push(format!("{} round {}: {}", r.label, x.round, x.metrics.min_pair_distance));
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{} runs, {rounds} rounds, smallest distance {worst:.9} (floor 0.1), {} violations{}",
            runs.len(),
            bad.len(),
            first(&bad)
        ),
    )
}

/// Geometric diameter at the round the leader completes its path.
fn stretch(runs: &[SweepRun], worlds: &[WorldConfig]) -> Outcome {
    let mut worst = f64::INFINITY;
    let mut bad = Vec::new();
    for (r, w) in runs.iter().filter(|r| r.label.starts_with("stretch")).zip(worlds) {
        let Ok(reports) = &r.result else {
            bad.push(format!("{} did not run", r.label));
            continue;
        };
        let arrival = reports
            .iter()
            .find(|x| x.leader_waypoint_index == Some(w.behavior.waypoints.len()));
        match arrival {
            Some(x) => {
                worst = worst.min(x.metrics.max_pair_distance);
                if x.metrics.max_pair_distance <= 3.0 {
                    bad.push(format!("{}: diameter {}", r.label, x.metrics.max_pair_distance));
                }
            }
            None => bad.push(format!("{}: leader never arrived", r.label)),
        }
        if !reports.iter().all(|x| x.metrics.connected) {
            bad.push(format!("{}: disconnected", r.label));
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{} seeds, smallest diameter at path end {worst:.4} V (limit > 3 V){}",
            worlds.len(),
            first(&bad)
        ),
    )
}

fn passage(runs: &[SweepRun], worlds: &[WorldConfig]) -> Outcome {
    let mut bad = Vec::new();
    let mut slowest = 0;
    for (r, w) in runs.iter().filter(|r| r.label.starts_with("passage")).zip(worlds) {
        let Ok(reports) = &r.result else {
            bad.push(format!("{} did not run", r.label));
            continue;
        };
        slowest = slowest.max(reports.len());
        if !reports.iter().all(|x| x.metrics.connected) {
            bad.push(format!("{}: disconnected", r.label));
        }
        // Replay to the last state; reports carry metrics only.
        let mut state = w.initial_state().expect("valid start");
        for _ in 0..reports.len() {
            state = step(&state, w).expect("replay").0;
        }
        let behind = state.positions.iter().filter(|p| p.x <= CORRIDOR_EXIT).count();
        if behind > 0 {
            bad.push(format!("{}: {behind} agents short of the exit", r.label));
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{} seeds, all within {slowest} rounds (limit 5000){}",
            worlds.len(),
            first(&bad)
        ),
    )
}

fn edge_length_cv(world: &WorldConfig) -> Result<f64, String> {
    let mut state = world.initial_state().map_err(|e| e.to_string())?;
    for _ in 0..2_000 {
        state = step(&state, world).map_err(|e| e.to_string())?.0;
    }
    let g = visibility_graph(&state.positions, world.visibility);
    let ge = effective_graph(&g, &state.positions, world.m);
    let lens: Vec<f64> = ge
        .edges()
        .map(|(i, j)| distance(state.positions[i], state.positions[j]))
        .collect();
    let mean = lens.iter().sum::<f64>() / lens.len() as f64;
    let var = lens.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / lens.len() as f64;
    Ok(var.sqrt() / mean)
}

fn formation_regularity() -> Outcome {
    let cvs: Vec<Result<f64, String>> = (0..10).map(|s| edge_length_cv(&formation(s))).collect();
    let worst = cvs
        .iter()
        .map(|c| c.clone().unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    let errs: Vec<String> = cvs.iter().filter_map(|c| c.clone().err()).collect();
    outcome(
        worst <= 0.25 && errs.is_empty(),
        format!("10 seeds after 2000 rounds, largest edge-length CV {worst:.4} (limit 0.25){}", first(&errs)),
    )
}

fn clamp() -> Outcome {
    let r = clamp_oracle(1_000, 5);
    outcome(
        r.passed(),
        format!(
            "{} instances, {} failures{}",
            r.cases,
            r.failures,
            first(r.first_failure.as_slice())
        ),
    )
}

fn determinism(worlds: &[WorldConfig]) -> Outcome {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut bad = Vec::new();
    for (k, w) in worlds.iter().enumerate() {
        let mut files = Vec::new();
        for pass in 0..2 {
            let path = dir.path().join(format!("{k}_{pass}.csv"));
            let reports = run(w).expect("run");
            write_metrics(&reports, &path).expect("write");
            files.push(fs::read(&path).expect("read"));
        }
        if files[0] != files[1] {
            bad.push(k);
        }
    }
    outcome(
        bad.is_empty(),
        format!("{} scenarios run twice, {} differing files", worlds.len(), bad.len()),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let sweep = sweep_scenarios();
    let stretch_worlds: Vec<WorldConfig> = (0..10).map(leader_stretch).collect();
    let passage_worlds: Vec<WorldConfig> = (0..10).map(narrow_passage).collect();

    let mut jobs: Vec<(String, WorldConfig, Option<usize>)> = Vec::new();
    jobs.extend(sweep.iter().enumerate().map(|(k, w)| (format!("sweep {k}"), w.clone(), Some(500))));
    jobs.extend(stretch_worlds.iter().enumerate().map(|(k, w)| (format!("stretch seed {k}"), w.clone(), None)));
    jobs.extend(passage_worlds.iter().enumerate().map(|(k, w)| (format!("passage seed {k}"), w.clone(), None)));

    let threads = std::thread::available_parallelism().map_or(4, |n| n.get());
    let chunk = jobs.len().div_ceil(threads);
    let runs: Vec<SweepRun> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|(label, w, rounds)| SweepRun {
                            label: label.clone(),
                            sep: w.sep,
                            result: match rounds {
                                Some(r) => run_rounds(w, *r),
                                None => run(w).map_err(|e| e.to_string()),
                            },
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker")).collect()
    });

    let (trimmed, bound) = trimming_and_edge_bound();
    let mut determinism_worlds: Vec<WorldConfig> = sweep.iter().step_by(10).cloned().collect();
    determinism_worlds.push(passage_worlds[0].clone());
    determinism_worlds.push(formation(0));

    let results = [
        ("1 connectivity over random scenarios", connectivity_sweep(&runs)),
        ("2 effective graph connected", trimmed),
        ("3 effective edge bound", bound),
        ("4 edge reduction", reduction()),
        ("5 RNG-Plus nesting", nesting()),
        ("6 separation floor", separation(&runs)),
        ("7 leader stretch", stretch(&runs, &stretch_worlds)),
        ("8 narrow passage", passage(&runs, &passage_worlds)),
        ("9 formation regularity", formation_regularity()),
        ("10 clamp oracle", clamp()),
        ("11 determinism", determinism(&determinism_worlds)),
    ];

    let mut all = true;
    for (name, o) in &results {
        println!("{} criterion {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        all &= o.passed;
    }
    println!("acceptance finished in {:.1}s", start.elapsed().as_secs_f64());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
