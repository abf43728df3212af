use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use swarmlink::checks;
use swarmlink::engine::Simulation;
use swarmlink::graph::{effective_graph, graph_metrics, visibility_graph};
use swarmlink::output::{format_sig9, write_metrics, write_svg_frame};
use swarmlink::scenario::load_scenario;

#[derive(Parser)]
#[command(name = "swarmlink", version, about = "Connectivity-preserving swarm simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario, writing metrics.csv and optional SVG frames.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write a frame every k rounds (round 0 included).
        #[arg(long, value_name = "K")]
        svg_every: Option<usize>,
        /// Replace the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the randomized property suites; exit 0 iff all pass.
    Check {
        #[arg(long, default_value_t = 1000)]
        cases: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Build the visibility and effective graphs of a scenario's initial
    /// positions and print their metrics.
    Graph {
        #[arg(long)]
        scenario: PathBuf,
        /// Also render the two graphs to this SVG file.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

fn run_cmd(scenario: PathBuf, out: PathBuf, svg_every: Option<usize>, seed: Option<u64>) -> Result<bool> {
    let mut world = load_scenario(&scenario)?;
    if let Some(seed) = seed {
        world.seed = seed;
    }
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let mut sim = Simulation::new(world)?;
    let frame = |state: &swarmlink::SwarmState, world: &swarmlink::WorldConfig| -> Result<()> {
        let g = visibility_graph(&state.positions, world.visibility);
        let ge = effective_graph(&g, &state.positions, world.m);
        let path = out.join(format!("frame_{:06}.svg", state.round));
        write_svg_frame(state, world, &ge, &path).with_context(|| format!("writing {}", path.display()))
    };
    if svg_every.is_some_and(|k| k > 0) {
        frame(sim.state(), sim.world())?;
    }
    let world = sim.world().clone();
    let mut frame_err = None;
    let result = sim.run_with(|state, _| {
        if let Some(k) = svg_every.filter(|&k| k > 0) {
            if state.round % k == 0 && frame_err.is_none() {
                frame_err = frame(state, &world).err();
            }
        }
    });
    if let Some(e) = frame_err {
        return Err(e);
    }
    let reports = result?;
    let metrics = out.join("metrics.csv");
    write_metrics(&reports, &metrics).with_context(|| format!("writing {}", metrics.display()))?;
    let connected = reports.iter().all(|r| r.metrics.connected);
    println!(
        "{} rounds, connected throughout: {}, metrics: {}",
        reports.len(),
        connected,
        metrics.display()
    );
    Ok(connected)
}

fn check_cmd(cases: usize, seed: u64) -> bool {
    let mut all = true;
    for r in checks::run_all(cases, seed) {
        let status = if r.passed() { "PASS" } else { "FAIL" };
        println!("{status} {:<22} {} cases, {} failures", r.name, r.cases, r.failures);
        if let Some(f) = &r.first_failure {
            println!("     first failure: {f}");
        }
        all &= r.passed();
    }
    all
}

fn graph_cmd(scenario: PathBuf, svg: Option<PathBuf>) -> Result<bool> {
    let world = load_scenario(&scenario)?;
    let state = world.initial_state()?;
    let g = visibility_graph(&state.positions, world.visibility);
    let ge = effective_graph(&g, &state.positions, world.m);
    let m = graph_metrics(&g, &ge, &state.positions);
    let n = state.positions.len();
    println!("agents               {n}");
    println!("visibility edges     {}", m.edge_count);
    println!("effective edges      {} (m = {})", m.effective_edge_count, world.m);
    if n >= 3 {
        println!("3n - 6 bound         {}", 3 * n - 6);
    }
    println!("max effective degree {}", m.max_effective_degree);
    println!("connected            {}", m.connected);
    match m.graph_diameter_hops {
        Some(d) => println!("diameter (hops)      {d}"),
        None => println!("diameter (hops)      undefined"),
    }
    println!("min pair distance    {}", format_sig9(m.min_pair_distance));
    println!("max pair distance    {}", format_sig9(m.max_pair_distance));
    if let Some(path) = svg {
        write_svg_frame(&state, &world, &ge, &path).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(m.connected)
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            scenario,
            out,
            svg_every,
            seed,
        } => run_cmd(scenario, out, svg_every, seed),
        Command::Check { cases, seed } => Ok(check_cmd(cases, seed)),
        Command::Graph { scenario, svg } => graph_cmd(scenario, svg),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
