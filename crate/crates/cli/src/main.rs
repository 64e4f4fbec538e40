use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dcf::io::{self, ExperimentSource, ExperimentSpec, Fixture};
use dcf::oracle::{self, OracleSolution};
use dcf::sim::{self, SimConfig};
use dcf::solver::{SolveReport, System};
use dcf::{Distribution, Error, Result};

/// Slotted RTS/CTS contention: per-node model, exact joint chain and simulator.
#[derive(Debug, Parser)]
#[command(name = "dcf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the coupled per-node model by damped fixed-point iteration.
    Solve(Common),
    /// Run the slotted simulator and report state occupancy.
    Simulate(SimArgs),
    /// Build the exact joint chain and report its per-node marginals.
    Oracle(OracleArgs),
    /// Run every engine the experiment enables and compare their binned
    /// distributions; exits with status 1 when a threshold is exceeded.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment file (TOML). Mutually exclusive with --fixture.
    #[arg(conflicts_with = "fixture")]
    experiment: Option<PathBuf>,
    /// Built-in network: two-node, triangle or hidden-terminal.
    #[arg(long, value_parser = parse_fixture)]
    fixture: Option<Fixture>,
    /// Retry limit m, overriding the experiment's value [fixture default: 0].
    #[arg(long)]
    m: Option<u32>,
    /// Directory for output files; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Aggregate states into reporting bins.
    #[arg(long)]
    binned: bool,
}

#[derive(Debug, Args)]
struct SimFlags {
    /// Base seed; replication r uses seed + r [default: 1].
    #[arg(long)]
    seed: Option<u64>,
    /// Tallied slots per run [default: 1000000].
    #[arg(long)]
    slots: Option<u64>,
    /// Slots discarded before tallying [default: 10000].
    #[arg(long)]
    warmup: Option<u64>,
    /// Independent runs averaged together [default: 1].
    #[arg(long)]
    replications: Option<u32>,
}

#[derive(Debug, Args)]
struct SimArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    sim: SimFlags,
    /// Also write every action change of the first run (events.csv).
    #[arg(long)]
    log: bool,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    common: Common,
    /// Also write the joint chain's edge list (edges.csv).
    #[arg(long)]
    edges: bool,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    sim: SimFlags,
    /// Leave the exact joint chain out even if the experiment enables it.
    #[arg(long)]
    no_oracle: bool,
    /// Leave the simulator out even if the experiment enables it.
    #[arg(long)]
    no_sim: bool,
}

fn parse_fixture(s: &str) -> std::result::Result<Fixture, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn load(common: &Common) -> Result<ExperimentSpec> {
    let source = match (&common.experiment, common.fixture) {
        (Some(path), None) => ExperimentSource::File(path.clone()),
        (None, Some(f)) => ExperimentSource::Fixture(f),
        (None, None) => return Err(Error::config("topology", "give an experiment file or --fixture")),
        (Some(_), Some(_)) => unreachable!("clap rejects both"),
    };
    let mut spec = io::load_experiment(&source)?;
    if let Some(m) = common.m {
        spec.params.m = m;
        spec.params.validate()?;
    }
    if common.binned {
        spec.output.binned = true;
    }
    if let Some(dir) = &common.out {
        spec.output.dir = Some(dir.clone());
    }
    Ok(spec)
}

fn apply_sim_flags(spec: &mut ExperimentSpec, flags: &SimFlags) -> Result<()> {
    let s = &mut spec.sim;
    s.seed = flags.seed.unwrap_or(s.seed);
    s.slots = flags.slots.unwrap_or(s.slots);
    s.warmup = flags.warmup.unwrap_or(s.warmup);
    s.replications = flags.replications.unwrap_or(s.replications);
    if s.slots == 0 {
        return Err(Error::config("sim.slots", "must be positive"));
    }
    if s.replications == 0 {
        return Err(Error::config("sim.replications", "must be positive"));
    }
    Ok(())
}

/// Writes `name` under the output directory, or to standard output.
fn emit(dir: Option<&Path>, name: &str, text: &str) -> Result<()> {
    match dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(Error::file(dir))?;
            let path = dir.join(name);
            fs::write(&path, text).map_err(Error::file(&path))?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn render(spec: &ExperimentSpec, dists: &[Distribution]) -> String {
    if spec.output.binned {
        io::emit_binned(dists)
    } else {
        io::emit_distribution(dists)
    }
}

fn run_solver(spec: &ExperimentSpec) -> Result<SolveReport> {
    let report = System::build(&spec.topology, &spec.params)?.solve(&spec.solver)?;
    eprintln!(
        "solve: converged={} iterations={} residual={:.3e} normalization={:.3e}",
        report.converged, report.iterations, report.residual, report.normalization_error
    );
    if !report.converged {
        return Err(Error::Numerical { equation: format!("fixed point after {} iterations", report.iterations) });
    }
    Ok(report)
}

fn run_sim(spec: &ExperimentSpec, log: bool) -> Result<(Vec<Distribution>, Option<String>)> {
    let mut config = SimConfig::new(spec.topology.clone(), spec.params, spec.sim.seed, spec.sim.slots);
    config.warmup_slots = spec.sim.warmup;
    config.log = log || spec.sim.log;
    let runs = sim::replicate(&config, spec.sim.replications)?;
    let events = runs[0].log.as_ref().map(|events| {
        let mut text = String::from("slot,node,action,timer,partner\n");
        for e in events {
            text.push_str(&format!("{e}\n"));
        }
        text
    });
    for (x, c) in runs[0].counters.iter().enumerate() {
        eprintln!(
            "simulate: x{} rts_sent={} rts_failed={} data_received={} drops={}",
            x + 1,
            c.rts_sent,
            c.rts_failed,
            c.data_received,
            c.drops
        );
    }
    Ok((sim::average(&runs)?, events))
}

fn run_oracle(spec: &ExperimentSpec) -> Result<OracleSolution> {
    let solution = oracle::solve_exact(&spec.topology, &spec.params)?;
    eprintln!("oracle: joint states={} residual={:.3e}", solution.chain.len(), solution.residual);
    Ok(solution)
}

/// Returns whether every configured threshold held.
fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Solve(common) => {
            let spec = load(&common)?;
            let report = run_solver(&spec)?;
            emit(spec.output.dir.as_deref(), "model.csv", &render(&spec, &report.pi))?;
        }
        Command::Simulate(args) => {
            let mut spec = load(&args.common)?;
            apply_sim_flags(&mut spec, &args.sim)?;
            let (occupancy, events) = run_sim(&spec, args.log)?;
            let dir = spec.output.dir.as_deref();
            emit(dir, "sim.csv", &render(&spec, &occupancy))?;
            if let Some(events) = events {
                emit(dir, "events.csv", &events)?;
            }
        }
        Command::Oracle(args) => {
            let spec = load(&args.common)?;
            let solution = run_oracle(&spec)?;
            let dir = spec.output.dir.as_deref();
            emit(dir, "oracle.csv", &render(&spec, &solution.marginals))?;
            if args.edges || spec.output.edges {
                emit(dir, "edges.csv", &solution.chain.edge_list())?;
            }
        }
        Command::Compare(args) => {
            let mut spec = load(&args.common)?;
            apply_sim_flags(&mut spec, &args.sim)?;
            let model = run_solver(&spec)?.pi;
            let oracle = if spec.modes.contains(&io::Mode::Oracle) && !args.no_oracle {
                match run_oracle(&spec) {
                    Ok(s) => Some(s.marginals),
                    Err(Error::Size { count, cap }) => {
                        eprintln!("oracle: skipped, joint chain exceeds {cap} states (reached {count})");
                        None
                    }
                    Err(e) => return Err(e),
                }
            } else {
                None
            };
            let simulated = if spec.modes.contains(&io::Mode::Simulate) && !args.no_sim {
                Some(run_sim(&spec, false)?.0)
            } else {
                None
            };
            let comparison = io::compare(&model, oracle.as_deref(), simulated.as_deref())?;
            emit(spec.output.dir.as_deref(), "compare.csv", &comparison.render())?;
            let violations = comparison.violations(&spec.thresholds);
            for v in &violations {
                eprintln!("compare: {v}");
            }
            return Ok(violations.is_empty());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
