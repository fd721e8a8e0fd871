//! Command line front end: run scenarios, sweep parameters, generate
//! operating characteristics, color conflict graphs, and query policies.
//!
//! Exit codes: 0 on success, 1 on configuration or usage errors, 2 when a
//! policy violation (or a refused request) was detected.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use osa_core::detector::{energy_roc_analytic, EnergyDetectorSpec};
use osa_core::policy::Decision;
use osa_core::sharing::{ColorMode, ColorOrder, UtilityModel};
use osa_sim::formats;
use osa_sim::runner::{execute_run, execute_sweep, SweepAxis};
use osa_sim::scenario::Scenario;

#[derive(Parser)]
#[command(
    name = "osa",
    version,
    about = "Opportunistic spectrum access: tracking runs, sweeps, and spectrum-sharing tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario over its seeds and write traces and reports.
    Run {
        /// Scenario file.
        scenario: PathBuf,
        /// Run a single seed instead of the scenario's seed list.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Sweep one parameter over a grid, sharing seeds across points.
    Sweep {
        /// Scenario file.
        scenario: PathBuf,
        /// Which parameter to sweep.
        #[arg(long)]
        axis: Axis,
        /// Grid: `start:stop:step` or a comma-separated list.
        #[arg(long)]
        grid: String,
        #[command(flatten)]
        out: OutDir,
    },
    /// Print or save an energy-detector operating characteristic.
    Roc {
        /// Linear signal-to-noise ratio.
        #[arg(long)]
        snr: f64,
        /// Samples integrated per decision.
        #[arg(long)]
        samples: u64,
        /// Write to a file instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Color a conflict graph and report the assignment and utility.
    Color {
        /// Graph file.
        graph: PathBuf,
        /// Coloring algorithm.
        #[arg(long, value_enum, default_value_t = Algo::Greedy)]
        algo: Algo,
        /// Vertex order for the greedy sweep.
        #[arg(long, value_enum, default_value_t = OrderArg::Index)]
        order: OrderArg,
        /// Channels per user.
        #[arg(long, value_enum, default_value_t = ModeArg::Single)]
        mode: ModeArg,
        /// Round cap for the distributed algorithm.
        #[arg(long, default_value_t = 256)]
        rounds: usize,
        /// Seed for the distributed algorithm.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Utility model to report.
        #[arg(long, value_enum, default_value_t = UtilityArg::Sum)]
        utility: UtilityArg,
    },
    /// Evaluate a transmission request against a policy file.
    PolicyCheck {
        /// Policy rules file.
        policy: PathBuf,
        /// Request file.
        request: PathBuf,
    },
}

/// Output directory: `--out`, else `OSA_OUTPUT_DIR`, else `./osa-out`.
#[derive(Args)]
struct OutDir {
    /// Directory for report files.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl OutDir {
    fn resolve(&self) -> PathBuf {
        if let Some(dir) = &self.out {
            return dir.clone();
        }
        if let Ok(dir) = std::env::var("OSA_OUTPUT_DIR") {
            if !dir.is_empty() {
                return PathBuf::from(dir);
            }
        }
        PathBuf::from("osa-out")
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Delta,
    Zeta,
    Snr,
    Horizon,
}

impl From<Axis> for SweepAxis {
    fn from(axis: Axis) -> Self {
        match axis {
            Axis::Delta => SweepAxis::Delta,
            Axis::Zeta => SweepAxis::Zeta,
            Axis::Snr => SweepAxis::Snr,
            Axis::Horizon => SweepAxis::Horizon,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Greedy,
    Distributed,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    Index,
    MaxDegree,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Single,
    Multi,
}

#[derive(Clone, Copy, ValueEnum)]
enum UtilityArg {
    Sum,
    ProportionalFair,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run { scenario, seed, out } => run(&scenario, seed, &out.resolve()),
        Command::Sweep { scenario, axis, grid, out } => {
            sweep(&scenario, axis.into(), &grid, &out.resolve())
        }
        Command::Roc { snr, samples, out } => roc(snr, samples, out.as_deref()),
        Command::Color { graph, algo, order, mode, rounds, seed, utility } => {
            color(&graph, algo, order, mode, rounds, seed, utility)
        }
        Command::PolicyCheck { policy, request } => policy_check(&policy, &request),
    }
}

fn run(scenario_path: &Path, seed: Option<u64>, out_dir: &Path) -> anyhow::Result<ExitCode> {
    let scenario = Scenario::load(scenario_path)?;
    let outcome = execute_run(&scenario, out_dir, seed)
        .with_context(|| format!("running {}", scenario_path.display()))?;
    let summary = std::fs::read_to_string(out_dir.join("summary.txt"))?;
    print!("{summary}");
    println!("reports written to {}", out_dir.display());
    if outcome.compliance.is_some_and(|c| c.violations > 0) {
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep(
    scenario_path: &Path,
    axis: SweepAxis,
    grid: &str,
    out_dir: &Path,
) -> anyhow::Result<ExitCode> {
    let scenario = Scenario::load(scenario_path)?;
    let grid = parse_grid(grid)?;
    let outcome = execute_sweep(&scenario, axis, &grid, out_dir)
        .with_context(|| format!("sweeping {} over {}", axis.name(), scenario_path.display()))?;
    println!("scenario sha256: {}", outcome.config_hash);
    println!(
        "{} points along {}, throughput {:.6} .. {:.6}",
        outcome.rows.len(),
        axis.name(),
        outcome.rows.iter().map(|r| r.throughput_mean).fold(f64::INFINITY, f64::min),
        outcome.rows.iter().map(|r| r.throughput_mean).fold(f64::NEG_INFINITY, f64::max),
    );
    println!("sweep written to {}", out_dir.join("sweep.csv").display());
    Ok(ExitCode::SUCCESS)
}

/// Parses `start:stop:step` (stop inclusive, within a small slack) or a
/// comma-separated list.
fn parse_grid(text: &str) -> anyhow::Result<Vec<f64>> {
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, step] = parts[..] else {
            bail!("grid ranges are start:stop:step, got `{text}`");
        };
        let start: f64 = start.parse().context("grid start")?;
        let stop: f64 = stop.parse().context("grid stop")?;
        let step: f64 = step.parse().context("grid step")?;
        if !(step > 0.0) || stop < start {
            bail!("grid range needs stop >= start and a positive step");
        }
        let mut grid = Vec::new();
        let mut i = 0u32;
        loop {
            let value = start + step * f64::from(i);
            if value > stop + step * 1e-9 {
                break;
            }
            grid.push(value);
            i += 1;
        }
        return Ok(grid);
    }
    text.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("grid value `{t}`")))
        .collect()
}

fn roc(snr: f64, samples: u64, out: Option<&Path>) -> anyhow::Result<ExitCode> {
    // The curve sweeps thresholds itself; the spec's own threshold is unused.
    let spec = EnergyDetectorSpec::new(snr, samples, 1.0)?;
    let text = formats::write_roc(&energy_roc_analytic(&spec));
    match out {
        Some(path) => {
            std::fs::write(path, &text)
                .with_context(|| format!("writing {}", path.display()))?;
            println!("curve written to {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn color(
    graph_path: &Path,
    algo: Algo,
    order: OrderArg,
    mode: ModeArg,
    rounds: usize,
    seed: u64,
    utility: UtilityArg,
) -> anyhow::Result<ExitCode> {
    let graph = formats::load_graph(graph_path)?;
    let mode = match mode {
        ModeArg::Single => ColorMode::SingleChannel,
        ModeArg::Multi => ColorMode::MultiChannel,
    };
    let assignment = match algo {
        Algo::Greedy => {
            let order = match order {
                OrderArg::Index => ColorOrder::Index,
                OrderArg::MaxDegree => ColorOrder::MaxDegreeFirst,
            };
            graph.greedy(order, mode)
        }
        Algo::Distributed => {
            let outcome = graph.distributed(mode, rounds, seed);
            println!(
                "distributed: {} rounds, {}",
                outcome.rounds,
                if outcome.converged { "converged" } else { "round cap reached" }
            );
            outcome.assignment
        }
    };
    for v in 0..graph.n_vertices() {
        let colors = if assignment[v].is_empty() {
            "-".to_string()
        } else {
            assignment[v].iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
        };
        println!("{}: {colors}", graph.vertex_id(v));
    }
    let model = match utility {
        UtilityArg::Sum => UtilityModel::Sum,
        UtilityArg::ProportionalFair => UtilityModel::ProportionalFair,
    };
    let score = graph.utility(&assignment, model)?;
    println!("utility: {score:.6}");
    Ok(ExitCode::SUCCESS)
}

fn policy_check(policy_path: &Path, request_path: &Path) -> anyhow::Result<ExitCode> {
    let policy = formats::load_policy(policy_path)?;
    let request = formats::load_request(request_path)?;
    match policy.evaluate(&request)? {
        Decision::Yes => {
            println!("yes");
            Ok(ExitCode::SUCCESS)
        }
        Decision::No => {
            println!("no");
            Ok(ExitCode::from(2))
        }
        Decision::YesWithConstraints(caps) => {
            let mut constraints = Vec::new();
            if let Some(p) = caps.max_power {
                constraints.push(format!("max_power={p}"));
            }
            if let Some(d) = caps.max_duration {
                constraints.push(format!("max_duration={d}"));
            }
            if let Some(bands) = &caps.allowed_bands {
                let list =
                    bands.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
                constraints.push(format!("allowed_bands={list}"));
            }
            println!("yes, with constraints: {}", constraints.join(" "));
            Ok(ExitCode::from(2))
        }
    }
}
