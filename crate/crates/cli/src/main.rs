//! `cover`: run, batch, generate environments and plot.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 the trial ran
//! but did not succeed.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cover_core::envgen::{generate, EnvKind};
use cover_core::environment::{write_xyz, Aabb};
use cover_core::plot::{write_svg, Plane, PlotInput};
use cover_core::report::{run_batch, write_metrics_jsonl, write_trajectory_csv, BatchSpec};
use cover_core::scenario::{load_scenario, OutputSection, ScenarioFile};
use cover_core::sim_runtime::{simulate, CloudSource, Policy, Scenario, World};
use cover_core::{limit_threads, CoverError, Execution, Point3};

const DEFAULT_OUT: &str = "cover-out";

#[derive(Parser)]
#[command(name = "cover", version, about = "Decentralized coverage control over point clouds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trial and write trajectory.csv, metrics.json and plot.svg.
    Run(RunArgs),
    /// Run paired-seed trials for several policies.
    Batch(BatchArgs),
    /// Generate a synthetic point cloud.
    GenEnv(GenEnvArgs),
    /// Render a scenario and an optional trajectory CSV to SVG.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    policy: Option<Policy>,
    #[arg(long)]
    plane: Option<Plane>,
}

#[derive(Args)]
struct BatchArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value_t = 30)]
    trials: usize,
    /// First seed; trial k uses seed + k for every policy.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "proposed,greedy-density")]
    policies: Vec<Policy>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenEnvArgs {
    #[arg(long)]
    kind: String,
    /// Points per cubic meter (a flat workspace counts as 1 m thick).
    #[arg(long, default_value_t = 0.3)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Workspace extent `x,y,z` in meters, starting at the origin.
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [40.0, 40.0, 0.0])]
    size: Vec<f64>,
    /// Output xyz file.
    #[arg(long)]
    out: PathBuf,
    /// Also write a scenario file that references the cloud.
    #[arg(long)]
    scenario_out: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    robots: usize,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Trajectory CSV written by `run`.
    #[arg(long)]
    trajectory: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    plane: Option<Plane>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CoverError {
    CoverError::Io(format!("{}: {e}", path.display()))
}

fn create_dir(dir: &Path) -> Result<(), CoverError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn create_file(path: &Path) -> Result<BufWriter<fs::File>, CoverError> {
    fs::File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn obstacles(scenario: &Scenario) -> Result<Vec<Point3>, CoverError> {
    Ok(World::new(scenario)?.cloud.points().to_vec())
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, CoverError> {
    let (mut scenario, output) = load_scenario(&args.scenario)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if let Some(policy) = args.policy {
        scenario.policy = policy;
    }
    let out = args.out.or(output.dir).unwrap_or_else(|| DEFAULT_OUT.into());
    let record = simulate(&scenario, Execution::Parallel)?;
    create_dir(&out)?;

    write_trajectory_csv(create_file(&out.join("trajectory.csv"))?, &record)?;
    write_metrics_jsonl(create_file(&out.join("metrics.json"))?, [&record.metrics])?;
    let paths: Vec<Vec<Point3>> = record.trajectories.iter().map(|t| t.iter().map(|s| s.position).collect()).collect();
    let points = obstacles(&scenario)?;
    write_svg(
        &out.join("plot.svg"),
        &PlotInput {
            workspace: scenario.workspace,
            plane: args.plane.unwrap_or(output.plane),
            obstacles: &points,
            trajectories: &paths,
            density: Some(&scenario.density),
        },
    )?;

    let m = &record.metrics;
    println!(
        "{}: success={} peaks={}/{} elapsed={:.1}s steps={} termination={:?}",
        m.policy, m.success, m.peaks_detected, m.peaks_total, m.elapsed, m.steps, m.termination
    );
    if let Some(d) = &m.diagnostic {
        println!("diagnostic: {d}");
    }
    Ok(if m.success { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn cmd_batch(args: BatchArgs) -> Result<ExitCode, CoverError> {
    let (mut scenario, output) = load_scenario(&args.scenario)?;
    scenario.seed = args.seed;
    let spec = BatchSpec { trials: args.trials, base_seed: args.seed, policies: args.policies };
    let report = run_batch(&scenario, &spec, Execution::Parallel)?;
    let out = args.out.or(output.dir).unwrap_or_else(|| DEFAULT_OUT.into());
    create_dir(&out)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| CoverError::Io(e.to_string()))?;
    fs::write(out.join("report.json"), json + "\n").map_err(|e| io_err(&out, e))?;
    write_metrics_jsonl(create_file(&out.join("metrics.jsonl"))?, &report.trials)?;
    let table = report.summary_table();
    fs::write(out.join("summary.txt"), &table).map_err(|e| io_err(&out, e))?;
    print!("{table}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen_env(args: GenEnvArgs) -> Result<ExitCode, CoverError> {
    let kind: EnvKind = args.kind.parse()?;
    let ws = Aabb::new(Point3::ORIGIN, Point3::new(args.size[0], args.size[1], args.size[2]))
        .map_err(|e| CoverError::Config(e.to_string()))?;
    let env = generate(kind, ws, args.density, args.seed)?;
    write_xyz(create_file(&args.out)?, &env.points)?;
    println!("{}: {} points -> {}", kind, env.points.len(), args.out.display());
    if let Some(path) = args.scenario_out {
        let cloud_path = std::path::absolute(&args.out).map_err(|e| io_err(&args.out, e))?;
        let scenario = env.scenario(args.robots, CloudSource::File { path: cloud_path, format: None })?;
        let target = std::path::absolute(&path).map_err(|e| io_err(&path, e))?;
        ScenarioFile::from_scenario(&scenario, OutputSection::default()).save(&target)?;
        println!("scenario -> {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

/// Reads positions back from a trajectory CSV, one path per robot id.
fn read_trajectory_csv(path: &Path) -> Result<Vec<Vec<Point3>>, CoverError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == cover_core::report::TRAJECTORY_HEADER => {}
        _ => return Err(CoverError::Parse { line: 1, message: "unexpected trajectory header".into() }),
    }
    let mut paths: Vec<Vec<Point3>> = Vec::new();
    for (i, line) in lines {
        let bad = |m: &str| CoverError::Parse { line: i + 1, message: m.to_string() };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(bad("expected 8 fields"));
        }
        let id: usize = fields[1].parse().map_err(|_| bad("bad robot id"))?;
        let num = |k: usize| fields[k].parse::<f64>().map_err(|_| bad("bad number"));
        if paths.len() <= id {
            paths.resize(id + 1, Vec::new());
        }
        paths[id].push(Point3::new(num(2)?, num(3)?, num(4)?));
    }
    Ok(paths)
}

fn cmd_plot(args: PlotArgs) -> Result<ExitCode, CoverError> {
    let (scenario, output) = load_scenario(&args.scenario)?;
    let paths = match &args.trajectory {
        Some(p) => read_trajectory_csv(p)?,
        None => Vec::new(),
    };
    let points = obstacles(&scenario)?;
    write_svg(
        &args.out,
        &PlotInput {
            workspace: scenario.workspace,
            plane: args.plane.unwrap_or(output.plane),
            obstacles: &points,
            trajectories: &paths,
            density: Some(&scenario.density),
        },
    )?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    // usage errors share exit code 1 with other input errors
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Ok(v) = std::env::var("COVER_THREADS") {
        match v
            .trim()
            .parse::<usize>()
            .map_err(|e| CoverError::Config(format!("COVER_THREADS: {e}")))
            .and_then(limit_threads)
        {
            Ok(()) => {}
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        }
    }
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Batch(a) => cmd_batch(a),
        Command::GenEnv(a) => cmd_gen_env(a),
        Command::Plot(a) => cmd_plot(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(1)
    })
}
