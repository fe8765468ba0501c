use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use beltforge::harness::bench::cmd_bench;
use beltforge::harness::config::{Algorithm, BackendKind, ConfigFile};
use beltforge::harness::plot::{plot_data, render_svg};
use beltforge::harness::{cmd_gen, cmd_run, write_atomic};
use beltforge::Exec;

/// Belt placement benchmarks and solvers.
///
/// Remote evaluation (`--backend rcon`) reads BELTFORGE_RCON_HOST,
/// BELTFORGE_RCON_PORT and BELTFORGE_RCON_PASSWORD.
#[derive(Parser)]
#[command(name = "beltforge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a benchmark problem matrix.
    Gen {
        #[command(flatten)]
        instance: Instance,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one solver for some replicates.
    Run {
        #[command(flatten)]
        instance: Instance,
        #[arg(long, value_parser = parse_algorithm)]
        algo: Option<Algorithm>,
        /// Iterations (psa) or generations (qgp, erl).
        #[arg(long)]
        budget: Option<u32>,
        #[arg(long)]
        replicates: Option<u32>,
        #[arg(long, value_parser = parse_backend)]
        backend: Option<BackendKind>,
        /// Problem matrix file instead of a generated instance.
        #[arg(long, conflicts_with_all = ["size", "size_flag"])]
        problem: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "beltforge-run")]
        out: PathBuf,
        /// Run every solver on the calling thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Run the experiment suite.
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        replicates: Option<u32>,
        #[arg(long)]
        budget: Option<u32>,
        /// Base seed; replicate r uses seed + r.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = parse_backend)]
        backend: Option<BackendKind>,
        #[arg(long, default_value = "beltforge-bench")]
        out: PathBuf,
        #[arg(long)]
        sequential: bool,
    },
    /// Turn a trace or aggregate CSV into plot data.
    Plot {
        trace: PathBuf,
        #[arg(long)]
        log_y: bool,
        /// `.svg` renders a chart, anything else gets JSON; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Instance {
    /// Playfield side length.
    #[arg(value_name = "SIZE")]
    size: Option<usize>,
    #[arg(long = "size", id = "size_flag", conflicts_with = "size")]
    size_flag: Option<usize>,
    #[arg(long, overrides_with = "no_obstacles")]
    obstacles: bool,
    #[arg(long, overrides_with = "obstacles")]
    no_obstacles: bool,
    #[arg(long)]
    seed: Option<u64>,
}

impl Instance {
    fn size(&self) -> Option<usize> {
        self.size.or(self.size_flag)
    }

    fn obstacles(&self) -> Option<bool> {
        match (self.obstacles, self.no_obstacles) {
            (true, _) => Some(true),
            (_, true) => Some(false),
            _ => None,
        }
    }
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: beltforge::ConfigError| e.to_string())
}

fn parse_backend(s: &str) -> Result<BackendKind, String> {
    match s {
        "sim" => Ok(BackendKind::Sim),
        "rcon" => Ok(BackendKind::Rcon),
        _ => Err(format!("unknown backend {s:?}; use sim or rcon")),
    }
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile> {
    match path {
        Some(p) => Ok(ConfigFile::load(p)?),
        None => Ok(ConfigFile::default()),
    }
}

fn force_sequential(file: &mut ConfigFile) {
    file.psa.exec = Exec::Sequential;
    file.qgp.exec = Exec::Sequential;
    file.erl.exec = Exec::Sequential;
    file.suite.workers = 1;
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { instance, out } => {
            let Some(size) = instance.size() else {
                bail!("gen needs a size");
            };
            let obstacles = instance.obstacles().unwrap_or(false);
            let seed = instance.seed.unwrap_or(0);
            match out {
                Some(path) => {
                    cmd_gen(size, obstacles, seed, &path)?;
                }
                None => {
                    let p = beltforge::grid::make_benchmark(size, obstacles, seed)?;
                    print!("{}", p.to_text());
                }
            }
        }
        Command::Run {
            instance,
            algo,
            budget,
            replicates,
            backend,
            problem,
            config,
            out,
            sequential,
        } => {
            let mut file = load_config(config.as_deref())?;
            let r = &mut file.run;
            if let Some(size) = instance.size() {
                r.size = size;
            }
            if let Some(o) = instance.obstacles() {
                r.obstacles = o;
            }
            if let Some(s) = instance.seed {
                r.seed = s;
            }
            if let Some(a) = algo {
                r.algorithm = a;
            }
            if let Some(b) = budget {
                r.budget = b;
            }
            if let Some(n) = replicates {
                r.replicates = n;
            }
            if let Some(b) = backend {
                r.backend = b;
            }
            if problem.is_some() {
                r.problem_file = problem;
            }
            if sequential {
                force_sequential(&mut file);
            }
            let rc = file.run_config();
            let summary = cmd_run(&rc, &out)?;
            for o in &summary.replicates {
                println!(
                    "{} {} seed {}: best fitness {}{}",
                    rc.algorithm.name(),
                    rc.problem.id(),
                    o.seed,
                    o.best_fitness,
                    if o.delivered { " (delivers)" } else { "" }
                );
            }
            println!("wrote {}", out.display());
        }
        Command::Bench {
            config,
            replicates,
            budget,
            seed,
            backend,
            out,
            sequential,
        } => {
            let mut file = load_config(config.as_deref())?;
            if let Some(n) = replicates {
                file.suite.replicates = n;
            }
            if let Some(b) = budget {
                file.suite.budget = b;
            }
            if let Some(s) = seed {
                file.run.seed = s;
            }
            if let Some(b) = backend {
                file.run.backend = b;
            }
            if sequential {
                force_sequential(&mut file);
            }
            let report = cmd_bench(&file, &out)?;
            for row in &report.summary {
                println!(
                    "{:<4} {:<16} {:<6} median {:.4} iqr {:.4} delivered {}/{}",
                    row.algorithm,
                    row.problem,
                    if row.status == "ok" { "ok" } else { "FAILED" },
                    row.median_final,
                    row.iqr_final,
                    row.delivered_runs,
                    row.runs
                );
            }
            println!("wrote {}", out.display());
            if report.failures() > 0 {
                eprintln!("{} suite cell(s) failed; see summary.csv", report.failures());
            }
        }
        Command::Plot { trace, log_y, out } => {
            let text = std::fs::read_to_string(&trace)
                .with_context(|| format!("reading {}", trace.display()))?;
            let Some(data) = plot_data(&text, log_y)? else {
                return Ok(());
            };
            let svg = out
                .as_ref()
                .is_some_and(|p| p.extension().is_some_and(|e| e == "svg"));
            let rendered = if svg {
                render_svg(&data)
            } else {
                serde_json::to_string_pretty(&data)? + "\n"
            };
            match out {
                Some(path) => write_atomic(&path, rendered.as_bytes())?,
                None => print!("{rendered}"),
            }
        }
    }
    Ok(())
}
