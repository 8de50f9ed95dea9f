//! `azema` — simulate, verify, and plot structure-equation jump processes.

mod config;
mod driver;
mod svg;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::{FileConfig, ProcessOpts};
use driver::OutputFormat;

#[derive(Parser)]
#[command(
    name = "azema",
    version,
    about = "Event-driven simulation and statistical verification of normal-martingale jump processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct CommonOpts {
    /// Number of Monte Carlo paths.
    #[arg(long)]
    paths: Option<u64>,
    /// Master seed; path i uses stream id i.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: AZEMA_WORKERS or available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// Output file (or directory for multi-path runs).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv | json.
    #[arg(long)]
    format: Option<String>,
    /// JSON config file supplying defaults; explicit flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate sample paths and export their event data.
    Simulate {
        #[command(flatten)]
        process: ProcessOpts,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Sample the marginal Z_t across many paths.
    Marginal {
        #[command(flatten)]
        process: ProcessOpts,
        #[command(flatten)]
        common: CommonOpts,
        /// Evaluation time (default: tmax, or 1).
        #[arg(long)]
        t: Option<f64>,
    },
    /// Run the statistical verification battery.
    Verify {
        #[command(flatten)]
        common: CommonOpts,
        /// Run a single named test (see `verify --list`).
        #[arg(long)]
        only: Option<String>,
        /// Include the designed-to-fail negative controls.
        #[arg(long)]
        negative_controls: bool,
        /// List available test names and exit.
        #[arg(long)]
        list: bool,
    },
    /// Convergence diagnostics across increasing scales n.
    Converge {
        #[command(flatten)]
        process: ProcessOpts,
        #[command(flatten)]
        common: CommonOpts,
        /// Comma-separated increasing scales, e.g. 100,1000,10000.
        #[arg(long)]
        n_list: Option<String>,
        /// Evaluation time.
        #[arg(long)]
        t: Option<f64>,
    },
    /// Render a simulated path (from its sidecar JSON) as a standalone SVG.
    Plot {
        #[command(flatten)]
        common: CommonOpts,
        /// Sidecar JSON produced by `simulate`.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Flow samples per inter-jump segment.
        #[arg(long)]
        samples_per_segment: Option<u32>,
        #[arg(long)]
        width: Option<u32>,
        #[arg(long)]
        height: Option<u32>,
        /// Overlay the ±√t envelope (Parthasarathy case).
        #[arg(long)]
        envelope: bool,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}

fn workers_of(common: &CommonOpts, file: &FileConfig) -> usize {
    common
        .workers
        .or(file.workers)
        .unwrap_or_else(azema::mc::default_workers)
}

fn format_of(common: &CommonOpts, file: &FileConfig) -> Result<OutputFormat> {
    match common.format.as_deref().or(file.format.as_deref()) {
        None => Ok(OutputFormat::Csv),
        Some(s) => OutputFormat::parse(s),
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Simulate { process, common } => {
            let file = FileConfig::load(common.config.as_deref())?;
            let opts = process.merged(file.process.clone());
            let sel = opts.resolve()?;
            let workers = workers_of(&common, &file);
            let format = format_of(&common, &file)?;
            let cmd = driver::SimulateCmd {
                process: sel,
                n: opts.n.unwrap_or(100),
                x0: opts.x0.unwrap_or(0.0),
                t_max: opts.tmax.unwrap_or(1.0),
                paths: common.paths.or(file.paths).unwrap_or(1),
                master_seed: common.seed.or(file.seed).unwrap_or(42),
                workers,
                out: common
                    .out
                    .or(file.out)
                    .unwrap_or_else(|| PathBuf::from("paths")),
                format,
            };
            let files = driver::run_simulate(&cmd)?;
            println!("wrote {} file(s) under {}", files.len(), cmd.out.display());
            Ok(0)
        }
        Command::Marginal { process, common, t } => {
            let file = FileConfig::load(common.config.as_deref())?;
            let opts = process.merged(file.process.clone());
            let sel = opts.resolve()?;
            let t_eval = t.or(file.t).or(opts.tmax).unwrap_or(1.0);
            let workers = workers_of(&common, &file);
            let format = format_of(&common, &file)?;
            let cmd = driver::MarginalCmd {
                process: sel,
                n: opts.n.unwrap_or(100),
                x0: opts.x0.unwrap_or(0.0),
                t: t_eval,
                paths: common.paths.or(file.paths).unwrap_or(10_000),
                master_seed: common.seed.or(file.seed).unwrap_or(42),
                workers,
                out: common
                    .out
                    .or(file.out)
                    .unwrap_or_else(|| PathBuf::from("marginal.csv")),
                format,
            };
            driver::run_marginal(&cmd)?;
            println!("wrote {}", cmd.out.display());
            Ok(0)
        }
        Command::Verify {
            common,
            only,
            negative_controls,
            list,
        } => {
            if list {
                for name in azema::battery::BATTERY_NAMES {
                    println!("{name}");
                }
                for name in azema::battery::NEGATIVE_CONTROL_NAMES {
                    println!("{name}");
                }
                return Ok(0);
            }
            let file = FileConfig::load(common.config.as_deref())?;
            let workers = workers_of(&common, &file);
            let cmd = driver::VerifyCmd {
                only: only.or(file.only),
                negative_controls: negative_controls || file.negative_controls.unwrap_or(false),
                master_seed: common.seed.or(file.seed).unwrap_or(42),
                workers,
                out: common.out.or(file.out),
            };
            let (reports, ok) = driver::run_verify(&cmd)?;
            for r in &reports {
                println!("{}", r.summary_line());
            }
            let failed = reports.iter().filter(|r| !r.pass && !r.advisory).count();
            println!("{} checks, {} required failures", reports.len(), failed);
            Ok(if ok { 0 } else { 1 })
        }
        Command::Converge {
            process,
            common,
            n_list,
            t,
        } => {
            let file = FileConfig::load(common.config.as_deref())?;
            let opts = process.merged(file.process.clone());
            let beta = match opts.resolve()? {
                config::ProcessSel::Linear { beta } => beta,
                _ => anyhow::bail!("converge currently supports the linear family (--beta)"),
            };
            let workers = workers_of(&common, &file);
            let n_list = match n_list {
                Some(s) => driver::parse_n_list(&s)?,
                None => file.n_list.unwrap_or_else(|| vec![100, 1_000, 10_000]),
            };
            let cmd = driver::ConvergeCmd {
                beta,
                n_list,
                t: t.or(file.t).unwrap_or(1.0),
                paths: common.paths.or(file.paths).unwrap_or(1_000),
                master_seed: common.seed.or(file.seed).unwrap_or(42),
                workers,
                out: common.out.or(file.out),
            };
            let table = driver::run_converge(&cmd)?;
            print!("{}", driver::converge_table_text(&table));
            Ok(if table.pass { 0 } else { 1 })
        }
        Command::Plot {
            common,
            input,
            samples_per_segment,
            width,
            height,
            envelope,
        } => {
            let file = FileConfig::load(common.config.as_deref())?;
            let input = input
                .or(file.input)
                .ok_or_else(|| anyhow::anyhow!("--input <sidecar.json> is required"))?;
            let cmd = driver::PlotCmd {
                input,
                out: common
                    .out
                    .or(file.out)
                    .unwrap_or_else(|| PathBuf::from("path.svg")),
                samples_per_segment: samples_per_segment
                    .or(file.samples_per_segment)
                    .unwrap_or(50),
                width: width.or(file.width).unwrap_or(900),
                height: height.or(file.height).unwrap_or(480),
                envelope: envelope || file.envelope.unwrap_or(false),
            };
            let out = driver::run_plot(&cmd)?;
            println!("wrote {}", out.display());
            Ok(0)
        }
    }
}
