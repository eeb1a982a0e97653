use std::io::Write;
use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use carrot::cli::{self, Config};
use carrot::convergence::DEFAULT_WINDOW;
use carrot::diff::ReportFormat;
use carrot::minilang::{LabelRule, RunOptions};
use carrot::spectrum::{EngineConfig, PointSelection};
use carrot::SchemaSet;

#[derive(Parser)]
#[command(
    name = "carrot",
    version,
    about = "Localize faults by contrasting a failing run with invariants of passing runs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    opts: GlobalOpts,
}

#[derive(Args)]
struct GlobalOpts {
    /// Schemata to instantiate: any of eq,sum,lessthan,const (or `none`)
    #[arg(long, global = true, default_value = "eq,sum,lessthan,const")]
    schemata: SchemaSet,

    /// Do not collect value sets
    #[arg(long, global = true)]
    no_vsets: bool,

    /// Do not collect pair value sets
    #[arg(long, global = true)]
    no_psets: bool,

    /// Program points to analyze: all, entry, exit
    #[arg(long, global = true, default_value = "all")]
    points: PointSelection,

    /// Zero-falsification window for steady-state detection
    #[arg(long, global = true, default_value_t = NonZeroUsize::new(DEFAULT_WINDOW).unwrap())]
    window: NonZeroUsize,

    /// Report format: text or structured (JSON lines)
    #[arg(long, global = true, default_value = "text")]
    format: ReportFormat,

    /// Output path (directory for `trace`)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a program over its input cases and write one trace per case
    Trace {
        program: PathBuf,
        cases: PathBuf,
        /// How runs are labeled: oracle (result == expected) or halt
        #[arg(long, default_value = "oracle")]
        label: LabelRule,
    },
    /// Compute the spectrum of a single trace
    Spectrum { trace: PathBuf },
    /// Combine good-run traces into a model file
    Model {
        #[arg(required = true)]
        traces: Vec<String>,
    },
    /// Contrast a model with a failing run
    Diff { model: PathBuf, bad: PathBuf },
    /// Report how the model converges as runs are added
    Converge {
        #[arg(required = true)]
        traces: Vec<String>,
    },
}

fn config(opts: &GlobalOpts) -> Result<Config> {
    let mut run = RunOptions::default();
    if let Some(budget) = cli::step_budget_from_env()? {
        run.step_budget = budget;
    }
    Ok(Config {
        engine: EngineConfig {
            schemata: opts.schemata,
            value_sets: !opts.no_vsets,
            pair_sets: !opts.no_psets,
            points: opts.points,
        },
        window: opts.window,
        format: opts.format,
        out: opts.out.clone(),
        run,
    })
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = config(&cli.opts)?;
    match cli.command {
        Command::Trace {
            program,
            cases,
            label,
        } => {
            let out = config.out.clone().context("`trace` needs --out DIR")?;
            let summary = cli::cmd_trace(&program, &cases, &out, label, config.run)?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            if !summary.files.is_empty() {
                println!(
                    "wrote {} traces ({} good, {} bad) to {}",
                    summary.files.len(),
                    summary.good,
                    summary.bad,
                    out.display()
                );
            }
        }
        Command::Spectrum { trace } => {
            emit(&cli::cmd_spectrum(&trace, &config)?, config.out.as_ref())?
        }
        Command::Model { traces } => print!("{}", cli::cmd_model(&traces, &config)?),
        Command::Diff { model, bad } => emit(
            &cli::cmd_diff(&model, &bad, config.format)?,
            config.out.as_ref(),
        )?,
        Command::Converge { traces } => {
            let (csv, state) = cli::cmd_converge(&traces, &config)?;
            emit(&csv, config.out.as_ref())?;
            print!("{state}");
        }
    }
    Ok(())
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
