//! `anderson-saw`: command-line experiments on the Anderson model.
//!
//! Exit codes: 0 success, 1 a check performed by the command failed,
//! 2 usage or config error, 3 numerical failure.

mod commands;
mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anderson_saw::report::write_json;
use clap::{Parser, Subcommand};
use serde_json::Value;

use commands::{Command, Completed, Context, Output};
use config::{merge, resolve_seed, ConfigFile, Failure, Outcome};

#[derive(Debug, Parser)]
#[command(name = "anderson-saw", version, about = "Anderson-model experiments: walk expansions, fractional moments, localization and level statistics")]
struct Cli {
    /// JSON config: a flat parameter object, or a previous report.
    /// Command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed [default: $ANDERSON_SAW_SEED, else 0].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads [default: available parallelism]. Results do not
    /// depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Report path [default: stdout].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// CSV output path, for commands that emit tables.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    #[command(subcommand)]
    command: Group,
}

#[derive(Debug, Subcommand)]
enum Group {
    /// Graph construction and geometry.
    #[command(subcommand)]
    Graph(GraphCmd),
    /// Self-avoiding walk classification and census.
    #[command(subcommand)]
    Saw(SawCmd),
    /// Cross-checks between independent computations.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Fractional-moment estimates and bounds.
    #[command(subcommand)]
    Fmm(FmmCmd),
    /// Localization criterion and decay probes.
    #[command(subcommand)]
    Localize(LocalizeCmd),
    /// Spectra and level-spacing statistics.
    #[command(subcommand)]
    Spectra(SpectraCmd),
}

#[derive(Debug, Subcommand)]
enum GraphCmd {
    Build(commands::GraphBuild),
    Info(commands::GraphInfo),
}

#[derive(Debug, Subcommand)]
enum SawCmd {
    Count(commands::SawCount),
    Table(commands::SawTable),
}

#[derive(Debug, Subcommand)]
enum VerifyCmd {
    SawRep(commands::VerifySawRep),
}

#[derive(Debug, Subcommand)]
enum FmmCmd {
    Estimate(commands::FmmEstimate),
    Bound(commands::FmmBound),
    #[command(name = "graf-probe")]
    RatioProbe(commands::RatioProbe),
}

#[derive(Debug, Subcommand)]
enum LocalizeCmd {
    Criterion(commands::LocalizeCriterion),
    CriticalLambda(commands::CriticalLambda),
    Probe(commands::LocalizeProbe),
    Consistency(commands::LocalizeConsistency),
}

#[derive(Debug, Subcommand)]
enum SpectraCmd {
    Ensemble(commands::SpectraEnsemble),
    Spacing(commands::SpectraSpacing),
}

struct Globals {
    config: ConfigFile,
    seed_flag: Option<u64>,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
}

fn execute<C: Command>(flags: &C, globals: &Globals) -> Outcome<Option<String>> {
    if let Some(command) = &globals.config.command {
        if command != C::NAME {
            return Err(Failure::Usage(format!("config was written by `{command}`, not `{}`", C::NAME)));
        }
    }
    let mut resolved = merge(flags, &globals.config.params)?;
    let seed = resolve_seed(globals.seed_flag, globals.config.seed)?;
    let ctx = Context { seed, csv: globals.csv.clone() };
    let Completed { output, check_failure } = resolved.run(&ctx)?;
    match output {
        Output::Text(text) => write_output(&globals.out, |w| w.write_all(text.as_bytes()))?,
        Output::Json(result) => {
            let mut config = serde_json::Map::new();
            config.insert("command".into(), C::NAME.into());
            config.insert("seed".into(), seed.into());
            if let Value::Object(params) = serde_json::to_value(&resolved).expect("configs serialize") {
                config.extend(params);
            }
            let report = match result {
                Value::Object(mut fields) => {
                    fields.insert("config".into(), Value::Object(config));
                    Value::Object(fields)
                }
                other => serde_json::json!({ "config": config, "result": other }),
            };
            write_output(&globals.out, |w| {
                write_json(&mut *w, &report).map_err(io::Error::other)?;
                writeln!(w)
            })?;
        }
    }
    Ok(check_failure)
}

fn write_output(path: &Option<PathBuf>, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Outcome<()> {
    match path {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", path.display())))?;
            let mut out = BufWriter::new(file);
            body(&mut out)?;
            out.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            body(&mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Outcome<Option<String>> {
    if let Some(k) = cli.workers {
        if k == 0 {
            return Err(Failure::Usage("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Failure::Usage(format!("cannot start worker pool: {e}")))?;
    }
    let config = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let globals = Globals { config, seed_flag: cli.seed, out: cli.out, csv: cli.csv };
    match &cli.command {
        Group::Graph(GraphCmd::Build(c)) => execute(c, &globals),
        Group::Graph(GraphCmd::Info(c)) => execute(c, &globals),
        Group::Saw(SawCmd::Count(c)) => execute(c, &globals),
        Group::Saw(SawCmd::Table(c)) => execute(c, &globals),
        Group::Verify(VerifyCmd::SawRep(c)) => execute(c, &globals),
        Group::Fmm(FmmCmd::Estimate(c)) => execute(c, &globals),
        Group::Fmm(FmmCmd::Bound(c)) => execute(c, &globals),
        Group::Fmm(FmmCmd::RatioProbe(c)) => execute(c, &globals),
        Group::Localize(LocalizeCmd::Criterion(c)) => execute(c, &globals),
        Group::Localize(LocalizeCmd::CriticalLambda(c)) => execute(c, &globals),
        Group::Localize(LocalizeCmd::Probe(c)) => execute(c, &globals),
        Group::Localize(LocalizeCmd::Consistency(c)) => execute(c, &globals),
        Group::Spectra(SpectraCmd::Ensemble(c)) => execute(c, &globals),
        Group::Spectra(SpectraCmd::Spacing(c)) => execute(c, &globals),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(check)) => {
            eprintln!("check failed: {check}");
            ExitCode::from(1)
        }
        Err(failure) => {
            eprintln!("{failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
