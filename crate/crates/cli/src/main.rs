//! `atn-lab`: runs one experiment and emits a JSON report plus an optional
//! CSV table. Exit status: 0 success, 1 a check failed, 2 usage error.

mod commands;
mod config;
mod parse;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use commands::{Check, FurstenbergCommand, Outcome, SupportCheck};
use config::{ConfigFile, Globals};

#[derive(Debug)]
pub struct UsageError(pub String);

impl From<atn_core::Error> for UsageError {
    fn from(e: atn_core::Error) -> Self {
        UsageError(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "atn-lab", version, about = "Hamming-ball, AT(n) and skew-product experiments")]
struct Cli {
    /// JSON config with the command's flags as keys; flags given here win
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores); results do not depend on it
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write the CSV table here; `-` prints it to stdout in place of the report
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Measure of a Hamming ball around a funny word
    Ball(commands::BallArgs),
    /// Binomial bound on Hamming balls for product measures
    Bound(commands::BoundArgs),
    /// Block entropy profile H_m and H_m/m
    Entropy(commands::EntropyArgs),
    /// Nonnegative L1 approximation by shifted generators
    AtnSolve(commands::AtnArgs),
    /// Skew product on the torus and its symbolic coding
    #[command(subcommand)]
    Furstenberg(FurstenbergCommand),
    /// Evaluate or search the statistic Σ|Λⁱ|·ν(B_ε(Wⁱ)) against 1 - δ
    #[command(name = "check-thm21")]
    CheckThm21(commands::Thm21Args),
    /// Sample a measure on a window and save it as an empirical measure file
    Sample(commands::SampleArgs),
}

struct Done {
    command: String,
    config: Value,
    outcome: Outcome,
}

fn run<A>(name: &str, cli: &A, file: Option<&ConfigFile>, f: impl FnOnce(&mut A) -> Result<Outcome, UsageError>) -> Result<Done, UsageError>
where
    A: Serialize + DeserializeOwned + Default,
{
    if let Some(file) = file {
        file.check_command(name)?;
    }
    let mut args = config::merge(cli, file)?;
    let outcome = f(&mut args)?;
    Ok(Done {
        command: name.into(),
        config: serde_json::to_value(&args).expect("arguments serialize"),
        outcome,
    })
}

fn dispatch(command: &Command, file: Option<&ConfigFile>) -> Result<Done, UsageError> {
    match command {
        Command::Ball(a) => run("ball", a, file, commands::ball),
        Command::Bound(a) => run("bound", a, file, commands::bound),
        Command::Entropy(a) => run("entropy", a, file, commands::entropy),
        Command::AtnSolve(a) => run("atn-solve", a, file, commands::atn_solve),
        Command::CheckThm21(a) => run("check-thm21", a, file, commands::check_thm21),
        Command::Sample(a) => run("sample", a, file, commands::sample),
        Command::Furstenberg(f) => {
            let name = f.name();
            match f {
                FurstenbergCommand::Orbit(a) => run(name, a, file, commands::orbit),
                FurstenbergCommand::Code(a) => run(name, a, file, commands::code),
                FurstenbergCommand::PairCorr(a) => run(name, a, file, commands::pair_corr),
                FurstenbergCommand::Charsum(a) => {
                    run(name, a, file, |a| commands::support_check(a, SupportCheck::Charsum))
                }
                FurstenbergCommand::Markov(a) => run(name, a, file, |a| commands::support_check(a, SupportCheck::Markov)),
                FurstenbergCommand::Ineq3(a) => run(name, a, file, |a| commands::support_check(a, SupportCheck::Ineq3)),
            }
        }
    }
}

fn write_to(path: &Path, text: &str) -> Result<(), UsageError> {
    std::fs::write(path, text).map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

fn main_inner() -> Result<bool, UsageError> {
    let cli = Cli::parse();
    let file = cli.config.as_deref().map(ConfigFile::load).transpose()?;
    let globals = config::merge_globals(
        &Globals {
            threads: cli.threads,
            out: cli.out.clone(),
            csv: cli.csv.clone(),
        },
        file.as_ref(),
    )?;
    if let Some(t) = globals.threads {
        parse::at_least("--threads", t, 1)?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| UsageError(e.to_string()))?;
    }

    let start = Instant::now();
    let done = dispatch(&cli.command, file.as_ref())?;
    let wall = start.elapsed().as_secs_f64();
    let pass = done.outcome.checks.iter().all(|c: &Check| c.pass);

    let mut config = done.config;
    if let Value::Object(m) = &mut config {
        m.insert("threads".into(), json!(globals.threads));
        m.insert("out".into(), json!(globals.out));
        m.insert("csv".into(), json!(globals.csv));
    }
    let report = json!({
        "tool": "atn-lab",
        "version": concat!("v", env!("CARGO_PKG_VERSION")),
        "command": done.command,
        "config": config,
        "threads": rayon::current_num_threads(),
        "wall_time_seconds": wall,
        "payload": done.outcome.payload,
        "checks": done.outcome.checks,
        "pass": pass,
    });
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";

    let csv_to_stdout = globals.csv.as_deref() == Some(Path::new("-"));
    match (&globals.csv, &done.outcome.csv) {
        (Some(_), None) => return Err(UsageError(format!("`{}` has no CSV table", done.command))),
        (Some(path), Some(table)) if !csv_to_stdout => write_to(path, table)?,
        _ => {}
    }
    match &globals.out {
        Some(path) => write_to(path, &text)?,
        None if !csv_to_stdout => print!("{text}"),
        None => {}
    }
    if csv_to_stdout {
        print!("{}", done.outcome.csv.as_deref().unwrap_or_default());
    }
    std::io::stdout().flush().ok();
    Ok(pass)
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("atn-lab: {}", e.0);
            ExitCode::from(2)
        }
    }
}
