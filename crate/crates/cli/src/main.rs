//! `superint`: derive, verify, reduce and numerically check third-order
//! integrals of separable two-dimensional Schrodinger operators.
//!
//! Exit codes: 0 success, 1 failed check or pipeline error (the report is
//! still written), 2 invalid configuration or usage.

mod commands;
mod config;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Format, GridConfig, LatexObject, NumericConfig, OutputConfig, RunConfig, V1Mode, SEED_ENV};
use report::{render_json, render_text, Status};

#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or usage; exit 2.
    Usage(String),
    /// Failure after the configuration was accepted; exit 1.
    Failure(String),
}

#[derive(Parser, Debug)]
#[command(name = "superint", version, about = "Third-order integrals of separable 2D Schrodinger operators")]
struct Cli {
    /// TOML or JSON config file; its values override flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for random sampling; overridden by SUPERINT_SEED.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress the summary on standard error.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(flatten)]
    output: OutputConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Determining system of an ansatz on a geometry.
    Derive(DeriveArgs),
    /// Reduce a catalog candidate and match its conditions with the reference set.
    Verify(VerifyArgs),
    /// Eliminate down to one ODE on a branch of a catalog case.
    Reduce(ReduceArgs),
    /// Numeric pipeline: potential, conditions, constant fit, grid commutator study.
    Numcheck(NumcheckArgs),
    /// LaTeX rendering of an expression, operator, system or condition set.
    Latex(LatexArgs),
}

#[derive(Args, Debug)]
struct DeriveArgs {
    /// `generic` or a catalog name.
    #[arg(long)]
    geometry: Option<String>,
    #[arg(long)]
    order: Option<u32>,
    #[arg(long, value_enum)]
    v1: Option<V1Mode>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    case: Option<String>,
    /// Treat differences from printed reference forms as failures.
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Debug)]
struct ReduceArgs {
    #[arg(long)]
    case: Option<String>,
    /// Branch label such as `a4!=0` or `a8=0`.
    #[arg(long, allow_hyphen_values = true)]
    branch: Option<String>,
}

#[derive(Args, Debug)]
struct NumcheckArgs {
    #[arg(long)]
    case: Option<String>,
    /// `weierstrass` or `pvi`.
    #[arg(long)]
    branch: Option<String>,
    #[command(flatten)]
    numeric: NumericConfig,
    #[command(flatten)]
    grid: GridConfig,
    /// Skip the grid commutator study.
    #[arg(long)]
    no_grid: bool,
}

#[derive(Args, Debug)]
struct LatexArgs {
    #[arg(long, value_enum)]
    object: Option<LatexObject>,
    /// Expression text for `--object expr`.
    #[arg(long, allow_hyphen_values = true)]
    expr: Option<String>,
    #[arg(long)]
    geometry: Option<String>,
    #[arg(long)]
    order: Option<u32>,
    #[arg(long, value_enum)]
    v1: Option<V1Mode>,
    #[arg(long)]
    case: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    branch: Option<String>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Derive(_) => "derive",
            Command::Verify(_) => "verify",
            Command::Reduce(_) => "reduce",
            Command::Numcheck(_) => "numcheck",
            Command::Latex(_) => "latex",
        }
    }

    fn into_config(self) -> RunConfig {
        let mut c = RunConfig { command: Some(self.name().into()), ..Default::default() };
        match self {
            Command::Derive(a) => {
                c.geometry = a.geometry;
                c.order = a.order;
                c.v1 = a.v1;
            }
            Command::Verify(a) => {
                c.case = a.case;
                c.strict = a.strict.then_some(true);
            }
            Command::Reduce(a) => {
                c.case = a.case;
                c.branch = a.branch;
            }
            Command::Numcheck(a) => {
                c.case = a.case;
                c.branch = a.branch;
                c.numeric = a.numeric;
                c.grid = a.grid;
                if a.no_grid {
                    c.grid.enabled = Some(false);
                }
            }
            Command::Latex(a) => {
                c.object = a.object;
                c.expr = a.expr;
                c.geometry = a.geometry;
                c.order = a.order;
                c.v1 = a.v1;
                c.case = a.case;
                c.branch = a.branch;
            }
        }
        c
    }
}

fn resolve(cli: Cli) -> Result<(String, RunConfig), CliError> {
    let name = cli.command.name().to_string();
    let mut cfg = cli.command.into_config();
    cfg.seed = cli.seed;
    cfg.output = cli.output;
    if let Some(path) = &cli.config {
        let file = RunConfig::load(path)?;
        if let Some(c) = &file.command {
            if c != &name {
                return Err(CliError::Usage(format!("config file is for command {c:?}, not {name:?}")));
            }
        }
        cfg.overlay(&file);
    }
    cfg.apply_env(std::env::var(SEED_ENV).ok())?;
    Ok((name, cfg))
}

fn execute(name: &str, cfg: &mut RunConfig) -> Result<report::Outcome, CliError> {
    superint::expr::set_guard_seed(cfg.seed());
    match name {
        "derive" => commands::derive(cfg),
        "verify" => commands::verify(cfg),
        "reduce" => commands::reduce(cfg),
        "numcheck" => commands::numcheck(cfg),
        "latex" => commands::latex(cfg),
        _ => unreachable!("clap restricts commands"),
    }
}

fn write_to(path: Option<&PathBuf>, text: &str) -> Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| format!("cannot write to standard output: {e}")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let quiet = cli.quiet;
    let (name, mut cfg) = match resolve(cli) {
        Ok(r) => r,
        Err(CliError::Usage(m) | CliError::Failure(m)) => {
            eprintln!("superint: {m}");
            return ExitCode::from(2);
        }
    };
    let outcome = match execute(&name, &mut cfg) {
        Ok(o) => o,
        Err(CliError::Usage(m)) => {
            eprintln!("superint {name}: {m}");
            return ExitCode::from(2);
        }
        Err(CliError::Failure(m)) => report::Outcome::error(m),
    };
    let output = std::mem::take(&mut cfg.output);
    let format = output.format.unwrap_or(if name == "latex" { Format::Text } else { Format::Json });
    let body = match format {
        Format::Json => render_json(&name, &cfg, &outcome),
        Format::Text if name == "latex" && outcome.status == Status::Pass => format!("{}\n", outcome.latex.as_deref().unwrap_or("")),
        Format::Text => render_text(&name, &outcome),
    };
    let mut io_error = write_to(output.report.as_ref(), &body).err();
    if let (Some(path), Some(tex)) = (output.latex.as_ref(), outcome.latex.as_ref()) {
        if let Err(e) = write_to(Some(path), &format!("{tex}\n")) {
            io_error.get_or_insert(e);
        }
    }
    // a text report on standard output already carries the summary
    let echoed = format == Format::Text && output.report.is_none();
    if !quiet && !echoed {
        eprintln!("superint {name}: {}", outcome.status.label());
        for w in &outcome.warnings {
            eprintln!("warning: {w}");
        }
        if outcome.status == Status::Error {
            for l in &outcome.text {
                eprintln!("{l}");
            }
        }
    }
    if let Some(e) = io_error {
        eprintln!("superint {name}: {e}");
        return ExitCode::from(1);
    }
    match outcome.status {
        Status::Pass => ExitCode::SUCCESS,
        Status::Fail | Status::Error => ExitCode::from(1),
    }
}
