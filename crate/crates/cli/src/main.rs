mod commands;
mod config;
mod csv;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use semimarkov::grid::TimeGrid;

use commands::RouteArg;
use config::RunConfig;
use csv::CsvTable;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numeric(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Numeric(_) => 3,
            Self::Invariant(_) => 4,
        }
    }
}

impl From<semimarkov::Error> for CliError {
    fn from(e: semimarkov::Error) -> Self {
        match e {
            semimarkov::Error::InvariantViolation { .. } => Self::Invariant(e.to_string()),
            semimarkov::Error::InvalidSpec(_) => Self::Config(e.to_string()),
            _ => Self::Numeric(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "semimarkov", version, about = "Quantum semi-Markov dynamics: renewal curves, master equations, divisibility")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Renewal curves f, g, h, S, q, μ and the smooth memory kernel.
    Curves(RunArgs),
    /// Evolve the initial state along one route.
    Solve {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        route: RouteArg,
    },
    /// Minimum Choi eigenvalue of the intermediate maps Λ_t Λ_s⁻¹.
    Divisibility {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value = "tcl")]
        route: RouteArg,
    },
    /// h, S and S/g for Erlang waiting times.
    Figure1(FigureArgs),
    /// Coherence decay factors of the diagonal and dephasing jump maps.
    Figure2(FigureArgs),
    /// Check invariants and cross-route consistency; exit 4 on any failure.
    Validate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct FigureArgs {
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
    n_list: Vec<u32>,
    #[arg(long, default_value_t = 10.0)]
    t_end: f64,
    #[arg(long, default_value_t = 1001)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(t) = self.t_end {
            cfg.grid.t_end = t;
        }
        if let Some(n) = self.points {
            cfg.grid.n_points = n;
        }
        cfg.grid.validate().map_err(|e| CliError::Config(format!("grid: {e}")))?;
        if let Some(n) = self.trials {
            if n == 0 {
                return Err(CliError::Config("--trials must be positive".into()));
            }
            cfg.options.trials = n;
        }
        if let Some(s) = self.seed {
            cfg.options.seed = s;
        }
        Ok(cfg)
    }
}

impl FigureArgs {
    fn grid(&self) -> Result<TimeGrid, CliError> {
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(CliError::Config("--rate must be positive".into()));
        }
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return Err(CliError::Config("--n-list needs positive integers".into()));
        }
        TimeGrid::new(self.t_end, self.points).map_err(|e| CliError::Config(format!("grid: {e}")))
    }
}

fn emit(table: &CsvTable, out: Option<&PathBuf>) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Config(format!("output: {e}"));
    let written = match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).map_err(io)?);
            table.write(&mut w).and_then(|_| w.flush())
        }
        None => {
            let mut w = BufWriter::new(std::io::stdout().lock());
            table.write(&mut w).and_then(|_| w.flush())
        }
    };
    match written {
        // a closed pipe (e.g. `| head`) is not an error
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => other.map_err(io),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Curves(a) => emit(&commands::curves(&a.load()?)?, a.out.as_ref()),
        Command::Solve { run, route } => emit(&commands::solve(&run.load()?, route)?, run.out.as_ref()),
        Command::Divisibility { run, route } => {
            emit(&commands::divisibility_table(&run.load()?, route)?, run.out.as_ref())
        }
        Command::Figure1(a) => emit(&commands::figure1(a.rate, &a.n_list, &a.grid()?)?, a.out.as_ref()),
        Command::Figure2(a) => emit(&commands::figure2(a.rate, &a.n_list, &a.grid()?)?, a.out.as_ref()),
        Command::Validate(a) => {
            let checks = commands::validate(&a.load()?)?;
            let mut lines = String::new();
            let mut failed = 0;
            for c in &checks {
                let tag = match c.pass {
                    Some(true) => "PASS",
                    Some(false) => {
                        failed += 1;
                        "FAIL"
                    }
                    None => "SKIP",
                };
                lines.push_str(&format!("{tag} {}: {}\n", c.name, c.detail));
            }
            match &a.out {
                Some(p) => std::fs::write(p, &lines).map_err(|e| CliError::Config(format!("output: {e}")))?,
                None => print!("{lines}"),
            }
            if failed > 0 {
                return Err(CliError::Invariant(format!("{failed} check(s) failed")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("semimarkov: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
