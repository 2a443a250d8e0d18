use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand};

use linrep_cli::config::{ProblemSpec, RunConfig, Subcommand};
use linrep_cli::error::{exit, CliError, CliResult};

#[derive(Parser)]
#[command(name = "linrep", version, about = "Linear-representation solvers for nonlinear ODEs and PDEs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Problem name from `list-problems`, overriding the config.
    #[arg(long)]
    problem: Option<String>,
    /// Output directory; relative paths resolve against $LINREP_OUTPUT_ROOT.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for sampling, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Liouville density of an ODE (upwind or non-unitary splitting).
    OdeLiouville(RunArgs),
    /// KvN wave function of an ODE (upwind, Trotter or dense exponential).
    OdeKvn(RunArgs),
    /// Level-set phase-space Liouville run for a Hamilton-Jacobi problem.
    Hje(RunArgs),
    /// Time-splitting spectral run of a semiclassical Schrodinger problem.
    Schrodinger(RunArgs),
    /// Complexity registry evaluated on a (d, eps) grid.
    Resources(RunArgs),
    /// Run whatever subcommand the config names.
    Run(RunArgs),
    /// Print the built-in problems.
    ListProblems,
    /// Print a default config for a subcommand.
    Template {
        #[arg(value_parser = parse_subcommand)]
        subcommand: Subcommand,
    },
}

fn parse_subcommand(s: &str) -> Result<Subcommand, String> {
    Subcommand::ALL
        .into_iter()
        .find(|c| c.slug() == s)
        .ok_or_else(|| format!("expected one of {:?}", Subcommand::ALL.map(|c| c.slug())))
}

fn load(args: &RunArgs, invoked: Option<Subcommand>) -> CliResult<RunConfig> {
    let mut cfg = match (&args.config, invoked) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            RunConfig::from_toml(&text)?
        }
        (None, Some(sub)) => RunConfig::template(sub),
        (None, None) => return Err(CliError::validation("config", "`run` needs --config")),
    };
    if let Some(sub) = invoked {
        if cfg.subcommand != sub {
            return Err(CliError::validation(
                "subcommand",
                format!("config is for `{}` but `{sub}` was invoked", cfg.subcommand),
            ));
        }
    }
    if let Some(name) = &args.problem {
        cfg.problem = Some(ProblemSpec {
            name: name.clone(),
            params: cfg.problem.take().map(|p| p.params).unwrap_or_default(),
        });
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(args: &RunArgs, invoked: Option<Subcommand>) -> CliResult<()> {
    let cfg = load(args, invoked)?;
    let (dir, hash) = linrep_cli::execute(&cfg, args.out.as_deref())?;
    let mut stdout = std::io::stdout().lock();
    if cfg.subcommand == Subcommand::Resources {
        if let Ok(table) = std::fs::read_to_string(dir.join("table.md")) {
            // A closed pipe is not a failure of the run.
            let _ = stdout.write_all(table.as_bytes());
        }
    }
    let _ = writeln!(stdout, "wrote {} (content sha256 {hash})", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::OdeLiouville(a) => run(a, Some(Subcommand::OdeLiouville)),
        Command::OdeKvn(a) => run(a, Some(Subcommand::OdeKvn)),
        Command::Hje(a) => run(a, Some(Subcommand::Hje)),
        Command::Schrodinger(a) => run(a, Some(Subcommand::Schrodinger)),
        Command::Resources(a) => run(a, Some(Subcommand::Resources)),
        Command::Run(a) => run(a, None),
        Command::ListProblems => {
            print!("{}", linrep_cli::list_problems());
            Ok(())
        }
        Command::Template { subcommand } => RunConfig::template(*subcommand).to_toml().map(|t| print!("{t}")),
    };
    match outcome {
        Ok(()) => ExitCode::from(exit::SUCCESS as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
