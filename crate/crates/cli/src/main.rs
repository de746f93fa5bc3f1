use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pdmodel::io::commands::{error_report, Artifact};
use pdmodel::io::{run, Command, Overrides, RunConfig};
use pdmodel::model::UpdateRule;

/// Correlated multi-period default simulation on interbank networks.
#[derive(Parser)]
#[command(name = "pdmodel", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for both the simulation and the network inference.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    paths: Option<usize>,
    #[arg(long, global = true)]
    periods: Option<usize>,
    /// Uniform asset correlation; replaces any correlation matrix.
    #[arg(long, global = true)]
    rho: Option<f64>,
    #[arg(long, global = true, value_enum)]
    rule: Option<Rule>,
    #[arg(long, global = true)]
    discount_rate: Option<f64>,
    /// Worker threads; all cores by default. Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory. Without it the report is printed to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Loss distribution of the system.
    Simulate,
    /// PDRank of every bank.
    Rank,
    /// Loss increase for uniform relative pd increases.
    Impact,
    /// Linear fit of the pd impact series.
    Beta,
    /// Exact two-node Markov chain scan over capital and correlation.
    Oracle,
    /// Ensemble of inferred exposure networks.
    Infer,
    /// Furfine cascade and DebtRank for a shock.
    Baseline,
}

#[derive(ValueEnum, Clone, Copy)]
enum Rule {
    Merton,
    Linear,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Simulate => Command::Simulate,
            Cmd::Rank => Command::Rank,
            Cmd::Impact => Command::Impact,
            Cmd::Beta => Command::Beta,
            Cmd::Oracle => Command::Oracle,
            Cmd::Infer => Command::Infer,
            Cmd::Baseline => Command::Baseline,
        }
    }
}

fn write_all(dir: &Path, artifacts: &[Artifact]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for a in artifacts {
        std::fs::write(dir.join(&a.name), &a.contents)?;
    }
    Ok(())
}

fn emit(out: Option<&Path>, artifacts: &[Artifact]) -> ExitCode {
    match out {
        Some(dir) => match write_all(dir, artifacts) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {}: {e}", dir.display());
                ExitCode::from(2)
            }
        },
        None => {
            if let Some(r) = artifacts.iter().find(|a| a.name == "report.json") {
                print!("{}", r.contents);
            }
            ExitCode::SUCCESS
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = Command::from(cli.command);

    let mut config = match &cli.config {
        Some(p) => match RunConfig::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(e.exit_code() as u8);
            }
        },
        None => RunConfig::default(),
    };
    config.apply(&Overrides {
        seed: cli.seed,
        paths: cli.paths,
        periods: cli.periods,
        rho: cli.rho,
        rule: cli.rule.map(|r| match r {
            Rule::Merton => UpdateRule::Merton,
            Rule::Linear => UpdateRule::Linear,
        }),
        discount_rate: cli.discount_rate,
    });

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    match pool.install(|| run(command, &config)) {
        Ok(artifacts) => emit(cli.out.as_deref(), &artifacts),
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.exit_code() as u8;
            if code == 3 {
                let _ = emit(cli.out.as_deref(), &[error_report(command, &config, &e)]);
            }
            ExitCode::from(code)
        }
    }
}
