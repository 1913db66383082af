use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ordlab_cli::{run, Command, Format, RunConfig};

#[derive(Parser)]
#[command(
    name = "ordlab",
    about = "Factor-ordering verification runs with JSON/CSV reports",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Args, Debug)]
struct Common {
    /// RNG seed; fully determines all sampling
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Override the subcommand's main tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Report file path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format: json, csv or pretty-table
    #[arg(long, default_value = "json")]
    format: Format,
}

#[derive(Subcommand, Debug)]
enum CliCommand {
    /// Compare the two scalar-curvature routes on a catalog metric
    Curvature {
        #[arg(long, default_value = "euclidean:3")]
        metric: String,
        #[arg(long, default_value_t = 10)]
        points: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Effective potential and drift of an ordering over sample points
    Potential {
        #[arg(long, default_value = "conf-gauss:3:0.25")]
        metric: String,
        /// naive | lb | conformal-lb | power:ALPHA:BETA | JSON spec
        #[arg(long, default_value = "conformal-lb")]
        spec: String,
        #[arg(long, default_value_t = 10)]
        points: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Exact exponent solutions plus the blind numeric two-root verification
    Exponents {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        metric: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Closed-form vs eigensolver-chain spectrum table
    Hydrogen {
        #[arg(long, default_value_t = 3)]
        n_max: u32,
        /// magnetic quantum numbers (repeatable)
        #[arg(long = "m")]
        m: Vec<i32>,
        #[command(flatten)]
        common: Common,
    },
    /// Numerical rank of the seven potential terms over a metric family
    Rank {
        /// comma-separated labels or poly-perturb:N:LO-HI:EPS
        #[arg(long, default_value = "poly-perturb:3:1-4:0.1")]
        family: String,
        /// sample points per metric
        #[arg(long, default_value_t = 5)]
        points: usize,
        #[arg(long)]
        expect_rank: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Exact matrix-identity sweep over catalog metrics
    Identities {
        #[arg(long)]
        metric: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Similarity-ordering oscillator demo
    Oscillator {
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        #[arg(long, default_value_t = 10)]
        points: usize,
        #[command(flatten)]
        common: Common,
    },
}

fn to_run_config(cli: CliCommand) -> RunConfig {
    let (command, common) = match cli {
        CliCommand::Curvature {
            metric,
            points,
            common,
        } => (Command::Curvature { metric, points }, common),
        CliCommand::Potential {
            metric,
            spec,
            points,
            common,
        } => (
            Command::Potential {
                metric,
                spec,
                points,
            },
            common,
        ),
        CliCommand::Exponents { n, metric, common } => (Command::Exponents { n, metric }, common),
        CliCommand::Hydrogen { n_max, m, common } => (Command::Hydrogen { n_max, m }, common),
        CliCommand::Rank {
            family,
            points,
            expect_rank,
            common,
        } => (
            Command::Rank {
                family,
                points,
                expect_rank,
            },
            common,
        ),
        CliCommand::Identities { metric, common } => (Command::Identities { metric }, common),
        CliCommand::Oscillator {
            omega,
            points,
            common,
        } => (Command::Oscillator { omega, points }, common),
    };
    RunConfig {
        command,
        seed: common.seed,
        tol: common.tol,
        out: common.out,
        format: common.format,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = to_run_config(cli.command);
    match run(&config) {
        Ok(outcome) => {
            if config.out.is_none() {
                print!("{}", outcome.report);
            }
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                for failure in &outcome.failures {
                    eprintln!("FAIL: {failure}");
                }
                ExitCode::FAILURE
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            let doc = serde_json::json!({ "error": err.to_string() });
            let body = serde_json::to_string(&doc).expect("serializable");
            if let Some(path) = &config.out {
                let _ = std::fs::write(path, &body);
            } else {
                println!("{body}");
            }
            ExitCode::FAILURE
        }
    }
}
