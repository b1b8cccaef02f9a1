//! `restoracle`: generate, review, emit and score REST API test oracles.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use restoracle::commands::{self, CheckArgs, CommandError, Config, Context, EmitArgs, FdrArgs, MutateArgs, ReviewArgs, ScoreArgs, SpecArgs};
use restoracle::gateway::BackendKind;
use restoracle::metrics::MismatchPolicy;

#[derive(Parser)]
#[command(name = "restoracle", version, about)]
struct Cli {
    /// YAML or JSON config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for mutation campaigns.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct SpecOpts {
    /// OpenAPI 3.x document.
    #[arg(long)]
    spec: PathBuf,
    /// Restrict to these operation ids (repeatable).
    #[arg(long = "operation")]
    operations: Vec<String>,
}

impl From<SpecOpts> for SpecArgs {
    fn from(o: SpecOpts) -> Self {
        SpecArgs { spec: o.spec, operations: o.operations }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Heuristic,
    OpenaiCompatible,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    FpAndFn,
    FpOnly,
}

#[derive(Subcommand)]
enum Command {
    /// Flatten response schemas into field records.
    Extract(SpecOpts),
    /// Build the prompt for every oracle-bearing field.
    Prompt(SpecOpts),
    /// Ask the backend and assemble one oracle set per operation.
    Infer {
        #[command(flatten)]
        spec: SpecOpts,
        #[arg(long, value_enum)]
        backend: Option<Backend>,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        base_url: Option<String>,
    },
    /// Re-validate a hand-edited oracle set.
    Review {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        oracles: PathBuf,
    },
    /// Write a Postman collection with the assertions.
    Emit {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, required = true, num_args = 1..)]
        oracles: Vec<PathBuf>,
    },
    /// Evaluate recorded responses; exits 3 on violations.
    Check {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        oracles: PathBuf,
        #[arg(long, required = true, num_args = 1..)]
        responses: Vec<PathBuf>,
    },
    /// Run a seeded mutation campaign.
    Mutate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        oracles: PathBuf,
        #[arg(long, required = true, num_args = 1..)]
        responses: Vec<PathBuf>,
        #[arg(long)]
        reps: Option<usize>,
    },
    /// Recount detections of stored mutants.
    Fdr {
        #[arg(long)]
        oracles: PathBuf,
        #[arg(long, required = true, num_args = 1..)]
        responses: Vec<PathBuf>,
        #[arg(long)]
        mutants: PathBuf,
    },
    /// Precision, recall and F1 against ground truth.
    Score {
        #[arg(long, num_args = 1..)]
        predicted: Vec<PathBuf>,
        #[arg(long, required = true, num_args = 1..)]
        truth: Vec<PathBuf>,
        #[arg(long, num_args = 1..)]
        compare: Vec<PathBuf>,
        #[arg(long, value_enum)]
        policy: Option<Policy>,
    },
}

fn run(cli: Cli) -> Result<commands::Outcome, CommandError> {
    let mut config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let mut ctx = Context::new(config, cli.out);
    match cli.command {
        Command::Extract(o) => commands::extract(&ctx, &o.into()),
        Command::Prompt(o) => commands::prompt(&ctx, &o.into()),
        Command::Infer { spec, backend, model, base_url } => {
            let b = &mut ctx.config.backend;
            match backend {
                Some(Backend::Heuristic) => b.kind = BackendKind::Heuristic,
                Some(Backend::OpenaiCompatible) => b.kind = BackendKind::OpenaiCompatible,
                None => {}
            }
            if let Some(m) = model {
                b.model = m;
            }
            if base_url.is_some() {
                b.base_url = base_url;
            }
            commands::infer(&ctx, &spec.into())
        }
        Command::Review { spec, oracles } => commands::review(&ctx, &ReviewArgs { spec, oracles }),
        Command::Emit { spec, oracles } => commands::emit(&ctx, &EmitArgs { spec, oracles }),
        Command::Check { spec, oracles, responses } => commands::check(&ctx, &CheckArgs { spec, oracles, responses }),
        Command::Mutate { spec, oracles, responses, reps } => {
            commands::mutate(&ctx, &MutateArgs { spec, oracles, responses, repetitions: reps, seed: cli.seed })
        }
        Command::Fdr { oracles, responses, mutants } => commands::fdr(&ctx, &FdrArgs { oracles, responses, mutants }),
        Command::Score { predicted, truth, compare, policy } => {
            let policy = policy.map(|p| match p {
                Policy::FpAndFn => MismatchPolicy::FpAndFn,
                Policy::FpOnly => MismatchPolicy::FpOnly,
            });
            commands::score(&ctx, &ScoreArgs { predicted, truth, compare, policy })
        }
    }
}

fn main() -> Result<ExitCode> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    match run(cli) {
        Ok(outcome) => Ok(ExitCode::from(outcome.exit_code as u8)),
        Err(e) => {
            eprintln!("error: {e}");
            Ok(ExitCode::from(e.exit_code() as u8))
        }
    }
}
