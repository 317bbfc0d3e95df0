use std::path::PathBuf;
use std::process;

use clap::{Args, Parser, Subcommand};
use edgeguard_cli::config::{Overrides, RunConfig};
use edgeguard_cli::{cmd_bench, cmd_evaluate, cmd_fedsim, cmd_preprocess, cmd_synth, cmd_train};

/// Edge intrusion detection: preprocessing, fused-model training, federated
/// simulation, and evaluation from a single JSON config.
#[derive(Parser)]
#[command(name = "edgeguard", version)]
struct Cli {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Root seed, overriding the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory, overriding the config file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct DataArg {
    /// Input path override: a raw CSV for preprocess, a feature matrix
    /// elsewhere.
    #[arg(long)]
    dataset: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate the configured synthetic CSV fixture.
    Synth,
    /// Ingest raw CSVs into encoded train/test matrices.
    Preprocess {
        #[command(flatten)]
        data: DataArg,
    },
    /// Train the fused detector on the preprocessed training matrix.
    Train {
        #[command(flatten)]
        data: DataArg,
        /// Continue training from a saved model.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Simulate federated training over partitioned clients.
    Fedsim {
        #[command(flatten)]
        data: DataArg,
    },
    /// Score a held-out matrix and write the metrics report.
    Evaluate {
        #[command(flatten)]
        data: DataArg,
        /// Model file; defaults to the trained or federated model.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Threshold profile: balanced, fpr:<bound>, or recall:<bound>.
        #[arg(long)]
        profile: Option<String>,
    },
    /// Measure inference latency of a saved model.
    Bench {
        #[command(flatten)]
        data: DataArg,
        /// Model file; defaults to the trained or federated model.
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        process::exit(e.exit_code());
    }
}

fn run(cli: Cli) -> edgeguard_cli::Result<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    let profile = match &cli.cmd {
        Cmd::Evaluate { profile, .. } => profile.clone(),
        _ => None,
    };
    cfg.apply(&Overrides {
        seed: cli.seed,
        out: cli.out,
        profile,
    })?;

    match &cli.cmd {
        Cmd::Synth => cmd_synth(&cfg).map(drop),
        Cmd::Preprocess { data } => cmd_preprocess(&cfg, data.dataset.as_deref()).map(drop),
        Cmd::Train { data, resume } => cmd_train(&cfg, data.dataset.as_deref(), resume.as_deref()),
        Cmd::Fedsim { data } => cmd_fedsim(&cfg, data.dataset.as_deref()),
        Cmd::Evaluate { data, model, .. } => {
            cmd_evaluate(&cfg, model.as_deref(), data.dataset.as_deref()).map(drop)
        }
        Cmd::Bench { data, model } => {
            cmd_bench(&cfg, model.as_deref(), data.dataset.as_deref()).map(drop)
        }
    }
}
