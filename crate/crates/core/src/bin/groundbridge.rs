use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use groundbridge::config::{ConfigOverrides, PipelineConfig, SEED_ENV};
use groundbridge::pipeline;
use groundbridge::report::f1_table;
use groundbridge::Result;

/// Object embeddings from simulated stacking, and affine grounding of word
/// vectors into them.
#[derive(Parser)]
#[command(name = "groundbridge", version)]
struct Cli {
    /// Flat TOML file of configuration keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: ConfigOverrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the episode dataset CSV.
    Simulate {
        /// Same as --dataset.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the encoder and save its parameters and loss history.
    Train {
        /// Same as --params.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the object index and the test confusion matrix.
    Index {
        /// Same as --index.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write synthetic contextual embeddings for the corpus.
    SynthEmbeddings {
        /// Same as --embeddings.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate JSON Lines embeddings (composed or raw) and store them composed.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// Same as --embeddings.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a grounding curriculum and write every report.
    Ground {
        /// Same as --report-dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-render the reports of a saved grounding run.
    Report {
        /// Same as --report-dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the effective configuration as TOML.
    Config,
}

fn resolve(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = PipelineConfig::load(cli.config.as_deref())?;
    config.apply_seed_env(std::env::var(SEED_ENV).ok().as_deref())?;
    cli.overrides.apply(&mut config);
    let slot = match &cli.command {
        Command::Simulate { out } => out.clone().map(|p| (p, &mut config.dataset)),
        Command::Train { out } => out.clone().map(|p| (p, &mut config.params)),
        Command::Index { out } => out.clone().map(|p| (p, &mut config.index)),
        Command::SynthEmbeddings { out } | Command::Ingest { out, .. } => {
            out.clone().map(|p| (p, &mut config.embeddings))
        }
        Command::Ground { out } | Command::Report { out } => out.clone().map(|p| (p, &mut config.report_dir)),
        Command::Config => None,
    };
    if let Some((p, field)) = slot {
        *field = p;
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<()> {
    let config = resolve(cli)?;
    match &cli.command {
        Command::Simulate { .. } => {
            let n = pipeline::simulate(&config)?;
            println!("wrote {n} samples to {}", config.dataset.display());
        }
        Command::Train { .. } => {
            let s = pipeline::train_encoder(&config)?;
            println!("{} batches, params in {}", s.history.records.len(), config.params.display());
            match s.final_mean_loss {
                Some(l) => println!("final mean loss {l:.6}"),
                None => println!("no training batches run"),
            }
        }
        Command::Index { .. } => {
            let (index, confusion) = pipeline::index(&config)?;
            println!("indexed {} objects into {}", index.len(), config.index.display());
            println!(
                "accuracy {:.4}, cross-supercategory {:.4}",
                confusion.accuracy,
                confusion.cross_supercategory_rate()
            );
        }
        Command::SynthEmbeddings { .. } => {
            let n = pipeline::synth(&config)?;
            println!("wrote {n} token vectors to {}", config.embeddings.display());
        }
        Command::Ingest { input, .. } => {
            let n = pipeline::ingest(&config, input)?;
            println!("ingested {n} token vectors into {}", config.embeddings.display());
        }
        Command::Ground { .. } => {
            let (run, files) = pipeline::ground(&config)?;
            print!("{}", f1_table(&run));
            println!("{} report files in {}", files.len(), config.report_dir.display());
        }
        Command::Report { .. } => {
            let files = pipeline::report(&config)?;
            println!("{} report files in {}", files.len(), config.report_dir.display());
        }
        Command::Config => print!("{}", config.to_toml()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
