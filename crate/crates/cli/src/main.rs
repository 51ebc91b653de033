use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use polydub::config::Config;
use polydub::pipeline::{Container, DubRequest, Dubber, WorkerPool};
use polydub::toydata::{build_corpus, ToySpec};
use polydub::LanguageTag;
use polydub_cli::{bench, register, server, train, TrainTarget};

#[derive(Parser)]
#[command(name = "polydub", version, about = "Multilingual text-to-talking-face synthesis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize speech for TEXT and lip-sync a registered source video to it.
    Dub {
        #[arg(long)]
        text: String,
        #[arg(long)]
        lang: LanguageTag,
        #[arg(long)]
        speaker: String,
        /// Id of a registered source video.
        #[arg(long)]
        source: String,
        #[arg(long)]
        out: PathBuf,
        /// Translate TEXT from this language first.
        #[arg(long)]
        translate_from: Option<LanguageTag>,
        #[arg(long, default_value = "models")]
        models: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// `image_sequence` or `mp4`; overrides the config.
        #[arg(long)]
        container: Option<Container>,
    },
    /// Time every stage over the requests in a corpus manifest.
    Bench {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long, default_value = "models")]
        models: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write the report table here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a model on the toy corpus.
    Train {
        target: TrainTarget,
        #[arg(long)]
        config: PathBuf,
    },
    /// Register a directory of 25 fps frames as a source video.
    Register {
        #[arg(long)]
        id: String,
        #[arg(long)]
        frames: PathBuf,
        #[arg(long, default_value = "models")]
        models: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write a synthetic corpus with audio, rendered faces and a manifest.
    ToyCorpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "ko,en")]
        langs: Vec<LanguageTag>,
        #[arg(long, default_value_t = 2)]
        speakers: usize,
        #[arg(long, default_value_t = 5)]
        utterances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print the default configuration.
    Config,
    /// Serve `POST /dub` and `GET /health`.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        #[arg(long, default_value = "models")]
        models: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        workers: usize,
        /// Requests allowed to wait for a free worker.
        #[arg(long, default_value_t = 16)]
        queue: usize,
        #[arg(long, default_value = "dub_output")]
        out: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> polydub::Result<Config> {
    path.map_or_else(|| Ok(Config::default()), Config::load)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Dub { text, lang, speaker, source, out, translate_from, models, config, container } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(c) = container {
                cfg.pipeline.container = c;
            }
            let dubber = Dubber::load(&models, cfg.pipeline)?;
            let req = DubRequest { text, language: lang, speaker_id: speaker, source_video_id: source, translate_from };
            let output = dubber.dub(&req, &out)?;
            println!("{}", serde_json::to_string_pretty(&output.response())?);
        }
        Command::Bench { manifest, reps, models, config, out } => {
            let cfg = load_config(config.as_deref())?;
            let report = bench(&models, &manifest, reps, &cfg)?;
            let table = report.to_tsv();
            print!("{table}");
            if let Some(path) = out {
                std::fs::write(&path, &table)?;
            }
        }
        Command::Train { target, config } => {
            let cfg = Config::load(&config)?;
            let path = train(target, &cfg)?;
            println!("{}", path.display());
        }
        Command::Register { id, frames, models, config } => {
            let cfg = load_config(config.as_deref())?;
            let n = register(&models, &id, &frames, &cfg)?;
            println!("registered {id}: {n} frames");
        }
        Command::ToyCorpus { out, langs, speakers, utterances, seed } => {
            let spec = ToySpec::new(speakers, langs, utterances, seed);
            let manifest = build_corpus(&spec, &out)?;
            println!("{} utterances in {}", manifest.rows.len(), out.display());
        }
        Command::Config => print!("{}", Config::default().to_toml()?),
        Command::Serve { addr, models, config, workers, queue, out } => {
            let cfg = load_config(config.as_deref())?;
            let bundles =
                (0..workers.max(1)).map(|_| Dubber::load(&models, cfg.pipeline.clone())).collect::<Result<Vec<_>, _>>()?;
            let app = server::router(WorkerPool::new(bundles, queue)?, out);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(&addr).await?;
                tracing::info!(%addr, "listening");
                axum::serve(listener, app).await
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
