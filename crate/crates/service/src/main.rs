use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use discovery_core::benchgen::{self, TaxonomySpec, AGENTS_FILE, QUERIES_FILE};
use discovery_core::eval::{self, AblationOptions, Assertion};
use discovery_core::{EngineConfig, Mode};
use discovery_service::config::parse_bind;
use discovery_service::{ApiConfig, AppState, Providers, ServiceError};

#[derive(Parser)]
#[command(name = "discovery", version, about = "Agent discovery: benchmark generation, indexing, querying and serving")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic benchmark corpus.
    Gen {
        #[arg(long, default_value_t = 154)]
        industries: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "data")]
        out: PathBuf,
    },
    /// Build the index over an agents file and report its size.
    Index {
        #[arg(long)]
        agents: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Run one query against an agents file.
    Query {
        #[arg(long)]
        agents: PathBuf,
        #[arg(long, short = 'k', default_value_t = 10)]
        k: usize,
        /// Print the full result as JSON.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        engine: EngineArgs,
        text: String,
    },
    /// Evaluate modes on a corpus and write report.json and report.csv.
    Eval {
        /// Corpus directory holding agents.jsonl and queries.jsonl. A fresh
        /// corpus is generated from --industries and --seed when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 16)]
        industries: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "full,no_maxsim,no_slm,mdr")]
        modes: Vec<Mode>,
        #[arg(long, default_value = "report")]
        out: PathBuf,
        /// Bound to enforce, e.g. "full.recall_at_10 >= 80". Repeatable.
        #[arg(long = "assert")]
        assertions: Vec<Assertion>,
        /// Also report the shuffled tag-lookup baseline.
        #[arg(long)]
        slm_sort: bool,
        #[arg(long, default_value_t = eval::DEFAULT_WARMUP)]
        warmup: usize,
        #[arg(long)]
        no_latency: bool,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Print the mean-pooling dilution table for orthonormal examples.
    Dilution {
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,64")]
        m: Vec<usize>,
        #[arg(long, default_value_t = discovery_core::model::DEFAULT_DIM)]
        dim: usize,
    },
    /// Serve the HTTP API.
    Serve {
        /// Defaults to GRAIL_BIND, then 0.0.0.0:8080.
        #[arg(long)]
        bind: Option<String>,
        /// Stage and build these agents before accepting requests.
        #[arg(long)]
        agents: Option<PathBuf>,
        #[arg(long, default_value_t = 2000)]
        deadline_ms: u64,
        #[arg(long, default_value_t = 64)]
        max_concurrent: usize,
        #[command(flatten)]
        engine: EngineArgs,
    },
}

#[derive(Args, Clone)]
struct EngineArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    dense_top_k: Option<usize>,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    max_syn: Option<usize>,
}

impl EngineArgs {
    fn config(&self) -> Result<EngineConfig> {
        let mut c = EngineConfig::default();
        if let Some(v) = self.alpha {
            c.alpha = v;
        }
        if let Some(v) = self.dense_top_k {
            c.dense_top_k = v;
        }
        if let Some(v) = self.mode {
            c.mode = v;
        }
        if let Some(v) = self.dim {
            c.dim = v;
        }
        if let Some(v) = self.max_syn {
            c.max_syn = v;
        }
        c.validate()?;
        Ok(c)
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(s) = cause.downcast_ref::<ServiceError>() {
            return match s {
                ServiceError::Config(_) => 2,
                ServiceError::Bind { .. } => 3,
                ServiceError::Io(_) => 1,
            };
        }
        if let Some(discovery_core::Error::Config(_)) = cause.downcast_ref::<discovery_core::Error>() {
            return 2;
        }
    }
    1
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen { industries, seed, out } => gen(industries, seed, &out)?,
        Command::Index { agents, engine } => {
            let config = engine.config()?;
            let cards = benchgen::read_agents(&agents)?;
            let t = Instant::now();
            let built = Providers::from_env(config.dim).build_engine(&config, cards, 1)?;
            let index = built.index();
            println!(
                "indexed {} agents, {} tags, dim {} in {:.1} ms",
                index.agents().len(),
                index.sparse().vocabulary_size(),
                config.dim,
                t.elapsed().as_secs_f64() * 1e3
            );
        }
        Command::Query { agents, k, json, engine, text } => {
            let mut config = engine.config()?;
            config.final_k = k;
            let built = Providers::from_env(config.dim).build_engine(&config, benchgen::read_agents(&agents)?, 1)?;
            let result = built.discover(&text)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&result)?);
            } else {
                println!("tags: {}", result.predicted_tags.join(", "));
                for (i, s) in result.ranked.iter().enumerate() {
                    println!(
                        "{:>3}  {:<12} final {:.4}  ctx {:.4}  res {:.4}",
                        i + 1,
                        s.agent_id,
                        s.final_score,
                        s.context_score,
                        s.resonance_score
                    );
                }
                println!("{:.2} ms", result.timings.total);
            }
        }
        Command::Eval { data, industries, seed, modes, out, assertions, slm_sort, warmup, no_latency, engine } => {
            let config = engine.config()?;
            let corpus = match data {
                Some(dir) => benchgen::load_corpus(dir.join(AGENTS_FILE), dir.join(QUERIES_FILE))?,
                None => benchgen::generate(&TaxonomySpec::new(seed, industries))?,
            };
            let built = Providers::from_env(config.dim).build_engine(&config, corpus.agents.clone(), 1)?;
            let options = AblationOptions { warmup, measure_latency: !no_latency };
            let mut report = eval::evaluate_engine(&built, &corpus, &modes, &options)?;
            if slm_sort {
                report.rows.push(eval::slm_sort_baseline(&built, &corpus, seed)?);
            }
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            std::fs::write(out.join("report.json"), report.to_json()?)?;
            std::fs::write(out.join("report.csv"), report.to_csv())?;
            print!("{}", report.to_table());
            let mut violated = 0;
            for a in &assertions {
                if let Err(msg) = a.check(&report) {
                    eprintln!("assertion failed: {msg}");
                    violated += 1;
                }
            }
            if violated > 0 {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Dilution { m, dim } => {
            let t = Instant::now();
            let rows = eval::dilution_demo(&m, dim)?;
            print!("{}", eval::dilution_table(&rows));
            eprintln!("{:.3} ms", t.elapsed().as_secs_f64() * 1e3);
        }
        Command::Serve { bind, agents, deadline_ms, max_concurrent, engine } => {
            let mut config = ApiConfig::from_env()?;
            if let Some(b) = bind {
                config.bind = parse_bind(&b)?;
            }
            config.deadline = Duration::from_millis(deadline_ms);
            config.max_concurrent = max_concurrent;
            config.engine = engine.config()?;
            config.validate()?;
            serve(config, agents)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn gen(industries: usize, seed: u64, out: &Path) -> Result<()> {
    let spec = TaxonomySpec::new(seed, industries);
    spec.validate()?;
    let corpus = benchgen::generate(&spec)?;
    corpus.write_dir(out)?;
    let stats = benchgen::corpus_stats(&corpus)?;
    std::fs::write(out.join("stats.json"), serde_json::to_string_pretty(&stats)?)?;
    println!(
        "wrote {} agents and {} queries to {} ({} unique tags, max {} agents per tag)",
        stats.agents,
        stats.queries,
        out.display(),
        stats.unique_tags,
        stats.max_agents_per_tag
    );
    Ok(())
}

fn serve(config: ApiConfig, agents: Option<PathBuf>) -> Result<()> {
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let addr: SocketAddr = config.bind;
        let engine_config = config.engine.clone();
        let state = AppState::new(config.clone(), Providers::from_env(config.engine.dim));
        if let Some(path) = agents {
            let cards = benchgen::read_agents(&path)?.into_iter().map(Ok).collect();
            let staged = state.stage(cards);
            if !staged.rejected.is_empty() {
                bail!("{} agents in {} were rejected", staged.rejected.len(), path.display());
            }
            let summary = state.build(engine_config).await?;
            tracing::info!(agents = summary.agents, build_ms = summary.build_ms, "initial index built");
        }
        let listener = discovery_service::bind(addr).await?;
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        discovery_service::serve(listener, state, shutdown).await?;
        Ok(())
    })
}
