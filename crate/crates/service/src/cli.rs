//! Command-line entry point. Exit codes: 0 success, 1 failure, 2 usage.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thmdx_core::eval::Level;
use thmdx_core::index::SearchFilters;

use crate::config::ServiceConfig;
use crate::engine::{SearchEngine, SearchRequest};
use crate::evaluation::{run_eval, EvalOptions};
use crate::pipeline;
use crate::providers::Providers;
use crate::ServiceError;

#[derive(Debug, Parser)]
#[command(
    name = "thmdx",
    version,
    about = "Semantic search over theorem statements"
)]
pub struct Cli {
    /// Configuration file.
    #[arg(
        long,
        short,
        global = true,
        env = "THMDX_CONFIG",
        default_value = "thmdx.toml"
    )]
    pub config: PathBuf,
    /// More log output (-v debug, -vv trace). RUST_LOG takes precedence.
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract theorem records from LaTeX, wikitext and JSON-lines sources.
    Ingest {
        /// Files or directories; defaults to `corpus_paths` from the config.
        paths: Vec<PathBuf>,
    },
    /// Generate slogans for records that do not have one.
    Sloganize,
    /// Embed slogans that do not have a vector.
    Embed,
    /// Build and save the vector index.
    Index,
    /// Run ingest, sloganize, embed and index in order.
    Build,
    /// Serve the HTTP API.
    Serve {
        /// Overrides `listen_address`.
        #[arg(long)]
        listen: Option<String>,
    },
    /// Query the index from the command line; prints the JSON response.
    Search {
        query: String,
        #[arg(long)]
        k: Option<usize>,
        /// Filters as JSON, e.g. '{"thm_types":["lemma"]}'.
        #[arg(long)]
        filters: Option<String>,
        #[arg(long)]
        citation_weight: Option<f64>,
        #[arg(long)]
        rerank: bool,
    },
    /// Compute P@k, Hit@k and MRR@k at theorem and paper level.
    Eval {
        /// Gold labels, JSON lines {query_id, query_text, gold_record_id, gold_doc_id}.
        #[arg(long)]
        golds: PathBuf,
        /// Run files to grade; without them the configured index is queried.
        #[arg(long, num_args = 1..)]
        runs: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "1,10,20")]
        k: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "theorem,paper")]
        levels: Vec<Level>,
        /// Output directory; defaults to `<work_dir>/eval`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn init_tracing(verbose: u8) {
    use tracing_subscriber::EnvFilter;
    let default = match verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(default));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
}

/// Parse `args` (including the program name) and run the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    init_tracing(cli.verbose);
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), ServiceError> {
    let load = || ServiceConfig::load(&cli.config);
    match cli.command {
        Command::Ingest { paths } => {
            let config = load()?;
            let report = pipeline::ingest(&config, &paths)?;
            let t = &report.totals;
            println!(
                "documents={} records={} filtered_short={} filtered_suffix={} unmatched_delimiters={} nested={} errors={}",
                report.documents,
                report.records,
                t.filtered_short,
                t.filtered_suffix,
                t.unmatched_delimiters,
                t.nested,
                report.errors.len()
            );
            if report.records == 0 {
                return Err(ServiceError::NoRecords);
            }
        }
        Command::Sloganize => {
            let config = load()?;
            let s = pipeline::sloganize(&config, &Providers::from_config(&config))?;
            println!(
                "slogans: new={} existing={} failed={}",
                s.done, s.skipped, s.failed
            );
        }
        Command::Embed => {
            let config = load()?;
            let s = pipeline::embed(&config, &Providers::from_config(&config))?;
            println!(
                "embeddings: new={} existing={} failed={}",
                s.done, s.skipped, s.failed
            );
        }
        Command::Index => {
            let config = load()?;
            let s = pipeline::build_index(&config)?;
            println!(
                "index: count={} missing={} dimension={}",
                s.manifest.count, s.missing, s.manifest.dimension
            );
        }
        Command::Build => {
            let config = load()?;
            let s = pipeline::build_all(&config, &Providers::from_config(&config))?;
            println!(
                "index: count={} missing={} dimension={}",
                s.manifest.count, s.missing, s.manifest.dimension
            );
        }
        Command::Serve { listen } => {
            let mut config = load()?;
            if let Some(addr) = listen {
                config.listen_address = addr;
            }
            let runtime = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .map_err(|e| ServiceError::io("tokio runtime", e))?;
            runtime.block_on(crate::api::serve(config))?;
        }
        Command::Search {
            query,
            k,
            filters,
            citation_weight,
            rerank,
        } => {
            let config = load()?;
            let filters = filters
                .map(|f| serde_json::from_str::<SearchFilters>(&f))
                .transpose()
                .map_err(|e| ServiceError::Invalid(format!("--filters: {e}")))?;
            let engine = SearchEngine::open(&config, &Providers::from_config(&config))?;
            let request = SearchRequest {
                query,
                k,
                filters,
                citation_weight,
                use_reranker: rerank.then_some(true),
            };
            let response = engine
                .search(&request)
                .map_err(|e| ServiceError::Invalid(e.to_string()))?;
            println!(
                "{}",
                serde_json::to_string_pretty(&response).expect("response serializes")
            );
        }
        Command::Eval {
            golds,
            runs,
            k,
            levels,
            out,
        } => {
            let needs_index = runs.is_empty();
            let config = if needs_index || out.is_none() {
                Some(load()?)
            } else {
                None
            };
            let out_dir =
                out.unwrap_or_else(|| config.as_ref().expect("loaded").work_dir.join("eval"));
            let options = EvalOptions {
                golds,
                runs,
                ks: k,
                levels,
                out_dir: out_dir.clone(),
            };
            let outcome = run_eval(&options, || {
                let config = config.as_ref().expect("loaded when no runs are given");
                SearchEngine::open(config, &Providers::from_config(config))
            })?;
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", outcome.report.to_text());
            println!("reports written to {}", out_dir.display());
        }
    }
    Ok(())
}
