use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hvd::commands::{self, EvalOptions, IndexOptions};
use hvd::enrich::{EnrichmentClient, HttpEnrichment};
use hvd::eval::{Experiment, DEFAULT_EXEMPLAR_SEED, DEFAULT_N};
use hvd::rfi::{Constraints, Rfi, TextConstraint};
use hvd::service::{self, AppState};
use hvd::synth::{synth_corpus, write_corpus, SyntheticCorpusConfig};
use hvd::{timefmt, Mode, Result, Store};
use hvd_core::TimeEncoding;

/// Hyperdimensional data discovery: encode records into binary hypervectors
/// and query them by attribute similarity.
#[derive(Parser)]
#[command(name = "hvd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct StoreArg {
    /// Store directory.
    #[arg(long, env = "HVD_STORE")]
    store: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Append JSON-lines records to a store.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// Embedding sidecar; defaults to `<input>.emb` when that exists.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[command(flatten)]
        store: StoreArg,
        /// Enrichment service for missing embeddings, sentiment and location.
        #[arg(long)]
        enrich_url: Option<String>,
    },
    /// Encode the stored records.
    Index {
        #[arg(long, value_parser = parse_dim)]
        dim: usize,
        /// Representation(s): mv, sv, or both comma-separated.
        #[arg(long, value_delimiter = ',', default_value = "mv")]
        mode: Vec<Mode>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = TimeArg::Level)]
        time_encoding: TimeArg,
        /// Number of time windows in level encoding.
        #[arg(long)]
        levels: Option<usize>,
        /// Encoded time range as START,END (ISO-8601 UTC).
        #[arg(long, value_parser = parse_range)]
        time_range: Option<[String; 2]>,
        #[command(flatten)]
        store: StoreArg,
    },
    /// Run one request for information against a store.
    Query(QueryArgs),
    /// Serve the HTTP API.
    Serve {
        #[command(flatten)]
        store: StoreArg,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        #[arg(long)]
        enrich_url: Option<String>,
        /// Require this value in the x-api-key header.
        #[arg(long, env = "HVD_API_KEY")]
        api_key: Option<String>,
    },
    /// Evaluation harness over a labeled store.
    Eval {
        #[arg(value_enum)]
        experiment: ExperimentArg,
        #[command(flatten)]
        store: StoreArg,
        /// Also write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        mode: Option<Vec<Mode>>,
        /// Matches labeled per topic in the semantic experiment.
        #[arg(long, default_value_t = DEFAULT_N)]
        n: usize,
        /// Seed choosing the exemplar records.
        #[arg(long, default_value_t = DEFAULT_EXEMPLAR_SEED)]
        exemplar_seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Generate a labeled synthetic corpus.
    Synth {
        #[arg(long, default_value_t = 3)]
        topics: usize,
        #[arg(long, default_value_t = 3000)]
        per_topic: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Records file; `.emb`, `.labels.jsonl` and `.corpus.json` are written beside it.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        embedding_dim: Option<usize>,
        /// Cosine distance between topic centroids.
        #[arg(long)]
        separation: Option<f64>,
        /// Expected cosine distance of a record from its centroid.
        #[arg(long)]
        spread: Option<f64>,
    },
}

#[derive(Args)]
struct QueryArgs {
    #[command(flatten)]
    store: StoreArg,
    /// Free-text search (needs --enrich-url for the embedding).
    #[arg(long, conflicts_with = "example")]
    text: Option<String>,
    /// Query by example: id of a stored record.
    #[arg(long)]
    example: Option<String>,
    #[arg(long = "hashtag")]
    hashtags: Vec<String>,
    #[arg(long)]
    language: Option<String>,
    #[arg(long)]
    location: Option<String>,
    /// negative, neutral or positive.
    #[arg(long)]
    sentiment: Option<String>,
    /// START,END (ISO-8601 UTC).
    #[arg(long, value_parser = parse_range)]
    time_range: Option<[String; 2]>,
    /// Per-attribute threshold, e.g. `--fuzz text=0.45`.
    #[arg(long, value_parser = parse_fuzz)]
    fuzz: Vec<(String, f64)>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    enrich_url: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TimeArg {
    Level,
    Components,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentArg {
    Semantic,
    Lexical,
    Sentiment,
    Timestamp,
    All,
    /// Per-attribute thresholds maximizing F1.
    Calibrate,
}

fn parse_dim(s: &str) -> std::result::Result<usize, String> {
    let d: usize = s.parse().map_err(|_| format!("bad dimension {s:?}"))?;
    if d == 0 || !d.is_multiple_of(64) {
        return Err(format!("dimension {d} must be a positive multiple of 64"));
    }
    Ok(d)
}

fn parse_fuzz(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected attr=x, got {s:?}"))?;
    let v: f64 = v.parse().map_err(|_| format!("bad threshold in {s:?}"))?;
    Ok((k.trim().to_string(), v))
}

fn client(url: Option<&str>) -> Option<Arc<dyn EnrichmentClient>> {
    url.map(|u| Arc::new(HttpEnrichment::new(u, Duration::from_secs(30))) as Arc<dyn EnrichmentClient>)
}

fn parse_range(s: &str) -> std::result::Result<[String; 2], String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected START,END, got {s:?}"))?;
    Ok([a.trim().to_string(), b.trim().to_string()])
}

/// Writes to stdout; a closed pipe ends output quietly.
fn out(s: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(s.as_bytes()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    out(&(serde_json::to_string_pretty(v)? + "\n"))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest {
            input,
            embeddings,
            store,
            enrich_url,
        } => {
            let store = Store::new(store.store);
            let embeddings = embeddings.or_else(|| {
                let mut p = input.as_os_str().to_owned();
                p.push(".emb");
                let p = PathBuf::from(p);
                p.exists().then_some(p)
            });
            let client = client(enrich_url.as_deref());
            let report = commands::ingest_file(&store, &input, embeddings.as_deref(), client.as_deref())?;
            for e in &report.rejected {
                eprintln!("rejected {e}");
            }
            print_json(&report)
        }
        Command::Index {
            dim,
            mode,
            seed,
            time_encoding,
            levels,
            time_range,
            store,
        } => {
            let time_range = match time_range {
                Some([a, b]) => Some((timefmt::parse(&a)?, timefmt::parse(&b)?)),
                None => None,
            };
            let opts = IndexOptions {
                dim,
                modes: mode,
                seed,
                time_encoding: match time_encoding {
                    TimeArg::Level => TimeEncoding::Level,
                    TimeArg::Components => TimeEncoding::Components,
                },
                levels,
                time_range,
            };
            let summary = commands::index(&Store::new(store.store), &opts)?;
            print_json(&summary)
        }
        Command::Query(q) => {
            let store = Store::new(q.store.store);
            let engine = store.load_engine()?;
            let text = match (q.text, q.example) {
                (Some(t), _) => Some(TextConstraint::Free(t)),
                (None, Some(id)) => Some(TextConstraint::Example { example: id }),
                _ => None,
            };
            let rfi = Rfi {
                constraints: Constraints {
                    text,
                    hashtags: (!q.hashtags.is_empty()).then_some(q.hashtags),
                    language: q.language,
                    location: q.location,
                    sentiment_class: q.sentiment,
                    time_range: q.time_range,
                },
                fuzziness: q.fuzz.into_iter().collect(),
                mode: q.mode,
                k: q.k,
            };
            let client = client(q.enrich_url.as_deref());
            let resp = engine.rfi(&rfi, client.as_deref())?;
            if q.json {
                print_json(&resp)
            } else {
                out(&commands::match_table(&engine, &resp))
            }
        }
        Command::Serve {
            store,
            addr,
            enrich_url,
            api_key,
        } => {
            let store = Store::new(store.store);
            let engine = store.load_engine()?;
            log::info!("loaded {} records from {}", engine.len(), store.dir().display());
            let state = Arc::new(AppState::new(engine, Some(store), client(enrich_url.as_deref())).with_api_key(api_key));
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(&addr).await?;
                eprintln!("listening on http://{}", listener.local_addr()?);
                service::serve(listener, state).await
            })?;
            Ok(())
        }
        Command::Eval {
            experiment,
            store,
            report,
            mode,
            n,
            exemplar_seed,
            json,
        } => {
            let store = Store::new(store.store);
            let experiment = match experiment {
                ExperimentArg::Calibrate => {
                    let cal = commands::calibrate(&store, mode)?;
                    if let Some(p) = report {
                        std::fs::write(p, serde_json::to_string_pretty(&cal)? + "\n")?;
                    }
                    if json {
                        return print_json(&cal);
                    }
                    let mut t = String::from("  mode  attribute   threshold  f1\n");
                    for c in cal {
                        t += &format!("  {:<4}  {:<10}  {:.3}      {:.4}\n", c.mode, c.attribute, c.threshold, c.f1);
                    }
                    return out(&t);
                }
                ExperimentArg::Semantic => Experiment::Semantic,
                ExperimentArg::Lexical => Experiment::Lexical,
                ExperimentArg::Sentiment => Experiment::Sentiment,
                ExperimentArg::Timestamp => Experiment::Timestamp,
                ExperimentArg::All => Experiment::All,
            };
            let r = commands::eval(
                &store,
                &EvalOptions {
                    experiment,
                    modes: mode,
                    n,
                    seed: exemplar_seed,
                },
            )?;
            if let Some(p) = report {
                std::fs::write(p, serde_json::to_string_pretty(&r)? + "\n")?;
            }
            if json {
                print_json(&r)
            } else {
                out(&r.to_table())
            }
        }
        Command::Synth {
            topics,
            per_topic,
            seed,
            out,
            embedding_dim,
            separation,
            spread,
        } => {
            let d = SyntheticCorpusConfig::default();
            let cfg = SyntheticCorpusConfig {
                topics,
                per_topic,
                seed,
                embedding_dim: embedding_dim.unwrap_or(d.embedding_dim),
                separation: separation.unwrap_or(d.separation),
                spread: spread.unwrap_or(d.spread),
                ..d
            };
            let corpus = synth_corpus(&cfg)?;
            let files = write_corpus(&corpus, &out)?;
            eprintln!(
                "wrote {} records to {} ({}, {}, {})",
                corpus.records.len(),
                files.records.display(),
                files.embeddings.display(),
                files.labels.display(),
                files.config.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
