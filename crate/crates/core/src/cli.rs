//! Command-line driver. Every subcommand is a thin mapping onto a library
//! operation; artifacts travel between steps as JSON files.
//!
//! Exit codes: 0 on success, 1 on a usage or contract error, 2 on an I/O
//! error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::corpus::{build_encoded_corpus, ingest, CorpusError, EncodedCorpus, IngestManifest, PreprocessConfig, SectionFilter};
use crate::lda::{run_lda, LdaError, LdaParams, TopicModel, DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_SEED, DEFAULT_SWEEPS, DEFAULT_TOP_N_WORDS};
use crate::server::{ServeError, ServerConfig, DEFAULT_EVIDENCE_DOCS};
use crate::topicsim::{compare_grid_with_models, Comparison, TopicSimError, DEFAULT_THRESHOLD};
use crate::workflow::{
    export_tables, load_project, save_project, Action, Attachment, CategoryKind, ErrorClass, Export, ExportFormat, Project,
    WorkflowError, DEFAULT_PRUNE_THRESHOLD,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Lda(#[from] LdaError),
    #[error(transparent)]
    TopicSim(#[from] TopicSimError),
    #[error(transparent)]
    Workflow(#[from] WorkflowError),
    #[error(transparent)]
    Serve(#[from] ServeError),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write output: {0}")]
    Output(#[source] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Output(_) => 2,
            CliError::Corpus(CorpusError::Io { .. }) => 2,
            CliError::Workflow(e) if e.class() == ErrorClass::Io => 2,
            CliError::Serve(ServeError::Bind { .. } | ServeError::Serve(_)) => 2,
            CliError::Serve(ServeError::Store(_)) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "groundwork", version, about = "Topic-model-assisted qualitative coding")]
struct Cli {
    /// JSON object whose keys are long flag names; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read a directory of .txt files or a JSONL file into an encoded corpus.
    Ingest(IngestArgs),
    /// Fit a topic model.
    Model(ModelArgs),
    /// Fit one model per number of topics and compare their topic sets.
    Compare(CompareArgs),
    /// Show a model's topics with their top words and top documents.
    Topics(TopicsArgs),
    /// Coding workflow on a project file.
    Project(ProjectArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    source: PathBuf,
    /// Preprocessing options as a JSON file.
    #[arg(long, value_name = "FILE")]
    preprocess: Option<PathBuf>,
    /// Drop documents carrying this section tag (repeatable).
    #[arg(long = "exclude-section", value_name = "TAG")]
    exclude_section: Vec<String>,
    /// Keep only documents carrying one of these section tags (repeatable).
    #[arg(long = "include-section", value_name = "TAG")]
    include_section: Vec<String>,
    /// Minimum number of documents a word must occur in [default: 2].
    #[arg(long = "min-df")]
    min_df: Option<usize>,
    /// Disable stemming.
    #[arg(long = "no-stem")]
    no_stem: bool,
    /// Write the corpus here and print a summary instead.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PriorArgs {
    /// Document-topic prior [default: 0.5].
    #[arg(long)]
    alpha: Option<f64>,
    /// Topic-word prior [default: 0.02].
    #[arg(long)]
    beta: Option<f64>,
    /// Top words kept per topic [default: 10].
    #[arg(long)]
    words: Option<usize>,
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, value_name = "FILE")]
    corpus: Option<PathBuf>,
    #[arg(long)]
    topics: Option<usize>,
    #[command(flatten)]
    priors: PriorArgs,
    /// Write the model here and print a summary instead.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Print the document-topic matrix as CSV.
    #[arg(long)]
    csv: bool,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long, value_name = "FILE")]
    corpus: Option<PathBuf>,
    /// Comma-separated numbers of topics, e.g. 40,50,60.
    #[arg(long, value_delimiter = ',')]
    topics: Vec<usize>,
    /// Shared top words needed for two topics to match [default: 5].
    #[arg(long)]
    threshold: Option<usize>,
    #[command(flatten)]
    priors: PriorArgs,
    /// Also save every fitted model in this directory.
    #[arg(long = "models-dir", value_name = "DIR")]
    models_dir: Option<PathBuf>,
    /// Print the coverage matrix as CSV.
    #[arg(long)]
    csv: bool,
}

#[derive(Debug, Args)]
struct TopicsArgs {
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    #[arg(long)]
    words: Option<usize>,
    /// Top documents listed per topic [default: 5].
    #[arg(long)]
    docs: Option<usize>,
    #[arg(long)]
    csv: bool,
}

#[derive(Debug, Args)]
struct ProjectArgs {
    /// Project file to read and update.
    #[arg(long, global = true, value_name = "FILE")]
    project: Option<PathBuf>,
    #[command(subcommand)]
    op: ProjectOp,
}

#[derive(Debug, Subcommand)]
enum ProjectOp {
    /// Start a project from a corpus and a model fitted on it.
    Create {
        #[arg(long, value_name = "FILE")]
        corpus: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        model: Option<PathBuf>,
    },
    /// Print the project.
    Show,
    /// Remove a raw code from further analysis, with a reason.
    MarkOutlier {
        #[arg(long)]
        topic: usize,
        #[arg(long)]
        reason: String,
    },
    /// Record one expert's label and 1-5 rating for a code.
    Label {
        #[arg(long)]
        expert: String,
        #[arg(long)]
        topic: usize,
        #[arg(long)]
        label: String,
        #[arg(long, allow_negative_numbers = true)]
        rating: i64,
    },
    /// Set the label the researcher settled on for a code.
    AggregateLabel {
        #[arg(long)]
        topic: usize,
        #[arg(long)]
        label: String,
    },
    /// Remove codes whose average rating is below the threshold.
    PruneRated {
        /// [default: 2]
        #[arg(long)]
        threshold: Option<f64>,
    },
    #[command(subcommand)]
    /// Create, rename, retype and fill categories.
    Category(CategoryOp),
    /// Delete categories holding fewer than two codes.
    PruneSingletons,
    #[command(subcommand)]
    /// Create aggregate dimensions and group categories under them.
    Dimension(DimensionOp),
    /// Attach a note to the project, a code, a category or a dimension.
    Memo {
        #[arg(long)]
        author: String,
        #[arg(long)]
        text: String,
        #[arg(long, conflicts_with_all = ["category", "dimension"])]
        code: Option<usize>,
        #[arg(long, conflicts_with = "dimension")]
        category: Option<u64>,
        #[arg(long)]
        dimension: Option<u64>,
    },
    /// Move to the next coding stage.
    Advance,
    /// Print the results tables; CSV needs --table.
    Export {
        #[arg(long, value_parser = ["2", "3"])]
        table: Option<String>,
        #[arg(long)]
        csv: bool,
    },
}

#[derive(Debug, Subcommand)]
enum CategoryOp {
    Create {
        #[arg(long)]
        name: String,
        #[arg(long, default_value = "core", value_parser = parse_kind)]
        kind: CategoryKind,
    },
    Rename {
        #[arg(long)]
        category: u64,
        #[arg(long)]
        name: String,
    },
    Kind {
        #[arg(long)]
        category: u64,
        #[arg(long, value_parser = parse_kind)]
        kind: CategoryKind,
    },
    Assign {
        #[arg(long)]
        category: u64,
        #[arg(long)]
        topic: usize,
    },
    Unassign {
        #[arg(long)]
        category: u64,
        #[arg(long)]
        topic: usize,
    },
}

#[derive(Debug, Subcommand)]
enum DimensionOp {
    Create {
        #[arg(long)]
        name: String,
    },
    Assign {
        #[arg(long)]
        dimension: u64,
        #[arg(long)]
        category: u64,
    },
    Unassign {
        #[arg(long)]
        dimension: u64,
        #[arg(long)]
        category: u64,
    },
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// [default: 127.0.0.1:8080]
    #[arg(long)]
    bind: Option<std::net::SocketAddr>,
    /// [default: groundwork-data]
    #[arg(long = "data-dir", value_name = "DIR")]
    data_dir: Option<PathBuf>,
    /// [default: 2]
    #[arg(long)]
    workers: Option<usize>,
}

fn parse_kind(s: &str) -> Result<CategoryKind, String> {
    match s.to_ascii_lowercase().as_str() {
        "core" => Ok(CategoryKind::Core),
        "generic" => Ok(CategoryKind::Generic),
        _ => Err(format!("expected core or generic, got {s:?}")),
    }
}

/// Values from `--config`. Keys are long flag names; `-` and `_` are interchangeable.
struct Config(Map<String, Value>);

impl Config {
    fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Config(Map::new()));
        };
        match serde_json::from_str(&read(path)?) {
            Ok(Value::Object(map)) => Ok(Config(map)),
            Ok(_) => Err(CliError::Usage(format!("{}: config must be a JSON object", path.display()))),
            Err(e) => Err(CliError::Usage(format!("{}: {e}", path.display()))),
        }
    }

    fn get<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>, CliError> {
        let value = self.0.get(key).or_else(|| self.0.get(&key.replace('-', "_")));
        value
            .map(|v| {
                serde_json::from_value(v.clone())
                    .map_err(|e| CliError::Usage(format!("config key {key:?}: {e}")))
            })
            .transpose()
    }

    fn opt<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    /// `flag` if given, else the config value, else `default`.
    fn pick<T: DeserializeOwned>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.opt(flag, key)?.unwrap_or(default))
    }

    fn require<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<T, CliError> {
        self.opt(flag, key)?
            .ok_or_else(|| CliError::Usage(format!("missing required --{key}")))
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn load_corpus(path: &Path) -> Result<EncodedCorpus, CliError> {
    Ok(EncodedCorpus::from_json(&read(path)?)?)
}

fn load_model(path: &Path) -> Result<TopicModel, CliError> {
    Ok(TopicModel::from_json(&read(path)?)?)
}

fn emit_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| CliError::Output(e.into()))?;
    writeln!(out).map_err(CliError::Output)
}

fn emit_text(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(CliError::Output)
}

fn lda_params(config: &Config, topics: usize, priors: &PriorArgs) -> Result<LdaParams, CliError> {
    Ok(LdaParams {
        num_topics: topics,
        alpha: config.pick(priors.alpha, "alpha", DEFAULT_ALPHA)?,
        beta: config.pick(priors.beta, "beta", DEFAULT_BETA)?,
        sweeps: config.pick(priors.sweeps, "sweeps", DEFAULT_SWEEPS)?,
        seed: config.pick(priors.seed, "seed", DEFAULT_SEED)?,
        top_n_words: config.pick(priors.words, "words", DEFAULT_TOP_N_WORDS)?,
        averaging: None,
    })
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code. Results go to `out`, diagnostics to `err`.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{}", e.render());
            return 0;
        }
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return 1;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let config = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest(args) => run_ingest(&config, args, out),
        Command::Model(args) => run_model(&config, args, out),
        Command::Compare(args) => run_compare(&config, args, out),
        Command::Topics(args) => run_topics(&config, args, out),
        Command::Project(args) => run_project(&config, args, out),
        Command::Serve(args) => run_serve(&config, args),
    }
}

fn run_ingest(config: &Config, args: IngestArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut preprocess: PreprocessConfig = match config.opt(args.preprocess, "preprocess")? {
        None => PreprocessConfig::default(),
        Some(p) => serde_json::from_str(&read(&p)?)
            .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?,
    };
    let exclude: Vec<String> = match args.exclude_section {
        v if v.is_empty() => config.get("exclude-section")?.unwrap_or_default(),
        v => v,
    };
    let include: Vec<String> = match args.include_section {
        v if v.is_empty() => config.get("include-section")?.unwrap_or_default(),
        v => v,
    };
    if !exclude.is_empty() || !include.is_empty() {
        preprocess.section_filter = Some(SectionFilter {
            include: include.into_iter().collect(),
            exclude: exclude.into_iter().collect(),
        });
    }
    preprocess.min_document_frequency =
        config.pick(args.min_df, "min-df", preprocess.min_document_frequency)?;
    if args.no_stem || config.get::<bool>("no-stem")?.unwrap_or(false) {
        preprocess.stemming_enabled = false;
    }

    let raw = ingest(&args.source, &IngestManifest::default())?;
    let corpus = build_encoded_corpus(&raw, &preprocess)?;
    match config.opt(args.out, "out")? {
        None => emit_json(out, &corpus),
        Some(p) => {
            write_file(&p, &corpus.to_json())?;
            emit_json(
                out,
                &json!({
                    "id": corpus.id,
                    "path": p,
                    "num_docs": corpus.num_docs(),
                    "vocab_size": corpus.vocab_size(),
                    "num_tokens": corpus.num_tokens(),
                    "ingest": raw.report,
                    "preprocess": corpus.report,
                }),
            )
        }
    }
}

fn run_model(config: &Config, args: ModelArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let corpus = load_corpus(&config.require(args.corpus, "corpus")?)?;
    let topics = config.require(args.topics, "topics")?;
    let params = lda_params(config, topics, &args.priors)?;
    let model = run_lda(&corpus, &params)?;
    if let Some(path) = config.opt::<PathBuf>(args.out, "out")? {
        write_file(&path, &model.to_json())?;
        if !args.csv {
            return emit_json(
                out,
                &json!({
                    "id": model.id,
                    "path": path,
                    "params": model.params,
                    "top_words": model.top_words,
                    "final_log_likelihood": model.log_likelihood_trace.last(),
                }),
            );
        }
    }
    if args.csv {
        emit_text(out, &model.theta_csv())
    } else {
        emit_json(out, &model)
    }
}

fn run_compare(config: &Config, args: CompareArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let corpus = load_corpus(&config.require(args.corpus, "corpus")?)?;
    let topics: Vec<usize> = if args.topics.is_empty() {
        config.require(None, "topics")?
    } else {
        args.topics
    };
    let threshold = config.pick(args.threshold, "threshold", DEFAULT_THRESHOLD)?;
    let first = *topics
        .first()
        .ok_or_else(|| CliError::Usage("--topics needs at least two values".into()))?;
    let params = lda_params(config, first, &args.priors)?;
    let (grid, models) = compare_grid_with_models(&corpus, &topics, &params, threshold)?;
    if let Some(dir) = config.opt::<PathBuf>(args.models_dir, "models-dir")? {
        std::fs::create_dir_all(&dir).map_err(|source| CliError::Io {
            path: dir.clone(),
            source,
        })?;
        for model in &models {
            write_file(&dir.join(format!("model-k{}.json", model.num_topics)), &model.to_json())?;
        }
    }
    let comparison = Comparison::new(&corpus.id, grid)?;
    if args.csv {
        emit_text(out, &comparison.grid.to_csv())
    } else {
        emit_json(out, &comparison)
    }
}

fn run_topics(config: &Config, args: TopicsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let model = load_model(&config.require(args.model, "model")?)?;
    let words = config.pick(args.words, "words", model.params.top_n_words)?;
    let docs = config.pick(args.docs, "docs", DEFAULT_EVIDENCE_DOCS)?;
    if args.csv {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(["topic_id", "words"])
            .map_err(|e| CliError::Output(e.into()))?;
        for k in 0..model.num_topics {
            let top = model.top_words(k, words)?;
            writer
                .write_record([k.to_string(), top.join(" ")])
                .map_err(|e| CliError::Output(e.into()))?;
        }
        let bytes = writer.into_inner().map_err(|e| CliError::Output(e.into_error()))?;
        return emit_text(out, &String::from_utf8_lossy(&bytes));
    }
    let topics = (0..model.num_topics)
        .map(|k| {
            let scored = model.top_words_scored(k, words)?;
            let documents = model.top_documents(k, docs)?;
            Ok(json!({
                "topic_id": k,
                "words": scored.iter().map(|(w, _)| w).collect::<Vec<_>>(),
                "probabilities": scored.iter().map(|(_, p)| p).collect::<Vec<_>>(),
                "documents": documents
                    .iter()
                    .map(|(doc_id, theta)| json!({"doc_id": doc_id, "theta": theta}))
                    .collect::<Vec<_>>(),
            }))
        })
        .collect::<Result<Vec<_>, LdaError>>()?;
    emit_json(out, &topics)
}

fn run_project(config: &Config, args: ProjectArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let path: PathBuf = config.require(args.project, "project")?;
    let action = match args.op {
        ProjectOp::Create { corpus, model } => {
            if path.exists() {
                return Err(CliError::Usage(format!("{} already exists", path.display())));
            }
            let corpus = load_corpus(&config.require(corpus, "corpus")?)?;
            let model = load_model(&config.require(model, "model")?)?;
            let project = Project::create(&corpus, &model)?;
            save_project(&project, &path)?;
            return emit_json(out, &project);
        }
        ProjectOp::Show => return emit_json(out, &load_project(&path)?),
        ProjectOp::Export { table, csv } => {
            let project = load_project(&path)?;
            if !csv {
                let Export::Json(text) = export_tables(&project, ExportFormat::Json) else {
                    unreachable!("JSON export")
                };
                return emit_text(out, &format!("{text}\n"));
            }
            let Export::Csv { table2, table3 } = export_tables(&project, ExportFormat::Csv) else {
                unreachable!("CSV export")
            };
            return match table.as_deref() {
                Some("2") => emit_text(out, &table2),
                Some("3") => emit_text(out, &table3),
                _ => Err(CliError::Usage("--csv export needs --table 2 or --table 3".into())),
            };
        }
        ProjectOp::MarkOutlier { topic, reason } => Action::MarkOutlier {
            topic_id: topic,
            reason,
        },
        ProjectOp::Label {
            expert,
            topic,
            label,
            rating,
        } => Action::SubmitExpertLabel {
            expert_id: expert,
            topic_id: topic,
            label,
            rating,
        },
        ProjectOp::AggregateLabel { topic, label } => Action::SetAggregateLabel {
            topic_id: topic,
            label,
        },
        ProjectOp::PruneRated { threshold } => Action::PruneLowRated {
            threshold: config.pick(threshold, "threshold", DEFAULT_PRUNE_THRESHOLD)?,
        },
        ProjectOp::Category(op) => match op {
            CategoryOp::Create { name, kind } => Action::CreateCategory { name, kind },
            CategoryOp::Rename { category, name } => Action::RenameCategory {
                category_id: category,
                name,
            },
            CategoryOp::Kind { category, kind } => Action::SetCategoryKind {
                category_id: category,
                kind,
            },
            CategoryOp::Assign { category, topic } => Action::AssignCode {
                category_id: category,
                topic_id: topic,
            },
            CategoryOp::Unassign { category, topic } => Action::UnassignCode {
                category_id: category,
                topic_id: topic,
            },
        },
        ProjectOp::PruneSingletons => Action::PruneSingletonCategories,
        ProjectOp::Dimension(op) => match op {
            DimensionOp::Create { name } => Action::CreateDimension { name },
            DimensionOp::Assign {
                dimension,
                category,
            } => Action::AssignCategory {
                dimension_id: dimension,
                category_id: category,
            },
            DimensionOp::Unassign {
                dimension,
                category,
            } => Action::UnassignCategory {
                dimension_id: dimension,
                category_id: category,
            },
        },
        ProjectOp::Memo {
            author,
            text,
            code,
            category,
            dimension,
        } => Action::AddMemo {
            attached_to: match (code, category, dimension) {
                (Some(t), _, _) => Attachment::Code(t),
                (_, Some(c), _) => Attachment::Category(c),
                (_, _, Some(d)) => Attachment::Dimension(d),
                _ => Attachment::Project,
            },
            author,
            text,
        },
        ProjectOp::Advance => Action::AdvanceStage,
    };
    let mut project = load_project(&path)?;
    let outcome = project.apply(action)?;
    save_project(&project, &path)?;
    emit_json(out, &outcome)
}

fn run_serve(config: &Config, args: ServeArgs) -> Result<(), CliError> {
    let defaults = ServerConfig::default();
    let server = ServerConfig {
        bind: config.pick(args.bind, "bind", defaults.bind)?,
        data_dir: config.pick(args.data_dir, "data-dir", defaults.data_dir)?,
        workers: config.pick(args.workers, "workers", defaults.workers)?,
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|source| CliError::Io {
        path: server.data_dir.clone(),
        source,
    })?;
    runtime.block_on(crate::server::serve(server))?;
    Ok(())
}
