//! The `marsad` command line.
//!
//! Machine-readable output (JSON, exports) goes to stdout, progress and
//! error text to stderr. Exit status: 0 success, 1 invalid input, 2 internal
//! failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::api::Service;
use crate::config::{Config, ConfigError, CONFIG_ENV};
use crate::connectors::{ConnectorError, Credentials, SearchRequest};
use crate::engine::{export_payload, Engine, EngineError, ExportFormat};
use crate::ingest::{PostSchema, SourceFormat};
use crate::store::{AnalysisKind, DatasetId, JobId, Store};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "marsad", version, about = "Social-media analytics engine")]
pub struct Cli {
    /// TOML config file.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Overrides `data_dir` from the config.
    #[arg(long, global = true)]
    pub data_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a file and store it as a dataset.
    Ingest {
        file: PathBuf,
        /// csv, tsv, json or jsonl; inferred from the extension if omitted.
        #[arg(long)]
        format: Option<String>,
        /// Schema as a JSON file path or inline JSON object.
        #[arg(long)]
        schema: Option<String>,
        #[arg(long)]
        name: Option<String>,
    },
    /// Run one analysis synchronously and print its payload.
    Analyze {
        dataset_id: String,
        #[arg(long)]
        kind: String,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Start the HTTP service.
    Serve,
    /// Write the report of a finished job.
    Export {
        job_id: String,
        #[arg(long, default_value = "json")]
        format: String,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Online data sources.
    Sources {
        #[command(subcommand)]
        command: SourcesCommand,
    },
    /// Lexicon feedback from annotations.
    Feedback {
        #[command(subcommand)]
        command: FeedbackCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum SourcesCommand {
    List,
    Search(SearchArgs),
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    pub source_id: String,
    #[arg(long)]
    pub query: String,
    #[arg(long, default_value_t = 100)]
    pub limit: usize,
    #[arg(long)]
    pub since: Option<chrono::DateTime<chrono::Utc>>,
    #[arg(long)]
    pub until: Option<chrono::DateTime<chrono::Utc>>,
    /// Access token for credentialed sources.
    #[arg(long, env = "MARSAD_SOURCE_TOKEN", hide_env_values = true)]
    pub token: Option<String>,
    /// Store the results as a dataset.
    #[arg(long)]
    pub save: bool,
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum FeedbackCommand {
    Apply { dataset_id: String },
}

/// A failed command: stable code, message, exit status and optional JSON
/// detail printed to stdout.
#[derive(Debug)]
pub struct CliError {
    pub code: String,
    pub message: String,
    pub exit: i32,
    pub detail: Option<serde_json::Value>,
}

impl CliError {
    fn invalid(code: &str, message: impl Into<String>) -> Self {
        CliError {
            code: code.into(),
            message: message.into(),
            exit: EXIT_INVALID,
            detail: None,
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        CliError {
            code: "INTERNAL".into(),
            message: message.into(),
            exit: EXIT_INTERNAL,
            detail: None,
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        let exit = if e.is_user_error() { EXIT_INVALID } else { EXIT_INTERNAL };
        let detail = match &e {
            EngineError::NothingAccepted { report } => Some(json!({ "validation_report": report })),
            _ => None,
        };
        CliError {
            code: e.code().into(),
            message: e.to_string(),
            exit,
            detail,
        }
    }
}

impl From<ConnectorError> for CliError {
    fn from(e: ConnectorError) -> Self {
        let exit = match e {
            ConnectorError::Unreachable { .. } | ConnectorError::BadResponse { .. } | ConnectorError::RateLimited(_) => {
                EXIT_INTERNAL
            }
            _ => EXIT_INVALID,
        };
        CliError {
            code: e.code().into(),
            message: e.to_string(),
            exit,
            detail: None,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::invalid(e.code(), e.to_string())
    }
}

impl From<crate::store::StoreError> for CliError {
    fn from(e: crate::store::StoreError) -> Self {
        EngineError::from(e).into()
    }
}

fn load_config(cli: &Cli) -> Result<Config, CliError> {
    let mut config = Config::resolve(cli.config.as_deref())?;
    if let Some(dir) = &cli.data_dir {
        config.data_dir = dir.clone();
    }
    Ok(config)
}

fn open_engine(config: &Config) -> Result<Engine, CliError> {
    let store = Store::open(&config.data_dir)?;
    Ok(Engine::new(Arc::new(store), config.engine_options()?))
}

fn read_schema(arg: Option<&str>) -> Result<PostSchema, CliError> {
    let Some(arg) = arg else {
        return Ok(PostSchema::default());
    };
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| CliError::invalid("INVALID_SCHEMA", format!("{arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| CliError::invalid("INVALID_SCHEMA", e.to_string()))
}

fn to_json_line(value: &impl serde::Serialize) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| CliError::internal(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

/// Execute a parsed command, writing machine output to `out` and progress
/// to `err`.
pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let config = load_config(&cli)?;
    let io = |e: std::io::Error| CliError::internal(e.to_string());
    match cli.command {
        Command::Ingest {
            file,
            format,
            schema,
            name,
        } => {
            let format = match format {
                Some(f) => f
                    .parse::<SourceFormat>()
                    .map_err(|e| CliError::invalid(e.code(), e.to_string()))?,
                None => SourceFormat::from_extension(&file)
                    .ok_or_else(|| CliError::invalid("UNKNOWN_FORMAT", "cannot infer format; pass --format"))?,
            };
            let schema = read_schema(schema.as_deref())?;
            let bytes = std::fs::read(&file)
                .map_err(|e| CliError::invalid("UNREADABLE_INPUT", format!("{}: {e}", file.display())))?;
            let name = name.unwrap_or_else(|| display_name(&file));
            let engine = open_engine(&config)?;
            writeln!(err, "ingesting {} as {format}", file.display()).map_err(io)?;
            let outcome = engine.ingest(&name, &bytes, format, &schema)?;
            writeln!(
                err,
                "dataset {}: {} accepted, {} rejected",
                outcome.dataset_id.as_str(),
                outcome.validation_report.accepted,
                outcome.validation_report.rejected.len()
            )
            .map_err(io)?;
            out.write_all(&to_json_line(&outcome)?).map_err(io)?;
        }
        Command::Analyze { dataset_id, kind, seed } => {
            let kind: AnalysisKind = kind
                .parse()
                .map_err(|_| CliError::invalid("INVALID_PARAMS", format!("unknown analysis kind `{kind}`")))?;
            let engine = open_engine(&config)?;
            let seed = seed.unwrap_or(config.seed);
            writeln!(err, "running {kind} on {dataset_id} (seed {seed})").map_err(io)?;
            let result = engine.analyze_now(&DatasetId::from(dataset_id), kind, seed)?;
            writeln!(err, "job {} done", result.job_id.as_str()).map_err(io)?;
            out.write_all(&export_payload(&result.payload, ExportFormat::Json)?)
                .map_err(io)?;
        }
        Command::Serve => serve(&config, err)?,
        Command::Export { job_id, format, out: path } => {
            let format: ExportFormat = format.parse().map_err(|e: String| CliError::invalid("INVALID_PARAMS", e))?;
            let engine = open_engine(&config)?;
            let bytes = engine.export(&JobId::from(job_id), format)?;
            match path {
                Some(p) => {
                    std::fs::write(&p, &bytes).map_err(io)?;
                    writeln!(err, "wrote {} bytes to {}", bytes.len(), p.display()).map_err(io)?;
                }
                None => out.write_all(&bytes).map_err(io)?,
            }
        }
        Command::Sources { command } => {
            let registry = config.source_registry();
            match command {
                SourcesCommand::List => {
                    out.write_all(&to_json_line(&registry.list_sources())?).map_err(io)?;
                }
                SourcesCommand::Search(a) => {
                    let request = SearchRequest {
                        query: a.query,
                        limit: a.limit,
                        since: a.since,
                        until: a.until,
                    };
                    let creds = a.token.as_deref().map(|t| Credentials::new().with("access_token", t));
                    let records = registry.search(&a.source_id, &request, creds.as_ref())?;
                    writeln!(err, "{} records from {}", records.len(), a.source_id).map_err(io)?;
                    if a.save {
                        let engine = open_engine(&config)?;
                        let name = a.name.unwrap_or_else(|| format!("{}: {}", a.source_id, request.query));
                        let outcome = engine.ingest_records(&name, records, &PostSchema::default())?;
                        out.write_all(&to_json_line(&outcome)?).map_err(io)?;
                    } else {
                        out.write_all(&to_json_line(&records)?).map_err(io)?;
                    }
                }
            }
        }
        Command::Feedback {
            command: FeedbackCommand::Apply { dataset_id },
        } => {
            let engine = open_engine(&config)?;
            let report = engine.apply_feedback(&DatasetId::from(dataset_id))?;
            writeln!(
                err,
                "lexicon v{} -> v{} ({} changes)",
                report.previous_version,
                report.lexicon_version,
                report.changes.len()
            )
            .map_err(io)?;
            out.write_all(&to_json_line(&report)?).map_err(io)?;
        }
    }
    Ok(())
}

fn display_name(file: &Path) -> String {
    file.file_name()
        .map_or_else(|| file.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn serve(config: &Config, err: &mut dyn Write) -> Result<(), CliError> {
    let service = Service::start(config).map_err(|e| match e {
        crate::api::ServiceError::Config(c) => c.into(),
        crate::api::ServiceError::NoTokens | crate::api::ServiceError::BadOrigin(_) => {
            CliError::invalid("INVALID_CONFIG", e.to_string())
        }
        other => CliError::internal(other.to_string()),
    })?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::internal(e.to_string()))?;
    let bind = config.server.bind.clone();
    let _ = writeln!(err, "serving on http://{bind}");
    runtime
        .block_on(async move {
            let listener = tokio::net::TcpListener::bind(&bind).await?;
            service
                .run(listener, async {
                    let _ = tokio::signal::ctrl_c().await;
                })
                .await
        })
        .map_err(|e| CliError::internal(e.to_string()))
}

/// Parse arguments, run, and report errors; returns the exit status.
pub fn main_with_args(args: impl IntoIterator<Item = std::ffi::OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INVALID,
            };
        }
    };
    let level = if matches!(cli.command, Command::Serve) { "info" } else { "warn" };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(level));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();

    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let (mut out, mut err) = (stdout.lock(), stderr.lock());
    match execute(cli, &mut out, &mut err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error[{}]: {}", e.code, e.message);
            let mut body = json!({"error": {"code": e.code, "message": e.message}});
            if let Some(detail) = e.detail {
                if let (Some(obj), serde_json::Value::Object(extra)) = (body["error"].as_object_mut(), detail) {
                    obj.extend(extra);
                }
            }
            let _ = writeln!(out, "{body}");
            e.exit
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(dir: &Path, args: &[&str]) -> (Result<(), CliError>, String, String) {
        let mut argv = vec!["marsad", "--data-dir", dir.to_str().unwrap()];
        argv.extend_from_slice(args);
        let cli = Cli::try_parse_from(argv).unwrap();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let r = execute(cli, &mut out, &mut err);
        (r, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn parses_every_subcommand() {
        for argv in [
            vec!["marsad", "ingest", "f.jsonl", "--format", "jsonl"],
            vec!["marsad", "analyze", "d", "--kind", "subtopics", "--seed", "42"],
            vec!["marsad", "serve", "--config", "x.toml"],
            vec!["marsad", "export", "j", "--format", "csv", "--out", "o.csv"],
            vec!["marsad", "sources", "search", "mock_local", "--query", "doha", "--limit", "5"],
            vec!["marsad", "feedback", "apply", "d"],
        ] {
            Cli::try_parse_from(&argv).unwrap_or_else(|e| panic!("{argv:?}: {e}"));
        }
    }

    #[test]
    fn ingest_analyze_export() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("p.csv");
        std::fs::write(
            &file,
            "id,text,timestamp\n1,good news from Doha,2024-01-01T00:00:00Z\n2,terrible traffic,2024-01-02T00:00:00Z\n",
        )
        .unwrap();
        let data = dir.path().join("data");
        let (r, out, err) = run(&data, &["ingest", file.to_str().unwrap()]);
        r.unwrap();
        assert!(err.contains("2 accepted"));
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        let id = v["dataset_id"].as_str().unwrap().to_string();

        let (r, out, err) = run(&data, &["analyze", &id, "--kind", "sentiment"]);
        r.unwrap();
        let job = err.lines().find_map(|l| l.strip_prefix("job ")).unwrap().split(' ').next().unwrap().to_string();
        let (r, exported, _) = run(&data, &["export", &job, "--format", "json"]);
        r.unwrap();
        assert_eq!(out, exported);
    }

    #[test]
    fn unknown_dataset_is_invalid() {
        let dir = tempfile::tempdir().unwrap();
        let (r, _, _) = run(dir.path(), &["analyze", "nope", "--kind", "wordcloud"]);
        let e = r.unwrap_err();
        assert_eq!(e.exit, EXIT_INVALID);
    }

    #[test]
    fn all_rejected_is_validation_failure() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("bad.csv");
        std::fs::write(&file, "id,text\n1,no timestamp\n").unwrap();
        let (r, _, _) = run(&dir.path().join("d"), &["ingest", file.to_str().unwrap()]);
        let e = r.unwrap_err();
        assert_eq!((e.code.as_str(), e.exit), ("VALIDATION_FAILED", EXIT_INVALID));
        assert!(e.detail.unwrap()["validation_report"]["rejected"].is_array());
    }

    #[test]
    fn stub_needs_token() {
        let dir = tempfile::tempdir().unwrap();
        let (r, _, _) = run(dir.path(), &["sources", "search", "credentialed_stub", "--query", "doha"]);
        assert_eq!(r.unwrap_err().code, "CREDENTIALS_REQUIRED");
    }
}
