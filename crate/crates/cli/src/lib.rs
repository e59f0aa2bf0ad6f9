//! The `signcoach` command line.
//!
//! Every subcommand is deterministic for a given `--seed`: identical
//! invocations write identical bytes. JSON goes to stdout with a stable key
//! order; errors are printed as `{ "code", "message", "detail" }` with exit
//! code 2.

pub mod config;
pub mod error;
pub mod errorspec;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::Serialize;
use signcoach_core::driver::{scripted_event, SessionDriver};
use signcoach_core::format::{lesson_to_json, library_to_json, parse_lesson, parse_library, SignFile};
use signcoach_core::handshape::HandshapeLibrary;
use signcoach_core::pipeline::attempt_pipeline;
use signcoach_core::samples::sample_library;
use signcoach_core::session::{Lesson, SessionEvent, SessionLog};
use signcoach_core::synth::{synth, ErrorSpec};
use signcoach_core::template::SignTemplate;
use signcoach_service::api::{AppState, ServiceConfig};
use signcoach_service::store::{Collection, Store};

use crate::config::{FileConfig, Flags, Settings};
use crate::error::CliError;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "signcoach", version, about = "Sign practice: compare attempts with templates")]
pub struct Cli {
    /// Store directory (falls back to the config file, then SIGNCOACH_STORE).
    #[arg(long, global = true)]
    pub store: Option<PathBuf>,
    /// Seed for synthetic attempts and the handshape search.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Handshape library file; defaults to the store's, then the bundled one.
    #[arg(long, global = true)]
    pub library: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Add templates (.sign.json), handshape libraries (.hands.json) and
    /// lessons (.lesson.json) to the store.
    Ingest {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Overwrite existing entries instead of failing.
        #[arg(long)]
        replace: bool,
    },
    /// Write a synthetic attempt derived from a template.
    Synth {
        template: PathBuf,
        /// Error to inject, e.g. `time-warp:factor=1.25`; repeatable.
        #[arg(long = "error", value_name = "KIND:KEY=VALUE,...")]
        errors: Vec<String>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare an attempt with a template and print the result.
    /// Exit code 0 on pass, 1 on fail, 2 on error.
    Compare {
        template: PathBuf,
        attempt: PathBuf,
        /// Pass threshold in percent; defaults to the template's.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Run a lesson headless, feeding the attempts of a directory in name
    /// order. Templates come from the store.
    RunSession {
        lesson: PathBuf,
        attempts: PathBuf,
        /// Where to write the event log; defaults to `<lesson>.session.jsonl`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the HTTP API over the store.
    Serve {
        /// Listen address (falls back to the config file, then
        /// SIGNCOACH_LISTEN, then 127.0.0.1:8080).
        #[arg(long)]
        listen: Option<String>,
    },
    /// Summarize a session log.
    Report {
        log: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

/// Runs the command line and returns the process exit code.
pub fn main_with(args: impl IntoIterator<Item = OsString>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    match run(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(out, "{}", e.to_json());
            EXIT_ERROR
        }
    }
}

fn settings(cli: &Cli, listen: Option<String>) -> Result<Settings, CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let flags = Flags {
        store: cli.store.clone(),
        seed: cli.seed,
        listen,
        library: cli.library.clone(),
    };
    Settings::resolve(&flags, &file, |k| std::env::var(k).ok())
}

fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let listen = match &cli.command {
        Command::Serve { listen } => listen.clone(),
        _ => None,
    };
    let s = settings(&cli, listen)?;
    let write = |out: &mut dyn Write, text: &str| out.write_all(text.as_bytes()).map_err(|e| CliError::io("stdout", e));
    match cli.command {
        Command::Ingest { files, replace } => {
            let store = open_store(&s)?;
            for f in files {
                let (collection, id) = ingest(&store, &f, replace)?;
                write(out, &format!("{}/{id}\n", collection.name()))?;
            }
            Ok(EXIT_PASS)
        }
        Command::Synth { template, errors, out: path } => {
            let template = load_template(&template)?;
            let mut spec = ErrorSpec::none(s.seed.unwrap_or(0));
            for e in &errors {
                if let Some(p) = errorspec::parse_error_arg(e)? {
                    spec = spec.with(p);
                }
            }
            let rec = synth(&template, &spec, &library(&s)?)?;
            let text = SignFile::from_recording(&rec).to_json();
            match path {
                Some(p) => std::fs::write(&p, text).map_err(|e| CliError::io(&p, e))?,
                None => write(out, &text)?,
            }
            Ok(EXIT_PASS)
        }
        Command::Compare {
            template,
            attempt,
            threshold,
        } => {
            let template = load_template(&template)?;
            let rec = load_sign_file(&attempt)?
                .to_recording()
                .map_err(|v| schema_error(&attempt, v))?;
            let threshold = threshold.unwrap_or(template.threshold_default);
            let result = attempt_pipeline(&template, &rec.sequence, &rec.hands, threshold, &library(&s)?, &s.pipeline)?;
            let mut text = serde_json::to_string_pretty(&result).expect("results serialize");
            text.push('\n');
            write(out, &text)?;
            Ok(if result.passed { EXIT_PASS } else { EXIT_FAIL })
        }
        Command::RunSession {
            lesson,
            attempts,
            out: log_path,
        } => {
            let store = open_store(&s)?;
            let lesson_text = read(&lesson)?;
            let lesson = parse_lesson(&lesson_text).map_err(|v| schema_error(&lesson, v))?;
            let templates = store.lesson_templates(&lesson)?;
            let library = match &s.library {
                Some(_) => library(&s)?,
                None => store.library()?,
            };
            let attempts = load_attempts(&attempts)?;
            let driver = run_session(lesson, templates, library, &s, attempts)?;
            let log_path = log_path.unwrap_or_else(|| PathBuf::from(format!("{}.session.jsonl", driver.lesson().id)));
            std::fs::write(&log_path, driver.log().to_jsonl()).map_err(|e| CliError::io(&log_path, e))?;
            let report = Report::from_log(driver.log());
            write(out, &report.to_text())?;
            Ok(if driver.state().is_complete() && !driver.state().aborted {
                EXIT_PASS
            } else {
                EXIT_FAIL
            })
        }
        Command::Serve { .. } => {
            let store = Arc::new(open_store(&s)?);
            let cfg = ServiceConfig {
                pipeline: s.pipeline.clone(),
                session: s.session.clone(),
            };
            let (state, skipped) = AppState::open(store, cfg)?;
            for sk in skipped {
                let _ = writeln!(err, "skipping session {}: {}", sk.id, sk.reason);
            }
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::io("runtime", e))?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(&s.listen)
                    .await
                    .map_err(|e| CliError::io(&s.listen, e))?;
                let addr = listener.local_addr().map_err(|e| CliError::io(&s.listen, e))?;
                let _ = writeln!(err, "listening on http://{addr}");
                signcoach_service::api::serve(listener, state)
                    .await
                    .map_err(|e| CliError::io(&s.listen, e))
            })?;
            Ok(EXIT_PASS)
        }
        Command::Report { log, json } => {
            let text = read(&log)?;
            let log_data = SessionLog::parse(&text).map_err(|e| CliError::Schema {
                file: log.display().to_string(),
                violation: signcoach_core::format::SchemaViolation::new("$", e.to_string()),
            })?;
            let report = Report::from_log(&log_data);
            if json {
                let mut text = serde_json::to_string_pretty(&report).expect("reports serialize");
                text.push('\n');
                write(out, &text)?;
            } else {
                write(out, &report.to_text())?;
            }
            Ok(EXIT_PASS)
        }
    }
}

fn open_store(s: &Settings) -> Result<Store, CliError> {
    Ok(Store::open(s.store.as_ref().ok_or(CliError::NoStore)?)?)
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn schema_error(path: &Path, violation: signcoach_core::format::SchemaViolation) -> CliError {
    CliError::Schema {
        file: path.display().to_string(),
        violation,
    }
}

pub fn load_sign_file(path: &Path) -> Result<SignFile, CliError> {
    SignFile::parse(&read(path)?).map_err(|v| schema_error(path, v))
}

pub fn load_template(path: &Path) -> Result<SignTemplate, CliError> {
    load_sign_file(path)?.to_template().map_err(|v| schema_error(path, v))
}

/// The `--library` file, else the store's library, else the bundled one.
fn library(s: &Settings) -> Result<HandshapeLibrary, CliError> {
    if let Some(p) = &s.library {
        return parse_library(&read(p)?).map_err(|v| schema_error(p, v));
    }
    if let Some(root) = &s.store {
        let store = Store::open(root)?;
        if store.list(Collection::Hands)?.iter().any(|id| id == signcoach_service::store::DEFAULT_LIBRARY) {
            return Ok(store.library()?);
        }
    }
    Ok(sample_library())
}

/// `*.sign.json` files of a directory in name order.
pub fn load_attempts(dir: &Path) -> Result<Vec<SignFile>, CliError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(".sign.json")))
        .collect();
    paths.sort();
    paths.iter().map(|p| load_sign_file(p)).collect()
}

fn ingest(store: &Store, path: &Path, replace: bool) -> Result<(Collection, String), CliError> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let text = read(path)?;
    let (collection, id, doc) = if name.ends_with(".sign.json") {
        let file = SignFile::parse(&text).map_err(|v| schema_error(path, v))?;
        let t = file.to_template().map_err(|v| schema_error(path, v))?;
        let doc = SignFile::from_template(&t).to_json();
        (Collection::Templates, t.id, doc)
    } else if let Some(stem) = name.strip_suffix(".hands.json") {
        let lib = parse_library(&text).map_err(|v| schema_error(path, v))?;
        (Collection::Hands, stem.to_string(), library_to_json(&lib))
    } else if name.ends_with(".lesson.json") {
        let lesson = parse_lesson(&text).map_err(|v| schema_error(path, v))?;
        let doc = lesson_to_json(&lesson);
        (Collection::Lessons, lesson.id, doc)
    } else {
        return Err(CliError::Argument(format!(
            "{}: expected a .sign.json, .hands.json or .lesson.json file",
            path.display()
        )));
    };
    if replace {
        store.put(collection, &id, &doc)?;
    } else {
        store.create(collection, &id, &doc)?;
    }
    Ok((collection, id))
}

/// Drives a lesson with scripted events, consuming `attempts` in order at
/// each recording. Stops when the lesson completes or the attempts run out.
pub fn run_session(
    lesson: Lesson,
    templates: BTreeMap<String, SignTemplate>,
    library: HandshapeLibrary,
    s: &Settings,
    attempts: Vec<SignFile>,
) -> Result<SessionDriver, CliError> {
    let session_id = format!("{}-{}", lesson.id, s.seed.unwrap_or(0));
    let mut driver = SessionDriver::open(session_id, lesson, templates, library, s.pipeline.clone(), s.session.clone())?;
    let mut attempts = attempts.into_iter();
    while let Some(event) = scripted_event(driver.state(), &s.session, &mut || attempts.next()) {
        driver.apply(event)?;
    }
    Ok(driver)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttemptRow {
    pub index: usize,
    pub sign: String,
    pub accuracy: f64,
    pub movement_score: f64,
    pub handshape_score: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignRow {
    pub sign: String,
    pub attempts: usize,
    pub passed: bool,
}

/// What happened in a session, read from its log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub session_id: String,
    pub lesson_id: String,
    pub final_phase: String,
    pub attempts: Vec<AttemptRow>,
    pub signs: Vec<SignRow>,
}

impl Report {
    pub fn from_log(log: &SessionLog) -> Report {
        let attempts: Vec<AttemptRow> = log
            .events
            .iter()
            .filter_map(|l| match &l.event {
                SessionEvent::ComparisonDone { result } => Some(result),
                _ => None,
            })
            .enumerate()
            .map(|(index, r)| AttemptRow {
                index,
                sign: r.template_id.clone(),
                accuracy: r.accuracy,
                movement_score: r.movement_score,
                handshape_score: r.handshape_score,
                passed: r.passed,
            })
            .collect();
        let signs = log
            .lesson
            .signs
            .iter()
            .map(|sign| {
                let mine = attempts.iter().filter(|a| &a.sign == sign);
                SignRow {
                    sign: sign.clone(),
                    attempts: mine.clone().count(),
                    passed: mine.clone().any(|a| a.passed),
                }
            })
            .collect();
        Report {
            session_id: log.session_id.clone(),
            lesson_id: log.lesson.id.clone(),
            final_phase: log
                .events
                .last()
                .map_or_else(|| "presenting".to_string(), |l| l.phase_after.clone()),
            attempts,
            signs,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("session {}  lesson {}\n\n", self.session_id, self.lesson_id);
        s.push_str(&format!(
            "{:>3}  {:<16} {:>9} {:>9} {:>10}  result\n",
            "#", "sign", "accuracy", "movement", "handshape"
        ));
        for a in &self.attempts {
            s.push_str(&format!(
                "{:>3}  {:<16} {:>9.2} {:>9.2} {:>10.2}  {}\n",
                a.index + 1,
                a.sign,
                a.accuracy,
                a.movement_score,
                a.handshape_score,
                if a.passed { "pass" } else { "fail" }
            ));
        }
        s.push_str(&format!("\n{:<16} {:>8}  passed\n", "sign", "attempts"));
        for r in &self.signs {
            s.push_str(&format!(
                "{:<16} {:>8}  {}\n",
                r.sign,
                r.attempts,
                if r.passed { "yes" } else { "no" }
            ));
        }
        s.push_str(&format!("\nfinal phase: {}\n", self.final_phase));
        s
    }
}
