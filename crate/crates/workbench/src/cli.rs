use std::ffi::OsString;
use std::fs;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use discourse_core::discourse::QuerySpec;
use discourse_core::grammar::validate;
use discourse_core::interop::{export_json, export_neo4j_csv};
use serde_json::{json, Value};

use crate::api;
use crate::error::{Result, WorkbenchError};
use crate::formalize::FormalizeRequest;
use crate::state::{RealizeRequest, Workbench};
use crate::watch;

#[derive(Debug, Parser)]
#[command(name = "discourse-workbench", version, about = "Build, query and edit a discourse graph kept in a folder of outline notes")]
struct Cli {
    /// Notebook directory (default: current directory).
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Grammar JSON file (default: grammar.json in the corpus, else the built-in grammar).
    #[arg(long, global = true)]
    grammar: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExportFormat {
    Neo4j,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the graph and print node and edge counts.
    Build { dir: Option<PathBuf> },
    /// Check that the corpus parses and the grammar is valid.
    Validate { dir: Option<PathBuf> },
    /// Run a query given as JSON text, `@file`, or `-` for stdin.
    Query { spec: String },
    /// Print the discourse context of one node.
    Context { title: String },
    /// Write the graph as Neo4j CSV files or a JSON document.
    Export {
        #[arg(long, value_enum, default_value = "neo4j")]
        format: ExportFormat,
        /// Output directory for neo4j, output file for json (stdout when omitted).
        #[arg(short = 'o')]
        out: Option<PathBuf>,
        /// Base name of the CSV files.
        #[arg(long, default_value = "graph")]
        name: String,
    },
    /// Serve the HTTP API on 127.0.0.1.
    Serve {
        #[arg(long, default_value_t = 7878)]
        port: u16,
        /// Rebuild when files in the corpus change.
        #[arg(long)]
        watch: bool,
    },
    /// Turn a character span of a block into a discourse node page.
    Formalize {
        block: String,
        #[arg(long)]
        start: usize,
        #[arg(long)]
        end: usize,
        #[arg(long = "type")]
        node_type: String,
        #[arg(long)]
        citekey: Option<String>,
    },
    /// Write notebook text that produces a relation between two nodes.
    Realize {
        source: String,
        relation: String,
        destination: String,
        /// Page that receives the new blocks.
        #[arg(long)]
        page: String,
    },
}

fn print_json(out: &mut dyn Write, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("json value");
    writeln!(out, "{text}").map_err(|e| WorkbenchError::new("E_IO", e.to_string()))
}

fn read_spec(spec: &str) -> Result<Vec<u8>> {
    if spec == "-" {
        let mut buf = Vec::new();
        std::io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| WorkbenchError::new("E_IO", e.to_string()))?;
        Ok(buf)
    } else if let Some(path) = spec.strip_prefix('@') {
        fs::read(path).map_err(|e| WorkbenchError::io(path.as_ref(), e))
    } else {
        Ok(spec.as_bytes().to_vec())
    }
}

fn counts(wb: &Workbench) -> Value {
    let snap = wb.snapshot();
    json!({
        "pages": snap.blocks.pages().values().filter(|p| !p.is_virtual).count(),
        "blocks": snap.blocks.blocks().len(),
        "nodes": snap.discourse.nodes().len(),
        "edges": snap.discourse.edges().len(),
        "grammarHash": snap.grammar().hash(),
    })
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let corpus = |dir: Option<PathBuf>| dir.or(cli.corpus.clone()).unwrap_or_else(|| PathBuf::from("."));
    let open = |dir: Option<PathBuf>| Workbench::open(corpus(dir), cli.grammar.clone());

    match cli.command {
        Command::Build { ref dir } => {
            let wb = open(dir.clone())?;
            print_json(out, &counts(&wb))
        }
        Command::Validate { ref dir } => {
            let wb = open(dir.clone())?;
            validate(wb.snapshot().grammar())?;
            let mut report = counts(&wb);
            report["ok"] = json!(true);
            print_json(out, &report)
        }
        Command::Query { ref spec } => {
            let wb = open(None)?;
            let spec: QuerySpec = serde_json::from_slice(&read_spec(spec)?)
                .map_err(|e| WorkbenchError::new("E_PARSE", format!("query spec: {e}")))?;
            let table = wb.snapshot().discourse.run_query(&spec)?;
            print_json(out, &serde_json::to_value(table).expect("table"))
        }
        Command::Context { ref title } => {
            let wb = open(None)?;
            let snap = wb.snapshot();
            let entries = snap.discourse.discourse_context(title)?;
            print_json(out, &json!({ "title": title, "context": entries }))
        }
        Command::Export { format, out: ref target, ref name } => {
            let wb = open(None)?;
            let dg = wb.snapshot().discourse.clone();
            match format {
                ExportFormat::Neo4j => {
                    let dir = target.clone().unwrap_or_else(|| PathBuf::from("."));
                    let (nodes, relations) = export_neo4j_csv(&dg)
                        .write_to(&dir, name)
                        .map_err(|e| WorkbenchError::io(&dir, e))?;
                    print_json(out, &json!({ "nodes": nodes, "relations": relations }))
                }
                ExportFormat::Json => {
                    let bytes = export_json(&dg);
                    match target {
                        Some(path) => fs::write(path, &bytes).map_err(|e| WorkbenchError::io(path, e)),
                        None => out.write_all(&bytes).map_err(|e| WorkbenchError::new("E_IO", e.to_string())),
                    }
                }
            }
        }
        Command::Serve { port, watch: watching } => {
            let wb = Arc::new(open(None)?);
            serve(wb, port, watching, out)
        }
        Command::Formalize {
            ref block,
            start,
            end,
            ref node_type,
            ref citekey,
        } => {
            let wb = open(None)?;
            let req = FormalizeRequest {
                block: block.clone(),
                span: (start, end),
                node_type: node_type.clone(),
                citekey: citekey.clone(),
            };
            let (outcome, generation) = wb.formalize(None, &req)?;
            let mut body = serde_json::to_value(outcome).expect("outcome");
            body["generation"] = json!(generation);
            print_json(out, &body)
        }
        Command::Realize {
            ref source,
            ref relation,
            ref destination,
            ref page,
        } => {
            let wb = open(None)?;
            let req = RealizeRequest {
                source: source.clone(),
                relation: relation.clone(),
                destination: destination.clone(),
                target_page: page.clone(),
            };
            let (edits, generation) = wb.realize(None, &req)?;
            print_json(out, &json!({ "edits": edits, "generation": generation }))
        }
    }
}

fn serve(wb: Arc<Workbench>, port: u16, watching: bool, out: &mut dyn Write) -> Result<()> {
    let _ = tracing_subscriber::fmt().with_writer(std::io::stderr).try_init();
    let runtime = tokio::runtime::Runtime::new().map_err(|e| WorkbenchError::new("E_IO", e.to_string()))?;
    runtime.block_on(async {
        let listener = api::bind(port).await?;
        let _watcher = if watching {
            Some(watch::watch(wb.clone(), watch::DEBOUNCE)?)
        } else {
            None
        };
        let addr = listener.local_addr().map_err(|e| WorkbenchError::new("E_PORT", e.to_string()))?;
        print_json(out, &json!({ "listening": format!("http://{addr}"), "generation": wb.generation() }))?;
        out.flush().ok();
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        api::serve(wb, listener, shutdown).await
    })
}

/// Parses `argv` (including the program name) and runs one command, writing
/// results to `out` and a JSON error document to `err`. Returns the exit code.
pub fn run_cli_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return 0;
        }
        Err(e) => {
            let error = WorkbenchError::usage(e.to_string().trim_end());
            let _ = writeln!(err, "{}", error.to_json());
            return 2;
        }
    };
    match run(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{}", e.to_json());
            1
        }
    }
}

pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_cli_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
