//! Local JSON API over a shared [`Workbench`].
//!
//! Each read takes one snapshot and answers entirely from it. Every response,
//! success or error, carries the generation it was computed from in the
//! `X-Generation` header; JSON bodies also have a `generation` field. The two
//! export endpoints return the raw export bytes, so only the header applies.

use std::io::Write;
use std::net::{Ipv4Addr, SocketAddr};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use discourse_core::discourse::QuerySpec;
use discourse_core::grammar::load_grammar;
use discourse_core::interop::{export_json, export_neo4j_csv};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::net::TcpListener;

use crate::error::{Result, WorkbenchError};
use crate::formalize::FormalizeRequest;
use crate::state::{RealizeRequest, Workbench};

pub const GENERATION_HEADER: &str = "x-generation";

type Shared = Arc<Workbench>;

fn status_for(code: &str) -> StatusCode {
    match code {
        "E_CONFLICT" => StatusCode::CONFLICT,
        "E_NO_NODE" | "E_NO_BLOCK" | "E_NO_PAGE" | "E_NOT_FOUND" => StatusCode::NOT_FOUND,
        "E_IO" | "E_INTERNAL" => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::BAD_REQUEST,
    }
}

fn with_generation(mut response: Response, generation: u64) -> Response {
    response
        .headers_mut()
        .insert(GENERATION_HEADER, HeaderValue::from(generation));
    response
}

/// A JSON body with `generation` merged in.
fn ok(generation: u64, body: Value) -> Response {
    let mut body = body;
    if let Value::Object(map) = &mut body {
        map.insert("generation".into(), json!(generation));
    }
    with_generation(axum::Json(body).into_response(), generation)
}

fn fail(generation: u64, err: WorkbenchError) -> Response {
    let status = status_for(&err.code);
    let body = json!({ "generation": generation, "error": err });
    with_generation((status, axum::Json(body)).into_response(), generation)
}

fn respond(wb: &Workbench, result: Result<(u64, Value)>) -> Response {
    match result {
        Ok((generation, body)) => ok(generation, body),
        Err(e) => fail(wb.generation(), e),
    }
}

fn parse_body<T: DeserializeOwned>(bytes: &[u8]) -> Result<T> {
    serde_json::from_slice(bytes).map_err(|e| WorkbenchError::new("E_PARSE", format!("request body: {e}")))
}

/// Mutating requests name the generation they were prepared against.
#[derive(Deserialize)]
struct Guarded<T> {
    generation: u64,
    #[serde(flatten)]
    request: T,
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("response types serialize")
}

async fn generation(State(wb): State<Shared>) -> Response {
    ok(wb.generation(), json!({}))
}

#[derive(Deserialize)]
struct NodeFilter {
    #[serde(rename = "type")]
    node_type: Option<String>,
}

async fn nodes(State(wb): State<Shared>, Query(filter): Query<NodeFilter>) -> Response {
    let snap = wb.snapshot();
    let result = (|| {
        if let Some(ty) = &filter.node_type {
            if snap.grammar().node_type(ty).is_none() {
                return Err(WorkbenchError::new("E_NO_TYPE", format!("no node type {ty:?}")));
            }
        }
        let list: Vec<_> = snap
            .discourse
            .nodes()
            .values()
            .filter(|n| filter.node_type.as_ref().is_none_or(|t| &n.type_id == t))
            .collect();
        Ok((snap.generation, json!({ "nodes": list })))
    })();
    respond(&wb, result)
}

async fn context(State(wb): State<Shared>, Path(title): Path<String>) -> Response {
    let snap = wb.snapshot();
    let result = snap
        .discourse
        .discourse_context(&title)
        .map(|entries| (snap.generation, json!({ "title": title, "context": entries })))
        .map_err(Into::into);
    respond(&wb, result)
}

async fn overlay(State(wb): State<Shared>, Path(title): Path<String>) -> Response {
    let snap = wb.snapshot();
    let result = snap.discourse.overlay_stats(&title).map_err(Into::into).map(|stats| {
        let mut body = to_value(&stats);
        body["title"] = json!(title);
        (snap.generation, body)
    });
    respond(&wb, result)
}

async fn query(State(wb): State<Shared>, body: Bytes) -> Response {
    let snap = wb.snapshot();
    let result = parse_body::<QuerySpec>(&body).and_then(|spec| {
        let table = snap.discourse.run_query(&spec)?;
        Ok((snap.generation, to_value(&table)))
    });
    respond(&wb, result)
}

/// Runs a blocking mutation off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T> + Send + 'static) -> Result<T> {
    tokio::task::spawn_blocking(f)
        .await
        .unwrap_or_else(|e| Err(WorkbenchError::new("E_INTERNAL", e.to_string())))
}

async fn formalize(State(wb): State<Shared>, body: Bytes) -> Response {
    let worker = wb.clone();
    let result = blocking(move || {
        let req: Guarded<FormalizeRequest> = parse_body(&body)?;
        let (outcome, generation) = worker.formalize(Some(req.generation), &req.request)?;
        Ok((generation, to_value(&outcome)))
    })
    .await;
    respond(&wb, result)
}

async fn realize(State(wb): State<Shared>, body: Bytes) -> Response {
    let worker = wb.clone();
    let result = blocking(move || {
        let req: Guarded<RealizeRequest> = parse_body(&body)?;
        let (edits, generation) = worker.realize(Some(req.generation), &req.request)?;
        Ok((generation, json!({ "edits": edits })))
    })
    .await;
    respond(&wb, result)
}

async fn get_grammar(State(wb): State<Shared>) -> Response {
    let snap = wb.snapshot();
    let grammar = snap.grammar();
    ok(
        snap.generation,
        json!({ "hash": grammar.hash(), "grammar": to_value(grammar.as_ref()) }),
    )
}

#[derive(Deserialize)]
struct GrammarBody {
    grammar: Value,
}

async fn put_grammar(State(wb): State<Shared>, body: Bytes) -> Response {
    let worker = wb.clone();
    let result = blocking(move || {
        let req: Guarded<GrammarBody> = parse_body(&body)?;
        let grammar = load_grammar(&serde_json::to_vec(&req.request.grammar).expect("json value"))?;
        let hash = grammar.hash();
        let generation = worker.replace_grammar(Some(req.generation), grammar)?;
        Ok((generation, json!({ "hash": hash })))
    })
    .await;
    respond(&wb, result)
}

#[derive(Deserialize)]
struct ExportName {
    name: Option<String>,
}

/// Zip archive holding `<name>_nodes.csv` and `<name>_relations.csv`.
pub fn neo4j_zip(nodes_csv: &[u8], relations_csv: &[u8], name: &str) -> std::io::Result<Vec<u8>> {
    let mut zip = zip::ZipWriter::new(std::io::Cursor::new(Vec::new()));
    let options = zip::write::SimpleFileOptions::default()
        .compression_method(zip::CompressionMethod::Stored)
        .last_modified_time(zip::DateTime::default());
    for (file, bytes) in [(format!("{name}_nodes.csv"), nodes_csv), (format!("{name}_relations.csv"), relations_csv)] {
        zip.start_file(file, options)?;
        zip.write_all(bytes)?;
    }
    Ok(zip.finish()?.into_inner())
}

async fn export_neo4j(State(wb): State<Shared>, Query(q): Query<ExportName>) -> Response {
    let snap = wb.snapshot();
    let name = q.name.unwrap_or_else(|| "graph".to_string());
    if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
        return fail(snap.generation, WorkbenchError::usage(format!("unusable export name {name:?}")));
    }
    let bundle = export_neo4j_csv(&snap.discourse);
    match neo4j_zip(&bundle.nodes_csv, &bundle.relations_csv, &name) {
        Ok(bytes) => {
            let disposition = format!("attachment; filename=\"{name}.zip\"");
            let mut response = ([(header::CONTENT_TYPE, "application/zip".to_string())], bytes).into_response();
            if let Ok(v) = HeaderValue::from_str(&disposition) {
                response.headers_mut().insert(header::CONTENT_DISPOSITION, v);
            }
            with_generation(response, snap.generation)
        }
        Err(e) => fail(snap.generation, WorkbenchError::new("E_IO", e.to_string())),
    }
}

async fn export_json_doc(State(wb): State<Shared>) -> Response {
    let snap = wb.snapshot();
    let response = ([(header::CONTENT_TYPE, "application/json")], export_json(&snap.discourse)).into_response();
    with_generation(response, snap.generation)
}

async fn not_found(State(wb): State<Shared>) -> Response {
    fail(wb.generation(), WorkbenchError::new("E_NOT_FOUND", "no such endpoint"))
}

pub fn router(wb: Shared) -> Router {
    Router::new()
        .route("/generation", get(generation))
        .route("/nodes", get(nodes))
        .route("/nodes/{title}/context", get(context))
        .route("/nodes/{title}/overlay", get(overlay))
        .route("/query", axum::routing::post(query))
        .route("/formalize", axum::routing::post(formalize))
        .route("/realize", axum::routing::post(realize))
        .route("/grammar", get(get_grammar).put(put_grammar))
        .route("/export/neo4j", get(export_neo4j))
        .route("/export/json", get(export_json_doc))
        .fallback(not_found)
        .with_state(wb)
}

/// Binds `127.0.0.1:port`, failing with `E_PORT` when the port is unavailable.
pub async fn bind(port: u16) -> Result<TcpListener> {
    let addr = SocketAddr::from((Ipv4Addr::LOCALHOST, port));
    TcpListener::bind(addr)
        .await
        .map_err(|e| WorkbenchError::new("E_PORT", format!("cannot listen on {addr}: {e}")))
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    wb: Shared,
    listener: TcpListener,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<()> {
    axum::serve(listener, router(wb))
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(|e| WorkbenchError::new("E_IO", e.to_string()))
}
