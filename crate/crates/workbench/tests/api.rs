use std::io::Read;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use discourse_core::discourse::QuerySpec;
use discourse_core::interop::{export_json, export_neo4j_csv};
use discourse_testkit::{base, base_fixture_dir, copy_dir, single_support_sources, substantiates_grammar, write_corpus};
use discourse_workbench::api::{bind, router, serve, GENERATION_HEADER};
use discourse_workbench::Workbench;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Reply {
    status: StatusCode,
    generation: u64,
    bytes: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes).unwrap()
    }
}

fn encode(title: &str) -> String {
    title.replace('%', "%25").replace(' ', "%20").replace('?', "%3F").replace('#', "%23")
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> Reply {
    let body = body.map_or_else(Body::empty, |v| Body::from(v.to_string()));
    let req = Request::builder().method(method).uri(uri).body(body).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let generation = res.headers()[GENERATION_HEADER].to_str().unwrap().parse().unwrap();
    let bytes = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, generation, bytes }
}

async fn get(app: &Router, uri: &str) -> Reply {
    call(app, Method::GET, uri, None).await
}

fn fixture(sources: Vec<(String, String)>) -> (tempfile::TempDir, Arc<Workbench>, Router) {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(dir.path(), &sources).unwrap();
    let wb = Arc::new(Workbench::open(dir.path(), None).unwrap());
    let app = router(wb.clone());
    (dir, wb, app)
}

fn base_app() -> (tempfile::TempDir, Arc<Workbench>, Router) {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&base_fixture_dir(), dir.path()).unwrap();
    let wb = Arc::new(Workbench::open(dir.path(), None).unwrap());
    let app = router(wb.clone());
    (dir, wb, app)
}

#[tokio::test]
async fn nodes_of_the_single_support_fixture() {
    let (_dir, _wb, app) = fixture(single_support_sources());
    let r = get(&app, "/nodes").await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.generation, 1);
    let body = r.json();
    assert_eq!(body["generation"], 1);
    let titles: Vec<&str> = body["nodes"].as_array().unwrap().iter().map(|n| n["title"].as_str().unwrap()).collect();
    assert_eq!(titles, ["CLM - C1", "EVD - E1 - @s1", "QUE - q1"]);
    assert_eq!(body["nodes"][1]["virtual"], true);

    let claims = get(&app, "/nodes?type=CLM").await.json();
    assert_eq!(claims["nodes"].as_array().unwrap().len(), 1);
    let bad = get(&app, "/nodes?type=XYZ").await;
    assert_eq!(bad.status, StatusCode::BAD_REQUEST);
    assert_eq!(bad.json()["error"]["code"], "E_NO_TYPE");
}

#[tokio::test]
async fn reads_match_the_engine() {
    let (_dir, wb, app) = base_app();
    let snap = wb.snapshot();
    for title in base::nodes() {
        let ctx = get(&app, &format!("/nodes/{}/context", encode(title))).await;
        assert_eq!(ctx.status, StatusCode::OK, "{title}");
        let expected = serde_json::to_value(snap.discourse.discourse_context(title).unwrap()).unwrap();
        assert_eq!(ctx.json()["context"], expected);

        let overlay = get(&app, &format!("/nodes/{}/overlay", encode(title))).await.json();
        let stats = snap.discourse.overlay_stats(title).unwrap();
        assert_eq!(overlay["relationCount"], stats.relation_count);
        assert_eq!(overlay["referenceCount"], json!(stats.reference_count));
    }
    let missing = get(&app, "/nodes/CLM%20-%20nothing/context").await;
    assert_eq!(missing.status, StatusCode::NOT_FOUND);
    assert_eq!(missing.json()["error"]["code"], "E_NO_NODE");
}

#[tokio::test]
async fn overlay_of_the_single_support_claim() {
    let (_dir, _wb, app) = fixture(single_support_sources());
    let body = get(&app, "/nodes/CLM%20-%20C1/overlay").await.json();
    assert_eq!((body["relationCount"].as_u64(), body["referenceCount"].as_u64()), (Some(1), Some(1)));
}

#[tokio::test]
async fn query_endpoint_returns_run_query_rows() {
    let (_dir, wb, app) = base_app();
    let spec = json!({
        "find": "EVD",
        "conditions": [
            {"relation": "Informs", "target": {"node": base::Q}},
            {"relation": "Opposes", "target": {"type": "CLM"}}
        ],
        "select": ["title", "citekey"]
    });
    let r = call(&app, Method::POST, "/query", Some(spec.clone())).await;
    assert_eq!(r.status, StatusCode::OK);
    let q: QuerySpec = serde_json::from_value(spec).unwrap();
    let table = wb.snapshot().discourse.run_query(&q).unwrap();
    let body = r.json();
    assert_eq!(body["rows"], serde_json::to_value(&table.rows).unwrap());
    assert_eq!(body["rows"], json!([[base::E3, "ortiz2019"]]));

    let bad = call(&app, Method::POST, "/query", Some(json!({"find": "EVD", "conditions": [{"relation": "Flies", "target": {"type": "CLM"}}]}))).await;
    assert_eq!(bad.json()["error"]["code"], "E_QUERY_VALIDATE");
    let garbled = call(&app, Method::POST, "/query", Some(json!([1, 2]))).await;
    assert_eq!(garbled.json()["error"]["code"], "E_PARSE");
}

#[tokio::test]
async fn formalize_checks_the_generation() {
    let (dir, wb, app) = fixture(vec![("notes".into(), "- the sky is green\n".into())]);
    let block = wb.snapshot().blocks.page("notes").unwrap().blocks[0].to_string();
    let req = |generation: u64| json!({"generation": generation, "block": block, "span": [4, 16], "nodeType": "CLM"});

    let stale = call(&app, Method::POST, "/formalize", Some(req(0))).await;
    assert_eq!(stale.status, StatusCode::CONFLICT);
    let body = stale.json();
    assert_eq!(body["error"]["code"], "E_CONFLICT");
    assert_eq!(body["error"]["details"], json!({"expected": 0, "current": 1}));
    assert_eq!(body["generation"], 1);
    assert!(!dir.path().join("CLM - sky is green.md").exists());

    let done = call(&app, Method::POST, "/formalize", Some(req(1))).await;
    assert_eq!(done.status, StatusCode::OK);
    assert_eq!(done.generation, 2);
    let body = done.json();
    assert_eq!(body["title"], "CLM - sky is green");
    assert_eq!(body["created"], true);
    assert!(dir.path().join("CLM - sky is green.md").is_file());

    let missing_field = call(&app, Method::POST, "/formalize", Some(json!({"block": "x"}))).await;
    assert_eq!(missing_field.json()["error"]["code"], "E_PARSE");
    assert_eq!(wb.generation(), 2);
}

#[tokio::test]
async fn realize_makes_the_edge_visible_from_both_sides() {
    let (_dir, _wb, app) = base_app();
    let req = json!({"generation": 1, "source": base::E1, "relation": "opposes", "destination": base::C2, "targetPage": "playground"});
    let r = call(&app, Method::POST, "/realize", Some(req)).await;
    assert_eq!(r.status, StatusCode::OK, "{}", String::from_utf8_lossy(&r.bytes));
    assert!(!r.json()["edits"].as_array().unwrap().is_empty());

    let at_claim = get(&app, &format!("/nodes/{}/context", encode(base::C2))).await.json();
    assert!(at_claim["context"].as_array().unwrap().iter().any(|c| c["label"] == "OpposedBy" && c["other"] == base::E1));
    let at_evidence = get(&app, &format!("/nodes/{}/context", encode(base::E1))).await.json();
    assert!(at_evidence["context"].as_array().unwrap().iter().any(|c| c["label"] == "Opposes" && c["other"] == base::C2));
    assert_eq!(at_evidence["generation"], 2);
}

#[tokio::test]
async fn grammar_can_be_read_and_replaced() {
    let (_dir, wb, app) = base_app();
    let r = get(&app, "/grammar").await.json();
    assert_eq!(r["hash"], wb.snapshot().grammar().hash());

    let next = substantiates_grammar();
    let put = call(&app, Method::PUT, "/grammar", Some(json!({"generation": 1, "grammar": next}))).await;
    assert_eq!(put.status, StatusCode::OK);
    assert_eq!(put.json()["hash"], next.hash());
    assert_eq!(put.generation, 2);

    let mut broken = serde_json::to_value(&next).unwrap();
    broken["nodeTypes"][0]["color"] = json!("blue");
    let rejected = call(&app, Method::PUT, "/grammar", Some(json!({"generation": 2, "grammar": broken}))).await;
    assert_eq!(rejected.status, StatusCode::BAD_REQUEST);
    assert_eq!(rejected.json()["error"]["code"], "E_VALIDATE");
    assert_eq!(wb.generation(), 2);
}

#[tokio::test]
async fn exports_are_the_engine_bytes() {
    let (_dir, wb, app) = base_app();
    let dg = wb.snapshot().discourse.clone();

    let doc = get(&app, "/export/json").await;
    assert_eq!(doc.generation, 1);
    assert_eq!(doc.bytes, export_json(&dg));

    let zipped = get(&app, "/export/neo4j?name=lab").await;
    assert_eq!(zipped.status, StatusCode::OK);
    let bundle = export_neo4j_csv(&dg);
    let mut archive = zip::ZipArchive::new(std::io::Cursor::new(zipped.bytes)).unwrap();
    let mut names: Vec<String> = archive.file_names().map(|n| n.unwrap().into_owned()).collect();
    names.sort();
    assert_eq!(names, ["lab_nodes.csv", "lab_relations.csv"]);
    for (name, expected) in [("lab_nodes.csv", &bundle.nodes_csv), ("lab_relations.csv", &bundle.relations_csv)] {
        let mut bytes = Vec::new();
        archive.by_name(name).unwrap().read_to_end(&mut bytes).unwrap();
        assert_eq!(&bytes, expected);
    }
    // the archive itself is reproducible
    assert_eq!(get(&app, "/export/neo4j?name=lab").await.bytes, get(&app, "/export/neo4j?name=lab").await.bytes);
    assert_eq!(get(&app, "/export/neo4j?name=../x").await.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn every_response_carries_the_generation() {
    let (_dir, _wb, app) = base_app();
    for uri in ["/generation", "/nodes", "/grammar", "/export/json", "/export/neo4j", "/nowhere"] {
        let r = get(&app, uri).await;
        assert_eq!(r.generation, 1, "{uri}");
    }
    assert_eq!(get(&app, "/generation").await.json(), json!({"generation": 1}));
    assert_eq!(get(&app, "/nowhere").await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn served_over_tcp_and_port_clash_is_reported() {
    let (_dir, wb, _app) = base_app();
    let listener = bind(0).await.unwrap();
    let port = listener.local_addr().unwrap().port();
    let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(serve(wb, listener, async {
        let _ = stopped.await;
    }));

    assert_eq!(bind(port).await.unwrap_err().code, "E_PORT");

    let text = tokio::task::spawn_blocking(move || {
        use std::io::Write;
        let mut stream = std::net::TcpStream::connect(("127.0.0.1", port)).unwrap();
        stream
            .write_all(b"GET /generation HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n")
            .unwrap();
        let mut text = String::new();
        stream.read_to_string(&mut text).unwrap();
        text
    })
    .await
    .unwrap();
    assert!(text.starts_with("HTTP/1.1 200"), "{text}");
    assert!(text.to_lowercase().contains("x-generation: 1"));

    stop.send(()).unwrap();
    server.await.unwrap().unwrap();
}
