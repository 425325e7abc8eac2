//! Graph-database CSV export and lossless JSON interchange.

use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical;
use crate::discourse::{DiscourseGraph, DiscourseNode};
use crate::grammar::load_grammar;
use crate::notebook::page_uid;
use crate::pattern::Edge;

pub const NODES_HEADER: [&str; 4] = ["uid:ID", "title", "nodeType", ":LABEL"];
pub const RELATIONS_HEADER: [&str; 3] = [":START_ID", ":END_ID", ":TYPE"];
pub const JSON_FORMAT: &str = "discourse-graph";
pub const JSON_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum InteropError {
    #[error("cannot parse graph document: {0}")]
    Parse(String),
    #[error("invalid graph document: {0}")]
    Validate(String),
}

impl InteropError {
    pub fn code(&self) -> &'static str {
        match self {
            InteropError::Parse(_) => "E_PARSE",
            InteropError::Validate(_) => "E_VALIDATE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportBundle {
    pub nodes_csv: Vec<u8>,
    pub relations_csv: Vec<u8>,
}

impl ExportBundle {
    pub fn file_names(graph_name: &str) -> (String, String) {
        (format!("{graph_name}_nodes.csv"), format!("{graph_name}_relations.csv"))
    }

    /// Writes `<graph_name>_nodes.csv` and `<graph_name>_relations.csv` into `dir`.
    pub fn write_to(&self, dir: &Path, graph_name: &str) -> io::Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let (n, r) = Self::file_names(graph_name);
        let (n, r) = (dir.join(n), dir.join(r));
        std::fs::write(&n, &self.nodes_csv)?;
        std::fs::write(&r, &self.relations_csv)?;
        Ok((n, r))
    }
}

fn csv_bytes<const N: usize>(header: [&str; N], rows: Vec<[String; N]>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        w.write_record(&row).expect("writing to memory");
    }
    w.into_inner().expect("flushing to memory")
}

pub fn export_neo4j_csv(dg: &DiscourseGraph) -> ExportBundle {
    let grammar = dg.grammar();
    let mut nodes: Vec<[String; 4]> = dg
        .nodes()
        .values()
        .map(|n| {
            let label = grammar
                .node_type(&n.type_id)
                .map(|t| t.label.clone())
                .unwrap_or_default();
            [page_uid(&n.title), n.title.clone(), n.type_id.clone(), label]
        })
        .collect();
    nodes.sort();
    let mut relations: Vec<[String; 3]> = dg
        .edges()
        .iter()
        .map(|e| [page_uid(&e.source), page_uid(&e.destination), e.label.to_uppercase()])
        .collect();
    relations.sort();
    ExportBundle {
        nodes_csv: csv_bytes(NODES_HEADER, nodes),
        relations_csv: csv_bytes(RELATIONS_HEADER, relations),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct GraphDocument<G> {
    format: String,
    version: u32,
    grammar: G,
    grammar_hash: String,
    nodes: Vec<DiscourseNode>,
    edges: Vec<Edge>,
}

/// Canonical JSON (sorted keys) holding the grammar, nodes, edges and anchors.
pub fn export_json(dg: &DiscourseGraph) -> Vec<u8> {
    let doc = GraphDocument {
        format: JSON_FORMAT.to_string(),
        version: JSON_VERSION,
        grammar: dg.grammar().as_ref(),
        grammar_hash: dg.grammar().hash(),
        nodes: dg.nodes().values().cloned().collect(),
        edges: dg.edges().to_vec(),
    };
    canonical::to_string(&doc).into_bytes()
}

/// Reads a document written by [`export_json`]. The result has no notebook
/// behind it, so overlay reference counts are unavailable.
pub fn import_json(doc: &[u8]) -> Result<DiscourseGraph, InteropError> {
    let doc: GraphDocument<serde_json::Value> =
        serde_json::from_slice(doc).map_err(|e| InteropError::Parse(e.to_string()))?;
    if doc.format != JSON_FORMAT || doc.version != JSON_VERSION {
        return Err(InteropError::Validate(format!(
            "unsupported document {:?} version {}",
            doc.format, doc.version
        )));
    }
    let grammar_text = serde_json::to_vec(&doc.grammar).expect("re-serializing parsed JSON");
    let grammar = load_grammar(&grammar_text).map_err(|e| InteropError::Validate(format!("grammar: {e}")))?;
    if grammar.hash() != doc.grammar_hash {
        return Err(InteropError::Validate("grammarHash does not match the embedded grammar".to_string()));
    }
    DiscourseGraph::from_parts(Arc::new(grammar), doc.nodes, doc.edges).map_err(InteropError::Validate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discourse::build_discourse_graph;
    use crate::grammar::default_grammar;
    use crate::notebook::BlockGraph;

    fn build(sources: &[(&str, &str)]) -> DiscourseGraph {
        let graph = BlockGraph::from_sources(sources.iter().copied()).unwrap();
        build_discourse_graph(Arc::new(graph), Arc::new(default_grammar()))
    }

    #[test]
    fn empty_graph_exports_headers_only() {
        let b = export_neo4j_csv(&build(&[]));
        assert_eq!(b.nodes_csv, b"uid:ID,title,nodeType,:LABEL\n");
        assert_eq!(b.relations_csv, b":START_ID,:END_ID,:TYPE\n");
        let dg = build(&[]);
        assert_eq!(import_json(&export_json(&dg)).unwrap(), dg);
    }

    #[test]
    fn quoting() {
        let b = export_neo4j_csv(&build(&[("CLM - a, \"b\"", "- x\n")]));
        let text = String::from_utf8(b.nodes_csv).unwrap();
        assert!(text.ends_with(",\"CLM - a, \"\"b\"\"\",CLM,Claim\n"), "{text}");
    }

    #[test]
    fn round_trip_and_tampering() {
        let dg = build(&[("o", "- [[CLM - C1]]\n  - [[SupportedBy]] [[EVD - E1 - @s1]]\n")]);
        let bytes = export_json(&dg);
        let back = import_json(&bytes).unwrap();
        assert_eq!(back, dg);
        assert_eq!(back.overlay_stats("CLM - C1").unwrap().reference_count, None);
        assert_eq!(export_json(&back), bytes);

        let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        let nodes = v["nodes"].as_array_mut().unwrap();
        nodes.retain(|n| n["title"] != "EVD - E1 - @s1");
        for (i, n) in nodes.iter_mut().enumerate() {
            n["index"] = i.into();
        }
        let err = import_json(&serde_json::to_vec(&v).unwrap()).unwrap_err();
        assert_eq!(err.code(), "E_VALIDATE");
        assert_eq!(import_json(b"[1,2").unwrap_err().code(), "E_PARSE");
    }
}
