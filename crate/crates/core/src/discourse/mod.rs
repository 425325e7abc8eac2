//! The typed discourse graph built from a block graph: nodes, edges, context
//! listings, attributes, queries and overlay counts.

mod query;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{Direction, Grammar};
use crate::notebook::BlockGraph;
use crate::pattern::{match_relations_indexed, Edge, MatchInstance, NodeIndex};

pub use query::{Cell, Condition, QuerySpec, ResultTable, Target};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiscourseError {
    #[error("no discourse node titled {0:?}")]
    NoNode(String),
    #[error("node type {node_type:?} has no attribute {name:?}")]
    NoAttr { node_type: String, name: String },
    #[error("invalid query: {0}")]
    QueryValidate(String),
}

impl DiscourseError {
    pub fn code(&self) -> &'static str {
        match self {
            DiscourseError::NoNode(_) => "E_NO_NODE",
            DiscourseError::NoAttr { .. } => "E_NO_ATTR",
            DiscourseError::QueryValidate(_) => "E_QUERY_VALIDATE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DiscourseNode {
    pub title: String,
    pub type_id: String,
    pub content: String,
    pub citekey: Option<String>,
    /// Referenced somewhere but never written as a page file.
    #[serde(rename = "virtual")]
    pub is_virtual: bool,
    /// Position among all nodes in title order.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ContextEntry {
    pub direction: Direction,
    /// Forward label for outgoing entries, complement label for incoming ones.
    pub label: String,
    pub other: String,
    pub relation_id: String,
    pub anchors: Vec<MatchInstance>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OverlayStats {
    pub relation_count: usize,
    /// `None` when the graph was loaded without its notebook.
    pub reference_count: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct DiscourseGraph {
    grammar: Arc<Grammar>,
    nodes: BTreeMap<String, DiscourseNode>,
    edges: Vec<Edge>,
    context: BTreeMap<String, Vec<ContextEntry>>,
    source: Option<Arc<BlockGraph>>,
}

/// Graphs compare on grammar, nodes and edges; the source notebook is ignored.
impl PartialEq for DiscourseGraph {
    fn eq(&self, other: &Self) -> bool {
        self.grammar == other.grammar && self.nodes == other.nodes && self.edges == other.edges
    }
}

impl Eq for DiscourseGraph {}

pub fn build_discourse_graph(graph: Arc<BlockGraph>, grammar: Arc<Grammar>) -> DiscourseGraph {
    let index = NodeIndex::build(&graph, &grammar);
    let edges = match_relations_indexed(&graph, &grammar, &index);
    let nodes = index
        .iter()
        .enumerate()
        .map(|(i, (title, m))| {
            let node = DiscourseNode {
                title: title.clone(),
                type_id: m.type_id.clone(),
                content: m.content.clone(),
                citekey: m.citekey.clone(),
                is_virtual: graph.page(title).is_none_or(|p| p.is_virtual),
                index: i,
            };
            (title.clone(), node)
        })
        .collect();
    let mut dg = DiscourseGraph::assemble(grammar, nodes, edges);
    dg.source = Some(graph);
    dg
}

impl DiscourseGraph {
    fn assemble(grammar: Arc<Grammar>, nodes: BTreeMap<String, DiscourseNode>, edges: Vec<Edge>) -> DiscourseGraph {
        let mut context: BTreeMap<String, Vec<ContextEntry>> =
            nodes.keys().map(|t| (t.clone(), Vec::new())).collect();
        for edge in &edges {
            let complement = grammar
                .relation(&edge.relation_id)
                .map(|r| r.complement.clone())
                .unwrap_or_default();
            let ends = [
                (&edge.source, Direction::Outgoing, edge.label.clone(), &edge.destination),
                (&edge.destination, Direction::Incoming, complement, &edge.source),
            ];
            for (at, direction, label, other) in ends {
                if let Some(list) = context.get_mut(at) {
                    list.push(ContextEntry {
                        direction,
                        label,
                        other: other.clone(),
                        relation_id: edge.relation_id.clone(),
                        anchors: edge.anchors.clone(),
                    });
                }
            }
        }
        for list in context.values_mut() {
            list.sort_by(|a, b| (&a.label, &a.other).cmp(&(&b.label, &b.other)));
        }
        DiscourseGraph {
            grammar,
            nodes,
            edges,
            context,
            source: None,
        }
    }

    /// Rebuilds a graph from exported parts, checking that every edge agrees
    /// with the grammar and joins known nodes.
    pub fn from_parts(
        grammar: Arc<Grammar>,
        nodes: Vec<DiscourseNode>,
        edges: Vec<Edge>,
    ) -> Result<DiscourseGraph, String> {
        let mut by_title = BTreeMap::new();
        for node in nodes {
            let Some(m) = grammar.match_node_title(&node.title).ok().flatten() else {
                return Err(format!("node {:?} does not match any node type", node.title));
            };
            if m.type_id != node.type_id || m.content != node.content || m.citekey != node.citekey {
                return Err(format!("node {:?} disagrees with its title format", node.title));
            }
            if let Some(prev) = by_title.insert(node.title.clone(), node) {
                return Err(format!("node {:?} listed twice", prev.title));
            }
        }
        for (i, node) in by_title.values().enumerate() {
            if node.index != i {
                return Err(format!("node {:?} has index {}, expected {i}", node.title, node.index));
            }
        }
        let mut keys = BTreeSet::new();
        for edge in &edges {
            let relation = grammar
                .relation(&edge.relation_id)
                .ok_or_else(|| format!("edge uses unknown relation {:?}", edge.relation_id))?;
            if relation.label != edge.label {
                return Err(format!("edge label {:?} does not match relation {:?}", edge.label, relation.id));
            }
            for (end, ty) in [(&edge.source, &relation.source_type), (&edge.destination, &relation.destination_type)] {
                match by_title.get(end) {
                    None => return Err(format!("edge endpoint {end:?} is not a node")),
                    Some(n) if &n.type_id != ty => {
                        return Err(format!("edge endpoint {end:?} is not a {ty} node"))
                    }
                    _ => {}
                }
            }
            if edge.anchors.is_empty() {
                return Err(format!("edge {:?} has no anchors", edge.key()));
            }
            if !keys.insert(edge.key()) {
                return Err(format!("edge {:?} listed twice", edge.key()));
            }
        }
        let mut edges = edges;
        edges.sort_by(|a, b| a.key().cmp(&b.key()));
        Ok(DiscourseGraph::assemble(grammar, by_title, edges))
    }

    pub fn grammar(&self) -> &Arc<Grammar> {
        &self.grammar
    }

    pub fn nodes(&self) -> &BTreeMap<String, DiscourseNode> {
        &self.nodes
    }

    pub fn node(&self, title: &str) -> Option<&DiscourseNode> {
        self.nodes.get(title)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn source(&self) -> Option<&Arc<BlockGraph>> {
        self.source.as_ref()
    }

    fn require(&self, title: &str) -> Result<&DiscourseNode, DiscourseError> {
        self.nodes
            .get(title)
            .ok_or_else(|| DiscourseError::NoNode(title.to_string()))
    }

    /// Every relation touching `title`, sorted by (label, other node).
    pub fn discourse_context(&self, title: &str) -> Result<&[ContextEntry], DiscourseError> {
        self.require(title)?;
        Ok(&self.context[title])
    }

    pub fn evaluate_attribute(&self, title: &str, name: &str) -> Result<f64, DiscourseError> {
        let node = self.require(title)?;
        let (_, expr) = self
            .grammar
            .attribute(&node.type_id, name)
            .ok_or_else(|| DiscourseError::NoAttr {
                node_type: node.type_id.clone(),
                name: name.to_string(),
            })?;
        let entries = &self.context[title];
        Ok(expr.eval(&|label| entries.iter().filter(|e| e.label == label).count() as f64))
    }

    pub fn overlay_stats(&self, title: &str) -> Result<OverlayStats, DiscourseError> {
        self.require(title)?;
        let reference_count = self.source.as_ref().map(|graph| {
            graph
                .references_to_page(title)
                .iter()
                .filter(|id| graph.block(id.as_str()).is_some_and(|b| b.page != title))
                .count()
        });
        Ok(OverlayStats {
            relation_count: self.context[title].len(),
            reference_count,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::default_grammar;

    fn build(sources: &[(&str, &str)]) -> DiscourseGraph {
        let graph = BlockGraph::from_sources(sources.iter().copied()).unwrap();
        build_discourse_graph(Arc::new(graph), Arc::new(default_grammar()))
    }

    const E1: &str = "EVD - E1 - @s1";
    const C1: &str = "CLM - C1";

    fn one_support() -> DiscourseGraph {
        build(&[
            ("outline", "- [[CLM - C1]]\n  - [[SupportedBy]] [[EVD - E1 - @s1]]\n"),
            (C1, "- a claim\n"),
        ])
    }

    #[test]
    fn nodes_without_relations() {
        let dg = build(&[("QUE - q", "- x\n"), ("CLM - c", "- y\n"), ("EVD - e - @s", "- z\n")]);
        assert_eq!(dg.nodes().len(), 3);
        assert!(dg.edges().is_empty());
        assert!(dg.discourse_context("CLM - c").unwrap().is_empty());
        assert_eq!(dg.evaluate_attribute("CLM - c", "robustness").unwrap(), 0.0);
        assert_eq!(
            dg.overlay_stats("CLM - c").unwrap(),
            OverlayStats { relation_count: 0, reference_count: Some(0) }
        );
    }

    #[test]
    fn context_from_both_ends() {
        let dg = one_support();
        let c = dg.discourse_context(C1).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!((c[0].direction, c[0].label.as_str(), c[0].other.as_str()), (Direction::Incoming, "SupportedBy", E1));
        let e = dg.discourse_context(E1).unwrap();
        assert_eq!((e[0].direction, e[0].label.as_str(), e[0].other.as_str()), (Direction::Outgoing, "Supports", C1));
        assert_eq!(dg.overlay_stats(C1).unwrap(), OverlayStats { relation_count: 1, reference_count: Some(1) });
        assert_eq!(dg.discourse_context("nope").unwrap_err().code(), "E_NO_NODE");
    }

    #[test]
    fn virtual_evidence_is_still_a_node() {
        let dg = one_support();
        assert!(dg.node(E1).unwrap().is_virtual);
        assert!(!dg.node(C1).unwrap().is_virtual);
    }

    #[test]
    fn attribute_counts() {
        let dg = build(&[(
            "o",
            "- [[CLM - C]]\n  - [[SupportedBy]] [[EVD - a - @k]]\n  - [[SupportedBy]] [[EVD - b - @k]]\n  - [[OpposedBy]] [[EVD - c - @k]]\n",
        )]);
        assert_eq!(dg.evaluate_attribute("CLM - C", "robustness").unwrap(), 1.0);
        let labels: Vec<_> = dg.discourse_context("CLM - C").unwrap().iter().map(|e| e.label.as_str()).collect();
        assert_eq!(labels, ["OpposedBy", "SupportedBy", "SupportedBy"]);
        let g = default_grammar().define_attribute("CLM", "weighted", "2*(count(SupportedBy)+1)").unwrap();
        let graph = dg.source().unwrap().clone();
        let dg2 = build_discourse_graph(graph, Arc::new(g));
        assert_eq!(dg2.evaluate_attribute("CLM - C", "weighted").unwrap(), 6.0);
        assert_eq!(dg2.evaluate_attribute("EVD - a - @k", "weighted").unwrap_err().code(), "E_NO_ATTR");
    }

    #[test]
    fn self_page_references_are_not_counted() {
        let dg = build(&[
            (C1, "- see [[CLM - C1]]\n"),
            ("a", "- [[CLM - C1]]\n"),
            ("b", "- [[CLM - C1]] and [[CLM - C1]]\n"),
        ]);
        assert_eq!(dg.overlay_stats(C1).unwrap().reference_count, Some(2));
    }
}
