use serde::{Deserialize, Serialize};

use crate::grammar::Direction;

use super::{DiscourseError, DiscourseGraph, DiscourseNode};

/// Either one specific node or any node of a type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Node(String),
    Type(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Condition {
    /// Forward or complement label, read from the found node's side.
    pub relation: String,
    pub target: Target,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySpec {
    pub find: String,
    #[serde(default)]
    pub conditions: Vec<Condition>,
    #[serde(default)]
    pub select: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Number(f64),
    String(String),
    Null,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

const METADATA: [&str; 4] = ["title", "content", "citekey", "type"];

impl DiscourseGraph {
    fn validate_query(&self, q: &QuerySpec) -> Result<(), DiscourseError> {
        let bad = |m: String| Err(DiscourseError::QueryValidate(m));
        let grammar = &self.grammar;
        if grammar.node_type(&q.find).is_none() {
            return bad(format!("unknown node type {:?}", q.find));
        }
        for (i, cond) in q.conditions.iter().enumerate() {
            let Some((relation, direction)) = grammar.resolve_label(&cond.relation) else {
                return bad(format!("conditions[{i}]: unknown relation label {:?}", cond.relation));
            };
            let (near, far) = match direction {
                Direction::Outgoing => (&relation.source_type, &relation.destination_type),
                Direction::Incoming => (&relation.destination_type, &relation.source_type),
            };
            if *near != q.find {
                return bad(format!(
                    "conditions[{i}]: {:?} is not a relation of {} nodes",
                    cond.relation, q.find
                ));
            }
            if let Target::Type(t) = &cond.target {
                if grammar.node_type(t).is_none() {
                    return bad(format!("conditions[{i}]: unknown node type {t:?}"));
                }
                if t != far {
                    return bad(format!("conditions[{i}]: {:?} only links to {far} nodes, not {t}", cond.relation));
                }
            }
        }
        for (i, name) in q.select.iter().enumerate() {
            if !METADATA.contains(&name.as_str()) && grammar.attribute(&q.find, name).is_none() {
                return bad(format!("select[{i}]: {name:?} is neither a node field nor an attribute of {}", q.find));
            }
        }
        Ok(())
    }

    fn satisfies(&self, node: &DiscourseNode, cond: &Condition) -> bool {
        self.context[&node.title].iter().any(|e| {
            e.label == cond.relation
                && match &cond.target {
                    Target::Node(title) => &e.other == title,
                    Target::Type(t) => self.nodes.get(&e.other).is_some_and(|n| &n.type_id == t),
                }
        })
    }

    fn cell(&self, node: &DiscourseNode, field: &str) -> Cell {
        match field {
            "title" => Cell::String(node.title.clone()),
            "content" => Cell::String(node.content.clone()),
            "citekey" => node.citekey.clone().map_or(Cell::Null, Cell::String),
            "type" => Cell::String(node.type_id.clone()),
            attr => Cell::Number(
                self.evaluate_attribute(&node.title, attr)
                    .expect("attribute checked during validation"),
            ),
        }
    }

    /// Nodes of `q.find` meeting every condition, one row each in title order.
    pub fn run_query(&self, q: &QuerySpec) -> Result<ResultTable, DiscourseError> {
        self.validate_query(q)?;
        let rows = self
            .nodes
            .values()
            .filter(|n| n.type_id == q.find)
            .filter(|n| q.conditions.iter().all(|c| self.satisfies(n, c)))
            .map(|n| q.select.iter().map(|f| self.cell(n, f)).collect())
            .collect();
        Ok(ResultTable {
            columns: q.select.clone(),
            rows,
        })
    }
}
