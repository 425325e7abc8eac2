//! The user-editable discourse grammar: node types recognized by title format,
//! relation types recognized by block-graph patterns, and attributes computed
//! from relation counts.
//!
//! A [`Grammar`] is always validated. Every editing operation returns a new
//! value and leaves the receiver untouched.

mod expr;
mod pattern;
mod title;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use expr::{Expr, ExprError};
pub use pattern::{Clause, ClauseOp, RelationPattern, DESTINATION, SOURCE};
pub use title::{is_valid_citekey, TitleFormat};

use crate::canonical;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("grammar document does not parse: {0}")]
    Parse(String),
    #[error("{path}: {message}")]
    Validate { path: String, message: String },
    #[error("no node type {0:?}")]
    NoType(String),
    #[error("node type {0:?} requires a citekey")]
    CitekeyRequired(String),
    #[error("node type {0:?} has no citekey in its format")]
    CitekeyUnexpected(String),
    #[error("invalid citekey {0:?}")]
    InvalidCitekey(String),
    #[error("invalid node content {content:?}: {reason}")]
    InvalidContent { content: String, reason: String },
    #[error("title {title:?} matches several node types: {types:?}")]
    Ambiguous { title: String, types: Vec<String> },
    #[error("no relation {0:?}")]
    NoRelation(String),
    #[error("relation label {0:?} is already in use")]
    DuplicateLabel(String),
    #[error("attribute {name:?} is already defined for {node_type:?}")]
    DuplicateAttribute { node_type: String, name: String },
    #[error("cannot parse expression {expr:?}: {error}")]
    ExprParse { expr: String, error: ExprError },
    #[error("expression refers to {label:?}, which is not a relation label visible from {node_type:?}")]
    UnknownRelation { node_type: String, label: String },
}

impl GrammarError {
    pub fn code(&self) -> &'static str {
        match self {
            GrammarError::Parse(_) => "E_PARSE",
            GrammarError::Validate { .. } => "E_VALIDATE",
            GrammarError::NoType(_) => "E_NO_TYPE",
            GrammarError::CitekeyRequired(_) => "E_CITEKEY_REQUIRED",
            GrammarError::CitekeyUnexpected(_) => "E_CITEKEY_UNEXPECTED",
            GrammarError::InvalidCitekey(_) => "E_CITEKEY",
            GrammarError::InvalidContent { .. } => "E_CONTENT",
            GrammarError::Ambiguous { .. } => "E_AMBIGUOUS",
            GrammarError::NoRelation(_) => "E_NO_RELATION",
            GrammarError::DuplicateLabel(_) => "E_DUP_LABEL",
            GrammarError::DuplicateAttribute { .. } => "E_DUP_ATTR",
            GrammarError::ExprParse { .. } => "E_EXPR_PARSE",
            GrammarError::UnknownRelation { .. } => "E_UNKNOWN_RELATION",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct NodeTypeDef {
    pub id: String,
    pub label: String,
    pub format: String,
    pub shortcut: char,
    pub color: String,
    /// Block texts inserted into a newly created node page.
    #[serde(default)]
    pub template: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RelationTypeDef {
    pub id: String,
    pub label: String,
    pub complement: String,
    pub source_type: String,
    pub destination_type: String,
    pub patterns: Vec<RelationPattern>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AttributeDef {
    pub name: String,
    pub node_type: String,
    pub expr: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Outgoing,
    Incoming,
}

/// Result of recognizing a page title as a discourse node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NodeMatch {
    pub type_id: String,
    pub content: String,
    pub citekey: Option<String>,
}

/// A relation label as seen from one side of the relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisibleLabel<'g> {
    pub label: &'g str,
    pub direction: Direction,
    pub relation: &'g RelationTypeDef,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct GrammarDoc {
    node_types: Vec<NodeTypeDef>,
    relation_types: Vec<RelationTypeDef>,
    #[serde(default)]
    attributes: Vec<AttributeDef>,
    /// relation id -> marker page title written by realization
    #[serde(default)]
    markers: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct Grammar {
    doc: GrammarDoc,
    formats: Vec<TitleFormat>,
    exprs: Vec<Expr>,
}

impl PartialEq for Grammar {
    fn eq(&self, other: &Self) -> bool {
        self.doc == other.doc
    }
}

impl Eq for Grammar {}

impl Serialize for Grammar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.doc.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Grammar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = GrammarDoc::deserialize(deserializer)?;
        Grammar::from_doc(doc).map_err(serde::de::Error::custom)
    }
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> GrammarError {
    GrammarError::Validate {
        path: path.into(),
        message: message.into(),
    }
}

fn is_hex_color(s: &str) -> bool {
    s.strip_prefix('#').is_some_and(|hex| {
        matches!(hex.len(), 3 | 6) && hex.bytes().all(|b| b.is_ascii_hexdigit())
    })
}

impl Grammar {
    pub fn new(
        node_types: Vec<NodeTypeDef>,
        relation_types: Vec<RelationTypeDef>,
        attributes: Vec<AttributeDef>,
        markers: BTreeMap<String, String>,
    ) -> Result<Grammar, GrammarError> {
        Grammar::from_doc(GrammarDoc {
            node_types,
            relation_types,
            attributes,
            markers,
        })
    }

    fn from_doc(doc: GrammarDoc) -> Result<Grammar, GrammarError> {
        let mut formats = Vec::with_capacity(doc.node_types.len());
        let mut ids = BTreeSet::new();
        let mut shortcuts = BTreeMap::new();
        for (i, nt) in doc.node_types.iter().enumerate() {
            let path = format!("nodeTypes[{i}]");
            if nt.id.trim().is_empty() || nt.id.trim() != nt.id {
                return Err(invalid(format!("{path}.id"), "node type id must be a non-empty trimmed string"));
            }
            if !ids.insert(nt.id.as_str()) {
                return Err(invalid(format!("{path}.id"), format!("duplicate node type id {:?}", nt.id)));
            }
            if nt.label.trim().is_empty() {
                return Err(invalid(format!("{path}.label"), "label is empty"));
            }
            if let Some(prev) = shortcuts.insert(nt.shortcut, nt.id.as_str()) {
                return Err(invalid(
                    format!("{path}.shortcut"),
                    format!("shortcut {:?} is already used by {prev:?}", nt.shortcut),
                ));
            }
            if !is_hex_color(&nt.color) {
                return Err(invalid(format!("{path}.color"), format!("{:?} is not a hex color", nt.color)));
            }
            for (j, text) in nt.template.iter().enumerate() {
                crate::notebook::check_block_text(text)
                    .map_err(|m| invalid(format!("{path}.template[{j}]"), m))?;
            }
            let format = TitleFormat::parse(&nt.format).map_err(|m| invalid(format!("{path}.format"), m))?;
            for (j, other) in formats.iter().enumerate() {
                if format.overlaps(other) {
                    return Err(invalid(
                        format!("{path}.format"),
                        format!(
                            "format {:?} can match the same titles as {:?} (nodeTypes[{j}])",
                            nt.format, doc.node_types[j].format
                        ),
                    ));
                }
            }
            formats.push(format);
        }

        let mut relation_ids = BTreeSet::new();
        let mut labels = BTreeSet::new();
        for (i, rt) in doc.relation_types.iter().enumerate() {
            let path = format!("relationTypes[{i}]");
            if rt.id.trim().is_empty() || !relation_ids.insert(rt.id.as_str()) {
                return Err(invalid(format!("{path}.id"), format!("relation id {:?} is empty or duplicated", rt.id)));
            }
            for (field, label) in [("label", &rt.label), ("complement", &rt.complement)] {
                if label.trim().is_empty() || label.trim() != label {
                    return Err(invalid(format!("{path}.{field}"), "must be a non-empty trimmed string"));
                }
                if !labels.insert(label.as_str()) {
                    return Err(invalid(format!("{path}.{field}"), format!("label {label:?} is already used")));
                }
            }
            for (field, ty) in [("sourceType", &rt.source_type), ("destinationType", &rt.destination_type)] {
                if !ids.contains(ty.as_str()) {
                    return Err(invalid(format!("{path}.{field}"), format!("unknown node type {ty:?}")));
                }
            }
            if rt.patterns.is_empty() {
                return Err(invalid(format!("{path}.patterns"), "a relation needs at least one pattern"));
            }
            for (j, pattern) in rt.patterns.iter().enumerate() {
                if let Some(problem) = pattern.problems(&ids).into_iter().next() {
                    return Err(invalid(format!("{path}.patterns[{j}]"), problem));
                }
            }
        }

        let mut exprs = Vec::with_capacity(doc.attributes.len());
        let mut attr_names = BTreeSet::new();
        for (i, attr) in doc.attributes.iter().enumerate() {
            let path = format!("attributes[{i}]");
            if !ids.contains(attr.node_type.as_str()) {
                return Err(invalid(format!("{path}.nodeType"), format!("unknown node type {:?}", attr.node_type)));
            }
            if attr.name.trim().is_empty() {
                return Err(invalid(format!("{path}.name"), "attribute name is empty"));
            }
            if !attr_names.insert((attr.node_type.as_str(), attr.name.as_str())) {
                return Err(invalid(format!("{path}.name"), format!("duplicate attribute {:?}", attr.name)));
            }
            let expr = Expr::parse(&attr.expr).map_err(|e| invalid(format!("{path}.expr"), e.to_string()))?;
            for label in expr.labels() {
                if !label_visible(&doc.relation_types, &attr.node_type, label) {
                    return Err(invalid(
                        format!("{path}.expr"),
                        format!("{label:?} is not a relation label visible from {:?}", attr.node_type),
                    ));
                }
            }
            exprs.push(expr);
        }

        for (rel, marker) in &doc.markers {
            if !relation_ids.contains(rel.as_str()) {
                return Err(invalid(format!("markers.{rel}"), "marker for an unknown relation"));
            }
            if marker.trim().is_empty() || marker.trim() != marker {
                return Err(invalid(format!("markers.{rel}"), "marker title must be a non-empty trimmed string"));
            }
        }

        Ok(Grammar { doc, formats, exprs })
    }

    pub fn node_types(&self) -> &[NodeTypeDef] {
        &self.doc.node_types
    }

    pub fn relation_types(&self) -> &[RelationTypeDef] {
        &self.doc.relation_types
    }

    pub fn attributes(&self) -> &[AttributeDef] {
        &self.doc.attributes
    }

    pub fn markers(&self) -> &BTreeMap<String, String> {
        &self.doc.markers
    }

    pub fn node_type(&self, id: &str) -> Option<&NodeTypeDef> {
        self.doc.node_types.iter().find(|n| n.id == id)
    }

    fn node_type_index(&self, id: &str) -> Result<usize, GrammarError> {
        self.doc
            .node_types
            .iter()
            .position(|n| n.id == id)
            .ok_or_else(|| GrammarError::NoType(id.to_string()))
    }

    pub fn relation(&self, id: &str) -> Option<&RelationTypeDef> {
        self.doc.relation_types.iter().find(|r| r.id == id)
    }

    pub fn marker(&self, relation_id: &str) -> Option<&str> {
        self.doc.markers.get(relation_id).map(String::as_str)
    }

    /// The relation carrying `label` as its forward or complement name.
    pub fn resolve_label(&self, label: &str) -> Option<(&RelationTypeDef, Direction)> {
        self.doc.relation_types.iter().find_map(|r| {
            if r.label == label {
                Some((r, Direction::Outgoing))
            } else if r.complement == label {
                Some((r, Direction::Incoming))
            } else {
                None
            }
        })
    }

    /// Labels a node of `type_id` can see: forward labels of relations it is the
    /// source of, complement labels of relations it is the destination of.
    pub fn visible_labels(&self, type_id: &str) -> Vec<VisibleLabel<'_>> {
        let mut out = Vec::new();
        for r in &self.doc.relation_types {
            if r.source_type == type_id {
                out.push(VisibleLabel {
                    label: &r.label,
                    direction: Direction::Outgoing,
                    relation: r,
                });
            }
            if r.destination_type == type_id {
                out.push(VisibleLabel {
                    label: &r.complement,
                    direction: Direction::Incoming,
                    relation: r,
                });
            }
        }
        out
    }

    pub fn attribute(&self, type_id: &str, name: &str) -> Option<(&AttributeDef, &Expr)> {
        self.doc
            .attributes
            .iter()
            .zip(&self.exprs)
            .find(|(a, _)| a.node_type == type_id && a.name == name)
    }

    /// The unique node type whose format matches `title`, with captures.
    pub fn match_node_title(&self, title: &str) -> Result<Option<NodeMatch>, GrammarError> {
        let mut found: Option<NodeMatch> = None;
        let mut types = Vec::new();
        for (nt, format) in self.doc.node_types.iter().zip(&self.formats) {
            if let Some((content, citekey)) = format.capture(title) {
                types.push(nt.id.clone());
                found.get_or_insert(NodeMatch {
                    type_id: nt.id.clone(),
                    content,
                    citekey,
                });
            }
        }
        if types.len() > 1 {
            return Err(GrammarError::Ambiguous {
                title: title.to_string(),
                types,
            });
        }
        Ok(found)
    }

    /// Builds a node page title from content and (when the format needs one) a citekey.
    pub fn format_node_title(
        &self,
        type_id: &str,
        content: &str,
        citekey: Option<&str>,
    ) -> Result<String, GrammarError> {
        let format = &self.formats[self.node_type_index(type_id)?];
        let content = content.trim();
        let bad_content = |reason: &str| GrammarError::InvalidContent {
            content: content.to_string(),
            reason: reason.to_string(),
        };
        if content.is_empty() {
            return Err(bad_content("empty"));
        }
        if content.chars().any(char::is_control) {
            return Err(bad_content("contains a line break or control character"));
        }
        if content.contains("[[") || content.contains("]]") {
            return Err(bad_content("contains link brackets"));
        }
        let citekey = citekey.map(|k| k.trim().trim_start_matches('@'));
        match (format.has_citekey(), citekey) {
            (true, None) => return Err(GrammarError::CitekeyRequired(type_id.to_string())),
            (false, Some(_)) => return Err(GrammarError::CitekeyUnexpected(type_id.to_string())),
            (true, Some(k)) if !is_valid_citekey(k) => {
                return Err(GrammarError::InvalidCitekey(k.to_string()))
            }
            _ => {}
        }
        let title = format.render(content, citekey);
        match self.match_node_title(&title)? {
            Some(m) if m.type_id == type_id => Ok(title),
            _ => Err(bad_content("the resulting title does not read back as this node type")),
        }
    }

    pub fn to_canonical_json(&self) -> String {
        canonical::to_string(&self.doc)
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_canonical_json().as_bytes()))
    }

    pub fn with_node_type(&self, def: NodeTypeDef) -> Result<Grammar, GrammarError> {
        let mut doc = self.doc.clone();
        doc.node_types.push(def);
        Grammar::from_doc(doc)
    }

    pub fn with_relation_type(&self, def: RelationTypeDef) -> Result<Grammar, GrammarError> {
        let mut doc = self.doc.clone();
        doc.relation_types.push(def);
        Grammar::from_doc(doc)
    }

    /// Copies a relation's patterns under new labels and endpoint types. `is-node`
    /// clauses on `source`/`destination` are retargeted; everything else, including
    /// marker titles, is kept.
    pub fn clone_relation_pattern(
        &self,
        relation_id: &str,
        new_label: &str,
        new_complement: &str,
        new_source_type: &str,
        new_destination_type: &str,
    ) -> Result<Grammar, GrammarError> {
        let original = self
            .relation(relation_id)
            .ok_or_else(|| GrammarError::NoRelation(relation_id.to_string()))?;
        for ty in [new_source_type, new_destination_type] {
            self.node_type_index(ty)?;
        }
        for label in [new_label, new_complement] {
            if self.resolve_label(label).is_some() {
                return Err(GrammarError::DuplicateLabel(label.to_string()));
            }
        }
        if new_label == new_complement {
            return Err(GrammarError::DuplicateLabel(new_label.to_string()));
        }

        let base_id: String = new_label
            .trim()
            .to_lowercase()
            .split_whitespace()
            .collect::<Vec<_>>()
            .join("-");
        let mut id = base_id.clone();
        let mut n = 2;
        while self.relation(&id).is_some() {
            id = format!("{base_id}-{n}");
            n += 1;
        }

        let patterns = original
            .patterns
            .iter()
            .map(|p| RelationPattern {
                variables: p.variables.clone(),
                clauses: p
                    .clauses
                    .iter()
                    .map(|c| match c {
                        Clause::IsNode(v, _) if v == SOURCE => c.rename_literal(new_source_type),
                        Clause::IsNode(v, _) if v == DESTINATION => {
                            c.rename_literal(new_destination_type)
                        }
                        _ => c.clone(),
                    })
                    .collect(),
            })
            .collect();

        let mut doc = self.doc.clone();
        if let Some(marker) = doc.markers.get(relation_id).cloned() {
            doc.markers.insert(id.clone(), marker);
        }
        doc.relation_types.push(RelationTypeDef {
            id,
            label: new_label.to_string(),
            complement: new_complement.to_string(),
            source_type: new_source_type.to_string(),
            destination_type: new_destination_type.to_string(),
            patterns,
        });
        Grammar::from_doc(doc)
    }

    /// Adds a named attribute expression for a node type.
    pub fn define_attribute(
        &self,
        node_type: &str,
        name: &str,
        expr_text: &str,
    ) -> Result<Grammar, GrammarError> {
        self.node_type_index(node_type)?;
        if self.attribute(node_type, name).is_some() {
            return Err(GrammarError::DuplicateAttribute {
                node_type: node_type.to_string(),
                name: name.to_string(),
            });
        }
        let expr = Expr::parse(expr_text).map_err(|error| GrammarError::ExprParse {
            expr: expr_text.to_string(),
            error,
        })?;
        for label in expr.labels() {
            if !label_visible(&self.doc.relation_types, node_type, label) {
                return Err(GrammarError::UnknownRelation {
                    node_type: node_type.to_string(),
                    label: label.to_string(),
                });
            }
        }
        let mut doc = self.doc.clone();
        doc.attributes.push(AttributeDef {
            name: name.to_string(),
            node_type: node_type.to_string(),
            expr: expr_text.to_string(),
        });
        Grammar::from_doc(doc)
    }
}

fn label_visible(relations: &[RelationTypeDef], type_id: &str, label: &str) -> bool {
    relations.iter().any(|r| {
        (r.source_type == type_id && r.label == label)
            || (r.destination_type == type_id && r.complement == label)
    })
}

/// Parses and validates a grammar document (JSON, unknown fields rejected).
pub fn load_grammar(doc: &[u8]) -> Result<Grammar, GrammarError> {
    let doc: GrammarDoc =
        serde_json::from_slice(doc).map_err(|e| GrammarError::Parse(e.to_string()))?;
    Grammar::from_doc(doc)
}

/// Re-checks every grammar invariant.
pub fn validate(grammar: &Grammar) -> Result<(), GrammarError> {
    Grammar::from_doc(grammar.doc.clone()).map(|_| ())
}

fn clause(op: ClauseOp, a: &str, b: &str) -> Clause {
    let (a, b) = (a.to_string(), b.to_string());
    match op {
        ClauseOp::Ref => Clause::Ref(a, b),
        ClauseOp::Child => Clause::Child(a, b),
        ClauseOp::Desc => Clause::Desc(a, b),
        ClauseOp::OnPage => Clause::OnPage(a, b),
        ClauseOp::IsNode => Clause::IsNode(a, b),
        ClauseOp::Title => Clause::Title(a, b),
    }
}

/// The three marker-based writing conventions for an evidence -> claim relation.
fn marker_patterns(source_type: &str, destination_type: &str, marker: &str) -> Vec<RelationPattern> {
    use ClauseOp::*;
    let same_block = RelationPattern::new(
        [SOURCE, DESTINATION, "b1", "b2", "m"],
        vec![
            clause(IsNode, DESTINATION, destination_type),
            clause(Ref, "b1", DESTINATION),
            clause(Child, "b2", "b1"),
            clause(Ref, "b2", "m"),
            clause(Title, "m", marker),
            clause(Ref, "b2", SOURCE),
            clause(IsNode, SOURCE, source_type),
        ],
    );
    let marker_then_child = RelationPattern::new(
        [SOURCE, DESTINATION, "b1", "b2", "b3", "m"],
        vec![
            clause(IsNode, DESTINATION, destination_type),
            clause(Ref, "b1", DESTINATION),
            clause(Child, "b2", "b1"),
            clause(Ref, "b2", "m"),
            clause(Title, "m", marker),
            clause(Child, "b3", "b2"),
            clause(Ref, "b3", SOURCE),
            clause(IsNode, SOURCE, source_type),
        ],
    );
    let on_destination_page = RelationPattern::new(
        [SOURCE, DESTINATION, "b", "m"],
        vec![
            clause(IsNode, DESTINATION, destination_type),
            clause(OnPage, "b", DESTINATION),
            clause(Ref, "b", "m"),
            clause(Title, "m", marker),
            clause(Ref, "b", SOURCE),
            clause(IsNode, SOURCE, source_type),
        ],
    );
    vec![same_block, marker_then_child, on_destination_page]
}

/// The base grammar: questions, claims, evidence and sources; evidence informs
/// questions and supports or opposes claims.
pub fn default_grammar() -> Grammar {
    use ClauseOp::*;
    let node = |id: &str, label: &str, format: &str, shortcut: char, color: &str| NodeTypeDef {
        id: id.to_string(),
        label: label.to_string(),
        format: format.to_string(),
        shortcut,
        color: color.to_string(),
        template: Vec::new(),
    };
    let node_types = vec![
        node("QUE", "Question", "QUE - {content}", 'Q', "#99890e"),
        node("CLM", "Claim", "CLM - {content}", 'C', "#7da13e"),
        node("EVD", "Evidence", "EVD - {content} - {citekey}", 'E', "#db134a"),
        node("SRC", "Source", "SRC - {content}", 'S', "#9e9e9e"),
    ];

    let informs = vec![
        RelationPattern::new(
            [SOURCE, DESTINATION, "b"],
            vec![
                clause(IsNode, DESTINATION, "QUE"),
                clause(OnPage, "b", DESTINATION),
                clause(Ref, "b", SOURCE),
                clause(IsNode, SOURCE, "EVD"),
            ],
        ),
        RelationPattern::new(
            [SOURCE, DESTINATION, "q", "b"],
            vec![
                clause(IsNode, DESTINATION, "QUE"),
                clause(Ref, "q", DESTINATION),
                clause(Desc, "b", "q"),
                clause(Ref, "b", SOURCE),
                clause(IsNode, SOURCE, "EVD"),
            ],
        ),
    ];

    let relation = |id: &str, label: &str, complement: &str, dst: &str, patterns| RelationTypeDef {
        id: id.to_string(),
        label: label.to_string(),
        complement: complement.to_string(),
        source_type: "EVD".to_string(),
        destination_type: dst.to_string(),
        patterns,
    };
    let relation_types = vec![
        relation("informs", "Informs", "InformedBy", "QUE", informs),
        relation(
            "supports",
            "Supports",
            "SupportedBy",
            "CLM",
            marker_patterns("EVD", "CLM", "SupportedBy"),
        ),
        relation(
            "opposes",
            "Opposes",
            "OpposedBy",
            "CLM",
            marker_patterns("EVD", "CLM", "OpposedBy"),
        ),
    ];

    let attributes = vec![AttributeDef {
        name: "robustness".to_string(),
        node_type: "CLM".to_string(),
        expr: "1*count(SupportedBy) - 1*count(OpposedBy)".to_string(),
    }];
    let markers = BTreeMap::from([
        ("supports".to_string(), "SupportedBy".to_string()),
        ("opposes".to_string(), "OpposedBy".to_string()),
    ]);

    Grammar::new(node_types, relation_types, attributes, markers)
        .expect("the default grammar is valid")
}
