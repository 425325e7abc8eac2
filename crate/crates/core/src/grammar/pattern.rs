//! Relation patterns: conjunctive clause lists over block-graph primitives.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub const SOURCE: &str = "source";
pub const DESTINATION: &str = "destination";

/// One conjunct of a relation pattern.
///
/// JSON encoding is a flat array: `["ref","b2","source"]`, `["is-node","source","EVD"]`,
/// `["title","m","SupportedBy"]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub enum Clause {
    /// Block `.0` references page or block `.1`.
    Ref(String, String),
    /// Block `.0` is a direct child of block `.1`.
    Child(String, String),
    /// Block `.0` is a transitive descendant of block `.1`.
    Desc(String, String),
    /// Block `.0` belongs to page `.1`.
    OnPage(String, String),
    /// Page `.0`'s title matches node type `.1`.
    IsNode(String, String),
    /// Page `.0` has exactly the title `.1`.
    Title(String, String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClauseOp {
    Ref,
    Child,
    Desc,
    OnPage,
    IsNode,
    Title,
}

impl ClauseOp {
    pub fn name(self) -> &'static str {
        match self {
            ClauseOp::Ref => "ref",
            ClauseOp::Child => "child",
            ClauseOp::Desc => "desc",
            ClauseOp::OnPage => "on-page",
            ClauseOp::IsNode => "is-node",
            ClauseOp::Title => "title",
        }
    }
}

impl Clause {
    pub fn op(&self) -> ClauseOp {
        match self {
            Clause::Ref(..) => ClauseOp::Ref,
            Clause::Child(..) => ClauseOp::Child,
            Clause::Desc(..) => ClauseOp::Desc,
            Clause::OnPage(..) => ClauseOp::OnPage,
            Clause::IsNode(..) => ClauseOp::IsNode,
            Clause::Title(..) => ClauseOp::Title,
        }
    }

    /// Variable arguments in positional order. `is-node` and `title` carry a
    /// literal second argument.
    pub fn variables(&self) -> Vec<&str> {
        match self {
            Clause::Ref(a, b) | Clause::Child(a, b) | Clause::Desc(a, b) | Clause::OnPage(a, b) => {
                vec![a, b]
            }
            Clause::IsNode(p, _) | Clause::Title(p, _) => vec![p],
        }
    }

    pub fn literal(&self) -> Option<&str> {
        match self {
            Clause::IsNode(_, lit) | Clause::Title(_, lit) => Some(lit),
            _ => None,
        }
    }

    pub(crate) fn rename_literal(&self, lit: &str) -> Clause {
        match self {
            Clause::IsNode(p, _) => Clause::IsNode(p.clone(), lit.to_string()),
            Clause::Title(p, _) => Clause::Title(p.clone(), lit.to_string()),
            other => other.clone(),
        }
    }
}

impl TryFrom<Vec<String>> for Clause {
    type Error = String;

    fn try_from(parts: Vec<String>) -> Result<Self, Self::Error> {
        let [op, a, b]: [String; 3] = parts
            .try_into()
            .map_err(|p: Vec<String>| format!("clause must have an op and 2 arguments, got {} items", p.len()))?;
        Ok(match op.as_str() {
            "ref" => Clause::Ref(a, b),
            "child" => Clause::Child(a, b),
            "desc" => Clause::Desc(a, b),
            "on-page" => Clause::OnPage(a, b),
            "is-node" => Clause::IsNode(a, b),
            "title" => Clause::Title(a, b),
            other => return Err(format!("unknown clause op {other:?}")),
        })
    }
}

impl From<Clause> for Vec<String> {
    fn from(c: Clause) -> Self {
        let op = c.op().name().to_string();
        match c {
            Clause::Ref(a, b)
            | Clause::Child(a, b)
            | Clause::Desc(a, b)
            | Clause::OnPage(a, b)
            | Clause::IsNode(a, b)
            | Clause::Title(a, b) => vec![op, a, b],
        }
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Clause::IsNode(p, t) => write!(f, "is-node({p}, {t})"),
            Clause::Title(p, t) => write!(f, "title({p}, {t:?})"),
            _ => {
                let vars = self.variables();
                write!(f, "{}({}, {})", self.op().name(), vars[0], vars[1])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationPattern {
    pub variables: Vec<String>,
    pub clauses: Vec<Clause>,
}

impl RelationPattern {
    pub fn new<V: Into<String>>(variables: impl IntoIterator<Item = V>, clauses: Vec<Clause>) -> Self {
        RelationPattern {
            variables: variables.into_iter().map(Into::into).collect(),
            clauses,
        }
    }

    /// Structural problems with this pattern, given the declared node type ids.
    pub(crate) fn problems(&self, node_types: &BTreeSet<&str>) -> Vec<String> {
        let mut out = Vec::new();
        let mut declared = BTreeSet::new();
        for v in &self.variables {
            if v.is_empty() {
                out.push("empty variable name".to_string());
            } else if !declared.insert(v.as_str()) {
                out.push(format!("variable {v:?} declared twice"));
            }
        }
        for reserved in [SOURCE, DESTINATION] {
            if !declared.contains(reserved) {
                out.push(format!("reserved variable {reserved:?} is not declared"));
            }
        }
        if self.clauses.is_empty() {
            out.push("pattern has no clauses".to_string());
        }

        let mut used = BTreeSet::new();
        for (i, clause) in self.clauses.iter().enumerate() {
            for v in clause.variables() {
                if !declared.contains(v) {
                    out.push(format!("clauses[{i}]: undeclared variable {v:?}"));
                }
                used.insert(v);
            }
            match clause {
                Clause::IsNode(_, t) if !node_types.contains(t.as_str()) => {
                    out.push(format!("clauses[{i}]: unknown node type {t:?}"));
                }
                Clause::Title(_, lit) if lit.trim().is_empty() || lit.trim() != lit => {
                    out.push(format!("clauses[{i}]: title literal {lit:?} is not a normalized title"));
                }
                _ => {}
            }
        }
        for v in &declared {
            if !used.contains(v) {
                out.push(format!("variable {v:?} appears in no clause"));
            }
        }
        if out.is_empty() && !self.is_connected() {
            out.push("clause graph is disconnected".to_string());
        }
        out
    }

    /// True when every variable is linked to every other through shared clauses.
    pub fn is_connected(&self) -> bool {
        let mut parent: BTreeMap<&str, &str> = BTreeMap::new();
        fn find<'a>(parent: &mut BTreeMap<&'a str, &'a str>, v: &'a str) -> &'a str {
            let p = *parent.entry(v).or_insert(v);
            if p == v {
                v
            } else {
                let root = find(parent, p);
                parent.insert(v, root);
                root
            }
        }
        for clause in &self.clauses {
            let vars = clause.variables();
            let first = find(&mut parent, vars[0]);
            for v in &vars[1..] {
                let other = find(&mut parent, v);
                parent.insert(other, first);
            }
        }
        for v in &self.variables {
            find(&mut parent, v);
        }
        let roots: BTreeSet<&str> = self
            .variables
            .iter()
            .map(|v| find(&mut parent, v))
            .collect();
        roots.len() <= 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clause_json_encoding() {
        let c = Clause::IsNode("source".into(), "EVD".into());
        assert_eq!(serde_json::to_string(&c).unwrap(), r#"["is-node","source","EVD"]"#);
        let back: Clause = serde_json::from_str(r#"["on-page","b","destination"]"#).unwrap();
        assert_eq!(back, Clause::OnPage("b".into(), "destination".into()));
        assert!(serde_json::from_str::<Clause>(r#"["near","a","b"]"#).is_err());
        assert!(serde_json::from_str::<Clause>(r#"["ref","a"]"#).is_err());
    }

    #[test]
    fn connectivity() {
        let connected = RelationPattern::new(
            ["source", "destination", "b"],
            vec![
                Clause::Ref("b".into(), "source".into()),
                Clause::OnPage("b".into(), "destination".into()),
            ],
        );
        assert!(connected.is_connected());
        let split = RelationPattern::new(
            ["source", "destination", "m"],
            vec![
                Clause::IsNode("source".into(), "EVD".into()),
                Clause::IsNode("destination".into(), "CLM".into()),
                Clause::Title("m".into(), "X".into()),
            ],
        );
        assert!(!split.is_connected());
        let types = BTreeSet::from(["EVD", "CLM"]);
        assert!(connected.problems(&types).is_empty());
        assert_eq!(split.problems(&types), vec!["clause graph is disconnected"]);
    }

    #[test]
    fn problems_reported() {
        let types = BTreeSet::from(["EVD"]);
        let p = RelationPattern::new(
            ["source", "x"],
            vec![
                Clause::Ref("b".into(), "source".into()),
                Clause::IsNode("source".into(), "NOPE".into()),
            ],
        );
        let problems = p.problems(&types);
        assert!(problems.iter().any(|m| m.contains("\"destination\" is not declared")));
        assert!(problems.iter().any(|m| m.contains("undeclared variable \"b\"")));
        assert!(problems.iter().any(|m| m.contains("unknown node type")));
        assert!(problems.iter().any(|m| m.contains("\"x\" appears in no clause")));
    }
}
