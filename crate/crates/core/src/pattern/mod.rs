//! Recognizes relation edges by matching grammar patterns against a block
//! graph, and runs patterns backwards to write new edges as notebook text.

mod plan;
mod realize;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{Clause, Grammar, NodeMatch, DESTINATION, SOURCE};
use crate::notebook::{BlockGraph, BlockId, RefTarget};

pub use plan::{compile_pattern, Access, CompiledPattern, PlanStep};
pub use realize::realize_relation;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatternError {
    #[error("no relation {0:?}")]
    NoRelation(String),
    #[error("relation {relation:?} has no pattern variant {variant}")]
    NoVariant { relation: String, variant: usize },
    #[error("cannot plan {relation:?} variant {variant}: {reason}")]
    Unplannable {
        relation: String,
        variant: usize,
        reason: String,
    },
    #[error("{title:?} is not a {expected} node")]
    TypeMismatch { title: String, expected: String },
    #[error("cannot write relation {relation:?} as text: {reason}")]
    Unrealizable { relation: String, reason: String },
}

impl PatternError {
    pub fn code(&self) -> &'static str {
        match self {
            PatternError::NoRelation(_) => "E_NO_RELATION",
            PatternError::NoVariant { .. } => "E_NO_VARIANT",
            PatternError::Unplannable { .. } => "E_UNPLANNABLE",
            PatternError::TypeMismatch { .. } => "E_TYPE_MISMATCH",
            PatternError::Unrealizable { .. } => "E_UNREALIZABLE",
        }
    }
}

/// One satisfying assignment of a pattern's variables. Values are pages (by
/// title) or blocks (by id).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MatchInstance {
    pub relation_id: String,
    pub variant_index: usize,
    pub bindings: BTreeMap<String, RefTarget>,
}

/// A typed relation between two node pages, with every match that proves it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Edge {
    pub source: String,
    pub label: String,
    pub destination: String,
    pub relation_id: String,
    pub anchors: Vec<MatchInstance>,
}

impl Edge {
    pub fn key(&self) -> (&str, &str, &str) {
        (&self.source, &self.label, &self.destination)
    }
}

/// Page titles recognized as discourse nodes, with a per-type listing.
#[derive(Debug, Clone, Default)]
pub struct NodeIndex {
    by_title: BTreeMap<String, NodeMatch>,
    by_type: BTreeMap<String, Vec<String>>,
}

impl NodeIndex {
    pub fn build(graph: &BlockGraph, grammar: &Grammar) -> NodeIndex {
        let by_title: BTreeMap<String, NodeMatch> = graph
            .titles()
            .par_iter()
            .filter_map(|title| {
                // ambiguity is rejected when the grammar loads, so an error here
                // cannot come from a validated grammar
                let m = grammar.match_node_title(title).ok().flatten()?;
                Some((title.clone(), m))
            })
            .collect();
        let mut by_type: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (title, m) in &by_title {
            by_type.entry(m.type_id.clone()).or_default().push(title.clone());
        }
        NodeIndex { by_title, by_type }
    }

    pub fn get(&self, title: &str) -> Option<&NodeMatch> {
        self.by_title.get(title)
    }

    pub fn of_type(&self, type_id: &str) -> &[String] {
        self.by_type.get(type_id).map(Vec::as_slice).unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &NodeMatch)> {
        self.by_title.iter()
    }

    pub fn len(&self) -> usize {
        self.by_title.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_title.is_empty()
    }

    fn is_type(&self, title: &str, type_id: &str) -> bool {
        self.by_title.get(title).is_some_and(|m| m.type_id == type_id)
    }
}

struct Matcher<'a> {
    graph: &'a BlockGraph,
    nodes: &'a NodeIndex,
    plan: &'a CompiledPattern,
    /// Per step: variable positions of the clause's first and optional second argument.
    slots: Vec<(usize, Option<usize>)>,
    found: Vec<Vec<RefTarget>>,
}

type Pair = (RefTarget, Option<RefTarget>);

impl Matcher<'_> {
    fn block(&self, value: &RefTarget) -> Option<&crate::notebook::Block> {
        match value {
            RefTarget::Block(id) => self.graph.block(id.as_str()),
            RefTarget::Page(_) => None,
        }
    }

    fn live(&self, target: &RefTarget) -> bool {
        match target {
            RefTarget::Block(id) => self.graph.block(id.as_str()).is_some(),
            RefTarget::Page(title) => self.graph.page(title).is_some(),
        }
    }

    fn ancestors(&self, id: &BlockId) -> Vec<BlockId> {
        let mut out = Vec::new();
        let mut cur = self.graph.block(id.as_str()).and_then(|b| b.parent.clone());
        while let Some(p) = cur {
            cur = self.graph.block(p.as_str()).and_then(|b| b.parent.clone());
            out.push(p);
        }
        out
    }

    fn holds(&self, clause: &Clause, a: &RefTarget, b: Option<&RefTarget>) -> bool {
        match (clause, b) {
            (Clause::Ref(..), Some(b)) => {
                self.live(b) && self.block(a).is_some_and(|blk| blk.references(b))
            }
            (Clause::Child(..), Some(RefTarget::Block(p))) => {
                self.block(a).is_some_and(|blk| blk.parent.as_ref() == Some(p))
            }
            (Clause::Desc(..), Some(RefTarget::Block(p))) => match a {
                RefTarget::Block(id) => self.ancestors(id).contains(p),
                RefTarget::Page(_) => false,
            },
            (Clause::OnPage(..), Some(RefTarget::Page(title))) => {
                self.block(a).is_some_and(|blk| &blk.page == title)
            }
            (Clause::IsNode(_, ty), None) => {
                matches!(a, RefTarget::Page(title) if self.nodes.is_type(title, ty))
            }
            (Clause::Title(_, lit), None) => {
                matches!(a, RefTarget::Page(title) if title == lit && self.graph.page(title).is_some())
            }
            _ => false,
        }
    }

    fn scan(&self, clause: &Clause) -> Vec<Pair> {
        let mut out = Vec::new();
        for block in self.graph.blocks().values() {
            let a = RefTarget::Block(block.id.clone());
            match clause {
                Clause::Ref(..) => {
                    for t in block.targets() {
                        if self.live(&t) {
                            out.push((a.clone(), Some(t)));
                        }
                    }
                }
                Clause::Child(..) => {
                    if let Some(p) = &block.parent {
                        out.push((a, Some(RefTarget::Block(p.clone()))));
                    }
                }
                Clause::Desc(..) => {
                    for p in self.ancestors(&block.id) {
                        out.push((a.clone(), Some(RefTarget::Block(p))));
                    }
                }
                Clause::OnPage(..) => out.push((a, Some(RefTarget::Page(block.page.clone())))),
                Clause::IsNode(..) | Clause::Title(..) => {}
            }
        }
        out
    }

    fn candidates(&self, step: &PlanStep, a: Option<&RefTarget>, b: Option<&RefTarget>) -> Vec<Pair> {
        let block_pairs = |a: &RefTarget, ids: Vec<BlockId>, first_is_new: bool| -> Vec<Pair> {
            ids.into_iter()
                .map(|id| {
                    let v = RefTarget::Block(id);
                    if first_is_new {
                        (v, Some(a.clone()))
                    } else {
                        (a.clone(), Some(v))
                    }
                })
                .collect()
        };
        match step.access {
            Access::Check => {
                let a = a.expect("bound");
                if self.holds(&step.clause, a, b) {
                    vec![(a.clone(), b.cloned())]
                } else {
                    Vec::new()
                }
            }
            Access::TitleLookup => match &step.clause {
                Clause::Title(_, lit) if self.graph.page(lit).is_some() => {
                    vec![(RefTarget::Page(lit.clone()), None)]
                }
                _ => Vec::new(),
            },
            Access::NodeTypeScan => match &step.clause {
                Clause::IsNode(_, ty) => self
                    .nodes
                    .of_type(ty)
                    .iter()
                    .map(|t| (RefTarget::Page(t.clone()), None))
                    .collect(),
                _ => Vec::new(),
            },
            Access::RefTargets => {
                let a = a.expect("bound");
                match self.block(a) {
                    Some(blk) => blk
                        .targets()
                        .into_iter()
                        .filter(|t| self.live(t))
                        .map(|t| (a.clone(), Some(t)))
                        .collect(),
                    None => Vec::new(),
                }
            }
            Access::RefSources => {
                let b = b.expect("bound");
                let ids = self
                    .graph
                    .ref_index()
                    .get(b)
                    .map(|s| s.iter().cloned().collect())
                    .unwrap_or_default();
                block_pairs(b, ids, true)
            }
            Access::Parent => {
                let a = a.expect("bound");
                let parent = self.block(a).and_then(|blk| blk.parent.clone());
                block_pairs(a, parent.into_iter().collect(), false)
            }
            Access::Children => {
                let b = b.expect("bound");
                let kids = self.block(b).map(|blk| blk.children.clone()).unwrap_or_default();
                block_pairs(b, kids, true)
            }
            Access::Ancestors => match a.expect("bound") {
                a @ RefTarget::Block(id) => block_pairs(a, self.ancestors(id), false),
                RefTarget::Page(_) => Vec::new(),
            },
            Access::Descendants => {
                let b = b.expect("bound");
                let ids = match b {
                    RefTarget::Block(id) => self.graph.descendants(id.as_str()).unwrap_or_default(),
                    RefTarget::Page(_) => Vec::new(),
                };
                block_pairs(b, ids, true)
            }
            Access::PageOf => {
                let a = a.expect("bound");
                match self.block(a) {
                    Some(blk) => vec![(a.clone(), Some(RefTarget::Page(blk.page.clone())))],
                    None => Vec::new(),
                }
            }
            Access::PageBlocks => match b.expect("bound") {
                b @ RefTarget::Page(title) => block_pairs(b, self.graph.page_blocks(title), true),
                RefTarget::Block(_) => Vec::new(),
            },
            Access::Scan => self.scan(&step.clause),
        }
    }

    fn run(&mut self, depth: usize, binding: &mut Vec<Option<RefTarget>>) {
        if depth == self.plan.steps.len() {
            self.found
                .push(binding.iter().map(|v| v.clone().expect("all variables bound")).collect());
            return;
        }
        let step = &self.plan.steps[depth];
        let (ia, ib) = self.slots[depth];
        let pairs = self.candidates(step, binding[ia].as_ref(), ib.and_then(|i| binding[i].as_ref()));
        for (va, vb) in pairs {
            let mut assigned = Vec::with_capacity(2);
            let mut ok = true;
            for (slot, value) in [(Some(ia), Some(va)), (ib, vb)] {
                let (Some(slot), Some(value)) = (slot, value) else { continue };
                match &binding[slot] {
                    Some(existing) if *existing != value => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        binding[slot] = Some(value);
                        assigned.push(slot);
                    }
                }
            }
            if ok {
                self.run(depth + 1, binding);
            }
            for slot in assigned {
                binding[slot] = None;
            }
        }
    }
}

fn match_with_index(graph: &BlockGraph, nodes: &NodeIndex, plan: &CompiledPattern) -> Vec<MatchInstance> {
    let position = |v: &str| plan.variables.iter().position(|x| x == v).expect("planned variable");
    let slots = plan
        .steps
        .iter()
        .map(|s| {
            let vars = s.clause.variables();
            (position(vars[0]), vars.get(1).map(|v| position(v)))
        })
        .collect();
    let mut m = Matcher {
        graph,
        nodes,
        plan,
        slots,
        found: Vec::new(),
    };
    let mut binding = vec![None; plan.variables.len()];
    m.run(0, &mut binding);
    let mut found = m.found;
    found.sort();
    found.dedup();
    found
        .into_iter()
        .map(|values| MatchInstance {
            relation_id: plan.relation_id.clone(),
            variant_index: plan.variant_index,
            bindings: plan.variables.iter().cloned().zip(values).collect(),
        })
        .collect()
}

/// Every satisfying assignment of `pattern`, ordered by bound values in
/// variable declaration order.
pub fn match_pattern(graph: &BlockGraph, pattern: &CompiledPattern, grammar: &Grammar) -> Vec<MatchInstance> {
    match_with_index(graph, &NodeIndex::build(graph, grammar), pattern)
}

/// All relation edges in `graph`, merged by (source, label, destination) and
/// sorted by that key.
pub fn match_all_relations(graph: &BlockGraph, grammar: &Grammar) -> Vec<Edge> {
    match_relations_indexed(graph, grammar, &NodeIndex::build(graph, grammar))
}

pub(crate) fn match_relations_indexed(graph: &BlockGraph, grammar: &Grammar, nodes: &NodeIndex) -> Vec<Edge> {
    let plans: Vec<CompiledPattern> = grammar
        .relation_types()
        .iter()
        .flat_map(|r| (0..r.patterns.len()).map(move |i| (r, i)))
        .filter_map(|(r, i)| CompiledPattern::plan(&r.id, i, &r.patterns[i]).ok())
        .collect();
    let instances: Vec<Vec<MatchInstance>> = plans
        .par_iter()
        .map(|plan| match_with_index(graph, nodes, plan))
        .collect();

    let mut edges: BTreeMap<(String, String, String), Edge> = BTreeMap::new();
    for (plan, found) in plans.iter().zip(instances) {
        let relation = grammar.relation(&plan.relation_id).expect("planned from grammar");
        for inst in found {
            let (Some(RefTarget::Page(src)), Some(RefTarget::Page(dst))) =
                (inst.bindings.get(SOURCE), inst.bindings.get(DESTINATION))
            else {
                continue;
            };
            if !nodes.is_type(src, &relation.source_type) || !nodes.is_type(dst, &relation.destination_type) {
                continue;
            }
            let key = (src.clone(), relation.label.clone(), dst.clone());
            edges
                .entry(key)
                .or_insert_with(|| Edge {
                    source: src.clone(),
                    label: relation.label.clone(),
                    destination: dst.clone(),
                    relation_id: relation.id.clone(),
                    anchors: Vec::new(),
                })
                .anchors
                .push(inst);
        }
    }
    edges
        .into_values()
        .map(|mut e| {
            e.anchors.sort();
            e
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{default_grammar, RelationPattern};

    fn outline_fixture(marker: &str) -> BlockGraph {
        let outline = format!("- [[CLM - C1]]\n  - [[{marker}]] [[EVD - E1 - @s1]]\n");
        BlockGraph::from_sources([("outline", outline.as_str())]).unwrap()
    }

    #[test]
    fn supports_plan_starts_at_the_marker() {
        let plan = compile_pattern(&default_grammar(), "supports", 0).unwrap();
        assert_eq!(plan.steps[0].clause, Clause::Title("m".into(), "SupportedBy".into()));
        assert_eq!(plan.steps[0].access, Access::TitleLookup);
        assert_eq!(plan.steps[1].clause, Clause::Ref("b2".into(), "m".into()));
        assert_eq!(plan.steps[1].access, Access::RefSources);
        assert_eq!(plan.steps.len(), 7);
    }

    #[test]
    fn single_ref_clause_scans() {
        let p = RelationPattern::new(["source", "destination"], vec![Clause::Ref("source".into(), "destination".into())]);
        let plan = CompiledPattern::plan("r", 0, &p).unwrap();
        assert_eq!(plan.steps.len(), 1);
        assert_eq!(plan.steps[0].access, Access::Scan);
    }

    #[test]
    fn disconnected_pattern_is_unplannable() {
        let p = RelationPattern::new(
            ["source", "destination"],
            vec![
                Clause::IsNode("source".into(), "EVD".into()),
                Clause::IsNode("destination".into(), "CLM".into()),
            ],
        );
        assert_eq!(CompiledPattern::plan("r", 0, &p).unwrap_err().code(), "E_UNPLANNABLE");
        assert_eq!(compile_pattern(&default_grammar(), "nope", 0).unwrap_err().code(), "E_NO_RELATION");
        assert_eq!(compile_pattern(&default_grammar(), "supports", 9).unwrap_err().code(), "E_NO_VARIANT");
    }

    #[test]
    fn empty_graph_matches_nothing() {
        let g = default_grammar();
        let plan = compile_pattern(&g, "supports", 0).unwrap();
        assert!(match_pattern(&BlockGraph::default(), &plan, &g).is_empty());
        assert!(match_all_relations(&BlockGraph::default(), &g).is_empty());
    }

    #[test]
    fn marker_child_block_yields_one_supports_match() {
        let g = default_grammar();
        let graph = outline_fixture("SupportedBy");
        let plan = compile_pattern(&g, "supports", 0).unwrap();
        let found = match_pattern(&graph, &plan, &g);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].bindings["source"], RefTarget::page("EVD - E1 - @s1"));
        assert_eq!(found[0].bindings["destination"], RefTarget::page("CLM - C1"));

        let opposed = outline_fixture("OpposedBy");
        assert!(match_pattern(&opposed, &plan, &g).is_empty());
        let opp_plan = compile_pattern(&g, "opposes", 0).unwrap();
        assert_eq!(match_pattern(&opposed, &opp_plan, &g).len(), 1);
    }

    #[test]
    fn same_relation_written_twice_merges_anchors() {
        let g = default_grammar();
        let graph = BlockGraph::from_sources([
            ("outline", "- [[CLM - C1]]\n  - [[SupportedBy]] [[EVD - E1 - @s1]]\n"),
            ("CLM - C1", "- [[SupportedBy]] [[EVD - E1 - @s1]]\n"),
        ])
        .unwrap();
        let edges = match_all_relations(&graph, &g);
        assert_eq!(edges.len(), 1);
        assert_eq!(edges[0].key(), ("EVD - E1 - @s1", "Supports", "CLM - C1"));
        let variants: Vec<usize> = edges[0].anchors.iter().map(|a| a.variant_index).collect();
        assert_eq!(variants, [0, 2]);
    }

    #[test]
    fn dangling_block_refs_do_not_match() {
        let p = RelationPattern::new(["source", "destination"], vec![Clause::Ref("source".into(), "destination".into())]);
        let plan = CompiledPattern::plan("r", 0, &p).unwrap();
        let graph = BlockGraph::from_sources([("a", "- see ((nothere)) and [[b]]\n")]).unwrap();
        let found = match_pattern(&graph, &plan, &default_grammar());
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].bindings["destination"], RefTarget::page("b"));
    }

    #[test]
    fn variables_may_share_a_value() {
        // a block that is its own referrer's parent is impossible, but the same
        // page may fill two variables
        let p = RelationPattern::new(
            ["source", "destination", "b"],
            vec![
                Clause::Ref("b".into(), "source".into()),
                Clause::Ref("b".into(), "destination".into()),
            ],
        );
        let plan = CompiledPattern::plan("r", 0, &p).unwrap();
        let graph = BlockGraph::from_sources([("a", "- [[x]]\n")]).unwrap();
        let found = match_pattern(&graph, &plan, &default_grammar());
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].bindings["source"], found[0].bindings["destination"]);
    }

    #[test]
    fn edges_need_typed_endpoints() {
        let g = default_grammar();
        // right shape, but the "evidence" page is a claim
        let graph = BlockGraph::from_sources([("o", "- [[CLM - C1]]\n  - [[SupportedBy]] [[CLM - C2]]\n")]).unwrap();
        assert!(match_all_relations(&graph, &g).is_empty());
    }
}
