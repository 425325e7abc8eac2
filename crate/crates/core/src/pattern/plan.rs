use std::collections::BTreeSet;

use serde::Serialize;

use crate::grammar::{Clause, Grammar, RelationPattern};

use super::PatternError;

/// How a plan step produces or checks bindings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Access {
    /// Every argument is bound; the clause is a filter.
    Check,
    /// `title(p, lit)` with `p` free: one page lookup.
    TitleLookup,
    /// `is-node(p, T)` with `p` free: every page of type `T`.
    NodeTypeScan,
    /// `ref(a, b)` with `a` bound: the targets written in `a`.
    RefTargets,
    /// `ref(a, b)` with `b` bound: the reference index entry for `b`.
    RefSources,
    /// `child(a, b)` with `a` bound.
    Parent,
    /// `child(a, b)` with `b` bound.
    Children,
    /// `desc(a, b)` with `a` bound.
    Ancestors,
    /// `desc(a, b)` with `b` bound.
    Descendants,
    /// `on-page(a, p)` with `a` bound.
    PageOf,
    /// `on-page(a, p)` with `p` bound.
    PageBlocks,
    /// First step of a pattern with no generator clause: every pair the
    /// clause relates.
    Scan,
}

impl Access {
    fn cost(self) -> u8 {
        match self {
            Access::Check => 0,
            Access::TitleLookup | Access::Parent | Access::PageOf => 1,
            Access::RefTargets | Access::Ancestors => 2,
            Access::NodeTypeScan | Access::Children => 3,
            Access::RefSources => 4,
            Access::Descendants | Access::PageBlocks => 5,
            Access::Scan => 9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlanStep {
    pub clause_index: usize,
    pub clause: Clause,
    pub access: Access,
    /// Variables bound before this step runs.
    pub bound: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompiledPattern {
    pub relation_id: String,
    pub variant_index: usize,
    pub variables: Vec<String>,
    pub steps: Vec<PlanStep>,
}

fn access_for(clause: &Clause, bound: &BTreeSet<&str>, first: bool) -> Option<Access> {
    let vars = clause.variables();
    if vars.iter().all(|v| bound.contains(v)) {
        return Some(Access::Check);
    }
    let a = bound.contains(vars[0]);
    let b = vars.get(1).is_some_and(|v| bound.contains(v));
    let access = match clause {
        Clause::Title(..) if first => Access::TitleLookup,
        Clause::IsNode(..) if first => Access::NodeTypeScan,
        Clause::Title(..) | Clause::IsNode(..) => return None,
        Clause::Ref(..) if a => Access::RefTargets,
        Clause::Ref(..) if b => Access::RefSources,
        Clause::Child(..) if a => Access::Parent,
        Clause::Child(..) if b => Access::Children,
        Clause::Desc(..) if a => Access::Ancestors,
        Clause::Desc(..) if b => Access::Descendants,
        Clause::OnPage(..) if a => Access::PageOf,
        Clause::OnPage(..) if b => Access::PageBlocks,
        _ if first => Access::Scan,
        _ => return None,
    };
    Some(access)
}

impl CompiledPattern {
    /// Orders clauses greedily: the cheapest generator first, then at each step
    /// the cheapest clause sharing an already-bound variable.
    pub fn plan(
        relation_id: &str,
        variant_index: usize,
        pattern: &RelationPattern,
    ) -> Result<CompiledPattern, PatternError> {
        let unplannable = |why: String| PatternError::Unplannable {
            relation: relation_id.to_string(),
            variant: variant_index,
            reason: why,
        };
        let declared: BTreeSet<&str> = pattern.variables.iter().map(String::as_str).collect();
        for clause in &pattern.clauses {
            if let Some(v) = clause.variables().into_iter().find(|v| !declared.contains(v)) {
                return Err(unplannable(format!("undeclared variable {v:?}")));
            }
        }
        let mut remaining: Vec<usize> = (0..pattern.clauses.len()).collect();
        let mut bound: BTreeSet<&str> = BTreeSet::new();
        let mut steps = Vec::with_capacity(remaining.len());
        while !remaining.is_empty() {
            let first = steps.is_empty();
            let best = remaining
                .iter()
                .enumerate()
                .filter_map(|(pos, &ci)| {
                    access_for(&pattern.clauses[ci], &bound, first).map(|acc| (acc.cost(), pos, ci, acc))
                })
                .min_by_key(|&(cost, pos, ..)| (cost, pos));
            let Some((_, pos, ci, access)) = best else {
                let stuck: Vec<String> = remaining.iter().map(|&ci| pattern.clauses[ci].to_string()).collect();
                return Err(unplannable(format!(
                    "clauses share no bound variable with the rest of the pattern: {}",
                    stuck.join(", ")
                )));
            };
            remaining.remove(pos);
            let clause = &pattern.clauses[ci];
            steps.push(PlanStep {
                clause_index: ci,
                clause: clause.clone(),
                access,
                bound: bound.iter().map(|v| v.to_string()).collect(),
            });
            bound.extend(clause.variables());
        }
        if let Some(v) = declared.iter().find(|v| !bound.contains(*v)) {
            return Err(unplannable(format!("variable {v:?} appears in no clause")));
        }
        Ok(CompiledPattern {
            relation_id: relation_id.to_string(),
            variant_index,
            variables: pattern.variables.clone(),
            steps,
        })
    }
}

/// Plans variant `variant_index` of relation `relation_id`.
pub fn compile_pattern(
    grammar: &Grammar,
    relation_id: &str,
    variant_index: usize,
) -> Result<CompiledPattern, PatternError> {
    let relation = grammar
        .relation(relation_id)
        .ok_or_else(|| PatternError::NoRelation(relation_id.to_string()))?;
    let pattern = relation
        .patterns
        .get(variant_index)
        .ok_or_else(|| PatternError::NoVariant {
            relation: relation_id.to_string(),
            variant: variant_index,
        })?;
    CompiledPattern::plan(relation_id, variant_index, pattern)
}
