//! Reference relation matcher that tries every value for every variable.
//!
//! It shares nothing with the planned matcher except the parsed block data:
//! no plan, no reference index, no child lists. Clauses are tested as soon as
//! all of their variables have values, which prunes without changing the
//! answer.

use std::collections::{BTreeMap, BTreeSet};

use discourse_core::grammar::{Clause, Grammar, RelationPattern, DESTINATION, SOURCE};
use discourse_core::notebook::{BlockGraph, RefTarget};

pub type Binding = Vec<(String, RefTarget)>;
pub type EdgeKey = (String, String, String);
/// `(relation id, variant index, bindings sorted by variable name)`
pub type Anchor = (String, usize, Binding);

fn type_of(grammar: &Grammar, title: &str) -> Option<String> {
    grammar.match_node_title(title).ok().flatten().map(|m| m.type_id)
}

fn exists(graph: &BlockGraph, v: &RefTarget) -> bool {
    match v {
        RefTarget::Page(t) => graph.pages().contains_key(t),
        RefTarget::Block(id) => graph.blocks().contains_key(id),
    }
}

fn is_ancestor(graph: &BlockGraph, child: &RefTarget, ancestor: &RefTarget) -> bool {
    let (RefTarget::Block(c), RefTarget::Block(a)) = (child, ancestor) else {
        return false;
    };
    let mut cur = graph.blocks().get(c).and_then(|b| b.parent.clone());
    while let Some(p) = cur {
        if &p == a {
            return true;
        }
        cur = graph.blocks().get(&p).and_then(|b| b.parent.clone());
    }
    false
}

fn clause_holds(graph: &BlockGraph, grammar: &Grammar, clause: &Clause, env: &BTreeMap<&str, RefTarget>) -> bool {
    let val = |v: &str| env.get(v).expect("bound before checking");
    let block = |v: &str| match val(v) {
        RefTarget::Block(id) => graph.blocks().get(id),
        RefTarget::Page(_) => None,
    };
    match clause {
        Clause::Ref(a, b) => {
            let target = val(b);
            exists(graph, target)
                && block(a).is_some_and(|blk| blk.refs.iter().any(|r| &r.resolved() == target))
        }
        Clause::Child(a, b) => {
            matches!(val(b), RefTarget::Block(p) if block(a).is_some_and(|blk| blk.parent.as_ref() == Some(p)))
        }
        Clause::Desc(a, b) => is_ancestor(graph, val(a), val(b)),
        Clause::OnPage(a, p) => {
            matches!(val(p), RefTarget::Page(t) if block(a).is_some_and(|blk| &blk.page == t))
        }
        Clause::IsNode(p, ty) => {
            matches!(val(p), RefTarget::Page(t) if type_of(grammar, t).as_deref() == Some(ty.as_str()))
        }
        Clause::Title(p, lit) => matches!(val(p), RefTarget::Page(t) if t == lit),
    }
}

/// All satisfying assignments of one pattern, each sorted by variable name.
pub fn naive_matches(graph: &BlockGraph, grammar: &Grammar, pattern: &RelationPattern) -> BTreeSet<Binding> {
    let domain: Vec<RefTarget> = graph
        .pages()
        .keys()
        .map(|t| RefTarget::Page(t.clone()))
        .chain(graph.blocks().keys().map(|id| RefTarget::Block(id.clone())))
        .collect();

    let mut order: Vec<&str> = Vec::new();
    for clause in &pattern.clauses {
        for v in clause.variables() {
            if !order.contains(&v) {
                order.push(v);
            }
        }
    }
    for v in &pattern.variables {
        if !order.contains(&v.as_str()) {
            order.push(v);
        }
    }
    // clauses become checkable once their last variable (in `order`) is bound
    let mut checks: Vec<Vec<&Clause>> = vec![Vec::new(); order.len()];
    for clause in &pattern.clauses {
        let last = clause
            .variables()
            .iter()
            .map(|v| order.iter().position(|o| o == v).expect("ordered"))
            .max()
            .expect("clauses have variables");
        checks[last].push(clause);
    }

    let mut out = BTreeSet::new();
    let mut env: BTreeMap<&str, RefTarget> = BTreeMap::new();
    #[allow(clippy::too_many_arguments)]
    fn go<'a>(
        depth: usize,
        order: &[&'a str],
        checks: &[Vec<&Clause>],
        domain: &[RefTarget],
        graph: &BlockGraph,
        grammar: &Grammar,
        env: &mut BTreeMap<&'a str, RefTarget>,
        out: &mut BTreeSet<Binding>,
    ) {
        if depth == order.len() {
            out.insert(env.iter().map(|(k, v)| (k.to_string(), v.clone())).collect());
            return;
        }
        for value in domain {
            env.insert(order[depth], value.clone());
            if checks[depth].iter().all(|c| clause_holds(graph, grammar, c, env)) {
                go(depth + 1, order, checks, domain, graph, grammar, env, out);
            }
        }
        env.remove(order[depth]);
    }
    go(0, &order, &checks, &domain, graph, grammar, &mut env, &mut out);
    out
}

/// Every relation edge with its anchors, computed by brute force.
pub fn naive_edges(graph: &BlockGraph, grammar: &Grammar) -> BTreeMap<EdgeKey, BTreeSet<Anchor>> {
    let mut out: BTreeMap<EdgeKey, BTreeSet<Anchor>> = BTreeMap::new();
    for relation in grammar.relation_types() {
        for (variant, pattern) in relation.patterns.iter().enumerate() {
            for binding in naive_matches(graph, grammar, pattern) {
                let get = |name: &str| binding.iter().find(|(k, _)| k == name).map(|(_, v)| v);
                let (Some(RefTarget::Page(src)), Some(RefTarget::Page(dst))) = (get(SOURCE), get(DESTINATION)) else {
                    continue;
                };
                if type_of(grammar, src).as_ref() != Some(&relation.source_type)
                    || type_of(grammar, dst).as_ref() != Some(&relation.destination_type)
                {
                    continue;
                }
                out.entry((src.clone(), relation.label.clone(), dst.clone()))
                    .or_default()
                    .insert((relation.id.clone(), variant, binding.clone()));
            }
        }
    }
    out
}

/// The matcher's edges in the shape [`naive_edges`] returns.
pub fn anchor_sets(edges: &[discourse_core::pattern::Edge]) -> BTreeMap<EdgeKey, BTreeSet<Anchor>> {
    edges
        .iter()
        .map(|e| {
            let anchors = e
                .anchors
                .iter()
                .map(|a| (a.relation_id.clone(), a.variant_index, a.bindings.clone().into_iter().collect()))
                .collect();
            ((e.source.clone(), e.label.clone(), e.destination.clone()), anchors)
        })
        .collect()
}
