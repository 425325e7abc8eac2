use std::collections::BTreeMap;

use crate::grammar::{Clause, Grammar, DESTINATION, SOURCE};
use crate::notebook::{generated_block_id, BlockEdit, BlockEdits, BlockGraph};

use super::PatternError;

struct NewBlock {
    var: String,
    parent: Option<String>,
    page: Option<String>,
    refs: Vec<String>,
}

/// Edits that write `source -[relation]-> destination` using the relation's
/// first pattern variant. Blocks not pinned to a page by the pattern are
/// appended to `target_page`.
pub fn realize_relation(
    graph: &BlockGraph,
    grammar: &Grammar,
    source: &str,
    relation_id: &str,
    destination: &str,
    target_page: &str,
) -> Result<BlockEdits, PatternError> {
    let relation = grammar
        .relation(relation_id)
        .ok_or_else(|| PatternError::NoRelation(relation_id.to_string()))?;
    for (title, expected) in [(source, &relation.source_type), (destination, &relation.destination_type)] {
        let actual = grammar.match_node_title(title).ok().flatten();
        if actual.as_ref().map(|m| &m.type_id) != Some(expected) {
            return Err(PatternError::TypeMismatch {
                title: title.to_string(),
                expected: expected.clone(),
            });
        }
    }
    let fail = |reason: String| PatternError::Unrealizable {
        relation: relation_id.to_string(),
        reason,
    };
    let pattern = relation
        .patterns
        .first()
        .ok_or_else(|| fail("relation has no patterns".to_string()))?;

    let mut pages: BTreeMap<&str, String> = BTreeMap::new();
    pages.insert(SOURCE, source.to_string());
    pages.insert(DESTINATION, destination.to_string());
    for clause in &pattern.clauses {
        if let Clause::Title(v, lit) = clause {
            if let Some(prev) = pages.insert(v, lit.clone()) {
                if &prev != lit {
                    return Err(fail(format!("{v:?} must be titled both {prev:?} and {lit:?}")));
                }
            }
        }
    }
    for clause in &pattern.clauses {
        if let Clause::IsNode(v, _) = clause {
            if *v != SOURCE && *v != DESTINATION {
                return Err(fail(format!("no concrete page for node variable {v:?}")));
            }
        }
    }
    for title in pages.values() {
        if title.contains("[[") || title.contains("]]") || title.contains('\n') {
            return Err(fail(format!("{title:?} cannot be written as a page link")));
        }
    }

    let mut blocks: Vec<NewBlock> = Vec::new();
    let block_index = |blocks: &mut Vec<NewBlock>, v: &str| -> Result<usize, PatternError> {
        if pages.contains_key(v) {
            return Err(fail(format!("{v:?} is used as both a page and a block")));
        }
        Ok(match blocks.iter().position(|b| b.var == v) {
            Some(i) => i,
            None => {
                blocks.push(NewBlock {
                    var: v.to_string(),
                    parent: None,
                    page: None,
                    refs: Vec::new(),
                });
                blocks.len() - 1
            }
        })
    };
    let mut pinned: Vec<(String, String)> = Vec::new();
    for clause in &pattern.clauses {
        match clause {
            Clause::Ref(b, x) => {
                let i = block_index(&mut blocks, b)?;
                let title = pages
                    .get(x.as_str())
                    .ok_or_else(|| fail(format!("block {b:?} references {x:?}, which has no fixed title")))?;
                blocks[i].refs.push(format!("[[{title}]]"));
            }
            Clause::Child(a, p) | Clause::Desc(a, p) => {
                block_index(&mut blocks, p)?;
                let i = block_index(&mut blocks, a)?;
                match &blocks[i].parent {
                    Some(existing) if existing != p => {
                        return Err(fail(format!("{a:?} needs two different parents")))
                    }
                    _ => blocks[i].parent = Some(p.clone()),
                }
            }
            Clause::OnPage(b, p) => {
                block_index(&mut blocks, b)?;
                let title = pages
                    .get(p.as_str())
                    .ok_or_else(|| fail(format!("page variable {p:?} has no fixed title")))?;
                pinned.push((b.clone(), title.clone()));
            }
            Clause::IsNode(..) | Clause::Title(..) => {}
        }
    }

    // resolve each block's page through its root, rejecting cycles
    let position = |blocks: &[NewBlock], v: &str| blocks.iter().position(|b| b.var == v).expect("registered");
    let mut root_of = Vec::with_capacity(blocks.len());
    for i in 0..blocks.len() {
        let mut cur = i;
        let mut steps = 0;
        while let Some(p) = &blocks[cur].parent {
            cur = position(&blocks, p);
            steps += 1;
            if steps > blocks.len() {
                return Err(fail("block nesting is cyclic".to_string()));
            }
        }
        root_of.push(cur);
    }
    for (var, title) in &pinned {
        let root = root_of[position(&blocks, var)];
        match &blocks[root].page {
            Some(existing) if existing != title => {
                return Err(fail(format!("blocks must sit on both {existing:?} and {title:?}")))
            }
            _ => blocks[root].page = Some(title.clone()),
        }
    }

    let mut edits = Vec::new();
    let mut next_root: BTreeMap<String, usize> = BTreeMap::new();
    let mut emitted: BTreeMap<usize, (String, Vec<usize>, usize)> = BTreeMap::new();
    // preorder: roots in first-seen order, each followed by its subtree
    fn visit(i: usize, blocks: &[NewBlock], order: &mut Vec<usize>) {
        order.push(i);
        for (j, b) in blocks.iter().enumerate() {
            if b.parent.as_deref() == Some(blocks[i].var.as_str()) {
                visit(j, blocks, order);
            }
        }
    }
    let mut order = Vec::new();
    for (i, b) in blocks.iter().enumerate() {
        if b.parent.is_none() {
            visit(i, &blocks, &mut order);
        }
    }
    for i in order {
        let block = &blocks[i];
        let text = block.refs.join(" ");
        let (page, path, parent_id) = match &block.parent {
            None => {
                let page = block.page.clone().unwrap_or_else(|| target_page.to_string());
                let existing = graph
                    .page(&page)
                    .filter(|p| !p.is_virtual)
                    .map_or(0, |p| p.blocks.len());
                let slot = next_root.entry(page.clone()).or_insert(existing);
                let path = vec![*slot];
                *slot += 1;
                (page, path, None)
            }
            Some(p) => {
                let pi = position(&blocks, p);
                let (page, parent_path, kids) = emitted.get_mut(&pi).expect("parent emitted first");
                let mut path = parent_path.clone();
                path.push(*kids);
                *kids += 1;
                let parent_id = generated_block_id(page, parent_path);
                (page.clone(), path, Some(parent_id))
            }
        };
        edits.push(BlockEdit::Insert {
            page: page.clone(),
            parent: parent_id,
            index: *path.last().expect("non-empty path"),
            text,
        });
        emitted.insert(i, (page, path, 0));
    }
    Ok(BlockEdits(edits))
}
