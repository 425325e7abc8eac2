use discourse_core::grammar::Grammar;
use discourse_core::notebook::{BlockEdit, BlockEdits, BlockGraph, NotebookError};
use serde::{Deserialize, Serialize};

use crate::error::{Result, WorkbenchError};

/// Marks part of a block's text as a discourse node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FormalizeRequest {
    pub block: String,
    /// Character offsets `[start, end)` into the block text.
    pub span: (usize, usize),
    pub node_type: String,
    #[serde(default)]
    pub citekey: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FormalizeOutcome {
    pub title: String,
    /// False when the title already had a page and the selection was pointed at it.
    pub created: bool,
    /// `E_TITLE_EXISTS` when an existing page was reused.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub notice: Option<String>,
    pub edits: BlockEdits,
}

fn byte_offset(text: &str, chars: usize) -> usize {
    text.char_indices().nth(chars).map_or(text.len(), |(b, _)| b)
}

/// Works out the page to create (if any) and the rewritten block. Nothing is written.
pub fn plan_formalize(graph: &BlockGraph, grammar: &Grammar, req: &FormalizeRequest) -> Result<FormalizeOutcome> {
    let block = graph
        .block(&req.block)
        .ok_or_else(|| NotebookError::NoBlock(req.block.as_str().into()))?;
    let text = &block.text;
    let (start, end) = req.span;
    let len = text.chars().count();
    if start >= end || end > len {
        return Err(WorkbenchError::span(format!(
            "span [{start}, {end}) is empty or outside a block of {len} characters"
        )));
    }

    let (outer_start, outer_end) = (byte_offset(text, start), byte_offset(text, end));
    let selected = &text[outer_start..outer_end];
    let content = selected.trim();
    if content.is_empty() {
        return Err(WorkbenchError::span("the selection is blank"));
    }
    // surrounding whitespace stays in the block
    let from = outer_start + (selected.len() - selected.trim_start().len());
    let to = from + content.len();
    for r in &block.refs {
        let (rs, re) = r.span;
        let overlaps = rs < to && from < re;
        let contains = from <= rs && re <= to;
        if overlaps && !contains {
            return Err(WorkbenchError::span(format!(
                "the selection cuts through the reference {:?}",
                &text[rs..re]
            )));
        }
    }

    let title = grammar.format_node_title(&req.node_type, content, req.citekey.as_deref())?;
    let exists = graph.page(&title).is_some_and(|p| !p.is_virtual);
    let rewritten = format!("{}[[{title}]]{}", &text[..from], &text[to..]);

    let mut edits = Vec::new();
    if !exists {
        let template = grammar
            .node_type(&req.node_type)
            .map(|t| t.template.clone())
            .unwrap_or_default();
        edits.push(BlockEdit::CreatePage {
            page: title.clone(),
            blocks: template,
        });
    }
    edits.push(BlockEdit::Replace {
        block: block.id.clone(),
        text: rewritten,
    });
    Ok(FormalizeOutcome {
        title,
        created: !exists,
        notice: exists.then(|| "E_TITLE_EXISTS".to_string()),
        edits: BlockEdits(edits),
    })
}
