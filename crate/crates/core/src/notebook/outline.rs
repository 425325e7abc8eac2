//! Outline text <-> block tree.

use std::sync::OnceLock;

use regex::Regex;

use super::{extract_refs, generated_block_id, Block, BlockId, NotebookError, Page};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum IndentUnit {
    Tab,
    TwoSpaces,
}

fn explicit_id_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?:^| )\^([A-Za-z0-9-]+)$").unwrap())
}

/// Splits a trailing ` ^id` token off the first line of a block.
pub(crate) fn split_explicit_id(line: &str) -> (&str, Option<&str>) {
    match explicit_id_re().captures(line) {
        Some(caps) => {
            let whole = caps.get(0).unwrap();
            (&line[..whole.start()], Some(caps.get(1).unwrap().as_str()))
        }
        None => (line, None),
    }
}

struct RawBlock {
    text: String,
    explicit_id: Option<String>,
    parent: Option<usize>,
    children: Vec<usize>,
}

/// Parses one page's outline text into its page record and blocks (preorder).
pub fn parse_page(title: &str, text: &str) -> Result<(Page, Vec<Block>), NotebookError> {
    let title = title.trim();
    let normalized;
    let text = if text.contains('\r') {
        normalized = text.replace("\r\n", "\n");
        normalized.as_str()
    } else {
        text
    };

    let mut unit: Option<IndentUnit> = None;
    let mut raw: Vec<RawBlock> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    // stack[d] = index of the most recent block at depth d
    let mut stack: Vec<usize> = Vec::new();

    for (lineno, line) in text.split('\n').enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let indent_len = line.len() - line.trim_start_matches([' ', '\t']).len();
        let (indent, rest) = line.split_at(indent_len);
        let rest = rest.trim_end();

        let content = if rest == "-" {
            Some("")
        } else {
            rest.strip_prefix("- ")
        };

        let Some(content) = content else {
            // continuation of the previous block, or a leading non-bullet paragraph
            match raw.last_mut() {
                Some(last) => {
                    last.text.push('\n');
                    last.text.push_str(rest);
                }
                None => {
                    roots.push(0);
                    stack = vec![0];
                    raw.push(RawBlock {
                        text: rest.to_string(),
                        explicit_id: None,
                        parent: None,
                        children: Vec::new(),
                    });
                }
            }
            continue;
        };

        let depth = indent_depth(indent, &mut unit)
            .map_err(|message| NotebookError::Indent {
                file: title.to_string(),
                line: lineno,
                message,
            })?;
        if depth > stack.len() {
            return Err(NotebookError::Indent {
                file: title.to_string(),
                line: lineno,
                message: format!(
                    "indentation jumps from depth {} to {depth}",
                    stack.len().saturating_sub(1)
                ),
            });
        }
        stack.truncate(depth);

        let (body, explicit_id) = split_explicit_id(content);
        let idx = raw.len();
        let parent = stack.last().copied();
        match parent {
            Some(p) => raw[p].children.push(idx),
            None => roots.push(idx),
        }
        raw.push(RawBlock {
            text: body.to_string(),
            explicit_id: explicit_id.map(str::to_string),
            parent,
            children: Vec::new(),
        });
        stack.push(idx);
    }

    // assign ids in preorder from sibling-index paths
    let mut ids: Vec<Option<BlockId>> = (0..raw.len()).map(|_| None).collect();
    let mut order = Vec::with_capacity(raw.len());
    let mut work: Vec<(usize, Vec<usize>)> = roots
        .iter()
        .enumerate()
        .rev()
        .map(|(i, &r)| (r, vec![i]))
        .collect();
    while let Some((idx, path)) = work.pop() {
        let id = match &raw[idx].explicit_id {
            Some(explicit) => BlockId::from(explicit.as_str()),
            None => generated_block_id(title, &path),
        };
        ids[idx] = Some(id);
        order.push(idx);
        for (i, &child) in raw[idx].children.iter().enumerate().rev() {
            let mut child_path = path.clone();
            child_path.push(i);
            work.push((child, child_path));
        }
    }
    let ids: Vec<BlockId> = ids.into_iter().map(|id| id.expect("every block visited")).collect();

    let blocks = order
        .into_iter()
        .map(|idx| {
            let rb = &raw[idx];
            Block {
                id: ids[idx].clone(),
                page: title.to_string(),
                parent: rb.parent.map(|p| ids[p].clone()),
                children: rb.children.iter().map(|&c| ids[c].clone()).collect(),
                refs: extract_refs(&rb.text),
                text: rb.text.clone(),
            }
        })
        .collect();

    let page = Page {
        title: title.to_string(),
        blocks: roots.iter().map(|&r| ids[r].clone()).collect(),
        is_virtual: false,
        source: None,
    };
    Ok((page, blocks))
}

fn indent_depth(indent: &str, unit: &mut Option<IndentUnit>) -> Result<usize, String> {
    if indent.is_empty() {
        return Ok(0);
    }
    let unit = *unit.get_or_insert(if indent.starts_with('\t') {
        IndentUnit::Tab
    } else {
        IndentUnit::TwoSpaces
    });
    match unit {
        IndentUnit::Tab => {
            if indent.bytes().all(|b| b == b'\t') {
                Ok(indent.len())
            } else {
                Err("mixed tabs and spaces; this file indents with tabs".to_string())
            }
        }
        IndentUnit::TwoSpaces => {
            if !indent.bytes().all(|b| b == b' ') {
                Err("mixed tabs and spaces; this file indents with two spaces".to_string())
            } else if !indent.len().is_multiple_of(2) {
                Err(format!(
                    "indentation of {} spaces is not a multiple of two",
                    indent.len()
                ))
            } else {
                Ok(indent.len() / 2)
            }
        }
    }
}

/// Canonical outline text for a block subtree list: two-space indentation,
/// continuation lines one level deeper than their bullet, ` ^id` only where the
/// id differs from the generated one.
pub(crate) fn render_tree<N: OutlineNode>(title: &str, roots: &[N]) -> String {
    let mut out = String::new();
    let mut path = Vec::new();
    for (i, root) in roots.iter().enumerate() {
        path.push(i);
        render_node(title, root, &mut path, &mut out);
        path.pop();
    }
    out
}

pub(crate) trait OutlineNode {
    fn id(&self) -> &BlockId;
    fn text(&self) -> &str;
    fn children(&self) -> &[Self]
    where
        Self: Sized;
}

fn render_node<N: OutlineNode>(title: &str, node: &N, path: &mut Vec<usize>, out: &mut String) {
    let depth = path.len() - 1;
    let mut lines = node.text().split('\n');
    let first = lines.next().unwrap_or("");
    push_indent(out, depth);
    if first.is_empty() {
        out.push('-');
    } else {
        out.push_str("- ");
        out.push_str(first);
    }
    if *node.id() != generated_block_id(title, path) {
        out.push_str(" ^");
        out.push_str(node.id().as_str());
    }
    out.push('\n');
    for line in lines {
        push_indent(out, depth + 1);
        out.push_str(line);
        out.push('\n');
    }
    for (i, child) in node.children().iter().enumerate() {
        path.push(i);
        render_node(title, child, path, out);
        path.pop();
    }
}

fn push_indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

/// Checks that `text` survives a render/parse cycle as a single block's text.
pub(crate) fn check_block_text(text: &str) -> Result<(), String> {
    let mut lines = text.split('\n');
    let first = lines.next().unwrap_or("");
    if first != first.trim_end() {
        return Err("trailing whitespace on first line".to_string());
    }
    if split_explicit_id(first).1.is_some() {
        return Err("text ends with a block id token".to_string());
    }
    for line in lines {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            return Err("blank continuation line".to_string());
        }
        if trimmed != line {
            return Err("continuation line has surrounding whitespace".to_string());
        }
        if trimmed == "-" || trimmed.starts_with("- ") {
            return Err("continuation line would start a new block".to_string());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notebook::RefKind;

    #[test]
    fn two_line_outline() {
        let (page, blocks) = parse_page("P", "- a\n  - b").unwrap();
        assert_eq!(page.blocks.len(), 1);
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[0].text, "a");
        assert_eq!(blocks[0].parent, None);
        assert_eq!(blocks[1].text, "b");
        assert_eq!(blocks[1].parent.as_ref(), Some(&blocks[0].id));
        assert_eq!(blocks[0].children, vec![blocks[1].id.clone()]);
    }

    #[test]
    fn tab_in_space_indented_file_is_rejected() {
        let err = parse_page("P", "- a\n  - x\n\t- b").unwrap_err();
        match err {
            NotebookError::Indent { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tabs_work_when_used_consistently() {
        let (_, blocks) = parse_page("P", "- a\n\t- b\n\t\t- c\n- d").unwrap();
        assert_eq!(blocks.len(), 4);
        assert_eq!(blocks[2].parent.as_ref(), Some(&blocks[1].id));
        assert_eq!(blocks[3].parent, None);
    }

    #[test]
    fn odd_indent_and_depth_jumps_are_rejected() {
        assert!(matches!(
            parse_page("P", "- a\n   - b"),
            Err(NotebookError::Indent { line: 2, .. })
        ));
        assert!(matches!(
            parse_page("P", "- a\n    - b"),
            Err(NotebookError::Indent { line: 2, .. })
        ));
        assert!(matches!(
            parse_page("P", "  - a"),
            Err(NotebookError::Indent { line: 1, .. })
        ));
    }

    #[test]
    fn explicit_and_generated_ids() {
        let (_, blocks) = parse_page("P", "- a ^x1\n- b").unwrap();
        assert_eq!(blocks[0].id.as_str(), "x1");
        assert_eq!(blocks[0].text, "a");
        // second root block: path [1]
        assert_eq!(blocks[1].id, generated_block_id("P", &[1]));
        assert_eq!(blocks[1].id.as_str().len(), 12);
    }

    #[test]
    fn crlf_and_continuation_lines() {
        let (_, blocks) =
            parse_page("P", "- first line\r\n  second line\r\n  - child [[X]]\r\n").unwrap();
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[0].text, "first line\nsecond line");
        assert_eq!(blocks[1].refs[0].kind, RefKind::PageRef);
    }

    #[test]
    fn leading_paragraph_becomes_root_block() {
        let (page, blocks) = parse_page("P", "# Heading\n- a").unwrap();
        assert_eq!(page.blocks.len(), 2);
        assert_eq!(blocks[0].text, "# Heading");
    }

    #[test]
    fn empty_bullets_and_blank_lines() {
        let (_, blocks) = parse_page("P", "-\n\n- \n  - x").unwrap();
        assert_eq!(blocks.len(), 3);
        assert_eq!(blocks[0].text, "");
        assert_eq!(blocks[1].text, "");
        assert_eq!(blocks[2].parent.as_ref(), Some(&blocks[1].id));
    }

    #[test]
    fn block_text_checks() {
        assert!(check_block_text("plain [[X]]").is_ok());
        assert!(check_block_text("two\nlines").is_ok());
        assert!(check_block_text("a ^id").is_err());
        assert!(check_block_text("a\n- b").is_err());
        assert!(check_block_text("a\n\nb").is_err());
        assert!(check_block_text("a ").is_err());
    }
}
