//! Inline reference extraction: `[[Page]]`, `#tag`, `#[[Multi Word]]`, `((block-id))`.

use serde::{Deserialize, Serialize};

use super::BlockId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RefKind {
    PageRef,
    TagRef,
    BlockRef,
}

/// One reference occurrence inside a block's text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ref {
    pub kind: RefKind,
    pub target: String,
    /// Byte offsets `[start, end)` into the block text, covering the full markup.
    pub span: (usize, usize),
}

/// What a reference points at. Page- and tag-refs both resolve to a page title.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefTarget {
    Page(String),
    Block(BlockId),
}

impl RefTarget {
    pub fn page(title: impl Into<String>) -> Self {
        RefTarget::Page(title.into())
    }

    pub fn block(id: impl Into<BlockId>) -> Self {
        RefTarget::Block(id.into())
    }
}

impl Ref {
    pub fn resolved(&self) -> RefTarget {
        match self.kind {
            RefKind::PageRef | RefKind::TagRef => RefTarget::Page(self.target.clone()),
            RefKind::BlockRef => RefTarget::Block(BlockId::from(self.target.as_str())),
        }
    }
}

/// Finds every reference in `text`, ordered by start offset with non-overlapping spans.
///
/// Malformed bracket sequences are left as plain text. A `[[...]]` containing
/// nested links resolves to the outermost balanced pair.
pub fn extract_refs(text: &str) -> Vec<Ref> {
    let bytes = text.as_bytes();
    let mut refs = Vec::new();
    let mut i = 0;

    while i < bytes.len() {
        match bytes[i] {
            b'[' if bytes.get(i + 1) == Some(&b'[') => {
                if let Some(end) = balanced_link_end(bytes, i) {
                    if let Some(target) = link_target(text, i, end) {
                        refs.push(Ref {
                            kind: RefKind::PageRef,
                            target,
                            span: (i, end),
                        });
                        i = end;
                        continue;
                    }
                }
            }
            b'#' if tag_may_start(text, i) => {
                if bytes.get(i + 1) == Some(&b'[') && bytes.get(i + 2) == Some(&b'[') {
                    if let Some(end) = balanced_link_end(bytes, i + 1) {
                        if let Some(target) = link_target(text, i + 1, end) {
                            refs.push(Ref {
                                kind: RefKind::TagRef,
                                target,
                                span: (i, end),
                            });
                            i = end;
                            continue;
                        }
                    }
                } else {
                    let end = text[i + 1..]
                        .char_indices()
                        .find(|&(_, c)| !is_tag_char(c))
                        .map(|(off, _)| i + 1 + off)
                        .unwrap_or(text.len());
                    // trailing punctuation that ends a sentence is not part of the tag
                    let word = text[i + 1..end].trim_end_matches(['-', '/']);
                    if !word.is_empty() {
                        let end = i + 1 + word.len();
                        refs.push(Ref {
                            kind: RefKind::TagRef,
                            target: word.to_string(),
                            span: (i, end),
                        });
                        i = end;
                        continue;
                    }
                }
            }
            b'(' if bytes.get(i + 1) == Some(&b'(') => {
                let start = i + 2;
                let mut j = start;
                while j < bytes.len() && is_block_id_byte(bytes[j]) {
                    j += 1;
                }
                if j > start && bytes.get(j) == Some(&b')') && bytes.get(j + 1) == Some(&b')') {
                    refs.push(Ref {
                        kind: RefKind::BlockRef,
                        target: text[start..j].to_string(),
                        span: (i, j + 2),
                    });
                    i = j + 2;
                    continue;
                }
            }
            _ => {}
        }
        i += 1;
    }

    refs
}

/// Returns the offset just past the `]]` that balances the `[[` at `open`.
fn balanced_link_end(bytes: &[u8], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut j = open;
    while j + 1 < bytes.len() {
        if bytes[j] == b'[' && bytes[j + 1] == b'[' {
            depth += 1;
            j += 2;
        } else if bytes[j] == b']' && bytes[j + 1] == b']' {
            depth -= 1;
            j += 2;
            if depth == 0 {
                return Some(j);
            }
        } else if bytes[j] == b'\n' {
            return None;
        } else {
            j += 1;
        }
    }
    None
}

fn link_target(text: &str, open: usize, end: usize) -> Option<String> {
    let inner = text[open + 2..end - 2].trim();
    (!inner.is_empty()).then(|| inner.to_string())
}

fn tag_may_start(text: &str, i: usize) -> bool {
    match text[..i].chars().next_back() {
        None => true,
        Some(c) => c.is_whitespace() || c == '(',
    }
}

fn is_tag_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '/')
}

fn is_block_id_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'-'
}

#[cfg(test)]
mod tests {
    use super::*;

    fn targets(text: &str) -> Vec<(RefKind, String)> {
        extract_refs(text)
            .into_iter()
            .map(|r| (r.kind, r.target))
            .collect()
    }

    #[test]
    fn plain_text_has_no_refs() {
        assert!(extract_refs("no links here").is_empty());
    }

    #[test]
    fn marker_and_evidence_links() {
        let refs = extract_refs("[[SupportedBy]] [[EVD - E1 - @src1]]");
        assert_eq!(refs.len(), 2);
        assert_eq!(refs[0].kind, RefKind::PageRef);
        assert_eq!(refs[0].target, "SupportedBy");
        assert_eq!(refs[0].span, (0, 15));
        assert_eq!(refs[1].target, "EVD - E1 - @src1");
        assert_eq!(refs[1].span, (16, 36));
    }

    /// Hand-written scanner for exactly the `((id))` and `#word` forms, used as an oracle.
    fn naive_block_and_word_tags(text: &str) -> Vec<(RefKind, String, usize, usize)> {
        let mut out = Vec::new();
        for (i, _) in text.match_indices("((") {
            if let Some(close) = text[i..].find("))") {
                let inner = &text[i + 2..i + close];
                if !inner.is_empty() && inner.chars().all(|c| c.is_ascii_alphanumeric()) {
                    out.push((RefKind::BlockRef, inner.to_string(), i, i + close + 2));
                }
            }
        }
        for (i, _) in text.match_indices(" #") {
            let rest = &text[i + 2..];
            let word: String = rest.chars().take_while(|c| c.is_alphanumeric()).collect();
            out.push((RefKind::TagRef, word.clone(), i + 1, i + 2 + word.len()));
        }
        out.sort_by_key(|r| r.2);
        out
    }

    #[test]
    fn block_ref_and_tag_match_oracle() {
        let text = "see ((abc123)) and #method";
        let got: Vec<_> = extract_refs(text)
            .into_iter()
            .map(|r| (r.kind, r.target, r.span.0, r.span.1))
            .collect();
        assert_eq!(got, naive_block_and_word_tags(text));
        assert_eq!(got[0].1, "abc123");
        assert_eq!(got[1].1, "method");
    }

    #[test]
    fn multi_word_tag() {
        let refs = extract_refs("filed under #[[Open Problems]].");
        assert_eq!(refs.len(), 1);
        assert_eq!(refs[0].kind, RefKind::TagRef);
        assert_eq!(refs[0].target, "Open Problems");
        assert_eq!(refs[0].span, (12, 30));
        assert_eq!(refs[0].resolved(), RefTarget::page("Open Problems"));
    }

    #[test]
    fn nested_link_resolves_to_outermost() {
        let refs = extract_refs("x [[outer [[inner]] tail]] y");
        assert_eq!(targets("x [[outer [[inner]] tail]] y").len(), 1);
        assert_eq!(refs[0].target, "outer [[inner]] tail");
        assert_eq!(refs[0].span, (2, 26));
    }

    #[test]
    fn malformed_brackets_are_plain_text() {
        assert!(extract_refs("[[unclosed").is_empty());
        assert!(extract_refs("[[]] and [[   ]]").is_empty());
        assert!(extract_refs("((not an id!))").is_empty());
        assert!(extract_refs("(()) ((abc)").is_empty());
        // an unbalanced opener does not hide a later well-formed link
        assert_eq!(
            targets("[[ broken [[fine]]"),
            vec![(RefKind::PageRef, "fine".to_string())]
        );
    }

    #[test]
    fn hash_inside_words_is_not_a_tag() {
        assert!(extract_refs("C# and page#anchor").is_empty());
        assert!(extract_refs("# heading").is_empty());
        assert_eq!(
            targets("(#todo) end #done."),
            vec![
                (RefKind::TagRef, "todo".to_string()),
                (RefKind::TagRef, "done".to_string())
            ]
        );
    }

    #[test]
    fn links_do_not_span_lines() {
        assert!(extract_refs("[[first\nsecond]]").is_empty());
    }

    #[test]
    fn unicode_offsets_are_byte_offsets() {
        let text = "é [[Über]] #naïve";
        let refs = extract_refs(text);
        assert_eq!(refs.len(), 2);
        for r in &refs {
            assert!(text.is_char_boundary(r.span.0) && text.is_char_boundary(r.span.1));
        }
        assert_eq!(&text[refs[0].span.0..refs[0].span.1], "[[Über]]");
        assert_eq!(&text[refs[1].span.0..refs[1].span.1], "#naïve");
    }
}
