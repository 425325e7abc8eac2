//! Plain-text outline notebooks as an indexed graph of pages and blocks.
//!
//! A corpus is a directory tree of `.md` files. Each file is one page whose title
//! is the file stem; each `- ` bullet is a block, nested by indentation. Blocks
//! reference pages with `[[Title]]`, `#tag` or `#[[Multi Word]]`, and other blocks
//! with `((id))`. Referencing a page that has no file creates a virtual page.

mod edit;
mod outline;
mod refs;

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use edit::{BlockEdit, BlockEdits, EditPlan, PageWrite};
pub use outline::parse_page;
pub(crate) use outline::check_block_text;
pub use refs::{extract_refs, Ref, RefKind, RefTarget};

pub const NOTEBOOK_EXTENSION: &str = "md";

#[derive(Debug, Error)]
pub enum NotebookError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} is not valid UTF-8")]
    Encoding { path: PathBuf },
    #[error("{file}:{line}: {message}")]
    Indent {
        file: String,
        line: usize,
        message: String,
    },
    #[error("page title {title:?} is defined by both {first} and {second}")]
    DuplicateTitle {
        title: String,
        first: PathBuf,
        second: PathBuf,
    },
    #[error("block id {id:?} appears on both {first:?} and {second:?}")]
    DuplicateBlockId {
        id: BlockId,
        first: String,
        second: String,
    },
    #[error("no block with id {0:?}")]
    NoBlock(BlockId),
    #[error("no page titled {0:?}")]
    NoPage(String),
    #[error("page {0:?} already exists")]
    PageExists(String),
    #[error("invalid page title {title:?}: {reason}")]
    InvalidTitle { title: String, reason: String },
    #[error("invalid edit: {0}")]
    InvalidEdit(String),
}

impl NotebookError {
    pub fn code(&self) -> &'static str {
        match self {
            NotebookError::Io { .. } => "E_IO",
            NotebookError::Encoding { .. } => "E_ENCODING",
            NotebookError::Indent { .. } => "E_INDENT",
            NotebookError::DuplicateTitle { .. } => "E_DUP_TITLE",
            NotebookError::DuplicateBlockId { .. } => "E_DUP_BLOCK_ID",
            NotebookError::NoBlock(_) => "E_NO_BLOCK",
            NotebookError::NoPage(_) => "E_NO_PAGE",
            NotebookError::PageExists(_) => "E_PAGE_EXISTS",
            NotebookError::InvalidTitle { .. } => "E_TITLE",
            NotebookError::InvalidEdit(_) => "E_EDIT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlockId(String);

impl BlockId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for BlockId {
    fn from(s: &str) -> Self {
        BlockId(s.to_string())
    }
}

impl From<String> for BlockId {
    fn from(s: String) -> Self {
        BlockId(s)
    }
}

impl Borrow<str> for BlockId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// First 12 hex chars of SHA-256 over the page title and the sibling-index path.
/// The empty path yields the page's own stable id.
pub fn generated_block_id(page_title: &str, path: &[usize]) -> BlockId {
    hashed_block_id(page_title, path, "")
}

/// An id for a new block whose positional id is already held by another
/// block. The `+n` suffix never occurs in a path, so the result cannot equal
/// any positional id.
pub(crate) fn salted_block_id(page_title: &str, path: &[usize], salt: usize) -> BlockId {
    hashed_block_id(page_title, path, &format!("+{salt}"))
}

fn hashed_block_id(page_title: &str, path: &[usize], suffix: &str) -> BlockId {
    let mut hasher = Sha256::new();
    hasher.update(page_title.as_bytes());
    hasher.update([0u8]);
    let joined = path
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join("/");
    hasher.update(joined.as_bytes());
    hasher.update(suffix.as_bytes());
    let digest = hasher.finalize();
    BlockId(hex::encode(&digest[..6]))
}

pub fn page_uid(title: &str) -> String {
    generated_block_id(title, &[]).0
}

/// Title normalization: surrounding whitespace only, case is significant.
pub fn normalize_title(title: &str) -> &str {
    title.trim()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Page {
    pub title: String,
    /// Root blocks in outline order.
    pub blocks: Vec<BlockId>,
    #[serde(rename = "virtual")]
    pub is_virtual: bool,
    /// Source file relative to the corpus root; `None` for virtual pages.
    pub source: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub id: BlockId,
    pub page: String,
    pub parent: Option<BlockId>,
    pub children: Vec<BlockId>,
    pub text: String,
    pub refs: Vec<Ref>,
}

impl Block {
    /// Distinct resolved targets of this block's refs, in first-occurrence order.
    pub fn targets(&self) -> Vec<RefTarget> {
        let mut seen = BTreeSet::new();
        self.refs
            .iter()
            .map(Ref::resolved)
            .filter(|t| seen.insert(t.clone()))
            .collect()
    }

    pub fn references(&self, target: &RefTarget) -> bool {
        self.refs.iter().any(|r| &r.resolved() == target)
    }
}

/// Immutable snapshot of a parsed corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BlockGraph {
    pages: BTreeMap<String, Page>,
    blocks: BTreeMap<BlockId, Block>,
    ref_index: BTreeMap<RefTarget, BTreeSet<BlockId>>,
    title_index: Vec<String>,
}

impl BlockGraph {
    /// Builds a graph from in-memory page texts, as if each were a file `<title>.md`.
    pub fn from_sources<I, T, S>(sources: I) -> Result<Self, NotebookError>
    where
        I: IntoIterator<Item = (T, S)>,
        T: AsRef<str>,
        S: AsRef<str>,
    {
        let parsed = sources
            .into_iter()
            .map(|(title, text)| {
                let title = normalize_title(title.as_ref()).to_string();
                let path = PathBuf::from(format!("{title}.{NOTEBOOK_EXTENSION}"));
                let (mut page, blocks) = parse_page(&title, text.as_ref())?;
                page.source = Some(path);
                Ok((page, blocks))
            })
            .collect::<Result<Vec<_>, NotebookError>>()?;
        Self::assemble(parsed)
    }

    fn assemble(parsed: Vec<(Page, Vec<Block>)>) -> Result<Self, NotebookError> {
        let mut graph = BlockGraph::default();
        for (page, blocks) in parsed {
            if let Some(existing) = graph.pages.get(&page.title) {
                return Err(NotebookError::DuplicateTitle {
                    title: page.title.clone(),
                    first: existing.source.clone().unwrap_or_default(),
                    second: page.source.clone().unwrap_or_default(),
                });
            }
            for block in blocks {
                if let Some(existing) = graph.blocks.get(&block.id) {
                    return Err(NotebookError::DuplicateBlockId {
                        id: block.id.clone(),
                        first: existing.page.clone(),
                        second: block.page.clone(),
                    });
                }
                graph.blocks.insert(block.id.clone(), block);
            }
            graph.pages.insert(page.title.clone(), page);
        }

        for block in graph.blocks.values() {
            for target in block.targets() {
                if let RefTarget::Page(title) = &target {
                    if !graph.pages.contains_key(title) {
                        graph.pages.insert(
                            title.clone(),
                            Page {
                                title: title.clone(),
                                blocks: Vec::new(),
                                is_virtual: true,
                                source: None,
                            },
                        );
                    }
                }
                graph
                    .ref_index
                    .entry(target)
                    .or_default()
                    .insert(block.id.clone());
            }
        }
        graph.title_index = graph.pages.keys().cloned().collect();
        Ok(graph)
    }

    pub fn pages(&self) -> &BTreeMap<String, Page> {
        &self.pages
    }

    pub fn blocks(&self) -> &BTreeMap<BlockId, Block> {
        &self.blocks
    }

    pub fn page(&self, title: &str) -> Option<&Page> {
        self.pages.get(title)
    }

    pub fn block(&self, id: &str) -> Option<&Block> {
        self.blocks.get(id)
    }

    pub fn ref_index(&self) -> &BTreeMap<RefTarget, BTreeSet<BlockId>> {
        &self.ref_index
    }

    /// All page titles, sorted.
    pub fn titles(&self) -> &[String] {
        &self.title_index
    }

    /// Blocks whose text references `target`, sorted by (page title, block id).
    pub fn references_to(&self, target: &RefTarget) -> Vec<BlockId> {
        let Some(ids) = self.ref_index.get(target) else {
            return Vec::new();
        };
        let mut out: Vec<&Block> = ids.iter().map(|id| &self.blocks[id]).collect();
        out.sort_by(|a, b| (&a.page, &a.id).cmp(&(&b.page, &b.id)));
        out.into_iter().map(|b| b.id.clone()).collect()
    }

    pub fn references_to_page(&self, title: &str) -> Vec<BlockId> {
        self.references_to(&RefTarget::Page(title.to_string()))
    }

    /// Preorder transitive children of `id`, excluding `id` itself.
    pub fn descendants(&self, id: &str) -> Result<Vec<BlockId>, NotebookError> {
        let block = self
            .blocks
            .get(id)
            .ok_or_else(|| NotebookError::NoBlock(BlockId::from(id)))?;
        let mut out = Vec::new();
        let mut stack: Vec<&BlockId> = block.children.iter().rev().collect();
        while let Some(next) = stack.pop() {
            out.push(next.clone());
            stack.extend(self.blocks[next].children.iter().rev());
        }
        Ok(out)
    }

    /// Every block of a page in preorder.
    pub fn page_blocks(&self, title: &str) -> Vec<BlockId> {
        let Some(page) = self.pages.get(title) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for root in &page.blocks {
            out.push(root.clone());
            out.extend(self.descendants(root.as_str()).unwrap_or_default());
        }
        out
    }

    /// Canonical outline text of a page; reparsing it reproduces the same blocks.
    pub fn render_page(&self, title: &str) -> Option<String> {
        let page = self.pages.get(title)?;
        let roots: Vec<edit::TreeNode> = page
            .blocks
            .iter()
            .map(|id| edit::TreeNode::from_graph(self, id))
            .collect();
        Some(outline::render_tree(title, &roots))
    }
}

/// Parses every `.md` file under `root` (hidden entries skipped) into a graph.
pub fn parse_corpus(root: &Path) -> Result<BlockGraph, NotebookError> {
    let mut files = Vec::new();
    let walker = walkdir::WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| e.depth() == 0 || !e.file_name().to_string_lossy().starts_with('.'));
    for entry in walker {
        let entry = entry.map_err(|e| NotebookError::Io {
            path: e.path().map(Path::to_path_buf).unwrap_or_else(|| root.to_path_buf()),
            source: e
                .into_io_error()
                .unwrap_or_else(|| std::io::Error::other("directory walk failed")),
        })?;
        if entry.file_type().is_file()
            && entry.path().extension().and_then(|e| e.to_str()) == Some(NOTEBOOK_EXTENSION)
        {
            files.push(entry.into_path());
        }
    }

    let parsed = files
        .par_iter()
        .map(|path| {
            let bytes = std::fs::read(path).map_err(|source| NotebookError::Io {
                path: path.clone(),
                source,
            })?;
            let text = String::from_utf8(bytes)
                .map_err(|_| NotebookError::Encoding { path: path.clone() })?;
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| NotebookError::Encoding { path: path.clone() })?;
            let relative = path.strip_prefix(root).unwrap_or(path).to_path_buf();
            let (mut page, blocks) = parse_page(stem, &text).map_err(|e| match e {
                NotebookError::Indent { line, message, .. } => NotebookError::Indent {
                    file: relative.display().to_string(),
                    line,
                    message,
                },
                other => other,
            })?;
            page.source = Some(relative);
            Ok((page, blocks))
        })
        .collect::<Result<Vec<_>, NotebookError>>()?;

    BlockGraph::assemble(parsed)
}
