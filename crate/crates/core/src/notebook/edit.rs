use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::outline::{check_block_text, render_tree, OutlineNode};
use super::{
    generated_block_id, normalize_title, parse_page, salted_block_id, BlockGraph, BlockId,
    NotebookError,
    NOTEBOOK_EXTENSION,
};

/// One structural change to the notebook.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum BlockEdit {
    /// Insert a block with `text` at `index` among the children of `parent`
    /// (or among the page's root blocks). Inserting into a page with no file creates it.
    Insert {
        page: String,
        parent: Option<BlockId>,
        index: usize,
        text: String,
    },
    /// Replace the text of an existing block.
    Replace { block: BlockId, text: String },
    /// Create a page file holding the given root blocks.
    CreatePage { page: String, blocks: Vec<String> },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlockEdits(pub Vec<BlockEdit>);

impl BlockEdits {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &BlockEdit> {
        self.0.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageWrite {
    /// Source path relative to the corpus root.
    pub source: PathBuf,
    pub text: String,
    pub created: bool,
}

/// New full texts for every page an edit list touches.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EditPlan {
    pub writes: BTreeMap<String, PageWrite>,
}

#[derive(Debug, Clone)]
pub(crate) struct TreeNode {
    id: BlockId,
    text: String,
    children: Vec<TreeNode>,
}

impl TreeNode {
    pub(crate) fn from_graph(graph: &BlockGraph, id: &BlockId) -> TreeNode {
        let block = &graph.blocks[id];
        TreeNode {
            id: block.id.clone(),
            text: block.text.clone(),
            children: block
                .children
                .iter()
                .map(|c| TreeNode::from_graph(graph, c))
                .collect(),
        }
    }

    fn find_path(nodes: &[TreeNode], id: &str) -> Option<Vec<usize>> {
        for (i, node) in nodes.iter().enumerate() {
            if node.id.as_str() == id {
                return Some(vec![i]);
            }
            if let Some(mut rest) = TreeNode::find_path(&node.children, id) {
                rest.insert(0, i);
                return Some(rest);
            }
        }
        None
    }

    fn at_path_mut<'a>(nodes: &'a mut [TreeNode], path: &[usize]) -> &'a mut TreeNode {
        let (first, rest) = path.split_first().expect("non-empty path");
        let node = &mut nodes[*first];
        if rest.is_empty() {
            node
        } else {
            TreeNode::at_path_mut(&mut node.children, rest)
        }
    }
}

impl OutlineNode for TreeNode {
    fn id(&self) -> &BlockId {
        &self.id
    }

    fn text(&self) -> &str {
        &self.text
    }

    fn children(&self) -> &[TreeNode] {
        &self.children
    }
}

struct WorkingPage {
    source: PathBuf,
    roots: Vec<TreeNode>,
    created: bool,
}

pub(crate) fn check_new_title(title: &str) -> Result<(), NotebookError> {
    let reason = if title.is_empty() {
        Some("empty")
    } else if title != normalize_title(title) {
        Some("surrounding whitespace")
    } else if title.starts_with('.') {
        Some("leading dot")
    } else if title.chars().any(|c| matches!(c, '/' | '\\') || c.is_control()) {
        Some("path separator or control character")
    } else if title.len() > 240 {
        Some("too long for a file name")
    } else {
        None
    };
    match reason {
        Some(reason) => Err(NotebookError::InvalidTitle {
            title: title.to_string(),
            reason: reason.to_string(),
        }),
        None => Ok(()),
    }
}

impl BlockGraph {
    /// The positional id for `path`, unless an existing or already planned
    /// block holds it; then a salted id that nothing else can have.
    fn unused_block_id(&self, planned: &mut BTreeSet<BlockId>, page: &str, path: &[usize]) -> BlockId {
        let mut id = generated_block_id(page, path);
        let mut salt = 1;
        while self.blocks.contains_key(&id) || planned.contains(&id) {
            id = salted_block_id(page, path, salt);
            salt += 1;
        }
        planned.insert(id.clone());
        id
    }

    fn working_page<'a>(
        &self,
        work: &'a mut BTreeMap<String, WorkingPage>,
        title: &str,
        create_if_missing: bool,
    ) -> Result<&'a mut WorkingPage, NotebookError> {
        if !work.contains_key(title) {
            let entry = match self.pages.get(title) {
                Some(page) if !page.is_virtual => WorkingPage {
                    source: page
                        .source
                        .clone()
                        .unwrap_or_else(|| PathBuf::from(format!("{title}.{NOTEBOOK_EXTENSION}"))),
                    roots: page
                        .blocks
                        .iter()
                        .map(|id| TreeNode::from_graph(self, id))
                        .collect(),
                    created: false,
                },
                _ if create_if_missing => {
                    check_new_title(title)?;
                    WorkingPage {
                        source: PathBuf::from(format!("{title}.{NOTEBOOK_EXTENSION}")),
                        roots: Vec::new(),
                        created: true,
                    }
                }
                _ => return Err(NotebookError::NoPage(title.to_string())),
            };
            work.insert(title.to_string(), entry);
        }
        Ok(work.get_mut(title).expect("inserted above"))
    }

    /// Resolves edits against this snapshot into full page texts. Nothing is written.
    pub fn plan_edits(&self, edits: &BlockEdits) -> Result<EditPlan, NotebookError> {
        let mut work: BTreeMap<String, WorkingPage> = BTreeMap::new();
        let mut planned: BTreeSet<BlockId> = BTreeSet::new();

        for edit in edits.iter() {
            match edit {
                BlockEdit::Insert {
                    page,
                    parent,
                    index,
                    text,
                } => {
                    check_block_text(text).map_err(NotebookError::InvalidEdit)?;
                    let wp = self.working_page(&mut work, page, true)?;
                    let parent_path = match parent {
                        Some(pid) => Some(
                            TreeNode::find_path(&wp.roots, pid.as_str()).ok_or_else(|| {
                                NotebookError::InvalidEdit(format!(
                                    "parent block {pid} is not on page {page:?}"
                                ))
                            })?,
                        ),
                        None => None,
                    };
                    let siblings = match &parent_path {
                        Some(path) => &mut TreeNode::at_path_mut(&mut wp.roots, path).children,
                        None => &mut wp.roots,
                    };
                    if *index > siblings.len() {
                        return Err(NotebookError::InvalidEdit(format!(
                            "insert index {index} exceeds {} siblings",
                            siblings.len()
                        )));
                    }
                    let mut path = parent_path.unwrap_or_default();
                    path.push(*index);
                    let id = self.unused_block_id(&mut planned, page, &path);
                    siblings.insert(
                        *index,
                        TreeNode {
                            id,
                            text: text.clone(),
                            children: Vec::new(),
                        },
                    );
                }
                BlockEdit::Replace { block, text } => {
                    check_block_text(text).map_err(NotebookError::InvalidEdit)?;
                    let title = match self.blocks.get(block) {
                        Some(b) => b.page.clone(),
                        None => work
                            .iter()
                            .find(|(_, wp)| TreeNode::find_path(&wp.roots, block.as_str()).is_some())
                            .map(|(t, _)| t.clone())
                            .ok_or_else(|| NotebookError::NoBlock(block.clone()))?,
                    };
                    let wp = self.working_page(&mut work, &title, false)?;
                    let path = TreeNode::find_path(&wp.roots, block.as_str())
                        .ok_or_else(|| NotebookError::NoBlock(block.clone()))?;
                    TreeNode::at_path_mut(&mut wp.roots, &path).text = text.clone();
                }
                BlockEdit::CreatePage { page, blocks } => {
                    let exists_on_disk = self.pages.get(page).is_some_and(|p| !p.is_virtual);
                    if exists_on_disk || work.contains_key(page) {
                        return Err(NotebookError::PageExists(page.clone()));
                    }
                    for text in blocks {
                        check_block_text(text).map_err(NotebookError::InvalidEdit)?;
                    }
                    let wp = self.working_page(&mut work, page, true)?;
                    wp.roots = blocks
                        .iter()
                        .enumerate()
                        .map(|(i, text)| TreeNode {
                            id: self.unused_block_id(&mut planned, page, &[i]),
                            text: text.clone(),
                            children: Vec::new(),
                        })
                        .collect();
                }
            }
        }

        let writes = work
            .into_iter()
            .map(|(title, wp)| {
                let text = render_tree(&title, &wp.roots);
                (
                    title,
                    PageWrite {
                        source: wp.source,
                        text,
                        created: wp.created,
                    },
                )
            })
            .collect();
        Ok(EditPlan { writes })
    }

    /// The snapshot that results from applying `edits`, without touching any file.
    pub fn with_edits(&self, edits: &BlockEdits) -> Result<BlockGraph, NotebookError> {
        let plan = self.plan_edits(edits)?;
        let mut parsed = Vec::new();
        for (title, page) in &self.pages {
            if page.is_virtual || plan.writes.contains_key(title) {
                continue;
            }
            let text = self.render_page(title).expect("page exists");
            let (mut p, blocks) = parse_page(title, &text)?;
            p.source = page.source.clone();
            parsed.push((p, blocks));
        }
        for (title, write) in plan.writes {
            let (mut p, blocks) = parse_page(&title, &write.text)?;
            p.source = Some(write.source);
            parsed.push((p, blocks));
        }
        parsed.sort_by(|a, b| a.0.title.cmp(&b.0.title));
        BlockGraph::assemble(parsed)
    }
}
