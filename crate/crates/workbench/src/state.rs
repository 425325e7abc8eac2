use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use discourse_core::discourse::{build_discourse_graph, DiscourseGraph};
use discourse_core::grammar::{default_grammar, load_grammar, Grammar};
use discourse_core::notebook::{parse_corpus, BlockEdits, BlockGraph};
use discourse_core::pattern::realize_relation;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WorkbenchError};
use crate::files::replace_all;
use crate::formalize::{plan_formalize, FormalizeOutcome, FormalizeRequest};

/// Grammar file looked up in the corpus root when no path is given.
pub const DEFAULT_GRAMMAR_FILE: &str = "grammar.json";

/// One consistent view: the discourse graph is always built from `blocks`.
#[derive(Debug)]
pub struct Snapshot {
    pub generation: u64,
    pub blocks: Arc<BlockGraph>,
    pub discourse: Arc<DiscourseGraph>,
}

impl Snapshot {
    pub fn grammar(&self) -> &Arc<Grammar> {
        self.discourse.grammar()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RealizeRequest {
    pub source: String,
    pub relation: String,
    pub destination: String,
    pub target_page: String,
}

/// A corpus directory plus its grammar, rebuilt in full after every change.
///
/// Readers clone the current `Arc<Snapshot>` and keep using it while a
/// rebuild runs; mutations queue on a single writer lock.
#[derive(Debug)]
pub struct Workbench {
    root: PathBuf,
    grammar_path: PathBuf,
    current: RwLock<Arc<Snapshot>>,
    writer: Mutex<()>,
}

fn read_grammar(path: &Path) -> Result<Grammar> {
    match fs::read(path) {
        Ok(bytes) => Ok(load_grammar(&bytes)?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(default_grammar()),
        Err(e) => Err(WorkbenchError::io(path, e)),
    }
}

impl Workbench {
    /// Loads the grammar (the built-in default when the file is absent) and
    /// builds generation 1.
    pub fn open(root: impl Into<PathBuf>, grammar_path: Option<PathBuf>) -> Result<Workbench> {
        let root = root.into();
        if !root.is_dir() {
            return Err(WorkbenchError::io(&root, "not a directory"));
        }
        let grammar_path = grammar_path.unwrap_or_else(|| root.join(DEFAULT_GRAMMAR_FILE));
        let grammar = Arc::new(read_grammar(&grammar_path)?);
        let blocks = Arc::new(parse_corpus(&root)?);
        let discourse = Arc::new(build_discourse_graph(blocks.clone(), grammar));
        Ok(Workbench {
            root,
            grammar_path,
            current: RwLock::new(Arc::new(Snapshot {
                generation: 1,
                blocks,
                discourse,
            })),
            writer: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn grammar_path(&self) -> &Path {
        &self.grammar_path
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.current.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn generation(&self) -> u64 {
        self.snapshot().generation
    }

    fn lock_writer(&self) -> MutexGuard<'_, ()> {
        self.writer.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn install(&self, blocks: Arc<BlockGraph>, grammar: Arc<Grammar>) -> u64 {
        let discourse = Arc::new(build_discourse_graph(blocks.clone(), grammar));
        let mut current = self.current.write().unwrap_or_else(|e| e.into_inner());
        let generation = current.generation + 1;
        *current = Arc::new(Snapshot {
            generation,
            blocks,
            discourse,
        });
        generation
    }

    fn check(expected: Option<u64>, snap: &Snapshot) -> Result<()> {
        match expected {
            Some(g) if g != snap.generation => Err(WorkbenchError::conflict(g, snap.generation)),
            _ => Ok(()),
        }
    }

    /// Re-reads the corpus and grammar from disk. Returns the new generation,
    /// or `None` when nothing changed (the generation is then left alone).
    pub fn refresh(&self) -> Result<Option<u64>> {
        let _w = self.lock_writer();
        let snap = self.snapshot();
        let grammar = read_grammar(&self.grammar_path)?;
        let blocks = parse_corpus(&self.root)?;
        if blocks == *snap.blocks && grammar.hash() == snap.grammar().hash() {
            return Ok(None);
        }
        Ok(Some(self.install(Arc::new(blocks), Arc::new(grammar))))
    }

    /// Runs `plan` against the current snapshot, writes its edits and rebuilds.
    fn mutate<T>(
        &self,
        expected: Option<u64>,
        plan: impl FnOnce(&Snapshot) -> Result<(BlockEdits, T)>,
    ) -> Result<(T, u64)> {
        let _w = self.lock_writer();
        let snap = self.snapshot();
        Self::check(expected, &snap)?;
        let (edits, value) = plan(&snap)?;
        // the edited graph must itself be valid before anything is written
        snap.blocks.with_edits(&edits)?;
        let files: Vec<(PathBuf, Vec<u8>)> = snap
            .blocks
            .plan_edits(&edits)?
            .writes
            .into_values()
            .map(|w| (self.root.join(w.source), w.text.into_bytes()))
            .collect();
        replace_all(&files)?;
        let blocks = Arc::new(parse_corpus(&self.root)?);
        Ok((value, self.install(blocks, snap.grammar().clone())))
    }

    /// Applies edits atomically. `expected` is the caller's generation; `None` skips the check.
    pub fn apply_edits(&self, expected: Option<u64>, edits: &BlockEdits) -> Result<u64> {
        self.mutate(expected, |_| Ok((edits.clone(), ()))).map(|((), g)| g)
    }

    pub fn formalize(&self, expected: Option<u64>, req: &FormalizeRequest) -> Result<(FormalizeOutcome, u64)> {
        self.mutate(expected, |snap| {
            let outcome = plan_formalize(&snap.blocks, snap.grammar(), req)?;
            Ok((outcome.edits.clone(), outcome))
        })
    }

    pub fn realize(&self, expected: Option<u64>, req: &RealizeRequest) -> Result<(BlockEdits, u64)> {
        self.mutate(expected, |snap| {
            let edits = realize_relation(
                &snap.blocks,
                snap.grammar(),
                &req.source,
                &req.relation,
                &req.destination,
                &req.target_page,
            )?;
            Ok((edits.clone(), edits))
        })
    }

    /// Saves a new grammar to the grammar file and rebuilds against it.
    pub fn replace_grammar(&self, expected: Option<u64>, grammar: Grammar) -> Result<u64> {
        let _w = self.lock_writer();
        let snap = self.snapshot();
        Self::check(expected, &snap)?;
        replace_all(&[(self.grammar_path.clone(), grammar.to_canonical_json().into_bytes())])?;
        Ok(self.install(snap.blocks.clone(), Arc::new(grammar)))
    }
}
