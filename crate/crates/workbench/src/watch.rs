use std::path::Path;
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use notify::{RecommendedWatcher, RecursiveMode, Watcher};

use crate::error::{Result, WorkbenchError};
use crate::state::Workbench;

pub const DEBOUNCE: Duration = Duration::from_millis(250);

/// Keeps the watcher alive; dropping it stops watching and ends the rebuild thread.
pub struct WatchHandle {
    watcher: Option<RecommendedWatcher>,
    thread: Option<JoinHandle<()>>,
}

impl Drop for WatchHandle {
    fn drop(&mut self) {
        // dropping the watcher closes the channel, which ends the thread
        self.watcher.take();
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Rebuilds `wb` once after each burst of file events has been quiet for `debounce`.
pub fn watch(wb: Arc<Workbench>, debounce: Duration) -> Result<WatchHandle> {
    let (tx, rx) = mpsc::channel::<notify::Result<notify::Event>>();
    let mut watcher = notify::recommended_watcher(tx).map_err(|e| WorkbenchError::io(wb.root(), e))?;
    watcher
        .watch(wb.root(), RecursiveMode::Recursive)
        .map_err(|e| WorkbenchError::io(wb.root(), e))?;
    let grammar_dir = wb.grammar_path().parent().filter(|d| !d.starts_with(wb.root()));
    if let Some(dir) = grammar_dir.filter(|d| d.is_dir()) {
        watcher
            .watch(dir, RecursiveMode::NonRecursive)
            .map_err(|e| WorkbenchError::io(dir, e))?;
    }

    let thread = std::thread::spawn(move || {
        let relevant = |event: &notify::Result<notify::Event>| match event {
            Ok(e) => e.paths.is_empty() || e.paths.iter().any(|p| !is_staging_file(p)),
            Err(_) => true,
        };
        while let Ok(event) = rx.recv() {
            if !relevant(&event) {
                continue;
            }
            loop {
                match rx.recv_timeout(debounce) {
                    Ok(_) => continue,
                    Err(RecvTimeoutError::Timeout) => break,
                    Err(RecvTimeoutError::Disconnected) => return,
                }
            }
            match wb.refresh() {
                Ok(Some(generation)) => tracing::info!(generation, "rebuilt after file changes"),
                Ok(None) => {}
                Err(e) => tracing::warn!("rebuild failed, keeping the previous snapshot: {e}"),
            }
        }
    });
    Ok(WatchHandle {
        watcher: Some(watcher),
        thread: Some(thread),
    })
}

fn is_staging_file(path: &Path) -> bool {
    path.file_name()
        .and_then(|n| n.to_str())
        .is_some_and(|n| n.starts_with(".staged-"))
}
