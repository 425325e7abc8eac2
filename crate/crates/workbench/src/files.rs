//! All-or-nothing replacement of a set of files.
//!
//! Every new text is first staged in a hidden temporary file next to its
//! target and flushed to disk; only when all of them are staged are they
//! renamed into place. A rename failure part-way restores what was already
//! replaced, so a request either changes every file or none.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::{NamedTempFile, TempPath};

use crate::error::{Result, WorkbenchError};

struct Staged {
    target: PathBuf,
    temp: TempPath,
    previous: Option<Vec<u8>>,
}

/// Refuses targets that exist but are marked read-only. Rename would replace
/// them anyway (it needs only directory permission), so this is checked
/// explicitly.
fn check_writable(target: &Path) -> Result<Option<Vec<u8>>> {
    match fs::metadata(target) {
        Ok(meta) if meta.permissions().readonly() => Err(WorkbenchError::io(target, "file is read-only")),
        Ok(meta) if !meta.is_file() => Err(WorkbenchError::io(target, "not a regular file")),
        Ok(_) => fs::read(target).map(Some).map_err(|e| WorkbenchError::io(target, e)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(WorkbenchError::io(target, e)),
    }
}

fn stage(target: &Path, contents: &[u8]) -> Result<TempPath> {
    let dir = target.parent().unwrap_or(Path::new("."));
    if !dir.as_os_str().is_empty() {
        fs::create_dir_all(dir).map_err(|e| WorkbenchError::io(dir, e))?;
    }
    let mut temp = tempfile::Builder::new()
        .prefix(".staged-")
        .suffix(".tmp")
        .tempfile_in(dir)
        .map_err(|e| WorkbenchError::io(dir, e))?;
    write_and_sync(&mut temp, contents).map_err(|e| WorkbenchError::io(target, e))?;
    if let Ok(meta) = fs::metadata(target) {
        // keep the mode bits of the file being replaced
        let _ = fs::set_permissions(temp.path(), meta.permissions());
    }
    Ok(temp.into_temp_path())
}

fn write_and_sync(temp: &mut NamedTempFile, contents: &[u8]) -> std::io::Result<()> {
    temp.write_all(contents)?;
    temp.as_file().sync_all()
}

fn restore(done: Vec<(PathBuf, Option<Vec<u8>>)>) {
    for (target, previous) in done.into_iter().rev() {
        let outcome = match previous {
            Some(bytes) => stage(&target, &bytes).and_then(|t| {
                t.persist(&target).map_err(|e| WorkbenchError::io(&target, e.error))
            }),
            None => fs::remove_file(&target).map_err(|e| WorkbenchError::io(&target, e)),
        };
        if let Err(e) = outcome {
            tracing::error!("could not roll back {}: {e}", target.display());
        }
    }
}

/// Replaces each `(path, contents)` pair, or changes nothing and reports `E_IO`.
pub fn replace_all(files: &[(PathBuf, Vec<u8>)]) -> Result<()> {
    let mut staged = Vec::with_capacity(files.len());
    for (target, contents) in files {
        let previous = check_writable(target)?;
        staged.push(Staged {
            target: target.clone(),
            temp: stage(target, contents)?,
            previous,
        });
    }

    let mut done: Vec<(PathBuf, Option<Vec<u8>>)> = Vec::with_capacity(staged.len());
    let mut pending = staged.into_iter();
    for item in pending.by_ref() {
        if let Err(e) = item.temp.persist(&item.target) {
            let err = WorkbenchError::io(&item.target, e.error);
            restore(done);
            return Err(err);
        }
        done.push((item.target, item.previous));
    }
    Ok(())
}
