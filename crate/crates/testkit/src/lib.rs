//! Shared fixtures, corpus generators and reference implementations for tests.

pub mod corpus;
pub mod oracle;

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// Hand-written corpus with one question, two claims and three evidence
/// nodes, exercising every default writing convention.
pub mod base {
    pub const Q: &str = "QUE - What limits actin assembly at membranes";
    pub const C1: &str = "CLM - Talin saturates actin binding at high density";
    pub const C2: &str = "CLM - Vinculin recruitment is force dependent";
    pub const E1: &str = "EVD - Talin bound actin at a 4 to 1 ratio - @senetar2004";
    pub const E2: &str = "EVD - Binding plateaued above 2 micromolar - @lee2011";
    pub const E3: &str = "EVD - Actin filaments kept growing under saturation - @ortiz2019";

    pub const BLOCK_COUNT: usize = 30;

    /// The six node titles.
    pub fn nodes() -> Vec<&'static str> {
        let mut v = vec![Q, C1, C2, E1, E2, E3];
        v.sort();
        v
    }

    /// `(source, label, destination, variant indexes of the anchors)`, enumerated
    /// by reading the fixture files.
    pub fn edges() -> Vec<(&'static str, &'static str, &'static str, Vec<usize>)> {
        let mut v = vec![
            // nested block on the question page
            (E1, "Informs", Q, vec![0]),
            // lab meeting marker block + claim page block
            (E1, "Supports", C1, vec![0, 2]),
            // "Follow-up measurements" grandchild
            (E2, "Informs", Q, vec![1]),
            // bare marker block with the evidence as its child
            (E2, "Supports", C1, vec![1]),
            // direct child of the question block
            (E3, "Informs", Q, vec![1]),
            // all three conventions
            (E3, "Opposes", C1, vec![0, 1, 2]),
        ];
        v.sort();
        v
    }
}

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn base_fixture_dir() -> PathBuf {
    fixtures_dir().join("base")
}

/// A claim referenced from an outline page, with one supporting evidence block
/// nested under it.
pub fn single_support_sources() -> Vec<(String, String)> {
    vec![
        (
            "outline".to_string(),
            "- [[CLM - C1]]\n  - [[SupportedBy]] [[EVD - E1 - @s1]]\n".to_string(),
        ),
        ("CLM - C1".to_string(), "- a claim\n".to_string()),
        ("QUE - q1".to_string(), "- an open question\n".to_string()),
    ]
}

/// Writes `title.md` files for each source into `dir`.
pub fn write_corpus(dir: &Path, sources: &[(String, String)]) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    for (title, text) in sources {
        fs::write(dir.join(format!("{title}.md")), text)?;
    }
    Ok(())
}

/// Copies every file of a fixture directory (non-recursive) into `dest`.
pub fn copy_dir(src: &Path, dest: &Path) -> io::Result<()> {
    fs::create_dir_all(dest)?;
    for entry in fs::read_dir(src)? {
        let entry = entry?;
        if entry.file_type()?.is_file() {
            fs::copy(entry.path(), dest.join(entry.file_name()))?;
        }
    }
    Ok(())
}

/// Every file under `dir` with its bytes, keyed by relative path.
pub fn snapshot_dir(dir: &Path) -> io::Result<BTreeMap<PathBuf, Vec<u8>>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).expect("under dir").to_path_buf();
                out.insert(rel, fs::read(&path)?);
            }
        }
    }
    Ok(out)
}

/// The default grammar plus a conclusion node type and a `Substantiates`
/// relation cloned from `Supports` to run from claims to conclusions.
pub fn substantiates_grammar() -> discourse_core::grammar::Grammar {
    use discourse_core::grammar::{default_grammar, NodeTypeDef};
    default_grammar()
        .with_node_type(NodeTypeDef {
            id: "CON".into(),
            label: "Conclusion".into(),
            format: "CON - {content}".into(),
            shortcut: 'O',
            color: "#795548".into(),
            template: vec![],
        })
        .and_then(|g| g.clone_relation_pattern("supports", "Substantiates", "SubstantiatedBy", "CLM", "CON"))
        .expect("valid grammar edit")
}
