//! Seeded random notebooks built from node titles, markers and plain links.

use discourse_core::grammar::{Grammar, GrammarError};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct CorpusConfig {
    /// Node titles to invent, spread over the grammar's node types.
    pub nodes: usize,
    /// Plain (non-node) pages with files.
    pub plain_pages: usize,
    /// Total bullet blocks across all files.
    pub blocks: usize,
    /// Share of node titles that are only referenced, never given a file.
    pub virtual_share: f64,
    pub max_depth: usize,
    pub max_refs_per_block: usize,
}

impl CorpusConfig {
    pub fn small(blocks: usize) -> Self {
        CorpusConfig {
            nodes: 12,
            plain_pages: 4,
            blocks,
            virtual_share: 0.3,
            max_depth: 4,
            max_refs_per_block: 3,
        }
    }
}

/// A random node title for each index, cycling through the node types.
pub fn node_titles(grammar: &Grammar, count: usize) -> Vec<String> {
    let types = grammar.node_types();
    (0..count)
        .map(|i| {
            let ty = &types[i % types.len()];
            let content = format!("{} {i}", ty.label.to_lowercase());
            match grammar.format_node_title(&ty.id, &content, None) {
                Ok(title) => title,
                Err(GrammarError::CitekeyRequired(_)) => grammar
                    .format_node_title(&ty.id, &content, Some(&format!("key{}", i % 7)))
                    .expect("valid citekey"),
                Err(e) => panic!("cannot title generated node: {e}"),
            }
        })
        .collect()
}

/// `(title, outline text)` pairs for a random corpus. Equal seeds give equal corpora.
pub fn random_corpus(grammar: &Grammar, config: &CorpusConfig, rng: &mut ChaCha8Rng) -> Vec<(String, String)> {
    let nodes = node_titles(grammar, config.nodes);
    let markers: Vec<String> = grammar.markers().values().cloned().collect();
    let plain: Vec<String> = (0..config.plain_pages).map(|i| format!("note {i}")).collect();

    let mut files: Vec<String> = plain.clone();
    for title in &nodes {
        if !rng.gen_bool(config.virtual_share) {
            files.push(title.clone());
        }
    }
    if files.is_empty() {
        files.push("note 0".to_string());
    }

    let mut lines: Vec<Vec<String>> = vec![Vec::new(); files.len()];
    let mut depth: Vec<usize> = vec![0; files.len()];
    let mut ids: Vec<String> = Vec::new();
    for n in 0..config.blocks {
        let f = rng.gen_range(0..files.len());
        let d = if lines[f].is_empty() {
            0
        } else {
            rng.gen_range(0..=(depth[f] + 1).min(config.max_depth))
        };
        depth[f] = d;

        let mut parts: Vec<String> = Vec::new();
        for _ in 0..rng.gen_range(0..=config.max_refs_per_block) {
            let roll: f64 = rng.gen();
            let part = if roll < 0.45 {
                format!("[[{}]]", nodes.choose(rng).expect("nodes"))
            } else if roll < 0.7 && !markers.is_empty() {
                format!("[[{}]]", markers.choose(rng).expect("markers"))
            } else if roll < 0.8 && !plain.is_empty() {
                format!("[[{}]]", plain.choose(rng).expect("plain"))
            } else if roll < 0.85 {
                match ids.choose(rng) {
                    Some(id) if rng.gen_bool(0.8) => format!("(({id}))"),
                    _ => format!("((missing{n}))"),
                }
            } else {
                ["alpha", "beta", "gamma", "see", "cf."].choose(rng).expect("words").to_string()
            };
            parts.push(part);
        }
        if parts.is_empty() {
            parts.push(format!("note text {n}"));
        }
        if rng.gen_bool(0.05) {
            let id = format!("x{n}");
            parts.push(format!("^{id}"));
            ids.push(id);
        }
        lines[f].push(format!("{}- {}", "  ".repeat(d), parts.join(" ")));
    }

    files
        .into_iter()
        .zip(lines)
        .map(|(title, ls)| {
            let mut text = ls.join("\n");
            text.push('\n');
            (title, text)
        })
        .collect()
}

/// [`random_corpus`] driven by a fresh generator seeded with `seed`.
pub fn seeded_corpus(grammar: &Grammar, config: &CorpusConfig, seed: u64) -> Vec<(String, String)> {
    use rand::SeedableRng;
    random_corpus(grammar, config, &mut ChaCha8Rng::seed_from_u64(seed))
}
