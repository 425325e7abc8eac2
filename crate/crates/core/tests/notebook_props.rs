use std::collections::{BTreeMap, BTreeSet};

use discourse_core::notebook::{parse_corpus, BlockGraph, BlockId, RefTarget};
use discourse_testkit::corpus::{seeded_corpus, CorpusConfig};
use discourse_testkit::write_corpus;
use proptest::prelude::*;

/// One outline line: depth, bullet text, optional continuation line.
type Line = (usize, String, Option<String>);

fn page_lines() -> impl Strategy<Value = Vec<Line>> {
    let text = prop_oneof![
        "[a-z]{1,8}( [a-z]{1,8}){0,3}",
        "[a-z]{1,6} \\[\\[(p[0-3]|QUE - q[0-2])\\]\\]",
        "#t[a-z]{1,4} and #\\[\\[p[0-3]\\]\\]",
        "see \\(\\(x[0-9]\\)\\)",
        "[a-z]{1,6} \\^x[0-9]",
    ];
    prop::collection::vec((0usize..4, text, prop::option::of("[a-z]{1,6}( [a-z]{1,6})?")), 1..25).prop_map(
        |raw| {
            let mut out: Vec<Line> = Vec::new();
            let mut prev = 0;
            for (want, text, cont) in raw {
                let depth = if out.is_empty() { 0 } else { want.min(prev + 1) };
                prev = depth;
                out.push((depth, text, cont));
            }
            out
        },
    )
}

fn render(lines: &[Line], tab: bool, crlf: bool, blank: bool) -> String {
    let unit = if tab { "\t" } else { "  " };
    let nl = if crlf { "\r\n" } else { "\n" };
    let mut s = String::new();
    for (depth, text, cont) in lines {
        s.push_str(&unit.repeat(*depth));
        s.push_str("- ");
        s.push_str(text);
        s.push_str(nl);
        if let Some(c) = cont {
            s.push_str(&unit.repeat(depth + 1));
            s.push_str(c);
            s.push_str(nl);
        }
        if blank {
            s.push_str(nl);
        }
    }
    s
}

fn corpus() -> impl Strategy<Value = Vec<(String, String)>> {
    prop::collection::vec((page_lines(), any::<bool>(), any::<bool>(), any::<bool>()), 1..5).prop_map(|pages| {
        let mut seen_ids = BTreeSet::new();
        pages
            .into_iter()
            .enumerate()
            .map(|(i, (mut lines, tab, crlf, blank))| {
                // explicit ids must be unique across the corpus
                for (_, text, _) in lines.iter_mut() {
                    if let Some(pos) = text.find(" ^") {
                        let id = text[pos + 2..].to_string();
                        if !seen_ids.insert(id) {
                            text.truncate(pos);
                        }
                    }
                }
                (format!("p{i}"), render(&lines, tab, crlf, blank))
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn parent_links_form_a_forest(sources in corpus()) {
        let g = BlockGraph::from_sources(sources).unwrap();
        for block in g.blocks().values() {
            let mut seen = BTreeSet::from([block.id.clone()]);
            let mut cur = block.parent.clone();
            let mut root = block.id.clone();
            while let Some(p) = cur {
                prop_assert!(seen.insert(p.clone()), "cycle through {p}");
                let parent = &g.blocks()[&p];
                prop_assert!(parent.children.contains(&root));
                prop_assert_eq!(&parent.page, &block.page);
                root = p;
                cur = parent.parent.clone();
            }
            prop_assert!(g.page(&block.page).unwrap().blocks.contains(&root));
        }
    }

    #[test]
    fn reference_index_matches_a_scan(sources in corpus()) {
        let g = BlockGraph::from_sources(sources).unwrap();
        let mut scan: BTreeMap<RefTarget, Vec<BlockId>> = BTreeMap::new();
        for block in g.blocks().values() {
            for r in &block.refs {
                let list = scan.entry(r.resolved()).or_default();
                if !list.contains(&block.id) {
                    list.push(block.id.clone());
                }
            }
        }
        for (target, mut ids) in scan {
            ids.sort_by(|a, b| (&g.blocks()[a].page, a).cmp(&(&g.blocks()[b].page, b)));
            prop_assert_eq!(g.references_to(&target), ids);
        }
        prop_assert!(g.references_to(&RefTarget::page("never mentioned")).is_empty());
    }

    #[test]
    fn canonical_text_reparses_identically(sources in corpus()) {
        let g = BlockGraph::from_sources(sources).unwrap();
        let rendered: Vec<(String, String)> = g
            .pages()
            .values()
            .filter(|p| !p.is_virtual)
            .map(|p| (p.title.clone(), g.render_page(&p.title).unwrap()))
            .collect();
        let again = BlockGraph::from_sources(rendered.clone()).unwrap();
        prop_assert_eq!(&again, &g);
        // and rendering is a fixed point
        for (title, text) in rendered {
            prop_assert_eq!(again.render_page(&title).unwrap(), text);
        }
    }
}

#[test]
fn parsing_a_directory_twice_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let sources = seeded_corpus(&discourse_core::grammar::default_grammar(), &CorpusConfig::small(300), 7);
    write_corpus(dir.path(), &sources).unwrap();
    let a = parse_corpus(dir.path()).unwrap();
    let b = parse_corpus(dir.path()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.blocks().len(), 300);
}
