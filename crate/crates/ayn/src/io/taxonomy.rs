use std::path::Path;

use ayn_core::taxonomy::Taxonomy;

use super::read_text;
use crate::error::{AynError, Result};

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// `child<TAB>parent` per line; `#` starts a comment.
pub fn parse_edges(text: &str, path: &Path) -> Result<Vec<(String, String)>> {
    content_lines(text)
        .map(|(n, l)| {
            let (c, p) = l
                .split_once('\t')
                .ok_or_else(|| AynError::format(path, n, "expected child<TAB>parent"))?;
            Ok((c.trim().to_string(), p.trim().to_string()))
        })
        .collect()
}

/// `word<TAB>node[,node…]` per line.
pub fn parse_word_map(text: &str, path: &Path) -> Result<Vec<(String, Vec<String>)>> {
    content_lines(text)
        .map(|(n, l)| {
            let (w, nodes) = l
                .split_once('\t')
                .ok_or_else(|| AynError::format(path, n, "expected word<TAB>node[,node]"))?;
            let nodes: Vec<String> = nodes
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            Ok((w.trim().to_string(), nodes))
        })
        .collect()
}

/// Without a word map every node name is a word with itself as sole sense.
pub fn load_taxonomy(edges: &Path, words: Option<&Path>) -> Result<Taxonomy> {
    let e = parse_edges(&read_text(edges)?, edges)?;
    let w = match words {
        Some(p) => parse_word_map(&read_text(p)?, p)?,
        None => {
            let names: std::collections::BTreeSet<&String> = e.iter().flat_map(|(c, p)| [c, p]).collect();
            names.into_iter().map(|n| (n.clone(), vec![n.clone()])).collect()
        }
    };
    let t = Taxonomy::from_edges(e, &w)?;
    if t.duplicate_edges() > 0 {
        log::warn!("{}: ignored {} duplicate edges", edges.display(), t.duplicate_edges());
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_fixture() {
        let p = Path::new("t");
        let edges = parse_edges(
            "# is-a\nanimal\tentity\ncat\tanimal\ndog\tanimal # pets\nentity\troot\n",
            p,
        )
        .unwrap();
        let words = parse_word_map("cat\tcat\ndog\tdog,animal\n", p).unwrap();
        let t = Taxonomy::from_edges(edges, &words).unwrap();
        assert_eq!(t.num_nodes(), 5);
        // the "animal" sense of dog is closer: 2·3/(4+3)
        assert!((t.wup("cat", "dog") - 6.0 / 7.0).abs() < 1e-15);
        assert!(parse_edges("a b\n", p).is_err());
    }
}
