//! Random taxonomies and a brute-force WUPS reimplementation shared by the
//! metric tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use ayn_core::data::AnswerSet;
use ayn_core::taxonomy::Taxonomy;
use rand::Rng;

/// A random rooted DAG: node `i > 0` has one or two parents among `0..i`.
/// Words `w0..wN` name one node each; a few carry a second sense and a few
/// words (`x*`) are unmapped.
pub struct RandomTaxonomy {
    pub parents: Vec<Vec<usize>>,
    pub senses: BTreeMap<String, Vec<usize>>,
    pub taxonomy: Taxonomy,
    pub vocabulary: Vec<String>,
}

pub fn node(i: usize) -> String {
    format!("n{i}")
}

pub fn random_taxonomy<R: Rng>(rng: &mut R, nodes: usize) -> RandomTaxonomy {
    let mut parents = vec![Vec::new()];
    for i in 1..nodes {
        let mut ps = vec![rng.random_range(0..i)];
        if i > 2 && rng.random_bool(0.3) {
            let q = rng.random_range(0..i);
            if !ps.contains(&q) {
                ps.push(q);
            }
        }
        parents.push(ps);
    }
    let mut senses = BTreeMap::new();
    for i in 0..nodes {
        let mut s = vec![i];
        if rng.random_bool(0.15) {
            let extra = rng.random_range(0..nodes);
            if extra != i {
                s.push(extra);
            }
        }
        senses.insert(format!("w{i}"), s);
    }
    let edges: Vec<(String, String)> = parents
        .iter()
        .enumerate()
        .flat_map(|(c, ps)| ps.iter().map(move |&p| (node(c), node(p))))
        .collect();
    let words: Vec<(String, Vec<String>)> = senses
        .iter()
        .map(|(w, s)| (w.clone(), s.iter().map(|&n| node(n)).collect()))
        .collect();
    let taxonomy = Taxonomy::from_edges(edges, &words).unwrap();
    let mut vocabulary: Vec<String> = senses.keys().cloned().collect();
    vocabulary.extend(["x0", "x1", "x2"].map(String::from));
    RandomTaxonomy {
        parents,
        senses,
        taxonomy,
        vocabulary,
    }
}

/// Straightforward reimplementation: depth is the longest path to the root
/// counting the root as 1, the subsumer is the deepest shared ancestor.
pub struct Oracle<'a> {
    t: &'a RandomTaxonomy,
    depth: Vec<usize>,
    ancestors: Vec<BTreeSet<usize>>,
}

impl<'a> Oracle<'a> {
    pub fn new(t: &'a RandomTaxonomy) -> Self {
        let n = t.parents.len();
        let mut depth = vec![0; n];
        let mut ancestors = vec![BTreeSet::new(); n];
        // Parents precede children by construction.
        for i in 0..n {
            depth[i] = t.parents[i].iter().map(|&p| depth[p] + 1).max().unwrap_or(1);
            let mut a = BTreeSet::from([i]);
            for &p in &t.parents[i] {
                a.extend(ancestors[p].iter().copied());
            }
            ancestors[i] = a;
        }
        Self { t, depth, ancestors }
    }

    pub fn node_wup(&self, a: usize, b: usize) -> f64 {
        let lcs = self.ancestors[a]
            .intersection(&self.ancestors[b])
            .map(|&c| self.depth[c])
            .max()
            .unwrap();
        2.0 * lcs as f64 / (self.depth[a] + self.depth[b]) as f64
    }

    pub fn wup(&self, a: &str, b: &str) -> f64 {
        if a == b {
            return 1.0;
        }
        match (self.t.senses.get(a), self.t.senses.get(b)) {
            (Some(sa), Some(sb)) => {
                let mut best = 0.0f64;
                for &x in sa {
                    for &y in sb {
                        best = best.max(self.node_wup(x, y));
                    }
                }
                best
            }
            _ => 0.0,
        }
    }

    pub fn mu(&self, a: &str, b: &str, tau: f64) -> f64 {
        let s = self.wup(a, b);
        if s >= tau {
            s
        } else {
            0.1 * s
        }
    }

    pub fn wups(&self, pred: &AnswerSet, reference: &AnswerSet, tau: f64) -> f64 {
        if pred.is_empty() {
            return 0.0;
        }
        let mut forward = 1.0;
        for a in pred.words() {
            let mut best = 0.0f64;
            for t in reference.words() {
                best = best.max(self.mu(a, t, tau));
            }
            forward *= best;
        }
        let mut backward = 1.0;
        for t in reference.words() {
            let mut best = 0.0f64;
            for a in pred.words() {
                best = best.max(self.mu(a, t, tau));
            }
            backward *= best;
        }
        forward.min(backward)
    }
}

pub fn random_set<R: Rng>(rng: &mut R, vocabulary: &[String], max_len: usize) -> AnswerSet {
    let n = rng.random_range(1..=max_len);
    let words: Vec<String> = (0..n)
        .map(|_| vocabulary[rng.random_range(0..vocabulary.len())].clone())
        .collect();
    AnswerSet::from_words(&words)
}
