//! Rooted is-a hierarchy with a word → sense mapping, Wu-Palmer similarity
//! and its thresholded variant μ_τ.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Factor applied to similarities below the threshold.
pub const DEFAULT_DOWNWEIGHT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct Taxonomy {
    nodes: Vec<String>,
    index: BTreeMap<String, usize>,
    /// Node-counting depth along the longest path to the root (root = 1).
    depth: Vec<usize>,
    /// Every ancestor of a node, itself included, sorted by id.
    ancestors: Vec<Vec<usize>>,
    senses: BTreeMap<String, Vec<usize>>,
    root: usize,
    duplicate_edges: usize,
}

impl Taxonomy {
    /// Builds a validated taxonomy from `(child, parent)` edges and
    /// `(word, node ids)` senses. Duplicate edges are ignored and counted.
    pub fn from_edges<C, P>(edges: impl IntoIterator<Item = (C, P)>, words: &[(String, Vec<String>)]) -> Result<Self>
    where
        C: AsRef<str>,
        P: AsRef<str>,
    {
        let mut nodes: Vec<String> = Vec::new();
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        let mut id_of = |name: &str, nodes: &mut Vec<String>| -> usize {
            *index.entry(name.to_string()).or_insert_with(|| {
                nodes.push(name.to_string());
                nodes.len() - 1
            })
        };
        let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut duplicate_edges = 0;
        let mut parents: Vec<Vec<usize>> = Vec::new();
        for (c, p) in edges {
            let (c, p) = (c.as_ref(), p.as_ref());
            if c == p {
                return Err(Error::Structure(format!("self loop on {c:?}")));
            }
            let ci = id_of(c, &mut nodes);
            let pi = id_of(p, &mut nodes);
            parents.resize(nodes.len(), Vec::new());
            if seen.insert((ci, pi)) {
                parents[ci].push(pi);
            } else {
                duplicate_edges += 1;
            }
        }
        if nodes.is_empty() {
            return Err(Error::Empty("taxonomy edges"));
        }

        let roots: Vec<usize> = (0..nodes.len()).filter(|&i| parents[i].is_empty()).collect();
        let root = match roots.as_slice() {
            [r] => *r,
            [] => return Err(Error::Structure("no root: every node has a parent (cycle)".into())),
            many => {
                let names: Vec<&str> = many.iter().map(|&i| nodes[i].as_str()).collect();
                return Err(Error::Structure(format!("multiple roots {names:?}")));
            }
        };

        let order = topological_order(&parents).ok_or_else(|| Error::Structure("cycle in is-a edges".into()))?;
        // `order` lists parents before children.
        let mut depth = vec![0usize; nodes.len()];
        let mut ancestors: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
        for &n in &order {
            let mut anc: BTreeSet<usize> = BTreeSet::new();
            anc.insert(n);
            let mut d = 1;
            for &p in &parents[n] {
                d = d.max(depth[p] + 1);
                anc.extend(ancestors[p].iter().copied());
            }
            depth[n] = d;
            ancestors[n] = anc.into_iter().collect();
        }

        let mut senses = BTreeMap::new();
        for (word, ids) in words {
            if ids.is_empty() {
                return Err(Error::Structure(format!("word {word:?} has no senses")));
            }
            let mut resolved = Vec::with_capacity(ids.len());
            for id in ids {
                let n = index
                    .get(id.as_str())
                    .ok_or_else(|| Error::Structure(format!("word {word:?} maps to unknown node {id:?}")))?;
                resolved.push(*n);
            }
            resolved.sort_unstable();
            resolved.dedup();
            senses.insert(word.clone(), resolved);
        }

        Ok(Self {
            nodes,
            index,
            depth,
            ancestors,
            senses,
            root,
            duplicate_edges,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn root(&self) -> &str {
        &self.nodes[self.root]
    }

    pub fn duplicate_edges(&self) -> usize {
        self.duplicate_edges
    }

    pub fn node_depth(&self, node: &str) -> Option<usize> {
        self.index.get(node).map(|&i| self.depth[i])
    }

    pub fn senses(&self, word: &str) -> Option<Vec<&str>> {
        self.senses
            .get(word)
            .map(|ids| ids.iter().map(|&i| self.nodes[i].as_str()).collect())
    }

    /// Deepest common ancestor of two nodes, by depth.
    pub fn lcs(&self, a: &str, b: &str) -> Option<&str> {
        let (&ia, &ib) = (self.index.get(a)?, self.index.get(b)?);
        self.lcs_index(ia, ib).map(|i| self.nodes[i].as_str())
    }

    fn lcs_index(&self, a: usize, b: usize) -> Option<usize> {
        let (xa, xb) = (&self.ancestors[a], &self.ancestors[b]);
        let (mut i, mut j) = (0, 0);
        let mut best: Option<usize> = None;
        while i < xa.len() && j < xb.len() {
            match xa[i].cmp(&xb[j]) {
                core::cmp::Ordering::Less => i += 1,
                core::cmp::Ordering::Greater => j += 1,
                core::cmp::Ordering::Equal => {
                    let n = xa[i];
                    if best.is_none_or(|b| self.depth[n] > self.depth[b]) {
                        best = Some(n);
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        best
    }

    fn node_wup(&self, a: usize, b: usize) -> f64 {
        // The root is a common ancestor of every pair.
        let l = self.lcs_index(a, b).unwrap_or(self.root);
        2.0 * self.depth[l] as f64 / (self.depth[a] + self.depth[b]) as f64
    }

    /// Wu-Palmer similarity, maximized over sense pairs. Identical words
    /// score 1; a word without senses falls back to exact string match.
    pub fn wup(&self, a: &str, b: &str) -> f64 {
        if a == b {
            return 1.0;
        }
        match (self.senses.get(a), self.senses.get(b)) {
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

    /// `s` if `s ≥ τ`, otherwise `downweight · s`, with `s = wup(a, b)`.
    pub fn mu_thresholded(&self, a: &str, b: &str, threshold: f64, downweight: f64) -> f64 {
        let s = self.wup(a, b);
        if s >= threshold {
            s
        } else {
            downweight * s
        }
    }
}

/// Kahn's algorithm over child → parent edges, yielding parents first.
fn topological_order(parents: &[Vec<usize>]) -> Option<Vec<usize>> {
    let n = parents.len();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut pending: Vec<usize> = parents.iter().map(Vec::len).collect();
    for (c, ps) in parents.iter().enumerate() {
        for &p in ps {
            children[p].push(c);
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| pending[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(x) = ready.pop() {
        order.push(x);
        for &c in &children[x] {
            pending[c] -= 1;
            if pending[c] == 0 {
                ready.push(c);
            }
        }
    }
    (order.len() == n).then_some(order)
}
