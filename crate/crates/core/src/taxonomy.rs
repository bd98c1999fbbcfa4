//! Object class clustering and class tree construction over a hypernym
//! oracle.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lexical hierarchy queries.
pub trait HypernymOracle {
    fn has_path(&self, a: &str, b: &str) -> Result<bool>;
    /// Hop count of the shortest path, `None` when unconnected.
    fn path_length(&self, a: &str, b: &str) -> Result<Option<usize>>;
    /// Depth below the root; roots have level 0.
    fn level(&self, w: &str) -> Result<usize>;
    /// Deepest word that is an ancestor of (or equal to) both.
    fn closest_common_parent(&self, a: &str, b: &str) -> Result<Option<String>>;
}

/// Forest of `child -> parent` edges.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MockOntology {
    parent: BTreeMap<String, String>,
    depth: BTreeMap<String, usize>,
}

impl MockOntology {
    pub fn from_edges<I, S>(edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S)>,
        S: Into<String>,
    {
        let mut parent = BTreeMap::new();
        let mut words = BTreeSet::new();
        for (c, p) in edges {
            let (c, p) = (c.into(), p.into());
            if c == p {
                return Err(Error::invalid(format!("`{c}` is its own parent")));
            }
            if let Some(old) = parent.get(&c) {
                if *old != p {
                    return Err(Error::invalid(format!("`{c}` has parents `{old}` and `{p}`")));
                }
            }
            words.insert(c.clone());
            words.insert(p.clone());
            parent.insert(c, p);
        }
        let mut depth = BTreeMap::new();
        for w in &words {
            let mut chain = vec![w.as_str()];
            let mut cur = w.as_str();
            let base = loop {
                if let Some(&d) = depth.get(cur) {
                    chain.pop();
                    break d;
                }
                match parent.get(cur) {
                    Some(p) => {
                        if chain.contains(&p.as_str()) {
                            return Err(Error::invalid(format!("cycle through `{p}`")));
                        }
                        chain.push(p);
                        cur = p;
                    }
                    None => {
                        chain.pop();
                        depth.insert(cur.to_string(), 0);
                        break 0;
                    }
                }
            };
            for (k, c) in chain.iter().rev().enumerate() {
                depth.insert(c.to_string(), base + k + 1);
            }
        }
        Ok(Self { parent, depth })
    }

    /// Parses `child<TAB>parent` lines; blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(c), Some(p), None) if !c.trim().is_empty() && !p.trim().is_empty() => {
                    edges.push((c.trim().to_string(), p.trim().to_string()));
                }
                _ => {
                    return Err(Error::Parse { line: i + 1, message: "expected `child<TAB>parent`".into() });
                }
            }
        }
        Self::from_edges(edges).map_err(|e| Error::Parse { line: 0, message: e.to_string() })
    }

    pub fn contains(&self, w: &str) -> bool {
        self.depth.contains_key(w)
    }

    fn known(&self, w: &str) -> Result<usize> {
        self.depth.get(w).copied().ok_or_else(|| Error::Oracle(format!("unknown word `{w}`")))
    }

    /// `w` followed by its ancestors up to the root.
    fn ancestors<'a>(&'a self, w: &'a str) -> Vec<&'a str> {
        let mut out = vec![w];
        let mut cur = w;
        while let Some(p) = self.parent.get(cur) {
            out.push(p);
            cur = p;
        }
        out
    }

    fn lca(&self, a: &str, b: &str) -> Result<Option<(String, usize)>> {
        self.known(a)?;
        self.known(b)?;
        let up_a = self.ancestors(a);
        let set_b: BTreeSet<&str> = self.ancestors(b).into_iter().collect();
        Ok(up_a.into_iter().find(|w| set_b.contains(w)).map(|w| (w.to_string(), self.depth[w])))
    }
}

impl HypernymOracle for MockOntology {
    fn has_path(&self, a: &str, b: &str) -> Result<bool> {
        Ok(self.lca(a, b)?.is_some())
    }

    fn path_length(&self, a: &str, b: &str) -> Result<Option<usize>> {
        Ok(self.lca(a, b)?.map(|(_, d)| self.depth[a] + self.depth[b] - 2 * d))
    }

    fn level(&self, w: &str) -> Result<usize> {
        self.known(w)
    }

    fn closest_common_parent(&self, a: &str, b: &str) -> Result<Option<String>> {
        Ok(self.lca(a, b)?.map(|(w, _)| w))
    }
}

/// One word per line, trimmed; blank lines skipped; duplicates rejected.
pub fn parse_word_list(text: &str) -> Result<Vec<String>> {
    let mut seen = BTreeSet::new();
    let mut words = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let w = line.trim();
        if w.is_empty() {
            continue;
        }
        if !seen.insert(w.to_string()) {
            return Err(Error::Parse { line: i + 1, message: format!("duplicate word `{w}`") });
        }
        words.push(w.to_string());
    }
    Ok(words)
}

/// Which cluster member is compared against a new word.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representative {
    /// Smallest level, closest to the root.
    #[default]
    Shallowest,
    Deepest,
}

/// Each word joins the first cluster whose representative it connects to,
/// or opens a new cluster. Representatives tie toward the earliest member.
pub fn cluster_classes(
    words: &[String],
    oracle: &impl HypernymOracle,
    rep: Representative,
) -> Result<Vec<Vec<String>>> {
    if words.is_empty() {
        return Err(Error::Empty("word list"));
    }
    let mut clusters: Vec<Vec<String>> = Vec::new();
    // (representative, its level) per cluster
    let mut reps: Vec<(String, usize)> = Vec::new();
    for w in words {
        let level = oracle.level(w)?;
        let mut joined = None;
        for (j, (r, _)) in reps.iter().enumerate() {
            if oracle.has_path(w, r)? {
                joined = Some(j);
                break;
            }
        }
        match joined {
            Some(j) => {
                clusters[j].push(w.clone());
                let replace = match rep {
                    Representative::Shallowest => level < reps[j].1,
                    Representative::Deepest => level > reps[j].1,
                };
                if replace {
                    reps[j] = (w.clone(), level);
                }
            }
            None => {
                clusters.push(vec![w.clone()]);
                reps.push((w.clone(), level));
            }
        }
    }
    Ok(clusters)
}

/// Rooted, ordered class tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassTree {
    pub word: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<ClassTree>,
}

impl ClassTree {
    pub fn leaf(word: impl Into<String>) -> Self {
        Self { word: word.into(), children: Vec::new() }
    }

    /// Words in pre-order; this is also insertion order.
    pub fn words(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a str>) {
        out.push(&self.word);
        self.children.iter().for_each(|c| c.collect(out));
    }

    pub fn len(&self) -> usize {
        1 + self.children.iter().map(ClassTree::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, w: &str) -> bool {
        self.word == w || self.children.iter().any(|c| c.contains(w))
    }

    pub fn depth(&self) -> usize {
        self.children.iter().map(|c| c.depth() + 1).max().unwrap_or(0)
    }

    pub fn find(&self, w: &str) -> Option<&ClassTree> {
        if self.word == w {
            return Some(self);
        }
        self.children.iter().find_map(|c| c.find(w))
    }

    /// Parent word of `w`, if `w` is a non-root node.
    pub fn parent_of(&self, w: &str) -> Option<&str> {
        if self.children.iter().any(|c| c.word == w) {
            return Some(&self.word);
        }
        self.children.iter().find_map(|c| c.parent_of(w))
    }

    fn find_mut(&mut self, w: &str) -> Option<&mut ClassTree> {
        if self.word == w {
            return Some(self);
        }
        self.children.iter_mut().find_map(|c| c.find_mut(w))
    }

    /// Removes non-root node `w`, splicing its children into its place.
    fn splice_out(&mut self, w: &str) -> bool {
        if let Some(pos) = self.children.iter().position(|c| c.word == w) {
            let removed = self.children.remove(pos);
            for (k, c) in removed.children.into_iter().enumerate() {
                self.children.insert(pos + k, c);
            }
            return true;
        }
        self.children.iter_mut().any(|c| c.splice_out(w))
    }
}

/// Grows a tree from the cluster's first word; each later word hangs under
/// the node it has the shortest path to (earliest node on ties, unconnected
/// nodes count as infinitely far).
pub fn construct_tree(cluster: &[String], oracle: &impl HypernymOracle) -> Result<ClassTree> {
    let (first, rest) = cluster.split_first().ok_or(Error::Empty("cluster"))?;
    oracle.level(first)?;
    let mut tree = ClassTree::leaf(first.clone());
    let mut order = vec![first.clone()];
    for w in rest {
        if order.contains(w) {
            return Err(Error::invalid(format!("`{w}` appears twice in a cluster")));
        }
        let mut best: Option<(usize, usize)> = None;
        for (k, node) in order.iter().enumerate() {
            if let Some(d) = oracle.path_length(w, node)? {
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((k, d));
                }
            }
        }
        let host = &order[best.map_or(0, |(k, _)| k)];
        tree.find_mut(host).expect("host inserted earlier").children.push(ClassTree::leaf(w.clone()));
        order.push(w.clone());
    }
    Ok(tree)
}

/// Joins two trees under the closest common parent of their roots. A parent
/// equal to one root adopts the other tree; a parent already inside either
/// tree is spliced out there and becomes the new root.
pub fn combine_trees(tx: &ClassTree, ty: &ClassTree, oracle: &impl HypernymOracle) -> Result<ClassTree> {
    let xs: BTreeSet<&str> = tx.words().into_iter().collect();
    if let Some(w) = ty.words().into_iter().find(|w| xs.contains(w)) {
        return Err(Error::invalid(format!("`{w}` appears in both trees")));
    }
    let r = oracle
        .closest_common_parent(&tx.word, &ty.word)?
        .ok_or_else(|| Error::Oracle(format!("`{}` and `{}` share no parent", tx.word, ty.word)))?;
    let (mut tx, mut ty) = (tx.clone(), ty.clone());
    if r == tx.word {
        tx.children.push(ty);
        return Ok(tx);
    }
    if r == ty.word {
        ty.children.push(tx);
        return Ok(ty);
    }
    tx.splice_out(&r);
    ty.splice_out(&r);
    Ok(ClassTree { word: r, children: vec![tx, ty] })
}

/// Left fold of [`combine_trees`] over one tree per cluster.
pub fn build_taxonomy(clusters: &[Vec<String>], oracle: &impl HypernymOracle) -> Result<ClassTree> {
    let (first, rest) = clusters.split_first().ok_or(Error::Empty("cluster list"))?;
    let mut tree = construct_tree(first, oracle)?;
    for c in rest {
        tree = combine_trees(&tree, &construct_tree(c, oracle)?, oracle)?;
    }
    Ok(tree)
}
