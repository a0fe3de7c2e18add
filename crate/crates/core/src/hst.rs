//! Labeled rooted trees representing ultrametrics, with O(1) LCA queries.
//!
//! Node distance between leaves x, y is the label of their least common
//! ancestor. Labels decay by a factor k per level (k = 1 for a plain
//! ultrametric). A point may own several leaves (multi-embeddings).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HstNode {
    pub label: f64,
    pub children: Vec<usize>,
    /// Point id carried by this leaf; None for internal nodes.
    pub leaf: Option<usize>,
    #[serde(skip)]
    pub parent: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct HstTree {
    pub k: f64,
    nodes: Vec<HstNode>,
    root: usize,
    /// point id -> leaf node ids owning it, sorted ascending.
    leaves_of: BTreeMap<usize, Vec<usize>>,
}

/// A structural rule broken by a tree, reported by `validate_hst`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum HstViolation {
    LeafLabelNonzero { node: usize, label: f64 },
    InternalLabelZero { node: usize },
    LabelDecay { parent: usize, child: usize, parent_label: f64, child_label: f64 },
    UnaryNode { node: usize },
    StrongTriangle { a: usize, b: usize, c: usize },
}

/// Incremental arena builder. `internal` collapses unary chains, so trees
/// come out of construction already in canonical shape; `finish` renumbers
/// nodes in preorder for stable serialization.
#[derive(Default)]
pub struct TreeBuilder {
    nodes: Vec<HstNode>,
}

impl TreeBuilder {
    pub fn new() -> Self {
        TreeBuilder::default()
    }

    pub fn leaf(&mut self, point: usize) -> usize {
        self.nodes.push(HstNode { label: 0.0, children: Vec::new(), leaf: Some(point), parent: None });
        self.nodes.len() - 1
    }

    /// Join children under a labeled node. A single child is returned as-is
    /// (no unary chains). Equal-label children produced by degenerate splits
    /// are merged into this node rather than nested.
    pub fn internal(&mut self, label: f64, children: Vec<usize>) -> usize {
        if children.len() == 1 {
            return children[0];
        }
        let mut flat = Vec::with_capacity(children.len());
        for c in children {
            if self.nodes[c].leaf.is_none() && self.nodes[c].label == label {
                flat.append(&mut self.nodes[c].children.clone());
            } else {
                flat.push(c);
            }
        }
        self.nodes.push(HstNode { label, children: flat, leaf: None, parent: None });
        self.nodes.len() - 1
    }

    pub fn finish(self, root: usize, k: f64) -> HstTree {
        // preorder renumber, dropping nodes orphaned by unary collapsing
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut new_id = vec![usize::MAX; self.nodes.len()];
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            new_id[u] = order.len();
            order.push(u);
            for &c in self.nodes[u].children.iter().rev() {
                stack.push(c);
            }
        }
        let mut nodes = Vec::with_capacity(order.len());
        for &old in &order {
            let n = &self.nodes[old];
            nodes.push(HstNode {
                label: n.label,
                children: n.children.iter().map(|&c| new_id[c]).collect(),
                leaf: n.leaf,
                parent: None,
            });
        }
        let mut tree = HstTree { k, nodes, root: 0, leaves_of: BTreeMap::new() };
        tree.rebuild_links();
        tree
    }
}

impl HstTree {
    pub fn singleton(point: usize) -> HstTree {
        let mut b = TreeBuilder::new();
        let l = b.leaf(point);
        b.finish(l, 1.0)
    }

    fn rebuild_links(&mut self) {
        self.leaves_of.clear();
        let ids: Vec<usize> = (0..self.nodes.len()).collect();
        for &u in &ids {
            for ci in 0..self.nodes[u].children.len() {
                let c = self.nodes[u].children[ci];
                self.nodes[c].parent = Some(u);
            }
        }
        for &u in &ids {
            if let Some(p) = self.nodes[u].leaf {
                self.leaves_of.entry(p).or_default().push(u);
            }
        }
        for v in self.leaves_of.values_mut() {
            v.sort_unstable();
        }
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn root_label(&self) -> f64 {
        self.nodes[self.root].label
    }

    pub fn node(&self, id: usize) -> &HstNode {
        &self.nodes[id]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves_of.values().map(|v| v.len()).sum()
    }

    /// Point ids carried by the leaves, sorted, without duplicates.
    pub fn points(&self) -> Vec<usize> {
        self.leaves_of.keys().copied().collect()
    }

    /// All leaf handles of a point (several in multi-embeddings).
    pub fn leaves_of_point(&self, point: usize) -> Option<&[usize]> {
        self.leaves_of.get(&point).map(|v| v.as_slice())
    }

    /// The unique leaf of a point; errors when the point is absent or has
    /// several images.
    pub fn leaf_of_point(&self, point: usize) -> Result<usize> {
        match self.leaves_of.get(&point) {
            Some(v) if v.len() == 1 => Ok(v[0]),
            _ => Err(Error::ForeignLeaf(point)),
        }
    }

    fn depth_of(&self, mut u: usize) -> usize {
        let mut d = 0;
        while let Some(p) = self.nodes[u].parent {
            u = p;
            d += 1;
        }
        d
    }

    /// Walk-to-root LCA, the reference implementation for tests.
    pub fn naive_lca(&self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = (a, b);
        let (mut da, mut db) = (self.depth_of(a), self.depth_of(b));
        while da > db {
            a = self.nodes[a].parent.unwrap();
            da -= 1;
        }
        while db > da {
            b = self.nodes[b].parent.unwrap();
            db -= 1;
        }
        while a != b {
            a = self.nodes[a].parent.unwrap();
            b = self.nodes[b].parent.unwrap();
        }
        a
    }

    pub fn naive_distance(&self, a: usize, b: usize) -> Result<f64> {
        self.check_leaf(a)?;
        self.check_leaf(b)?;
        if a == b {
            return Ok(0.0);
        }
        Ok(self.nodes[self.naive_lca(a, b)].label)
    }

    /// Tree distance between two points with unique images.
    pub fn point_distance(&self, index: &LcaIndex, x: usize, y: usize) -> Result<f64> {
        if x == y {
            return Ok(0.0);
        }
        let a = self.leaf_of_point(x)?;
        let b = self.leaf_of_point(y)?;
        index.distance(self, a, b)
    }

    fn check_leaf(&self, a: usize) -> Result<()> {
        if a < self.nodes.len() && self.nodes[a].leaf.is_some() {
            Ok(())
        } else {
            Err(Error::ForeignLeaf(a))
        }
    }

    /// Check leaf-zero labels, label decay by k, absence of unary nodes, and
    /// the strong triangle inequality (exhaustive up to 64 distinct leaf
    /// triples' worth of leaves, deterministically strided above that).
    pub fn validate(&self, k: f64) -> Vec<HstViolation> {
        let mut out = Vec::new();
        for (u, n) in self.nodes.iter().enumerate() {
            match n.leaf {
                Some(_) => {
                    if n.label != 0.0 {
                        out.push(HstViolation::LeafLabelNonzero { node: u, label: n.label });
                    }
                    if !n.children.is_empty() {
                        out.push(HstViolation::UnaryNode { node: u });
                    }
                }
                None => {
                    if n.children.len() == 1 {
                        out.push(HstViolation::UnaryNode { node: u });
                    }
                    if n.label <= 0.0 && !n.children.is_empty() {
                        out.push(HstViolation::InternalLabelZero { node: u });
                    }
                }
            }
            for &c in &n.children {
                if self.nodes[c].leaf.is_none() && self.nodes[c].label > n.label / k {
                    out.push(HstViolation::LabelDecay {
                        parent: u,
                        child: c,
                        parent_label: n.label,
                        child_label: self.nodes[c].label,
                    });
                }
            }
        }
        let leaves: Vec<usize> = (0..self.nodes.len())
            .filter(|&u| self.nodes[u].leaf.is_some())
            .collect();
        let stride = (leaves.len() / 64).max(1);
        let sample: Vec<usize> = leaves.iter().copied().step_by(stride).collect();
        for (i, &a) in sample.iter().enumerate() {
            for &b in &sample[i + 1..] {
                for &c in &sample {
                    let dab = self.naive_distance(a, b).unwrap();
                    let dac = self.naive_distance(a, c).unwrap();
                    let dcb = self.naive_distance(c, b).unwrap();
                    if dab > dac.max(dcb) {
                        out.push(HstViolation::StrongTriangle { a, b, c });
                    }
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "k": self.k,
            "root": self.root,
            "nodes": self.nodes.iter().enumerate().map(|(id, n)| {
                let mut o = serde_json::Map::new();
                o.insert("id".into(), id.into());
                o.insert("label".into(), n.label.into());
                if let Some(p) = n.leaf {
                    o.insert("leaf".into(), p.into());
                } else {
                    o.insert("children".into(), n.children.clone().into());
                }
                serde_json::Value::Object(o)
            }).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<HstTree> {
        #[derive(Deserialize)]
        struct JNode {
            id: usize,
            label: f64,
            #[serde(default)]
            children: Vec<usize>,
            leaf: Option<usize>,
        }
        #[derive(Deserialize)]
        struct JTree {
            k: f64,
            root: usize,
            nodes: Vec<JNode>,
        }
        let jt: JTree = serde_json::from_value(v.clone())?;
        let mut nodes = vec![None; jt.nodes.len()];
        for n in jt.nodes {
            if n.id >= nodes.len() {
                return Err(Error::MalformedInput(format!("node id {} out of range", n.id)));
            }
            nodes[n.id] = Some(HstNode {
                label: n.label,
                children: n.children,
                leaf: n.leaf,
                parent: None,
            });
        }
        let nodes: Option<Vec<HstNode>> = nodes.into_iter().collect();
        let nodes = nodes.ok_or_else(|| Error::MalformedInput("missing node id".into()))?;
        if jt.root >= nodes.len() {
            return Err(Error::MalformedInput("root out of range".into()));
        }
        let mut tree = HstTree { k: jt.k, nodes, root: jt.root, leaves_of: BTreeMap::new() };
        tree.rebuild_links();
        Ok(tree)
    }
}

/// Euler tour + sparse-table range minimum: constant probes per LCA query.
/// Probe count of one LCA lookup: 2 first-occurrence reads, 2 sparse-table
/// reads, 2 depth reads, 1 tour read.
pub const LCA_PROBES: u32 = 7;

#[derive(Clone, Debug)]
pub struct LcaIndex {
    /// node id at each tour position
    tour: Vec<usize>,
    /// depth of each tour position
    depth: Vec<u32>,
    /// first tour position of each node
    first: Vec<usize>,
    /// table[j][i] = position of min depth in tour[i .. i + 2^j)
    table: Vec<Vec<usize>>,
}

impl LcaIndex {
    pub fn build(tree: &HstTree) -> LcaIndex {
        let n = tree.node_count();
        let mut tour = Vec::with_capacity(2 * n);
        let mut depth = Vec::with_capacity(2 * n);
        let mut first = vec![usize::MAX; n];
        // explicit-stack Euler tour: (node, depth, next child index)
        let mut stack: Vec<(usize, u32, usize)> = vec![(tree.root(), 0, 0)];
        while let Some((u, d, ci)) = stack.pop() {
            if ci == 0 {
                first[u] = tour.len();
            }
            tour.push(u);
            depth.push(d);
            if let Some(&c) = tree.node(u).children.get(ci) {
                stack.push((u, d, ci + 1));
                stack.push((c, d + 1, 0));
            }
        }
        let m = tour.len();
        let levels = (usize::BITS - m.leading_zeros()) as usize;
        let mut table = Vec::with_capacity(levels);
        table.push((0..m).collect::<Vec<usize>>());
        for j in 1..levels {
            let half = 1usize << (j - 1);
            let prev = &table[j - 1];
            let width = 1usize << j;
            let mut row = Vec::with_capacity(m.saturating_sub(width) + 1);
            for i in 0..=m.saturating_sub(width) {
                let a = prev[i];
                let b = prev[i + half];
                row.push(if depth[a] <= depth[b] { a } else { b });
            }
            table.push(row);
        }
        LcaIndex { tour, depth, first, table }
    }

    /// LCA node id plus the number of table probes spent (constant).
    pub fn lca_counted(&self, a: usize, b: usize) -> (usize, u32) {
        let (mut l, mut r) = (self.first[a], self.first[b]);
        if l > r {
            std::mem::swap(&mut l, &mut r);
        }
        let len = r - l + 1;
        let j = (usize::BITS - 1 - len.leading_zeros()) as usize;
        let x = self.table[j][l];
        let y = self.table[j][r + 1 - (1 << j)];
        let pos = if self.depth[x] <= self.depth[y] { x } else { y };
        (self.tour[pos], LCA_PROBES)
    }

    pub fn lca(&self, a: usize, b: usize) -> usize {
        self.lca_counted(a, b).0
    }

    /// Ultrametric distance between two leaf handles.
    pub fn distance(&self, tree: &HstTree, a: usize, b: usize) -> Result<f64> {
        tree.check_leaf(a)?;
        tree.check_leaf(b)?;
        if a == b {
            return Ok(0.0);
        }
        Ok(tree.node(self.lca(a, b)).label)
    }
}
