//! Simplified cover tree with corrected search and terminating insertion.
//!
//! Every node stores one item at an integer level `l`; children sit at level
//! `l − 1` within `covdist = 2^l` of their parent. Descendants therefore lie
//! within `2^(l+1)` of a node, and the exact maximum (`maxdist`) is computed
//! lazily and cached until an insertion below the node invalidates it.
//!
//! Queries descend one branch at a time, children in ascending distance,
//! exploring a child only while the running k-th distance exceeds
//! `d(query, child) − bound(child)`. The bound is the cached `maxdist` in
//! [`QueryBound::MaxDist`] mode or `2^(level+1)` in [`QueryBound::Level`]
//! mode, which needs no cache maintenance between insertions.
//!
//! Insertion raises leaves to the root while the new point lies more than
//! `2·covdist` from the root, but only while unvisited leaves remain, and
//! skips the loop when the point lies beyond `4·covdist` (no existing point
//! can then satisfy the loop condition). If the point still lies outside
//! `2·covdist` of the root after the loop, the levels of the whole tree are
//! shifted up uniformly so the point can cover the old root; a uniform
//! shift keeps both the covering and the level invariants.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::KnnIndex;
use crate::item::Item;
use crate::metrics::Metric;
use crate::neighbors::NeighborList;
use crate::scalar::{ceil_log2, cmp_dist, max_dist, Distance};

/// Level given to the first node of an empty tree.
pub const INITIAL_LEVEL: i32 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryBound {
    /// Exact cached descendant radius.
    MaxDist,
    /// The `2^(level+1)` upper bound on the descendant radius.
    Level,
    /// The pre-correction pruning test, which compares against the distance
    /// from the current best candidate to the child instead of from the
    /// query. Returns wrong answers; kept for regression tests only.
    BrokenLegacy,
}

impl fmt::Display for QueryBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QueryBound::MaxDist => "maxdist",
            QueryBound::Level => "level",
            QueryBound::BrokenLegacy => "broken-legacy",
        })
    }
}

impl FromStr for QueryBound {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "maxdist" => Ok(QueryBound::MaxDist),
            "level" => Ok(QueryBound::Level),
            "broken-legacy" => Ok(QueryBound::BrokenLegacy),
            other => Err(Error::InvalidInput(format!("unknown query bound `{other}`"))),
        }
    }
}

type NodeId = usize;

#[derive(Debug)]
struct CoverNode<D> {
    slot: usize,
    level: i32,
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    /// Creation order, used to pick the least recently added leaf.
    stamp: u64,
    maxdist: OnceLock<D>,
}

/// What a single insertion did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct InsertReport {
    /// Iterations of the leaf-raising loop.
    pub raise_iterations: usize,
    /// The outlier shortcut skipped the loop.
    pub shortcut: bool,
    /// The inserted point became the root.
    pub rerooted: bool,
    /// Levels added to every existing node so the new root covers the old.
    pub level_shift: i32,
}

pub struct CoverTree<P, M: Metric<P>> {
    metric: M,
    items: Vec<Item<P>>,
    nodes: Vec<CoverNode<M::Distance>>,
    root: Option<NodeId>,
    mode: QueryBound,
    next_stamp: u64,
}

impl<P, M: Metric<P>> CoverTree<P, M> {
    pub fn new(metric: M, mode: QueryBound) -> Self {
        Self {
            metric,
            items: Vec::new(),
            nodes: Vec::new(),
            root: None,
            mode,
            next_stamp: 0,
        }
    }

    /// Inserts all items in order.
    pub fn build(items: impl IntoIterator<Item = Item<P>>, metric: M, mode: QueryBound) -> Self {
        let mut tree = Self::new(metric, mode);
        for item in items {
            tree.insert(item);
        }
        tree
    }

    pub fn mode(&self) -> QueryBound {
        self.mode
    }

    pub fn set_mode(&mut self, mode: QueryBound) {
        self.mode = mode;
    }

    pub fn metric(&self) -> &M {
        &self.metric
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Item<P>] {
        &self.items
    }

    /// Id and level of the root.
    pub fn root(&self) -> Option<(crate::item::ItemId, i32)> {
        self.root
            .map(|r| (self.items[self.nodes[r].slot].id, self.nodes[r].level))
    }

    /// Item ids of the root's children.
    pub fn root_children(&self) -> Vec<crate::item::ItemId> {
        self.root
            .map(|r| {
                self.nodes[r]
                    .children
                    .iter()
                    .map(|&c| self.items[self.nodes[c].slot].id)
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn depth(&self) -> usize {
        let Some(root) = self.root else { return 0 };
        let mut deepest = 0;
        let mut stack = vec![(root, 1)];
        while let Some((id, depth)) = stack.pop() {
            deepest = deepest.max(depth);
            stack.extend(self.nodes[id].children.iter().map(|&c| (c, depth + 1)));
        }
        deepest
    }

    fn covdist_of(&self, id: NodeId) -> M::Distance {
        M::Distance::pow2(self.nodes[id].level)
    }

    fn dist_to(&self, id: NodeId, payload: &P) -> M::Distance {
        self.metric
            .distance(&self.items[self.nodes[id].slot].payload, payload)
    }

    fn new_node(&mut self, slot: usize, level: i32, parent: Option<NodeId>) -> NodeId {
        self.nodes.push(CoverNode {
            slot,
            level,
            parent,
            children: Vec::new(),
            stamp: self.next_stamp,
            maxdist: OnceLock::new(),
        });
        self.next_stamp += 1;
        self.nodes.len() - 1
    }

    /// Clears cached maxdist on `id` and all of its ancestors.
    fn invalidate_upwards(&mut self, mut id: Option<NodeId>) {
        while let Some(n) = id {
            self.nodes[n].maxdist.take();
            id = self.nodes[n].parent;
        }
    }

    pub fn insert(&mut self, item: Item<P>) -> InsertReport {
        let slot = self.items.len();
        self.items.push(item);
        let mut report = InsertReport::default();

        let Some(mut root) = self.root else {
            let id = self.new_node(slot, INITIAL_LEVEL, None);
            self.root = Some(id);
            return report;
        };

        let x = &self.items[slot].payload;
        let mut d_root = self.metric.distance(&self.items[self.nodes[root].slot].payload, x);
        let cov = self.covdist_of(root);
        if d_root <= cov {
            self.insert_below(root, slot);
            return report;
        }

        let two = M::Distance::from_usize_exact(2);
        let four = M::Distance::from_usize_exact(4);
        if d_root > four * cov {
            report.shortcut = true;
        } else {
            // Raised nodes become single-child roots and are never leaves
            // again, so "unvisited leaf remains" is the visited-set guard.
            let total = self.nodes.len();
            let mut visited = 0usize;
            while d_root > two * self.covdist_of(root) && total - 1 > visited {
                let Some(leaf) = self.least_recent_leaf(root) else { break };
                self.detach(leaf);
                let level = self.nodes[root].level + 1;
                let node = &mut self.nodes[leaf];
                node.level = level;
                node.children = vec![root];
                node.parent = None;
                node.maxdist = OnceLock::new();
                self.nodes[root].parent = Some(leaf);
                root = leaf;
                self.root = Some(root);
                visited += 1;
                report.raise_iterations += 1;
                d_root = self.dist_to(root, &self.items[slot].payload);
            }
        }

        // x becomes the root with the old root as its only child.
        let needed = ceil_log2(d_root).max(self.nodes[root].level + 1);
        let shift = needed - 1 - self.nodes[root].level;
        if shift > 0 {
            for node in &mut self.nodes {
                node.level += shift;
            }
            report.level_shift = shift;
        }
        let level = self.nodes[root].level + 1;
        let new_root = self.new_node(slot, level, None);
        self.nodes[new_root].children.push(root);
        self.nodes[root].parent = Some(new_root);
        self.root = Some(new_root);
        report.rerooted = true;
        report
    }

    /// Descends from `start` (which covers the new point) to the first
    /// covering child at each level and attaches the point there.
    fn insert_below(&mut self, start: NodeId, slot: usize) {
        let mut node = start;
        'descend: loop {
            for i in 0..self.nodes[node].children.len() {
                let child = self.nodes[node].children[i];
                let d = self.dist_to(child, &self.items[slot].payload);
                if d <= self.covdist_of(child) {
                    node = child;
                    continue 'descend;
                }
            }
            break;
        }
        let level = self.nodes[node].level - 1;
        let id = self.new_node(slot, level, Some(node));
        self.nodes[node].children.push(id);
        self.invalidate_upwards(Some(node));
    }

    fn least_recent_leaf(&self, root: NodeId) -> Option<NodeId> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(id, n)| *id != root && n.children.is_empty())
            .min_by_key(|(_, n)| n.stamp)
            .map(|(id, _)| id)
    }

    fn detach(&mut self, leaf: NodeId) {
        let parent = self.nodes[leaf].parent.expect("leaf is not the root");
        self.nodes[parent].children.retain(|&c| c != leaf);
        self.nodes[leaf].parent = None;
        self.invalidate_upwards(Some(parent));
    }

    /// `2^level` of the node holding `id`.
    pub fn covdist(&self, id: crate::item::ItemId) -> Option<M::Distance> {
        self.node_of(id).map(|n| self.covdist_of(n))
    }

    /// Exact maximum distance from the node holding `id` to its descendants
    /// (computed and cached on demand).
    pub fn maxdist(&self, id: crate::item::ItemId) -> Option<M::Distance> {
        self.node_of(id).map(|n| self.maxdist_of(n))
    }

    fn node_of(&self, id: crate::item::ItemId) -> Option<NodeId> {
        self.nodes.iter().position(|n| self.items[n.slot].id == id)
    }

    fn maxdist_of(&self, id: NodeId) -> M::Distance {
        *self.nodes[id].maxdist.get_or_init(|| {
            let payload = &self.items[self.nodes[id].slot].payload;
            let mut max = M::Distance::zero();
            let mut stack = self.nodes[id].children.clone();
            while let Some(d) = stack.pop() {
                max = max_dist(max, self.dist_to(d, payload));
                stack.extend_from_slice(&self.nodes[d].children);
            }
            max
        })
    }

    /// Exact k-NN in the tree's configured mode.
    pub fn knn(&self, query: &P, k: usize) -> Result<NeighborList<M::Distance>> {
        self.knn_with(query, k, self.mode)
    }

    pub fn knn_with(&self, query: &P, k: usize, mode: QueryBound) -> Result<NeighborList<M::Distance>> {
        if k < 1 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        let Some(root) = self.root else {
            return Err(Error::InvalidInput("index is empty".into()));
        };
        let mut list = NeighborList::with_capacity(k);
        // Best candidate so far, needed only by the legacy test.
        let mut best: Option<(NodeId, M::Distance)> = None;

        struct Frame<D> {
            children: Vec<(NodeId, D)>,
            next: usize,
        }

        let d_root = self.dist_to(root, query);
        let mut stack: Vec<Frame<M::Distance>> = Vec::new();
        let enter = |id: NodeId,
                         d: M::Distance,
                         list: &mut NeighborList<M::Distance>,
                         best: &mut Option<(NodeId, M::Distance)>|
         -> Frame<M::Distance> {
            list.push(self.items[self.nodes[id].slot].id, d);
            if best.is_none_or(|(_, bd)| d < bd) {
                *best = Some((id, d));
            }
            let mut children: Vec<(NodeId, M::Distance)> = self.nodes[id]
                .children
                .iter()
                .map(|&c| (c, self.dist_to(c, query)))
                .collect();
            children.sort_by(|a, b| {
                cmp_dist(&a.1, &b.1).then(
                    self.items[self.nodes[a.0].slot]
                        .id
                        .cmp(&self.items[self.nodes[b.0].slot].id),
                )
            });
            Frame { children, next: 0 }
        };

        let frame = enter(root, d_root, &mut list, &mut best);
        stack.push(frame);
        while let Some(top) = stack.last_mut() {
            let Some(&(child, d_child)) = top.children.get(top.next) else {
                stack.pop();
                continue;
            };
            top.next += 1;
            let explore = match mode {
                QueryBound::MaxDist => list
                    .kth_distance()
                    .is_none_or(|t| t + self.maxdist_of(child) > d_child),
                QueryBound::Level => {
                    let bound = M::Distance::pow2(self.nodes[child].level + 1);
                    list.kth_distance().is_none_or(|t| t + bound > d_child)
                }
                QueryBound::BrokenLegacy => {
                    let (best_node, best_d) = best.expect("root visited");
                    let d_best_child = self.metric.distance(
                        &self.items[self.nodes[best_node].slot].payload,
                        &self.items[self.nodes[child].slot].payload,
                    );
                    let t = list.kth_distance().unwrap_or(best_d);
                    t + self.maxdist_of(child) > d_best_child
                }
            };
            if explore {
                let frame = enter(child, d_child, &mut list, &mut best);
                stack.push(frame);
            }
        }
        Ok(list)
    }

    /// Verifies covering, level, parent links and any cached maxdist.
    pub fn audit(&self) -> Result<()> {
        let Some(root) = self.root else {
            return if self.items.is_empty() {
                Ok(())
            } else {
                Err(Error::Audit("items present but tree is empty".into()))
            };
        };
        if self.nodes[root].parent.is_some() {
            return Err(Error::Audit("root has a parent".into()));
        }
        let mut seen = vec![false; self.items.len()];
        let mut stack = vec![root];
        let mut reached = 0;
        while let Some(id) = stack.pop() {
            reached += 1;
            let node = &self.nodes[id];
            if std::mem::replace(&mut seen[node.slot], true) {
                return Err(Error::Audit(format!("slot {} appears twice", node.slot)));
            }
            let cov = self.covdist_of(id);
            let payload = &self.items[node.slot].payload;
            for &c in &node.children {
                let child = &self.nodes[c];
                if child.parent != Some(id) {
                    return Err(Error::Audit(format!("node {c}: parent link broken")));
                }
                if child.level != node.level - 1 {
                    return Err(Error::Audit(format!(
                        "node {c}: level {} under parent level {}",
                        child.level, node.level
                    )));
                }
                let d = self.metric.distance(&self.items[child.slot].payload, payload);
                if d > cov {
                    return Err(Error::Audit(format!(
                        "item {} at distance {d} from parent {} exceeds covdist {cov}",
                        self.items[child.slot].id, self.items[node.slot].id
                    )));
                }
                stack.push(c);
            }
            if let Some(&cached) = node.maxdist.get() {
                let mut max = M::Distance::zero();
                let mut desc = node.children.clone();
                while let Some(d) = desc.pop() {
                    max = max_dist(max, self.dist_to(d, payload));
                    desc.extend_from_slice(&self.nodes[d].children);
                }
                if cached != max {
                    return Err(Error::Audit(format!(
                        "item {}: cached maxdist {cached} but descendants reach {max}",
                        self.items[node.slot].id
                    )));
                }
                if cached > M::Distance::pow2(node.level + 1) {
                    return Err(Error::Audit(format!(
                        "item {}: maxdist {cached} above 2^(level+1)",
                        self.items[node.slot].id
                    )));
                }
            }
        }
        if reached != self.items.len() {
            return Err(Error::Audit(format!(
                "{reached} nodes reachable for {} items",
                self.items.len()
            )));
        }
        Ok(())
    }
}

impl<P, M: Metric<P>> KnnIndex<P> for CoverTree<P, M> {
    type Distance = M::Distance;

    fn insert(&mut self, item: Item<P>) -> Result<()> {
        CoverTree::insert(self, item);
        Ok(())
    }

    fn knn(&self, query: &P, k: usize) -> Result<NeighborList<M::Distance>> {
        CoverTree::knn(self, query, k)
    }

    fn len(&self) -> usize {
        CoverTree::len(self)
    }
}
