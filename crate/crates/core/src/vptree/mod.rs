//! Vantage-point tree with bucket leaves and incremental insertion.
//!
//! Each internal node holds one item (its vantage point) and four bounds on
//! the distances from the vantage point to everything below it: the
//! `[low_near, low_far]` annulus containing the low child and the
//! `[high_near, high_far]` annulus containing the high child. Leaves are
//! buckets that cache each member's distance to the parent vantage point.
//!
//! Batch construction splits until subsets hold at most `bucket` items.
//! Incremental insertion descends by the midpoint of the inner bounds,
//! widening bounds on the way, and splits a bucket once it holds more than
//! `bucket²` members. Bounds only ever widen, so after many insertions they
//! remain sound but may be loose.

mod split;

pub use split::{min_variance_split, SplitStrategy};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::KnnIndex;
use crate::item::Item;
use crate::metrics::Metric;
use crate::neighbors::NeighborList;
use crate::scalar::{cmp_dist, max_dist, min_dist, Distance};

pub const DEFAULT_BUCKET: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VpConfig {
    pub strategy: SplitStrategy,
    /// Bucket size `b`; batch leaves hold at most `b`, grown leaves `b²`.
    pub bucket: usize,
    /// Seeds the vantage point selection.
    pub seed: u64,
}

impl VpConfig {
    pub fn new(strategy: SplitStrategy) -> Self {
        Self {
            strategy,
            bucket: DEFAULT_BUCKET,
            seed: 0,
        }
    }

    pub fn bucket(mut self, bucket: usize) -> Self {
        self.bucket = bucket;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.bucket < 2 {
            return Err(Error::InvalidInput(format!(
                "bucket size must be at least 2, got {}",
                self.bucket
            )));
        }
        Ok(())
    }
}

/// The four distance bounds of an internal node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VpBounds<D> {
    pub low_near: D,
    pub low_far: D,
    pub high_near: D,
    pub high_far: D,
}

type NodeId = usize;

#[derive(Debug, Clone)]
struct Member<D> {
    slot: usize,
    /// Distance to the parent vantage point; `None` in a root leaf.
    parent_dist: Option<D>,
}

#[derive(Debug, Clone)]
enum Node<D> {
    Internal {
        vp: usize,
        bounds: VpBounds<D>,
        low: NodeId,
        high: NodeId,
    },
    Leaf {
        members: Vec<Member<D>>,
    },
}

/// Shape summary used by tests and diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VpShape {
    pub internal_nodes: usize,
    pub leaves: usize,
    pub max_leaf: usize,
    pub depth: usize,
}

pub struct VpTree<P, M: Metric<P>> {
    metric: M,
    config: VpConfig,
    items: Vec<Item<P>>,
    nodes: Vec<Node<M::Distance>>,
    rng: ChaCha8Rng,
}

impl<P, M: Metric<P>> VpTree<P, M> {
    /// An empty tree; the first insertion creates a root bucket.
    pub fn new(metric: M, config: VpConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            metric,
            config,
            items: Vec::new(),
            nodes: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
        })
    }

    /// Top-down construction over all `items`.
    pub fn build(items: Vec<Item<P>>, metric: M, config: VpConfig) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidInput("cannot batch-build from no items".into()));
        }
        let mut tree = Self::new(metric, config)?;
        tree.items = items;
        let members = (0..tree.items.len())
            .map(|slot| Member {
                slot,
                parent_dist: None,
            })
            .collect();
        tree.build_subtree(members);
        Ok(tree)
    }

    pub fn config(&self) -> &VpConfig {
        &self.config
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

    /// Root bounds, if the root is an internal node.
    pub fn root_bounds(&self) -> Option<VpBounds<M::Distance>> {
        match self.nodes.first()? {
            Node::Internal { bounds, .. } => Some(*bounds),
            Node::Leaf { .. } => None,
        }
    }

    pub fn shape(&self) -> VpShape {
        let mut shape = VpShape::default();
        if self.nodes.is_empty() {
            return shape;
        }
        let mut stack = vec![(0usize, 1usize)];
        while let Some((id, depth)) = stack.pop() {
            shape.depth = shape.depth.max(depth);
            match &self.nodes[id] {
                Node::Internal { low, high, .. } => {
                    shape.internal_nodes += 1;
                    stack.push((*low, depth + 1));
                    stack.push((*high, depth + 1));
                }
                Node::Leaf { members } => {
                    shape.leaves += 1;
                    shape.max_leaf = shape.max_leaf.max(members.len());
                }
            }
        }
        shape
    }

    /// Builds the subtree for `members` at the root of the arena (when
    /// empty) and returns its node id.
    fn build_subtree(&mut self, members: Vec<Member<M::Distance>>) -> NodeId {
        let root = self.push_leaf(Vec::new());
        let mut work = vec![(root, members)];
        while let Some((id, members)) = work.pop() {
            if members.len() <= self.config.bucket {
                self.nodes[id] = Node::Leaf { members };
                continue;
            }
            let (vp, bounds, low, high) = self.partition(members);
            let low_id = self.push_leaf(Vec::new());
            let high_id = self.push_leaf(Vec::new());
            self.nodes[id] = Node::Internal {
                vp,
                bounds,
                low: low_id,
                high: high_id,
            };
            work.push((high_id, high));
            work.push((low_id, low));
        }
        root
    }

    fn push_leaf(&mut self, members: Vec<Member<M::Distance>>) -> NodeId {
        self.nodes.push(Node::Leaf { members });
        self.nodes.len() - 1
    }

    /// Picks a random vantage point from `members` and splits the rest.
    #[allow(clippy::type_complexity)]
    fn partition(
        &mut self,
        mut members: Vec<Member<M::Distance>>,
    ) -> (
        usize,
        VpBounds<M::Distance>,
        Vec<Member<M::Distance>>,
        Vec<Member<M::Distance>>,
    ) {
        debug_assert!(members.len() >= 3);
        let pick = self.rng.gen_range(0..members.len());
        let vp = members.swap_remove(pick).slot;
        let vp_payload = &self.items[vp].payload;
        let mut rest: Vec<Member<M::Distance>> = members
            .into_iter()
            .map(|m| Member {
                parent_dist: Some(self.metric.distance(&self.items[m.slot].payload, vp_payload)),
                slot: m.slot,
            })
            .collect();
        rest.sort_by(|a, b| {
            cmp_dist(&a.parent_dist, &b.parent_dist)
                .then(self.items[a.slot].id.cmp(&self.items[b.slot].id))
        });
        let dists: Vec<f64> = rest
            .iter()
            .map(|m| m.parent_dist.expect("set above").to_f64_lossy())
            .collect();
        let s = self.config.strategy.split_index(&dists);
        let high = rest.split_off(s);
        let low = rest;
        let d = |m: &Member<M::Distance>| m.parent_dist.expect("set above");
        let bounds = VpBounds {
            low_near: d(&low[0]),
            low_far: d(&low[low.len() - 1]),
            high_near: d(&high[0]),
            high_far: d(&high[high.len() - 1]),
        };
        (vp, bounds, low, high)
    }

    /// Inserts one item, splitting its bucket once it exceeds `bucket²`.
    pub fn insert(&mut self, item: Item<P>) {
        let slot = self.items.len();
        self.items.push(item);
        if self.nodes.is_empty() {
            self.push_leaf(vec![Member {
                slot,
                parent_dist: None,
            }]);
            return;
        }
        let mut id = 0;
        let mut parent_dist = None;
        loop {
            match &mut self.nodes[id] {
                Node::Internal {
                    vp,
                    bounds,
                    low,
                    high,
                } => {
                    let dist = self
                        .metric
                        .distance(&self.items[slot].payload, &self.items[*vp].payload);
                    if dist + dist < bounds.low_far + bounds.high_near {
                        bounds.low_far = max_dist(dist, bounds.low_far);
                        bounds.low_near = min_dist(dist, bounds.low_near);
                        id = *low;
                    } else {
                        bounds.high_far = max_dist(dist, bounds.high_far);
                        bounds.high_near = min_dist(dist, bounds.high_near);
                        id = *high;
                    }
                    parent_dist = Some(dist);
                }
                Node::Leaf { members } => {
                    members.push(Member { slot, parent_dist });
                    let limit = self.config.bucket * self.config.bucket;
                    if members.len() > limit {
                        let members = std::mem::take(members);
                        self.split_leaf(id, members);
                    }
                    return;
                }
            }
        }
    }

    /// Replaces leaf `id` by an internal node with two bucket children.
    fn split_leaf(&mut self, id: NodeId, members: Vec<Member<M::Distance>>) {
        let (vp, bounds, low, high) = self.partition(members);
        let low_id = self.push_leaf(low);
        let high_id = self.push_leaf(high);
        self.nodes[id] = Node::Internal {
            vp,
            bounds,
            low: low_id,
            high: high_id,
        };
    }

    /// Exact k nearest neighbors of `query`.
    pub fn knn(&self, query: &P, k: usize) -> Result<NeighborList<M::Distance>> {
        if k < 1 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        if self.nodes.is_empty() {
            return Err(Error::InvalidInput("index is empty".into()));
        }
        let mut list = NeighborList::with_capacity(k);

        struct Visit<D> {
            node: NodeId,
            /// Distance from the query to the parent vantage point, and the
            /// annulus of this child around it.
            parent: Option<(D, D, D)>,
        }

        let mut stack = vec![Visit {
            node: 0,
            parent: None,
        }];
        while let Some(Visit { node, parent }) = stack.pop() {
            if let (Some((dq, near, far)), Some(tau)) = (parent, list.kth_distance()) {
                if dq + tau < near || dq > far + tau {
                    continue;
                }
            }
            match &self.nodes[node] {
                Node::Internal {
                    vp,
                    bounds,
                    low,
                    high,
                } => {
                    let dq = self.metric.distance(query, &self.items[*vp].payload);
                    list.push(self.items[*vp].id, dq);
                    let low_visit = Visit {
                        node: *low,
                        parent: Some((dq, bounds.low_near, bounds.low_far)),
                    };
                    let high_visit = Visit {
                        node: *high,
                        parent: Some((dq, bounds.high_near, bounds.high_far)),
                    };
                    // The nearer side is pushed last so it is searched first.
                    if dq + dq < bounds.low_far + bounds.high_near {
                        stack.push(high_visit);
                        stack.push(low_visit);
                    } else {
                        stack.push(low_visit);
                        stack.push(high_visit);
                    }
                }
                Node::Leaf { members } => {
                    let dq_parent = parent.map(|p| p.0);
                    for m in members {
                        if let (Some(dq), Some(cached), Some(tau)) =
                            (dq_parent, m.parent_dist, list.kth_distance())
                        {
                            if dq > cached + tau || cached > dq + tau {
                                continue;
                            }
                        }
                        let item = &self.items[m.slot];
                        list.push(item.id, self.metric.distance(query, &item.payload));
                    }
                }
            }
        }
        Ok(list)
    }

    /// Exhaustively re-verifies every bound, cached distance and bucket size.
    ///
    /// Uses the tree's own metric, so a counting metric will tally the audit.
    pub fn audit(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return if self.items.is_empty() {
                Ok(())
            } else {
                Err(Error::Audit("items present but tree has no nodes".into()))
            };
        }
        let limit = self.config.bucket * self.config.bucket;
        let mut seen = vec![false; self.items.len()];
        let mut stack = vec![(0usize, None::<usize>)];
        while let Some((id, parent_vp)) = stack.pop() {
            match &self.nodes[id] {
                Node::Internal {
                    vp,
                    bounds,
                    low,
                    high,
                } => {
                    mark(&mut seen, *vp)?;
                    let b = bounds;
                    if !(b.low_near <= b.low_far && b.low_far <= b.high_near && b.high_near <= b.high_far) {
                        return Err(Error::Audit(format!("node {id}: bounds out of order: {b:?}")));
                    }
                    let vp_payload = &self.items[*vp].payload;
                    for (child, near, far, side) in [
                        (*low, b.low_near, b.low_far, "low"),
                        (*high, b.high_near, b.high_far, "high"),
                    ] {
                        for slot in self.subtree_slots(child) {
                            let d = self.metric.distance(&self.items[slot].payload, vp_payload);
                            if d < near || d > far {
                                return Err(Error::Audit(format!(
                                    "node {id}: item {} at distance {d} outside {side} annulus [{near}, {far}]",
                                    self.items[slot].id
                                )));
                            }
                        }
                        stack.push((child, Some(*vp)));
                    }
                }
                Node::Leaf { members } => {
                    if members.len() > limit {
                        return Err(Error::Audit(format!(
                            "leaf {id} holds {} members, limit {limit}",
                            members.len()
                        )));
                    }
                    for m in members {
                        mark(&mut seen, m.slot)?;
                        match (parent_vp, m.parent_dist) {
                            (None, None) => {}
                            (Some(vp), Some(cached)) => {
                                let d = self
                                    .metric
                                    .distance(&self.items[m.slot].payload, &self.items[vp].payload);
                                if d != cached {
                                    return Err(Error::Audit(format!(
                                        "leaf {id}: cached distance {cached} for item {} but metric gives {d}",
                                        self.items[m.slot].id
                                    )));
                                }
                            }
                            _ => {
                                return Err(Error::Audit(format!(
                                    "leaf {id}: cached distance presence does not match parent"
                                )))
                            }
                        }
                    }
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Audit(format!(
                "item {} not reachable from the root",
                self.items[missing].id
            )));
        }
        Ok(())
    }

    fn subtree_slots(&self, root: NodeId) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            match &self.nodes[id] {
                Node::Internal { vp, low, high, .. } => {
                    out.push(*vp);
                    stack.push(*low);
                    stack.push(*high);
                }
                Node::Leaf { members } => out.extend(members.iter().map(|m| m.slot)),
            }
        }
        out
    }
}

fn mark(seen: &mut [bool], slot: usize) -> Result<()> {
    if std::mem::replace(&mut seen[slot], true) {
        return Err(Error::Audit(format!("slot {slot} appears twice")));
    }
    Ok(())
}

impl<P, M: Metric<P>> KnnIndex<P> for VpTree<P, M> {
    type Distance = M::Distance;

    fn insert(&mut self, item: Item<P>) -> Result<()> {
        VpTree::insert(self, item);
        Ok(())
    }

    fn knn(&self, query: &P, k: usize) -> Result<NeighborList<M::Distance>> {
        VpTree::knn(self, query, k)
    }

    fn len(&self) -> usize {
        VpTree::len(self)
    }
}
