//! Brute-force ground truth for k-NN and radius queries.

use crate::error::{Error, Result};
use crate::index::KnnIndex;
use crate::item::Item;
use crate::metrics::Metric;
use crate::neighbors::NeighborList;

/// Exact k nearest neighbors by scanning every item once.
///
/// Makes exactly `items.len()` metric calls.
pub fn brute_knn<P, M>(items: &[Item<P>], metric: &M, query: &P, k: usize) -> Result<NeighborList<M::Distance>>
where
    M: Metric<P>,
{
    if k < 1 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if items.is_empty() {
        return Err(Error::InvalidInput("collection is empty".into()));
    }
    let mut list = NeighborList::with_capacity(k);
    for item in items {
        list.push(item.id, metric.distance(&item.payload, query));
    }
    Ok(list)
}

/// Every item within `radius` of the query (inclusive), sorted.
pub fn brute_radius<P, M>(items: &[Item<P>], metric: &M, query: &P, radius: M::Distance) -> NeighborList<M::Distance>
where
    M: Metric<P>,
{
    let mut list = NeighborList::unbounded();
    for item in items {
        let d = metric.distance(&item.payload, query);
        if d <= radius {
            list.push(item.id, d);
        }
    }
    list
}

/// The no-index baseline: insertion is free, every query scans everything.
pub struct BruteForce<P, M> {
    items: Vec<Item<P>>,
    metric: M,
}

impl<P, M: Metric<P>> BruteForce<P, M> {
    pub fn new(items: Vec<Item<P>>, metric: M) -> Self {
        Self { items, metric }
    }

    pub fn items(&self) -> &[Item<P>] {
        &self.items
    }
}

impl<P, M: Metric<P>> KnnIndex<P> for BruteForce<P, M> {
    type Distance = M::Distance;

    fn insert(&mut self, item: Item<P>) -> Result<()> {
        self.items.push(item);
        Ok(())
    }

    fn knn(&self, query: &P, k: usize) -> Result<NeighborList<M::Distance>> {
        brute_knn(&self.items, &self.metric, query, k)
    }

    fn len(&self) -> usize {
        self.items.len()
    }
}
