use crate::item::ItemId;
use crate::scalar::cmp_dist;

/// One search result: an item id and its distance to the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor<D> {
    pub id: ItemId,
    pub distance: D,
}

/// Results ordered ascending by distance, ties broken by ascending id.
///
/// A bounded list keeps only the `capacity` best entries; an unbounded list
/// (used for radius queries) keeps everything offered to it.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList<D> {
    entries: Vec<Neighbor<D>>,
    capacity: Option<usize>,
}

impl<D: PartialOrd + Copy> NeighborList<D> {
    pub fn with_capacity(k: usize) -> Self {
        Self {
            entries: Vec::with_capacity(k.min(1024) + 1),
            capacity: Some(k),
        }
    }

    pub fn unbounded() -> Self {
        Self {
            entries: Vec::new(),
            capacity: None,
        }
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.capacity.is_some_and(|k| self.entries.len() >= k)
    }

    /// Distance of the current k-th entry, or `None` while fewer than k
    /// entries are held (an infinite pruning radius).
    pub fn kth_distance(&self) -> Option<D> {
        if self.is_full() {
            self.entries.last().map(|n| n.distance)
        } else {
            None
        }
    }

    /// Offers a candidate; returns whether it was kept.
    pub fn push(&mut self, id: ItemId, distance: D) -> bool {
        let key = |n: &Neighbor<D>| (n.distance, n.id);
        if let (Some(k), Some(last)) = (self.capacity, self.entries.last()) {
            if k == 0 {
                return false;
            }
            if self.entries.len() >= k && !less((distance, id), key(last)) {
                return false;
            }
        }
        let pos = self
            .entries
            .partition_point(|n| less(key(n), (distance, id)));
        self.entries.insert(pos, Neighbor { id, distance });
        if let Some(k) = self.capacity {
            self.entries.truncate(k);
        }
        true
    }

    pub fn as_slice(&self) -> &[Neighbor<D>] {
        &self.entries
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Neighbor<D>> {
        self.entries.iter()
    }

    pub fn ids(&self) -> Vec<ItemId> {
        self.entries.iter().map(|n| n.id).collect()
    }

    pub fn distances(&self) -> Vec<D> {
        self.entries.iter().map(|n| n.distance).collect()
    }

    pub fn into_vec(self) -> Vec<Neighbor<D>> {
        self.entries
    }
}

impl<'a, D> IntoIterator for &'a NeighborList<D> {
    type Item = &'a Neighbor<D>;
    type IntoIter = std::slice::Iter<'a, Neighbor<D>>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

#[inline]
fn less<D: PartialOrd>(a: (D, ItemId), b: (D, ItemId)) -> bool {
    cmp_dist(&a.0, &b.0).then(a.1.cmp(&b.1)).is_lt()
}
