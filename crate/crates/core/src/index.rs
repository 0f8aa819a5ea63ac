use crate::error::Result;
use crate::item::Item;
use crate::neighbors::NeighborList;
use crate::scalar::Distance;

/// Common surface of every exact k-NN index, used by the experiment harness.
pub trait KnnIndex<P> {
    type Distance: Distance;

    fn insert(&mut self, item: Item<P>) -> Result<()>;

    fn knn(&self, query: &P, k: usize) -> Result<NeighborList<Self::Distance>>;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
