use serde::{Deserialize, Serialize};

/// Stable identifier of an indexed datum.
pub type ItemId = usize;

/// One indexed datum: a payload with a stable id unique within its collection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item<P> {
    pub id: ItemId,
    pub payload: P,
}

impl<P> Item<P> {
    pub fn new(id: ItemId, payload: P) -> Self {
        Self { id, payload }
    }
}

/// Wraps payloads into items with ids `0..n` in iteration order.
pub fn enumerate_items<P>(payloads: impl IntoIterator<Item = P>) -> Vec<Item<P>> {
    payloads
        .into_iter()
        .enumerate()
        .map(|(id, payload)| Item { id, payload })
        .collect()
}
