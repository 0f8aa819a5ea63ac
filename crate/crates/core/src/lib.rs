//! Exact k-nearest-neighbor search under arbitrary metrics, with indexes that
//! accept insertions between queries.
//!
//! Three index families are provided, each generic over the payload type
//! `P`, the metric `M` and, through the metric, the distance scalar:
//!
//! * [`VpTree`]: vantage-point tree with median or minimum-variance splits.
//! * [`RbcIndex`]: random ball cover with incremental representative growth.
//! * [`CoverTree`]: simplified cover tree with exact or level-bounded pruning.
//!
//! [`CountingMetric`] tallies distance evaluations, which is how every
//! experiment in [`harness`] measures cost.

pub mod covertree;
pub mod datasets;
pub mod error;
pub mod harness;
pub mod index;
pub mod item;
pub mod metrics;
pub mod neighbors;
pub mod oracle;
pub mod rbc;
pub mod scalar;
pub mod vptree;

pub use covertree::{CoverTree, InsertReport, QueryBound};
pub use error::{Error, Result};
pub use index::KnnIndex;
pub use item::{Item, ItemId};
pub use metrics::{counted, CountingMetric, Euclidean, Levenshtein, LzJaccard, Metric, MetricKind, TokenSet};
pub use neighbors::{Neighbor, NeighborList};
pub use oracle::{brute_knn, brute_radius};
pub use rbc::{RbcIndex, RbcSearch};
pub use scalar::Distance;
pub use vptree::{SplitStrategy, VpConfig, VpTree};

/// Exact rational distance used by the LZ-Jaccard metric.
pub type Rational = num_rational::Ratio<u64>;

pub type EuclideanF64 = Euclidean<f64>;
pub type EuclideanF32 = Euclidean<f32>;

pub type VectorItem = Item<Vec<f64>>;
pub type BytesItem = Item<Vec<u8>>;
pub type TokenItem = Item<TokenSet>;

pub type VpTreeF64 = VpTree<Vec<f64>, EuclideanF64>;
pub type RbcIndexF64 = RbcIndex<Vec<f64>, EuclideanF64>;
pub type CoverTreeF64 = CoverTree<Vec<f64>, EuclideanF64>;
