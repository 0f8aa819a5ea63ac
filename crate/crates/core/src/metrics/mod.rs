//! Distance functions and the call-counting wrapper.

mod counting;
mod euclidean;
mod levenshtein;
mod lz_jaccard;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use counting::{counted, CountingMetric};
pub use euclidean::{euclidean, Euclidean};
pub use levenshtein::{levenshtein, Levenshtein};
pub use lz_jaccard::{jaccard_distance, lz_set, LzJaccard, TokenSet};

use crate::error::Error;
use crate::scalar::Distance;

/// A distance function over payloads of type `P` satisfying the metric axioms.
pub trait Metric<P: ?Sized> {
    type Distance: Distance;

    fn distance(&self, a: &P, b: &P) -> Self::Distance;
}

impl<P: ?Sized, M: Metric<P> + ?Sized> Metric<P> for &M {
    type Distance = M::Distance;

    #[inline]
    fn distance(&self, a: &P, b: &P) -> Self::Distance {
        (**self).distance(a, b)
    }
}

/// The concrete metrics shipped with the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    Euclidean,
    Levenshtein,
    LzJaccard,
}

impl MetricKind {
    pub const ALL: [MetricKind; 3] = [
        MetricKind::Euclidean,
        MetricKind::Levenshtein,
        MetricKind::LzJaccard,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Euclidean => "euclidean",
            MetricKind::Levenshtein => "levenshtein",
            MetricKind::LzJaccard => "lz-jaccard",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "euclidean" => Ok(MetricKind::Euclidean),
            "levenshtein" => Ok(MetricKind::Levenshtein),
            "lz-jaccard" | "lzjd" => Ok(MetricKind::LzJaccard),
            other => Err(Error::InvalidInput(format!("unknown metric `{other}`"))),
        }
    }
}
