use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use super::Metric;

/// Wraps a metric and tallies every evaluation.
///
/// Clones share one counter, so an index can own a clone while the caller
/// keeps another handle to read and reset the tally. Increments are atomic;
/// no evaluation is lost under concurrent callers.
#[derive(Debug, Clone, Default)]
pub struct CountingMetric<M> {
    inner: M,
    count: Arc<AtomicU64>,
}

pub fn counted<M>(metric: M) -> CountingMetric<M> {
    CountingMetric::new(metric)
}

impl<M> CountingMetric<M> {
    pub fn new(inner: M) -> Self {
        Self {
            inner,
            count: Arc::new(AtomicU64::new(0)),
        }
    }

    pub fn count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.count.store(0, Ordering::Relaxed);
    }

    /// The wrapped metric; evaluations through it are not counted.
    pub fn inner(&self) -> &M {
        &self.inner
    }
}

impl<P: ?Sized, M: Metric<P>> Metric<P> for CountingMetric<M> {
    type Distance = M::Distance;

    #[inline]
    fn distance(&self, a: &P, b: &P) -> Self::Distance {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.distance(a, b)
    }
}
