use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// How an internal node divides the sorted distances to its vantage point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitStrategy {
    /// Half of the points on each side.
    Median,
    /// The split minimizing the size-weighted variance of the two sides.
    MinVariance,
}

impl SplitStrategy {
    /// Index `s` such that `dists[..s]` forms the low side, `1 <= s < n`.
    ///
    /// `dists` must be sorted ascending and hold at least two values.
    pub fn split_index(self, dists: &[f64]) -> usize {
        match self {
            SplitStrategy::Median => median_split(dists.len()),
            SplitStrategy::MinVariance => min_variance_split(dists),
        }
    }
}

impl fmt::Display for SplitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitStrategy::Median => "median",
            SplitStrategy::MinVariance => "min-variance",
        })
    }
}

impl FromStr for SplitStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "median" => Ok(SplitStrategy::Median),
            "min-variance" | "mv" => Ok(SplitStrategy::MinVariance),
            other => Err(Error::InvalidInput(format!("unknown split strategy `{other}`"))),
        }
    }
}

pub(crate) fn median_split(n: usize) -> usize {
    debug_assert!(n >= 2);
    n.div_ceil(2)
}

/// Minimizes `s·σ²[0, s) + (n−s)·σ²[s, n)` over `s ∈ [1, n)` (population
/// variances) using one forward and one backward Welford pass.
///
/// Ties go to the `s` closest to `n/2`, then to the smaller `s`. A list of
/// identical values splits at `⌈n/2⌉`.
pub fn min_variance_split(dists: &[f64]) -> usize {
    let n = dists.len();
    assert!(n >= 2, "min_variance_split needs at least two distances");
    if dists.iter().all(|&d| d == dists[0]) {
        return median_split(n);
    }

    // prefix[s] = sum of squared deviations of dists[..s]
    let mut prefix = vec![0.0; n + 1];
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    for (i, &x) in dists.iter().enumerate() {
        let count = (i + 1) as f64;
        let delta = x - mean;
        mean += delta / count;
        m2 += delta * (x - mean);
        prefix[i + 1] = m2;
    }

    // suffix[s] = sum of squared deviations of dists[s..]
    let mut suffix = vec![0.0; n + 1];
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    for (j, &x) in dists.iter().enumerate().rev() {
        let count = (n - j) as f64;
        let delta = x - mean;
        mean += delta / count;
        m2 += delta * (x - mean);
        suffix[j] = m2;
    }

    let objective = |s: usize| prefix[s] + suffix[s];
    let best = (1..n).map(objective).fold(f64::INFINITY, f64::min);
    // Objectives within the accumulated rounding error of the best are ties.
    let slack = 4.0 * n as f64 * f64::EPSILON * prefix[n];
    (1..n)
        .filter(|&s| objective(s) <= best + slack)
        .min_by_key(|&s| ((2 * s).abs_diff(n), s))
        .expect("n >= 2")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_halves_split_cleanly() {
        assert_eq!(min_variance_split(&[0.0, 0.0, 10.0, 10.0]), 2);
    }

    #[test]
    fn two_clusters_of_three() {
        assert_eq!(min_variance_split(&[1.0, 1.1, 1.2, 5.0, 5.1, 5.2]), 3);
    }

    #[test]
    fn symmetric_tie_takes_smaller_split() {
        assert_eq!(min_variance_split(&[0.0, 0.0, 1.0, 2.0, 2.0, 2.0, 2.0, 3.0, 4.0, 4.0]), 3);
    }

    #[test]
    fn all_equal_falls_back_to_ceil_half() {
        assert_eq!(min_variance_split(&[3.0; 5]), 3);
        assert_eq!(min_variance_split(&[3.0; 4]), 2);
        assert_eq!(min_variance_split(&[3.0; 2]), 1);
    }

    #[test]
    fn isolates_single_outlier() {
        assert_eq!(min_variance_split(&[1.0, 1.0, 1.0, 1.0, 100.0]), 4);
    }

    #[test]
    fn median_is_ceil_half() {
        assert_eq!(SplitStrategy::Median.split_index(&[0.0; 7]), 4);
        assert_eq!(SplitStrategy::Median.split_index(&[0.0; 8]), 4);
    }

    #[test]
    fn parses_names() {
        assert_eq!("mv".parse::<SplitStrategy>().unwrap(), SplitStrategy::MinVariance);
        assert!("mean".parse::<SplitStrategy>().is_err());
    }
}
