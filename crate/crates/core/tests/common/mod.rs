#![allow(dead_code)]

use metric_index::Item;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Tie rule shared by both split oracles: smallest objective, then the
/// split closest to n/2, then the smaller split.
fn pick<F>(n: usize, mut better: F) -> usize
where
    F: FnMut(usize, usize) -> std::cmp::Ordering,
{
    let mut best = 1;
    for s in 2..n {
        let ord = better(s, best)
            .then_with(|| (2 * s).abs_diff(n).cmp(&(2 * best).abs_diff(n)))
            .then(s.cmp(&best));
        if ord.is_lt() {
            best = s;
        }
    }
    best
}

/// Exhaustive scan with exact integer arithmetic. Minimizing
/// `s·σ²_L + (n−s)·σ²_R` is maximizing `L²/s + R²/(n−s)` where L and R are
/// the side sums.
pub fn split_oracle_exact(values: &[i64]) -> usize {
    let n = values.len();
    if values.iter().all(|&v| v == values[0]) {
        return n.div_ceil(2);
    }
    let total: i128 = values.iter().map(|&v| v as i128).sum();
    let gain = |s: usize| -> (i128, i128) {
        let left: i128 = values[..s].iter().map(|&v| v as i128).sum();
        let right = total - left;
        let (a, b) = (s as i128, (n - s) as i128);
        (left * left * b + right * right * a, a * b)
    };
    pick(n, |a, b| {
        let (na, da) = gain(a);
        let (nb, db) = gain(b);
        // larger gain first
        (nb * da).cmp(&(na * db))
    })
}

/// Exhaustive scan computing each side's variance directly in two passes.
pub fn split_oracle_f64(values: &[f64]) -> usize {
    let n = values.len();
    if values.iter().all(|&v| v == values[0]) {
        return n.div_ceil(2);
    }
    let ssd = |xs: &[f64]| {
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
    };
    let objective = |s: usize| ssd(&values[..s]) + ssd(&values[s..]);
    pick(n, |a, b| objective(a).total_cmp(&objective(b)))
}

pub fn random_sorted_ints(rng: &mut ChaCha8Rng, n: usize) -> Vec<i64> {
    let hi = rng.gen_range(1..=50);
    let mut v: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=hi)).collect();
    v.sort_unstable();
    v
}

pub fn random_sorted_floats(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 10.0).collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

pub fn random_vectors(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Item<Vec<f64>>> {
    (0..n)
        .map(|id| Item::new(id, (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()))
        .collect()
}

/// Integer-grid points, so equal distances show up often.
pub fn grid_vectors(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Item<Vec<f64>>> {
    (0..n)
        .map(|id| Item::new(id, (0..dim).map(|_| rng.gen_range(0..4) as f64).collect()))
        .collect()
}
