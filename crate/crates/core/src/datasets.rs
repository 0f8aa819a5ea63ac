//! Dataset loading, seeded synthetic data and query/insert splits.
//!
//! File formats:
//!
//! * dense vectors: plain text, one point per line, reals separated by
//!   whitespace and/or commas; an optional first line `d=<dim>` fixes the
//!   dimension. Blank lines are skipped.
//! * strings: UTF-8 text, one item per line with the terminator stripped.
//!   Blank lines are valid empty items.
//! * binary directory: every regular file is one item holding its raw
//!   bytes, in lexicographic filename order.
//!
//! All randomness uses ChaCha8 seeded from a `u64`, with a separate stream
//! per purpose (see [`seeded_rng`]), so results are identical across
//! platforms.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::item::{enumerate_items, Item};

/// Independent random streams derived from one seed.
pub mod stream {
    pub const SYNTHETIC: u64 = 1;
    pub const SPLIT: u64 = 2;
    pub const QUERIES: u64 = 3;
    pub const INDEX: u64 = 4;
    pub const AUDIT: u64 = 5;
}

/// The generator behind every seeded operation: ChaCha8 keyed by `seed`,
/// on stream `stream`.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum DatasetSpec {
    VectorFile { path: PathBuf },
    StringsFile { path: PathBuf },
    BinaryDir { path: PathBuf },
    GaussianMixture {
        n: usize,
        dim: usize,
        clusters: usize,
        spread: f64,
        seed: u64,
    },
    RandomStrings {
        n: usize,
        max_len: usize,
        alphabet: usize,
        seed: u64,
    },
    RandomBlobs {
        n: usize,
        max_len: usize,
        seed: u64,
    },
}

/// Items loaded from a [`DatasetSpec`].
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Vectors(Vec<Item<Vec<f64>>>),
    Bytes(Vec<Item<Vec<u8>>>),
}

impl Dataset {
    pub fn len(&self) -> usize {
        match self {
            Dataset::Vectors(v) => v.len(),
            Dataset::Bytes(b) => b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn load(spec: &DatasetSpec) -> Result<Dataset> {
    Ok(match spec {
        DatasetSpec::VectorFile { path } => Dataset::Vectors(load_vectors(path)?),
        DatasetSpec::StringsFile { path } => Dataset::Bytes(load_strings(path)?),
        DatasetSpec::BinaryDir { path } => Dataset::Bytes(load_binary_dir(path)?),
        DatasetSpec::GaussianMixture {
            n,
            dim,
            clusters,
            spread,
            seed,
        } => Dataset::Vectors(synthetic_gaussian_mixture(*n, *dim, *clusters, *spread, *seed)?),
        DatasetSpec::RandomStrings {
            n,
            max_len,
            alphabet,
            seed,
        } => Dataset::Bytes(random_strings(*n, *max_len, *alphabet, *seed)),
        DatasetSpec::RandomBlobs { n, max_len, seed } => Dataset::Bytes(random_blobs(*n, *max_len, *seed)),
    })
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses the dense-vector text format.
pub fn parse_vectors(text: &str, source_name: &str) -> Result<Vec<Item<Vec<f64>>>> {
    let load_err = |line: usize, message: String| Error::Load {
        source_name: source_name.to_string(),
        record: format!("line {line}"),
        message,
    };
    let mut dim: Option<usize> = None;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if rows.is_empty() && dim.is_none() {
            if let Some(d) = line.strip_prefix("d=") {
                let d = d
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| load_err(lineno, format!("bad dimension header: {e}")))?;
                if d == 0 {
                    return Err(load_err(lineno, "dimension must be positive".into()));
                }
                dim = Some(d);
                continue;
            }
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| load_err(lineno, format!("`{t}` is not a finite real")))
            })
            .collect::<Result<Vec<f64>>>()?;
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(load_err(
                    lineno,
                    format!("expected {d} values, found {}", row.len()),
                ))
            }
            Some(_) => {}
        }
        rows.push(row);
    }
    Ok(enumerate_items(rows))
}

pub fn load_vectors(path: &Path) -> Result<Vec<Item<Vec<f64>>>> {
    parse_vectors(&read_text(path)?, &path.display().to_string())
}

/// One item per line; `\n` and `\r\n` terminators are stripped.
pub fn parse_strings(text: &str) -> Vec<Item<Vec<u8>>> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    if text.is_empty() {
        return Vec::new();
    }
    enumerate_items(
        body.split('\n')
            .map(|l| l.strip_suffix('\r').unwrap_or(l).as_bytes().to_vec()),
    )
}

pub fn load_strings(path: &Path) -> Result<Vec<Item<Vec<u8>>>> {
    Ok(parse_strings(&read_text(path)?))
}

pub fn load_binary_dir(path: &Path) -> Result<Vec<Item<Vec<u8>>>> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut files = Vec::new();
    for entry in fs::read_dir(path).map_err(io_err)? {
        let entry = entry.map_err(io_err)?;
        if entry.file_type().map_err(io_err)?.is_file() {
            files.push(entry.path());
        }
    }
    files.sort();
    files
        .into_iter()
        .map(|f| {
            fs::read(&f).map_err(|source| Error::Io {
                path: f.clone(),
                source,
            })
        })
        .collect::<Result<Vec<_>>>()
        .map(enumerate_items)
}

/// Points scattered around `clusters` centers drawn uniformly in `[0,1]^d`,
/// each coordinate perturbed by `N(0, spread²)`. Each point picks its
/// cluster uniformly at random.
pub fn synthetic_gaussian_mixture(
    n: usize,
    dim: usize,
    clusters: usize,
    spread: f64,
    seed: u64,
) -> Result<Vec<Item<Vec<f64>>>> {
    if n == 0 || dim == 0 || clusters == 0 {
        return Err(Error::InvalidInput(
            "gaussian mixture needs n, d and cluster count >= 1".into(),
        ));
    }
    if !(spread >= 0.0 && spread.is_finite()) {
        return Err(Error::InvalidInput(format!("invalid spread {spread}")));
    }
    let mut rng = seeded_rng(seed, stream::SYNTHETIC);
    let centers: Vec<Vec<f64>> = (0..clusters)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let noise = Normal::new(0.0, spread).expect("spread validated");
    let points = (0..n).map(|_| {
        let c = &centers[rng.gen_range(0..clusters)];
        c.iter().map(|&x| x + noise.sample(&mut rng)).collect::<Vec<f64>>()
    });
    Ok(enumerate_items(points.collect::<Vec<_>>()))
}

/// Random strings of length `0..=max_len` over the first `alphabet`
/// lowercase letters.
pub fn random_strings(n: usize, max_len: usize, alphabet: usize, seed: u64) -> Vec<Item<Vec<u8>>> {
    let alphabet = alphabet.clamp(1, 26) as u8;
    let mut rng = seeded_rng(seed, stream::SYNTHETIC);
    enumerate_items(
        (0..n)
            .map(|_| {
                let len = rng.gen_range(0..=max_len);
                (0..len).map(|_| b'a' + rng.gen_range(0..alphabet)).collect()
            })
            .collect::<Vec<Vec<u8>>>(),
    )
}

/// Random byte blobs of length `0..=max_len`. Bytes come from a skewed
/// distribution so that LZ parses share structure.
pub fn random_blobs(n: usize, max_len: usize, seed: u64) -> Vec<Item<Vec<u8>>> {
    let mut rng = seeded_rng(seed, stream::SYNTHETIC);
    enumerate_items(
        (0..n)
            .map(|_| {
                let len = rng.gen_range(0..=max_len);
                let width = rng.gen_range(2u16..=64);
                (0..len)
                    .map(|_| {
                        let a = rng.gen_range(0..width);
                        let b = rng.gen_range(0..width);
                        a.min(b) as u8
                    })
                    .collect()
            })
            .collect::<Vec<Vec<u8>>>(),
    )
}

pub const DEFAULT_QUERY_SAMPLE: usize = 1000;

/// Positions (into the original item list) of each part of a split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub build: Vec<usize>,
    pub insert: Vec<usize>,
    pub queries: Vec<usize>,
}

impl Split {
    pub fn take<P: Clone>(items: &[Item<P>], positions: &[usize]) -> Vec<Item<P>> {
        positions.iter().map(|&p| items[p].clone()).collect()
    }
}

/// Seeded permutation sliced into a build prefix of `⌈build·n⌉` items and
/// an insert stream of up to `⌈insert·n⌉` following items. Queries are a
/// separate seeded sample of the whole collection without replacement,
/// capped at `n`.
pub fn split_shuffle(n: usize, seed: u64, build: f64, insert: f64, queries: usize) -> Result<Split> {
    if !(0.0..=1.0).contains(&build) || !(0.0..=1.0).contains(&insert) || build + insert > 1.0 + 1e-12 {
        return Err(Error::InvalidInput(format!(
            "split fractions {build} + {insert} must be within [0, 1]"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded_rng(seed, stream::SPLIT));
    let n_build = ((build * n as f64).ceil() as usize).min(n);
    let n_insert = ((insert * n as f64).ceil() as usize).min(n - n_build);
    let insert_part = order[n_build..n_build + n_insert].to_vec();
    order.truncate(n_build);
    let q = queries.min(n);
    let queries = sample(&mut seeded_rng(seed, stream::QUERIES), n, q).into_vec();
    Ok(Split {
        build: order,
        insert: insert_part,
        queries,
    })
}
