use std::cmp::Ordering;
use std::collections::HashSet;

use num_rational::Ratio;

use super::Metric;

/// A finite set of byte-string tokens, stored sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TokenSet {
    tokens: Vec<Box<[u8]>>,
}

impl TokenSet {
    pub fn new<I, T>(tokens: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<Box<[u8]>>,
    {
        let mut tokens: Vec<Box<[u8]>> = tokens.into_iter().map(Into::into).collect();
        tokens.sort_unstable();
        tokens.dedup();
        Self { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn contains(&self, token: &[u8]) -> bool {
        self.tokens
            .binary_search_by(|t| t.as_ref().cmp(token))
            .is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u8]> {
        self.tokens.iter().map(|t| t.as_ref())
    }

    /// Size of the intersection, by a merge over both sorted lists.
    pub fn intersection_len(&self, other: &TokenSet) -> usize {
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < self.tokens.len() && j < other.tokens.len() {
            match self.tokens[i].cmp(&other.tokens[j]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }
}

/// Dictionary-style Lempel-Ziv parse of `bytes` into a set of phrases.
///
/// The current phrase grows one byte at a time; as soon as it is not yet in
/// the set it is added and a new phrase starts. A trailing phrase that is
/// already present is dropped.
pub fn lz_set(bytes: &[u8]) -> TokenSet {
    let mut seen: HashSet<&[u8]> = HashSet::new();
    let mut start = 0;
    for end in 1..=bytes.len() {
        let phrase = &bytes[start..end];
        if seen.insert(phrase) {
            start = end;
        }
    }
    TokenSet::new(seen.into_iter().map(|p| p.to_vec().into_boxed_slice()))
}

/// `1 − |A ∩ B| / |A ∪ B|`, exactly.
///
/// Two empty sets are identical and have distance 0.
pub fn jaccard_distance(a: &TokenSet, b: &TokenSet) -> Ratio<u64> {
    let inter = a.intersection_len(b) as u64;
    let union = (a.len() + b.len()) as u64 - inter;
    if union == 0 {
        return Ratio::from_integer(0);
    }
    Ratio::new(union - inter, union)
}

/// Exact Jaccard distance over pre-parsed LZ token sets.
#[derive(Debug, Clone, Copy, Default)]
pub struct LzJaccard;

impl Metric<TokenSet> for LzJaccard {
    type Distance = Ratio<u64>;

    #[inline]
    fn distance(&self, a: &TokenSet, b: &TokenSet) -> Ratio<u64> {
        jaccard_distance(a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(tokens: &[&str]) -> TokenSet {
        TokenSet::new(tokens.iter().map(|t| t.as_bytes().to_vec().into_boxed_slice()))
    }

    #[test]
    fn empty_input_parses_to_empty_set() {
        assert!(lz_set(b"").is_empty());
    }

    #[test]
    fn hand_traced_parses() {
        assert_eq!(lz_set(b"aaaa"), set(&["a", "aa"]));
        assert_eq!(lz_set(b"ab"), set(&["a", "b"]));
        // a | b | ab | aa | ba
        assert_eq!(lz_set(b"ababaaba"), set(&["a", "b", "ab", "aa", "ba"]));
    }

    #[test]
    fn parse_is_deterministic() {
        let blob: Vec<u8> = (0..2048u32).map(|i| (i * 7919 % 251) as u8).collect();
        assert_eq!(lz_set(&blob), lz_set(&blob));
    }

    #[test]
    fn identical_sets_have_zero_distance() {
        let a = set(&["x", "y"]);
        assert_eq!(jaccard_distance(&a, &a), Ratio::from_integer(0));
    }

    #[test]
    fn disjoint_sets_have_unit_distance() {
        assert_eq!(
            jaccard_distance(&set(&["x"]), &set(&["y", "z"])),
            Ratio::from_integer(1)
        );
    }

    #[test]
    fn half_overlap() {
        let d = jaccard_distance(&set(&["a", "b", "c"]), &set(&["b", "c", "d"]));
        assert_eq!(d, Ratio::new(1, 2));
    }

    #[test]
    fn both_empty_is_zero() {
        let e = TokenSet::default();
        assert_eq!(jaccard_distance(&e, &e), Ratio::from_integer(0));
        assert_eq!(jaccard_distance(&e, &set(&["a"])), Ratio::from_integer(1));
    }
}
