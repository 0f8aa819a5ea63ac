use super::Metric;

/// Unit-cost edit distance between two byte sequences.
///
/// Bytes are compared directly; no Unicode normalization is applied.
pub fn levenshtein(a: &[u8], b: &[u8]) -> u32 {
    if a.is_empty() {
        return b.len() as u32;
    }
    if b.is_empty() {
        return a.len() as u32;
    }
    // Single-row DP over the shorter sequence.
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let mut row: Vec<u32> = (0..=short.len() as u32).collect();
    for (i, &lc) in long.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i as u32 + 1;
        for (j, &sc) in short.iter().enumerate() {
            let above = row[j + 1];
            let cost = u32::from(lc != sc);
            row[j + 1] = (above + 1).min(row[j] + 1).min(diag + cost);
            diag = above;
        }
    }
    row[short.len()]
}

/// Levenshtein distance over byte strings.
#[derive(Debug, Clone, Copy, Default)]
pub struct Levenshtein;

impl Metric<[u8]> for Levenshtein {
    type Distance = u32;

    #[inline]
    fn distance(&self, a: &[u8], b: &[u8]) -> u32 {
        levenshtein(a, b)
    }
}

impl Metric<Vec<u8>> for Levenshtein {
    type Distance = u32;

    #[inline]
    fn distance(&self, a: &Vec<u8>, b: &Vec<u8>) -> u32 {
        levenshtein(a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Full (n+1)×(m+1) table, no space optimization.
    fn full_table(a: &[u8], b: &[u8]) -> u32 {
        let mut t = vec![vec![0u32; b.len() + 1]; a.len() + 1];
        for (i, row) in t.iter_mut().enumerate() {
            row[0] = i as u32;
        }
        for j in 0..=b.len() {
            t[0][j] = j as u32;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let sub = t[i - 1][j - 1] + u32::from(a[i - 1] != b[j - 1]);
                t[i][j] = sub.min(t[i - 1][j] + 1).min(t[i][j - 1] + 1);
            }
        }
        t[a.len()][b.len()]
    }

    #[test]
    fn pure_insertions() {
        assert_eq!(levenshtein(b"", b"abc"), 3);
        assert_eq!(levenshtein(b"abc", b""), 3);
    }

    #[test]
    fn kitten_sitting() {
        assert_eq!(full_table(b"kitten", b"sitting"), 3);
        assert_eq!(levenshtein(b"kitten", b"sitting"), 3);
    }

    #[test]
    fn identity() {
        assert_eq!(levenshtein(b"casablanca", b"casablanca"), 0);
    }

    #[test]
    fn bytewise_not_unicode_aware() {
        // "é" is two bytes in UTF-8; replacing it with "e" costs two edits.
        assert_eq!(levenshtein("é".as_bytes(), b"e"), 2);
    }

    #[test]
    fn agrees_with_full_table() {
        let words: [&[u8]; 6] = [b"", b"a", b"flaw", b"lawn", b"intention", b"execution"];
        for a in words {
            for b in words {
                assert_eq!(levenshtein(a, b), full_table(a, b));
            }
        }
    }
}
