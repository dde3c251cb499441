//! Flat storage of the strictly-upper triangle of an `n x n` symmetric matrix.
//!
//! Pair `(i, j)` with `i < j` lives at offset `i*n - i*(i+1)/2 + (j - i - 1)`;
//! rows are laid out back to back, row `i` holding `n - i - 1` entries.

/// Number of unordered pairs over `n` items.
#[inline]
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Offset of the unordered pair `{i, j}`. Panics in debug builds if `i == j`.
#[inline]
pub fn pair_offset(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i != j && i < n && j < n);
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    a * n - a * (a + 1) / 2 + (b - a - 1)
}

/// Iterates `(i, j)` with `i < j` in storage order.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

/// Splits a flat triangle into per-row mutable slices.
pub(crate) fn rows_mut<T>(n: usize, mut data: &mut [T]) -> Vec<(usize, &mut [T])> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (row, rest) = data.split_at_mut(n - i - 1);
        out.push((i, row));
        data = rest;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_follow_storage_order() {
        for n in 0..8 {
            let collected: Vec<usize> = pairs(n).map(|(i, j)| pair_offset(n, i, j)).collect();
            let expected: Vec<usize> = (0..pair_count(n)).collect();
            assert_eq!(collected, expected);
        }
    }

    #[test]
    fn offset_is_symmetric() {
        assert_eq!(pair_offset(5, 1, 3), pair_offset(5, 3, 1));
    }

    #[test]
    fn rows_cover_triangle() {
        let mut data = vec![0u8; pair_count(5)];
        let rows = rows_mut(5, &mut data);
        let lens: Vec<usize> = rows.iter().map(|(_, r)| r.len()).collect();
        assert_eq!(lens, vec![4, 3, 2, 1, 0]);
    }
}
