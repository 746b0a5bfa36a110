//! Rank transforms with average ranks for ties.

use std::cmp::Ordering;

use crate::scalar::Scalar;

fn order<T: Scalar>(values: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
    idx
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks<T: Scalar>(values: &[T]) -> Vec<T> {
    let idx = order(values);
    let mut ranks = vec![T::zero(); values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let avg = T::from_usize_lossy(start + 1 + end) / T::lit(2.0);
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Dense tie-group keys: equal values share a key and keys follow value order.
/// Returns the keys and the number of distinct values.
pub fn dense_keys<T: Scalar>(values: &[T]) -> (Vec<u32>, usize) {
    let idx = order(values);
    let mut keys = vec![0u32; values.len()];
    let mut next = 0u32;
    for (pos, &i) in idx.iter().enumerate() {
        if pos > 0 && values[i] != values[idx[pos - 1]] {
            next += 1;
        }
        keys[i] = next;
    }
    let distinct = if values.is_empty() { 0 } else { next as usize + 1 };
    (keys, distinct)
}

/// Average ranks from per-key multiplicities: writes, for each key, the mean
/// rank its members take when `counts[k]` items carry key `k`.
pub(crate) fn ranks_from_counts<T: Scalar>(counts: &[u32], out: &mut Vec<T>) {
    out.clear();
    out.reserve(counts.len());
    let mut before = 0u64;
    let half = T::lit(0.5);
    for &c in counts {
        // ranks before+1 ..= before+c
        let avg = T::from_u64(2 * before + c as u64 + 1).expect("fits") * half;
        out.push(avg);
        before += c as u64;
    }
}
