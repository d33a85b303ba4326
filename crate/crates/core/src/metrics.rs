//! Partition agreement scores and set distances.
//!
//! Labels are opaque integers; nothing requires them to be contiguous.

use std::collections::HashMap;

use crate::error::{invalid, Error, Result};
use crate::geometry::sq_dist;

/// Co-occurrence counts between two labelings of the same items.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    /// Row-major `rows x cols` counts.
    pub counts: Vec<u64>,
    pub rows: usize,
    pub cols: usize,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub total: u64,
}

fn index_labels<T: Copy + Eq + std::hash::Hash>(labels: &[T]) -> (Vec<usize>, usize) {
    let mut ids: HashMap<T, usize> = HashMap::new();
    let idx = labels
        .iter()
        .map(|l| {
            let next = ids.len();
            *ids.entry(*l).or_insert(next)
        })
        .collect();
    (idx, ids.len())
}

impl ContingencyTable {
    pub fn new<A, B>(a: &[A], b: &[B]) -> Result<Self>
    where
        A: Copy + Eq + std::hash::Hash,
        B: Copy + Eq + std::hash::Hash,
    {
        if a.len() != b.len() {
            return Err(Error::LengthMismatch {
                expected: a.len(),
                got: b.len(),
            });
        }
        if a.len() < 2 {
            return Err(invalid("labels", "need at least two labelled items"));
        }
        let (ia, rows) = index_labels(a);
        let (ib, cols) = index_labels(b);
        let mut counts = vec![0u64; rows * cols];
        let mut row_sums = vec![0u64; rows];
        let mut col_sums = vec![0u64; cols];
        for (&r, &c) in ia.iter().zip(&ib) {
            counts[r * cols + c] += 1;
            row_sums[r] += 1;
            col_sums[c] += 1;
        }
        Ok(Self {
            counts,
            rows,
            cols,
            row_sums,
            col_sums,
            total: a.len() as u64,
        })
    }

    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.counts[r * self.cols + c]
    }

    /// Both labelings induce the same partition.
    pub fn is_identity(&self) -> bool {
        self.rows == self.cols && (0..self.rows).all(|r| (0..self.cols).filter(|&c| self.get(r, c) > 0).count() == 1)
    }

    fn nonzero(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            (0..self.cols).filter_map(move |c| {
                let v = self.get(r, c);
                (v > 0).then_some((r, c, v))
            })
        })
    }
}

fn comb2(n: u64) -> f64 {
    (n as f64) * (n as f64 - 1.0) / 2.0
}

/// Adjusted Rand Index.
pub fn adjusted_rand_index<A, B>(a: &[A], b: &[B]) -> Result<f64>
where
    A: Copy + Eq + std::hash::Hash,
    B: Copy + Eq + std::hash::Hash,
{
    let t = ContingencyTable::new(a, b)?;
    let index: f64 = t.nonzero().map(|(_, _, v)| comb2(v)).sum();
    let sum_a: f64 = t.row_sums.iter().map(|&v| comb2(v)).sum();
    let sum_b: f64 = t.col_sums.iter().map(|&v| comb2(v)).sum();
    let expected = sum_a * sum_b / comb2(t.total);
    let max = 0.5 * (sum_a + sum_b);
    let denom = max - expected;
    if denom == 0.0 {
        return Ok(if t.is_identity() { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / denom)
}

fn entropy(sums: &[u64], n: f64) -> f64 {
    sums.iter()
        .filter(|&&v| v > 0)
        .map(|&v| {
            let p = v as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information in nats.
pub fn mutual_info(t: &ContingencyTable) -> f64 {
    let n = t.total as f64;
    t.nonzero()
        .map(|(r, c, v)| {
            let v = v as f64;
            v / n * (n * v / (t.row_sums[r] as f64 * t.col_sums[c] as f64)).ln()
        })
        .sum()
}

fn ln_factorial(k: u64) -> f64 {
    libm::lgamma(k as f64 + 1.0)
}

/// Expected mutual information under the hypergeometric model of random
/// labelings with the table's marginals.
pub fn expected_mutual_info(t: &ContingencyTable) -> f64 {
    let n = t.total;
    let nf = n as f64;
    let ln_n_fact = ln_factorial(n);
    let mut emi = 0.0;
    for &a in &t.row_sums {
        for &b in &t.col_sums {
            let lo = (a + b).saturating_sub(n).max(1);
            let hi = a.min(b);
            let fixed = ln_factorial(a) + ln_factorial(b) + ln_factorial(n - a) + ln_factorial(n - b) - ln_n_fact;
            for nij in lo..=hi {
                let v = nij as f64;
                let term = v / nf * (nf * v / (a as f64 * b as f64)).ln();
                let ln_p = fixed
                    - ln_factorial(nij)
                    - ln_factorial(a - nij)
                    - ln_factorial(b - nij)
                    - ln_factorial(n + nij - a - b);
                emi += term * ln_p.exp();
            }
        }
    }
    emi
}

/// Adjusted Mutual Information with the arithmetic-mean normaliser.
pub fn adjusted_mutual_info<A, B>(a: &[A], b: &[B]) -> Result<f64>
where
    A: Copy + Eq + std::hash::Hash,
    B: Copy + Eq + std::hash::Hash,
{
    let t = ContingencyTable::new(a, b)?;
    if t.rows == 1 && t.cols == 1 {
        return Ok(1.0);
    }
    let n = t.total as f64;
    let mi = mutual_info(&t);
    let emi = expected_mutual_info(&t);
    let normalizer = 0.5 * (entropy(&t.row_sums, n) + entropy(&t.col_sums, n));
    let denom = normalizer - emi;
    if denom.abs() < 1e-15 {
        return Ok(if t.is_identity() { 1.0 } else { 0.0 });
    }
    Ok((mi - emi) / denom)
}

/// Symmetric Hausdorff distance between two non-empty point sets.
pub fn hausdorff_distance<P: AsRef<[f64]>, Q: AsRef<[f64]>>(a: &[P], b: &[Q]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("points", "Hausdorff distance needs non-empty sets"));
    }
    let dim = a[0].as_ref().len();
    if let Some(p) = a
        .iter()
        .map(AsRef::as_ref)
        .chain(b.iter().map(AsRef::as_ref))
        .find(|p| p.len() != dim)
    {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: p.len(),
        });
    }
    Ok(directed_sq(a, b).max(directed_sq(b, a)).sqrt())
}

/// Largest squared distance from a point of `from` to its nearest point in `to`.
fn directed_sq<P: AsRef<[f64]>, Q: AsRef<[f64]>>(from: &[P], to: &[Q]) -> f64 {
    from.iter()
        .map(|x| {
            to.iter()
                .map(|y| sq_dist(x.as_ref(), y.as_ref()))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_partitions_score_one() {
        let a = [0, 0, 1, 1, 2, 2, 2];
        assert_eq!(adjusted_rand_index(&a, &a).unwrap(), 1.0);
        assert!((adjusted_mutual_info(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn permuted_labels_score_one() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
        let a = [3, 3, 9, 9, 1];
        let b = [7, 7, 2, 2, 5];
        assert!((adjusted_mutual_info(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn crossed_partition_matches_pair_counts() {
        // 6 pairs: together in a: {01, 23}; in b: {02, 13}; in both: none
        // index 0, expected 2*2/6, max 2
        let expected = (0.0 - 4.0 / 6.0) / (2.0 - 4.0 / 6.0);
        let got = adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got + 0.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_cases() {
        assert_eq!(adjusted_rand_index(&[0, 0, 0], &[5, 5, 5]).unwrap(), 1.0);
        assert_eq!(adjusted_rand_index(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        assert_eq!(adjusted_rand_index(&[0, 0, 0], &[0, 1, 2]).unwrap(), 0.0);
        assert_eq!(adjusted_mutual_info(&[4, 4, 4], &[1, 1, 1]).unwrap(), 1.0);
        assert!(matches!(
            adjusted_rand_index(&[0, 1], &[0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(adjusted_mutual_info(&[0], &[0]).is_err());
    }

    #[test]
    fn contingency_marginals() {
        let t = ContingencyTable::new(&[0, 0, 1, 2, 2, 2], &[1, 1, 1, 0, 0, 1]).unwrap();
        assert_eq!(t.total, 6);
        assert_eq!(t.row_sums.iter().sum::<u64>(), 6);
        assert_eq!(t.col_sums.iter().sum::<u64>(), 6);
        assert_eq!(t.counts.iter().sum::<u64>(), 6);
        for r in 0..t.rows {
            assert_eq!((0..t.cols).map(|c| t.get(r, c)).sum::<u64>(), t.row_sums[r]);
        }
    }

    #[test]
    fn hausdorff_basics() {
        let a = [[0.0], [1.0]];
        assert_eq!(hausdorff_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(hausdorff_distance(&[[0.0]], &[[3.0]]).unwrap(), 3.0);
        assert_eq!(hausdorff_distance(&[[0.0], [10.0]], &[[0.0]]).unwrap(), 10.0);
        assert!(hausdorff_distance::<[f64; 1], [f64; 1]>(&[], &[[1.0]]).is_err());
        assert!(hausdorff_distance(&[vec![0.0]], &[vec![0.0, 1.0]]).is_err());
    }
}
