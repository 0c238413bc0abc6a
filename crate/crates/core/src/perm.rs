//! Permutations in one-line notation, inversion-count bijections, patterns,
//! direct sums and block decompositions.
//!
//! All externally visible positions and values are 1-based.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fenwick::{Fenwick, OrderStatTree};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PermError {
    #[error("not a permutation: {0}")]
    NotAPermutation(String),
    #[error("{side} inversion count {value} at position {position} exceeds its maximum {max}")]
    RangeViolation {
        side: Side,
        position: usize,
        value: usize,
        max: usize,
    },
    #[error("index {index} out of range for a permutation of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("index set must be nonempty and strictly increasing")]
    BadIndexSet,
    #[error("cannot parse {0:?}")]
    Parse(String),
}

/// Which inversion-count sequence: `Left` counts larger values before a
/// position, `Right` counts smaller values after it.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Left => f.write_str("left"),
            Side::Right => f.write_str("right"),
        }
    }
}

impl FromStr for Side {
    type Err = PermError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "left" | "l" => Ok(Side::Left),
            "right" | "r" => Ok(Side::Right),
            _ => Err(PermError::Parse(s.to_string())),
        }
    }
}

/// A permutation of `[n]`, `n >= 1`, stored in one-line notation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    values: Vec<usize>,
}

impl Permutation {
    pub fn from_one_line(values: Vec<usize>) -> Result<Self, PermError> {
        let n = values.len();
        if n == 0 {
            return Err(PermError::NotAPermutation("empty sequence".into()));
        }
        let mut seen = vec![false; n + 1];
        for &v in &values {
            if v == 0 || v > n {
                return Err(PermError::NotAPermutation(format!(
                    "value {v} outside 1..={n}"
                )));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(PermError::NotAPermutation(format!("duplicate value {v}")));
            }
        }
        Ok(Permutation { values })
    }

    /// Caller guarantees `values` is a bijection of `[n]`.
    pub(crate) fn from_values_unchecked(values: Vec<usize>) -> Self {
        debug_assert!(Self::from_one_line(values.clone()).is_ok());
        Permutation { values }
    }

    pub fn identity(n: usize) -> Self {
        assert!(n >= 1, "permutations have size >= 1");
        Permutation {
            values: (1..=n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn into_values(self) -> Vec<usize> {
        self.values
    }

    /// Value at 1-based position `i`.
    pub fn at(&self, i: usize) -> usize {
        self.values[i - 1]
    }

    pub fn is_identity(&self) -> bool {
        self.values.iter().enumerate().all(|(i, &v)| v == i + 1)
    }

    /// Compact label: digits concatenated when every value is a single
    /// digit (`231`), comma-separated otherwise.
    pub fn label(&self) -> String {
        if self.len() <= 9 {
            self.values.iter().map(|v| v.to_string()).collect()
        } else {
            self.to_string()
        }
    }

    pub fn inversion_counts(&self, side: Side) -> InversionCounts {
        let n = self.len();
        let mut fw = Fenwick::<u32>::new(n);
        let mut counts = vec![0usize; n];
        match side {
            Side::Right => {
                for i in (0..n).rev() {
                    let v = self.values[i];
                    counts[i] = fw.prefix(v - 1) as usize;
                    fw.add(v, &1);
                }
            }
            Side::Left => {
                for (i, (&v, c)) in self.values.iter().zip(counts.iter_mut()).enumerate() {
                    *c = i - fw.prefix(v) as usize;
                    fw.add(v, &1);
                }
            }
        }
        InversionCounts { side, counts }
    }

    /// Quadratic reference for [`Permutation::inversion_counts`].
    pub fn inversion_counts_quadratic(&self, side: Side) -> InversionCounts {
        let v = &self.values;
        let n = v.len();
        let counts = (0..n)
            .map(|i| match side {
                Side::Left => (0..i).filter(|&j| v[j] > v[i]).count(),
                Side::Right => (i + 1..n).filter(|&j| v[j] < v[i]).count(),
            })
            .collect();
        InversionCounts { side, counts }
    }

    /// Number of inversions.
    pub fn inv(&self) -> u64 {
        let n = self.len();
        let mut fw = Fenwick::<u32>::new(n);
        let mut total = 0u64;
        for (i, &v) in self.values.iter().enumerate() {
            total += (i - fw.prefix(v) as usize) as u64;
            fw.add(v, &1);
        }
        total
    }

    pub fn reverse(&self) -> Permutation {
        let mut values = self.values.clone();
        values.reverse();
        Permutation { values }
    }

    /// The pattern induced on the 1-based, strictly increasing index set.
    pub fn pattern_at(&self, indices: &[usize]) -> Result<Permutation, PermError> {
        if indices.is_empty() || indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PermError::BadIndexSet);
        }
        let n = self.len();
        if let Some(&bad) = indices.iter().find(|&&i| i == 0 || i > n) {
            return Err(PermError::IndexOutOfRange { index: bad, size: n });
        }
        let picked: Vec<usize> = indices.iter().map(|&i| self.values[i - 1]).collect();
        Ok(rank_reduce(&picked))
    }

    pub fn direct_sum(parts: &[Permutation]) -> Permutation {
        assert!(!parts.is_empty(), "direct sum of an empty list");
        let total: usize = parts.iter().map(Permutation::len).sum();
        let mut values = Vec::with_capacity(total);
        let mut shift = 0;
        for p in parts {
            values.extend(p.values.iter().map(|&v| v + shift));
            shift += p.len();
        }
        Permutation { values }
    }

    pub fn block_decomposition(&self) -> BlockDecomposition {
        let right = self.inversion_counts(Side::Right);
        let mut tracker = BoundaryTracker::new();
        let mut offsets = vec![0];
        for &r in &right.counts {
            if tracker.push(r) {
                offsets.push(tracker.position());
            }
        }
        debug_assert_eq!(*offsets.last().unwrap(), self.len());
        let blocks = offsets
            .windows(2)
            .map(|w| {
                let shift = w[0];
                Permutation {
                    values: self.values[w[0]..w[1]].iter().map(|&v| v - shift).collect(),
                }
            })
            .collect();
        BlockDecomposition { blocks, offsets }
    }

    pub fn is_indecomposable(&self) -> bool {
        let mut running_max = 0;
        for (k, &v) in self.values.iter().enumerate().take(self.len() - 1) {
            running_max = running_max.max(v);
            if running_max == k + 1 {
                return false;
            }
        }
        true
    }

    pub fn from_right_inversions(counts: &InversionCounts) -> Result<Permutation, PermError> {
        counts.check_range()?;
        if counts.side != Side::Right {
            return Err(PermError::Parse("expected right inversion counts".into()));
        }
        let n = counts.len();
        let mut avail = OrderStatTree::full(n);
        let values = counts
            .counts
            .iter()
            .map(|&r| avail.take_kth(r + 1).expect("range checked"))
            .collect();
        Ok(Permutation { values })
    }

    pub fn from_left_inversions(counts: &InversionCounts) -> Result<Permutation, PermError> {
        counts.check_range()?;
        if counts.side != Side::Left {
            return Err(PermError::Parse("expected left inversion counts".into()));
        }
        let n = counts.len();
        let mut avail = OrderStatTree::full(n);
        let mut values = vec![0; n];
        // Right to left: position i takes the (l_i + 1)-st largest unused value.
        for i in (0..n).rev() {
            let remaining = avail.available();
            values[i] = avail
                .take_kth(remaining - counts.counts[i])
                .expect("range checked");
        }
        Ok(Permutation { values })
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Accepts `2,4,1,3`, `2 4 1 3`, or the compact `2413` (single digits only).
impl FromStr for Permutation {
    type Err = PermError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let values: Result<Vec<usize>, _> = if s.contains(',') || s.contains(char::is_whitespace) {
            s.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<usize>())
                .collect()
        } else {
            s.chars()
                .map(|c| c.to_digit(10).map(|d| d as usize).ok_or(()))
                .collect::<Result<Vec<_>, ()>>()
                .map_err(|_| "x".parse::<usize>().unwrap_err())
        };
        let values = values.map_err(|_| PermError::Parse(s.to_string()))?;
        Permutation::from_one_line(values)
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = PermError;

    fn try_from(values: Vec<usize>) -> Result<Self, Self::Error> {
        Permutation::from_one_line(values)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.values
    }
}

/// A left or right inversion-count sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InversionCounts {
    pub side: Side,
    pub counts: Vec<usize>,
}

impl InversionCounts {
    /// Validates the range constraint of the given side.
    pub fn new(side: Side, counts: Vec<usize>) -> Result<Self, PermError> {
        let c = InversionCounts { side, counts };
        c.check_range()?;
        Ok(c)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    fn check_range(&self) -> Result<(), PermError> {
        let n = self.counts.len();
        if n == 0 {
            return Err(PermError::NotAPermutation("empty inversion counts".into()));
        }
        for (i, &c) in self.counts.iter().enumerate() {
            let max = match self.side {
                Side::Left => i,
                Side::Right => n - 1 - i,
            };
            if c > max {
                return Err(PermError::RangeViolation {
                    side: self.side,
                    position: i + 1,
                    value: c,
                    max,
                });
            }
        }
        Ok(())
    }
}

/// Serialized as `right:1,0,0` or `left:0,1,2`.
impl fmt::Display for InversionCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.side)?;
        for (i, c) in self.counts.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for InversionCounts {
    type Err = PermError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (side, rest) = s
            .split_once(':')
            .ok_or_else(|| PermError::Parse(s.to_string()))?;
        let side: Side = side.parse()?;
        let counts = rest
            .split(',')
            .map(|t| t.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| PermError::Parse(s.to_string()))?;
        InversionCounts::new(side, counts)
    }
}

/// Indecomposable factors of a permutation and their boundaries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockDecomposition {
    pub blocks: Vec<Permutation>,
    /// `offsets[k]` is the number of positions before block `k`; the last
    /// entry is the total size.
    pub offsets: Vec<usize>,
}

impl BlockDecomposition {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn reassemble(&self) -> Permutation {
        Permutation::direct_sum(&self.blocks)
    }
}

/// Streaming block-boundary detector over right-inversion counts.
///
/// A boundary sits after position `m` iff `max_{i <= m} (i + r_i) == m`.
#[derive(Clone, Debug, Default)]
pub struct BoundaryTracker {
    position: usize,
    reach: usize,
}

impl BoundaryTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Feeds the next count; returns true when it closes a block.
    pub fn push(&mut self, r: usize) -> bool {
        self.position += 1;
        self.reach = self.reach.max(self.position + r);
        self.reach == self.position
    }

    pub fn position(&self) -> usize {
        self.position
    }

    /// Furthest position the current open block is known to extend to.
    pub fn reach(&self) -> usize {
        self.reach
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

/// Rank-reduces distinct positive integers to a permutation of `[len]`.
pub fn rank_reduce(values: &[usize]) -> Permutation {
    let n = values.len();
    let max = values.iter().copied().max().unwrap_or(0);
    let out = if max <= 4 * n + 64 {
        let mut rank = vec![0usize; max + 1];
        for &v in values {
            rank[v] = 1;
        }
        let mut acc = 0;
        for r in rank.iter_mut() {
            acc += *r;
            *r = acc;
        }
        values.iter().map(|&v| rank[v]).collect()
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_unstable_by_key(|&i| values[i]);
        let mut out = vec![0; n];
        for (rank, &i) in order.iter().enumerate() {
            out[i] = rank + 1;
        }
        out
    };
    Permutation::from_values_unchecked(out)
}

/// First `n` values of the infinite permutation of the positive integers
/// whose right-inversion counts begin with `counts`.
///
/// Each value is the `(r_k + 1)`-st smallest positive integer not yet used,
/// so `Σ(k) <= k + r_k`.
pub fn prefix_values_from_right_inversions(counts: &[usize]) -> Vec<usize> {
    let universe = counts
        .iter()
        .enumerate()
        .map(|(i, &r)| i + 1 + r)
        .max()
        .unwrap_or(0);
    let mut avail = OrderStatTree::full(universe);
    counts
        .iter()
        .map(|&r| avail.take_kth(r + 1).expect("universe covers k + r_k"))
        .collect()
}

/// All permutations of `[n]` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Permutation> {
    assert!(n >= 1);
    let mut cur: Vec<usize> = (1..=n).collect();
    let mut out = vec![Permutation::from_values_unchecked(cur.clone())];
    loop {
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            return out;
        };
        let j = (i + 1..n).rev().find(|&j| cur[j] > cur[i]).expect("successor exists");
        cur.swap(i, j);
        cur[i + 1..].reverse();
        out.push(Permutation::from_values_unchecked(cur.clone()));
    }
}
