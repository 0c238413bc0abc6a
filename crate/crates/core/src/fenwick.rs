//! Binary indexed trees used for prefix counts and order statistics.
//!
//! Indices are 1-based inside the tree; callers pass values in `1..=len`.

use std::ops::AddAssign;

use num_traits::Zero;

/// Fenwick tree over an additive value type.
#[derive(Clone, Debug)]
pub struct Fenwick<T> {
    tree: Vec<T>,
}

impl<T> Fenwick<T>
where
    T: Clone + Zero + for<'a> AddAssign<&'a T>,
{
    pub fn new(len: usize) -> Self {
        Fenwick {
            tree: vec![T::zero(); len + 1],
        }
    }

    pub fn len(&self) -> usize {
        self.tree.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn add(&mut self, index: usize, delta: &T) {
        debug_assert!(index >= 1 && index <= self.len());
        let mut i = index;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum over `1..=index`; `prefix(0)` is zero.
    pub fn prefix(&self, index: usize) -> T {
        let mut acc = T::zero();
        let mut i = index.min(self.len());
        while i > 0 {
            acc += &self.tree[i];
            i -= i & i.wrapping_neg();
        }
        acc
    }
}

/// Multiset of available positions in `1..=len` supporting "k-th smallest
/// available" queries in `O(log len)`.
#[derive(Clone, Debug)]
pub struct OrderStatTree {
    tree: Vec<u32>,
    top_bit: usize,
    available: usize,
}

impl OrderStatTree {
    /// Tree with every position in `1..=len` available. Built in `O(len)`.
    pub fn full(len: usize) -> Self {
        let mut tree = vec![1u32; len + 1];
        tree[0] = 0;
        for i in 1..=len {
            let parent = i + (i & i.wrapping_neg());
            if parent <= len {
                let v = tree[i];
                tree[parent] += v;
            }
        }
        let top_bit = if len == 0 {
            0
        } else {
            1 << (usize::BITS - 1 - len.leading_zeros())
        };
        OrderStatTree {
            tree,
            top_bit,
            available: len,
        }
    }

    /// Tree with nothing available.
    pub fn empty(len: usize) -> Self {
        let mut t = Self::full(len);
        t.tree.iter_mut().for_each(|x| *x = 0);
        t.available = 0;
        t
    }

    pub fn len(&self) -> usize {
        self.tree.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn available(&self) -> usize {
        self.available
    }

    pub fn insert(&mut self, pos: usize) {
        let mut i = pos;
        while i < self.tree.len() {
            self.tree[i] += 1;
            i += i & i.wrapping_neg();
        }
        self.available += 1;
    }

    pub fn remove(&mut self, pos: usize) {
        let mut i = pos;
        while i < self.tree.len() {
            self.tree[i] -= 1;
            i += i & i.wrapping_neg();
        }
        self.available -= 1;
    }

    /// Number of available positions in `1..=pos`.
    pub fn rank(&self, pos: usize) -> usize {
        let mut acc = 0usize;
        let mut i = pos.min(self.len());
        while i > 0 {
            acc += self.tree[i] as usize;
            i -= i & i.wrapping_neg();
        }
        acc
    }

    /// Position of the `k`-th smallest available element (`k >= 1`), or
    /// `None` when fewer than `k` are available.
    pub fn kth(&self, k: usize) -> Option<usize> {
        if k == 0 || k > self.available {
            return None;
        }
        let mut pos = 0usize;
        let mut remaining = k;
        let mut step = self.top_bit;
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && (self.tree[next] as usize) < remaining {
                pos = next;
                remaining -= self.tree[next] as usize;
            }
            step >>= 1;
        }
        Some(pos + 1)
    }

    /// Removes and returns the `k`-th smallest available element.
    pub fn take_kth(&mut self, k: usize) -> Option<usize> {
        let pos = self.kth(k)?;
        self.remove(pos);
        Some(pos)
    }
}
