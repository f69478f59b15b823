//! Binary indexed tree over positive real weights, used for O(log n)
//! weight-proportional index selection with per-step weight updates.

use rand::Rng;

/// Fenwick tree keyed by 1-based indices. Supports appending a new leaf,
/// point updates, prefix sums, and inverse-CDF selection.
#[derive(Clone, Debug)]
pub struct WeightTree {
    tree: Vec<f64>, // tree[0] unused
    len: usize,
}

#[inline]
fn lowbit(i: usize) -> usize {
    i & i.wrapping_neg()
}

impl WeightTree {
    pub fn new() -> Self {
        WeightTree { tree: vec![0.0], len: 0 }
    }

    pub fn with_capacity(cap: usize) -> Self {
        let mut tree = Vec::with_capacity(cap + 1);
        tree.push(0.0);
        WeightTree { tree, len: 0 }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Appends a new leaf with weight `w` at index `len + 1`.
    pub fn push(&mut self, w: f64) {
        let i = self.len + 1;
        // internal node i covers (i - lowbit(i), i]
        let value = w + self.prefix_sum(i - 1) - self.prefix_sum(i - lowbit(i));
        self.tree.push(value);
        self.len = i;
    }

    /// Adds `delta` to the weight at 1-based index `i`.
    pub fn add(&mut self, mut i: usize, delta: f64) {
        assert!(i >= 1 && i <= self.len, "index {i} out of range 1..={}", self.len);
        while i <= self.len {
            self.tree[i] += delta;
            i += lowbit(i);
        }
    }

    /// Sum of weights at indices `1..=i`.
    pub fn prefix_sum(&self, mut i: usize) -> f64 {
        debug_assert!(i <= self.len);
        let mut s = 0.0;
        while i > 0 {
            s += self.tree[i];
            i -= lowbit(i);
        }
        s
    }

    pub fn total(&self) -> f64 {
        self.prefix_sum(self.len)
    }

    /// Smallest index `i` with `prefix_sum(i) > target`, for
    /// `0 <= target < total()`. Clamped to `len` under float roundoff.
    pub fn select(&self, target: f64) -> usize {
        debug_assert!(self.len > 0 && target >= 0.0);
        let mut pos = 0usize;
        let mut rem = target;
        let mut bit = self.len.next_power_of_two();
        if bit > self.len {
            bit >>= 1;
        }
        while bit > 0 {
            let next = pos + bit;
            if next <= self.len && self.tree[next] <= rem {
                rem -= self.tree[next];
                pos = next;
            }
            bit >>= 1;
        }
        (pos + 1).min(self.len)
    }

    /// Draws an index with probability proportional to its weight.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = self.total();
        debug_assert!(total > 0.0, "sampling from an empty or zero-weight tree");
        self.select(rng.random::<f64>() * total)
    }
}

impl Default for WeightTree {
    fn default() -> Self {
        Self::new()
    }
}
