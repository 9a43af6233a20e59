//! Bounded FIFO multiset of conformity scores with logarithmic rank queries.
//!
//! Scores live twice: once in a ring (insertion order, for eviction) and once
//! in a size-augmented treap keyed by `(score, sequence number)`, which gives
//! `O(log W)` expected insert, evict, rank and select.

use std::cmp::Ordering;
use std::collections::VecDeque;

use crate::error::{invalid, Error, Result};

const NIL: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Node {
    key: f64,
    seq: u64,
    prio: u64,
    left: u32,
    right: u32,
    size: u32,
}

/// Arena-backed treap ordered by `(key, seq)`.
#[derive(Debug, Clone, Default)]
struct OrderTree {
    nodes: Vec<Node>,
    free: Vec<u32>,
    root: u32,
    prio_state: u64,
}

#[inline]
fn cmp_key(a: f64, a_seq: u64, b: f64, b_seq: u64) -> Ordering {
    // Keys are never NaN (rejected on push).
    match a.partial_cmp(&b).unwrap_or(Ordering::Equal) {
        Ordering::Equal => a_seq.cmp(&b_seq),
        o => o,
    }
}

impl OrderTree {
    fn new() -> Self {
        Self {
            nodes: Vec::new(),
            free: Vec::new(),
            root: NIL,
            prio_state: 0x9E37_79B9_7F4A_7C15,
        }
    }

    fn next_prio(&mut self) -> u64 {
        // splitmix64
        self.prio_state = self.prio_state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.prio_state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    #[inline]
    fn size(&self, n: u32) -> u32 {
        if n == NIL {
            0
        } else {
            self.nodes[n as usize].size
        }
    }

    #[inline]
    fn update(&mut self, n: u32) {
        let (l, r) = {
            let node = &self.nodes[n as usize];
            (node.left, node.right)
        };
        let s = 1 + self.size(l) + self.size(r);
        self.nodes[n as usize].size = s;
    }

    #[cfg(test)]
    fn len(&self) -> usize {
        self.size(self.root) as usize
    }

    /// Splits `t` into keys `< (key, seq)` and `>= (key, seq)`.
    fn split(&mut self, t: u32, key: f64, seq: u64) -> (u32, u32) {
        if t == NIL {
            return (NIL, NIL);
        }
        let (tk, ts) = {
            let n = &self.nodes[t as usize];
            (n.key, n.seq)
        };
        if cmp_key(tk, ts, key, seq) == Ordering::Less {
            let right = self.nodes[t as usize].right;
            let (a, b) = self.split(right, key, seq);
            self.nodes[t as usize].right = a;
            self.update(t);
            (t, b)
        } else {
            let left = self.nodes[t as usize].left;
            let (a, b) = self.split(left, key, seq);
            self.nodes[t as usize].left = b;
            self.update(t);
            (a, t)
        }
    }

    fn merge(&mut self, a: u32, b: u32) -> u32 {
        if a == NIL {
            return b;
        }
        if b == NIL {
            return a;
        }
        if self.nodes[a as usize].prio > self.nodes[b as usize].prio {
            let ar = self.nodes[a as usize].right;
            let m = self.merge(ar, b);
            self.nodes[a as usize].right = m;
            self.update(a);
            a
        } else {
            let bl = self.nodes[b as usize].left;
            let m = self.merge(a, bl);
            self.nodes[b as usize].left = m;
            self.update(b);
            b
        }
    }

    fn insert(&mut self, key: f64, seq: u64) {
        let prio = self.next_prio();
        let node = Node {
            key,
            seq,
            prio,
            left: NIL,
            right: NIL,
            size: 1,
        };
        let idx = match self.free.pop() {
            Some(i) => {
                self.nodes[i as usize] = node;
                i
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as u32
            }
        };
        let (l, r) = self.split(self.root, key, seq);
        let m = self.merge(l, idx);
        self.root = self.merge(m, r);
    }

    fn remove(&mut self, key: f64, seq: u64) -> bool {
        let (l, r) = self.split(self.root, key, seq);
        // r's minimum is (key, seq) when present.
        let (mid, rest) = self.split(r, key, seq.wrapping_add(1));
        let found = mid != NIL;
        if found {
            debug_assert_eq!(self.size(mid), 1);
            self.free.push(mid);
        }
        self.root = self.merge(l, rest);
        found
    }

    /// Number of keys strictly below `x`.
    fn count_less(&self, x: f64) -> usize {
        let mut n = self.root;
        let mut acc = 0u32;
        while n != NIL {
            let node = &self.nodes[n as usize];
            if node.key < x {
                acc += 1 + self.size(node.left);
                n = node.right;
            } else {
                n = node.left;
            }
        }
        acc as usize
    }

    /// Number of keys `<= x`.
    fn count_less_eq(&self, x: f64) -> usize {
        let mut n = self.root;
        let mut acc = 0u32;
        while n != NIL {
            let node = &self.nodes[n as usize];
            if node.key <= x {
                acc += 1 + self.size(node.left);
                n = node.right;
            } else {
                n = node.left;
            }
        }
        acc as usize
    }

    /// `k`-th smallest key, 0-indexed.
    fn select(&self, mut k: usize) -> Option<f64> {
        let mut n = self.root;
        while n != NIL {
            let node = &self.nodes[n as usize];
            let ls = self.size(node.left) as usize;
            match k.cmp(&ls) {
                Ordering::Less => n = node.left,
                Ordering::Equal => return Some(node.key),
                Ordering::Greater => {
                    k -= ls + 1;
                    n = node.right;
                }
            }
        }
        None
    }

    fn collect_sorted(&self, n: u32, out: &mut Vec<f64>) {
        if n == NIL {
            return;
        }
        let node = &self.nodes[n as usize];
        self.collect_sorted(node.left, out);
        out.push(node.key);
        self.collect_sorted(node.right, out);
    }
}

/// Rolling window of the `capacity` most recent conformity scores.
#[derive(Debug, Clone)]
pub struct ScoreWindow {
    capacity: usize,
    fifo: VecDeque<(f64, u64)>,
    tree: OrderTree,
    next_seq: u64,
}

impl ScoreWindow {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(invalid("score window capacity must be positive"));
        }
        Ok(Self {
            capacity,
            fifo: VecDeque::with_capacity(capacity),
            tree: OrderTree::new(),
            next_seq: 0,
        })
    }

    /// Builds a window holding the last `capacity` items of `scores`.
    pub fn from_scores<I: IntoIterator<Item = f64>>(capacity: usize, scores: I) -> Result<Self> {
        let mut w = Self::new(capacity)?;
        for s in scores {
            w.push(s)?;
        }
        Ok(w)
    }

    /// Inserts a score, evicting and returning the oldest one when full.
    pub fn push(&mut self, score: f64) -> Result<Option<f64>> {
        if score.is_nan() {
            return Err(invalid("score is NaN"));
        }
        let evicted = if self.fifo.len() == self.capacity {
            let (old, seq) = self.fifo.pop_front().expect("full window is non-empty");
            let removed = self.tree.remove(old, seq);
            debug_assert!(removed);
            Some(old)
        } else {
            None
        };
        let seq = self.next_seq;
        self.next_seq += 1;
        self.fifo.push_back((score, seq));
        self.tree.insert(score, seq);
        Ok(evicted)
    }

    pub fn clear(&mut self) {
        self.fifo.clear();
        self.tree = OrderTree::new();
    }

    pub fn len(&self) -> usize {
        self.fifo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fifo.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.fifo.len() == self.capacity
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn count_less(&self, x: f64) -> usize {
        self.tree.count_less(x)
    }

    pub fn count_less_eq(&self, x: f64) -> usize {
        self.tree.count_less_eq(x)
    }

    /// Number of stored scores `>= x`.
    pub fn count_at_least(&self, x: f64) -> usize {
        self.len() - self.tree.count_less(x)
    }

    /// `rank`-th order statistic, 1-indexed.
    pub fn order_statistic(&self, rank: usize) -> Result<f64> {
        if rank == 0 || rank > self.len() {
            return Err(if self.is_empty() {
                Error::EmptyWindow
            } else {
                invalid(format!("rank {rank} outside 1..={}", self.len()))
            });
        }
        Ok(self.tree.select(rank - 1).expect("rank checked"))
    }

    /// Scores in insertion order, oldest first.
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.fifo.iter().map(|&(s, _)| s)
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        self.tree.collect_sorted(self.tree.root, &mut out);
        out
    }

    #[cfg(test)]
    pub(crate) fn tree_len(&self) -> usize {
        self.tree.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_capacity_rejected() {
        assert!(ScoreWindow::new(0).is_err());
    }

    #[test]
    fn nan_rejected() {
        let mut w = ScoreWindow::new(3).unwrap();
        assert!(w.push(f64::NAN).is_err());
        assert!(w.is_empty());
    }

    #[test]
    fn fifo_eviction() {
        let mut w = ScoreWindow::new(3).unwrap();
        assert_eq!(w.push(5.0).unwrap(), None);
        assert_eq!(w.push(1.0).unwrap(), None);
        assert_eq!(w.push(3.0).unwrap(), None);
        assert_eq!(w.push(2.0).unwrap(), Some(5.0));
        assert_eq!(w.push(2.0).unwrap(), Some(1.0));
        assert_eq!(w.iter().collect::<Vec<_>>(), vec![3.0, 2.0, 2.0]);
        assert_eq!(w.sorted(), vec![2.0, 2.0, 3.0]);
    }

    #[test]
    fn ties_are_distinct_entries() {
        let w = ScoreWindow::from_scores(10, [2.0, 2.0, 2.0, 1.0]).unwrap();
        assert_eq!(w.count_less(2.0), 1);
        assert_eq!(w.count_less_eq(2.0), 4);
        assert_eq!(w.count_at_least(2.0), 3);
        assert_eq!(w.order_statistic(1).unwrap(), 1.0);
        assert_eq!(w.order_statistic(4).unwrap(), 2.0);
        assert!(w.order_statistic(5).is_err());
    }

    proptest! {
        #[test]
        fn agrees_with_sorted_copy(
            cap in 1usize..40,
            ops in prop::collection::vec(-50i32..50, 0..300),
            probe in -60i32..60,
        ) {
            let mut w = ScoreWindow::new(cap).unwrap();
            let mut reference: VecDeque<f64> = VecDeque::new();
            for v in ops {
                let x = v as f64 * 0.5;
                let ev = w.push(x).unwrap();
                reference.push_back(x);
                let expected_ev = if reference.len() > cap { reference.pop_front() } else { None };
                prop_assert_eq!(ev, expected_ev);
                prop_assert!(w.len() <= cap);
                prop_assert_eq!(w.tree_len(), w.len());
            }
            let mut sorted: Vec<f64> = reference.iter().copied().collect();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            prop_assert_eq!(w.sorted(), sorted.clone());
            let p = probe as f64 * 0.5;
            prop_assert_eq!(w.count_less(p), sorted.iter().filter(|&&s| s < p).count());
            prop_assert_eq!(w.count_less_eq(p), sorted.iter().filter(|&&s| s <= p).count());
            for (i, s) in sorted.iter().enumerate() {
                prop_assert_eq!(w.order_statistic(i + 1).unwrap(), *s);
            }
        }
    }
}
