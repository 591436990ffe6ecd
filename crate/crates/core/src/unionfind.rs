//! Synchronization-free disjoint sets over a flat parent array.
//!
//! Every slot is an atomic index. `find` performs intermediate pointer
//! jumping (each visited node is redirected to its grandparent) and `union`
//! hooks the higher-indexed root under the lower-indexed one with a single
//! compare-exchange, retrying from fresh roots when it loses a race. As a
//! result the root of any set built only through `union` is its smallest
//! member, independent of thread schedule.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

#[derive(Debug)]
pub struct Labels {
    parent: Vec<AtomicUsize>,
}

impl Labels {
    /// `n` singleton sets, `parent[i] == i`.
    pub fn make_sets(n: usize) -> Self {
        Self {
            parent: (0..n).map(AtomicUsize::new).collect(),
        }
    }

    /// Wraps an explicit parent array. Every entry must lie in `[0, n)`
    /// and the parent graph must be a forest.
    pub fn from_parents(parents: Vec<usize>) -> Self {
        let n = parents.len();
        assert!(parents.iter().all(|&p| p < n), "parent index out of range");
        Self {
            parent: parents.into_iter().map(AtomicUsize::new).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    #[inline]
    pub fn parent(&self, i: usize) -> usize {
        self.parent[i].load(Ordering::Acquire)
    }

    /// Current root of `i`, halving the path on the way up.
    #[inline]
    pub fn find(&self, i: usize) -> usize {
        let mut prev = i;
        let mut curr = self.parent(i);
        if curr == prev {
            return curr;
        }
        loop {
            let next = self.parent(curr);
            if next == curr {
                return curr;
            }
            // `next` is an ancestor of `prev`, so this only shortens the path.
            self.parent[prev].store(next, Ordering::Release);
            prev = curr;
            curr = next;
        }
    }

    /// Merges the sets of `i` and `j`; the lower-indexed root survives.
    pub fn union(&self, i: usize, j: usize) {
        let mut a = self.find(i);
        let mut b = self.find(j);
        loop {
            if a == b {
                return;
            }
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            match self.parent[hi].compare_exchange(hi, lo, Ordering::AcqRel, Ordering::Acquire) {
                Ok(_) => return,
                Err(_) => {
                    a = self.find(hi);
                    b = self.find(lo);
                }
            }
        }
    }

    /// Attaches the singleton `i` under `target` if `i` is still its own
    /// parent. Returns whether this call performed the attachment.
    ///
    /// Used for border points, which never become parents of anything, so
    /// the attached slot stays a leaf forever.
    #[inline]
    pub fn claim(&self, i: usize, target: usize) -> bool {
        self.parent[i]
            .compare_exchange(i, target, Ordering::AcqRel, Ordering::Acquire)
            .is_ok()
    }

    /// Whether `i` is still a self-loop.
    #[inline]
    pub fn is_root(&self, i: usize) -> bool {
        self.parent(i) == i
    }

    /// Points every node directly at its root. Must not race with `union`.
    pub fn flatten(&self) {
        (0..self.len()).into_par_iter().for_each(|i| {
            let root = self.find(i);
            self.parent[i].store(root, Ordering::Release);
        });
    }

    pub fn snapshot(&self) -> Vec<usize> {
        self.parent.iter().map(|p| p.load(Ordering::Acquire)).collect()
    }
}
