use std::cell::OnceCell;
use std::cmp::Ordering;
use std::fmt;

use crate::error::{param, Result};
use crate::selection::RankedSeq;
use crate::simnet::FixedWords;

type Link<T> = Option<Box<Node<T>>>;

struct Node<T> {
    key: T,
    prio: u64,
    size: usize,
    left: Link<T>,
    right: Link<T>,
}

impl<T> Node<T> {
    fn new(key: T, prio: u64) -> Box<Self> {
        Box::new(Node { key, prio, size: 1, left: None, right: None })
    }

    fn fix(&mut self) {
        self.size = 1 + size(&self.left) + size(&self.right);
    }
}

fn size<T>(t: &Link<T>) -> usize {
    t.as_ref().map_or(0, |n| n.size)
}

/// Splits into keys going left (`goes_left(key)` true) and the rest.
/// `goes_left` must be monotone: true on a prefix of the in-order sequence.
fn split_by<T>(t: Link<T>, goes_left: &impl Fn(&T) -> bool) -> (Link<T>, Link<T>) {
    match t {
        None => (None, None),
        Some(mut n) => {
            if goes_left(&n.key) {
                let (l, r) = split_by(n.right.take(), goes_left);
                n.right = l;
                n.fix();
                (Some(n), r)
            } else {
                let (l, r) = split_by(n.left.take(), goes_left);
                n.left = r;
                n.fix();
                (l, Some(n))
            }
        }
    }
}

/// Splits off the first `r` keys.
fn split_rank<T>(t: Link<T>, r: usize) -> (Link<T>, Link<T>) {
    match t {
        None => (None, None),
        Some(mut n) => {
            let ls = size(&n.left);
            if r <= ls {
                let (l, rest) = split_rank(n.left.take(), r);
                n.left = rest;
                n.fix();
                (l, Some(n))
            } else {
                let (l, rest) = split_rank(n.right.take(), r - ls - 1);
                n.right = l;
                n.fix();
                (Some(n), rest)
            }
        }
    }
}

/// Joins two treaps whose keys do not interleave (`a` before `b`).
fn merge<T>(a: Link<T>, b: Link<T>) -> Link<T> {
    match (a, b) {
        (None, b) => b,
        (a, None) => a,
        (Some(mut x), Some(mut y)) => {
            if x.prio >= y.prio {
                x.right = merge(x.right.take(), Some(y));
                x.fix();
                Some(x)
            } else {
                y.left = merge(Some(x), y.left.take());
                y.fix();
                Some(y)
            }
        }
    }
}

fn remove<T: Ord>(t: &mut Link<T>, x: &T) -> bool {
    let Some(n) = t else {
        return false;
    };
    let removed = match x.cmp(&n.key) {
        Ordering::Less => remove(&mut n.left, x),
        Ordering::Greater => remove(&mut n.right, x),
        Ordering::Equal => {
            let mut node = t.take().expect("node present");
            *t = merge(node.left.take(), node.right.take());
            return true;
        }
    };
    if removed {
        n.fix();
    }
    removed
}

/// Balanced search tree with subtree sizes (a treap).
///
/// Supports insertion, deletion, `select`, `rank`, `split` and `concat` in
/// expected logarithmic time. The root-to-minimum and root-to-maximum paths
/// are cached and rebuilt on the first access after a modification, so
/// repeated extreme queries take constant time.
pub struct RankTree<T> {
    root: Link<T>,
    next_prio: u64,
    min_path: OnceCell<Vec<T>>,
    max_path: OnceCell<Vec<T>>,
}

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl<T: Ord + Clone> RankTree<T> {
    pub fn new() -> Self {
        Self::with_seed(0)
    }

    /// Priorities are drawn from a stream seeded with `seed`.
    pub fn with_seed(seed: u64) -> Self {
        RankTree {
            root: None,
            next_prio: seed,
            min_path: OnceCell::new(),
            max_path: OnceCell::new(),
        }
    }

    fn from_link(root: Link<T>, next_prio: u64) -> Self {
        RankTree { root, next_prio, min_path: OnceCell::new(), max_path: OnceCell::new() }
    }

    fn touched(&mut self) {
        self.min_path.take();
        self.max_path.take();
    }

    pub fn len(&self) -> usize {
        size(&self.root)
    }

    pub fn is_empty(&self) -> bool {
        self.root.is_none()
    }

    pub fn insert(&mut self, key: T) {
        let prio = splitmix(&mut self.next_prio);
        let (l, r) = split_by(self.root.take(), &|k: &T| *k <= key);
        self.root = merge(merge(l, Some(Node::new(key, prio))), r);
        self.touched();
    }

    /// Removes one occurrence of `key`; returns whether it was present.
    pub fn delete(&mut self, key: &T) -> bool {
        let hit = remove(&mut self.root, key);
        if hit {
            self.touched();
        }
        hit
    }

    /// The `i`-th smallest key, 1-based.
    pub fn select(&self, i: usize) -> Result<&T> {
        if i == 0 || i > self.len() {
            return param(format!("select({i}) on a tree of size {}", self.len()));
        }
        let mut i = i;
        let mut t = &self.root;
        while let Some(n) = t {
            let ls = size(&n.left);
            match i.cmp(&(ls + 1)) {
                Ordering::Less => t = &n.left,
                Ordering::Equal => return Ok(&n.key),
                Ordering::Greater => {
                    i -= ls + 1;
                    t = &n.right;
                }
            }
        }
        unreachable!("sizes are consistent")
    }

    /// Number of keys `<= x`.
    pub fn rank(&self, x: &T) -> usize {
        self.count_by(|k| k <= x)
    }

    /// Number of keys `< x`.
    pub fn rank_less(&self, x: &T) -> usize {
        self.count_by(|k| k < x)
    }

    fn count_by(&self, left: impl Fn(&T) -> bool) -> usize {
        let mut c = 0;
        let mut t = &self.root;
        while let Some(n) = t {
            if left(&n.key) {
                c += size(&n.left) + 1;
                t = &n.right;
            } else {
                t = &n.left;
            }
        }
        c
    }

    /// Splits into the keys `<= x` and the keys `> x`.
    pub fn split(self, x: &T) -> (Self, Self) {
        let seed = self.next_prio;
        let (l, r) = split_by(self.root, &|k: &T| k <= x);
        (Self::from_link(l, seed), Self::from_link(r, seed ^ 0x5555_5555))
    }

    /// Removes and returns the `r` smallest keys as a tree.
    pub fn split_off_smallest(&mut self, r: usize) -> Self {
        let r = r.min(self.len());
        let (l, rest) = split_rank(self.root.take(), r);
        self.root = rest;
        self.touched();
        Self::from_link(l, self.next_prio ^ 0xaaaa_aaaa)
    }

    /// Removes the `r` smallest keys and returns them in ascending order.
    pub fn take_smallest(&mut self, r: usize) -> Vec<T> {
        self.split_off_smallest(r).into_sorted_vec()
    }

    /// Joins `a` and `b`; every key of `a` must be `<=` every key of `b`.
    pub fn concat(a: Self, b: Self) -> Result<Self> {
        if let (Some(x), Some(y)) = (a.max(), b.min()) {
            if x > y {
                return param("concat of trees with overlapping key ranges");
            }
        }
        let seed = a.next_prio ^ b.next_prio.rotate_left(17);
        Ok(Self::from_link(merge(a.root, b.root), seed))
    }

    pub fn min(&self) -> Option<&T> {
        self.min_path().last()
    }

    pub fn max(&self) -> Option<&T> {
        self.max_path().last()
    }

    /// Keys on the path from the root to the smallest key.
    pub fn min_path(&self) -> &[T] {
        self.min_path.get_or_init(|| self.path(|n| &n.left))
    }

    /// Keys on the path from the root to the largest key.
    pub fn max_path(&self) -> &[T] {
        self.max_path.get_or_init(|| self.path(|n| &n.right))
    }

    fn path(&self, next: impl Fn(&Node<T>) -> &Link<T>) -> Vec<T> {
        let mut out = Vec::new();
        let mut t = &self.root;
        while let Some(n) = t {
            out.push(n.key.clone());
            t = next(n);
        }
        out
    }

    pub fn iter(&self) -> Iter<'_, T> {
        let mut it = Iter { stack: Vec::new() };
        it.push_left(&self.root);
        it
    }

    pub fn into_sorted_vec(self) -> Vec<T> {
        self.iter().cloned().collect()
    }

    /// Verifies order, heap and size invariants.
    pub fn check(&self) -> bool {
        fn walk<T: Ord>(t: &Link<T>, lo: Option<&T>, hi: Option<&T>, prio: u64) -> Option<usize> {
            let Some(n) = t else { return Some(0) };
            if lo.is_some_and(|l| n.key < *l) || hi.is_some_and(|h| n.key > *h) || n.prio > prio {
                return None;
            }
            let l = walk(&n.left, lo, Some(&n.key), n.prio)?;
            let r = walk(&n.right, Some(&n.key), hi, n.prio)?;
            (n.size == l + r + 1).then_some(n.size)
        }
        walk(&self.root, None, None, u64::MAX).is_some()
    }
}

impl<T: Ord + Clone> Default for RankTree<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Ord + Clone> FromIterator<T> for RankTree<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut t = RankTree::new();
        for x in iter {
            t.insert(x);
        }
        t
    }
}

impl<T: Ord + Clone + fmt::Debug> fmt::Debug for RankTree<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.iter()).finish()
    }
}

pub struct Iter<'a, T> {
    stack: Vec<&'a Node<T>>,
}

impl<'a, T> Iter<'a, T> {
    fn push_left(&mut self, mut t: &'a Link<T>) {
        while let Some(n) = t {
            self.stack.push(n);
            t = &n.left;
        }
    }
}

impl<'a, T> Iterator for Iter<'a, T> {
    type Item = &'a T;

    fn next(&mut self) -> Option<&'a T> {
        let n = self.stack.pop()?;
        self.push_left(&n.right);
        Some(&n.key)
    }
}

impl<T: Ord + Clone + FixedWords> RankedSeq for RankTree<T> {
    type Item = T;

    fn len(&self) -> usize {
        RankTree::len(self)
    }

    fn at(&self, i: usize) -> T {
        if i == 0 {
            if let Some(m) = self.min() {
                return m.clone();
            }
        }
        if i + 1 == self.len() {
            if let Some(m) = self.max() {
                return m.clone();
            }
        }
        self.select(i + 1).expect("index in range").clone()
    }

    fn count_less(&self, x: &T) -> usize {
        self.rank_less(x)
    }

    fn count_le(&self, x: &T) -> usize {
        self.rank(x)
    }
}
