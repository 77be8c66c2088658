//! Message schedules of the collective operations.
//!
//! Each function lists the point-to-point transfers a binomial-tree or
//! hypercube implementation would perform. The simulator only uses them for
//! word accounting; results are computed directly.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Edge {
    pub from: usize,
    pub to: usize,
    pub words: usize,
}

pub fn ceil_log2(p: usize) -> u32 {
    if p <= 1 {
        0
    } else {
        usize::BITS - (p - 1).leading_zeros()
    }
}

fn floor_pow2(p: usize) -> usize {
    if p == 0 {
        0
    } else {
        1 << (usize::BITS - 1 - p.leading_zeros())
    }
}

fn abs(v: usize, root: usize, p: usize) -> usize {
    (v + root) % p
}

fn msb(v: usize) -> usize {
    1 << (usize::BITS - 1 - v.leading_zeros())
}

/// Binomial tree rooted at `root`; each non-root PE receives `m` words once.
pub(crate) fn broadcast(p: usize, root: usize, m: usize) -> Vec<Edge> {
    (1..p)
        .map(|v| Edge {
            from: abs(v - msb(v), root, p),
            to: abs(v, root, p),
            words: m,
        })
        .collect()
}

pub(crate) fn reduce(p: usize, root: usize, m: usize) -> Vec<Edge> {
    reversed(broadcast(p, root, m))
}

/// Binomial-tree gather: every PE forwards its whole subtree to its parent.
pub(crate) fn gather(p: usize, root: usize, sizes: &[usize]) -> Vec<Edge> {
    let mut acc: Vec<usize> = (0..p).map(|v| sizes[abs(v, root, p)]).collect();
    let mut edges = Vec::new();
    for j in (0..ceil_log2(p)).rev() {
        let step = 1usize << j;
        for v in step..(2 * step).min(p) {
            acc[v - step] += acc[v];
            edges.push(Edge {
                from: abs(v, root, p),
                to: abs(v - step, root, p),
                words: acc[v],
            });
        }
    }
    edges
}

pub(crate) fn scatter(p: usize, root: usize, sizes: &[usize]) -> Vec<Edge> {
    reversed(gather(p, root, sizes))
}

/// Bruck all-gather: in round `j` every PE forwards the blocks it holds to
/// the PE `2^j` positions below it.
pub(crate) fn all_gather(p: usize, sizes: &[usize]) -> Vec<Edge> {
    let mut edges = Vec::new();
    let mut dist = 1;
    while dist < p {
        let count = dist.min(p - dist);
        for i in 0..p {
            let words = (0..count).map(|b| sizes[(i + b) % p]).sum();
            edges.push(Edge {
                from: i,
                to: (i + p - dist) % p,
                words,
            });
        }
        dist *= 2;
    }
    edges
}

/// Doubling scan; `reverse` accumulates from the highest PE downwards.
pub(crate) fn scan(p: usize, m: usize, reverse: bool) -> Vec<Edge> {
    let mut edges = Vec::new();
    let mut dist = 1;
    while dist < p {
        for i in 0..p - dist {
            let (from, to) = if reverse { (i + dist, i) } else { (i, i + dist) };
            edges.push(Edge { from, to, words: m });
        }
        dist *= 2;
    }
    edges
}

/// Hypercube all-reduce. PEs beyond the largest power of two fold onto a
/// partner first and get the result back at the end. Vectors at least as
/// long as the cube use recursive halving followed by recursive doubling,
/// shorter ones a plain butterfly.
pub(crate) fn all_reduce(p: usize, m: usize) -> Vec<Edge> {
    let cube = floor_pow2(p);
    let dims = cube.trailing_zeros();
    let mut edges = Vec::new();
    for r in cube..p {
        edges.push(Edge { from: r, to: r - cube, words: m });
    }
    if m >= cube && cube > 1 {
        let mut range = vec![(0usize, m); cube];
        for j in (0..dims).rev() {
            let d = 1 << j;
            let mut next = range.clone();
            for r in 0..cube {
                let (lo, hi) = range[r];
                let mid = lo + (hi - lo) / 2;
                let (keep, give) = if r & d == 0 { ((lo, mid), mid..hi) } else { ((mid, hi), lo..mid) };
                next[r] = keep;
                edges.push(Edge { from: r, to: r ^ d, words: give.len() });
            }
            range = next;
        }
        for j in 0..dims {
            let d = 1 << j;
            let mut next = range.clone();
            for r in 0..cube {
                let (lo, hi) = range[r];
                let (plo, phi) = range[r ^ d];
                next[r] = (lo.min(plo), hi.max(phi));
                edges.push(Edge { from: r, to: r ^ d, words: hi - lo });
            }
            range = next;
        }
    } else {
        for j in 0..dims {
            for r in 0..cube {
                edges.push(Edge { from: r, to: r ^ (1 << j), words: m });
            }
        }
    }
    for r in cube..p {
        edges.push(Edge { from: r - cube, to: r, words: m });
    }
    edges
}

fn reversed(edges: Vec<Edge>) -> Vec<Edge> {
    edges
        .into_iter()
        .rev()
        .map(|e| Edge { from: e.to, to: e.from, words: e.words })
        .collect()
}
