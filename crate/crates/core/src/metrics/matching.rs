//! Maximum-weight bipartite matching by successive shortest augmenting
//! paths with Johnson potentials. Sparse, so it scales to large morph
//! inventories where a dense assignment matrix would not.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

#[derive(Clone, Copy)]
struct Edge {
    to: usize,
    rev: usize,
    cap: bool,
    cost: i64,
}

/// Best one-to-one matching over `edges = (left, right, weight)` with
/// positive weights. Returns the total weight and the partner of every left
/// node.
pub fn max_weight_matching(n_left: usize, n_right: usize, edges: &[(usize, usize, i64)]) -> (i64, Vec<Option<usize>>) {
    let mut mate = vec![None; n_left];
    let edges: Vec<_> = edges.iter().copied().filter(|e| e.2 > 0).collect();
    let Some(w_max) = edges.iter().map(|e| e.2).max() else {
        return (0, mate);
    };
    let source = n_left + n_right;
    let sink = source + 1;
    let n = sink + 1;
    let mut g: Vec<Vec<Edge>> = vec![Vec::new(); n];
    let add = |g: &mut Vec<Vec<Edge>>, a: usize, b: usize, cost: i64| {
        let ra = g[b].len();
        let rb = g[a].len();
        g[a].push(Edge { to: b, rev: ra, cap: true, cost });
        g[b].push(Edge { to: a, rev: rb, cap: false, cost: -cost });
    };
    for l in 0..n_left {
        add(&mut g, source, l, 0);
    }
    for r in 0..n_right {
        add(&mut g, n_left + r, sink, 0);
    }
    for &(l, r, w) in &edges {
        // shifted to non-negative costs; every augmentation crosses one more
        // matched edge than it removes, so the shift is constant per unit
        add(&mut g, l, n_left + r, w_max - w);
    }

    let mut dual = vec![0i64; n];
    let mut total = 0i64;
    loop {
        let mut dist = vec![i64::MAX; n];
        let mut prev: Vec<(usize, usize)> = vec![(usize::MAX, 0); n];
        let mut seen = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[source] = 0;
        heap.push(Reverse((0i64, source)));
        while let Some(Reverse((d, v))) = heap.pop() {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if v == sink {
                break;
            }
            for (k, e) in g[v].iter().enumerate() {
                if !e.cap {
                    continue;
                }
                let c = e.cost - dual[e.to] + dual[v];
                if dist[e.to] - d > c {
                    dist[e.to] = d + c;
                    prev[e.to] = (v, k);
                    heap.push(Reverse((dist[e.to], e.to)));
                }
            }
        }
        if !seen[sink] {
            break;
        }
        for v in 0..n {
            if seen[v] {
                dual[v] -= dist[sink] - dist[v];
            }
        }
        let path_cost = -dual[source];
        let gain = w_max - path_cost;
        if gain <= 0 {
            break;
        }
        total += gain;
        let mut v = sink;
        while v != source {
            let (u, k) = prev[v];
            g[u][k].cap = false;
            let r = g[u][k].rev;
            g[v][r].cap = true;
            v = u;
        }
    }
    for (l, m) in mate.iter_mut().enumerate() {
        *m = g[l].iter().find(|e| !e.cap && e.to >= n_left && e.to < source).map(|e| e.to - n_left);
    }
    (total, mate)
}
