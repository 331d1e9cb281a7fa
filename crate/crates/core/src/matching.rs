//! Minimum-cost maximum-cardinality bipartite matching on sparse graphs.
//!
//! Successive shortest augmenting paths with Johnson potentials: every
//! phase runs a Dijkstra search from all free left vertices over reduced
//! costs and augments along the cheapest path to a free right vertex. Each
//! intermediate matching is minimum-cost for its size, so the final one is a
//! maximum matching of minimum total cost.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    /// `(left, right)` pairs sorted by left index.
    pub pairs: Vec<(usize, usize)>,
    pub total_cost: f64,
}

impl Assignment {
    pub fn cardinality(&self) -> usize {
        self.pairs.len()
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance, then node index for determinism.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Solves the assignment over `edges = (left, right, cost)`; costs must be
/// finite and non-negative. Duplicate edges keep the cheapest cost.
pub fn min_cost_max_matching(n_left: usize, n_right: usize, edges: &[(usize, usize, f64)]) -> Result<Assignment> {
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_left];
    for &(u, v, c) in edges {
        if u >= n_left || v >= n_right {
            return Err(Error::InvalidValue(format!("edge ({u}, {v}) out of range")));
        }
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::InvalidValue(format!("edge cost {c} must be finite and non-negative")));
        }
        adj[u].push((v, c));
    }
    for list in &mut adj {
        list.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        list.dedup_by_key(|e| e.0);
    }

    let n = n_left + n_right;
    let mut match_left: Vec<Option<(usize, f64)>> = vec![None; n_left];
    let mut match_right: Vec<Option<usize>> = vec![None; n_right];
    let mut potential = vec![0.0f64; n];
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();

    loop {
        dist.fill(f64::INFINITY);
        parent.fill(usize::MAX);
        done.fill(false);
        heap.clear();
        for u in 0..n_left {
            if match_left[u].is_none() && !adj[u].is_empty() {
                dist[u] = 0.0;
                heap.push(Entry { dist: 0.0, node: u });
            }
        }

        let mut target = None;
        while let Some(Entry { dist: d, node }) = heap.pop() {
            if done[node] || d > dist[node] {
                continue;
            }
            done[node] = true;
            if node < n_left {
                let u = node;
                let matched_to = match_left[u].map(|m| m.0);
                for &(v, c) in &adj[u] {
                    if Some(v) == matched_to {
                        continue;
                    }
                    let rv = n_left + v;
                    let nd = d + (c + potential[u] - potential[rv]).max(0.0);
                    if nd < dist[rv] {
                        dist[rv] = nd;
                        parent[rv] = u;
                        heap.push(Entry { dist: nd, node: rv });
                    }
                }
            } else {
                let v = node - n_left;
                match match_right[v] {
                    None => {
                        target = Some(v);
                        break;
                    }
                    Some(u) => {
                        let c = match_left[u].expect("matched pair is symmetric").1;
                        let nd = d + (-c + potential[node] - potential[u]).max(0.0);
                        if nd < dist[u] {
                            dist[u] = nd;
                            parent[u] = node;
                            heap.push(Entry { dist: nd, node: u });
                        }
                    }
                }
            }
        }

        let Some(t) = target else { break };
        let reach = dist[n_left + t];
        for (p, &d) in potential.iter_mut().zip(&dist) {
            *p += d.min(reach);
        }

        // Flip the alternating path ending at the free right vertex `t`.
        let mut v = t;
        loop {
            let u = parent[n_left + v];
            let cost = adj[u]
                .binary_search_by(|e| e.0.cmp(&v))
                .map(|i| adj[u][i].1)
                .expect("path edge exists");
            let previous = match_left[u].map(|m| m.0);
            match_left[u] = Some((v, cost));
            match_right[v] = Some(u);
            match previous {
                Some(prev) => v = prev,
                None => break,
            }
        }
    }

    let pairs: Vec<(usize, usize)> = match_left
        .iter()
        .enumerate()
        .filter_map(|(u, m)| m.map(|(v, _)| (u, v)))
        .collect();
    let total_cost = match_left.iter().flatten().map(|&(_, c)| c).sum();
    Ok(Assignment { pairs, total_cost })
}
