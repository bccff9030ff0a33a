//! Min-cost max-flow on integer capacities and costs.
//!
//! Primal-dual: Dijkstra on reduced costs finds the current shortest
//! augmenting distance, then a blocking flow saturates every path of that
//! length before the next search. Edge costs must be non-negative.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    cap: i64,
    cost: i64,
}

#[derive(Debug, Clone)]
pub struct FlowGraph {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
}

impl FlowGraph {
    pub fn new(nodes: usize) -> Self {
        Self {
            edges: Vec::new(),
            adj: vec![Vec::new(); nodes],
        }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: i64, cost: i64) {
        debug_assert!(cost >= 0 && cap >= 0);
        self.adj[from].push(self.edges.len());
        self.edges.push(Edge { to, cap, cost });
        self.adj[to].push(self.edges.len());
        self.edges.push(Edge {
            to: from,
            cap: 0,
            cost: -cost,
        });
    }

    /// Maximum flow from `s` to `t` and its minimum total cost.
    pub fn min_cost_max_flow(&mut self, s: usize, t: usize) -> (i64, i64) {
        let n = self.adj.len();
        let mut potential = vec![0i64; n];
        let (mut flow, mut cost) = (0i64, 0i64);
        let mut dist = vec![i64::MAX; n];
        loop {
            // shortest distances under reduced costs
            dist.fill(i64::MAX);
            dist[s] = 0;
            let mut heap = BinaryHeap::new();
            heap.push(Reverse((0i64, s)));
            while let Some(Reverse((d, u))) = heap.pop() {
                if d > dist[u] {
                    continue;
                }
                if u == t {
                    // unsettled nodes are at least this far; see the update below
                    break;
                }
                for &e in &self.adj[u] {
                    let edge = &self.edges[e];
                    if edge.cap <= 0 {
                        continue;
                    }
                    let nd = d + edge.cost + potential[u] - potential[edge.to];
                    if nd < dist[edge.to] {
                        dist[edge.to] = nd;
                        heap.push(Reverse((nd, edge.to)));
                    }
                }
            }
            if dist[t] == i64::MAX {
                break;
            }
            // nodes beyond the sink's distance keep reduced costs non-negative
            let dt = dist[t];
            for v in 0..n {
                potential[v] += dist[v].min(dt);
            }
            let (f, c) = self.blocking_flow(s, t, &potential);
            debug_assert!(f > 0);
            flow += f;
            cost += c;
        }
        (flow, cost)
    }

    fn admissible(&self, e: usize, from: usize, potential: &[i64]) -> bool {
        let edge = &self.edges[e];
        edge.cap > 0 && edge.cost + potential[from] - potential[edge.to] == 0
    }

    /// Saturates zero-reduced-cost paths with Dinic phases.
    fn blocking_flow(&mut self, s: usize, t: usize, potential: &[i64]) -> (i64, i64) {
        let n = self.adj.len();
        let (mut flow, mut cost) = (0, 0);
        let mut level = vec![u32::MAX; n];
        let mut iter = vec![0usize; n];
        loop {
            level.fill(u32::MAX);
            level[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &e in &self.adj[u] {
                    let to = self.edges[e].to;
                    if level[to] == u32::MAX && self.admissible(e, u, potential) {
                        level[to] = level[u] + 1;
                        queue.push_back(to);
                    }
                }
            }
            if level[t] == u32::MAX {
                return (flow, cost);
            }
            iter.fill(0);
            loop {
                let (f, c) = self.augment(s, t, i64::MAX, &level, &mut iter, potential);
                if f == 0 {
                    break;
                }
                flow += f;
                cost += c;
            }
        }
    }

    /// One augmenting path in the level graph, iteratively.
    fn augment(
        &mut self,
        s: usize,
        t: usize,
        limit: i64,
        level: &[u32],
        iter: &mut [usize],
        potential: &[i64],
    ) -> (i64, i64) {
        let mut path: Vec<usize> = Vec::new();
        let mut u = s;
        loop {
            if u == t {
                let f = path
                    .iter()
                    .map(|&e| self.edges[e].cap)
                    .fold(limit, i64::min);
                let mut c = 0;
                for &e in &path {
                    self.edges[e].cap -= f;
                    self.edges[e ^ 1].cap += f;
                    c += self.edges[e].cost * f;
                }
                return (f, c);
            }
            let mut advanced = false;
            while iter[u] < self.adj[u].len() {
                let e = self.adj[u][iter[u]];
                let to = self.edges[e].to;
                if level[to] == level[u] + 1 && self.admissible(e, u, potential) {
                    path.push(e);
                    u = to;
                    advanced = true;
                    break;
                }
                iter[u] += 1;
            }
            if !advanced {
                // dead end: retreat and skip the edge that led here
                let Some(e) = path.pop() else {
                    return (0, 0);
                };
                u = self.edges[e ^ 1].to;
                iter[u] += 1;
            }
        }
    }
}
