//! Minimum-cost maximum-cardinality bipartite matching by ε-scaling auction.
//!
//! The problem is turned into a perfect assignment: every left node `a`
//! gets a private dummy object `a'` (cost `BIG`), every right node `b` a
//! dummy bidder `b'` that may take `b` (cost `BIG`) or any `a'` whose `a`
//! is linked to `b` (cost 0). With `2·BIG` above the largest possible
//! matching cost, optimal assignments leave as few nodes unmatched as
//! possible and then minimize the real cost, which is exactly min-cost
//! max-flow on the unit-capacity bipartite network.

/// Sparse bipartite graph, edges grouped by left node.
#[derive(Debug, Clone, Default)]
pub struct Bipartite {
    pub left: usize,
    pub right: usize,
    start: Vec<usize>,
    edges: Vec<(usize, i64)>,
}

impl Bipartite {
    /// `links[a]` lists `(b, cost)`; costs must be non-negative.
    pub fn new(right: usize, links: Vec<Vec<(usize, i64)>>) -> Self {
        let mut start = Vec::with_capacity(links.len() + 1);
        let mut edges = Vec::new();
        for l in &links {
            start.push(edges.len());
            for &(b, c) in l {
                debug_assert!(b < right && c >= 0);
                edges.push((b, c));
            }
        }
        start.push(edges.len());
        Self {
            left: links.len(),
            right,
            start,
            edges,
        }
    }

    fn links(&self, a: usize) -> &[(usize, i64)] {
        &self.edges[self.start[a]..self.start[a + 1]]
    }
}

/// Matched pair count and total cost of a min-cost maximum matching.
pub fn min_cost_max_matching(g: &Bipartite) -> (i64, i64) {
    let (na, nb) = (g.left, g.right);
    if na == 0 || nb == 0 || g.edges.is_empty() {
        return (0, 0);
    }
    let max_cost = g.edges.iter().map(|e| e.1).max().unwrap_or(0);
    let big = max_cost * na.min(nb) as i64 / 2 + 1;

    // bidders: a in 0..na, b' in na..na+nb; objects: b in 0..nb, a' in nb..nb+na
    let n = na + nb;
    let mut adj: Vec<Vec<(usize, i64)>> = vec![Vec::new(); n];
    for a in 0..na {
        for &(b, c) in g.links(a) {
            adj[a].push((b, c));
            adj[na + b].push((nb + a, 0));
        }
        adj[a].push((nb + a, big));
    }
    for b in 0..nb {
        adj[na + b].push((b, big));
    }
    // benefits scaled so that ε = 1 certifies optimality
    let scale = n as i64 + 1;
    let benefit: Vec<Vec<(usize, i64)>> = adj
        .into_iter()
        .map(|l| l.into_iter().map(|(o, c)| (o, -c * scale)).collect())
        .collect();

    let assignment = auction(&benefit, n, big * scale);

    let (mut matched, mut cost) = (0i64, 0i64);
    for (a, &o) in assignment.iter().enumerate().take(na) {
        if o < nb {
            matched += 1;
            cost += g
                .links(a)
                .iter()
                .find(|e| e.0 == o)
                .map(|e| e.1)
                .expect("assigned along an edge");
        }
    }
    (matched, cost)
}

/// Forward auction with ε-scaling. Returns the object of each bidder.
/// Requires a perfect assignment to exist.
fn auction(benefit: &[Vec<(usize, i64)>], objects: usize, range: i64) -> Vec<usize> {
    const NONE: usize = usize::MAX;
    const RATIO: i64 = 6;
    let n = benefit.len();
    let mut price = vec![0i64; objects];
    let mut owner = vec![NONE; objects];
    let mut assigned = vec![NONE; n];
    let mut eps = (range / RATIO).max(1);
    loop {
        owner.fill(NONE);
        assigned.fill(NONE);
        let mut queue: Vec<usize> = (0..n).rev().collect();
        while let Some(i) = queue.pop() {
            let (mut best, mut v1, mut v2) = (NONE, i64::MIN, i64::MIN);
            for &(o, b) in &benefit[i] {
                let v = b - price[o];
                if v > v1 {
                    v2 = v1;
                    v1 = v;
                    best = o;
                } else if v > v2 {
                    v2 = v;
                }
            }
            // a lone option carries no competing value; bid the minimum
            let increment = if v2 == i64::MIN { eps } else { v1 - v2 + eps };
            price[best] += increment;
            let prev = owner[best];
            owner[best] = i;
            assigned[i] = best;
            if prev != NONE {
                assigned[prev] = NONE;
                queue.push(prev);
            }
        }
        if eps == 1 {
            return assigned;
        }
        eps = (eps / RATIO).max(1);
    }
}
