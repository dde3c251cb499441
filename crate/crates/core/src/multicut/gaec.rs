//! Greedy additive edge contraction.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::time::Instant;

use super::{Partition, SolveReport, Solver};
use crate::graphbuild::SimilarityGraph;
use crate::triangle;

/// Disjoint sets whose root is always the smallest member.
struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Queue entry for the contracted edge between clusters `a < b`, valid only
/// while both clusters still carry the recorded versions.
#[derive(Debug)]
struct Candidate {
    weight: f64,
    a: usize,
    b: usize,
    version_a: u32,
    version_b: u32,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // Max-heap on weight; equal weights prefer the lexicographically smaller pair.
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then_with(|| (other.a, other.b).cmp(&(self.a, self.b)))
            .then_with(|| (self.version_a, self.version_b).cmp(&(other.version_a, other.version_b)))
    }
}

/// Starts from singletons and repeatedly contracts the heaviest inter-cluster
/// edge while its aggregated weight is non-negative. Parallel edges created by
/// a contraction are summed.
pub fn solve_gaec(graph: &SimilarityGraph) -> SolveReport {
    let started = Instant::now();
    let n = graph.len();
    let mut adjacency: Vec<HashMap<usize, f64>> = vec![HashMap::with_capacity(n); n];
    let mut queue = BinaryHeap::with_capacity(triangle::pair_count(n));
    for ((i, j), &w) in triangle::pairs(n).zip(graph.weights()) {
        adjacency[i].insert(j, w);
        adjacency[j].insert(i, w);
        queue.push(Candidate {
            weight: w,
            a: i,
            b: j,
            version_a: 0,
            version_b: 0,
        });
    }

    let mut version = vec![0u32; n];
    let mut alive = vec![true; n];
    let mut sets = UnionFind::new(n);

    while let Some(top) = queue.pop() {
        let Candidate {
            weight,
            a,
            b,
            version_a,
            version_b,
        } = top;
        if !alive[a] || !alive[b] || version[a] != version_a || version[b] != version_b {
            continue;
        }
        if weight < 0.0 {
            break;
        }
        assert!(weight >= 0.0, "GAEC must not contract a negative edge");

        // `a < b`: `a` survives and keeps the smaller representative id.
        let absorbed = std::mem::take(&mut adjacency[b]);
        adjacency[a].remove(&b);
        for (c, w) in absorbed {
            if c == a {
                continue;
            }
            *adjacency[a].entry(c).or_insert(0.0) += w;
            adjacency[c].remove(&b);
        }
        alive[b] = false;
        version[a] += 1;
        sets.union(a, b);

        let merged = std::mem::take(&mut adjacency[a]);
        for (&c, &w) in &merged {
            adjacency[c].insert(a, w);
            let (lo, hi) = if a < c { (a, c) } else { (c, a) };
            queue.push(Candidate {
                weight: w,
                a: lo,
                b: hi,
                version_a: version[lo],
                version_b: version[hi],
            });
        }
        adjacency[a] = merged;
    }

    let labels: Vec<usize> = (0..n).map(|v| sets.find(v)).collect();
    SolveReport::new(graph, Partition::from_labels(&labels), Solver::Gaec, 0, started)
}
