//! Exhaustive solver for small graphs, used as a ground-truth oracle.
//!
//! Set partitions of `0..n` are enumerated as restricted growth strings in
//! lexicographic order: `a[0] = 0` and `a[i] <= 1 + max(a[..i])`. Costs are kept
//! per prefix so each step only re-evaluates the suffix that changed.

use std::time::Instant;

use super::{Partition, SolveReport, Solver};
use crate::error::{Error, Result};
use crate::graphbuild::SimilarityGraph;

/// Bell(12) = 4,213,597 partitions.
pub const EXACT_MAX_NODES: usize = 12;

pub fn solve_exact(graph: &SimilarityGraph) -> Result<SolveReport> {
    let n = graph.len();
    if n > EXACT_MAX_NODES {
        return Err(Error::TooLargeForExact {
            n,
            max: EXACT_MAX_NODES,
        });
    }
    let started = Instant::now();
    let dense: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 0.0 } else { graph.weight(i, j) }).collect())
        .collect();

    let mut rgs = vec![0usize; n];
    // prefix_max[i] = max(rgs[..=i]); prefix_cost[i] = cut weight among nodes 0..=i
    let mut prefix_max = vec![0usize; n];
    let mut prefix_cost = vec![0.0f64; n];
    let mut best = rgs.clone();
    let mut best_cost = 0.0;

    let mut from = 1;
    loop {
        for j in from..n {
            let cut: f64 = (0..j).filter(|&u| rgs[u] != rgs[j]).map(|u| dense[u][j]).sum();
            prefix_cost[j] = prefix_cost[j - 1] + cut;
            prefix_max[j] = prefix_max[j - 1].max(rgs[j]);
        }
        let total = if n == 0 { 0.0 } else { prefix_cost[n - 1] };
        if total < best_cost {
            best_cost = total;
            best.copy_from_slice(&rgs);
        }

        // advance to the next restricted growth string
        let Some(i) = (1..n).rev().find(|&i| rgs[i] <= prefix_max[i - 1]) else {
            break;
        };
        rgs[i] += 1;
        rgs[i + 1..].iter_mut().for_each(|x| *x = 0);
        from = i;
    }

    Ok(SolveReport::new(
        graph,
        Partition::from_labels(&best),
        Solver::Exact,
        0,
        started,
    ))
}
