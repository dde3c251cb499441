//! Minimum cost multicut on complete weighted graphs.
//!
//! A solution is a node [`Partition`]; an edge is cut iff its endpoints lie in
//! different clusters, so every solution satisfies the cycle constraints by
//! construction. The objective is the sum of cut-edge weights: positive
//! (attractive) edges want to stay inside clusters, negative ones want to be cut.

mod exact;
mod gaec;
mod klj;
mod partition;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphbuild::SimilarityGraph;
use crate::triangle;

pub use exact::{solve_exact, EXACT_MAX_NODES};
pub use gaec::solve_gaec;
pub use klj::{solve_klj, KLJ_MAX_SWEEPS};
pub use partition::Partition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Solver {
    #[serde(rename = "gaec")]
    Gaec,
    #[serde(rename = "gaec-kl")]
    GaecKl,
    #[serde(rename = "kl")]
    Kl,
    #[serde(rename = "exact")]
    Exact,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Gaec => "gaec",
            Solver::GaecKl => "gaec-kl",
            Solver::Kl => "kl",
            Solver::Exact => "exact",
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Heuristic pipeline selectable for [`solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolveMode {
    Gaec,
    #[default]
    GaecKl,
}

impl FromStr for SolveMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaec" => Ok(SolveMode::Gaec),
            "gaec-kl" => Ok(SolveMode::GaecKl),
            other => Err(Error::InvalidInput(format!(
                "unknown solver {other:?} (expected gaec or gaec-kl)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub partition: Partition,
    pub solver: Solver,
    pub cal: Option<f64>,
    pub cost: f64,
    pub num_clusters: usize,
    /// Refinement sweeps; zero for solvers without sweeps.
    pub iterations: usize,
    pub runtime_ms: f64,
}

impl SolveReport {
    pub(crate) fn new(
        graph: &SimilarityGraph,
        partition: Partition,
        solver: Solver,
        iterations: usize,
        started: Instant,
    ) -> Self {
        let cost = cost_unchecked(graph, &partition);
        Self {
            num_clusters: partition.num_clusters(),
            partition,
            solver,
            cal: graph.calibration().map(|c| c.value()),
            cost,
            iterations,
            runtime_ms: started.elapsed().as_secs_f64() * 1e3,
        }
    }
}

/// Sum of the weights of all cut edges.
pub fn cost(graph: &SimilarityGraph, p: &Partition) -> Result<f64> {
    if p.len() != graph.len() {
        return Err(Error::LengthMismatch {
            expected: graph.len(),
            actual: p.len(),
        });
    }
    Ok(cost_unchecked(graph, p))
}

fn cost_unchecked(graph: &SimilarityGraph, p: &Partition) -> f64 {
    let a = p.assignment();
    triangle::pairs(graph.len())
        .zip(graph.weights())
        .filter(|((i, j), _)| a[*i] != a[*j])
        .map(|(_, w)| w)
        .sum()
}

/// GAEC, optionally followed by KLj refinement of its output.
pub fn solve(graph: &SimilarityGraph, mode: SolveMode) -> SolveReport {
    let started = Instant::now();
    let greedy = solve_gaec(graph);
    match mode {
        SolveMode::Gaec => greedy,
        SolveMode::GaecKl => {
            let refined = solve_klj(graph, &greedy.partition)
                .expect("GAEC output covers every node");
            SolveReport::new(
                graph,
                refined.partition,
                Solver::GaecKl,
                refined.iterations,
                started,
            )
        }
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub fn triangle_graph() -> SimilarityGraph {
        SimilarityGraph::from_edges(3, &[(0, 1, 2.0), (0, 2, 1.0), (1, 2, -3.0)]).unwrap()
    }

    pub fn two_pairs_graph() -> SimilarityGraph {
        SimilarityGraph::from_edges(
            4,
            &[
                (0, 1, 3.0),
                (2, 3, 3.0),
                (0, 2, 1.0),
                (0, 3, -5.0),
                (1, 2, -5.0),
                (1, 3, -5.0),
            ],
        )
        .unwrap()
    }

    pub fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> SimilarityGraph {
        let w = (0..triangle::pair_count(n))
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        SimilarityGraph::from_weights(n, w).unwrap()
    }

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }
}
