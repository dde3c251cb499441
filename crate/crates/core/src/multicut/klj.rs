//! Kernighan-Lin refinement with joins.
//!
//! Each sweep visits, in order:
//!
//! 1. every cut edge `(a, b)` between clusters `A` and `B`, trying to move `a`
//!    into `B`, `b` into `A`, or to exchange the two;
//! 2. every node, trying to split it off into a new singleton cluster;
//! 3. every pair of clusters, joining them if their total connecting weight is
//!    positive.
//!
//! Moves are applied as soon as one strictly lowers the cost. Gains are read
//! off per-node cluster connectivities: `conn[v][C]` is the summed weight from
//! `v` to the members of `C` other than `v`, so the D-value of moving `v` from
//! `A` to `B` is `conn[v][B] - conn[v][A]`. Only edges and clusters touching a
//! cluster that changed since its last visit are re-examined; a sweep with no
//! accepted move ends the search.

use std::collections::HashMap;
use std::time::Instant;

use super::{Partition, SolveReport, Solver};
use crate::error::{Error, Result};
use crate::graphbuild::SimilarityGraph;

/// Upper bound on full sweeps.
pub const KLJ_MAX_SWEEPS: usize = 100;

// Minimum gain for a move to count as an improvement. Keeps accumulated
// rounding in the connectivity tables from producing zero-gain cycles.
const GAIN_EPS: f64 = 1e-9;

/// Refines `init`; the result never costs more than `init`.
pub fn solve_klj(graph: &SimilarityGraph, init: &Partition) -> Result<SolveReport> {
    solve_klj_traced(graph, init, |_| {})
}

/// As [`solve_klj`], calling `on_move` with the node labels after every accepted move.
pub(crate) fn solve_klj_traced(
    graph: &SimilarityGraph,
    init: &Partition,
    on_move: impl FnMut(&[usize]),
) -> Result<SolveReport> {
    if init.len() != graph.len() {
        return Err(Error::LengthMismatch {
            expected: graph.len(),
            actual: init.len(),
        });
    }
    let started = Instant::now();
    let mut state = State::new(graph, init);
    let sweeps = state.run(on_move);
    let partition = Partition::from_labels(&state.label);
    Ok(SolveReport::new(graph, partition, Solver::Kl, sweeps, started))
}

struct State<'g> {
    graph: &'g SimilarityGraph,
    label: Vec<usize>,
    // members[c] and pos[v] give O(1) removal
    members: Vec<Vec<usize>>,
    pos: Vec<usize>,
    conn: Vec<HashMap<usize, f64>>,
    dirty: Vec<bool>,
    touched: Vec<bool>,
}

enum EdgeMove {
    AToB,
    BToA,
    Swap,
}

impl<'g> State<'g> {
    fn new(graph: &'g SimilarityGraph, init: &Partition) -> Self {
        let n = graph.len();
        let k = init.num_clusters();
        let mut members = vec![Vec::new(); k];
        let mut pos = vec![0; n];
        for v in 0..n {
            let c = init.cluster_of(v);
            pos[v] = members[c].len();
            members[c].push(v);
        }
        let mut s = Self {
            graph,
            label: init.assignment().to_vec(),
            members,
            pos,
            conn: vec![HashMap::new(); n],
            dirty: vec![true; k],
            touched: vec![false; k],
        };
        s.recompute_connectivity();
        s
    }

    fn recompute_connectivity(&mut self) {
        let n = self.graph.len();
        for table in &mut self.conn {
            table.clear();
        }
        for u in 0..n {
            for v in u + 1..n {
                let w = self.graph.weight(u, v);
                *self.conn[u].entry(self.label[v]).or_insert(0.0) += w;
                *self.conn[v].entry(self.label[u]).or_insert(0.0) += w;
            }
        }
    }

    #[inline]
    fn conn(&self, v: usize, c: usize) -> f64 {
        self.conn[v].get(&c).copied().unwrap_or(0.0)
    }

    #[inline]
    fn is_dirty(&self, c: usize) -> bool {
        self.dirty[c] || self.touched[c]
    }

    fn new_cluster(&mut self) -> usize {
        self.members.push(Vec::new());
        self.dirty.push(true);
        self.touched.push(true);
        self.members.len() - 1
    }

    fn move_node(&mut self, u: usize, to: usize) {
        let from = self.label[u];
        debug_assert_ne!(from, to);
        for v in 0..self.graph.len() {
            if v == u {
                continue;
            }
            let w = self.graph.weight(u, v);
            let table = &mut self.conn[v];
            *table.entry(from).or_insert(0.0) -= w;
            *table.entry(to).or_insert(0.0) += w;
        }
        let p = self.pos[u];
        self.members[from].swap_remove(p);
        if let Some(&moved) = self.members[from].get(p) {
            self.pos[moved] = p;
        }
        self.pos[u] = self.members[to].len();
        self.members[to].push(u);
        self.label[u] = to;
        self.touched[from] = true;
        self.touched[to] = true;
    }

    fn retire_if_empty(&mut self, c: usize) {
        if self.members[c].is_empty() {
            for table in &mut self.conn {
                table.remove(&c);
            }
        }
    }

    /// Merges cluster `b` into `a`.
    fn join(&mut self, a: usize, b: usize) {
        for table in &mut self.conn {
            if let Some(x) = table.remove(&b) {
                *table.entry(a).or_insert(0.0) += x;
            }
        }
        let moved = std::mem::take(&mut self.members[b]);
        for v in moved {
            self.label[v] = a;
            self.pos[v] = self.members[a].len();
            self.members[a].push(v);
        }
        self.touched[a] = true;
        self.touched[b] = true;
    }

    fn inter_cluster_weight(&self, a: usize, b: usize) -> f64 {
        let (small, other) = if self.members[a].len() <= self.members[b].len() {
            (a, b)
        } else {
            (b, a)
        };
        self.members[small].iter().map(|&v| self.conn(v, other)).sum()
    }

    fn edge_phase(&mut self, on_move: &mut impl FnMut(&[usize])) -> bool {
        let n = self.graph.len();
        let mut changed = false;
        for a in 0..n {
            for b in a + 1..n {
                let (ca, cb) = (self.label[a], self.label[b]);
                if ca == cb || !(self.is_dirty(ca) || self.is_dirty(cb)) {
                    continue;
                }
                let gain_a = self.conn(a, cb) - self.conn(a, ca);
                let gain_b = self.conn(b, ca) - self.conn(b, cb);
                let gain_swap = gain_a + gain_b - 2.0 * self.graph.weight(a, b);
                let (best, gain) = [
                    (EdgeMove::AToB, gain_a),
                    (EdgeMove::BToA, gain_b),
                    (EdgeMove::Swap, gain_swap),
                ]
                .into_iter()
                .fold((EdgeMove::AToB, f64::NEG_INFINITY), |acc, cand| {
                    if cand.1 > acc.1 {
                        cand
                    } else {
                        acc
                    }
                });
                if gain <= GAIN_EPS {
                    continue;
                }
                match best {
                    EdgeMove::AToB => self.move_node(a, cb),
                    EdgeMove::BToA => self.move_node(b, ca),
                    EdgeMove::Swap => {
                        self.move_node(a, cb);
                        self.move_node(b, ca);
                    }
                }
                self.retire_if_empty(ca);
                self.retire_if_empty(cb);
                changed = true;
                on_move(&self.label);
            }
        }
        changed
    }

    fn node_phase(&mut self, on_move: &mut impl FnMut(&[usize])) -> bool {
        let mut changed = false;
        for v in 0..self.graph.len() {
            let c = self.label[v];
            if !self.is_dirty(c) || self.members[c].len() < 2 {
                continue;
            }
            // Splitting v off cuts all of its internal edges.
            if -self.conn(v, c) > GAIN_EPS {
                let fresh = self.new_cluster();
                self.move_node(v, fresh);
                changed = true;
                on_move(&self.label);
            }
        }
        changed
    }

    fn join_phase(&mut self, on_move: &mut impl FnMut(&[usize])) -> bool {
        let mut changed = false;
        let live: Vec<usize> = (0..self.members.len())
            .filter(|&c| !self.members[c].is_empty())
            .collect();
        for (i, &a) in live.iter().enumerate() {
            for &b in &live[i + 1..] {
                if self.members[a].is_empty() || self.members[b].is_empty() {
                    continue;
                }
                if !(self.is_dirty(a) || self.is_dirty(b)) {
                    continue;
                }
                if self.inter_cluster_weight(a, b) > GAIN_EPS {
                    self.join(a, b);
                    changed = true;
                    on_move(&self.label);
                }
            }
        }
        changed
    }

    fn run(&mut self, mut on_move: impl FnMut(&[usize])) -> usize {
        let mut sweeps = 0;
        while sweeps < KLJ_MAX_SWEEPS {
            sweeps += 1;
            if sweeps > 1 {
                self.recompute_connectivity();
            }
            let mut changed = self.edge_phase(&mut on_move);
            changed |= self.node_phase(&mut on_move);
            changed |= self.join_phase(&mut on_move);
            self.dirty = std::mem::take(&mut self.touched);
            self.touched = vec![false; self.dirty.len()];
            if !changed {
                break;
            }
        }
        sweeps
    }
}
