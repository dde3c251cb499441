use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};

/// Assignment of nodes `0..n` to clusters `0..k`.
///
/// Cluster ids are always finalized: cluster 0 is the largest, ties go to the
/// cluster holding the smallest node index. Two partitions that differ only by
/// a relabeling of clusters therefore compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    assignment: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Finalizes arbitrary per-node labels.
    pub fn from_labels<L: Eq + Hash>(labels: &[L]) -> Self {
        let mut first: HashMap<&L, usize> = HashMap::new();
        let mut raw = Vec::with_capacity(labels.len());
        for l in labels {
            let next = first.len();
            raw.push(*first.entry(l).or_insert(next));
        }
        Self::finalize(&raw, first.len())
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            assignment: (0..n).collect(),
            k: n,
        }
    }

    pub fn one_cluster(n: usize) -> Self {
        Self {
            assignment: vec![0; n],
            k: usize::from(n > 0),
        }
    }

    /// Builds a partition from explicit clusters; every node must appear exactly once.
    pub fn from_clusters(n: usize, clusters: &[Vec<usize>]) -> Result<Self> {
        let mut labels = vec![usize::MAX; n];
        for (c, members) in clusters.iter().enumerate() {
            for &v in members {
                if v >= n || labels[v] != usize::MAX {
                    return Err(Error::InvalidInput(format!(
                        "node {v} missing from range or assigned twice"
                    )));
                }
                labels[v] = c;
            }
        }
        if let Some(v) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(Error::InvalidInput(format!("node {v} is unassigned")));
        }
        Ok(Self::from_labels(&labels))
    }

    // `raw` holds dense ids 0..k assigned in order of first occurrence.
    fn finalize(raw: &[usize], k: usize) -> Self {
        let mut sizes = vec![0usize; k];
        for &c in raw {
            sizes[c] += 1;
        }
        // dense ids are already ordered by smallest member
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
        let mut rank = vec![0; k];
        for (new, &old) in order.iter().enumerate() {
            rank[old] = new;
        }
        Self {
            assignment: raw.iter().map(|&c| rank[c]).collect(),
            k,
        }
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn num_clusters(&self) -> usize {
        self.k
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    #[inline]
    pub fn cluster_of(&self, node: usize) -> usize {
        self.assignment[node]
    }

    /// Members of each cluster in ascending node order, indexed by cluster id.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (v, &c) in self.assignment.iter().enumerate() {
            out[c].push(v);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for &c in &self.assignment {
            out[c] += 1;
        }
        out
    }

    /// Labels renumbered by first occurrence, the canonical form used for
    /// equality up to relabeling.
    pub fn canonical_labels(&self) -> Vec<usize> {
        let mut map = vec![usize::MAX; self.k];
        let mut next = 0;
        self.assignment
            .iter()
            .map(|&c| {
                if map[c] == usize::MAX {
                    map[c] = next;
                    next += 1;
                }
                map[c]
            })
            .collect()
    }

    /// True if both partitions group the same nodes together.
    pub fn same_clustering(&self, other: &Partition) -> bool {
        self.len() == other.len() && self.canonical_labels() == other.canonical_labels()
    }

    /// Applies a node permutation: node `i` becomes node `perm[i]`.
    pub fn relabel_nodes(&self, perm: &[usize]) -> Self {
        let mut labels = vec![0; self.len()];
        for (i, &c) in self.assignment.iter().enumerate() {
            labels[perm[i]] = c;
        }
        Self::from_labels(&labels)
    }
}
