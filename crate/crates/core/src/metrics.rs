//! Partition comparison (variation of information and conditional entropies),
//! cluster-size statistics and cross-clustering overlap.
//!
//! All entropies are in nats.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::multicut::Partition;

pub const LOG_BASE: &str = "e";

fn check_same_len(a: &Partition, b: &Partition) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(())
}

/// Sparse contingency table, sorted by key so sums are order-stable.
fn joint_counts(a: &Partition, b: &Partition) -> Vec<((usize, usize), usize)> {
    let mut table: HashMap<(usize, usize), usize> = HashMap::new();
    for (&x, &y) in a.assignment().iter().zip(b.assignment()) {
        *table.entry((x, y)).or_insert(0) += 1;
    }
    let mut cells: Vec<_> = table.into_iter().collect();
    cells.sort_unstable_by_key(|&(k, _)| k);
    cells
}

/// `H(Y | X) = -sum_{x,y} p(x, y) ln p(y | x)`, with `0 ln 0 = 0`.
pub fn conditional_entropy(y: &Partition, x: &Partition) -> Result<f64> {
    check_same_len(y, x)?;
    let n = x.len();
    if n == 0 {
        return Ok(0.0);
    }
    let x_sizes = x.sizes();
    let h: f64 = joint_counts(x, y)
        .into_iter()
        .map(|((cx, _), count)| {
            let p_xy = count as f64 / n as f64;
            let p_y_given_x = count as f64 / x_sizes[cx] as f64;
            -p_xy * p_y_given_x.ln()
        })
        .sum();
    // -0.0 and tiny negative rounding are both clamped to zero
    Ok(h.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ViReport {
    pub vi: f64,
    #[serde(rename = "h_a_given_b")]
    pub h_c_given_cprime: f64,
    #[serde(rename = "h_b_given_a")]
    pub h_cprime_given_c: f64,
    pub n: usize,
    pub log_base: &'static str,
}

/// `VI(C, C') = H(C | C') + H(C' | C)`.
pub fn variation_of_information(c: &Partition, cprime: &Partition) -> Result<ViReport> {
    let h_c_given_cprime = conditional_entropy(c, cprime)?;
    let h_cprime_given_c = conditional_entropy(cprime, c)?;
    Ok(ViReport {
        vi: h_c_given_cprime + h_cprime_given_c,
        h_c_given_cprime,
        h_cprime_given_c,
        n: c.len(),
        log_base: LOG_BASE,
    })
}

/// Symmetric matrix of pairwise VI values between named partitions.
#[derive(Debug, Clone, PartialEq)]
pub struct ViMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl ViMatrix {
    /// Header row and first column carry the partition names.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![String::new()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header).map_err(csv_io)?;
        for (name, row) in self.names.iter().zip(&self.values) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_io)?;
        }
        w.flush().map_err(|e| Error::io("<vi matrix>", e))
    }
}

pub fn vi_matrix(partitions: &[(String, Partition)]) -> Result<ViMatrix> {
    if let Some((_, first)) = partitions.first() {
        for (name, p) in partitions {
            if p.len() != first.len() {
                return Err(Error::InvalidInput(format!(
                    "partition {name:?} covers {} items, expected {}",
                    p.len(),
                    first.len()
                )));
            }
        }
    }
    let k = partitions.len();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let computed: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| variation_of_information(&partitions[i].1, &partitions[j].1).map(|r| r.vi))
        .collect::<Result<_>>()?;
    let mut values = vec![vec![0.0; k]; k];
    for (&(i, j), v) in pairs.iter().zip(computed) {
        values[i][j] = v;
        values[j][i] = v;
    }
    Ok(ViMatrix {
        names: partitions.iter().map(|(n, _)| n.clone()).collect(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterStats {
    pub num_clusters: usize,
    pub min_size: usize,
    pub median_size: f64,
    pub mean_size: f64,
    pub max_size: usize,
    /// Fraction of clusters (not items) of size one, in [0, 1].
    pub pct_size_one: f64,
}

pub fn cluster_stats(p: &Partition) -> Result<ClusterStats> {
    let mut sizes = p.sizes();
    if sizes.is_empty() {
        return Err(Error::InvalidInput("partition has no clusters".into()));
    }
    sizes.sort_unstable();
    let k = sizes.len();
    let median_size = if k % 2 == 1 {
        sizes[k / 2] as f64
    } else {
        (sizes[k / 2 - 1] + sizes[k / 2]) as f64 / 2.0
    };
    Ok(ClusterStats {
        num_clusters: k,
        min_size: sizes[0],
        median_size,
        mean_size: p.len() as f64 / k as f64,
        max_size: sizes[k - 1],
        pct_size_one: sizes.iter().filter(|&&s| s == 1).count() as f64 / k as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapPair {
    pub cluster_p1: usize,
    pub cluster_p2: usize,
    pub intersection: usize,
    pub jaccard: f64,
    /// `|A ∩ B| / |A|` for `A` from the first partition.
    pub containment_p1_in_p2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapReport {
    pub threshold: f64,
    /// Every cluster pair with a non-empty intersection, ordered by `(p1, p2)`.
    pub pairs: Vec<OverlapPair>,
    /// The pair with the largest Jaccard index; earliest pair on ties.
    pub best: Option<OverlapPair>,
    /// Pairs whose containment reaches the threshold.
    pub contained: Vec<OverlapPair>,
}

impl OverlapReport {
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "cluster_p1",
            "cluster_p2",
            "intersection",
            "jaccard",
            "containment_p1_in_p2",
        ])
        .map_err(csv_io)?;
        for p in &self.pairs {
            w.write_record([
                p.cluster_p1.to_string(),
                p.cluster_p2.to_string(),
                p.intersection.to_string(),
                p.jaccard.to_string(),
                p.containment_p1_in_p2.to_string(),
            ])
            .map_err(csv_io)?;
        }
        w.flush().map_err(|e| Error::io("<overlap>", e))
    }
}

pub fn overlap_analysis(
    p1: &Partition,
    p2: &Partition,
    containment_threshold: f64,
) -> Result<OverlapReport> {
    check_same_len(p1, p2)?;
    if !(containment_threshold > 0.0 && containment_threshold <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "containment threshold must lie in (0, 1], got {containment_threshold}"
        )));
    }
    let s1 = p1.sizes();
    let s2 = p2.sizes();
    let pairs: Vec<OverlapPair> = joint_counts(p1, p2)
        .into_iter()
        .map(|((a, b), inter)| OverlapPair {
            cluster_p1: a,
            cluster_p2: b,
            intersection: inter,
            jaccard: inter as f64 / (s1[a] + s2[b] - inter) as f64,
            containment_p1_in_p2: inter as f64 / s1[a] as f64,
        })
        .collect();
    let best = pairs
        .iter()
        .fold(None::<&OverlapPair>, |best, p| match best {
            Some(b) if b.jaccard >= p.jaccard => Some(b),
            _ => Some(p),
        })
        .cloned();
    let contained = pairs
        .iter()
        .filter(|p| p.containment_p1_in_p2 >= containment_threshold)
        .cloned()
        .collect();
    Ok(OverlapReport {
        threshold: containment_threshold,
        pairs,
        best,
        contained,
    })
}

fn csv_io(e: csv::Error) -> Error {
    Error::InvalidInput(format!("csv output: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(labels: &[usize]) -> Partition {
        Partition::from_labels(labels)
    }

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn identical_partitions_have_zero_entropy() {
        let a = p(&[0, 0, 1, 2, 2]);
        assert_eq!(conditional_entropy(&a, &a).unwrap(), 0.0);
        assert_eq!(variation_of_information(&a, &a).unwrap().vi, 0.0);
    }

    #[test]
    fn crossing_example() {
        let x = p(&[0, 0, 1, 1]);
        let y = p(&[0, 1, 0, 1]);
        assert!((conditional_entropy(&y, &x).unwrap() - LN2).abs() < 1e-12);
        let r = variation_of_information(&x, &y).unwrap();
        assert!((r.vi - 2.0 * LN2).abs() < 1e-12);
        assert!((r.vi - 1.3863).abs() < 1e-4);
    }

    #[test]
    fn singletons_condition_everything_away() {
        let x = Partition::singletons(6);
        assert_eq!(conditional_entropy(&p(&[0, 1, 0, 1, 2, 2]), &x).unwrap(), 0.0);
    }

    #[test]
    fn singletons_versus_one_cluster_is_ln_n() {
        for n in [2, 5, 13, 50] {
            let r = variation_of_information(&Partition::singletons(n), &Partition::one_cluster(n))
                .unwrap();
            assert!((r.vi - (n as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn length_mismatch() {
        assert!(conditional_entropy(&p(&[0, 1]), &p(&[0])).is_err());
        assert!(variation_of_information(&p(&[0, 1]), &p(&[0])).is_err());
    }

    #[test]
    fn vi_matrix_shapes() {
        let a = p(&[0, 0, 1, 1]);
        let m = vi_matrix(&[("a".into(), a.clone())]).unwrap();
        assert_eq!(m.values, vec![vec![0.0]]);
        let m = vi_matrix(&[("a".into(), a.clone()), ("b".into(), a.clone())]).unwrap();
        assert_eq!(m.values, vec![vec![0.0; 2]; 2]);
        let err = vi_matrix(&[("a".into(), a), ("c".into(), p(&[0]))]);
        assert!(err.is_err());
    }

    #[test]
    fn vi_matrix_csv_layout() {
        let m = vi_matrix(&[
            ("a".into(), p(&[0, 0, 1, 1])),
            ("b".into(), p(&[0, 1, 0, 1])),
        ])
        .unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], ",a,b");
        assert!(lines[1].starts_with("a,0,1.386"));
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn stats_examples() {
        let s = cluster_stats(&Partition::singletons(10)).unwrap();
        assert_eq!((s.num_clusters, s.min_size, s.max_size), (10, 1, 1));
        assert_eq!(s.pct_size_one, 1.0);
        let s = cluster_stats(&Partition::one_cluster(7)).unwrap();
        assert_eq!((s.num_clusters, s.mean_size, s.pct_size_one), (1, 7.0, 0.0));
        let s = cluster_stats(&p(&[0, 0, 0, 1, 2, 2, 3, 3, 3, 3])).unwrap();
        assert_eq!(s.median_size, 2.5);
        assert_eq!(s.mean_size, 2.5);
    }

    #[test]
    fn overlap_subset_example() {
        // p1: {a,b,c}{d,e}; p2: {a,b,c,d}{e}
        let p1 = p(&[0, 0, 0, 1, 1]);
        let p2 = p(&[0, 0, 0, 0, 1]);
        let r = overlap_analysis(&p1, &p2, 1.0).unwrap();
        let abc = r
            .pairs
            .iter()
            .find(|x| x.cluster_p1 == 0 && x.cluster_p2 == 0)
            .unwrap();
        assert_eq!(abc.intersection, 3);
        assert_eq!(abc.containment_p1_in_p2, 1.0);
        assert_eq!(abc.jaccard, 0.75);
        assert_eq!(r.contained.len(), 1);
        assert_eq!(r.best.unwrap().jaccard, 0.75);
    }

    #[test]
    fn overlap_self_and_threshold() {
        let a = p(&[0, 0, 1, 2, 2, 2]);
        let r = overlap_analysis(&a, &a, 1.0).unwrap();
        assert_eq!(r.best.as_ref().unwrap().jaccard, 1.0);
        assert_eq!(r.contained.len(), 3);
        assert!(overlap_analysis(&a, &a, 0.0).is_err());
        assert!(overlap_analysis(&a, &a, 1.5).is_err());
        let crossing = overlap_analysis(&p(&[0, 0, 1, 1]), &p(&[0, 1, 0, 1]), 0.6).unwrap();
        assert!(crossing.contained.is_empty());
        let crossing = overlap_analysis(&p(&[0, 0, 1, 1]), &p(&[0, 1, 0, 1]), 0.5).unwrap();
        assert_eq!(crossing.contained.len(), 4);
    }

    fn partitions(n: usize, count: usize) -> impl Strategy<Value = Vec<Partition>> {
        prop::collection::vec(
            prop::collection::vec(0usize..8, n).prop_map(|l| Partition::from_labels(&l)),
            count,
        )
    }

    proptest! {
        #[test]
        fn intersections_sum_to_cluster_size(ps in (1usize..40).prop_flat_map(|n| partitions(n, 2))) {
            let r = overlap_analysis(&ps[0], &ps[1], 0.5).unwrap();
            let sizes = ps[0].sizes();
            for (c, &s) in sizes.iter().enumerate() {
                let total: usize = r.pairs.iter().filter(|x| x.cluster_p1 == c).map(|x| x.intersection).sum();
                prop_assert_eq!(total, s);
            }
            prop_assert!(r.pairs.iter().all(|x| (0.0..=1.0).contains(&x.jaccard)));
        }

        #[test]
        fn refinement_has_zero_coarse_entropy(labels in prop::collection::vec(0usize..6, 1..40), merge in 1usize..4) {
            let fine = Partition::from_labels(&labels);
            let coarse_labels: Vec<usize> = labels.iter().map(|l| l / merge).collect();
            let coarse = Partition::from_labels(&coarse_labels);
            prop_assert_eq!(conditional_entropy(&coarse, &fine).unwrap(), 0.0);
            prop_assert!(conditional_entropy(&fine, &coarse).unwrap() >= 0.0);
        }

        #[test]
        fn stats_mean_is_n_over_k(labels in prop::collection::vec(0usize..20, 1..100)) {
            let p = Partition::from_labels(&labels);
            let s = cluster_stats(&p).unwrap();
            prop_assert_eq!(s.mean_size, labels.len() as f64 / s.num_clusters as f64);
            prop_assert!(s.min_size >= 1);
        }
    }
}
