//! Calibration-term sweep against ground-truth classes.
//!
//! For each grid value the calibrated graph is rebuilt from one shared
//! similarity matrix, clustered, and scored with `H(class | cluster)` and
//! `H(cluster | class)`. The selected term is the one whose two entropies are
//! closest to balanced.

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::embedspace::{cosine_similarities, EmbeddingMatrix, SimilarityMatrix};
use crate::error::{Error, Result};
use crate::graphbuild::{build_graph, BiasSign, CalibrationTerm};
use crate::metrics::{conditional_entropy, LOG_BASE};
use crate::multicut::{solve, Partition, SolveMode};
use crate::tables::read_id_table;

/// Class label per item.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    items: Vec<String>,
    labels: Vec<String>,
}

impl LabeledDataset {
    pub fn new(items: Vec<String>, labels: Vec<String>) -> Result<Self> {
        if items.len() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: items.len(),
                actual: labels.len(),
            });
        }
        let mut seen = HashSet::new();
        if let Some(dup) = items.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(Error::InvalidInput(format!(
                "item {dup:?} is labeled more than once"
            )));
        }
        Ok(Self { items, labels })
    }

    /// Reads an `id,label` CSV.
    pub fn load(path: &Path) -> Result<Self> {
        let (items, labels) = read_id_table(path, "label")?.into_iter().unzip();
        Self::new(items, labels)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.labels.iter().collect::<HashSet<_>>().len()
    }

    /// Class partition over `items`, in that order. Fails naming the items
    /// that carry no label.
    pub fn align(&self, items: &[String]) -> Result<Partition> {
        let index: HashMap<&str, &str> = self
            .items
            .iter()
            .zip(&self.labels)
            .map(|(i, l)| (i.as_str(), l.as_str()))
            .collect();
        let mut missing = Vec::new();
        let labels: Vec<&str> = items
            .iter()
            .map(|id| {
                index.get(id.as_str()).copied().unwrap_or_else(|| {
                    missing.push(id.as_str());
                    ""
                })
            })
            .collect();
        if !missing.is_empty() {
            const SHOWN: usize = 5;
            let more = missing.len().saturating_sub(SHOWN);
            let mut msg = format!(
                "{} item(s) have no label: {}",
                missing.len(),
                missing[..missing.len().min(SHOWN)].join(", ")
            );
            if more > 0 {
                msg.push_str(&format!(" and {more} more"));
            }
            return Err(Error::InvalidInput(msg));
        }
        Ok(Partition::from_labels(&labels))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationRun {
    pub cal: f64,
    pub h_class_given_cluster: f64,
    pub h_cluster_given_class: f64,
    /// `|H(class | cluster) - H(cluster | class)|`.
    pub delta: f64,
    pub vi: f64,
    pub num_clusters: usize,
    pub cost: f64,
}

/// Parses `lo:hi:step` into the inclusive grid `lo, lo+step, ..., hi`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::InvalidInput(format!("grid {spec:?} is not of the form lo:hi:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidInput(format!(
            "grid step must be positive, got {step}"
        )));
    }
    if hi < lo {
        return Err(Error::InvalidInput(format!("grid upper bound {hi} < lower bound {lo}")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    // round away accumulated binary noise such as 0.30000000000000004
    let grid: Vec<f64> = (0..count)
        .map(|i| ((lo + i as f64 * step) * 1e9).round() / 1e9)
        .collect();
    for &v in &grid {
        CalibrationTerm::new(v)?;
    }
    Ok(grid)
}

/// `0.1, 0.2, ..., 0.9`.
pub fn default_grid() -> Vec<f64> {
    parse_grid("0.1:0.9:0.1").expect("valid default grid")
}

/// Clusters one calibrated graph and scores it against `classes`.
pub fn run_on_similarity(
    sim: &SimilarityMatrix,
    classes: &Partition,
    cal: CalibrationTerm,
    mode: SolveMode,
    sign: BiasSign,
) -> Result<CalibrationRun> {
    let graph = build_graph(sim, cal, sign)?;
    let report = solve(&graph, mode);
    let h_class_given_cluster = conditional_entropy(classes, &report.partition)?;
    let h_cluster_given_class = conditional_entropy(&report.partition, classes)?;
    Ok(CalibrationRun {
        cal: cal.value(),
        h_class_given_cluster,
        h_cluster_given_class,
        delta: (h_class_given_cluster - h_cluster_given_class).abs(),
        vi: h_class_given_cluster + h_cluster_given_class,
        num_clusters: report.num_clusters,
        cost: report.cost,
    })
}

/// One run per grid value; the similarity matrix is computed once and shared.
pub fn ablate(
    emb: &EmbeddingMatrix,
    labels: &LabeledDataset,
    grid: &[f64],
    mode: SolveMode,
    sign: BiasSign,
) -> Result<Vec<CalibrationRun>> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("calibration grid is empty".into()));
    }
    let cals: Vec<CalibrationTerm> = grid
        .iter()
        .map(|&v| CalibrationTerm::new(v))
        .collect::<Result<_>>()?;
    let classes = labels.align(emb.items())?;
    let sim = cosine_similarities(emb);
    cals.par_iter()
        .map(|&cal| run_on_similarity(&sim, &classes, cal, mode, sign))
        .collect()
}

/// Run with the smallest `delta`; ties go to the lower VI, then the lower term.
pub fn select_cal(runs: &[CalibrationRun]) -> Result<CalibrationRun> {
    runs.iter()
        .min_by(|a, b| {
            a.delta
                .total_cmp(&b.delta)
                .then(a.vi.total_cmp(&b.vi))
                .then(a.cal.total_cmp(&b.cal))
        })
        .cloned()
        .ok_or_else(|| Error::InvalidInput("no calibration runs to select from".into()))
}

/// Scores a chosen term on held-out data.
pub fn validate_cal(
    emb_val: &EmbeddingMatrix,
    labels_val: &LabeledDataset,
    cal: CalibrationTerm,
    mode: SolveMode,
    sign: BiasSign,
) -> Result<CalibrationRun> {
    if labels_val.is_empty() {
        return Err(Error::InvalidInput("validation set is empty".into()));
    }
    let classes = labels_val.align(emb_val.items())?;
    let sim = cosine_similarities(emb_val);
    run_on_similarity(&sim, &classes, cal, mode, sign)
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationSummary {
    pub selected_cal: f64,
    pub solver: &'static str,
    pub bias_sign: BiasSign,
    pub grid: Vec<f64>,
    pub train: CalibrationRun,
    pub validation: Option<CalibrationRun>,
    pub log_base: &'static str,
}

impl CalibrationSummary {
    pub fn new(
        selected: CalibrationRun,
        validation: Option<CalibrationRun>,
        grid: Vec<f64>,
        mode: SolveMode,
        sign: BiasSign,
    ) -> Self {
        Self {
            selected_cal: selected.cal,
            solver: match mode {
                SolveMode::Gaec => "gaec",
                SolveMode::GaecKl => "gaec-kl",
            },
            bias_sign: sign,
            grid,
            train: selected,
            validation,
            log_base: LOG_BASE,
        }
    }
}

/// `cal,h_class_given_cluster,h_cluster_given_class,delta,vi,num_clusters,cost`.
pub fn write_ablation_csv(out: impl Write, runs: &[CalibrationRun]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::InvalidInput(format!("csv output: {e}"));
    for run in runs {
        w.serialize(run).map_err(io)?;
    }
    if runs.is_empty() {
        w.write_record([
            "cal",
            "h_class_given_cluster",
            "h_cluster_given_class",
            "delta",
            "vi",
            "num_clusters",
            "cost",
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::io("<ablation>", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_blobs, BlobSpec};

    fn run(cal: f64, delta: f64, vi: f64) -> CalibrationRun {
        CalibrationRun {
            cal,
            h_class_given_cluster: 0.0,
            h_cluster_given_class: 0.0,
            delta,
            vi,
            num_clusters: 1,
            cost: 0.0,
        }
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(default_grid().len(), 9);
        assert_eq!(default_grid()[2], 0.3);
        assert_eq!(parse_grid("0.4:0.6:0.1").unwrap(), vec![0.4, 0.5, 0.6]);
        assert!(parse_grid("0.1:0.9:0").is_err());
        assert!(parse_grid("0.0:0.5:0.1").is_err());
        assert!(parse_grid("0.1:0.9").is_err());
        assert!(parse_grid("0.5:0.4:0.1").is_err());
    }

    #[test]
    fn selection_rules() {
        let runs = vec![run(0.5, 0.40, 1.0), run(0.6, 0.02, 1.0), run(0.7, 0.19, 1.0)];
        assert_eq!(select_cal(&runs).unwrap().cal, 0.6);
        assert_eq!(select_cal(&runs[..1]).unwrap(), runs[0]);
        let tied = vec![run(0.3, 0.1, 0.9), run(0.4, 0.1, 0.3)];
        assert_eq!(select_cal(&tied).unwrap().cal, 0.4);
        let tied = vec![run(0.4, 0.1, 0.3), run(0.3, 0.1, 0.3)];
        assert_eq!(select_cal(&tied).unwrap().cal, 0.3);
        assert!(select_cal(&[]).is_err());
    }

    #[test]
    fn selection_ignores_run_order() {
        let mut runs = vec![
            run(0.1, 0.3, 2.0),
            run(0.2, 0.05, 0.7),
            run(0.3, 0.05, 0.4),
            run(0.4, 0.05, 0.4),
        ];
        let first = select_cal(&runs).unwrap();
        runs.reverse();
        assert_eq!(select_cal(&runs).unwrap(), first);
        assert_eq!(first.cal, 0.3);
    }

    fn small_blobs(seed: u64) -> (EmbeddingMatrix, LabeledDataset) {
        let b = generate_blobs(&BlobSpec {
            points: 60,
            seed,
            ..BlobSpec::default()
        })
        .unwrap();
        (b.embeddings().unwrap(), b.labels())
    }

    #[test]
    fn ablation_runs_decompose() {
        let (emb, labels) = small_blobs(1);
        let runs = ablate(&emb, &labels, &default_grid(), SolveMode::GaecKl, BiasSign::Paper)
            .unwrap();
        assert_eq!(runs.len(), 9);
        for r in &runs {
            assert!((r.vi - (r.h_class_given_cluster + r.h_cluster_given_class)).abs() < 1e-9);
        }
        let mid = runs.iter().find(|r| r.cal == 0.5).unwrap();
        assert!(mid.vi < 1e-9);
        assert_eq!(mid.num_clusters, 3);
    }

    #[test]
    fn shared_similarity_matches_per_point_recomputation() {
        let (emb, labels) = small_blobs(2);
        let grid = [0.2, 0.5, 0.8];
        let shared = ablate(&emb, &labels, &grid, SolveMode::GaecKl, BiasSign::Paper).unwrap();
        let classes = labels.align(emb.items()).unwrap();
        for (r, &c) in shared.iter().zip(&grid) {
            let fresh = run_on_similarity(
                &cosine_similarities(&emb),
                &classes,
                CalibrationTerm::new(c).unwrap(),
                SolveMode::GaecKl,
                BiasSign::Paper,
            )
            .unwrap();
            assert_eq!(r.vi.to_bits(), fresh.vi.to_bits());
            assert_eq!(r.cost.to_bits(), fresh.cost.to_bits());
        }
    }

    #[test]
    fn grid_outside_open_interval_rejected() {
        let (emb, labels) = small_blobs(3);
        let err = ablate(&emb, &labels, &[0.0, 0.5], SolveMode::Gaec, BiasSign::Paper);
        assert!(matches!(err, Err(Error::CalibrationOutOfRange(_))));
    }

    #[test]
    fn missing_labels_are_named() {
        let (emb, _) = small_blobs(4);
        let partial = LabeledDataset::new(
            emb.items()[1..].to_vec(),
            vec!["x".to_string(); emb.len() - 1],
        )
        .unwrap();
        let msg = ablate(&emb, &partial, &[0.5], SolveMode::Gaec, BiasSign::Paper)
            .unwrap_err()
            .to_string();
        assert!(msg.contains("p00"), "{msg}");
    }

    #[test]
    fn empty_validation_set_rejected() {
        let (emb, _) = small_blobs(5);
        let empty = LabeledDataset::new(vec![], vec![]).unwrap();
        let cal = CalibrationTerm::new(0.5).unwrap();
        assert!(validate_cal(&emb, &empty, cal, SolveMode::GaecKl, BiasSign::Paper).is_err());
    }

    #[test]
    fn validation_prefers_selected_over_extreme() {
        let (emb, labels) = small_blobs(6);
        let (val, val_labels) = small_blobs(7);
        let runs = ablate(&emb, &labels, &default_grid(), SolveMode::GaecKl, BiasSign::Paper)
            .unwrap();
        let chosen = select_cal(&runs).unwrap();
        let good = validate_cal(
            &val,
            &val_labels,
            CalibrationTerm::new(chosen.cal).unwrap(),
            SolveMode::GaecKl,
            BiasSign::Paper,
        )
        .unwrap();
        let extreme = validate_cal(
            &val,
            &val_labels,
            CalibrationTerm::new(0.99).unwrap(),
            SolveMode::GaecKl,
            BiasSign::Paper,
        )
        .unwrap();
        assert!(good.vi < 1e-9, "{good:?}");
        assert!(extreme.vi > good.vi);
    }

    #[test]
    fn ablation_csv_header() {
        let mut buf = Vec::new();
        write_ablation_csv(&mut buf, &[run(0.5, 0.1, 0.2)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "cal,h_class_given_cluster,h_cluster_given_class,delta,vi,num_clusters,cost\n0.5,"
        ));
    }
}
