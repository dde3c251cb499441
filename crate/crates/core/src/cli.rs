//! Command-line front end.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::calibrate::{
    ablate, parse_grid, select_cal, validate_cal, write_ablation_csv, CalibrationSummary,
    LabeledDataset,
};
use crate::embedspace::{
    cosine_similarities, distribution_stats, load_embeddings, write_csv, write_emb1,
    EmbeddingFormat, EmbeddingMatrix,
};
use crate::error::{Error, Result};
use crate::graphbuild::{build_graph, load_edge_list, BiasSign, CalibrationTerm};
use crate::metrics::{cluster_stats, overlap_analysis, variation_of_information, vi_matrix};
use crate::multicut::{cost, solve, solve_exact, SolveMode, SolveReport};
use crate::synth::{generate_blobs, BlobSpec};
use crate::tables::{embedding_format, write_clustering, Clustering};

#[derive(Debug, Parser)]
#[command(name = "framecut", version, about = "Minimum cost multicut clustering of embeddings")]
pub struct Cli {
    /// Worker threads for similarity computation and calibration sweeps.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Binary,
    Csv,
}

impl From<FormatArg> for EmbeddingFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Binary => EmbeddingFormat::Binary,
            FormatArg::Csv => EmbeddingFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SolverArg {
    Gaec,
    GaecKl,
}

impl From<SolverArg> for SolveMode {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Gaec => SolveMode::Gaec,
            SolverArg::GaecKl => SolveMode::GaecKl,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BiasArg {
    Paper,
    Flipped,
}

impl From<BiasArg> for BiasSign {
    fn from(b: BiasArg) -> Self {
        match b {
            BiasArg::Paper => BiasSign::Paper,
            BiasArg::Flipped => BiasSign::Flipped,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster an embedding file; writes `<prefix>.clusters.csv` and `<prefix>.report.json`.
    Cluster {
        embeddings: PathBuf,
        #[arg(long)]
        format: Option<FormatArg>,
        #[arg(long, default_value_t = 0.5)]
        cal: f64,
        #[arg(long, value_enum, default_value = "gaec-kl")]
        solver: SolverArg,
        #[arg(long, value_enum, default_value = "paper")]
        bias_sign: BiasArg,
        #[arg(long)]
        out_prefix: PathBuf,
    },
    /// Sweep the calibration term against class labels; writes
    /// `<prefix>.ablation.csv` and `<prefix>.selection.json`.
    Calibrate {
        embeddings: PathBuf,
        labels: PathBuf,
        #[arg(long)]
        format: Option<FormatArg>,
        #[arg(long, default_value = "0.1:0.9:0.1")]
        grid: String,
        #[arg(long, value_enum, default_value = "gaec-kl")]
        solver: SolverArg,
        #[arg(long, value_enum, default_value = "paper")]
        bias_sign: BiasArg,
        /// Held-out embeddings scored at the selected term.
        #[arg(long, requires = "val_labels")]
        val_embeddings: Option<PathBuf>,
        #[arg(long, requires = "val_embeddings")]
        val_labels: Option<PathBuf>,
        #[arg(long)]
        out_prefix: PathBuf,
    },
    /// Variation of information between two clusterings, printed as JSON.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Write the cluster overlap table here.
        #[arg(long)]
        overlap: Option<PathBuf>,
        /// Minimum |A ∩ B| / |A| for A to count as contained in B.
        #[arg(long, default_value_t = 1.0)]
        threshold: f64,
    },
    /// Pairwise VI matrix over several clusterings, as CSV.
    ViMatrix {
        #[arg(required = true, num_args = 1..)]
        clusterings: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cluster-size statistics of a clustering, printed as JSON.
    Stats { clustering: PathBuf },
    /// Compare a heuristic against exhaustive search on a small edge list.
    Oracle {
        edge_list: PathBuf,
        #[arg(long, value_enum, default_value = "gaec-kl")]
        heuristic: SolverArg,
    },
    /// Cosine-similarity distribution of an embedding file, printed as JSON.
    SimilarityStats {
        embeddings: PathBuf,
        #[arg(long)]
        format: Option<FormatArg>,
        #[arg(long, default_value_t = 40)]
        bins: usize,
    },
    /// Write a seeded Gaussian blob fixture plus its `id,label` file.
    Blobs {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        labels_out: PathBuf,
        #[arg(long, default_value_t = 300)]
        points: usize,
        #[arg(long, default_value_t = 3)]
        blobs: usize,
        #[arg(long, default_value_t = 16)]
        dim: usize,
        #[arg(long, default_value_t = 0.5)]
        noise: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| Error::InvalidInput(format!("json output: {e}")))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn print_json(out: &mut impl Write, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)
        .map_err(|e| Error::InvalidInput(format!("json output: {e}")))?;
    writeln!(out).map_err(|e| Error::io("<stdout>", e))
}

fn load(path: &Path, format: Option<FormatArg>) -> Result<EmbeddingMatrix> {
    load_embeddings(path, embedding_format(path, format.map(Into::into)))
}

fn check_report(graph: &crate::graphbuild::SimilarityGraph, report: &SolveReport) -> Result<()> {
    let recomputed = cost(graph, &report.partition)?;
    if (recomputed - report.cost).abs() > 1e-6 * recomputed.abs().max(1.0) {
        return Err(Error::Invariant(format!(
            "reported cost {} differs from recomputed {recomputed}",
            report.cost
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct OracleReport {
    n: usize,
    heuristic: &'static str,
    exact_cost: f64,
    heuristic_cost: f64,
    gap: f64,
    exact_clusters: usize,
    heuristic_clusters: usize,
}

/// Runs one command, writing human-facing output to `out`.
pub fn run(cli: Cli, out: &mut impl Write) -> Result<()> {
    if let Some(threads) = cli.threads {
        // a pool may already exist when run is called repeatedly in-process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global();
    }
    match cli.command {
        Command::Cluster {
            embeddings,
            format,
            cal,
            solver,
            bias_sign,
            out_prefix,
        } => {
            let cal = CalibrationTerm::new(cal)?;
            let emb = load(&embeddings, format)?;
            let sim = cosine_similarities(&emb);
            let graph = build_graph(&sim, cal, bias_sign.into())?;
            let report = solve(&graph, solver.into());
            check_report(&graph, &report)?;
            let clusters_path = with_suffix(&out_prefix, ".clusters.csv");
            let mut w = create(&clusters_path)?;
            write_clustering(&mut w, emb.items(), &report.partition)?;
            w.flush().map_err(|e| Error::io(&clusters_path, e))?;
            write_json(&with_suffix(&out_prefix, ".report.json"), &report)?;
            print_json(out, &report)
        }
        Command::Calibrate {
            embeddings,
            labels,
            format,
            grid,
            solver,
            bias_sign,
            val_embeddings,
            val_labels,
            out_prefix,
        } => {
            let grid = parse_grid(&grid)?;
            let emb = load(&embeddings, format)?;
            let labels = LabeledDataset::load(&labels)?;
            let (mode, sign) = (solver.into(), bias_sign.into());
            let runs = ablate(&emb, &labels, &grid, mode, sign)?;
            let selected = select_cal(&runs)?;
            let validation = match (val_embeddings, val_labels) {
                (Some(e), Some(l)) => {
                    let emb_val = load(&e, format)?;
                    let labels_val = LabeledDataset::load(&l)?;
                    let cal = CalibrationTerm::new(selected.cal)?;
                    Some(validate_cal(&emb_val, &labels_val, cal, mode, sign)?)
                }
                _ => None,
            };
            let ablation_path = with_suffix(&out_prefix, ".ablation.csv");
            let mut w = create(&ablation_path)?;
            write_ablation_csv(&mut w, &runs)?;
            w.flush().map_err(|e| Error::io(&ablation_path, e))?;
            let summary = CalibrationSummary::new(selected, validation, grid, mode, sign);
            write_json(&with_suffix(&out_prefix, ".selection.json"), &summary)?;
            print_json(out, &summary)
        }
        Command::Compare {
            a,
            b,
            overlap,
            threshold,
        } => {
            let ca = Clustering::load(&a)?;
            let cb = Clustering::load(&b)?;
            let pb = ca.align(&cb)?;
            let report = variation_of_information(&ca.partition, &pb)?;
            let overlap_report = overlap_analysis(&ca.partition, &pb, threshold)?;
            if let Some(path) = overlap {
                let mut w = create(&path)?;
                overlap_report.write_csv(&mut w)?;
                w.flush().map_err(|e| Error::io(&path, e))?;
            }
            print_json(out, &report)
        }
        Command::ViMatrix { clusterings, out: dest } => {
            let first = Clustering::load(&clusterings[0])?;
            let mut named = Vec::with_capacity(clusterings.len());
            for path in &clusterings {
                let c = Clustering::load(path)?;
                let name = path
                    .file_stem()
                    .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
                named.push((name, first.align(&c)?));
            }
            let matrix = vi_matrix(&named)?;
            match dest {
                Some(path) => {
                    let mut w = create(&path)?;
                    matrix.write_csv(&mut w)?;
                    w.flush().map_err(|e| Error::io(&path, e))
                }
                None => matrix.write_csv(out),
            }
        }
        Command::Stats { clustering } => {
            let c = Clustering::load(&clustering)?;
            print_json(out, &cluster_stats(&c.partition)?)
        }
        Command::Oracle {
            edge_list,
            heuristic,
        } => {
            let graph = load_edge_list(&edge_list)?;
            let exact = solve_exact(&graph)?;
            let mode: SolveMode = heuristic.into();
            let heur = solve(&graph, mode);
            check_report(&graph, &heur)?;
            if heur.cost < exact.cost - 1e-9 * exact.cost.abs().max(1.0) {
                return Err(Error::Invariant(format!(
                    "heuristic cost {} below exhaustive minimum {}",
                    heur.cost, exact.cost
                )));
            }
            print_json(
                out,
                &OracleReport {
                    n: graph.len(),
                    heuristic: heur.solver.name(),
                    exact_cost: exact.cost,
                    heuristic_cost: heur.cost,
                    gap: heur.cost - exact.cost,
                    exact_clusters: exact.num_clusters,
                    heuristic_clusters: heur.num_clusters,
                },
            )
        }
        Command::SimilarityStats {
            embeddings,
            format,
            bins,
        } => {
            let emb = load(&embeddings, format)?;
            let stats = distribution_stats(&cosine_similarities(&emb), bins)?;
            print_json(out, &stats)
        }
        Command::Blobs {
            out: dest,
            labels_out,
            points,
            blobs,
            dim,
            noise,
            seed,
        } => {
            let spec = BlobSpec {
                points,
                blobs,
                dim,
                noise_std: noise,
                seed,
                ..BlobSpec::default()
            };
            let data = generate_blobs(&spec)?;
            match EmbeddingFormat::from_path(&dest) {
                EmbeddingFormat::Csv => write_csv(&dest, &data.items, &data.vectors)?,
                EmbeddingFormat::Binary => write_emb1(&dest, &data.items, &data.vectors)?,
            }
            let mut w = create(&labels_out)?;
            writeln!(w, "id,label").map_err(|e| Error::io(&labels_out, e))?;
            for (id, class) in data.items.iter().zip(&data.classes) {
                writeln!(w, "{id},blob{class}").map_err(|e| Error::io(&labels_out, e))?;
            }
            w.flush().map_err(|e| Error::io(&labels_out, e))?;
            writeln!(out, "wrote {} points to {}", data.items.len(), dest.display())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}
