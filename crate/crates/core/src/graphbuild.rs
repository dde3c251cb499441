//! Complete weighted graphs with calibrated log-odds edge costs.
//!
//! Similarities are min-max scaled to `[0, 1]` over all distinct pairs, clamped
//! away from the endpoints and mapped through
//! `w = ln(s / (1 - s)) + ln((1 - cal) / cal)`. An edge is attractive
//! (positive) exactly when the scaled similarity exceeds `cal`.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::embedspace::SimilarityMatrix;
use crate::error::{Error, Result};
use crate::triangle;

/// Clamp applied to scaled similarities before the logit.
pub const CLAMP_EPS: f64 = 1e-6;

/// Calibration term, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct CalibrationTerm(f64);

impl CalibrationTerm {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::CalibrationOutOfRange(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `ln((1 - cal) / cal)`.
    pub fn log_odds_bias(self) -> f64 {
        ((1.0 - self.0) / self.0).ln()
    }
}

impl fmt::Display for CalibrationTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Which sign the calibration bias enters the weight with.
///
/// `Paper` adds `ln((1 - cal) / cal)`, putting the decision boundary at
/// `s' = cal`. `Flipped` subtracts it, moving the boundary to `s' = 1 - cal`
/// so that a larger `cal` yields more positive edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BiasSign {
    #[default]
    Paper,
    Flipped,
}

impl FromStr for BiasSign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(BiasSign::Paper),
            "flipped" => Ok(BiasSign::Flipped),
            other => Err(Error::InvalidInput(format!(
                "unknown bias sign {other:?} (expected paper or flipped)"
            ))),
        }
    }
}

/// Log-odds edge cost of a scaled similarity.
pub fn edge_weight(scaled: f64, cal: CalibrationTerm, sign: BiasSign) -> f64 {
    let s = scaled.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS);
    let bias = match sign {
        BiasSign::Paper => cal.log_odds_bias(),
        BiasSign::Flipped => -cal.log_odds_bias(),
    };
    (s / (1.0 - s)).ln() + bias
}

/// Extremes of the off-diagonal similarities used for min-max scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinMax {
    pub min: f64,
    pub max: f64,
}

impl MinMax {
    pub fn of(sim: &SimilarityMatrix) -> Result<Self> {
        if sim.len() < 2 {
            return Err(Error::InvalidInput(
                "min-max scaling needs at least two items".into(),
            ));
        }
        let (min, max) = sim
            .upper()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(f64::from(v)), hi.max(f64::from(v)))
            });
        if max <= min {
            return Err(Error::DegenerateSimilarities(min));
        }
        Ok(Self { min, max })
    }

    #[inline]
    pub fn apply(&self, s: f64) -> f64 {
        (s - self.min) / (self.max - self.min)
    }
}

/// Scaled off-diagonal similarities in triangle storage order.
pub fn minmax_normalize(sim: &SimilarityMatrix) -> Result<(Vec<f64>, MinMax)> {
    let mm = MinMax::of(sim)?;
    let scaled = sim.upper().iter().map(|&v| mm.apply(f64::from(v))).collect();
    Ok((scaled, mm))
}

/// Complete undirected graph with one real cost per distinct node pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    n: usize,
    weights: Vec<f64>,
    cal: Option<CalibrationTerm>,
    norm: Option<MinMax>,
}

impl SimilarityGraph {
    /// Builds a graph directly from triangle-ordered weights.
    pub fn from_weights(n: usize, weights: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("graph has no nodes".into()));
        }
        if weights.len() != triangle::pair_count(n) {
            return Err(Error::LengthMismatch {
                expected: triangle::pair_count(n),
                actual: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidInput("edge weights must be finite".into()));
        }
        Ok(Self {
            n,
            weights,
            cal: None,
            norm: None,
        })
    }

    /// Builds a graph over nodes `0..n` from `(u, v, w)` triples. Pairs not
    /// listed get weight zero.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut weights = vec![0.0; triangle::pair_count(n)];
        let mut set = vec![false; weights.len()];
        for &(u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            if u == v {
                return Err(Error::InvalidInput(format!("self-loop on node {u}")));
            }
            let k = triangle::pair_offset(n, u, v);
            if std::mem::replace(&mut set[k], true) {
                return Err(Error::InvalidInput(format!("edge ({u}, {v}) listed twice")));
            }
            weights[k] = w;
        }
        Self::from_weights(n, weights)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn weight(&self, u: usize, v: usize) -> f64 {
        self.weights[triangle::pair_offset(self.n, u, v)]
    }

    /// Weights in triangle storage order.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn calibration(&self) -> Option<CalibrationTerm> {
        self.cal
    }

    pub fn normalization(&self) -> Option<MinMax> {
        self.norm
    }

    /// Permutes node labels: node `i` of `self` becomes node `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        let mut weights = vec![0.0; self.weights.len()];
        for (i, j) in triangle::pairs(self.n) {
            weights[triangle::pair_offset(self.n, perm[i], perm[j])] = self.weight(i, j);
        }
        Self {
            weights,
            ..self.clone()
        }
    }
}

/// Calibrated log-odds graph over the similarity matrix.
pub fn build_graph(
    sim: &SimilarityMatrix,
    cal: CalibrationTerm,
    sign: BiasSign,
) -> Result<SimilarityGraph> {
    let mm = MinMax::of(sim)?;
    let weights = sim
        .upper()
        .par_iter()
        .map(|&v| edge_weight(mm.apply(f64::from(v)), cal, sign))
        .collect();
    Ok(SimilarityGraph {
        n: sim.len(),
        weights,
        cal: Some(cal),
        norm: Some(mm),
    })
}

/// Parses the `u v w` edge-list format. `#` starts a comment line; blank lines
/// are skipped. The node count is one more than the largest index.
pub fn parse_edge_list(text: &str, origin: &Path) -> Result<SimilarityGraph> {
    let mut edges = Vec::new();
    let mut n = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = format!("line {}", lineno + 1);
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::parse(origin, at, "expected `u v w`"));
        }
        let u: usize = fields[0]
            .parse()
            .map_err(|_| Error::parse(origin, &at, format!("bad node index {:?}", fields[0])))?;
        let v: usize = fields[1]
            .parse()
            .map_err(|_| Error::parse(origin, &at, format!("bad node index {:?}", fields[1])))?;
        let w: f64 = fields[2]
            .parse()
            .map_err(|_| Error::parse(origin, &at, format!("bad weight {:?}", fields[2])))?;
        if !w.is_finite() {
            return Err(Error::parse(origin, &at, "weight must be finite"));
        }
        if u == v {
            return Err(Error::parse(origin, &at, "self-loops are not allowed"));
        }
        n = n.max(u + 1).max(v + 1);
        edges.push((u, v, w));
    }
    if edges.is_empty() {
        return Err(Error::parse(origin, "end of file", "edge list is empty"));
    }
    SimilarityGraph::from_edges(n, &edges).map_err(|e| Error::parse(origin, "edges", e.to_string()))
}

pub fn load_edge_list(path: &Path) -> Result<SimilarityGraph> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cal(v: f64) -> CalibrationTerm {
        CalibrationTerm::new(v).unwrap()
    }

    #[test]
    fn calibration_range() {
        assert!(CalibrationTerm::new(0.0).is_err());
        assert!(CalibrationTerm::new(1.0).is_err());
        assert!(CalibrationTerm::new(1.5).is_err());
        assert!(CalibrationTerm::new(f64::NAN).is_err());
        assert!(CalibrationTerm::new(0.3).is_ok());
    }

    #[test]
    fn minmax_examples() {
        let s = SimilarityMatrix::from_upper(3, vec![-0.5, 0.0, 0.5]).unwrap();
        let (v, mm) = minmax_normalize(&s).unwrap();
        assert_eq!(v, vec![0.0, 0.5, 1.0]);
        assert_eq!((mm.min, mm.max), (-0.5, 0.5));

        let s = SimilarityMatrix::from_upper(3, vec![0.3; 3]).unwrap();
        assert!(matches!(
            minmax_normalize(&s),
            Err(Error::DegenerateSimilarities(_))
        ));
    }

    #[test]
    fn minmax_two_points() {
        let s = SimilarityMatrix::from_upper(3, vec![0.2, 0.6, 0.2]).unwrap();
        let (v, _) = minmax_normalize(&s).unwrap();
        assert_eq!(v, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn weight_examples() {
        assert_eq!(edge_weight(0.5, cal(0.5), BiasSign::Paper), 0.0);
        assert!((edge_weight(0.8, cal(0.5), BiasSign::Paper) - 4f64.ln()).abs() < 1e-12);
        let w = edge_weight(0.5, cal(0.7), BiasSign::Paper);
        assert!((w - (0.3f64 / 0.7).ln()).abs() < 1e-12);
        assert!((w + 0.8473).abs() < 1e-4);
    }

    #[test]
    fn flipped_sign_moves_boundary() {
        let c = cal(0.7);
        assert!(edge_weight(0.3, c, BiasSign::Flipped).abs() < 1e-12);
        assert!(edge_weight(0.5, c, BiasSign::Flipped) > 0.0);
        assert!(edge_weight(0.5, c, BiasSign::Paper) < 0.0);
    }

    #[test]
    fn graph_endpoints_are_finite() {
        let s = SimilarityMatrix::from_upper(3, vec![-1.0, 0.0, 1.0]).unwrap();
        let g = build_graph(&s, cal(0.5), BiasSign::Paper).unwrap();
        let bound = ((1.0 - CLAMP_EPS) / CLAMP_EPS).ln();
        assert!((g.weight(0, 1) + bound).abs() < 1e-9);
        assert!((g.weight(1, 2) - bound).abs() < 1e-9);
        assert_eq!(g.weight(0, 2), 0.0);
        assert_eq!(g.calibration(), Some(cal(0.5)));
    }

    #[test]
    fn edge_list_parsing() {
        let g = parse_edge_list("# tri\n0 1 2\n0 2 1\n\n1 2 -3\n", Path::new("t")).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.weight(2, 1), -3.0);
        assert!(parse_edge_list("# nothing\n", Path::new("t")).is_err());
        assert!(parse_edge_list("0 1\n", Path::new("t"))
            .unwrap_err()
            .to_string()
            .contains("line 1"));
        assert!(parse_edge_list("0 1 1\n1 0 2\n", Path::new("t")).is_err());
        assert!(parse_edge_list("1 1 1\n", Path::new("t")).is_err());
    }

    proptest! {
        #[test]
        fn sign_matches_boundary(s in CLAMP_EPS..(1.0 - CLAMP_EPS), c in 0.001f64..0.999) {
            prop_assume!((s - c).abs() > 1e-12);
            let w = edge_weight(s, cal(c), BiasSign::Paper);
            prop_assert_eq!(w > 0.0, s > c);
            prop_assert!(edge_weight(c, cal(c), BiasSign::Paper).abs() < 1e-12);
        }

        #[test]
        fn strictly_increasing(a in CLAMP_EPS..(1.0 - CLAMP_EPS), b in CLAMP_EPS..(1.0 - CLAMP_EPS), c in 0.01f64..0.99) {
            prop_assume!(b - a > 1e-9);
            prop_assert!(edge_weight(a, cal(c), BiasSign::Paper) < edge_weight(b, cal(c), BiasSign::Paper));
        }

        #[test]
        fn clamped_weights_are_bounded(s in -0.5f64..1.5, c in 0.01f64..0.99) {
            let bound = ((1.0 - CLAMP_EPS) / CLAMP_EPS).ln() + cal(c).log_odds_bias().abs();
            prop_assert!(edge_weight(s, cal(c), BiasSign::Paper).abs() <= bound + 1e-12);
        }
    }
}
