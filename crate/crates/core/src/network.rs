//! Thresholded information-flow graphs and the polarity/return out-degree
//! balance as a function of the threshold.

use std::io::Write;

use ndarray::Array2;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeClass {
    Return,
    Polarity,
}

impl NodeClass {
    pub fn name(self) -> &'static str {
        match self {
            Self::Return => "return",
            Self::Polarity => "polarity",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Node {
    pub label: String,
    pub class: NodeClass,
}

/// Nodes for a stacked panel: the first `n_returns` labels are returns.
pub fn block_nodes(labels: &[String], n_returns: usize) -> Vec<Node> {
    labels
        .iter()
        .enumerate()
        .map(|(i, l)| Node {
            label: l.clone(),
            class: if i < n_returns {
                NodeClass::Return
            } else {
                NodeClass::Polarity
            },
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge<T> {
    pub source: usize,
    pub destination: usize,
    pub weight: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectedGraph<T> {
    pub nodes: Vec<Node>,
    /// Sorted by `(source, destination)`.
    pub edges: Vec<Edge<T>>,
    pub threshold: T,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DegreeRecord {
    pub nd_in: Vec<usize>,
    pub nd_out: Vec<usize>,
}

/// Min–max rescaling of the off-diagonal entries onto `[0, 1]`. NaN marks
/// a missing pair and is kept; the diagonal is set to 0.
pub fn rescale_ete<T: Real>(m: &Array2<T>) -> Result<Array2<T>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::ShapeMismatch(format!(
            "{n}x{} is not square",
            m.ncols()
        )));
    }
    let off = || {
        m.indexed_iter()
            .filter(|((i, j), v)| i != j && !v.is_nan())
            .map(|(_, v)| *v)
    };
    if off().any(|v| v.is_infinite()) {
        return Err(Error::InvalidInput("matrix has infinite entries".into()));
    }
    let lo = off().fold(T::infinity(), T::min);
    let hi = off().fold(T::neg_infinity(), T::max);
    if !(hi > lo) {
        return Err(Error::DegenerateRange);
    }
    let span = hi - lo;
    Ok(Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            T::zero()
        } else {
            (m[[i, j]] - lo) / span
        }
    }))
}

/// Edge `j → i` for every `m[i][j] ≥ th`, `i ≠ j`.
pub fn threshold_graph<T: Real>(m: &Array2<T>, nodes: &[Node], th: T) -> Result<DirectedGraph<T>> {
    check_dims(m, nodes)?;
    let n = nodes.len();
    let mut edges = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if i != j && m[[i, j]] >= th {
                edges.push(Edge {
                    source: j,
                    destination: i,
                    weight: m[[i, j]],
                });
            }
        }
    }
    Ok(DirectedGraph {
        nodes: nodes.to_vec(),
        edges,
        threshold: th,
    })
}

fn check_dims<T>(m: &Array2<T>, nodes: &[Node]) -> Result<()> {
    if m.dim() != (nodes.len(), nodes.len()) {
        return Err(Error::ShapeMismatch(format!(
            "{:?} matrix for {} nodes",
            m.dim(),
            nodes.len()
        )));
    }
    Ok(())
}

pub fn degrees<T>(g: &DirectedGraph<T>) -> DegreeRecord {
    let n = g.nodes.len();
    let mut rec = DegreeRecord {
        nd_in: vec![0; n],
        nd_out: vec![0; n],
    };
    for e in &g.edges {
        rec.nd_out[e.source] += 1;
        rec.nd_in[e.destination] += 1;
    }
    rec
}

/// Polarity over return out-degree. The denominator can vanish, so the two
/// degenerate outcomes are kept apart from ordinary values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    Finite(f64),
    /// Positive numerator over a zero denominator.
    Infinite,
    /// `0 / 0`.
    Undefined,
}

impl Ratio {
    pub fn of(num: f64, den: f64) -> Self {
        if den > 0.0 {
            Self::Finite(num / den)
        } else if num > 0.0 {
            Self::Infinite
        } else {
            Self::Undefined
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Self::Finite(v) => Some(v),
            _ => None,
        }
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Finite(v) => write!(f, "{v}"),
            Self::Infinite => f.write_str("inf"),
            Self::Undefined => f.write_str("undefined"),
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Finite(v) => s.serialize_f64(*v),
            Self::Infinite => s.serialize_str("inf"),
            Self::Undefined => s.serialize_str("undefined"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatioMode {
    /// Class sums of out-degree.
    #[default]
    Aggregate,
    /// Class means of out-degree per node.
    PerNodeMean,
}

/// Out-degree summed over each class.
pub fn class_out_degrees<T>(g: &DirectedGraph<T>) -> (usize, usize) {
    let (mut pol, mut ret) = (0, 0);
    for e in &g.edges {
        match g.nodes[e.source].class {
            NodeClass::Polarity => pol += 1,
            NodeClass::Return => ret += 1,
        }
    }
    (pol, ret)
}

pub fn relative_out_degree<T>(g: &DirectedGraph<T>, mode: RatioMode) -> Ratio {
    let (pol, ret) = class_out_degrees(g);
    match mode {
        RatioMode::Aggregate => Ratio::of(pol as f64, ret as f64),
        RatioMode::PerNodeMean => {
            let count = |c| g.nodes.iter().filter(|n| n.class == c).count();
            let (np, nr) = (count(NodeClass::Polarity), count(NodeClass::Return));
            let mean = |sum: usize, k: usize| if k == 0 { 0.0 } else { sum as f64 / k as f64 };
            Ratio::of(mean(pol, np), mean(ret, nr))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub th: f64,
    pub ratio: Ratio,
    pub edges: usize,
    pub polarity_out: usize,
    pub return_out: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub mode: RatioMode,
    pub points: Vec<SweepPoint>,
    pub argmax: Option<SweepPoint>,
}

/// `0.00, 0.01, …, 1.00`, each exactly `i / 100`.
pub fn default_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

/// Ratio at every grid threshold. The argmax is taken over finite ratios
/// with ties going to the largest threshold; if no ratio is finite the
/// largest threshold with an infinite ratio wins, then the largest
/// undefined one.
pub fn threshold_sweep<T: Real>(
    m: &Array2<T>,
    nodes: &[Node],
    grid: &[f64],
    mode: RatioMode,
) -> Result<Sweep> {
    check_dims(m, nodes)?;
    if grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::InvalidInput("thresholds must lie in [0, 1]".into()));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidInput("threshold grid must be sorted".into()));
    }
    let points = grid
        .iter()
        .map(|&th| {
            let g = threshold_graph(m, nodes, T::lit(th))?;
            let (polarity_out, return_out) = class_out_degrees(&g);
            Ok(SweepPoint {
                th,
                ratio: relative_out_degree(&g, mode),
                edges: g.edges.len(),
                polarity_out,
                return_out,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<(f64, SweepPoint)> = None;
    for p in &points {
        if let Some(v) = p.ratio.finite() {
            if best.is_none_or(|(b, _)| v >= b) {
                best = Some((v, *p));
            }
        }
    }
    let argmax = best.map(|(_, p)| p).or_else(|| {
        let last = |r: Ratio| points.iter().rev().find(|p| p.ratio == r).copied();
        last(Ratio::Infinite).or_else(|| last(Ratio::Undefined))
    });
    Ok(Sweep {
        mode,
        points,
        argmax,
    })
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// `src,dst,weight` by node label.
pub fn write_edges<T: Real, W: Write>(g: &DirectedGraph<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["src", "dst", "weight"]).map_err(csv_err)?;
    for e in &g.edges {
        w.write_record([
            g.nodes[e.source].label.as_str(),
            g.nodes[e.destination].label.as_str(),
            &e.weight.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `label,class,nd_in,nd_out`.
pub fn write_nodes<T, W: Write>(g: &DirectedGraph<T>, out: W) -> Result<()> {
    let deg = degrees(g);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "class", "nd_in", "nd_out"])
        .map_err(csv_err)?;
    for (i, n) in g.nodes.iter().enumerate() {
        w.write_record([
            n.label.as_str(),
            n.class.name(),
            &deg.nd_in[i].to_string(),
            &deg.nd_out[i].to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `th,ratio,edges,polarity_out,return_out`.
pub fn write_sweep<W: Write>(sweep: &Sweep, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["th", "ratio", "edges", "polarity_out", "return_out"])
        .map_err(csv_err)?;
    for p in &sweep.points {
        w.write_record([
            p.th.to_string(),
            p.ratio.to_string(),
            p.edges.to_string(),
            p.polarity_out.to_string(),
            p.return_out.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
