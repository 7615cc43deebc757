//! Node-array geometry for all-to-all fabrics.
//!
//! Nodes sit on a rectangular grid with a fixed pitch. Every ordered pair of
//! distinct nodes gets its own link, routed Manhattan-style, so an N-node
//! array needs N·(N−1) links.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct NodeGrid {
    rows: usize,
    cols: usize,
    pitch_cm: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    rows: usize,
    cols: usize,
    pitch_cm: f64,
}

impl TryFrom<RawGrid> for NodeGrid {
    type Error = Error;
    fn try_from(raw: RawGrid) -> Result<Self> {
        Self::new(raw.rows, raw.cols, raw.pitch_cm)
    }
}

impl NodeGrid {
    pub fn new(rows: usize, cols: usize, pitch_cm: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(
                "grid",
                format!("{rows}x{cols} has no nodes"),
            ));
        }
        if !(pitch_cm.is_finite() && pitch_cm > 0.0) {
            return Err(Error::invalid(
                "grid",
                format!("pitch {pitch_cm} cm must be > 0"),
            ));
        }
        Ok(Self {
            rows,
            cols,
            pitch_cm,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pitch_cm(&self) -> f64 {
        self.pitch_cm
    }

    pub fn node_count(&self) -> usize {
        self.rows * self.cols
    }

    /// Number of ordered links in the all-to-all fabric.
    pub fn link_count(&self) -> usize {
        let n = self.node_count();
        n * (n - 1)
    }

    /// Nodes in row-major order.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.rows).flat_map(move |row| (0..self.cols).map(move |col| NodeId { row, col }))
    }

    pub fn contains(&self, n: NodeId) -> bool {
        n.row < self.rows && n.col < self.cols
    }

    /// Longest Manhattan link: corner to opposite corner.
    pub fn diameter_cm(&self) -> f64 {
        ((self.rows - 1) + (self.cols - 1)) as f64 * self.pitch_cm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId {
    pub row: usize,
    pub col: usize,
}

impl NodeId {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    /// Grid steps between two nodes.
    pub fn hops_to(self, other: NodeId) -> usize {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Link {
    pub src: NodeId,
    pub dst: NodeId,
    pub length_cm: f64,
}

pub fn manhattan_length(a: NodeId, b: NodeId, pitch_cm: f64) -> f64 {
    a.hops_to(b) as f64 * pitch_cm
}

/// One directed link per ordered pair of distinct nodes.
pub fn all_to_all_links(grid: &NodeGrid) -> Vec<Link> {
    let mut links = Vec::with_capacity(grid.link_count());
    for src in grid.nodes() {
        for dst in grid.nodes().filter(|&d| d != src) {
            links.push(Link {
                src,
                dst,
                length_cm: manhattan_length(src, dst, grid.pitch_cm),
            });
        }
    }
    links
}

/// Link counts keyed by Manhattan hop count.
///
/// Lengths are exact multiples of the pitch, so bins are keyed by hops and
/// converted to centimeters on the way out.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthHistogram {
    pitch_cm: f64,
    bins: BTreeMap<usize, usize>,
    total: usize,
}

impl LengthHistogram {
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn pitch_cm(&self) -> f64 {
        self.pitch_cm
    }

    /// Count for an exact hop distance.
    pub fn count_at_hops(&self, hops: usize) -> usize {
        self.bins.get(&hops).copied().unwrap_or(0)
    }

    /// `(hops, count)` pairs in ascending length.
    pub fn hop_bins(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bins.iter().map(|(&h, &c)| (h, c))
    }

    /// `(length_cm, count)` pairs in ascending length.
    pub fn bins(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.bins
            .iter()
            .map(|(&h, &c)| (h as f64 * self.pitch_cm, c))
    }

    pub fn max_length_cm(&self) -> Option<f64> {
        self.bins
            .keys()
            .next_back()
            .map(|&h| h as f64 * self.pitch_cm)
    }
}

/// Distribution of link lengths over the all-to-all fabric.
///
/// Counts are built from the per-axis offset distributions instead of
/// enumerating node pairs: along an axis of length `n`, an offset of `d > 0`
/// occurs for `2·(n−d)` ordered coordinate pairs and `d = 0` for `n`. The
/// two axes are independent, so the hop distribution is their convolution
/// minus the `N` self-pairs at zero.
pub fn length_histogram(grid: &NodeGrid) -> LengthHistogram {
    let axis = |n: usize| -> Vec<usize> {
        (0..n)
            .map(|d| if d == 0 { n } else { 2 * (n - d) })
            .collect()
    };
    let rows = axis(grid.rows);
    let cols = axis(grid.cols);
    let mut bins = BTreeMap::new();
    for (dr, &cr) in rows.iter().enumerate() {
        for (dc, &cc) in cols.iter().enumerate() {
            let hops = dr + dc;
            if hops == 0 {
                continue;
            }
            *bins.entry(hops).or_insert(0) += cr * cc;
        }
    }
    let total = bins.values().sum();
    LengthHistogram {
        pitch_cm: grid.pitch_cm,
        bins,
        total,
    }
}

/// Perfect-shuffle wiring of `n` nodes with `n` lanes each.
///
/// Transmit lane `k` of node `i` lands on receive lane `i` of node `k`, so
/// every node owns exactly one lane to every node, itself included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ShuffleMap {
    nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Endpoint {
    pub node: usize,
    pub lane: usize,
}

impl ShuffleMap {
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn lanes(&self) -> usize {
        self.nodes
    }

    pub fn route(&self, tx: Endpoint) -> Result<Endpoint> {
        if tx.node >= self.nodes || tx.lane >= self.nodes {
            return Err(Error::invalid(
                "shuffle endpoint",
                format!(
                    "({}, {}) outside {}x{}",
                    tx.node, tx.lane, self.nodes, self.nodes
                ),
            ));
        }
        Ok(Endpoint {
            node: tx.lane,
            lane: tx.node,
        })
    }

    /// Every `(tx, rx)` pair, transmitter-major.
    pub fn connections(&self) -> impl Iterator<Item = (Endpoint, Endpoint)> + '_ {
        (0..self.nodes).flat_map(move |node| {
            (0..self.nodes).map(move |lane| {
                let tx = Endpoint { node, lane };
                (
                    tx,
                    Endpoint {
                        node: lane,
                        lane: node,
                    },
                )
            })
        })
    }
}

pub fn perfect_shuffle(n: usize) -> Result<ShuffleMap> {
    if n == 0 {
        return Err(Error::invalid("shuffle", "needs at least one node"));
    }
    Ok(ShuffleMap { nodes: n })
}
