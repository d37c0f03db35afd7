//! Undirected communication graphs.
//!
//! Nodes are `0..n`. Edges are kept as canonical pairs `(min, max)` in sorted
//! order; an edge's position in that list is its edge id, which is how
//! per-edge data such as penalty weights are indexed. Each node also keeps a
//! sorted neighbor list, and every directed pair `(i, j)` with `j` a neighbor
//! of `i` owns a "slot" used by algorithms that keep per-direction state.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    // slot layout: slots of node i are slot_offsets[i]..slot_offsets[i+1]
    slot_offsets: Vec<usize>,
    slot_reverse: Vec<usize>,
    slot_edge: Vec<usize>,
}

impl Graph {
    /// Builds a graph from an arbitrary edge list, rejecting self-loops,
    /// duplicates (in either orientation) and out-of-range endpoints.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize("graph needs at least one node".into()));
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) has an endpoint outside 0..{n}"
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at node {a}")));
            }
            if !set.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({a}, {b})")));
            }
        }
        let edges: Vec<(usize, usize)> = set.into_iter().collect();

        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in &edges {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }

        let mut slot_offsets = Vec::with_capacity(n + 1);
        slot_offsets.push(0);
        for list in &neighbors {
            slot_offsets.push(slot_offsets.last().unwrap() + list.len());
        }
        let total = *slot_offsets.last().unwrap();
        let mut slot_reverse = vec![0; total];
        let mut slot_edge = vec![0; total];
        for i in 0..n {
            for (k, &j) in neighbors[i].iter().enumerate() {
                let pos = neighbors[j]
                    .binary_search(&i)
                    .expect("adjacency is symmetric");
                slot_reverse[slot_offsets[i] + k] = slot_offsets[j] + pos;
                slot_edge[slot_offsets[i] + k] = edges
                    .binary_search(&(i.min(j), i.max(j)))
                    .expect("edge is present");
            }
        }

        Ok(Self {
            n,
            edges,
            neighbors,
            slot_offsets,
            slot_reverse,
            slot_edge,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Canonical `(min, max)` pairs in ascending order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edge_id(i, j).is_some()
    }

    pub fn edge_id(&self, i: usize, j: usize) -> Option<usize> {
        if i == j {
            return None;
        }
        self.edges.binary_search(&(i.min(j), i.max(j))).ok()
    }

    /// Total number of directed slots (`2 * |E|`).
    pub fn slot_count(&self) -> usize {
        self.slot_reverse.len()
    }

    /// Slot range of node `i`, aligned with [`Graph::neighbors`].
    pub fn slots(&self, i: usize) -> std::ops::Range<usize> {
        self.slot_offsets[i]..self.slot_offsets[i + 1]
    }

    /// Slot of `(j, i)` given the slot of `(i, j)`.
    pub fn reverse_slot(&self, slot: usize) -> usize {
        self.slot_reverse[slot]
    }

    pub fn slot_edge(&self, slot: usize) -> usize {
        self.slot_edge[slot]
    }

    /// `Some(k)` when every node has degree `k`.
    pub fn regularity(&self) -> Option<usize> {
        let k = self.degree(0);
        (1..self.n).all(|i| self.degree(i) == k).then_some(k)
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(i) = queue.pop_front() {
            for &j in &self.neighbors[i] {
                if !seen[j] {
                    seen[j] = true;
                    reached += 1;
                    queue.push_back(j);
                }
            }
        }
        reached == self.n
    }
}

/// Orientation of the consensus constraint on edge `(i, j)`: `+1` when
/// `i > j`, `-1` when `i < j`.
#[inline]
pub fn edge_sign(i: usize, j: usize) -> f64 {
    debug_assert_ne!(i, j);
    if i > j {
        1.0
    } else {
        -1.0
    }
}

pub fn build_ring(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(Error::InvalidSize(format!("ring needs n >= 3, got {n}")));
    }
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    Graph::from_edges(n, &edges)
}

/// Wrap-around grid; node `(r, c)` has index `r * cols + c`.
pub fn build_torus(rows: usize, cols: usize) -> Result<Graph> {
    if rows < 3 || cols < 3 {
        return Err(Error::InvalidSize(format!(
            "torus needs both dimensions >= 3, got {rows}x{cols}"
        )));
    }
    let idx = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::with_capacity(2 * rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            edges.push((idx(r, c), idx((r + 1) % rows, c)));
            edges.push((idx(r, c), idx(r, (c + 1) % cols)));
        }
    }
    Graph::from_edges(rows * cols, &edges)
}

pub fn build_complete(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidSize(format!(
            "complete graph needs n >= 2, got {n}"
        )));
    }
    let edges: Vec<_> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    Graph::from_edges(n, &edges)
}

/// Topology as named in experiment configs: `ring`, `torus`, `torus:RxC`,
/// `complete`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TopologySpec {
    Ring,
    /// `None` picks the square torus with `n` nodes.
    Torus(Option<(usize, usize)>),
    Complete,
}

impl TopologySpec {
    pub fn build(&self, n: usize) -> Result<Graph> {
        match *self {
            TopologySpec::Ring => build_ring(n),
            TopologySpec::Complete => build_complete(n),
            TopologySpec::Torus(Some((r, c))) => {
                if r * c != n {
                    return Err(Error::InvalidSize(format!(
                        "torus {r}x{c} has {} nodes but n = {n}",
                        r * c
                    )));
                }
                build_torus(r, c)
            }
            TopologySpec::Torus(None) => {
                let side = (n as f64).sqrt().round() as usize;
                if side * side != n {
                    return Err(Error::InvalidSize(format!(
                        "n = {n} is not a perfect square; use torus:RxC"
                    )));
                }
                build_torus(side, side)
            }
        }
    }

    /// Short label used in file names and summary tables.
    pub fn label(&self) -> String {
        match self {
            TopologySpec::Ring => "ring".into(),
            TopologySpec::Complete => "complete".into(),
            TopologySpec::Torus(None) => "torus".into(),
            TopologySpec::Torus(Some((r, c))) => format!("torus{r}x{c}"),
        }
    }
}

impl fmt::Display for TopologySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologySpec::Ring => write!(f, "ring"),
            TopologySpec::Complete => write!(f, "complete"),
            TopologySpec::Torus(None) => write!(f, "torus"),
            TopologySpec::Torus(Some((r, c))) => write!(f, "torus:{r}x{c}"),
        }
    }
}

impl FromStr for TopologySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "ring" => return Ok(TopologySpec::Ring),
            "complete" => return Ok(TopologySpec::Complete),
            "torus" => return Ok(TopologySpec::Torus(None)),
            _ => {}
        }
        let bad = || Error::config(format!("unknown topology `{s}`"), vec!["topology".into()]);
        let dims = s.strip_prefix("torus:").ok_or_else(bad)?;
        let (r, c) = dims.split_once(['x', 'X']).ok_or_else(bad)?;
        let r = r.trim().parse().map_err(|_| bad())?;
        let c = c.trim().parse().map_err(|_| bad())?;
        Ok(TopologySpec::Torus(Some((r, c))))
    }
}
