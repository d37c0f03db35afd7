use super::{Algorithm, AlgorithmKind, StepReport};
use crate::mixing::AlphaWeights;
use crate::objectives::GradientOracle;
use crate::topology::{edge_sign, Graph};
use crate::vectors::NodeVectors;

/// Starting value of the dual variables `z_{i|j}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DualInit {
    /// `z_{i|j} = A_{i|j} x_j(0)`, the premise under which ECL coincides
    /// with its gossip reformulation.
    #[default]
    Consensus,
    /// `z_{i|j} = 0`; identical to `Consensus` when `x(0) = 0`.
    Zero,
}

/// Edge-consensus learning in primal-dual form.
///
/// Per round, at node `i`:
///
/// ```text
/// x_i   <- (x_i - eta (g_i - sum_j alpha_ij A_ij z_ij)) / (1 + eta S_i)
/// y_ij  <- z_ij - 2 A_ij x_i
/// z_ij  <- (1 - theta) z_ij + theta y_ji
/// ```
///
/// where `A_ij = +1` if `i > j` else `-1` and `S_i = sum_j alpha_ij`.
#[derive(Debug, Clone)]
pub struct Ecl {
    graph: Graph,
    xs: NodeVectors,
    // one d-vector per directed slot of `graph`
    z: Vec<f64>,
    y: Vec<f64>,
    alpha: Vec<f64>,
    row_sums: Vec<f64>,
    eta: f64,
    theta: f64,
}

impl Ecl {
    pub fn new(
        graph: &Graph,
        x0: NodeVectors,
        alpha: &AlphaWeights,
        eta: f64,
        theta: f64,
        init: DualInit,
    ) -> Self {
        let d = x0.dim();
        let slots = graph.slot_count();
        let alpha_slot: Vec<f64> = (0..slots)
            .map(|s| alpha.by_edge(graph.slot_edge(s)))
            .collect();
        let row_sums = (0..graph.node_count())
            .map(|i| graph.slots(i).map(|s| alpha_slot[s]).sum())
            .collect();
        let mut z = vec![0.0; slots * d];
        if init == DualInit::Consensus {
            for i in 0..graph.node_count() {
                for (s, &j) in graph.slots(i).zip(graph.neighbors(i)) {
                    let sign = edge_sign(i, j);
                    for (zk, xk) in z[s * d..(s + 1) * d].iter_mut().zip(x0.row(j)) {
                        *zk = sign * xk;
                    }
                }
            }
        }
        Self {
            graph: graph.clone(),
            xs: x0,
            y: vec![0.0; slots * d],
            z,
            alpha: alpha_slot,
            row_sums,
            eta,
            theta,
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `eta / (1 + eta S_i)` per node.
    pub fn effective_steps(&self) -> Vec<f64> {
        self.row_sums
            .iter()
            .map(|s| self.eta / (1.0 + self.eta * s))
            .collect()
    }

    /// `z_{i|j}`, or `None` when `(i, j)` is not an edge.
    pub fn dual(&self, i: usize, j: usize) -> Option<&[f64]> {
        let d = self.xs.dim();
        let k = self.graph.neighbors(i).binary_search(&j).ok()?;
        let s = self.graph.slots(i).start + k;
        Some(&self.z[s * d..(s + 1) * d])
    }

    pub fn apply(&mut self, grads: &NodeVectors) {
        let d = self.xs.dim();
        let mut tmp = vec![0.0; d];
        for i in 0..self.graph.node_count() {
            tmp.copy_from_slice(grads.row(i));
            for (s, &j) in self.graph.slots(i).zip(self.graph.neighbors(i)) {
                let coef = self.alpha[s] * edge_sign(i, j);
                for (t, zk) in tmp.iter_mut().zip(&self.z[s * d..(s + 1) * d]) {
                    *t -= coef * zk;
                }
            }
            let denom = 1.0 + self.eta * self.row_sums[i];
            for (xk, t) in self.xs.row_mut(i).iter_mut().zip(&tmp) {
                *xk = (*xk - self.eta * t) / denom;
            }
        }
        for i in 0..self.graph.node_count() {
            for (s, &j) in self.graph.slots(i).zip(self.graph.neighbors(i)) {
                let two_a = 2.0 * edge_sign(i, j);
                let xi = self.xs.row(i);
                for k in 0..d {
                    self.y[s * d + k] = self.z[s * d + k] - two_a * xi[k];
                }
            }
        }
        let theta = self.theta;
        for s in 0..self.graph.slot_count() {
            let r = self.graph.reverse_slot(s);
            for k in 0..d {
                self.z[s * d + k] = (1.0 - theta) * self.z[s * d + k] + theta * self.y[r * d + k];
            }
        }
    }
}

impl Algorithm for Ecl {
    fn kind(&self) -> AlgorithmKind {
        AlgorithmKind::Ecl
    }

    fn params(&self) -> &NodeVectors {
        &self.xs
    }

    fn step(&mut self, oracle: &dyn GradientOracle, round: u64) -> StepReport {
        let grads = oracle.gradients(&self.xs, round);
        self.apply(&grads);
        let n = grads.nodes() as f64;
        let mut shift = vec![0.0; grads.dim()];
        for (i, step) in self.effective_steps().into_iter().enumerate() {
            for (acc, g) in shift.iter_mut().zip(grads.row(i)) {
                *acc += step * g / n;
            }
        }
        StepReport { mean_shift: shift }
    }
}
