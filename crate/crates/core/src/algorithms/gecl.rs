use super::{Algorithm, AlgorithmKind, StepReport};
use crate::error::{Error, Result};
use crate::mixing::{AlphaWeights, WeightMatrix};
use crate::objectives::GradientOracle;
use crate::topology::Graph;
use crate::vectors::NodeVectors;

/// `c_i(0) = 1/2 sum_j alpha_{i|j} (x_j(0) - x_i(0))`.
pub fn initial_corrections(graph: &Graph, x0: &NodeVectors, alpha: &AlphaWeights) -> NodeVectors {
    let mut c = NodeVectors::zeros(x0.nodes(), x0.dim());
    for i in 0..graph.node_count() {
        for (s, &j) in graph.slots(i).zip(graph.neighbors(i)) {
            let half = 0.5 * alpha.by_edge(graph.slot_edge(s));
            let (xi, xj) = (x0.row(i).to_vec(), x0.row(j));
            for ((ck, a), b) in c.row_mut(i).iter_mut().zip(xj).zip(&xi) {
                *ck += half * (a - b);
            }
        }
    }
    c
}

/// ECL rewritten as gossip with a gradient correction.
///
/// ```text
/// xt    = W x
/// x_i  <- xt_i - eta'_i (g_i - c_i)
/// c_i  <- sum_j W_ij (c_j - g_j) + g_i + sum_j alpha_{i|j}/2 (xt_j - xt_i)
/// ```
///
/// With `alpha = 0` and `W` taken from `alpha_induced`, the last term
/// vanishes; with `alpha = 0` and arbitrary `W` this is the generalized
/// method. Penalties are stored per directed slot so tests can break their
/// symmetry on purpose.
#[derive(Debug, Clone)]
pub struct Gecl {
    graph: Graph,
    xs: NodeVectors,
    cs: NodeVectors,
    weights: WeightMatrix,
    eta_prime: Vec<f64>,
    alpha: Vec<f64>,
    smoothed: NodeVectors,
    scratch: NodeVectors,
}

impl Gecl {
    /// Starts from `c(0)` given by [`initial_corrections`].
    pub fn new(
        graph: &Graph,
        x0: NodeVectors,
        weights: WeightMatrix,
        eta_prime: Vec<f64>,
        alpha: &AlphaWeights,
    ) -> Result<Self> {
        let c0 = initial_corrections(graph, &x0, alpha);
        Self::with_corrections(graph, x0, c0, weights, eta_prime, alpha)
    }

    pub fn with_corrections(
        graph: &Graph,
        x0: NodeVectors,
        c0: NodeVectors,
        weights: WeightMatrix,
        eta_prime: Vec<f64>,
        alpha: &AlphaWeights,
    ) -> Result<Self> {
        let n = graph.node_count();
        x0.check_shape(n, x0.dim())?;
        c0.check_shape(n, x0.dim())?;
        if weights.size() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: weights.size(),
            });
        }
        if eta_prime.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: eta_prime.len(),
            });
        }
        let alpha = (0..graph.slot_count())
            .map(|s| alpha.by_edge(graph.slot_edge(s)))
            .collect();
        Ok(Self {
            graph: graph.clone(),
            smoothed: x0.clone(),
            scratch: x0.clone(),
            xs: x0,
            cs: c0,
            weights,
            eta_prime,
            alpha,
        })
    }

    pub fn eta_prime(&self) -> &[f64] {
        &self.eta_prime
    }

    /// `W x` from the most recent round.
    pub fn smoothed(&self) -> &NodeVectors {
        &self.smoothed
    }

    /// Overwrites the directed penalty `alpha_{i|j}` only, leaving
    /// `alpha_{j|i}` untouched.
    pub fn set_directed_alpha(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        let k = self
            .graph
            .neighbors(i)
            .binary_search(&j)
            .map_err(|_| Error::InvalidGraph(format!("({i}, {j}) is not an edge")))?;
        self.alpha[self.graph.slots(i).start + k] = value;
        Ok(())
    }

    pub fn apply(&mut self, grads: &NodeVectors) {
        let d = self.xs.dim();
        self.weights.apply_into(&self.xs, &mut self.smoothed);

        for i in 0..self.xs.nodes() {
            let step = self.eta_prime[i];
            let (xt, g, c) = (self.smoothed.row(i), grads.row(i), self.cs.row(i));
            let x = self.xs.row_mut(i);
            for k in 0..d {
                x[k] = xt[k] - step * (g[k] - c[k]);
            }
        }

        for i in 0..self.cs.nodes() {
            let (c, g) = (self.cs.row(i), grads.row(i));
            let v = self.scratch.row_mut(i);
            for k in 0..d {
                v[k] = c[k] - g[k];
            }
        }
        self.weights.apply_into(&self.scratch, &mut self.cs);
        for i in 0..self.graph.node_count() {
            let c = self.cs.row_mut(i);
            for (ck, gk) in c.iter_mut().zip(grads.row(i)) {
                *ck += gk;
            }
            for (s, &j) in self.graph.slots(i).zip(self.graph.neighbors(i)) {
                let half = 0.5 * self.alpha[s];
                if half == 0.0 {
                    continue;
                }
                let (xi, xj) = (self.smoothed.row(i), self.smoothed.row(j));
                for k in 0..d {
                    c[k] += half * (xj[k] - xi[k]);
                }
            }
        }
    }
}

impl Algorithm for Gecl {
    fn kind(&self) -> AlgorithmKind {
        AlgorithmKind::Gecl
    }

    fn params(&self) -> &NodeVectors {
        &self.xs
    }

    fn step(&mut self, oracle: &dyn GradientOracle, round: u64) -> StepReport {
        let grads = oracle.gradients(&self.xs, round);
        self.apply(&grads);
        let n = grads.nodes() as f64;
        let mut shift = vec![0.0; grads.dim()];
        for (i, step) in self.eta_prime.iter().enumerate() {
            for (acc, g) in shift.iter_mut().zip(grads.row(i)) {
                *acc += step * g / n;
            }
        }
        StepReport { mean_shift: shift }
    }

    fn corrections(&self) -> Option<&NodeVectors> {
        Some(&self.cs)
    }
}
