use super::{Algorithm, AlgorithmKind, StepReport};
use crate::mixing::WeightMatrix;
use crate::objectives::GradientOracle;
use crate::vectors::{axpy, NodeVectors};

/// Gossip SGD: `x_i <- sum_j W_ij (x_j - eta g_j)`.
#[derive(Debug, Clone)]
pub struct Dpsgd {
    xs: NodeVectors,
    weights: WeightMatrix,
    eta: f64,
    scratch: NodeVectors,
}

impl Dpsgd {
    pub fn new(x0: NodeVectors, weights: WeightMatrix, eta: f64) -> Self {
        let scratch = x0.clone();
        Self {
            xs: x0,
            weights,
            eta,
            scratch,
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// One round given the gradients at the current parameters.
    pub fn apply(&mut self, grads: &NodeVectors) {
        self.scratch.clone_from(&self.xs);
        for i in 0..self.xs.nodes() {
            axpy(self.scratch.row_mut(i), -self.eta, grads.row(i));
        }
        self.weights.apply_into(&self.scratch, &mut self.xs);
    }
}

impl Algorithm for Dpsgd {
    fn kind(&self) -> AlgorithmKind {
        AlgorithmKind::Dpsgd
    }

    fn params(&self) -> &NodeVectors {
        &self.xs
    }

    fn step(&mut self, oracle: &dyn GradientOracle, round: u64) -> StepReport {
        let grads = oracle.gradients(&self.xs, round);
        self.apply(&grads);
        let n = grads.nodes() as f64;
        StepReport {
            mean_shift: grads.sum().into_iter().map(|s| self.eta * s / n).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixing::metropolis;
    use crate::topology::build_complete;

    #[test]
    fn identity_weights_is_local_sgd() {
        let x0 = NodeVectors::from_rows(&[vec![1.0, 2.0], vec![-1.0, 0.5]]).unwrap();
        let g = NodeVectors::from_rows(&[vec![0.5, 1.0], vec![2.0, -2.0]]).unwrap();
        let mut alg = Dpsgd::new(x0, WeightMatrix::identity(2), 0.1);
        alg.apply(&g);
        assert_eq!(alg.params().row(0), &[1.0 - 0.05, 2.0 - 0.1]);
        assert_eq!(alg.params().row(1), &[-1.0 - 0.2, 0.5 + 0.2]);
    }

    #[test]
    fn uniform_weights_without_step_average() {
        let g = build_complete(3).unwrap();
        let x0 = NodeVectors::from_rows(&[vec![0.0], vec![3.0], vec![6.0]]).unwrap();
        let mut alg = Dpsgd::new(x0, metropolis(&g).weights().clone(), 0.0);
        alg.apply(&NodeVectors::zeros(3, 1));
        for i in 0..3 {
            assert!((alg.params().row(i)[0] - 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn two_nodes_meet_in_the_middle() {
        let g = build_complete(2).unwrap();
        let x0 = NodeVectors::from_rows(&[vec![0.0], vec![2.0]]).unwrap();
        let mut alg = Dpsgd::new(x0, metropolis(&g).weights().clone(), 0.3);
        alg.apply(&NodeVectors::zeros(2, 1));
        assert_eq!(alg.params().row(0), &[1.0]);
        assert_eq!(alg.params().row(1), &[1.0]);
    }
}
