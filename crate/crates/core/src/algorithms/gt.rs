use super::{Algorithm, AlgorithmKind, StepReport};
use crate::mixing::WeightMatrix;
use crate::objectives::GradientOracle;
use crate::vectors::{axpy, norm, NodeVectors};

/// Gradient tracking:
///
/// ```text
/// x(r+1) = W (x(r) - eta p(r))
/// p(r+1) = W p(r) + g(r+1) - g(r),     p(0) = g(0)
/// ```
///
/// `g(r)` is the stochastic gradient at `x(r)` drawn with round key `r`, so
/// every gradient is computed once and reused by the next round.
#[derive(Debug, Clone)]
pub struct GradientTracking {
    xs: NodeVectors,
    ps: NodeVectors,
    grads: NodeVectors,
    weights: WeightMatrix,
    eta: f64,
    scratch: NodeVectors,
}

impl GradientTracking {
    /// `g0` is the gradient at `x0` and becomes the first tracker.
    pub fn new(x0: NodeVectors, weights: WeightMatrix, eta: f64, g0: NodeVectors) -> Self {
        Self {
            scratch: x0.clone(),
            xs: x0,
            ps: g0.clone(),
            grads: g0,
            weights,
            eta,
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn trackers(&self) -> &NodeVectors {
        &self.ps
    }

    /// Gradients at the current parameters.
    pub fn gradients(&self) -> &NodeVectors {
        &self.grads
    }

    /// Advances `x`, then asks `grad_at` for the gradients at the new point
    /// to update the trackers.
    pub fn step_with(&mut self, grad_at: impl FnOnce(&NodeVectors) -> NodeVectors) {
        self.scratch.clone_from(&self.xs);
        for i in 0..self.xs.nodes() {
            axpy(self.scratch.row_mut(i), -self.eta, self.ps.row(i));
        }
        self.weights.apply_into(&self.scratch, &mut self.xs);

        let next = grad_at(&self.xs);
        self.weights.apply_into(&self.ps, &mut self.scratch);
        for i in 0..self.ps.nodes() {
            let (wp, gn, go) = (self.scratch.row(i), next.row(i), self.grads.row(i));
            for (k, p) in self.ps.row_mut(i).iter_mut().enumerate() {
                *p = wp[k] + gn[k] - go[k];
            }
        }
        self.grads = next;
    }
}

impl Algorithm for GradientTracking {
    fn kind(&self) -> AlgorithmKind {
        AlgorithmKind::Gt
    }

    fn params(&self) -> &NodeVectors {
        &self.xs
    }

    /// Uses the trackers from round `round` and draws the next gradients
    /// with key `round + 1`.
    fn step(&mut self, oracle: &dyn GradientOracle, round: u64) -> StepReport {
        let n = self.ps.nodes() as f64;
        let shift = self
            .ps
            .sum()
            .into_iter()
            .map(|s| self.eta * s / n)
            .collect();
        self.step_with(|x| oracle.gradients(x, round + 1));
        StepReport { mean_shift: shift }
    }

    fn tracker_residual(&self) -> Option<f64> {
        let diff: Vec<f64> = self
            .ps
            .sum()
            .into_iter()
            .zip(self.grads.sum())
            .map(|(p, g)| p - g)
            .collect();
        Some(norm(&diff))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixing::metropolis;
    use crate::topology::build_ring;

    #[test]
    fn tracker_sum_matches_gradient_sum() {
        let g = build_ring(5).unwrap();
        let w = metropolis(&g).weights().clone();
        let x0 = NodeVectors::zeros(5, 2);
        let centers: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 1.0 - i as f64]).collect();
        let grad = |x: &NodeVectors| {
            let rows: Vec<Vec<f64>> = (0..5)
                .map(|i| {
                    x.row(i)
                        .iter()
                        .zip(&centers[i])
                        .map(|(a, b)| a - b)
                        .collect()
                })
                .collect();
            NodeVectors::from_rows(&rows).unwrap()
        };
        let mut gt = GradientTracking::new(x0.clone(), w, 0.1, grad(&x0));
        for _ in 0..50 {
            gt.step_with(grad);
            assert!(gt.tracker_residual().unwrap() < 1e-12);
        }
    }

    #[test]
    fn first_step_uses_initial_gradient() {
        let x0 = NodeVectors::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let g0 = NodeVectors::from_rows(&[vec![10.0], vec![-10.0]]).unwrap();
        let mut gt = GradientTracking::new(x0, WeightMatrix::identity(2), 0.1, g0);
        gt.step_with(|_| NodeVectors::from_rows(&[vec![3.0], vec![4.0]]).unwrap());
        assert_eq!(gt.params().row(0), &[0.0]);
        assert_eq!(gt.params().row(1), &[3.0]);
        assert_eq!(gt.trackers().row(0), &[3.0]);
        assert_eq!(gt.trackers().row(1), &[4.0]);
    }
}
