//! Local objectives, the stochastic gradient oracle and the synthetic
//! quadratic problem family.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{domain, keyed_rng};
use crate::vectors::{dist_sq, NodeVectors};

/// A sum-structured objective `f(x) = (1/n) sum_i f_i(x)`.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    fn nodes(&self) -> usize;

    fn value(&self, node: usize, x: &[f64]) -> f64;

    /// Writes `grad f_i(x)` into `out`.
    fn grad_into(&self, node: usize, x: &[f64], out: &mut [f64]);

    /// Global minimizer, when known in closed form.
    fn optimum(&self) -> Option<&[f64]>;

    fn global_value(&self, x: &[f64]) -> f64 {
        (0..self.nodes()).map(|i| self.value(i, x)).sum::<f64>() / self.nodes() as f64
    }

    /// `f(x) - f*`; `None` without a known optimum.
    fn optimality_gap(&self, x: &[f64]) -> Option<f64> {
        let opt = self.optimum()?;
        Some(self.global_value(x) - self.global_value(opt))
    }
}

/// `f_i(x) = 0.5 ||x - b_i||^2` with centers `b_i ~ N(0, zeta^2/d I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProblem {
    centers: NodeVectors,
    optimum: Vec<f64>,
    zeta_sq: f64,
    seed: u64,
}

impl QuadraticProblem {
    pub fn from_centers(centers: NodeVectors) -> Self {
        let optimum = centers.mean();
        Self {
            centers,
            optimum,
            zeta_sq: f64::NAN,
            seed: 0,
        }
    }

    pub fn centers(&self) -> &NodeVectors {
        &self.centers
    }

    pub fn zeta_sq(&self) -> f64 {
        self.zeta_sq
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `(1/n) sum_i ||grad f_i(x) - grad f(x)||^2`, which for this family is
    /// the spread of the centers and does not depend on `x`.
    pub fn heterogeneity(&self) -> f64 {
        let n = self.centers.nodes() as f64;
        self.centers
            .rows()
            .map(|b| dist_sq(b, &self.optimum))
            .sum::<f64>()
            / n
    }
}

impl Objective for QuadraticProblem {
    fn dim(&self) -> usize {
        self.centers.dim()
    }

    fn nodes(&self) -> usize {
        self.centers.nodes()
    }

    fn value(&self, node: usize, x: &[f64]) -> f64 {
        0.5 * dist_sq(x, self.centers.row(node))
    }

    fn grad_into(&self, node: usize, x: &[f64], out: &mut [f64]) {
        for ((o, xi), bi) in out.iter_mut().zip(x).zip(self.centers.row(node)) {
            *o = xi - bi;
        }
    }

    fn optimum(&self) -> Option<&[f64]> {
        Some(&self.optimum)
    }

    fn optimality_gap(&self, x: &[f64]) -> Option<f64> {
        // f(x) - f* = 0.5 ||x - x*||^2 exactly; avoids cancellation near x*
        Some(0.5 * dist_sq(x, &self.optimum))
    }
}

/// Draws centers per node from `N(0, zeta_sq/d I)`; node `i` uses its own
/// keyed stream so the draw does not depend on `n`.
pub fn generate_quadratic(d: usize, n: usize, zeta_sq: f64, seed: u64) -> Result<QuadraticProblem> {
    if d == 0 || n == 0 {
        return Err(Error::InvalidSize(format!(
            "need d >= 1 and n >= 1, got d={d}, n={n}"
        )));
    }
    if !(zeta_sq >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "zeta_sq",
            reason: format!("must be >= 0, got {zeta_sq}"),
        });
    }
    let scale = (zeta_sq / d as f64).sqrt();
    let mut centers = NodeVectors::zeros(n, d);
    for i in 0..n {
        let mut rng = keyed_rng(seed, domain::CENTERS, i as u64, 0);
        for v in centers.row_mut(i) {
            let z: f64 = rng.sample(StandardNormal);
            *v = scale * z;
        }
    }
    let mut p = QuadraticProblem::from_centers(centers);
    p.zeta_sq = zeta_sq;
    p.seed = seed;
    Ok(p)
}

/// Additive Gaussian gradient noise `eps ~ N(0, sigma_sq/d I)` addressed by
/// `(seed, node, round)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseStream {
    seed: u64,
    sigma_sq: f64,
    dim: usize,
}

impl NoiseStream {
    pub fn new(seed: u64, sigma_sq: f64, dim: usize) -> Result<Self> {
        if !(sigma_sq >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "sigma_sq",
                reason: format!("must be >= 0, got {sigma_sq}"),
            });
        }
        Ok(Self {
            seed,
            sigma_sq,
            dim,
        })
    }

    pub fn silent(dim: usize) -> Self {
        Self {
            seed: 0,
            sigma_sq: 0.0,
            dim,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Adds the noise for `(node, round)` to `out`.
    pub fn add_to(&self, node: usize, round: u64, out: &mut [f64]) {
        if self.sigma_sq == 0.0 {
            return;
        }
        let scale = (self.sigma_sq / self.dim as f64).sqrt();
        let mut rng = keyed_rng(self.seed, domain::GRAD_NOISE, node as u64, round);
        for o in out.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *o += scale * z;
        }
    }

    pub fn sample(&self, node: usize, round: u64) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        self.add_to(node, round, &mut v);
        v
    }
}

/// Something that yields the stochastic gradient of node `i` at round `r`.
pub trait GradientOracle: Sync {
    fn nodes(&self) -> usize;

    fn dim(&self) -> usize;

    fn gradient_into(&self, node: usize, round: u64, x: &[f64], out: &mut [f64]);

    /// Gradients of all nodes at their own parameters.
    fn gradients(&self, xs: &NodeVectors, round: u64) -> NodeVectors {
        let mut g = NodeVectors::zeros(xs.nodes(), xs.dim());
        for i in 0..xs.nodes() {
            self.gradient_into(i, round, xs.row(i), g.row_mut(i));
        }
        g
    }
}

/// `grad f_i(x) + eps(seed, i, r)`.
#[derive(Debug, Clone, Copy)]
pub struct StochasticOracle<'a, O: Objective> {
    pub objective: &'a O,
    pub noise: &'a NoiseStream,
}

impl<'a, O: Objective> StochasticOracle<'a, O> {
    pub fn new(objective: &'a O, noise: &'a NoiseStream) -> Self {
        Self { objective, noise }
    }
}

impl<O: Objective> GradientOracle for StochasticOracle<'_, O> {
    fn nodes(&self) -> usize {
        self.objective.nodes()
    }

    fn dim(&self) -> usize {
        self.objective.dim()
    }

    fn gradient_into(&self, node: usize, round: u64, x: &[f64], out: &mut [f64]) {
        self.objective.grad_into(node, x, out);
        self.noise.add_to(node, round, out);
    }
}

/// Checked single-node stochastic gradient.
pub fn stochastic_grad<O: Objective>(
    objective: &O,
    noise: &NoiseStream,
    node: usize,
    round: u64,
    x: &[f64],
) -> Result<Vec<f64>> {
    if x.len() != objective.dim() {
        return Err(Error::DimensionMismatch {
            expected: objective.dim(),
            got: x.len(),
        });
    }
    if noise.dim() != objective.dim() {
        return Err(Error::DimensionMismatch {
            expected: objective.dim(),
            got: noise.dim(),
        });
    }
    if node >= objective.nodes() {
        return Err(Error::InvalidParameter {
            name: "node",
            reason: format!("{node} is outside 0..{}", objective.nodes()),
        });
    }
    let mut out = vec![0.0; x.len()];
    StochasticOracle::new(objective, noise).gradient_into(node, round, x, &mut out);
    Ok(out)
}

/// `(1/n) sum_i ||x_i - x*||^2`.
pub fn error_metric(optimum: &[f64], xs: &NodeVectors) -> f64 {
    xs.rows().map(|x| dist_sq(x, optimum)).sum::<f64>() / xs.nodes() as f64
}

/// `(1/n) sum_i ||x_i - xbar||^2`.
pub fn consensus_distance(xs: &NodeVectors) -> f64 {
    let mean = xs.mean();
    xs.rows().map(|x| dist_sq(x, &mean)).sum::<f64>() / xs.nodes() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_heterogeneity_gives_zero_centers() {
        let p = generate_quadratic(10, 5, 0.0, 3).unwrap();
        assert!(p.centers().as_slice().iter().all(|&v| v == 0.0));
        assert!(p.optimum().unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_quadratic(50, 25, 10.0, 42).unwrap();
        let b = generate_quadratic(50, 25, 10.0, 42).unwrap();
        assert_eq!(a, b);
        let c = generate_quadratic(50, 25, 10.0, 43).unwrap();
        assert_ne!(a.centers(), c.centers());
    }

    #[test]
    fn noiseless_gradient_is_exact() {
        let p = generate_quadratic(4, 3, 2.0, 1).unwrap();
        let noise = NoiseStream::new(9, 0.0, 4).unwrap();
        let x = vec![0.5, -1.0, 2.0, 0.0];
        let g = stochastic_grad(&p, &noise, 1, 17, &x).unwrap();
        for k in 0..4 {
            assert_eq!(g[k], x[k] - p.centers().row(1)[k]);
        }
        let at_center = stochastic_grad(&p, &noise, 2, 0, p.centers().row(2)).unwrap();
        assert!(at_center.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_dimension_checked() {
        let p = generate_quadratic(4, 3, 2.0, 1).unwrap();
        let noise = NoiseStream::new(9, 1.0, 4).unwrap();
        assert!(matches!(
            stochastic_grad(&p, &noise, 0, 0, &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn noise_is_keyed() {
        let noise = NoiseStream::new(5, 10.0, 50).unwrap();
        assert_eq!(noise.sample(3, 100), noise.sample(3, 100));
        assert_ne!(noise.sample(3, 100), noise.sample(3, 101));
        assert_ne!(noise.sample(3, 100), noise.sample(4, 100));
    }

    #[test]
    fn error_metric_by_hand() {
        let b = NodeVectors::from_rows(&[vec![0.0], vec![2.0]]).unwrap();
        let p = QuadraticProblem::from_centers(b);
        let xs = NodeVectors::zeros(2, 1);
        assert_eq!(error_metric(p.optimum().unwrap(), &xs), 1.0);
        let at_opt = NodeVectors::broadcast(2, p.optimum().unwrap());
        assert_eq!(error_metric(p.optimum().unwrap(), &at_opt), 0.0);
    }

    #[test]
    fn error_at_centers_is_heterogeneity() {
        let p = generate_quadratic(7, 6, 3.0, 11).unwrap();
        let e = error_metric(p.optimum().unwrap(), p.centers());
        assert_abs_diff_eq!(e, p.heterogeneity(), epsilon = 1e-14);
    }

    #[test]
    fn consensus_distance_by_hand() {
        let xs = NodeVectors::from_rows(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(consensus_distance(&xs), 1.0);
        let same = NodeVectors::broadcast(4, &[1.0, -3.0]);
        assert_eq!(consensus_distance(&same), 0.0);
    }

    #[test]
    fn quadratic_gap_matches_generic_definition() {
        let p = generate_quadratic(5, 4, 2.0, 8).unwrap();
        let x = vec![0.3, -0.2, 1.0, 0.0, 0.5];
        let direct = p.global_value(&x) - p.global_value(p.optimum().unwrap());
        assert_abs_diff_eq!(p.optimality_gap(&x).unwrap(), direct, epsilon = 1e-12);
    }
}
