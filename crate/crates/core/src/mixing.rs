//! Gossip weight matrices and their diagnostics.
//!
//! [`WeightMatrix`] is any square weight matrix the algorithms can mix with;
//! the edge-penalty construction produces one that is row-stochastic but, for
//! unequal penalty row sums, not symmetric. [`MixingMatrix`] is the validated
//! subset: symmetric, doubly stochastic, entries in `[0, 1]`.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use log::warn;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::topology::Graph;
use crate::vectors::{axpy, NodeVectors};

/// Tolerance for the exactness checks on mixing matrices.
pub const MIXING_TOL: f64 = 1e-12;

/// Dense weights plus the nonzero pattern of every row.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    dense: DMatrix<f64>,
    rows: Vec<Vec<(usize, f64)>>,
}

impl WeightMatrix {
    pub fn from_dense(dense: DMatrix<f64>) -> Result<Self> {
        if dense.nrows() != dense.ncols() {
            return Err(Error::DimensionMismatch {
                expected: dense.nrows(),
                got: dense.ncols(),
            });
        }
        let rows = (0..dense.nrows())
            .map(|i| {
                (0..dense.ncols())
                    .filter(|&j| dense[(i, j)] != 0.0)
                    .map(|j| (j, dense[(i, j)]))
                    .collect()
            })
            .collect();
        Ok(Self { dense, rows })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_dense(DMatrix::identity(n, n)).expect("square")
    }

    pub fn size(&self) -> usize {
        self.dense.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.dense[(i, j)]
    }

    pub fn dense(&self) -> &DMatrix<f64> {
        &self.dense
    }

    /// Nonzero `(j, W_ij)` entries of row `i`, ascending in `j`.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// `out_i = sum_j W_ij x_j`.
    pub fn apply_into(&self, x: &NodeVectors, out: &mut NodeVectors) {
        debug_assert_eq!(x.nodes(), self.size());
        for (i, row) in self.rows.iter().enumerate() {
            let dst = out.row_mut(i);
            dst.fill(0.0);
            for &(j, w) in row {
                axpy(dst, w, x.row(j));
            }
        }
    }

    pub fn apply(&self, x: &NodeVectors) -> NodeVectors {
        let mut out = NodeVectors::zeros(x.nodes(), x.dim());
        self.apply_into(x, &mut out);
        out
    }

    /// True when every off-diagonal nonzero is an edge of `g`.
    pub fn respects(&self, g: &Graph) -> bool {
        self.size() == g.node_count()
            && self
                .rows
                .iter()
                .enumerate()
                .all(|(i, row)| row.iter().all(|&(j, _)| i == j || g.has_edge(i, j)))
    }

    pub fn validate(&self) -> MixingReport {
        validate_mixing(&self.dense)
    }

    pub fn into_mixing(self) -> Result<MixingMatrix> {
        MixingMatrix::new(self)
    }
}

/// A weight matrix that passed [`validate_mixing`].
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix(WeightMatrix);

impl MixingMatrix {
    pub fn new(w: WeightMatrix) -> Result<Self> {
        let report = w.validate();
        if report.is_mixing() {
            Ok(Self(w))
        } else {
            Err(Error::NotMixing(report))
        }
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.0
    }
}

impl Deref for MixingMatrix {
    type Target = WeightMatrix;

    fn deref(&self) -> &WeightMatrix {
        &self.0
    }
}

impl AsRef<WeightMatrix> for MixingMatrix {
    fn as_ref(&self) -> &WeightMatrix {
        &self.0
    }
}

impl AsRef<WeightMatrix> for WeightMatrix {
    fn as_ref(&self) -> &WeightMatrix {
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingReport {
    pub symmetric: bool,
    pub doubly_stochastic: bool,
    pub nonneg: bool,
    /// Largest absolute defect over all three checks.
    pub max_violation: f64,
}

impl MixingReport {
    pub fn is_mixing(&self) -> bool {
        self.symmetric && self.doubly_stochastic && self.nonneg
    }
}

/// Checks symmetry, unit row and column sums, and entries in `[0, 1]`, each
/// at tolerance [`MIXING_TOL`].
pub fn validate_mixing(w: &DMatrix<f64>) -> MixingReport {
    let n = w.nrows();
    let mut sym: f64 = 0.0;
    let mut stoch: f64 = 0.0;
    let mut range: f64 = 0.0;
    for i in 0..n {
        let row_sum: f64 = (0..n).map(|j| w[(i, j)]).sum();
        let col_sum: f64 = (0..n).map(|j| w[(j, i)]).sum();
        stoch = stoch.max((row_sum - 1.0).abs()).max((col_sum - 1.0).abs());
        for j in 0..n {
            let v = w[(i, j)];
            sym = sym.max((v - w[(j, i)]).abs());
            range = range.max(0.0 - v).max(v - 1.0);
        }
    }
    MixingReport {
        symmetric: sym <= MIXING_TOL,
        doubly_stochastic: stoch <= MIXING_TOL,
        nonneg: range <= MIXING_TOL,
        max_violation: sym.max(stoch).max(range),
    }
}

/// Symmetric max-degree Metropolis-Hastings weights:
/// `W_ij = 1 / (max(deg i, deg j) + 1)` on edges, remainder on the diagonal.
pub fn metropolis(g: &Graph) -> MixingMatrix {
    if !g.is_connected() {
        warn!("metropolis weights on a disconnected graph: spectral gap is 0");
    }
    let n = g.node_count();
    let mut w = DMatrix::zeros(n, n);
    for &(i, j) in g.edges() {
        let v = 1.0 / (g.degree(i).max(g.degree(j)) + 1) as f64;
        w[(i, j)] = v;
        w[(j, i)] = v;
    }
    for i in 0..n {
        let off: f64 = g.neighbors(i).iter().map(|&j| w[(i, j)]).sum();
        w[(i, i)] = 1.0 - off;
    }
    WeightMatrix::from_dense(w)
        .and_then(MixingMatrix::new)
        .expect("metropolis weights form a mixing matrix")
}

/// Nonnegative penalty per undirected edge, indexed by edge id.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaWeights {
    values: Vec<f64>,
}

impl AlphaWeights {
    pub fn new(g: &Graph, values: Vec<f64>) -> Result<Self> {
        if values.len() != g.edge_count() {
            return Err(Error::DimensionMismatch {
                expected: g.edge_count(),
                got: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("edge penalties must be >= 0, got {v}"),
            });
        }
        Ok(Self { values })
    }

    pub fn uniform(g: &Graph, value: f64) -> Result<Self> {
        Self::new(g, vec![value; g.edge_count()])
    }

    pub fn zeros(g: &Graph) -> Self {
        Self {
            values: vec![0.0; g.edge_count()],
        }
    }

    pub fn edge_count(&self) -> usize {
        self.values.len()
    }

    pub fn by_edge(&self, edge: usize) -> f64 {
        self.values[edge]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `alpha_{i|j}`, zero when `(i, j)` is not an edge.
    pub fn get(&self, g: &Graph, i: usize, j: usize) -> f64 {
        g.edge_id(i, j).map_or(0.0, |e| self.values[e])
    }

    /// `S_i = sum_{k in N_i} alpha_{i|k}` for every node.
    pub fn row_sums(&self, g: &Graph) -> Vec<f64> {
        (0..g.node_count())
            .map(|i| g.slots(i).map(|s| self.values[g.slot_edge(s)]).sum())
            .collect()
    }

    pub fn all_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// `alpha / k` on every edge of a `k`-regular graph, so that every node's
/// penalties add up to `alpha_total`.
pub fn example1_alpha(g: &Graph, alpha_total: f64) -> Result<AlphaWeights> {
    if !(alpha_total > 0.0) {
        return Err(Error::InvalidParameter {
            name: "alpha_total",
            reason: format!("must be positive, got {alpha_total}"),
        });
    }
    let k = g.regularity().ok_or(Error::NotRegular)?;
    AlphaWeights::uniform(g, alpha_total / k as f64)
}

/// Weights and per-node step sizes implied by edge penalties and a step size.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaInduced {
    pub weights: WeightMatrix,
    pub eta_prime: Vec<f64>,
}

impl AlphaInduced {
    /// The common step size when all per-node values agree within `tol`.
    pub fn common_eta_prime(&self, tol: f64) -> Option<f64> {
        let first = *self.eta_prime.first()?;
        self.eta_prime
            .iter()
            .all(|v| (v - first).abs() <= tol)
            .then_some(first)
    }
}

/// Gossip weights hidden inside the ECL update:
///
/// ```text
/// W_ii = (2 + eta S_i) / (2 (1 + eta S_i))
/// W_ij = eta alpha_{i|j} / (2 (1 + eta S_i))      (i, j) an edge
/// eta'_i = eta / (1 + eta S_i)
/// ```
///
/// Rows always sum to one. The matrix is symmetric only when neighboring
/// nodes have equal `S_i`.
pub fn alpha_induced(g: &Graph, a: &AlphaWeights, eta: f64) -> Result<AlphaInduced> {
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter {
            name: "eta",
            reason: format!("must be positive, got {eta}"),
        });
    }
    if a.edge_count() != g.edge_count() {
        return Err(Error::DimensionMismatch {
            expected: g.edge_count(),
            got: a.edge_count(),
        });
    }
    let n = g.node_count();
    let sums = a.row_sums(g);
    let mut w = DMatrix::zeros(n, n);
    let mut eta_prime = Vec::with_capacity(n);
    for i in 0..n {
        let denom = 1.0 + eta * sums[i];
        w[(i, i)] = (2.0 + eta * sums[i]) / (2.0 * denom);
        for (s, &j) in g.slots(i).zip(g.neighbors(i)) {
            w[(i, j)] = eta * a.by_edge(g.slot_edge(s)) / (2.0 * denom);
        }
        eta_prime.push(eta / denom);
    }
    Ok(AlphaInduced {
        weights: WeightMatrix::from_dense(w)?,
        eta_prime,
    })
}

/// `1 - rho^2` with `rho` the spectral norm of `W - 11^T/n`, i.e. the
/// largest eigenvalue magnitude of `W` off the consensus direction. This is
/// the tightest `p` with `||XW - Xbar||_F^2 <= (1 - p) ||X - Xbar||_F^2`.
pub fn spectral_gap(w: &MixingMatrix) -> f64 {
    let n = w.size();
    let centered = w.dense() - DMatrix::from_element(n, n, 1.0 / n as f64);
    // symmetrize away the last ulp so the eigensolver sees an exactly symmetric input
    let sym = (&centered + centered.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    let rho = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (1.0 - rho * rho).clamp(0.0, 1.0)
}

/// `D - E` where `D_ij = alpha_{i|j}` on edges and `E = diag(sum_k alpha_{k|i})`.
pub fn penalty_laplacian(g: &Graph, a: &AlphaWeights) -> DMatrix<f64> {
    let n = g.node_count();
    let mut m = DMatrix::zeros(n, n);
    for (e, &(i, j)) in g.edges().iter().enumerate() {
        m[(i, j)] = a.by_edge(e);
        m[(j, i)] = a.by_edge(e);
    }
    for i in 0..n {
        let col: f64 = (0..n).map(|k| m[(k, i)]).sum();
        m[(i, i)] = -col;
    }
    m
}

/// `(b', b) = (||W - I||_F^2, ||(D - E) / 2||_F^2)`.
pub fn frobenius_consts(w: &WeightMatrix, g: &Graph, a: &AlphaWeights) -> (f64, f64) {
    let n = w.size();
    let b_prime = (w.dense() - DMatrix::<f64>::identity(n, n)).norm_squared();
    let b = (penalty_laplacian(g, a) * 0.5).norm_squared();
    (b_prime, b)
}

/// Mixing scheme as named in experiment configs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MixingSpec {
    Metropolis,
    /// Edge-penalty weights with uniform per-node total `alpha_total`.
    Alpha(f64),
}

impl MixingSpec {
    /// Builds the weights on `g`. The penalty scheme needs the step size that
    /// enters the induced weights, passed as `eta`.
    pub fn build(&self, g: &Graph, eta: f64) -> Result<WeightMatrix> {
        match *self {
            MixingSpec::Metropolis => Ok(metropolis(g).weights().clone()),
            MixingSpec::Alpha(total) => {
                let a = example1_alpha(g, total)?;
                Ok(alpha_induced(g, &a, eta)?.weights)
            }
        }
    }
}

impl fmt::Display for MixingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MixingSpec::Metropolis => write!(f, "metropolis"),
            MixingSpec::Alpha(a) => write!(f, "alpha:{a}"),
        }
    }
}

impl FromStr for MixingSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "metropolis" {
            return Ok(MixingSpec::Metropolis);
        }
        let bad = || {
            Error::config(
                format!("unknown mixing scheme `{s}`"),
                vec!["mixing".into()],
            )
        };
        let total: f64 = s
            .strip_prefix("alpha:")
            .ok_or_else(bad)?
            .trim()
            .parse()
            .map_err(|_| bad())?;
        if !(total > 0.0) {
            return Err(bad());
        }
        Ok(MixingSpec::Alpha(total))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_complete, build_ring, build_torus};
    use approx::assert_abs_diff_eq;

    fn path3() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn metropolis_on_ring_is_thirds() {
        let w = metropolis(&build_ring(25).unwrap());
        for i in 0..25 {
            assert_abs_diff_eq!(w.get(i, i), 1.0 / 3.0, epsilon = 1e-15);
            assert_abs_diff_eq!(w.get(i, (i + 1) % 25), 1.0 / 3.0, epsilon = 1e-15);
            assert_eq!(w.get(i, (i + 5) % 25), 0.0);
        }
    }

    #[test]
    fn metropolis_on_complete_is_uniform() {
        let n = 6;
        let w = metropolis(&build_complete(n).unwrap());
        for i in 0..n {
            for j in 0..n {
                assert_abs_diff_eq!(w.get(i, j), 1.0 / n as f64, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn metropolis_on_path_uses_max_degree() {
        let w = metropolis(&path3());
        assert_abs_diff_eq!(w.get(0, 1), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.get(0, 0), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.get(1, 1), 1.0 / 3.0, epsilon = 1e-15);
        assert!(w.validate().is_mixing());
    }

    #[test]
    fn metropolis_on_disconnected_graph_still_builds() {
        let g = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let w = metropolis(&g);
        assert!(w.validate().is_mixing());
        assert_abs_diff_eq!(spectral_gap(&w), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn induced_weights_for_reference_ring() {
        let g = build_ring(25).unwrap();
        let a = example1_alpha(&g, 1000.0).unwrap();
        assert!(a.values().iter().all(|&v| v == 500.0));
        let ind = alpha_induced(&g, &a, 0.5).unwrap();
        for i in 0..25 {
            assert_abs_diff_eq!(ind.eta_prime[i], 0.5 / 501.0, epsilon = 1e-18);
            assert_abs_diff_eq!(ind.weights.get(i, i), 502.0 / 1002.0, epsilon = 1e-15);
            assert_abs_diff_eq!(
                ind.weights.get(i, (i + 1) % 25),
                250.0 / 1002.0,
                epsilon = 1e-15
            );
        }
        assert!(ind.weights.validate().is_mixing());
        assert!(ind.weights.respects(&g));
    }

    #[test]
    fn zero_penalties_give_identity() {
        let g = build_ring(5).unwrap();
        let ind = alpha_induced(&g, &AlphaWeights::zeros(&g), 0.3).unwrap();
        assert_eq!(ind.weights, WeightMatrix::identity(5));
        assert!(ind.eta_prime.iter().all(|&e| e == 0.3));
    }

    #[test]
    fn unequal_row_sums_break_symmetry() {
        let g = path3();
        let a = AlphaWeights::uniform(&g, 1.0).unwrap();
        let ind = alpha_induced(&g, &a, 0.5).unwrap();
        assert!(ind.weights.get(0, 1) != ind.weights.get(1, 0));
        let report = ind.weights.validate();
        assert!(!report.symmetric);
        for i in 0..3 {
            let row: f64 = (0..3).map(|j| ind.weights.get(i, j)).sum();
            assert_abs_diff_eq!(row, 1.0, epsilon = 1e-15);
        }
        assert!(ind.common_eta_prime(1e-14).is_none());
        assert!(matches!(
            ind.weights.into_mixing(),
            Err(Error::NotMixing(_))
        ));
    }

    #[test]
    fn alpha_induced_rejects_nonpositive_eta() {
        let g = path3();
        assert!(alpha_induced(&g, &AlphaWeights::zeros(&g), 0.0).is_err());
    }

    #[test]
    fn example1_requires_regular_graph() {
        assert!(matches!(
            example1_alpha(&path3(), 10.0),
            Err(Error::NotRegular)
        ));
        let c = build_complete(25).unwrap();
        let a = example1_alpha(&c, 1000.0).unwrap();
        assert_abs_diff_eq!(a.by_edge(0), 1000.0 / 24.0, epsilon = 1e-12);
        let t = build_torus(5, 5).unwrap();
        assert!(example1_alpha(&t, 1000.0)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 250.0));
        assert!(example1_alpha(&t, 0.0).is_err());
    }

    #[test]
    fn negative_alpha_rejected() {
        let g = path3();
        assert!(AlphaWeights::new(&g, vec![1.0, -1.0]).is_err());
        assert!(AlphaWeights::new(&g, vec![1.0]).is_err());
    }

    #[test]
    fn spectral_gap_extremes() {
        let uniform = metropolis(&build_complete(7).unwrap());
        assert_abs_diff_eq!(spectral_gap(&uniform), 1.0, epsilon = 1e-12);
        let eye = WeightMatrix::identity(5).into_mixing().unwrap();
        assert_abs_diff_eq!(spectral_gap(&eye), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn frobenius_constants() {
        let g = build_complete(2).unwrap();
        assert_eq!(
            frobenius_consts(&WeightMatrix::identity(2), &g, &AlphaWeights::zeros(&g)),
            (0.0, 0.0)
        );
        let w = metropolis(&g);
        let (bp, _) = frobenius_consts(&w, &g, &AlphaWeights::zeros(&g));
        assert_abs_diff_eq!(bp, 1.0, epsilon = 1e-15);

        let g = build_ring(3).unwrap();
        let a = AlphaWeights::uniform(&g, 1.0).unwrap();
        let de = penalty_laplacian(&g, &a);
        for i in 0..3 {
            assert_eq!(de[(i, i)], -2.0);
        }
        let (_, b) = frobenius_consts(&WeightMatrix::identity(3), &g, &a);
        assert_abs_diff_eq!(b, 4.5, epsilon = 1e-15);
    }

    #[test]
    fn validate_flags_negative_entries() {
        let w = DMatrix::from_row_slice(2, 2, &[1.5, -0.5, -0.5, 1.5]);
        let r = validate_mixing(&w);
        assert!(r.symmetric && r.doubly_stochastic && !r.nonneg);
        assert_abs_diff_eq!(r.max_violation, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn mixing_names() {
        assert_eq!(
            "metropolis".parse::<MixingSpec>().unwrap(),
            MixingSpec::Metropolis
        );
        assert_eq!(
            "alpha:1000".parse::<MixingSpec>().unwrap(),
            MixingSpec::Alpha(1000.0)
        );
        assert!("alpha:-1".parse::<MixingSpec>().is_err());
        assert!("fastest".parse::<MixingSpec>().is_err());
    }
}
