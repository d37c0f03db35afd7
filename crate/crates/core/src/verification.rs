//! Coupled runs that check the structural identities behind ECL.
//!
//! * ECL and its gossip reformulation produce the same iterates.
//! * Uniform penalties on a regular graph yield a mixing matrix with a common step size.
//! * G-ECL conserves `sum_i c_i` and moves the average like plain SGD.
//! * `p_i = g_i - c_i` obeys a gradient-tracking recursion plus a term `T`.

use crate::algorithms::{Algorithm, DualInit, Ecl, Gecl};
use crate::error::{Error, Result};
use crate::harness::RunRecord;
use crate::mixing::{alpha_induced, example1_alpha, AlphaWeights, MIXING_TOL};
use crate::objectives::{GradientOracle, NoiseStream, Objective, StochasticOracle};
use crate::topology::{Graph, TopologySpec};
use crate::vectors::{dist_sq, norm, NodeVectors};

pub const THEOREM1_TOL: f64 = 1e-9;
pub const LEMMA1_TOL: f64 = 1e-10;
pub const GT_FORM_TOL: f64 = 1e-9;
pub const ETA_PRIME_TOL: f64 = 1e-14;

/// Inputs shared by the coupled checks.
pub struct Coupling<'a, O: Objective> {
    pub graph: &'a Graph,
    pub objective: &'a O,
    pub noise: &'a NoiseStream,
    pub alpha: &'a AlphaWeights,
    pub eta: f64,
    pub theta: f64,
    pub rounds: usize,
    /// Defaults to all zeros.
    pub x0: Option<NodeVectors>,
}

impl<O: Objective> Coupling<'_, O> {
    fn start(&self) -> Result<NodeVectors> {
        let x0 = self
            .x0
            .clone()
            .unwrap_or_else(|| NodeVectors::zeros(self.graph.node_count(), self.objective.dim()));
        x0.check_shape(self.graph.node_count(), self.objective.dim())?;
        Ok(x0)
    }

    fn gecl(&self, x0: NodeVectors) -> Result<Gecl> {
        let induced = alpha_induced(self.graph, self.alpha, self.eta)?;
        Gecl::new(
            self.graph,
            x0,
            induced.weights,
            induced.eta_prime,
            self.alpha,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub rounds: usize,
    /// Max over rounds and nodes of `||x_i(ECL) - x_i(G-ECL)||`.
    pub max_x_deviation: f64,
    /// Entry `r` is the max over nodes after round `r`; entry 0 is the start.
    pub per_round_deviation: Vec<f64>,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.max_x_deviation <= THEOREM1_TOL
    }
}

fn max_node_distance(a: &NodeVectors, b: &NodeVectors) -> f64 {
    a.rows()
        .zip(b.rows())
        .map(|(x, y)| dist_sq(x, y).sqrt())
        .fold(0.0, f64::max)
}

/// Runs ECL (`z(0) = A x(0)`) and G-ECL (penalty-induced weights and per-node
/// steps) side by side on the same gradient noise, for any `theta`.
pub fn coupled_deviation<O: Objective>(c: &Coupling<'_, O>) -> Result<EquivalenceReport> {
    let x0 = c.start()?;
    let oracle = StochasticOracle::new(c.objective, c.noise);
    let mut ecl = Ecl::new(
        c.graph,
        x0.clone(),
        c.alpha,
        c.eta,
        c.theta,
        DualInit::Consensus,
    );
    let mut gecl = c.gecl(x0)?;
    let mut per_round = Vec::with_capacity(c.rounds + 1);
    per_round.push(max_node_distance(ecl.params(), gecl.params()));
    for r in 0..c.rounds {
        ecl.step(&oracle, r as u64);
        gecl.step(&oracle, r as u64);
        per_round.push(max_node_distance(ecl.params(), gecl.params()));
    }
    Ok(EquivalenceReport {
        rounds: c.rounds,
        max_x_deviation: per_round.iter().cloned().fold(0.0, f64::max),
        per_round_deviation: per_round,
    })
}

/// [`coupled_deviation`] with the premises enforced: `theta = 1/2` and
/// symmetric, nonnegative penalties.
pub fn check_theorem1<O: Objective>(c: &Coupling<'_, O>) -> Result<EquivalenceReport> {
    if c.theta != 0.5 {
        return Err(Error::TheoremPremise(format!(
            "the reformulation needs theta = 1/2, got {}",
            c.theta
        )));
    }
    coupled_deviation(c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma1Report {
    pub max_sum_c_norm: f64,
    pub max_average_residual: f64,
    pub rounds: usize,
}

impl Lemma1Report {
    pub fn passed(&self) -> bool {
        self.max_sum_c_norm <= LEMMA1_TOL && self.max_average_residual <= LEMMA1_TOL
    }
}

/// Reads `sum_c_norm` and `average_residual` from a G-ECL record.
pub fn check_lemma1(record: &RunRecord) -> Result<Lemma1Report> {
    let mut max_c = 0.0f64;
    let mut max_avg = 0.0f64;
    for row in &record.rows {
        let c = row
            .sum_c_norm
            .ok_or_else(|| Error::Record(format!("round {} has no sum_c_norm", row.round)))?;
        max_c = max_c.max(c);
        if c.is_nan() {
            max_c = f64::NAN;
        }
        if let Some(a) = row.average_residual {
            max_avg = if a.is_nan() { f64::NAN } else { max_avg.max(a) };
        }
    }
    Ok(Lemma1Report {
        max_sum_c_norm: max_c,
        max_average_residual: max_avg,
        rounds: record.rows.len().saturating_sub(1),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GtFormReport {
    pub rounds: usize,
    /// Entry `r` is the max over nodes of the recursion residual for
    /// `p(r+1)`.
    pub residual: Vec<f64>,
    /// Frobenius norm of `T` in round `r`.
    pub t_norm: Vec<f64>,
}

impl GtFormReport {
    pub fn max_residual(&self) -> f64 {
        self.residual.iter().cloned().fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_residual() <= GT_FORM_TOL
    }
}

/// Reconstructs `p_i = g_i - c_i` along a G-ECL run and checks
///
/// ```text
/// p_i(r+1) = sum_j W_ij p_j(r) + g_i(r+1) - g_i(r) - T_i(r)
/// T_i(r)   = sum_j alpha_{i|j}/2 (xt_j(r) - xt_i(r))
/// ```
pub fn check_gt_form<O: Objective>(c: &Coupling<'_, O>) -> Result<GtFormReport> {
    let x0 = c.start()?;
    let oracle = StochasticOracle::new(c.objective, c.noise);
    let induced = alpha_induced(c.graph, c.alpha, c.eta)?;
    let w = induced.weights.clone();
    let mut gecl = c.gecl(x0)?;
    let n = c.graph.node_count();
    let d = c.objective.dim();

    let tracker = |g: &NodeVectors, cs: &NodeVectors| {
        let mut p = g.clone();
        for i in 0..n {
            for (pk, ck) in p.row_mut(i).iter_mut().zip(cs.row(i)) {
                *pk -= ck;
            }
        }
        p
    };

    let mut grads = oracle.gradients(gecl.params(), 0);
    let mut p = tracker(&grads, gecl.corrections().expect("G-ECL keeps corrections"));
    let mut residual = Vec::with_capacity(c.rounds);
    let mut t_norm = Vec::with_capacity(c.rounds);
    for r in 0..c.rounds {
        gecl.apply(&grads);
        let xt = gecl.smoothed();
        let mut t = NodeVectors::zeros(n, d);
        for i in 0..n {
            for (s, &j) in c.graph.slots(i).zip(c.graph.neighbors(i)) {
                let half = 0.5 * c.alpha.by_edge(c.graph.slot_edge(s));
                let (xi, xj) = (xt.row(i).to_vec(), xt.row(j));
                for ((tk, a), b) in t.row_mut(i).iter_mut().zip(xj).zip(&xi) {
                    *tk += half * (a - b);
                }
            }
        }
        t_norm.push(norm(t.as_slice()));

        let next = oracle.gradients(gecl.params(), r as u64 + 1);
        let p_next = tracker(&next, gecl.corrections().expect("G-ECL keeps corrections"));
        let wp = w.apply(&p);
        let mut worst = 0.0f64;
        for i in 0..n {
            let predicted: Vec<f64> = (0..d)
                .map(|k| wp.row(i)[k] + next.row(i)[k] - grads.row(i)[k] - t.row(i)[k])
                .collect();
            worst = worst.max(dist_sq(&predicted, p_next.row(i)).sqrt());
        }
        residual.push(worst);
        grads = next;
        p = p_next;
    }
    Ok(GtFormReport {
        rounds: c.rounds,
        residual,
        t_norm,
    })
}

/// One row of the mixing check.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingCheck {
    pub topology: String,
    pub eta: f64,
    pub alpha_total: f64,
    pub symmetric: bool,
    pub doubly_stochastic: bool,
    pub nonneg: bool,
    pub max_violation: f64,
    /// `max_i eta'_i - min_i eta'_i`.
    pub eta_prime_spread: f64,
}

impl MixingCheck {
    pub fn passed(&self) -> bool {
        self.symmetric
            && self.doubly_stochastic
            && self.nonneg
            && self.max_violation <= MIXING_TOL
            && self.eta_prime_spread <= ETA_PRIME_TOL
    }
}

/// Uniform regular-graph penalties on every topology and step size.
pub fn check_mixing(
    topologies: &[TopologySpec],
    n: usize,
    alpha_total: f64,
    etas: &[f64],
) -> Result<Vec<MixingCheck>> {
    let mut out = Vec::new();
    for topo in topologies {
        let g = topo.build(n)?;
        let a = example1_alpha(&g, alpha_total)?;
        for &eta in etas {
            let induced = alpha_induced(&g, &a, eta)?;
            let report = induced.weights.validate();
            let lo = induced
                .eta_prime
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            let hi = induced
                .eta_prime
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            out.push(MixingCheck {
                topology: topo.label(),
                eta,
                alpha_total,
                symmetric: report.symmetric,
                doubly_stochastic: report.doubly_stochastic,
                nonneg: report.nonneg,
                max_violation: report.max_violation,
                eta_prime_spread: hi - lo,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{generate_quadratic, QuadraticProblem};
    use crate::topology::{build_complete, build_ring};

    #[test]
    fn zero_penalty_gives_zero_deviation() {
        let g = build_ring(5).unwrap();
        let prob = generate_quadratic(3, 5, 4.0, 1).unwrap();
        let noise = NoiseStream::new(2, 1.0, 3).unwrap();
        let a = AlphaWeights::zeros(&g);
        let rep = check_theorem1(&Coupling {
            graph: &g,
            objective: &prob,
            noise: &noise,
            alpha: &a,
            eta: 0.1,
            theta: 0.5,
            rounds: 50,
            x0: None,
        })
        .unwrap();
        assert_eq!(rep.max_x_deviation, 0.0);
        assert_eq!(rep.per_round_deviation.len(), 51);
    }

    #[test]
    fn wrong_theta_is_a_premise_error() {
        let g = build_ring(3).unwrap();
        let prob = generate_quadratic(1, 3, 0.0, 1).unwrap();
        let noise = NoiseStream::silent(1);
        let a = AlphaWeights::zeros(&g);
        let c = Coupling {
            graph: &g,
            objective: &prob,
            noise: &noise,
            alpha: &a,
            eta: 0.1,
            theta: 0.9,
            rounds: 1,
            x0: None,
        };
        assert!(matches!(check_theorem1(&c), Err(Error::TheoremPremise(_))));
        assert!(coupled_deviation(&c).is_ok());
    }

    #[test]
    fn lemma1_needs_corrections() {
        let mut rec = RunRecord::default();
        rec.rows.push(crate::harness::RoundMetrics {
            round: 0,
            error: 0.0,
            consensus: 0.0,
            function_gap: 0.0,
            sum_c_norm: None,
            correction_error: None,
            tracker_residual: None,
            average_residual: None,
        });
        assert!(check_lemma1(&rec).is_err());
    }

    #[test]
    fn gt_form_without_penalty_has_no_t() {
        let g = build_complete(4).unwrap();
        let prob = QuadraticProblem::from_centers(
            NodeVectors::from_rows(&[vec![1.0], vec![-2.0], vec![0.5], vec![0.5]]).unwrap(),
        );
        let noise = NoiseStream::new(9, 2.0, 1).unwrap();
        let a = AlphaWeights::zeros(&g);
        let rep = check_gt_form(&Coupling {
            graph: &g,
            objective: &prob,
            noise: &noise,
            alpha: &a,
            eta: 0.2,
            theta: 0.5,
            rounds: 20,
            x0: None,
        })
        .unwrap();
        assert!(rep.t_norm.iter().all(|&t| t == 0.0));
        assert!(rep.passed());
    }

    #[test]
    fn mixing_rows_per_topology_and_eta() {
        let rows = check_mixing(
            &[TopologySpec::Ring, TopologySpec::Complete],
            6,
            10.0,
            &[0.5, 0.01],
        )
        .unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(MixingCheck::passed));
    }
}
