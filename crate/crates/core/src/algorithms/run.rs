use std::fmt;
use std::str::FromStr;

use log::warn;

use super::{Algorithm, Dpsgd, DualInit, Ecl, Gecl, GradientTracking};
use crate::error::{Error, Result};
use crate::harness::{RoundMetrics, RunRecord};
use crate::mixing::{
    alpha_induced, frobenius_consts, spectral_gap, AlphaWeights, MixingMatrix, WeightMatrix,
};
use crate::objectives::{
    consensus_distance, error_metric, GradientOracle, NoiseStream, Objective, StochasticOracle,
};
use crate::rng::GENERATOR;
use crate::topology::Graph;
use crate::vectors::{dist_sq, norm, NodeVectors};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlgorithmKind {
    Dpsgd,
    Ecl,
    Gecl,
    Gt,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 4] = [Self::Dpsgd, Self::Ecl, Self::Gecl, Self::Gt];

    pub fn name(self) -> &'static str {
        match self {
            Self::Dpsgd => "dpsgd",
            Self::Ecl => "ecl",
            Self::Gecl => "gecl",
            Self::Gt => "gt",
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::config(format!("unknown algorithm `{s}`"), vec!["algorithm".into()])
            })
    }
}

/// Fully resolved hyperparameters for one algorithm.
#[derive(Debug, Clone)]
pub enum AlgorithmConfig {
    Dpsgd {
        eta: f64,
        weights: WeightMatrix,
    },
    Ecl {
        eta: f64,
        theta: f64,
        alpha: AlphaWeights,
        dual_init: DualInit,
    },
    Gecl {
        eta_prime: Vec<f64>,
        weights: WeightMatrix,
        alpha: AlphaWeights,
    },
    Gt {
        eta: f64,
        weights: WeightMatrix,
    },
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be positive and finite, got {v}"),
        })
    }
}

fn check_weights(w: &WeightMatrix, graph: &Graph, require_mixing: bool) -> Result<()> {
    if w.size() != graph.node_count() {
        return Err(Error::DimensionMismatch {
            expected: graph.node_count(),
            got: w.size(),
        });
    }
    if !w.respects(graph) {
        return Err(Error::InvalidGraph(
            "weights are nonzero off the graph's edges".into(),
        ));
    }
    let report = w.validate();
    if !report.is_mixing() {
        if require_mixing {
            return Err(Error::NotMixing(report));
        }
        warn!(
            "weights are not a mixing matrix (max violation {:.3e})",
            report.max_violation
        );
    }
    Ok(())
}

fn check_alpha(a: &AlphaWeights, graph: &Graph) -> Result<()> {
    if a.edge_count() != graph.edge_count() {
        return Err(Error::DimensionMismatch {
            expected: graph.edge_count(),
            got: a.edge_count(),
        });
    }
    Ok(())
}

fn common(values: &[f64]) -> Option<f64> {
    let first = *values.first()?;
    values
        .iter()
        .all(|v| (v - first).abs() <= 1e-12 * first.abs().max(1.0))
        .then_some(first)
}

impl AlgorithmConfig {
    pub fn kind(&self) -> AlgorithmKind {
        match self {
            Self::Dpsgd { .. } => AlgorithmKind::Dpsgd,
            Self::Ecl { .. } => AlgorithmKind::Ecl,
            Self::Gecl { .. } => AlgorithmKind::Gecl,
            Self::Gt { .. } => AlgorithmKind::Gt,
        }
    }

    pub fn validate(&self, graph: &Graph) -> Result<()> {
        match self {
            Self::Dpsgd { eta, weights } | Self::Gt { eta, weights } => {
                positive("eta", *eta)?;
                check_weights(weights, graph, true)
            }
            Self::Ecl {
                eta, theta, alpha, ..
            } => {
                positive("eta", *eta)?;
                if !(*theta > 0.0 && *theta <= 1.0) {
                    return Err(Error::InvalidParameter {
                        name: "theta",
                        reason: format!("must lie in (0, 1], got {theta}"),
                    });
                }
                check_alpha(alpha, graph)
            }
            Self::Gecl {
                eta_prime,
                weights,
                alpha,
            } => {
                if eta_prime.len() != graph.node_count() {
                    return Err(Error::DimensionMismatch {
                        expected: graph.node_count(),
                        got: eta_prime.len(),
                    });
                }
                for &e in eta_prime {
                    positive("eta_prime", e)?;
                }
                check_alpha(alpha, graph)?;
                check_weights(weights, graph, false)
            }
        }
    }

    /// Builds the state machine at `x0`. Gradient tracking draws its first
    /// gradients from `oracle` with round key 0.
    pub fn instantiate(
        &self,
        graph: &Graph,
        x0: NodeVectors,
        oracle: &dyn GradientOracle,
    ) -> Result<Box<dyn Algorithm>> {
        self.validate(graph)?;
        x0.check_shape(graph.node_count(), oracle.dim())?;
        Ok(match self {
            Self::Dpsgd { eta, weights } => Box::new(Dpsgd::new(x0, weights.clone(), *eta)),
            Self::Ecl {
                eta,
                theta,
                alpha,
                dual_init,
            } => Box::new(Ecl::new(graph, x0, alpha, *eta, *theta, *dual_init)),
            Self::Gecl {
                eta_prime,
                weights,
                alpha,
            } => Box::new(Gecl::new(
                graph,
                x0,
                weights.clone(),
                eta_prime.clone(),
                alpha,
            )?),
            Self::Gt { eta, weights } => {
                let g0 = oracle.gradients(&x0, 0);
                Box::new(GradientTracking::new(x0, weights.clone(), *eta, g0))
            }
        })
    }

    /// Hyperparameters and derived constants as metadata entries.
    pub fn describe(&self, graph: &Graph) -> Result<Vec<(String, String)>> {
        let mut out = vec![("algorithm".to_string(), self.kind().to_string())];
        let zero = AlphaWeights::zeros(graph);
        let e = graph.edge_count();
        let (weights, alpha, eta_prime, vectors) = match self {
            Self::Dpsgd { eta, weights } => {
                out.push(("eta".into(), format!("{eta:e}")));
                (weights.clone(), &zero, vec![*eta], 2 * e)
            }
            Self::Gt { eta, weights } => {
                out.push(("eta".into(), format!("{eta:e}")));
                (weights.clone(), &zero, vec![*eta], 4 * e)
            }
            Self::Ecl {
                eta,
                theta,
                alpha,
                dual_init,
            } => {
                out.push(("eta".into(), format!("{eta:e}")));
                out.push(("theta".into(), format!("{theta:e}")));
                out.push(("z_init".into(), format!("{dual_init:?}").to_lowercase()));
                let induced = alpha_induced(graph, alpha, *eta)?;
                (induced.weights, alpha, induced.eta_prime, 2 * e)
            }
            Self::Gecl {
                eta_prime,
                weights,
                alpha,
            } => (weights.clone(), alpha, eta_prime.clone(), 6 * e),
        };
        if !alpha.all_zero() {
            let total = alpha.values().iter().sum::<f64>();
            out.push(("alpha_sum".into(), format!("{total:e}")));
        }
        let p = match MixingMatrix::new(weights.clone()) {
            Ok(m) => spectral_gap(&m),
            Err(_) => f64::NAN,
        };
        let (b_prime, b) = frobenius_consts(&weights, graph, alpha);
        out.push(("p".into(), format!("{p:e}")));
        out.push(("b_prime".into(), format!("{b_prime:e}")));
        out.push(("b".into(), format!("{b:e}")));
        let step = match common(&eta_prime) {
            Some(v) => format!("{v:e}"),
            None => {
                let lo = eta_prime.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = eta_prime.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                format!("{lo:e}..{hi:e}")
            }
        };
        out.push(("eta_prime".into(), step));
        out.push(("vectors_per_round".into(), vectors.to_string()));
        Ok(out)
    }
}

/// Inputs to a single simulation.
pub struct RunSpec<'a, O: Objective> {
    pub graph: &'a Graph,
    pub objective: &'a O,
    pub noise: &'a NoiseStream,
    pub algorithm: &'a AlgorithmConfig,
    pub rounds: usize,
    /// Defaults to all zeros.
    pub x0: Option<NodeVectors>,
}

fn metrics<O: Objective>(
    round: usize,
    alg: &dyn Algorithm,
    objective: &O,
    prev_mean: Option<(&[f64], &[f64])>,
) -> RoundMetrics {
    let xs = alg.params();
    let optimum = objective.optimum();
    let mean = xs.mean();
    let error = optimum.map_or(f64::NAN, |o| error_metric(o, xs));
    let function_gap = objective.optimality_gap(&mean).unwrap_or(f64::NAN);
    let (sum_c_norm, correction_error) = match alg.corrections() {
        Some(cs) => {
            let ce = optimum.map(|o| {
                let mut g = vec![0.0; o.len()];
                let mut acc = 0.0;
                for i in 0..cs.nodes() {
                    objective.grad_into(i, o, &mut g);
                    acc += dist_sq(&g, cs.row(i));
                }
                acc / cs.nodes() as f64
            });
            (Some(norm(&cs.sum())), ce)
        }
        None => (None, None),
    };
    let average_residual = prev_mean.map(|(prev, shift)| {
        let diff: Vec<f64> = mean
            .iter()
            .zip(prev)
            .zip(shift)
            .map(|((m, p), s)| m - (p - s))
            .collect();
        norm(&diff)
    });
    RoundMetrics {
        round,
        error,
        consensus: consensus_distance(xs),
        function_gap,
        sum_c_norm,
        correction_error,
        tracker_residual: alg.tracker_residual(),
        average_residual,
    }
}

/// Runs `rounds` rounds and records metrics at rounds `0..=rounds`.
pub fn run<O: Objective>(spec: &RunSpec<'_, O>) -> Result<RunRecord> {
    let n = spec.graph.node_count();
    if spec.objective.nodes() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: spec.objective.nodes(),
        });
    }
    let d = spec.objective.dim();
    if spec.noise.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: spec.noise.dim(),
        });
    }
    let x0 = spec.x0.clone().unwrap_or_else(|| NodeVectors::zeros(n, d));
    let oracle = StochasticOracle::new(spec.objective, spec.noise);
    let mut alg = spec.algorithm.instantiate(spec.graph, x0, &oracle)?;

    let mut record = RunRecord::default();
    for (k, v) in spec.algorithm.describe(spec.graph)? {
        record.meta.insert(k, v);
    }
    record.meta.insert("rounds".into(), spec.rounds.to_string());
    record.meta.insert("nodes".into(), n.to_string());
    record.meta.insert("dim".into(), d.to_string());
    record
        .meta
        .insert("noise_seed".into(), spec.noise.seed().to_string());
    record
        .meta
        .insert("sigma_sq".into(), format!("{:e}", spec.noise.sigma_sq()));
    record.meta.insert("rng".into(), GENERATOR.into());

    record.rows.reserve(spec.rounds + 1);
    record
        .rows
        .push(metrics(0, alg.as_ref(), spec.objective, None));
    for r in 0..spec.rounds {
        let before = alg.params().mean();
        let report = alg.step(&oracle, r as u64);
        record.rows.push(metrics(
            r + 1,
            alg.as_ref(),
            spec.objective,
            Some((&before, &report.mean_shift)),
        ));
    }
    Ok(record)
}
