use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use log::info;
use rayon::prelude::*;

use super::config::{AlgorithmSpec, ExperimentConfig};
use super::record::RunRecord;
use crate::algorithms::{run, RunSpec};
use crate::error::{Error, Result};
use crate::objectives::{generate_quadratic, NoiseStream};
use crate::rng::derive_seed;
use crate::topology::TopologySpec;
use crate::vectors::NodeVectors;

/// One cell of the cross product.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub algorithm: AlgorithmSpec,
    pub topology: TopologySpec,
    pub zeta_sq: f64,
    pub sigma_sq: f64,
    pub rep: usize,
}

impl SweepPoint {
    /// Problem seed; shared by every point with the same `rep`. The center
    /// directions are common across a `zeta^2` sweep, only their scale moves.
    pub fn problem_seed(&self, master: u64) -> u64 {
        derive_seed(master, &[1, self.rep as u64])
    }

    /// Gradient-noise seed; shared by every algorithm and topology at the
    /// same `(rep, zeta^2, sigma^2)`.
    pub fn noise_seed(&self, master: u64) -> u64 {
        derive_seed(
            master,
            &[
                2,
                self.rep as u64,
                self.zeta_sq.to_bits(),
                self.sigma_sq.to_bits(),
            ],
        )
    }

    pub fn file_name(&self, index: usize) -> String {
        format!(
            "{index:04}_{}_{}_z{}_s{}_r{}.csv",
            self.algorithm.kind,
            self.topology.label().replace(':', "-"),
            self.zeta_sq,
            self.sigma_sq,
            self.rep
        )
    }
}

pub fn expand(cfg: &ExperimentConfig) -> Vec<SweepPoint> {
    let mut out = Vec::new();
    for a in &cfg.algorithms {
        for t in &cfg.topologies {
            for &z in &cfg.zeta_sq {
                for &s in &cfg.sigma_sq {
                    for rep in 0..cfg.reps {
                        out.push(SweepPoint {
                            algorithm: a.clone(),
                            topology: *t,
                            zeta_sq: z,
                            sigma_sq: s,
                            rep,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Runs a single point. The result depends only on the point's contents and
/// the shared settings in `cfg`, never on its position in the sweep.
pub fn run_point(cfg: &ExperimentConfig, point: &SweepPoint) -> Result<RunRecord> {
    let graph = point.topology.build(cfg.nodes)?;
    let n = graph.node_count();
    let problem_seed = point.problem_seed(cfg.seed);
    let noise_seed = point.noise_seed(cfg.seed);
    let problem = generate_quadratic(cfg.dim, n, point.zeta_sq, problem_seed)?;
    let noise = NoiseStream::new(noise_seed, point.sigma_sq, cfg.dim)?;
    let algorithm = point.algorithm.resolve(&graph)?;
    let mut record = run(&RunSpec {
        graph: &graph,
        objective: &problem,
        noise: &noise,
        algorithm: &algorithm,
        rounds: cfg.rounds,
        x0: Some(NodeVectors::broadcast(n, &vec![cfg.x0; cfg.dim])),
    })?;
    let meta = &mut record.meta;
    meta.insert("topology".into(), point.topology.label());
    meta.insert("mixing".into(), point.algorithm.mixing_label());
    meta.insert("zeta_sq".into(), format!("{:e}", point.zeta_sq));
    meta.insert("sigma_sq".into(), format!("{:e}", point.sigma_sq));
    meta.insert("rep".into(), point.rep.to_string());
    meta.insert("seed".into(), cfg.seed.to_string());
    meta.insert("problem_seed".into(), problem_seed.to_string());
    meta.insert("x0".into(), format!("{:e}", cfg.x0));
    meta.insert(
        "heterogeneity".into(),
        format!("{:e}", problem.heterogeneity()),
    );
    if let Some(a) = point.algorithm.alpha_total {
        meta.insert("alpha_total".into(), format!("{a:e}"));
    }
    Ok(record)
}

/// Runs every point on the rayon pool. With `out` set, each worker writes
/// its own CSV and an `index.csv` lists them all.
pub fn run_experiment(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let points = expand(cfg);
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
    }
    info!("running {} sweep points", points.len());
    let records = points
        .par_iter()
        .enumerate()
        .map(|(idx, p)| {
            let rec = run_point(cfg, p)?;
            if let Some(dir) = out {
                rec.save(&dir.join(p.file_name(idx)))?;
            }
            Ok(rec)
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(dir) = out {
        let mut w = csv::Writer::from_path(dir.join("index.csv"))?;
        w.write_record([
            "file",
            "algorithm",
            "topology",
            "zeta_sq",
            "sigma_sq",
            "rep",
            "final_error",
        ])?;
        for (idx, (p, rec)) in points.iter().zip(&records).enumerate() {
            w.write_record([
                p.file_name(idx),
                p.algorithm.kind.to_string(),
                p.topology.label(),
                format!("{:e}", p.zeta_sq),
                format!("{:e}", p.sigma_sq),
                p.rep.to_string(),
                format!("{:e}", rec.final_error()),
            ])?;
        }
        w.flush()?;
    }
    Ok(records)
}

/// Final error per `(algorithm, topology, zeta^2, sigma^2)`, averaged over
/// repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: String,
    pub topology: String,
    pub zeta_sq: f64,
    pub sigma_sq: f64,
    pub reps: usize,
    pub mean_final_error: f64,
}

fn meta_key<'a>(rec: &'a RunRecord, key: &str) -> Result<&'a str> {
    rec.meta
        .get(key)
        .map(String::as_str)
        .ok_or_else(|| Error::Record(format!("metadata key `{key}` missing")))
}

pub fn summarize(records: &[RunRecord]) -> Result<Vec<SummaryRow>> {
    let rounds: Vec<usize> = records.iter().map(|r| r.rows.len()).collect();
    if rounds.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::Record("records have different round counts".into()));
    }
    let mut groups: BTreeMap<(String, String, u64, u64), Vec<f64>> = BTreeMap::new();
    for rec in records {
        let z: f64 = meta_key(rec, "zeta_sq")?
            .parse()
            .map_err(|_| Error::Record("bad zeta_sq".into()))?;
        let s: f64 = meta_key(rec, "sigma_sq")?
            .parse()
            .map_err(|_| Error::Record("bad sigma_sq".into()))?;
        // bit patterns of nonnegative floats sort like the floats
        let key = (
            meta_key(rec, "algorithm")?.to_string(),
            meta_key(rec, "topology")?.to_string(),
            z.to_bits(),
            s.to_bits(),
        );
        groups.entry(key).or_default().push(rec.final_error());
    }
    Ok(groups
        .into_iter()
        .map(|((algorithm, topology, z, s), errs)| SummaryRow {
            algorithm,
            topology,
            zeta_sq: f64::from_bits(z),
            sigma_sq: f64::from_bits(s),
            reps: errs.len(),
            mean_final_error: errs.iter().sum::<f64>() / errs.len() as f64,
        })
        .collect())
}

/// Least-squares line with its coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            algorithms: vec![AlgorithmSpec::dpsgd(0.1), AlgorithmSpec::gecl(0.1)],
            topologies: vec![TopologySpec::Ring, TopologySpec::Complete],
            zeta_sq: vec![0.0, 1.0],
            sigma_sq: vec![0.5],
            nodes: 5,
            dim: 3,
            rounds: 20,
            seed: 11,
            reps: 2,
            x0: 0.0,
            out: None,
        }
    }

    #[test]
    fn cross_product_size() {
        assert_eq!(expand(&small()).len(), 2 * 2 * 2 * 2);
    }

    #[test]
    fn zero_rounds_gives_single_row() {
        let cfg = ExperimentConfig {
            algorithms: vec![AlgorithmSpec::gt(0.1)],
            rounds: 0,
            nodes: 4,
            dim: 2,
            ..ExperimentConfig::default()
        };
        let recs = run_experiment(&cfg, None).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].rows.len(), 1);
    }

    #[test]
    fn records_do_not_depend_on_sweep_order() {
        let cfg = small();
        let forward = run_experiment(&cfg, None).unwrap();
        let mut rev = cfg.clone();
        rev.algorithms.reverse();
        rev.topologies.reverse();
        rev.zeta_sq.reverse();
        let backward = run_experiment(&rev, None).unwrap();
        for rec in &forward {
            assert!(backward.contains(rec));
        }
    }

    #[test]
    fn summary_averages_reps() {
        let recs = run_experiment(&small(), None).unwrap();
        let rows = summarize(&recs).unwrap();
        assert_eq!(rows.len(), 8);
        assert!(rows.iter().all(|r| r.reps == 2));
    }

    #[test]
    fn fit_of_exact_line() {
        let f = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-15);
        assert!((f.intercept - 1.0).abs() < 1e-15);
        assert!((f.r_squared - 1.0).abs() < 1e-15);
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }

    #[test]
    fn writes_index_and_records() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            rounds: 3,
            ..small()
        };
        let recs = run_experiment(&cfg, Some(dir.path())).unwrap();
        let index = fs::read_to_string(dir.path().join("index.csv")).unwrap();
        assert_eq!(index.lines().count(), recs.len() + 1);
        let first = expand(&cfg)[0].file_name(0);
        assert_eq!(RunRecord::load(&dir.path().join(first)).unwrap(), recs[0]);
    }
}
