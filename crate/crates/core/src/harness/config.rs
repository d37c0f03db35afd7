use std::collections::BTreeSet;
use std::path::PathBuf;

use toml::{Table, Value};

use crate::algorithms::{AlgorithmConfig, AlgorithmKind, DualInit};
use crate::error::{Error, Result};
use crate::mixing::{example1_alpha, AlphaWeights, MixingSpec};
use crate::topology::{Graph, TopologySpec};

/// Hyperparameters for one algorithm, before a graph is chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmSpec {
    pub kind: AlgorithmKind,
    pub eta: Option<f64>,
    pub eta_prime: Option<f64>,
    pub theta: Option<f64>,
    pub alpha_total: Option<f64>,
    pub mixing: Option<MixingSpec>,
    pub z_init: Option<DualInit>,
}

const HYPER_KEYS: [&str; 6] = [
    "eta",
    "eta_prime",
    "theta",
    "alpha_total",
    "mixing",
    "z_init",
];

fn allowed(kind: AlgorithmKind) -> (&'static [&'static str], &'static [&'static str]) {
    // (required, optional)
    match kind {
        AlgorithmKind::Dpsgd | AlgorithmKind::Gt => (&["eta"], &["mixing"]),
        AlgorithmKind::Ecl => (&["eta", "alpha_total"], &["theta", "z_init"]),
        AlgorithmKind::Gecl => (&["eta_prime"], &["mixing", "alpha_total"]),
    }
}

impl AlgorithmSpec {
    pub fn new(kind: AlgorithmKind) -> Self {
        Self {
            kind,
            eta: None,
            eta_prime: None,
            theta: None,
            alpha_total: None,
            mixing: None,
            z_init: None,
        }
    }

    pub fn dpsgd(eta: f64) -> Self {
        Self {
            eta: Some(eta),
            ..Self::new(AlgorithmKind::Dpsgd)
        }
    }

    pub fn gt(eta: f64) -> Self {
        Self {
            eta: Some(eta),
            ..Self::new(AlgorithmKind::Gt)
        }
    }

    pub fn ecl(eta: f64, alpha_total: f64) -> Self {
        Self {
            eta: Some(eta),
            alpha_total: Some(alpha_total),
            ..Self::new(AlgorithmKind::Ecl)
        }
    }

    pub fn gecl(eta_prime: f64) -> Self {
        Self {
            eta_prime: Some(eta_prime),
            ..Self::new(AlgorithmKind::Gecl)
        }
    }

    fn present(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        if self.eta.is_some() {
            keys.push("eta");
        }
        if self.eta_prime.is_some() {
            keys.push("eta_prime");
        }
        if self.theta.is_some() {
            keys.push("theta");
        }
        if self.alpha_total.is_some() {
            keys.push("alpha_total");
        }
        if self.mixing.is_some() {
            keys.push("mixing");
        }
        if self.z_init.is_some() {
            keys.push("z_init");
        }
        keys
    }

    /// Checks that exactly the parameters this algorithm uses are set.
    pub fn check(&self) -> Result<()> {
        let (required, optional) = allowed(self.kind);
        let present = self.present();
        let missing: Vec<String> = required
            .iter()
            .filter(|k| !present.contains(k))
            .map(|k| k.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::config(
                format!("{} requires these parameters", self.kind),
                missing,
            ));
        }
        let extra: Vec<String> = present
            .iter()
            .filter(|k| !required.contains(k) && !optional.contains(k))
            .map(|k| k.to_string())
            .collect();
        if !extra.is_empty() {
            return Err(Error::config(
                format!("{} does not take these parameters", self.kind),
                extra,
            ));
        }
        Ok(())
    }

    pub fn mixing_label(&self) -> String {
        match self.kind {
            AlgorithmKind::Ecl => format!("alpha:{}", self.alpha_total.unwrap_or(f64::NAN)),
            _ => self.mixing.unwrap_or(MixingSpec::Metropolis).to_string(),
        }
    }

    /// Resolves the hyperparameters on a concrete graph.
    ///
    /// For G-ECL with `mixing = "alpha:A"` the weights are those induced by
    /// step `eta = eta' / (1 - eta' A)`, the step for which the induced
    /// per-node step equals `eta'`.
    pub fn resolve(&self, graph: &Graph) -> Result<AlgorithmConfig> {
        self.check()?;
        let n = graph.node_count();
        let mixing = self.mixing.unwrap_or(MixingSpec::Metropolis);
        Ok(match self.kind {
            AlgorithmKind::Dpsgd | AlgorithmKind::Gt => {
                let eta = self.eta.expect("checked");
                let weights = mixing.build(graph, eta)?;
                if self.kind == AlgorithmKind::Dpsgd {
                    AlgorithmConfig::Dpsgd { eta, weights }
                } else {
                    AlgorithmConfig::Gt { eta, weights }
                }
            }
            AlgorithmKind::Ecl => AlgorithmConfig::Ecl {
                eta: self.eta.expect("checked"),
                theta: self.theta.unwrap_or(0.5),
                alpha: example1_alpha(graph, self.alpha_total.expect("checked"))?,
                dual_init: self.z_init.unwrap_or_default(),
            },
            AlgorithmKind::Gecl => {
                let eta_prime = self.eta_prime.expect("checked");
                let weights = match mixing {
                    MixingSpec::Metropolis => mixing.build(graph, eta_prime)?,
                    MixingSpec::Alpha(total) => {
                        if !(eta_prime * total < 1.0) {
                            return Err(Error::InvalidParameter {
                                name: "eta_prime",
                                reason: format!(
                                    "alpha:{total} weights need eta_prime < {}, got {eta_prime}",
                                    1.0 / total
                                ),
                            });
                        }
                        mixing.build(graph, eta_prime / (1.0 - eta_prime * total))?
                    }
                };
                let alpha = match self.alpha_total {
                    Some(t) if t > 0.0 => example1_alpha(graph, t)?,
                    _ => AlphaWeights::zeros(graph),
                };
                AlgorithmConfig::Gecl {
                    eta_prime: vec![eta_prime; n],
                    weights,
                    alpha,
                }
            }
        })
    }
}

/// A sweep: every combination of algorithm, topology, `zeta^2`, `sigma^2`
/// and repetition becomes one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algorithms: Vec<AlgorithmSpec>,
    pub topologies: Vec<TopologySpec>,
    pub zeta_sq: Vec<f64>,
    pub sigma_sq: Vec<f64>,
    pub nodes: usize,
    pub dim: usize,
    pub rounds: usize,
    pub seed: u64,
    pub reps: usize,
    /// Every node starts at this constant vector.
    pub x0: f64,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algorithms: Vec::new(),
            topologies: vec![TopologySpec::Ring],
            zeta_sq: vec![0.0],
            sigma_sq: vec![0.0],
            nodes: 25,
            dim: 50,
            rounds: 10_000,
            seed: 0,
            reps: 1,
            x0: 0.0,
            out: None,
        }
    }
}

const TOP_KEYS: [&str; 11] = [
    "algorithm",
    "topology",
    "zeta_sq",
    "sigma_sq",
    "nodes",
    "dim",
    "rounds",
    "seed",
    "reps",
    "x0",
    "out",
];

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::config("expected a number", vec![key.into()])),
    }
}

fn as_usize(key: &str, v: &Value) -> Result<usize> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(Error::config(
            "expected a nonnegative integer",
            vec![key.into()],
        )),
    }
}

fn as_str<'a>(key: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str()
        .ok_or_else(|| Error::config("expected a string", vec![key.into()]))
}

fn list<T>(key: &str, v: &Value, f: impl Fn(&str, &Value) -> Result<T>) -> Result<Vec<T>> {
    let out = match v {
        Value::Array(items) => items
            .iter()
            .map(|x| f(key, x))
            .collect::<Result<Vec<_>>>()?,
        other => vec![f(key, other)?],
    };
    if out.is_empty() {
        return Err(Error::config("sweep list is empty", vec![key.into()]));
    }
    Ok(out)
}

fn parse_algorithm(table: &Table, name_key: &str, prefix: &str) -> Result<AlgorithmSpec> {
    let name = table.get(name_key).ok_or_else(|| {
        Error::config(
            "algorithm name missing",
            vec![format!("{prefix}{name_key}")],
        )
    })?;
    let mut spec = AlgorithmSpec::new(as_str(name_key, name)?.parse()?);
    for key in HYPER_KEYS {
        let Some(v) = table.get(key) else { continue };
        let full = format!("{prefix}{key}");
        match key {
            "eta" => spec.eta = Some(as_f64(&full, v)?),
            "eta_prime" => spec.eta_prime = Some(as_f64(&full, v)?),
            "theta" => spec.theta = Some(as_f64(&full, v)?),
            "alpha_total" => spec.alpha_total = Some(as_f64(&full, v)?),
            "mixing" => {
                spec.mixing = Some(
                    as_str(&full, v)?
                        .parse()
                        .map_err(|_| Error::config("unknown mixing scheme", vec![full.clone()]))?,
                )
            }
            "z_init" => {
                spec.z_init = Some(match as_str(&full, v)? {
                    "consensus" => DualInit::Consensus,
                    "zero" => DualInit::Zero,
                    _ => {
                        return Err(Error::config(
                            "z_init must be `consensus` or `zero`",
                            vec![full],
                        ))
                    }
                })
            }
            _ => unreachable!(),
        }
    }
    spec.check().map_err(|e| match e {
        Error::Config { message, keys } => Error::Config {
            message,
            keys: keys.into_iter().map(|k| format!("{prefix}{k}")).collect(),
        },
        other => other,
    })?;
    Ok(spec)
}

impl ExperimentConfig {
    /// Parses a TOML document. A single algorithm may be given inline
    /// (`algorithm = "dpsgd"` plus its hyperparameters at top level) or as
    /// `[[algorithm]]` tables with a `name` key.
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: Table = toml::from_str(text)
            .map_err(|e| Error::config(format!("not a valid TOML document: {e}"), Vec::new()))?;
        let inline = matches!(table.get("algorithm"), Some(Value::String(_)));
        let unknown: Vec<String> = table
            .keys()
            .filter(|k| {
                !TOP_KEYS.contains(&k.as_str()) && !(inline && HYPER_KEYS.contains(&k.as_str()))
            })
            .cloned()
            .collect();
        if !unknown.is_empty() {
            return Err(Error::config("unknown keys", unknown));
        }

        let mut cfg = ExperimentConfig::default();
        cfg.algorithms = match table.get("algorithm") {
            Some(Value::String(_)) => vec![parse_algorithm(&table, "algorithm", "")?],
            Some(Value::Array(items)) => {
                let mut out = Vec::new();
                for (idx, item) in items.iter().enumerate() {
                    let prefix = format!("algorithm[{idx}].");
                    let t = item.as_table().ok_or_else(|| {
                        Error::config("expected a table", vec![format!("algorithm[{idx}]")])
                    })?;
                    let bad: Vec<String> = t
                        .keys()
                        .filter(|k| *k != "name" && !HYPER_KEYS.contains(&k.as_str()))
                        .map(|k| format!("{prefix}{k}"))
                        .collect();
                    if !bad.is_empty() {
                        return Err(Error::config("unknown keys", bad));
                    }
                    out.push(parse_algorithm(t, "name", &prefix)?);
                }
                out
            }
            _ => {
                return Err(Error::config(
                    "no algorithm given",
                    vec!["algorithm".into()],
                ))
            }
        };
        if cfg.algorithms.is_empty() {
            return Err(Error::config(
                "sweep list is empty",
                vec!["algorithm".into()],
            ));
        }
        if let Some(v) = table.get("topology") {
            cfg.topologies = list("topology", v, |k, x| {
                as_str(k, x)?
                    .parse()
                    .map_err(|_| Error::config("unknown topology", vec![k.into()]))
            })?;
        }
        if let Some(v) = table.get("zeta_sq") {
            cfg.zeta_sq = list("zeta_sq", v, as_f64)?;
        }
        if let Some(v) = table.get("sigma_sq") {
            cfg.sigma_sq = list("sigma_sq", v, as_f64)?;
        }
        if let Some(v) = table.get("nodes") {
            cfg.nodes = as_usize("nodes", v)?;
        }
        if let Some(v) = table.get("dim") {
            cfg.dim = as_usize("dim", v)?;
        }
        if let Some(v) = table.get("rounds") {
            cfg.rounds = as_usize("rounds", v)?;
        }
        if let Some(v) = table.get("reps") {
            cfg.reps = as_usize("reps", v)?;
        }
        if let Some(v) = table.get("seed") {
            cfg.seed = match v {
                Value::Integer(i) => *i as u64,
                _ => return Err(Error::config("expected an integer", vec!["seed".into()])),
            };
        }
        if let Some(v) = table.get("x0") {
            cfg.x0 = as_f64("x0", v)?;
        }
        if let Some(v) = table.get("out") {
            cfg.out = Some(PathBuf::from(as_str("out", v)?));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = BTreeSet::new();
        if self.algorithms.is_empty() {
            bad.insert("algorithm");
        }
        if self.topologies.is_empty() {
            bad.insert("topology");
        }
        if self.zeta_sq.is_empty() || self.zeta_sq.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            bad.insert("zeta_sq");
        }
        if self.sigma_sq.is_empty() || self.sigma_sq.iter().any(|v| !(*v >= 0.0) || !v.is_finite())
        {
            bad.insert("sigma_sq");
        }
        if self.nodes == 0 {
            bad.insert("nodes");
        }
        if self.dim == 0 {
            bad.insert("dim");
        }
        if self.reps == 0 {
            bad.insert("reps");
        }
        if !self.x0.is_finite() {
            bad.insert("x0");
        }
        if !bad.is_empty() {
            return Err(Error::config(
                "invalid values",
                bad.into_iter().map(String::from).collect(),
            ));
        }
        for a in &self.algorithms {
            a.check()?;
        }
        Ok(())
    }
}
