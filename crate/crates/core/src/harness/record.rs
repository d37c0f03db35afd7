use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Metrics logged after each round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundMetrics {
    pub round: usize,
    /// `(1/n) sum_i ||x_i - x*||^2`.
    pub error: f64,
    /// `(1/n) sum_i ||x_i - xbar||^2`.
    pub consensus: f64,
    /// `f(xbar) - f*`.
    pub function_gap: f64,
    /// `||sum_i c_i||`.
    pub sum_c_norm: Option<f64>,
    /// `(1/n) sum_i ||grad f_i(x*) - c_i||^2`.
    pub correction_error: Option<f64>,
    /// `||sum_i p_i - sum_i g_i||`.
    pub tracker_residual: Option<f64>,
    /// Distance between the observed and predicted network average.
    pub average_residual: Option<f64>,
}

pub const COLUMNS: [&str; 8] = [
    "round",
    "error",
    "consensus",
    "function_gap",
    "sum_c_norm",
    "correction_error",
    "tracker_residual",
    "average_residual",
];

/// One run: free-form metadata plus `rounds + 1` rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunRecord {
    pub meta: BTreeMap<String, String>,
    pub rows: Vec<RoundMetrics>,
}

fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn parse_f64(field: &str, col: &str) -> Result<f64> {
    field
        .parse()
        .map_err(|_| Error::Record(format!("bad number `{field}` in column `{col}`")))
}

fn parse_opt(field: &str, col: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_f64(field, col).map(Some)
    }
}

impl RunRecord {
    pub fn final_row(&self) -> Option<&RoundMetrics> {
        self.rows.last()
    }

    pub fn final_error(&self) -> f64 {
        self.final_row().map_or(f64::NAN, |r| r.error)
    }

    pub fn meta_f64(&self, key: &str) -> Option<f64> {
        self.meta.get(key)?.parse().ok()
    }

    /// `# key=value` lines followed by a CSV table. Floats use the shortest
    /// representation that parses back to the same bits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for (k, v) in &self.meta {
            if k.contains(['=', '\n']) || v.contains('\n') {
                return Err(Error::Record(format!(
                    "metadata entry `{k}` cannot be serialized"
                )));
            }
            writeln!(out, "# {k}={v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(COLUMNS)?;
        for r in &self.rows {
            w.write_record([
                r.round.to_string(),
                fmt_f64(r.error),
                fmt_f64(r.consensus),
                fmt_f64(r.function_gap),
                fmt_opt(r.sum_c_norm),
                fmt_opt(r.correction_error),
                fmt_opt(r.tracker_residual),
                fmt_opt(r.average_residual),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(text: &str) -> Result<Self> {
        let mut meta = BTreeMap::new();
        for line in text.lines() {
            let Some(rest) = line.strip_prefix('#') else {
                continue;
            };
            let rest = rest.strip_prefix(' ').unwrap_or(rest);
            let (k, v) = rest
                .split_once('=')
                .ok_or_else(|| Error::Record(format!("metadata line without `=`: {line}")))?;
            meta.insert(k.to_string(), v.to_string());
        }
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let header = reader.headers()?.clone();
        if header.iter().ne(COLUMNS) {
            return Err(Error::Record(format!(
                "unexpected header {:?}",
                header.iter().collect::<Vec<_>>()
            )));
        }
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            let f = |k: usize| rec.get(k).unwrap_or("");
            rows.push(RoundMetrics {
                round: f(0)
                    .parse()
                    .map_err(|_| Error::Record(format!("bad round `{}`", f(0))))?,
                error: parse_f64(f(1), COLUMNS[1])?,
                consensus: parse_f64(f(2), COLUMNS[2])?,
                function_gap: parse_f64(f(3), COLUMNS[3])?,
                sum_c_norm: parse_opt(f(4), COLUMNS[4])?,
                correction_error: parse_opt(f(5), COLUMNS[5])?,
                tracker_residual: parse_opt(f(6), COLUMNS[6])?,
                average_residual: parse_opt(f(7), COLUMNS[7])?,
            });
        }
        Ok(Self { meta, rows })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(&fs::read_to_string(path)?)
    }
}
