//! Line-delimited JSON record streams and CSV point clouds.
//!
//! Every stream starts with a header line; every later line carries the
//! header's config hash. Fourier coefficients are interleaved `re, im`
//! arrays printed with 17 significant digits.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::value::RawValue;

use crate::atlas::{AmoebaPoint, BasePoint, EndCheck, FibreKind, FibreRecord, MatchReport, MonodromyResult};
use crate::error::{Error, Result};
use crate::solver::SolverReport;

/// `{:.16e}` rendering of a float array as a JSON array.
pub fn sci_array(values: &[f64]) -> Box<RawValue> {
    let mut s = String::with_capacity(values.len() * 24 + 2);
    s.push('[');
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        if v.is_finite() {
            let _ = write!(s, "{v:.16e}");
        } else {
            s.push_str("null");
        }
    }
    s.push(']');
    RawValue::from_string(s).expect("formatted floats are valid JSON")
}

#[derive(Debug, Serialize)]
pub struct Header<'a> {
    #[serde(rename = "type")]
    pub kind: &'static str,
    pub config_hash: &'a str,
    pub version: &'static str,
    pub family: &'a str,
    pub metric: String,
    pub t: f64,
}

#[derive(Debug, Serialize)]
struct FibreLine<'a> {
    #[serde(rename = "type")]
    kind: &'static str,
    config_hash: &'a str,
    fibre: FibreKind,
    base: &'a BasePoint,
    chart_id: usize,
    grid_dim: usize,
    grid_size: usize,
    h: Box<RawValue>,
    theta1: f64,
    residual: f64,
    nu: f64,
    t_hat: f64,
    t: f64,
    s: f64,
    end_check: &'a EndCheck,
    report: &'a SolverReport,
}

#[derive(Debug, Serialize)]
struct Tagged<'a, T: Serialize> {
    #[serde(rename = "type")]
    kind: &'static str,
    config_hash: &'a str,
    #[serde(flatten)]
    body: T,
}

/// Buffered writer of one record stream.
pub struct RecordStream {
    hash: String,
    out: std::io::BufWriter<std::fs::File>,
}

impl RecordStream {
    pub fn create(path: &Path, header: &Header) -> Result<Self> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let file = std::fs::File::create(path)?;
        let mut s = RecordStream {
            hash: header.config_hash.to_string(),
            out: std::io::BufWriter::new(file),
        };
        s.line(header)?;
        Ok(s)
    }

    fn line<T: Serialize>(&mut self, v: &T) -> Result<()> {
        let text = serde_json::to_string(v).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(self.out, "{text}")?;
        Ok(())
    }

    pub fn fibre(&mut self, r: &FibreRecord) -> Result<()> {
        let hash = self.hash.clone();
        self.line(&FibreLine {
            kind: "fibre",
            config_hash: &hash,
            fibre: r.kind,
            base: &r.base,
            chart_id: r.chart_id,
            grid_dim: r.h.grid.dim,
            grid_size: r.h.grid.size,
            h: sci_array(&r.h.interleaved()),
            theta1: r.theta1,
            residual: r.residual,
            nu: r.nu,
            t_hat: r.t_hat,
            t: r.t,
            s: r.s,
            end_check: &r.end_check,
            report: &r.report,
        })
    }

    pub fn failure(&mut self, base: &BasePoint, kind: FibreKind, err: &Error) -> Result<()> {
        #[derive(Serialize)]
        struct Failure<'a> {
            fibre: FibreKind,
            base: &'a BasePoint,
            error: String,
        }
        let hash = self.hash.clone();
        self.line(&Tagged {
            kind: "failure",
            config_hash: &hash,
            body: Failure {
                fibre: kind,
                base,
                error: err.to_string(),
            },
        })
    }

    pub fn overlap(&mut self, base: &BasePoint, report: &MatchReport) -> Result<()> {
        #[derive(Serialize)]
        struct Overlap<'a> {
            base: &'a BasePoint,
            #[serde(flatten)]
            report: &'a MatchReport,
        }
        let hash = self.hash.clone();
        self.line(&Tagged {
            kind: "overlap",
            config_hash: &hash,
            body: Overlap { base, report },
        })
    }

    pub fn monodromy(&mut self, m: &MonodromyResult) -> Result<()> {
        let hash = self.hash.clone();
        self.line(&Tagged {
            kind: "monodromy",
            config_hash: &hash,
            body: m,
        })
    }

    pub fn amoeba(&mut self, p: &AmoebaPoint) -> Result<()> {
        let hash = self.hash.clone();
        self.line(&Tagged {
            kind: "amoeba",
            config_hash: &hash,
            body: p,
        })
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Writes rows under a header line.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{}", header.join(","))?;
    for r in rows {
        writeln!(out, "{}", r.join(","))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        let raw = sci_array(&[1.0, -0.1, 2.5e-300]);
        assert_eq!(raw.get(), "[1.0000000000000000e0,-1.0000000000000001e-1,2.5000000000000000e-300]");
        let back: Vec<f64> = serde_json::from_str(raw.get()).unwrap();
        assert_eq!(back, vec![1.0, -0.1, 2.5e-300]);
    }
}
