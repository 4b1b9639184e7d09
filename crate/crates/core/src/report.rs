//! Output formats: JSON reports, counts CSV and scan CSV.
//!
//! Every number written is rounded to 12 significant digits so that output
//! bytes do not depend on the last bits of floating-point evaluation order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::experiment::OrthogonalityScan;
use crate::qutrit::{fidelity, DensityMatrix3, EigenDecomposition, PureQutrit};
use crate::tomography::{
    mle_reconstruct_with, raw_reconstruct, Channel, CountRecord, MeasurementSetting, MleOptions,
    MomentVector,
};
use crate::{Error, Result};

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Magnitudes below this are rounding residue and are written as 0.
pub const ZERO_SNAP: f64 = 1e-14;

/// `x` rounded to 12 significant digits; `-0` and residue below
/// [`ZERO_SNAP`] become `0`.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    if x.abs() < ZERO_SNAP {
        return 0.0;
    }
    let r: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Shortest decimal form of `round_sig(x)`.
pub fn fmt_num(x: f64) -> String {
    format!("{}", round_sig(x))
}

/// Provenance block embedded in every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Parameters as given on the command line; angles in degrees.
    pub parameters: BTreeMap<String, Value>,
    pub seed: Option<u64>,
    pub version: String,
    /// Taken from `SOURCE_DATE_EPOCH` when set, so that output stays
    /// reproducible.
    pub timestamp: Option<String>,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, seed: Option<u64>) -> Self {
        Self {
            command: command.into(),
            parameters: BTreeMap::new(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: std::env::var("SOURCE_DATE_EPOCH").ok(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> Self {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.parameters.insert(key.to_string(), round_value(v));
        self
    }

    /// Single-line JSON form.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("manifest serializes")
    }
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|x| serde_json::Number::from_f64(round_sig(x)))
            .map(Value::Number)
            .unwrap_or(Value::Null),
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

fn pair(z: C64) -> [f64; 2] {
    [round_sig(z.re), round_sig(z.im)]
}

/// Row-major `[re, im]` entries and the positivity flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityJson {
    pub matrix: Vec<[f64; 2]>,
    pub physical: bool,
}

impl DensityJson {
    pub fn new(rho: &DensityMatrix3) -> Self {
        let m = rho.matrix();
        let matrix = (0..3)
            .flat_map(|j| (0..3).map(move |k| (j, k)))
            .map(|(j, k)| pair(m[(j, k)]))
            .collect();
        Self {
            matrix,
            physical: rho.is_positive(),
        }
    }

    pub fn to_density(&self) -> Result<DensityMatrix3> {
        if self.matrix.len() != 9 {
            return Err(Error::Shape(format!(
                "expected 9 entries, got {}",
                self.matrix.len()
            )));
        }
        let m = nalgebra::Matrix3::from_row_iterator(
            self.matrix.iter().map(|[re, im]| C64::new(*re, *im)),
        );
        DensityMatrix3::new(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenJson {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// One `[re, im]` triple per eigenvalue.
    pub eigenvectors: Vec<Vec<[f64; 2]>>,
    pub principal_weight: f64,
}

impl EigenJson {
    pub fn new(e: &EigenDecomposition) -> Self {
        Self {
            eigenvalues: e.eigenvalues.iter().map(|&x| round_sig(x)).collect(),
            eigenvectors: e
                .eigenvectors
                .iter()
                .map(|v| v.iter().map(|&z| pair(z)).collect())
                .collect(),
            principal_weight: round_sig(e.principal_weight()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleJson {
    pub rho: DensityJson,
    pub fidelity: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyReport {
    pub manifest: RunManifest,
    pub target: Option<String>,
    pub counts: Vec<CountRecord>,
    pub raw: DensityJson,
    pub raw_fidelity: Option<f64>,
    pub eigen: EigenJson,
    pub principal_fidelity: Option<f64>,
    pub mle: MleJson,
}

/// Linear inversion, eigen-analysis and MLE of one set of counts.
pub fn tomography_report(
    manifest: RunManifest,
    counts: &[CountRecord],
    settings: &[MeasurementSetting],
    target: Option<(&str, &PureQutrit)>,
    opts: &MleOptions,
) -> Result<TomographyReport> {
    let raw = raw_reconstruct(counts, settings)?;
    let eigen = raw.eigen();
    let mle = mle_reconstruct_with(counts, settings, opts)?;
    let fid = |rho: &DensityMatrix3| target.map(|(_, t)| round_sig(fidelity(rho, t)));
    Ok(TomographyReport {
        manifest,
        target: target.map(|(name, _)| name.to_string()),
        counts: counts
            .iter()
            .map(|c| CountRecord::new(c.setting.clone(), round_sig(c.count), round_sig(c.weight)))
            .collect(),
        raw: DensityJson::new(&raw),
        raw_fidelity: fid(&raw),
        principal_fidelity: fid(&eigen.principal_state().projector()),
        eigen: EigenJson::new(&eigen),
        mle: MleJson {
            rho: DensityJson::new(&mle.rho),
            fidelity: fid(&mle.rho),
            iterations: mle.iterations,
            converged: mle.converged,
            log_likelihood: round_sig(mle.log_likelihood),
        },
    })
}

pub const COUNTS_HEADER: [&str; 3] = ["setting", "count", "weight"];

/// Parses `setting,count,weight` CSV. Lines starting with `#` are skipped.
pub fn read_counts_csv(reader: impl Read) -> Result<Vec<CountRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let parse_err = |e: csv::Error| {
        let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
        Error::Parse {
            line,
            message: e.to_string(),
        }
    };
    let headers = rdr.headers().map_err(parse_err)?.clone();
    if headers.iter().collect::<Vec<_>>() != COUNTS_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("header must be '{}'", COUNTS_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(parse_err)?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        let num = |i: usize, name: &str| -> Result<f64> {
            row[i].parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("invalid {name} '{}'", &row[i]),
            })
        };
        let count = num(1, "count")?;
        let weight = num(2, "weight")?;
        if !(count >= 0.0) || !count.is_finite() {
            return Err(Error::Parse {
                line,
                message: format!("count must be non-negative, got {count}"),
            });
        }
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::Parse {
                line,
                message: format!("weight must be positive, got {weight}"),
            });
        }
        out.push(CountRecord::new(row[0].to_string(), count, weight));
    }
    if out.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no count rows".into(),
        });
    }
    Ok(out)
}

/// Counts CSV with the manifest as a leading `#` line.
pub fn write_counts_csv(manifest: &RunManifest, counts: &[CountRecord]) -> String {
    let mut s = format!("# {}\n{}\n", manifest.to_json_line(), COUNTS_HEADER.join(","));
    for c in counts {
        let _ = writeln!(s, "{},{},{}", c.setting, fmt_num(c.count), fmt_num(c.weight));
    }
    s
}

/// Channel order of tomography scan CSV columns.
pub const SCAN_CHANNELS: [Channel; 9] = [
    Channel::ReRho21,
    Channel::ImRho21,
    Channel::ReRho32,
    Channel::ImRho32,
    Channel::ReRho31,
    Channel::ImRho31,
    Channel::Rho11,
    Channel::Rho22,
    Channel::Rho33,
];

pub fn write_tomography_scan_csv(manifest: &RunManifest, series: &[(f64, MomentVector)]) -> String {
    let mut s = format!("# {}\nphi12_deg", manifest.to_json_line());
    for c in SCAN_CHANNELS {
        s.push(',');
        s.push_str(c.name());
    }
    s.push('\n');
    for (phi12, m) in series {
        s.push_str(&fmt_num(phi12.to_degrees()));
        for c in SCAN_CHANNELS {
            s.push(',');
            s.push_str(&fmt_num(c.value(m)));
        }
        s.push('\n');
    }
    s
}

/// Scanned knob and counts, then a `#` summary line with the fitted
/// visibility and minimum.
pub fn write_orthogonality_scan_csv(
    manifest: &RunManifest,
    axis_column: &str,
    scan: &OrthogonalityScan,
) -> String {
    let mut s = format!("# {}\n{axis_column},counts\n", manifest.to_json_line());
    for (x, n) in &scan.points {
        let _ = writeln!(s, "{},{}", fmt_num(x.to_degrees()), fmt_num(*n));
    }
    let _ = writeln!(
        s,
        "# visibility={},minimum_deg={},amplitude={},constant={}",
        fmt_num(scan.visibility),
        fmt_num(scan.minimum_at.to_degrees()),
        fmt_num(scan.fit.amplitude),
        fmt_num(scan.fit.constant),
    );
    s
}
