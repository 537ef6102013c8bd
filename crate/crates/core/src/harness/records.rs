//! Trial records and their CSV / JSON persistence.
//!
//! CSV files have one header row followed by one row per record; columns
//! follow the struct field order, doubles are written with 17 significant
//! digits (`{:.16e}`) so that they parse back bit-for-bit, booleans as
//! `true`/`false`, and an undefined optional boolean as an empty field.
//! Nothing ever needs quoting. JSON files hold an array of objects with the
//! same field names.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordFormat {
    Csv,
    Json,
}

impl FromStr for RecordFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(RecordFormat::Csv),
            "json" => Ok(RecordFormat::Json),
            other => Err(Error::Config(format!("unknown record format {other:?}"))),
        }
    }
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub trait CsvRecord: Sized {
    const HEADER: &'static [&'static str];
    fn to_fields(&self) -> Vec<String>;
    fn from_fields(fields: &[&str]) -> Result<Self>;
}

/// One Monte Carlo recovery trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub theta_true: f64,
    pub theta_star: f64,
    pub theta_hat: f64,
    /// `‖x − x̂‖`
    pub err_signal: f64,
    /// `‖x − x*‖`
    pub err_model: f64,
    /// `‖n‖`
    pub err_noise: f64,
    /// `d_M(x̂, x*)`
    pub geo_err: f64,
    pub bound3_value: f64,
    pub bound4_value: f64,
    pub bound4_precondition: bool,
    pub satisfied3: bool,
    /// Only defined when `bound4_precondition` holds.
    pub satisfied4: Option<bool>,
    /// Largest pairwise distortion of this trial's projector on the manifold
    /// sample.
    pub empirical_eps: f64,
    /// Recovery or the nearest-point search had a non-unique minimizer.
    pub ambiguous: bool,
}

/// One seed of an embedding experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub seed: u64,
    pub meas_dim: usize,
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub success: bool,
}

fn parse<T: FromStr>(field: &str, name: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::Parse(format!("column {name}: cannot parse {field:?}")))
}

fn parse_opt_bool(field: &str, name: &str) -> Result<Option<bool>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse(field, name).map(Some)
    }
}

impl CsvRecord for TrialRecord {
    const HEADER: &'static [&'static str] = &[
        "seed",
        "theta_true",
        "theta_star",
        "theta_hat",
        "err_signal",
        "err_model",
        "err_noise",
        "geo_err",
        "bound3_value",
        "bound4_value",
        "bound4_precondition",
        "satisfied3",
        "satisfied4",
        "empirical_eps",
        "ambiguous",
    ];

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.seed.to_string(),
            fmt_f64(self.theta_true),
            fmt_f64(self.theta_star),
            fmt_f64(self.theta_hat),
            fmt_f64(self.err_signal),
            fmt_f64(self.err_model),
            fmt_f64(self.err_noise),
            fmt_f64(self.geo_err),
            fmt_f64(self.bound3_value),
            fmt_f64(self.bound4_value),
            self.bound4_precondition.to_string(),
            self.satisfied3.to_string(),
            self.satisfied4.map(|b| b.to_string()).unwrap_or_default(),
            fmt_f64(self.empirical_eps),
            self.ambiguous.to_string(),
        ]
    }

    fn from_fields(f: &[&str]) -> Result<Self> {
        let h = Self::HEADER;
        Ok(TrialRecord {
            seed: parse(f[0], h[0])?,
            theta_true: parse(f[1], h[1])?,
            theta_star: parse(f[2], h[2])?,
            theta_hat: parse(f[3], h[3])?,
            err_signal: parse(f[4], h[4])?,
            err_model: parse(f[5], h[5])?,
            err_noise: parse(f[6], h[6])?,
            geo_err: parse(f[7], h[7])?,
            bound3_value: parse(f[8], h[8])?,
            bound4_value: parse(f[9], h[9])?,
            bound4_precondition: parse(f[10], h[10])?,
            satisfied3: parse(f[11], h[11])?,
            satisfied4: parse_opt_bool(f[12], h[12])?,
            empirical_eps: parse(f[13], h[13])?,
            ambiguous: parse(f[14], h[14])?,
        })
    }
}

impl CsvRecord for EmbeddingRecord {
    const HEADER: &'static [&'static str] = &["seed", "meas_dim", "eps_lo", "eps_hi", "success"];

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.seed.to_string(),
            self.meas_dim.to_string(),
            fmt_f64(self.eps_lo),
            fmt_f64(self.eps_hi),
            self.success.to_string(),
        ]
    }

    fn from_fields(f: &[&str]) -> Result<Self> {
        let h = Self::HEADER;
        Ok(EmbeddingRecord {
            seed: parse(f[0], h[0])?,
            meas_dim: parse(f[1], h[1])?,
            eps_lo: parse(f[2], h[2])?,
            eps_hi: parse(f[3], h[3])?,
            success: parse(f[4], h[4])?,
        })
    }
}

pub fn write_records_to<R, W>(records: &[R], mut w: W, format: RecordFormat) -> std::io::Result<()>
where
    R: CsvRecord + Serialize,
    W: Write,
{
    match format {
        RecordFormat::Csv => {
            writeln!(w, "{}", R::HEADER.join(","))?;
            for r in records {
                writeln!(w, "{}", r.to_fields().join(","))?;
            }
        }
        RecordFormat::Json => {
            serde_json::to_writer_pretty(&mut w, records)?;
            writeln!(w)?;
        }
    }
    w.flush()
}

pub fn write_records<R>(records: &[R], path: &Path, format: RecordFormat) -> Result<()>
where
    R: CsvRecord + Serialize,
{
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    write_records_to(records, BufWriter::new(file), format).map_err(io)
}

/// Records rendered to a string, as they would be written to a file.
pub fn records_to_string<R>(records: &[R], format: RecordFormat) -> String
where
    R: CsvRecord + Serialize,
{
    let mut buf = Vec::new();
    write_records_to(records, &mut buf, format).expect("writing to memory");
    String::from_utf8(buf).expect("records are UTF-8")
}

pub fn read_records<R>(path: &Path, format: RecordFormat) -> Result<Vec<R>>
where
    R: CsvRecord + DeserializeOwned,
{
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io)?);
    match format {
        RecordFormat::Json => serde_json::from_reader(reader)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display()))),
        RecordFormat::Csv => {
            let mut lines = reader.lines();
            let header = lines
                .next()
                .ok_or_else(|| Error::Parse("missing header row".into()))?
                .map_err(io)?;
            if header != R::HEADER.join(",") {
                return Err(Error::Parse(format!("unexpected header {header:?}")));
            }
            let mut out = Vec::new();
            for line in lines {
                let line = line.map_err(io)?;
                if line.is_empty() {
                    continue;
                }
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() != R::HEADER.len() {
                    return Err(Error::Parse(format!(
                        "expected {} columns, found {}",
                        R::HEADER.len(),
                        fields.len()
                    )));
                }
                out.push(R::from_fields(&fields)?);
            }
            Ok(out)
        }
    }
}
