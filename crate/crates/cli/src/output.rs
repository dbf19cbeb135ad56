//! Output files: CSV tables, JSON-lines dumps and the run manifest.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

/// One long-format result line.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub params: String,
    pub metric: String,
    pub value: f64,
    pub uncertainty: Option<f64>,
    pub seed: u64,
    /// Inclusive realization index range the value was computed from.
    pub indices: Option<(u64, u64)>,
}

impl ResultRow {
    pub fn new(experiment: &str, params: impl Into<String>, metric: &str, value: f64, seed: u64) -> Self {
        Self {
            experiment: experiment.to_string(),
            params: params.into(),
            metric: metric.to_string(),
            value,
            uncertainty: None,
            seed,
            indices: None,
        }
    }

    pub fn with_uncertainty(mut self, u: f64) -> Self {
        self.uncertainty = Some(u);
        self
    }

    pub fn with_indices(mut self, lo: u64, hi: u64) -> Self {
        self.indices = Some((lo, hi));
        self
    }
}

/// A CSV table held in memory until the run completes.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    /// `schema_version` is prepended to the given columns.
    pub fn new(name: &str, columns: &[&str]) -> Self {
        let mut header = vec!["schema_version".to_string()];
        header.extend(columns.iter().map(|c| c.to_string()));
        Self {
            name: name.to_string(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len() + 1, self.header.len(), "row width for {}", self.name);
        let mut full = vec![SCHEMA_VERSION.to_string()];
        full.extend(row);
        self.rows.push(full);
    }

    pub fn results(rows: &[ResultRow]) -> Self {
        let mut t = Self::new(
            "results.csv",
            &["experiment", "params", "metric", "value", "uncertainty", "seed", "index_lo", "index_hi"],
        );
        for r in rows {
            let (lo, hi) = r
                .indices
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .unwrap_or_default();
            t.push(vec![
                r.experiment.clone(),
                r.params.clone(),
                r.metric.clone(),
                float(r.value),
                opt_float(r.uncertainty),
                r.seed.to_string(),
                lo,
                hi,
            ]);
        }
        t
    }

    pub fn to_bytes(&self) -> io::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| io::Error::other(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JsonLines {
    pub name: String,
    pub records: Vec<Value>,
}

impl JsonLines {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            records: Vec::new(),
        }
    }

    /// Adds `schema_version` to the record.
    pub fn push(&mut self, mut record: Value) {
        if let Value::Object(map) = &mut record {
            map.insert("schema_version".into(), json!(SCHEMA_VERSION));
        }
        self.records.push(record);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for r in &self.records {
            out.extend(r.to_string().as_bytes());
            out.push(b'\n');
        }
        out
    }
}

/// Everything an experiment produces.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outputs {
    pub results: Vec<ResultRow>,
    pub tables: Vec<Table>,
    pub dumps: Vec<JsonLines>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WrittenFile {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes one file inside `dir`. Names are plain file names, never paths.
pub fn write_file(dir: &Path, name: &str, data: &[u8]) -> io::Result<WrittenFile> {
    if name.contains(['/', '\\']) || name.starts_with('.') {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, format!("bad output name {name:?}")));
    }
    fs::write(dir.join(name), data)?;
    Ok(WrittenFile {
        name: name.to_string(),
        bytes: data.len(),
        sha256: sha256_hex(data),
    })
}

pub fn write_outputs(dir: &Path, outputs: &Outputs) -> io::Result<Vec<WrittenFile>> {
    let mut written = vec![write_file(dir, "results.csv", &Table::results(&outputs.results).to_bytes()?)?];
    for t in &outputs.tables {
        written.push(write_file(dir, &t.name, &t.to_bytes()?)?);
    }
    for d in &outputs.dumps {
        written.push(write_file(dir, &d.name, &d.to_bytes())?);
    }
    Ok(written)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub experiment: String,
    pub seed: u64,
    pub config: String,
    pub files: Vec<WrittenFile>,
    pub complete: bool,
    pub error: Option<String>,
}

impl Manifest {
    pub fn to_json(&self) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "software": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
            "experiment": self.experiment,
            "seed": self.seed,
            "config": self.config,
            "files": self.files.iter().map(|f| json!({ "name": f.name, "bytes": f.bytes, "sha256": f.sha256 })).collect::<Vec<_>>(),
            "complete": self.complete,
            "error": self.error,
        })
    }

    pub fn write(&self, dir: &Path) -> io::Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(&self.to_json()).map_err(io::Error::other)?;
        text.push('\n');
        let path = dir.join("manifest.json");
        fs::write(&path, text)?;
        Ok(path)
    }
}
