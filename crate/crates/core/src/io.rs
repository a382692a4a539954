//! Output layer: CSV tables, PGM images, run manifests and series comparison.
//!
//! Data files never contain timestamps; the manifest carries the wall-clock
//! duration, so identical runs produce byte-identical data.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("row {row} has {got} fields, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("matrix entry ({row}, {col}) = {value} is not a non-negative number")]
    BadPixel { row: usize, col: usize, value: f64 },
    #[error("matrix data has {got} entries, expected {rows}×{cols}")]
    Shape {
        rows: usize,
        cols: usize,
        got: usize,
    },
    #[error("manifest check failed: {0}")]
    Manifest(String),
    #[error("cannot compare: {0}")]
    Compare(String),
}

pub type Result<T> = std::result::Result<T, IoError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// `%.12e`: twelve mantissa digits, signed exponent of at least two digits.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let (sign, digits) = match exp.strip_prefix('-') {
        Some(d) => ('-', d),
        None => ('+', exp),
    };
    format!("{mantissa}e{sign}{digits:0>2}")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Value {
    fn render(&self) -> String {
        match self {
            Value::Float(x) => format_float(*x),
            Value::Int(i) => i.to_string(),
            Value::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<usize> for Value {
    fn from(i: usize) -> Self {
        Value::Int(i as i64)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}

/// Rectangular table with a header row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(IoError::Ragged {
                row: self.rows.len(),
                expected: self.columns.len(),
                got: row.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let wrap = |e: csv::Error| IoError::Parse {
            path: PathBuf::from("<memory>"),
            message: e.to_string(),
        };
        w.write_record(&self.columns).map_err(wrap)?;
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.columns.len() {
                return Err(IoError::Ragged {
                    row: i,
                    expected: self.columns.len(),
                    got: row.len(),
                });
            }
            w.write_record(row.iter().map(Value::render))
                .map_err(wrap)?;
        }
        w.into_inner().map_err(|e| IoError::Parse {
            path: PathBuf::from("<memory>"),
            message: e.to_string(),
        })
    }
}

/// Write `table` as CSV (header row, `%.12e` floats, LF line endings).
pub fn write_csv(table: &Table, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = table.to_csv_bytes()?;
    fs::write(path, bytes).map_err(io_err(path))
}

/// Parsed CSV: header plus string fields.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvData {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvData {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Column `name` parsed as floats.
    pub fn floats(&self, name: &str) -> std::result::Result<Vec<f64>, String> {
        let i = self
            .column_index(name)
            .ok_or_else(|| format!("no column '{name}' (have: {})", self.columns.join(", ")))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                row[i]
                    .parse::<f64>()
                    .map_err(|e| format!("row {}, column '{name}': {e}", r + 1))
            })
            .collect()
    }
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<CsvData> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(io_err(path))?;
    let parse = |e: csv::Error| IoError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut r = csv::ReaderBuilder::new().from_reader(bytes.as_slice());
    let columns = r
        .headers()
        .map_err(parse)?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(parse)?.iter().map(String::from).collect());
    }
    Ok(CsvData { columns, rows })
}

/// Row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(IoError::Shape {
                rows,
                cols,
                got: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    /// `round(255·v/max)`, the minimum pinned at 0.
    #[default]
    Linear,
    /// Six decades below the maximum mapped onto 0..255.
    Log,
}

/// Binary P5 bytes for `m`.
pub fn pgm_bytes(m: &Matrix, scaling: Scaling) -> Result<Vec<u8>> {
    for (i, &v) in m.data.iter().enumerate() {
        if !(v >= 0.0) || v.is_infinite() {
            return Err(IoError::BadPixel {
                row: i / m.cols.max(1),
                col: i % m.cols.max(1),
                value: v,
            });
        }
    }
    let min = m.data.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = m.data.iter().cloned().fold(0.0, f64::max);
    let (min, max_s) = if m.data.is_empty() {
        (0.0, 0.0)
    } else {
        (min, max)
    };
    let comment = match scaling {
        Scaling::Linear => format!(
            "# min={} max={} scaling=linear pixel=round(255*v/max)",
            format_float(min),
            format_float(max_s)
        ),
        Scaling::Log => format!(
            "# min={} max={} scaling=log pixel=round(255*(log10(v/max)+6)/6) clipped below max*1e-6",
            format_float(min),
            format_float(max_s)
        ),
    };
    let mut out = format!("P5\n{comment}\n{} {}\n255\n", m.cols, m.rows).into_bytes();
    out.extend(m.data.iter().map(|&v| {
        if max <= 0.0 {
            return 0u8;
        }
        let level = match scaling {
            Scaling::Linear => 255.0 * v / max,
            Scaling::Log => {
                let r = v / max;
                if r <= 1e-6 {
                    0.0
                } else {
                    255.0 * (r.log10() + 6.0) / 6.0
                }
            }
        };
        level.round().clamp(0.0, 255.0) as u8
    }));
    Ok(out)
}

pub fn write_pgm(m: &Matrix, path: impl AsRef<Path>, scaling: Scaling) -> Result<()> {
    let path = path.as_ref();
    let bytes = pgm_bytes(m, scaling)?;
    fs::write(path, bytes).map_err(io_err(path))
}

/// Compact JSON with object keys sorted at every level.
pub fn canonical_json(v: &serde_json::Value) -> String {
    use serde_json::Value as J;
    match v {
        J::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            let body: Vec<String> = keys
                .into_iter()
                .map(|k| {
                    format!(
                        "{}:{}",
                        serde_json::to_string(k).expect("string key"),
                        canonical_json(&map[k])
                    )
                })
                .collect();
            format!("{{{}}}", body.join(","))
        }
        J::Array(items) => format!(
            "[{}]",
            items
                .iter()
                .map(canonical_json)
                .collect::<Vec<_>>()
                .join(",")
        ),
        other => serde_json::to_string(other).expect("scalar JSON"),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Path relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Record of one run. Written last, after every listed file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Canonical JSON echo of the effective configuration.
    pub config: String,
    pub version: String,
    pub duration_seconds: f64,
    pub files: Vec<FileEntry>,
    #[serde(skip)]
    started: Option<Instant>,
}

impl RunManifest {
    pub fn start(command: &str, config: &serde_json::Value) -> Self {
        RunManifest {
            command: command.to_string(),
            config: canonical_json(config),
            version: VERSION.to_string(),
            duration_seconds: 0.0,
            files: Vec::new(),
            started: Some(Instant::now()),
        }
    }

    /// Hash an already written file `outdir/rel`.
    pub fn add_file(&mut self, outdir: &Path, rel: &str) -> Result<()> {
        let path = outdir.join(rel);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        self.files.push(FileEntry {
            path: rel.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    /// Write `outdir/manifest.json`.
    pub fn write(&mut self, outdir: &Path) -> Result<PathBuf> {
        if let Some(t) = self.started {
            self.duration_seconds = t.elapsed().as_secs_f64();
        }
        let path = outdir.join(MANIFEST_NAME);
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        let mut f = fs::File::create(&path).map_err(io_err(&path))?;
        f.write_all(json.as_bytes())
            .and_then(|_| f.write_all(b"\n"))
            .map_err(io_err(&path))?;
        Ok(path)
    }

    pub fn read(outdir: &Path) -> Result<Self> {
        let path = outdir.join(MANIFEST_NAME);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        serde_json::from_str(&text).map_err(|e| IoError::Parse {
            path,
            message: e.to_string(),
        })
    }

    /// Check that every listed file exists with the recorded hash.
    pub fn verify(outdir: &Path) -> Result<Self> {
        let m = Self::read(outdir)?;
        for f in &m.files {
            let path = outdir.join(&f.path);
            let bytes = fs::read(&path)
                .map_err(|e| IoError::Manifest(format!("{}: {e}", path.display())))?;
            if sha256_hex(&bytes) != f.sha256 {
                return Err(IoError::Manifest(format!("{} hash mismatch", f.path)));
            }
        }
        Ok(m)
    }
}

/// Labelled observable series over an increasing abscissa (t or z).
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Series {
    pub fn new(label: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Self {
        Series {
            label: label.into(),
            x,
            y,
        }
    }

    fn check(&self) -> Result<()> {
        if self.x.len() != self.y.len() || self.x.len() < 2 {
            return Err(IoError::Compare(format!(
                "series '{}' needs ≥ 2 points with matching lengths",
                self.label
            )));
        }
        if self.x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(IoError::Compare(format!(
                "series '{}' abscissa is not strictly increasing",
                self.label
            )));
        }
        Ok(())
    }

    /// Linear interpolation; `x` must lie within the abscissa range.
    pub fn interpolate(&self, x: f64) -> f64 {
        let i = self.x.partition_point(|v| *v <= x);
        if i == 0 {
            return self.y[0];
        }
        if i >= self.x.len() {
            return self.y[self.y.len() - 1];
        }
        let (x0, x1) = (self.x[i - 1], self.x[i]);
        let w = (x - x0) / (x1 - x0);
        self.y[i - 1] * (1.0 - w) + self.y[i] * w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub label_a: String,
    pub label_b: String,
    /// Common grid (points of the finer series inside the overlap).
    pub grid: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub max_abs: f64,
    /// Root-mean-square deviation over the grid.
    pub rms: f64,
    pub width: Option<f64>,
    /// `max_abs / width`
    pub rel_width: Option<f64>,
}

impl ComparisonReport {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new([
            "x",
            self.label_a.as_str(),
            self.label_b.as_str(),
            "abs_diff",
        ]);
        for ((x, a), b) in self.grid.iter().zip(&self.a).zip(&self.b) {
            t.rows.push(vec![
                (*x).into(),
                (*a).into(),
                (*b).into(),
                (a - b).abs().into(),
            ]);
        }
        t
    }

    pub fn summary_table(&self) -> Table {
        let mut t = Table::new(["metric", "value"]);
        t.rows.push(vec!["max_abs".into(), self.max_abs.into()]);
        t.rows.push(vec!["rms".into(), self.rms.into()]);
        if let (Some(w), Some(r)) = (self.width, self.rel_width) {
            t.rows.push(vec!["width".into(), w.into()]);
            t.rows.push(vec!["rel_width".into(), r.into()]);
        }
        t
    }
}

/// Interpolate both series onto the finer grid within their overlap and
/// measure the deviation; `width` scales the relative metric.
pub fn compare(a: &Series, b: &Series, width: Option<f64>) -> Result<ComparisonReport> {
    a.check()?;
    b.check()?;
    let lo = a.x[0].max(b.x[0]);
    let hi = a.x[a.x.len() - 1].min(b.x[b.x.len() - 1]);
    if !(hi >= lo) {
        return Err(IoError::Compare(format!(
            "abscissa ranges of '{}' and '{}' do not overlap",
            a.label, b.label
        )));
    }
    let inside = |s: &Series| -> Vec<f64> {
        s.x.iter()
            .cloned()
            .filter(|x| *x >= lo && *x <= hi)
            .collect()
    };
    let (ga, gb) = (inside(a), inside(b));
    let grid = if gb.len() > ga.len() { gb } else { ga };
    if grid.is_empty() {
        return Err(IoError::Compare("overlap contains no sample points".into()));
    }
    let ya: Vec<f64> = grid.iter().map(|x| a.interpolate(*x)).collect();
    let yb: Vec<f64> = grid.iter().map(|x| b.interpolate(*x)).collect();
    let diffs: Vec<f64> = ya.iter().zip(&yb).map(|(p, q)| (p - q).abs()).collect();
    let max_abs = diffs.iter().cloned().fold(0.0, f64::max);
    let rms = (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt();
    Ok(ComparisonReport {
        label_a: a.label.clone(),
        label_b: b.label.clone(),
        grid,
        a: ya,
        b: yb,
        max_abs,
        rms,
        width,
        rel_width: width.map(|w| max_abs / w),
    })
}
