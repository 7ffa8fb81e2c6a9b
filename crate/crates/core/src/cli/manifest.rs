//! Run manifests and the checksummed output directory they describe.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::spectral::state::Certificate;

use super::config::{ExperimentConfig, ExperimentKind, OutputFormat};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const ERROR_FILE: &str = "error.json";
const MANIFEST_FORMAT: &str = "conelab-manifest-1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// relative to the output directory, `/`-separated
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
    Between(f64, f64),
}

impl Bound {
    pub fn admits(self, v: f64) -> bool {
        match self {
            Bound::AtMost(b) => v <= b,
            Bound::AtLeast(b) => v >= b,
            Bound::Between(lo, hi) => (lo..=hi).contains(&v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionRecord {
    pub name: String,
    pub value: f64,
    pub bound: Bound,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CriterionRecord {
    pub fn new(name: impl Into<String>, value: f64, bound: Bound) -> Self {
        Self { name: name.into(), value, bound, passed: bound.admits(value), detail: None }
    }

    /// A yes/no check recorded as `1 ≥ 1` or `0 ≥ 1`.
    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, if ok { 1.0 } else { 0.0 }, Bound::AtLeast(1.0))
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub kind: ExperimentKind,
    pub config_hash: String,
    /// canonical config text
    pub config: String,
    pub versions: BTreeMap<String, String>,
    pub certificates: Vec<Certificate>,
    /// relative drifts of conserved quantities
    pub drifts: BTreeMap<String, f64>,
    pub criteria: Vec<CriterionRecord>,
    pub passed: bool,
    pub wall_clock_seconds: f64,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn versions() -> BTreeMap<String, String> {
    let v = env!("CARGO_PKG_VERSION").to_string();
    ["conelab", "geometry", "flow", "spectral", "microlocal", "cli"]
        .into_iter()
        .map(|m| (m.to_string(), v.clone()))
        .collect()
}

impl RunManifest {
    pub fn new(config: &ExperimentConfig, kind: ExperimentKind) -> Self {
        Self {
            format: MANIFEST_FORMAT.into(),
            kind,
            config_hash: config.hash(),
            config: config.to_text(),
            versions: versions(),
            certificates: Vec::new(),
            drifts: BTreeMap::new(),
            criteria: Vec::new(),
            passed: true,
            wall_clock_seconds: 0.0,
            files: Vec::new(),
        }
    }

    pub fn add_criterion(&mut self, c: CriterionRecord) {
        self.passed &= c.passed;
        self.criteria.push(c);
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))
            .map_err(|e| Error::Integrity(format!("cannot read {}: {e}", dir.join(MANIFEST_FILE).display())))?;
        let m: RunManifest = serde_json::from_str(&text)?;
        if m.format != MANIFEST_FORMAT {
            return Err(Error::Parse(format!("unknown manifest format `{}`", m.format)));
        }
        Ok(m)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    /// Checks every listed file against its recorded size and checksum.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        for f in &self.files {
            let bytes = fs::read(dir.join(&f.path))
                .map_err(|e| Error::Integrity(format!("{} (sha256 {}) unreadable: {e}", f.path, f.sha256)))?;
            let found = sha256_hex(&bytes);
            if found != f.sha256 || bytes.len() as u64 != f.bytes {
                return Err(Error::Integrity(format!(
                    "checksum mismatch for {}: manifest {}, found {found}",
                    f.path, f.sha256
                )));
            }
        }
        Ok(())
    }

    pub fn entry(&self, path: &str) -> Result<&FileEntry> {
        self.files
            .iter()
            .find(|f| f.path == path)
            .ok_or_else(|| Error::Integrity(format!("{path} is not listed in the manifest")))
    }
}

/// Every file under `dir` (relative, sorted) except the manifest itself.
pub fn list_files(dir: &Path) -> Result<Vec<String>> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
        for e in fs::read_dir(dir)? {
            let p = e?.path();
            if p.is_dir() {
                walk(root, &p, out)?;
            } else {
                let rel = p.strip_prefix(root).expect("walked below root");
                out.push(rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"));
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out)?;
    out.retain(|p| p != MANIFEST_FILE);
    out.sort();
    Ok(out)
}

/// One table cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Num(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(v) => format!("{v:e}"),
            Cell::Text(s) => s.clone(),
        }
    }

    fn parse_csv(s: &str) -> Cell {
        if let Ok(i) = s.parse::<i64>() {
            Cell::Int(i)
        } else if let Ok(v) = s.parse::<f64>() {
            Cell::Num(v)
        } else {
            Cell::Text(s.to_string())
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Parse(format!("table has no column `{name}`")))
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",") + "\n";
        for r in &self.rows {
            s += &r.iter().map(Cell::csv).collect::<Vec<_>>().join(",");
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty table".into()))?;
        let columns: Vec<String> = header.split(',').map(str::to_string).collect();
        let mut rows = Vec::new();
        for l in lines {
            let row: Vec<Cell> = l.split(',').map(Cell::parse_csv).collect();
            if row.len() != columns.len() {
                return Err(Error::Parse(format!("row `{l}` has {} cells, expected {}", row.len(), columns.len())));
            }
            rows.push(row);
        }
        Ok(Self { columns, rows })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub units: String,
    pub values: Vec<f64>,
}

/// JSON header stored next to each raw array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayHeader {
    pub dtype: String,
    pub shape: Vec<usize>,
    pub axes: Vec<Axis>,
    pub quantity: String,
    pub units: String,
    /// e.g. the time of a snapshot
    #[serde(default)]
    pub attributes: BTreeMap<String, f64>,
}

/// Writes files below an output directory and records their checksums.
pub struct OutputDir {
    root: PathBuf,
    format: OutputFormat,
    files: Vec<FileEntry>,
}

impl OutputDir {
    /// Creates `root`. An existing directory is reused only if it is empty
    /// or holds a previous run, whose files are removed.
    pub fn prepare(root: &Path, format: OutputFormat) -> Result<Self> {
        if root.exists() {
            let stale = list_files(root)?;
            let previous_run = root.join(MANIFEST_FILE).exists() || root.join(ERROR_FILE).exists();
            if !stale.is_empty() && !previous_run {
                return Err(Error::Config(format!(
                    "output directory {} is not empty and holds no previous run",
                    root.display()
                )));
            }
            for entry in fs::read_dir(root)? {
                let p = entry?.path();
                if p.is_dir() {
                    fs::remove_dir_all(&p)?;
                } else {
                    fs::remove_file(&p)?;
                }
            }
        }
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), format, files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn format(&self) -> OutputFormat {
        self.format
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.files.push(FileEntry { path: rel.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
        Ok(())
    }

    /// Records a file some other routine wrote below the root.
    pub fn adopt(&mut self, rel: &str) -> Result<()> {
        let bytes = fs::read(self.root.join(rel))?;
        self.files.push(FileEntry { path: rel.to_string(), sha256: sha256_hex(&bytes), bytes: bytes.len() as u64 });
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        self.write(rel, (serde_json::to_string_pretty(value)? + "\n").as_bytes())
    }

    /// `stem.csv` or `stem.json` depending on the run's format; returns the
    /// file name.
    pub fn table(&mut self, stem: &str, table: &Table) -> Result<String> {
        match self.format {
            OutputFormat::Csv => {
                let rel = format!("{stem}.csv");
                self.write(&rel, table.to_csv().as_bytes())?;
                Ok(rel)
            }
            OutputFormat::Json => {
                let rel = format!("{stem}.json");
                self.json(&rel, table)?;
                Ok(rel)
            }
        }
    }

    /// `stem.f64` (little-endian, row-major) with header `stem.f64.json`.
    pub fn array(&mut self, stem: &str, header: &ArrayHeader, data: &[f64]) -> Result<()> {
        if header.shape.iter().product::<usize>() != data.len() {
            return Err(Error::Config(format!("array {stem}: shape {:?} does not match {} values", header.shape, data.len())));
        }
        let bytes: Vec<u8> = data.iter().flat_map(|v| v.to_le_bytes()).collect();
        self.write(&format!("{stem}.f64"), &bytes)?;
        self.json(&format!("{stem}.f64.json"), header)
    }

    pub fn into_files(self) -> Vec<FileEntry> {
        self.files
    }
}

pub fn read_table(dir: &Path, rel: &str) -> Result<Table> {
    let text = fs::read_to_string(dir.join(rel))?;
    if rel.ends_with(".json") {
        Ok(serde_json::from_str(&text)?)
    } else {
        Table::from_csv(&text)
    }
}

pub fn read_array(dir: &Path, stem: &str) -> Result<(ArrayHeader, Vec<f64>)> {
    let header: ArrayHeader = serde_json::from_str(&fs::read_to_string(dir.join(format!("{stem}.f64.json")))?)?;
    let bytes = fs::read(dir.join(format!("{stem}.f64")))?;
    let n: usize = header.shape.iter().product();
    if bytes.len() != 8 * n {
        return Err(Error::Integrity(format!("{stem}.f64 holds {} bytes, header implies {}", bytes.len(), 8 * n)));
    }
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    Ok((header, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_decide_pass() {
        assert!(CriterionRecord::new("a", 1e-9, Bound::AtMost(1e-8)).passed);
        assert!(!CriterionRecord::new("a", 1e-7, Bound::AtMost(1e-8)).passed);
        assert!(!CriterionRecord::new("a", f64::NAN, Bound::AtMost(1e-8)).passed);
        assert!(CriterionRecord::new("b", 0.5, Bound::Between(0.35, 0.65)).passed);
        assert!(!CriterionRecord::flag("c", false).passed);
    }

    #[test]
    fn csv_round_trip() {
        let mut t = Table::new(&["k", "v", "class"]);
        t.push(vec![3usize.into(), 0.1.into(), "smooth".into()]);
        t.push(vec![4usize.into(), (-2.5e-300).into(), "direct".into()]);
        let back = Table::from_csv(&t.to_csv()).unwrap();
        assert_eq!(back, t);
    }
}
