//! Deterministic artifacts: hashed names, CSV with 17 significant digits,
//! JSON manifests, all written through a temporary file and a rename.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::Result;

/// SHA-256 of the subcommand and the canonical configuration.
pub fn config_hash(subcommand: &str, canonical: &str) -> String {
    let mut h = Sha256::new();
    h.update(subcommand.as_bytes());
    h.update(b"\n");
    h.update(canonical.as_bytes());
    hex::encode(h.finalize())
}

/// Writes `bytes` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// A CSV table whose cells are already formatted.
#[derive(Debug, Clone, Default)]
pub struct Csv {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push_f64(&mut self, values: &[f64]) {
        self.rows.push(values.iter().map(|&v| fmt_f64(v)).collect());
    }

    pub fn push(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    /// Hash comment, header, rows.
    pub fn render(&self, hash: &str) -> String {
        let mut s = format!("# config_hash={hash}\n{}\n", self.header.join(","));
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// Collects the files of one run under a common hashed stem.
#[derive(Debug)]
pub struct ArtifactSet {
    pub dir: PathBuf,
    pub stem: String,
    pub hash: String,
    pub files: Vec<String>,
}

impl ArtifactSet {
    pub fn new(dir: &Path, subcommand: &str, hash: &str) -> Self {
        Self { dir: dir.to_path_buf(), stem: format!("{subcommand}-{}", &hash[..16]), hash: hash.to_string(), files: Vec::new() }
    }

    pub fn path(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}{suffix}", self.stem))
    }

    pub fn write_csv(&mut self, suffix: &str, csv: &Csv) -> Result<PathBuf> {
        self.write_bytes(suffix, csv.render(&self.hash).as_bytes())
    }

    pub fn write_bytes(&mut self, suffix: &str, bytes: &[u8]) -> Result<PathBuf> {
        let p = self.path(suffix);
        write_atomic(&p, bytes)?;
        self.files.push(p.file_name().unwrap().to_string_lossy().into_owned());
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn hash_depends_on_both_parts() {
        let a = config_hash("omega", "{}");
        assert_eq!(a.len(), 64);
        assert_eq!(a, config_hash("omega", "{}"));
        assert_ne!(a, config_hash("robustness", "{}"));
        assert_ne!(a, config_hash("omega", "{\"x\":1}"));
    }

    #[test]
    fn atomic_write_leaves_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let mut set = ArtifactSet::new(dir.path(), "omega", &config_hash("omega", ""));
        let mut csv = Csv::new(&["a", "b"]);
        csv.push_f64(&[1.0, 2.0]);
        let p = set.write_csv(".csv", &csv).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("# config_hash="));
        assert_eq!(text.lines().nth(1), Some("a,b"));
        let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1);
    }
}
