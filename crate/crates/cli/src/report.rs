use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shortest form that still carries 17 significant digits.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Provenance written at the top of every table and into the manifest.
#[derive(Clone, Debug, Serialize)]
pub struct Meta {
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub depth: u32,
}

impl Meta {
    /// Hashes the effective configuration, after command-line overrides.
    pub fn new(command: &str, config: &impl Serialize, seed: u64, depth: u32) -> Self {
        let json = serde_json::to_vec(config).expect("configs serialize");
        Meta { command: command.into(), config_sha256: sha256_hex(&json), seed, depth }
    }
}

pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Extra `# key: value` lines after the standard metadata.
    pub notes: Vec<(String, String)>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new(), notes: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width in {}", self.name);
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.into(), value.to_string()));
    }

    pub fn render(&self, meta: &Meta) -> Vec<u8> {
        let mut out = Vec::new();
        writeln!(out, "# tool: haarlab {VERSION}").unwrap();
        writeln!(out, "# command: {}", meta.command).unwrap();
        writeln!(out, "# config_sha256: {}", meta.config_sha256).unwrap();
        writeln!(out, "# seed: {}", meta.seed).unwrap();
        writeln!(out, "# depth: {}", meta.depth).unwrap();
        for (k, v) in &self.notes {
            writeln!(out, "# {k}: {v}").unwrap();
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header).unwrap();
        for row in &self.rows {
            w.write_record(row).unwrap();
        }
        w.into_inner().expect("in-memory writer")
    }
}

#[derive(Serialize)]
struct FileEntry {
    name: String,
    sha256: String,
    rows: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    #[serde(flatten)]
    meta: &'a Meta,
    #[serde(skip_serializing_if = "Option::is_none")]
    study: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    location: Option<&'a str>,
    pass: bool,
    files: Vec<FileEntry>,
}

pub struct Bundle {
    pub meta: Meta,
    pub tables: Vec<Table>,
    pub pass: bool,
    pub study: Option<(String, String)>,
}

impl Bundle {
    /// Writes one CSV per table plus `manifest.json` into `out`, or all
    /// tables to stdout when no directory is given.
    pub fn emit(&self, out: Option<&Path>) -> Result<(), CliError> {
        let rendered: Vec<(String, Vec<u8>)> =
            self.tables.iter().map(|t| (format!("{}.csv", t.name), t.render(&self.meta))).collect();
        let Some(dir) = out else {
            let mut stdout = std::io::stdout().lock();
            for (name, bytes) in &rendered {
                writeln!(stdout, "# file: {name}").map_err(CliError::io)?;
                stdout.write_all(bytes).map_err(CliError::io)?;
            }
            return Ok(());
        };
        fs::create_dir_all(dir).map_err(CliError::io)?;
        let mut files = Vec::new();
        for ((name, bytes), table) in rendered.iter().zip(&self.tables) {
            fs::write(dir.join(name), bytes).map_err(CliError::io)?;
            files.push(FileEntry { name: name.clone(), sha256: sha256_hex(bytes), rows: table.rows.len() });
        }
        let manifest = Manifest {
            tool: "haarlab",
            version: VERSION,
            meta: &self.meta,
            study: self.study.as_ref().map(|(s, _)| s.as_str()),
            location: self.study.as_ref().map(|(_, l)| l.as_str()),
            pass: self.pass,
            files,
        };
        let mut json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        json.push(b'\n');
        fs::write(dir.join("manifest.json"), json).map_err(CliError::io)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(float(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn render_quotes_cube_ids() {
        let meta = Meta::new("test", &"cfg", 3, 4);
        let mut t = Table::new("t", &["cube", "x"]);
        t.push(vec!["2:1,3".into(), float(1.0)]);
        let text = String::from_utf8(t.render(&meta)).unwrap();
        assert!(text.contains("# seed: 3\n"));
        assert!(text.ends_with("cube,x\n\"2:1,3\",1.0000000000000000e0\n"));
    }
}
