//! Text outputs of the CLI: tab-separated grids with a single `#` header
//! line, flat key-value reports, and the run manifest with content checksums.
//!
//! Floats are serialized with the shortest round-trip representation, so two
//! deterministic runs produce byte-identical grid files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::grid::Field;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Serialize a field as `s \t t \t <label>` rows, plus optional extra columns
/// evaluated per node.
pub fn field_tsv(field: &Field, extras: &[(&str, &dyn Fn(usize, usize, f64, f64) -> f64)]) -> String {
    let g = field.grid();
    let mut out = String::new();
    let mut header = format!(
        "# s\tt\t{}\tgrid: c={} S={} T={} h={}",
        field.label,
        fmt_f64(g.c()),
        fmt_f64(g.s_max()),
        fmt_f64(g.t_max()),
        fmt_f64(g.h())
    );
    if !extras.is_empty() {
        let names: Vec<&str> = extras.iter().map(|(n, _)| *n).collect();
        header = format!(
            "# s\tt\t{}\t{}\tgrid: c={} S={} T={} h={}",
            field.label,
            names.join("\t"),
            fmt_f64(g.c()),
            fmt_f64(g.s_max()),
            fmt_f64(g.t_max()),
            fmt_f64(g.h())
        );
    }
    out.push_str(&header);
    out.push('\n');
    for (i, j, s, t, v) in field.iter_nodes() {
        let _ = write!(out, "{}\t{}\t{}", fmt_f64(s), fmt_f64(t), fmt_f64(v));
        for (_, f) in extras {
            let _ = write!(out, "\t{}", fmt_f64(f(i, j, s, t)));
        }
        out.push('\n');
    }
    out
}

/// Serialize aligned columns (e.g. an energy trace) as TSV.
pub fn columns_tsv(header: &str, columns: &[(&str, &[f64])]) -> String {
    let mut out = String::new();
    let names: Vec<&str> = columns.iter().map(|(n, _)| *n).collect();
    let _ = writeln!(out, "# {}\t{}", names.join("\t"), header);
    let rows = columns.first().map_or(0, |(_, c)| c.len());
    for r in 0..rows {
        let vals: Vec<String> = columns.iter().map(|(_, c)| fmt_f64(c[r])).collect();
        let _ = writeln!(out, "{}", vals.join("\t"));
    }
    out
}

/// Flat `key = value` report.
#[derive(Debug, Default, Clone)]
pub struct KvReport {
    entries: Vec<(String, String)>,
}

impl KvReport {
    pub fn new() -> KvReport {
        KvReport::default()
    }

    pub fn push(&mut self, key: &str, value: impl Into<String>) {
        self.entries.push((key.to_string(), value.into()));
    }

    pub fn push_f64(&mut self, key: &str, value: f64) {
        self.push(key, fmt_f64(value));
    }

    pub fn push_usize(&mut self, key: &str, value: usize) {
        self.push(key, value.to_string());
    }

    pub fn push_bool(&mut self, key: &str, value: bool) {
        self.push(key, if value { "true" } else { "false" });
    }

    pub fn extend_prefixed(&mut self, prefix: &str, other: &KvReport) {
        for (k, v) in &other.entries {
            self.entries.push((format!("{prefix}.{k}"), v.clone()));
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Collects output files and writes the run manifest atomically at the end,
/// with a failure record when the run did not complete.
pub struct Manifest {
    dir: PathBuf,
    report: KvReport,
    files: Vec<(String, String)>,
    started: std::time::Instant,
}

impl Manifest {
    pub fn new(dir: &Path, command: &str, config_echo: &KvReport) -> Manifest {
        let mut report = KvReport::new();
        report.push("command", command);
        report.push("artifact.version", env!("CARGO_PKG_VERSION"));
        let mut m = Manifest {
            dir: dir.to_path_buf(),
            report,
            files: Vec::new(),
            started: std::time::Instant::now(),
        };
        m.report.extend_prefixed("config", config_echo);
        m
    }

    /// Write an output file and record its checksum.
    pub fn write_file(&mut self, name: &str, contents: &str) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        self.files
            .push((name.to_string(), sha256_hex(contents.as_bytes())));
        Ok(())
    }

    pub fn note(&mut self, key: &str, value: impl Into<String>) {
        self.report.push(key, value);
    }

    pub fn extend(&mut self, prefix: &str, other: &KvReport) {
        self.report.extend_prefixed(prefix, other);
    }

    /// Finalize the manifest; `failure` records an aborted run. Written to a
    /// temporary name and renamed, so a partial manifest is never observed.
    pub fn finish(mut self, failure: Option<&str>) -> Result<()> {
        self.report
            .push("wall_time_seconds", fmt_f64(self.started.elapsed().as_secs_f64()));
        match failure {
            Some(msg) => {
                self.report.push("status", "failed");
                self.report.push("failure", msg);
            }
            None => self.report.push("status", "ok"),
        }
        for (name, digest) in &self.files {
            self.report.push(&format!("file.{name}.sha256"), digest.clone());
        }
        fs::create_dir_all(&self.dir)?;
        let tmp = self.dir.join("manifest.kv.tmp");
        fs::write(&tmp, self.report.render())?;
        fs::rename(&tmp, self.dir.join("manifest.kv"))?;
        Ok(())
    }
}
