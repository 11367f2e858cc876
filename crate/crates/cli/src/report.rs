//! Run reports: `key<TAB>value` rows, a `#` summary block, and wall-clock
//! timings in trailing `timing.*` rows (the only part that varies between
//! identical runs).

use std::fmt::Display;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use anyhow::Result;
use codemix::io::{atomic_write, sha256_file};

pub struct Report {
    rows: Vec<(String, String)>,
    summary: Vec<String>,
    timings: Vec<(String, Duration)>,
    started: Instant,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut r = Report {
            rows: Vec::new(),
            summary: Vec::new(),
            timings: Vec::new(),
            started: Instant::now(),
        };
        r.set("command", command);
        r.set("version", codemix::VERSION);
        r
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Display) {
        self.rows.push((key.into(), value.to_string()));
    }

    /// Record a file with its content hash.
    pub fn file(&mut self, key: &str, path: &Path) -> Result<()> {
        let hash = sha256_file(path)?;
        self.set(key, format_args!("{}\tsha256:{hash}", path.display()));
        Ok(())
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }

    /// Time a stage, recording its duration under `timing.<name>`.
    pub fn time<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f(self)?;
        self.timings.push((name.to_owned(), t.elapsed()));
        Ok(out)
    }

    pub fn render(&self, w: &mut dyn Write) -> std::io::Result<()> {
        writeln!(w, "key\tvalue")?;
        for (k, v) in &self.rows {
            writeln!(w, "{k}\t{v}")?;
        }
        writeln!(w, "#")?;
        for line in &self.summary {
            writeln!(w, "# {line}")?;
        }
        for (k, d) in &self.timings {
            writeln!(w, "timing.{k}\t{:.3}", d.as_secs_f64() * 1e3)?;
        }
        writeln!(w, "timing.total\t{:.3}", self.started.elapsed().as_secs_f64() * 1e3)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        atomic_write(path, |w| self.render(w))?;
        Ok(())
    }
}

/// `<path>.report.tsv`
pub fn default_path(out: &Path) -> std::path::PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".report.tsv");
    out.with_file_name(name)
}
