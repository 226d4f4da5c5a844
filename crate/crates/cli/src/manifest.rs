use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use sha2::{Digest, Sha256};

/// Shortest round-trip formatting, switching to exponent form for very
/// small or large magnitudes.
#[derive(Debug, Clone, Copy)]
pub struct Num(pub f64);

impl std::fmt::Display for Num {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let a = self.0.abs();
        if a == 0.0 || (1e-3..1e7).contains(&a) || !a.is_finite() {
            write!(f, "{}", self.0)
        } else {
            write!(f, "{:e}", self.0)
        }
    }
}

/// Plain-text record of one invocation: resolved inputs, their content hash,
/// timings and every file written.
#[derive(Debug, Clone)]
pub struct Manifest {
    command: String,
    inputs: Vec<(String, String)>,
    sources: Vec<(String, String)>,
    notes: Vec<(String, String)>,
    timings: Vec<(String, Duration)>,
    outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            inputs: Vec::new(),
            sources: Vec::new(),
            notes: Vec::new(),
            timings: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.inputs.push((key.to_string(), value.to_string()));
        self
    }

    /// Where an input came from (default, file, flag).
    pub fn source(&mut self, key: &str, origin: &str) -> &mut Self {
        self.sources.push((key.to_string(), origin.to_string()));
        self
    }

    pub fn note(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.notes.push((key.to_string(), value.to_string()));
        self
    }

    pub fn timing(&mut self, phase: &str, d: Duration) -> &mut Self {
        self.timings.push((phase.to_string(), d));
        self
    }

    pub fn output(&mut self, name: &str) -> &mut Self {
        self.outputs.push(name.to_string());
        self
    }

    /// SHA-256 over the command, the solver version and the resolved inputs.
    /// Timings and notes are excluded so reruns hash identically.
    pub fn input_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("command = {}\n", self.command));
        h.update(format!("version = {}\n", env!("CARGO_PKG_VERSION")));
        for (k, v) in &self.inputs {
            h.update(format!("{k} = {v}\n"));
        }
        hex::encode(h.finalize())
    }

    pub fn render(&self, own_name: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command = {}", self.command);
        let _ = writeln!(s, "version = {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "input_hash = {}", self.input_hash());
        let section = |s: &mut String, title: &str, rows: &[(String, String)]| {
            if !rows.is_empty() {
                let _ = writeln!(s, "\n[{title}]");
                for (k, v) in rows {
                    let _ = writeln!(s, "{k} = {v}");
                }
            }
        };
        section(&mut s, "inputs", &self.inputs);
        section(&mut s, "sources", &self.sources);
        section(&mut s, "notes", &self.notes);
        let timings: Vec<_> = self
            .timings
            .iter()
            .map(|(k, d)| (format!("{k}_seconds"), format!("{:.6}", d.as_secs_f64())))
            .collect();
        section(&mut s, "timings", &timings);
        let _ = writeln!(s, "\n[outputs]");
        for o in self.outputs.iter().map(String::as_str).chain([own_name]) {
            let _ = writeln!(s, "{o}");
        }
        s
    }

    pub fn write(&self, dir: &Path, name: &str) -> std::io::Result<PathBuf> {
        let path = dir.join(name);
        std::fs::write(&path, self.render(name))?;
        Ok(path)
    }
}
