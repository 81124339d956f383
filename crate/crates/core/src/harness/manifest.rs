//! Plain-text run manifest: `key = value` lines under `[section]` headers,
//! recording the version, seeds, configuration and written artifacts of one
//! command.

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::Result;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunManifest {
    sections: Vec<(String, Vec<(String, String)>)>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        let mut m = RunManifest::default();
        m.set("run", "command", command);
        m.set("run", "package", env!("CARGO_PKG_NAME"));
        m.set("run", "version", env!("CARGO_PKG_VERSION"));
        m
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl ToString) {
        let idx = match self.sections.iter().position(|(s, _)| s == section) {
            Some(i) => i,
            None => {
                self.sections.push((section.to_string(), Vec::new()));
                self.sections.len() - 1
            }
        };
        let entries = &mut self.sections[idx].1;
        let value = value.to_string().replace('\n', " ");
        match entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .iter()
            .find(|(s, _)| s == section)
            .and_then(|(_, e)| e.iter().find(|(k, _)| k == key))
            .map(|(_, v)| v.as_str())
    }

    /// Records an output file with its SHA-256 digest.
    pub fn artifact(&mut self, path: &Path) -> Result<()> {
        let digest = hex::encode(Sha256::digest(fs::read(path)?));
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        self.set("artifacts", &name, format!("sha256:{digest}"));
        Ok(())
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for (i, (section, entries)) in self.sections.iter().enumerate() {
            if i > 0 {
                writeln!(w)?;
            }
            writeln!(w, "[{section}]")?;
            for (k, v) in entries {
                writeln!(w, "{k} = {v}")?;
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> RunManifest {
        let mut m = RunManifest::default();
        let mut section = String::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(s) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = s.to_string();
            } else if let Some((k, v)) = line.split_once(" = ") {
                m.set(&section, k, v);
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut m = RunManifest::new("cv");
        m.set("config", "seed", 7);
        m.set("config", "seed", 8);
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        let back = RunManifest::parse(std::str::from_utf8(&buf).unwrap());
        assert_eq!(back, m);
        assert_eq!(back.get("config", "seed"), Some("8"));
    }
}
