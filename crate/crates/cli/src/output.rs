use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

/// Plain float text; NaN as `nan`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

pub struct Csv {
    pub name: String,
    text: String,
    width: usize,
}

impl Csv {
    pub fn new(name: &str, meta: &[(&str, String)], header: &[&str]) -> Csv {
        let mut text = String::new();
        for (k, v) in meta {
            let _ = writeln!(text, "# {k}: {v}");
        }
        let _ = writeln!(text, "{}", header.join(","));
        Csv {
            name: name.to_string(),
            text,
            width: header.len(),
        }
    }

    /// Verbatim file contents.
    pub fn raw(name: &str, text: String) -> Csv {
        Csv {
            name: name.to_string(),
            text,
            width: 0,
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        debug_assert_eq!(fields.len(), self.width);
        let _ = writeln!(self.text, "{}", fields.join(","));
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

#[derive(Serialize, serde::Deserialize, Debug, PartialEq)]
pub struct FileRecord {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a RunConfig,
    versions: Versions,
    files: Vec<FileRecord>,
}

#[derive(Serialize)]
struct Versions {
    #[serde(rename = "fbse-cli")]
    cli: &'static str,
    #[serde(rename = "fbse-core")]
    core: &'static str,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes every file in order, then `manifest.json` with their checksums.
pub fn write_all(dir: &Path, cfg: &RunConfig, files: &[(String, String)]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut records = Vec::new();
    for (name, text) in files {
        std::fs::write(dir.join(name), text)?;
        records.push(FileRecord {
            name: name.clone(),
            sha256: sha256_hex(text.as_bytes()),
            bytes: text.len(),
        });
    }
    let manifest = Manifest {
        config: cfg,
        versions: Versions {
            cli: env!("CARGO_PKG_VERSION"),
            core: fbse_core::VERSION,
        },
        files: records,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
    std::fs::write(dir.join("manifest.json"), json + "\n")
}

/// Files whose checksum no longer matches the manifest in `dir`.
pub fn verify(dir: &Path) -> anyhow::Result<Vec<String>> {
    #[derive(serde::Deserialize)]
    struct Listed {
        files: Vec<FileRecord>,
    }
    let text = std::fs::read_to_string(dir.join("manifest.json"))?;
    let listed: Listed = serde_json::from_str(&text)?;
    let mut bad = Vec::new();
    for f in listed.files {
        match std::fs::read(dir.join(&f.name)) {
            Ok(bytes) if sha256_hex(&bytes) == f.sha256 => {}
            _ => bad.push(f.name),
        }
    }
    Ok(bad)
}
