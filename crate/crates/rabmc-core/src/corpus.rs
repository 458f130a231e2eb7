//! Spec directories with expected verdicts.
//!
//! A spec `NAME.rab` may have a sidecar `NAME.expect` listing one
//! `PROPERTY VERDICT` pair per line, where the verdict is `SAFE` or
//! `UNSAFE`. Blank lines and `;` comments are ignored.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Sidecar { path: PathBuf, line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expectation {
    pub property: String,
    /// `SAFE` or `UNSAFE`, as printed by the engine.
    pub verdict: String,
}

/// Parse sidecar text; `path` is only used in messages.
pub fn parse_expectations(text: &str, path: &Path) -> Result<Vec<Expectation>, CorpusError> {
    let mut out: Vec<Expectation> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split(';').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| CorpusError::Sidecar { path: path.to_path_buf(), line: n + 1, message };
        let words: Vec<&str> = line.split_whitespace().collect();
        let [property, verdict] = words[..] else {
            return Err(err("expected `PROPERTY VERDICT`".into()));
        };
        if verdict != "SAFE" && verdict != "UNSAFE" {
            return Err(err(format!("unknown verdict `{verdict}`")));
        }
        if out.iter().any(|e| e.property == property) {
            return Err(err(format!("property `{property}` listed twice")));
        }
        out.push(Expectation { property: property.into(), verdict: verdict.into() });
    }
    Ok(out)
}

pub fn sidecar_path(spec: &Path) -> PathBuf {
    spec.with_extension("expect")
}

/// Expectations for `spec`, or `None` when there is no sidecar.
pub fn load_expectations(spec: &Path) -> Result<Option<Vec<Expectation>>, CorpusError> {
    let path = sidecar_path(spec);
    match fs::read_to_string(&path) {
        Ok(text) => parse_expectations(&text, &path).map(Some),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(source) => Err(CorpusError::Io { path, source }),
    }
}

/// The `.rab` files directly inside `dir`, sorted by name.
pub fn list_specs(dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let io_err = |source| CorpusError::Io { path: dir.to_path_buf(), source };
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let p = entry.map_err(io_err)?.path();
        if p.is_file() && p.extension().is_some_and(|e| e == "rab") {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let e = parse_expectations("; header\na SAFE\n\nb UNSAFE ; trailing\n", Path::new("x")).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[1], Expectation { property: "b".into(), verdict: "UNSAFE".into() });
    }

    #[test]
    fn rejects_unknown_verdicts_and_duplicates() {
        assert!(parse_expectations("a MAYBE\n", Path::new("x")).is_err());
        assert!(parse_expectations("a SAFE\na UNSAFE\n", Path::new("x")).is_err());
        assert!(parse_expectations("a\n", Path::new("x")).is_err());
    }
}
