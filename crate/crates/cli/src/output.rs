//! Result files: CSV with full precision and LF endings, pretty JSON, all
//! written through a temporary file and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

/// A finished file waiting to be committed.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Formats a float with 17 significant digits; non-finite values are written
/// as `NaN`, `inf` or `-inf`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, fmt_f64)
}

/// CSV table assembled in memory.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Result<Self, CliError> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(header)?;
        Ok(Table { writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        Ok(self.writer.write_record(fields)?)
    }

    pub fn finish(self, name: &str) -> Result<Artifact, CliError> {
        let bytes = self.writer.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        Ok(Artifact {
            name: name.to_string(),
            bytes,
        })
    }
}

pub fn json_artifact<T: Serialize>(name: &str, value: &T) -> Result<Artifact, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(Artifact {
        name: name.to_string(),
        bytes,
    })
}

/// Writes every artifact to a temporary sibling, then renames them all into
/// `dir`. On failure the temporaries are removed and nothing is renamed.
pub fn commit(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::with_capacity(artifacts.len());
    let cleanup = |staged: &[(PathBuf, PathBuf)]| {
        for (tmp, _) in staged {
            let _ = fs::remove_file(tmp);
        }
    };
    for a in artifacts {
        let target = dir.join(&a.name);
        if let Some(parent) = target.parent() {
            fs::create_dir_all(parent)?;
        }
        let tmp = target.with_file_name(format!(
            ".{}.tmp",
            target.file_name().and_then(|n| n.to_str()).unwrap_or("out")
        ));
        let result = fs::File::create(&tmp).and_then(|mut f| {
            f.write_all(&a.bytes)?;
            f.sync_all()
        });
        staged.push((tmp, target));
        if let Err(e) = result {
            cleanup(&staged);
            return Err(CliError::Io(format!("{}: {e}", a.name)));
        }
    }
    let mut written = Vec::with_capacity(staged.len());
    for (tmp, target) in &staged {
        if let Err(e) = fs::rename(tmp, target) {
            cleanup(&staged);
            return Err(CliError::Io(format!("{}: {e}", target.display())));
        }
        written.push(target.clone());
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_digits() {
        let s = fmt_f64(0.1);
        assert_eq!(s, "1.0000000000000001e-1");
        assert_eq!(s.parse::<f64>().unwrap(), 0.1);
        let x = std::f64::consts::PI * 1e-7;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        assert_eq!(fmt_f64(f64::NAN), "NaN");
        assert_eq!(fmt_opt(None), "");
    }

    #[test]
    fn csv_uses_lf_and_one_header() {
        let mut t = Table::new(&["t", "value"]).unwrap();
        t.row([fmt_f64(0.0), fmt_f64(1.5)]).unwrap();
        let a = t.finish("x.csv").unwrap();
        let text = String::from_utf8(a.bytes).unwrap();
        assert_eq!(text, "t,value\n0.0000000000000000e0,1.5000000000000000e0\n");
    }

    #[test]
    fn commit_leaves_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let arts = vec![
            Artifact {
                name: "a.csv".into(),
                bytes: b"a\n".to_vec(),
            },
            Artifact {
                name: "sub/b.json".into(),
                bytes: b"{}\n".to_vec(),
            },
        ];
        let written = commit(dir.path(), &arts).unwrap();
        assert_eq!(written.len(), 2);
        assert_eq!(fs::read(dir.path().join("sub/b.json")).unwrap(), b"{}\n");
        let leftovers: Vec<_> = walk(dir.path())
            .into_iter()
            .filter(|p| p.to_string_lossy().ends_with(".tmp"))
            .collect();
        assert!(leftovers.is_empty());
    }

    fn walk(dir: &Path) -> Vec<PathBuf> {
        let mut out = Vec::new();
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                out.extend(walk(&p));
            } else {
                out.push(p);
            }
        }
        out
    }
}
