//! Deterministic CSV/JSON emission with atomic file writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::{CliError, OutputFormat, RunConfig};

/// Shortest round-trip decimal representation; stable across runs.
pub fn fmt_f(v: f64) -> String {
    format!("{v}")
}

/// One CSV document: an optional tag comment, a header, and rows.
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(tag: &str, header: &[&str]) -> Self {
        let mut text = String::new();
        if !tag.is_empty() {
            text.push_str("# ");
            text.push_str(tag);
            text.push('\n');
        }
        text.push_str(&header.join(","));
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    {
        let mut file = std::fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// `out.csv` + `moments` -> `out.moments.csv`.
fn derived_path(base: &Path, suffix: &str) -> PathBuf {
    if suffix.is_empty() {
        return base.to_path_buf();
    }
    let ext = base.extension().map(|e| e.to_string_lossy().into_owned());
    let stem = base.with_extension("");
    match ext {
        Some(ext) => PathBuf::from(format!("{}.{suffix}.{ext}", stem.display())),
        None => PathBuf::from(format!("{}.{suffix}", base.display())),
    }
}

/// Emits a command's result: in CSV mode one file per part (the unnamed
/// part goes to the base path, or to stdout when no output path is set);
/// in JSON mode a single `{config, results, diagnostics}` object.
pub fn emit(
    cfg: &RunConfig,
    parts: Vec<(String, String)>,
    results: serde_json::Value,
    diagnostics: serde_json::Value,
) -> Result<(), CliError> {
    match cfg.format {
        OutputFormat::Csv => match &cfg.output {
            Some(base) => {
                for (suffix, text) in &parts {
                    write_atomic(&derived_path(base, suffix), text.as_bytes())?;
                }
                Ok(())
            }
            None => {
                let mut out = std::io::stdout().lock();
                for (suffix, text) in &parts {
                    if suffix.is_empty() {
                        out.write_all(text.as_bytes())?;
                    }
                }
                Ok(())
            }
        },
        OutputFormat::Json => {
            let doc = serde_json::json!({
                "config": cfg.to_json(),
                "results": results,
                "diagnostics": diagnostics,
            });
            let mut text =
                serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
            text.push('\n');
            match &cfg.output {
                Some(base) => write_atomic(base, text.as_bytes()),
                None => {
                    std::io::stdout().lock().write_all(text.as_bytes())?;
                    Ok(())
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_paths_keep_extension() {
        assert_eq!(
            derived_path(Path::new("out.csv"), "moments"),
            PathBuf::from("out.moments.csv")
        );
        assert_eq!(
            derived_path(Path::new("out.csv"), ""),
            PathBuf::from("out.csv")
        );
        assert_eq!(
            derived_path(Path::new("out"), "sweep"),
            PathBuf::from("out.sweep")
        );
    }

    #[test]
    fn float_formatting_round_trips() {
        assert_eq!(fmt_f(0.1), "0.1");
        assert_eq!(fmt_f(1.0), "1");
        let v = 0.682689492137086;
        assert_eq!(fmt_f(v).parse::<f64>().unwrap(), v);
    }
}
