use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::failure::{write_error, Failure, Outcome};

pub mod audit;
pub mod debias;
pub mod kci;
pub mod randomize;
pub mod sat;
pub mod sem;

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Outcome<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::domain(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn print_json<T: Serialize>(value: &T) -> Outcome<()> {
    let text = to_json(value)?;
    std::io::stdout()
        .lock()
        .write_all(text.as_bytes())
        .map_err(|e| Failure::domain(format!("cannot write to stdout: {e}")))
}

pub fn write_file(path: &Path, contents: &str) -> Outcome<()> {
    std::fs::write(path, contents).map_err(|e| write_error(path, e))
}

pub fn csv_writer(path: &Path) -> Outcome<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| write_error(path, e))
}

/// `path` with `suffix` appended to its file name.
pub fn sibling(path: &Path, suffix: &str) -> std::path::PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}
