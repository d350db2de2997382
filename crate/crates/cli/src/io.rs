use std::io::Write;
use std::path::Path;

use crate::error::{CliError, Result};

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(CliError::io(dir))?;
    tmp.write_all(contents).map_err(CliError::io(path))?;
    tmp.persist(path).map_err(|e| CliError::io(path)(e.error))?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Header line plus rows, LF-terminated.
pub fn csv_text<I: IntoIterator<Item = String>>(header: &str, rows: I) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

/// Worker pool sized by `FLATOPT_THREADS` when set.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("FLATOPT_THREADS") {
        let n = v.trim().parse::<usize>().ok().filter(|n| *n > 0).ok_or_else(|| {
            crate::error::ConfigError::BadValue {
                key: "FLATOPT_THREADS".into(),
                value: v.clone(),
                reason: "expected a positive integer".into(),
            }
        })?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Core(flatopt::Error::InvalidConfig(format!("thread pool: {e}"))))
}
