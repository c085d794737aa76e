//! Files are written whole; floats use 17 significant digits in CSV and
//! shortest round-trip form in JSON, so identical runs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::failure::Failure;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// `header` then one line per row.
pub fn csv<const N: usize>(header: &str, rows: impl IntoIterator<Item = [f64; N]>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|x| num(*x)).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    log::info!("wrote {}", path.display());
    Ok(path)
}

pub fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<PathBuf, Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure {
        kind: "serialization".into(),
        message: e.to_string(),
        code: crate::failure::EXIT_INPUT,
    })?;
    text.push('\n');
    write(dir, name, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(0.0), "0.0000000000000000e0");
        let text = csv("a,b", [[1.0, -2.5]]);
        assert_eq!(text, "a,b\n1.0000000000000000e0,-2.5000000000000000e0\n");
    }
}
