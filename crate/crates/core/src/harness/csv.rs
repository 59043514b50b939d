use std::fs;
use std::io::Write;
use std::path::Path;

use super::{SweepRow, TrialResult};
use crate::error::{Error, Result};

/// `<kind>-vs-SPC-<dataset>-<method>[-<variant>]-combined.csv`
pub fn csv_file_name(kind: &str, dataset: &str, method: &str, variant: Option<&str>) -> String {
    match variant {
        Some(v) => format!("{kind}-vs-SPC-{dataset}-{method}-{v}-combined.csv"),
        None => format!("{kind}-vs-SPC-{dataset}-{method}-combined.csv"),
    }
}

pub fn csv_header() -> String {
    let mut cols = vec!["spc".to_string()];
    for stem in TrialResult::STEMS {
        cols.push(format!("mean_{stem}"));
        cols.push(format!("std_{stem}"));
    }
    cols.join(";")
}

/// Semicolon-separated text; values use the shortest decimal form that
/// parses back to the same `f64`.
pub fn format_csv(rows: &[SweepRow]) -> String {
    let mut out = csv_header();
    out.push('\n');
    for row in rows {
        out.push_str(&row.spc.to_string());
        for (m, s) in row.mean.values().iter().zip(row.std.values()) {
            out.push_str(&format!(";{m};{s}"));
        }
        out.push('\n');
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>> {
    let bad = |msg: String| Error::format("<csv>", msg);
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    if header != csv_header() {
        return Err(bad(format!("unexpected header {header}")));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(';').collect();
            if fields.len() != 23 {
                return Err(bad(format!("line {}: {} fields", i + 2, fields.len())));
            }
            let spc = fields[0]
                .parse()
                .map_err(|_| bad(format!("line {}: bad spc {}", i + 2, fields[0])))?;
            let mut mean = [0.0; 11];
            let mut std = [0.0; 11];
            for k in 0..11 {
                let parse = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("line {}: bad value {s}", i + 2)));
                mean[k] = parse(fields[1 + 2 * k])?;
                std[k] = parse(fields[2 + 2 * k])?;
            }
            Ok(SweepRow {
                spc,
                mean: TrialResult::from_values(mean),
                std: TrialResult::from_values(std),
            })
        })
        .collect()
}

/// Writes to a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::format(path, "not a file path"))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

pub fn write_csv(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Empty("sweep rows"));
    }
    write_atomic(path.as_ref(), format_csv(rows).as_bytes())
}

/// Plain `key=value` lines, in the given order.
pub fn write_manifest(path: impl AsRef<Path>, entries: &[(String, String)]) -> Result<()> {
    let mut text = String::new();
    for (k, v) in entries {
        text.push_str(&format!("{k}={v}\n"));
    }
    write_atomic(path.as_ref(), text.as_bytes())
}
