//! Deterministic file output.

use std::io::Write;
use std::path::Path;

use pbit_forge_core::anneal::RunTrace;
use pbit_forge_core::device::ConductanceMap;
use serde::Serialize;

use crate::error::HarnessError;

/// Six significant digits in scientific notation.
pub fn sci(x: f64) -> String {
    format!("{x:.5e}")
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| HarnessError::io(dir, e))?;
    tmp.write_all(bytes)
        .map_err(|e| HarnessError::io(path, e))?;
    tmp.persist(path)
        .map_err(|e| HarnessError::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| HarnessError::Validation(format!("serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// `iteration,v_read_mV,flipped_index,energy`; `flipped_index` is -1 when the
/// update left the spin unchanged.
pub fn trace_csv(trace: &RunTrace) -> String {
    let mut out = String::with_capacity(40 * trace.records.len() + 64);
    out.push_str("iteration,v_read_mV,flipped_index,energy\n");
    for r in &trace.records {
        let flipped = if r.flipped { r.site as i64 } else { -1 };
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.iteration,
            sci(r.v_read * 1e3),
            flipped,
            sci(r.energy)
        ));
    }
    out
}

/// One line per row, conductances in µS.
pub fn conductance_csv(map: &ConductanceMap) -> String {
    let mut out = String::new();
    for r in 0..map.rows() {
        let row: Vec<String> = map.row(r).iter().map(|&g| sci(g)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
