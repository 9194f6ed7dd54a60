//! Raw field snapshots: a little-endian `f64` block (x fastest, components
//! back to back) plus a plain-text `key = value` sidecar header.

use std::fs;
use std::path::{Path, PathBuf};

use super::{Grid, ScalarField3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMeta {
    pub time: f64,
    pub nu: f64,
    pub components: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub grid: Grid,
    pub meta: SnapshotMeta,
    pub fields: Vec<ScalarField3>,
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("bin"), stem.with_extension("hdr"))
}

pub fn write_snapshot(stem: &Path, fields: &[&ScalarField3], meta: &SnapshotMeta) -> Result<()> {
    let grid = *fields
        .first()
        .ok_or_else(|| Error::Format("snapshot needs at least one field".into()))?
        .grid();
    if fields.iter().any(|f| *f.grid() != grid) {
        return Err(Error::GridMismatch);
    }
    if meta.components.len() != fields.len() {
        return Err(Error::Format("one component name per field".into()));
    }
    let (bin, hdr) = paths(stem);
    let mut bytes = Vec::with_capacity(8 * grid.len() * fields.len());
    for f in fields {
        for v in f.values() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(&bin, bytes)?;
    let header = format!(
        "# field snapshot sidecar\nR = {}\nn = {}\nshift = {}\ncomponents = {}\ntime = {}\nnu = {}\nbyte_order = little-endian\nlayout = x-fastest\ndtype = float64\n",
        grid.extent(),
        grid.n(),
        grid.shift(),
        meta.components.join(","),
        meta.time,
        meta.nu
    );
    fs::write(&hdr, header)?;
    Ok(())
}

pub fn read_snapshot(stem: &Path) -> Result<Snapshot> {
    let (bin, hdr) = paths(stem);
    let text = fs::read_to_string(&hdr)?;
    let get = |key: &str| -> Result<String> {
        text.lines()
            .filter(|l| !l.trim_start().starts_with('#'))
            .filter_map(|l| l.split_once('='))
            .find(|(k, _)| k.trim() == key)
            .map(|(_, v)| v.trim().to_string())
            .ok_or_else(|| Error::Format(format!("missing header key {key}")))
    };
    let num = |key: &str| -> Result<f64> {
        get(key)?
            .parse::<f64>()
            .map_err(|e| Error::Format(format!("{key}: {e}")))
    };
    let n = get("n")?
        .parse::<usize>()
        .map_err(|e| Error::Format(format!("n: {e}")))?;
    let shift = num("shift")?;
    let grid = if shift == 0.0 {
        Grid::unshifted(num("R")?, n)?
    } else {
        Grid::new(num("R")?, n)?
    };
    let components: Vec<String> = get("components")?.split(',').map(str::to_string).collect();
    let bytes = fs::read(&bin)?;
    if bytes.len() != 8 * grid.len() * components.len() {
        return Err(Error::Format(format!(
            "expected {} bytes, found {}",
            8 * grid.len() * components.len(),
            bytes.len()
        )));
    }
    let fields = bytes
        .chunks_exact(8 * grid.len())
        .map(|block| {
            let vals = block
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
                .collect();
            ScalarField3::from_values(grid, vals)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Snapshot {
        grid,
        meta: SnapshotMeta {
            time: num("time")?,
            nu: num("nu")?,
            components,
        },
        fields,
    })
}
