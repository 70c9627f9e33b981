//! Raw field snapshots: little-endian f64 payload plus a TOML sidecar.
//!
//! Payload order is the grid's flat order (`k` fastest, then `j`, then `i`),
//! component-major for vector fields. The sidecar lives next to the payload
//! as `<payload>.meta`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use smx_core::grid::{Axis, Grid3D};

use crate::error::SimError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotMeta {
    pub name: String,
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
    pub time: f64,
    pub components: usize,
}

impl SnapshotMeta {
    pub fn len(&self) -> usize {
        self.dims.iter().product::<usize>() * self.components
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub meta: SnapshotMeta,
    pub data: Vec<f64>,
}

impl Snapshot {
    /// Whole-grid snapshot of `components` stacked fields.
    pub fn full(name: &str, grid: &Grid3D, time: f64, components: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), grid.len() * components, "snapshot length");
        let meta = SnapshotMeta {
            name: name.into(),
            dims: grid.dims(),
            spacing: grid.spacing(),
            origin: grid.origin(),
            time,
            components,
        };
        Self { meta, data }
    }

    /// The node plane nearest `z` of a scalar field.
    pub fn z_plane(name: &str, grid: &Grid3D, time: f64, values: &[f64], z: f64) -> Self {
        assert_eq!(values.len(), grid.len(), "scalar field length");
        let k = grid.nearest_plane(Axis::Z, z);
        let [nx, ny, _] = grid.dims();
        let mut data = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                data.push(values[grid.node_index(i as isize, j as isize, k as isize)]);
            }
        }
        let mut origin = grid.origin();
        origin[2] = grid.position(0, 0, k)[2];
        let meta = SnapshotMeta {
            name: name.into(),
            dims: [nx, ny, 1],
            spacing: grid.spacing(),
            origin,
            time,
            components: 1,
        };
        Self { meta, data }
    }
}

pub fn sidecar_path(payload: &Path) -> PathBuf {
    let mut s = payload.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Writes the payload and its sidecar; returns both paths.
pub fn write_snapshot(snap: &Snapshot, path: &Path) -> Result<[PathBuf; 2], SimError> {
    let mut bytes = Vec::with_capacity(snap.data.len() * 8);
    for v in &snap.data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, &bytes).map_err(|e| SimError::io(path, e))?;
    let meta_path = sidecar_path(path);
    let text = toml::to_string(&snap.meta).map_err(|e| SimError::format(&meta_path, e.to_string()))?;
    fs::write(&meta_path, text).map_err(|e| SimError::io(&meta_path, e))?;
    Ok([path.to_owned(), meta_path])
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, SimError> {
    let meta_path = sidecar_path(path);
    let text = fs::read_to_string(&meta_path).map_err(|e| SimError::io(&meta_path, e))?;
    let meta: SnapshotMeta = toml::from_str(&text).map_err(|e| SimError::format(&meta_path, e.to_string()))?;
    let bytes = fs::read(path).map_err(|e| SimError::io(path, e))?;
    if bytes.len() != meta.len() * 8 {
        return Err(SimError::format(
            path,
            format!("payload has {} bytes, metadata implies {}", bytes.len(), meta.len() * 8),
        ));
    }
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    Ok(Snapshot { meta, data })
}
