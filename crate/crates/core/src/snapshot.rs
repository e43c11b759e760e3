//! Binary snapshots shared by distribution functions, fields and tables.
//!
//! Layout (little-endian): magic `RVMF`, version `u32`, six `u32` grid
//! dimensions (three spatial, three momentum), four `f64` box parameters
//! `L₁, L₂, L₃, P`, the time as `f64`, then the row-major `f64` payload with
//! the spatial index outermost. The header is 72 bytes long.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::phase_space::{DistributionFunction, PhaseGrid, VectorField};
use crate::{Error, Result};

pub const MAGIC: [u8; 4] = *b"RVMF";
pub const VERSION: u32 = 1;
pub const HEADER_BYTES: usize = 72;

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotHeader {
    pub version: u32,
    pub spatial_cells: [u32; 3],
    pub inner_dims: [u32; 3],
    pub lengths: [f64; 3],
    pub momentum_halfwidth: f64,
    pub time: f64,
}

impl SnapshotHeader {
    fn for_grid(grid: &PhaseGrid, inner_dims: [u32; 3], time: f64) -> Self {
        let c = grid.spatial_cells();
        Self {
            version: VERSION,
            spatial_cells: [c[0] as u32, c[1] as u32, c[2] as u32],
            inner_dims,
            lengths: grid.spatial_lengths(),
            momentum_halfwidth: grid.momentum_halfwidth(),
            time,
        }
    }

    pub fn payload_len(&self) -> usize {
        self.spatial_cells.iter().chain(&self.inner_dims).map(|&d| d as usize).product()
    }

    fn encode(&self) -> [u8; HEADER_BYTES] {
        let mut out = [0u8; HEADER_BYTES];
        out[..4].copy_from_slice(&MAGIC);
        out[4..8].copy_from_slice(&self.version.to_le_bytes());
        for (i, d) in self.spatial_cells.iter().chain(&self.inner_dims).enumerate() {
            out[8 + 4 * i..12 + 4 * i].copy_from_slice(&d.to_le_bytes());
        }
        let floats = [
            self.lengths[0],
            self.lengths[1],
            self.lengths[2],
            self.momentum_halfwidth,
            self.time,
        ];
        for (i, v) in floats.iter().enumerate() {
            out[32 + 8 * i..40 + 8 * i].copy_from_slice(&v.to_le_bytes());
        }
        out
    }

    fn decode(bytes: &[u8; HEADER_BYTES]) -> Result<Self> {
        if bytes[..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let u = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
        let f = |i: usize| f64::from_le_bytes(bytes[i..i + 8].try_into().expect("8 bytes"));
        let version = u(4);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        Ok(Self {
            version,
            spatial_cells: [u(8), u(12), u(16)],
            inner_dims: [u(20), u(24), u(28)],
            lengths: [f(32), f(40), f(48)],
            momentum_halfwidth: f(56),
            time: f(64),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub payload: Vec<f64>,
}

pub fn write_snapshot(path: &Path, snapshot: &Snapshot) -> Result<()> {
    if snapshot.payload.len() != snapshot.header.payload_len() {
        return Err(Error::ShapeMismatch {
            expected: snapshot.header.payload_len(),
            actual: snapshot.payload.len(),
        });
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&snapshot.header.encode())?;
    for v in &snapshot.payload {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let mut r = BufReader::new(File::open(path)?);
    let mut head = [0u8; HEADER_BYTES];
    r.read_exact(&mut head)?;
    let header = SnapshotHeader::decode(&head)?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * header.payload_len() {
        return Err(Error::Format(format!(
            "payload has {} bytes, header implies {}",
            bytes.len(),
            8 * header.payload_len()
        )));
    }
    let payload = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(Snapshot { header, payload })
}

pub fn write_distribution(path: &Path, f: &DistributionFunction) -> Result<()> {
    let c = f.grid().momentum_cells();
    let header = SnapshotHeader::for_grid(f.grid(), [c[0] as u32, c[1] as u32, c[2] as u32], f.time());
    write_snapshot(
        path,
        &Snapshot {
            header,
            payload: f.values().to_vec(),
        },
    )
}

pub fn read_distribution(path: &Path) -> Result<DistributionFunction> {
    let s = read_snapshot(path)?;
    let h = &s.header;
    let grid = PhaseGrid::new(
        h.spatial_cells.map(|d| d as usize),
        h.lengths,
        h.inner_dims.map(|d| d as usize),
        h.momentum_halfwidth,
    )?;
    DistributionFunction::new(grid, s.payload, h.time)
}

/// Vector fields are stored with inner dimensions `(3, 1, 1)`.
pub fn write_vector_field(path: &Path, grid: &PhaseGrid, field: &VectorField, time: f64) -> Result<()> {
    let n_x = grid.n_x();
    let mut payload = Vec::with_capacity(3 * n_x);
    for ix in 0..n_x {
        for c in field {
            payload.push(c[ix]);
        }
    }
    write_snapshot(
        path,
        &Snapshot {
            header: SnapshotHeader::for_grid(grid, [3, 1, 1], time),
            payload,
        },
    )
}

pub fn read_vector_field(path: &Path) -> Result<(VectorField, f64)> {
    let s = read_snapshot(path)?;
    if s.header.inner_dims != [3, 1, 1] {
        return Err(Error::Format("not a vector field snapshot".into()));
    }
    let mut out: VectorField = Default::default();
    for (a, comp) in out.iter_mut().enumerate() {
        *comp = s.payload.iter().skip(a).step_by(3).copied().collect();
    }
    Ok((out, s.header.time))
}

/// Scalar tables over the spatial grid, such as mollifier multipliers.
pub fn write_scalar_table(path: &Path, grid: &PhaseGrid, values: &[f64], time: f64) -> Result<()> {
    write_snapshot(
        path,
        &Snapshot {
            header: SnapshotHeader::for_grid(grid, [1, 1, 1], time),
            payload: values.to_vec(),
        },
    )
}
