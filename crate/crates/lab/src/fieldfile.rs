//! Binary field snapshots.
//!
//! Layout, all little-endian: magic `NPBF`, format version (u32), `d`
//! (u32), `n` for each axis (`d` × u32), box length (f64), component count
//! (u32), then each component's `n^d` f64 values in row-major order with
//! axis 0 slowest.

use std::fs;
use std::path::Path;

use burgers_core::fields::{Grid, ScalarField, VectorField};

use crate::error::LabError;

pub const MAGIC: &[u8; 4] = b"NPBF";
pub const VERSION: u32 = 1;

/// Decoded contents of a field file.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldData {
    pub grid: Grid,
    pub components: Vec<ScalarField>,
}

impl FieldData {
    pub fn into_vector(self) -> Result<VectorField, LabError> {
        Ok(VectorField::new(self.components)?)
    }

    pub fn into_scalar(mut self) -> Result<ScalarField, LabError> {
        if self.components.len() != 1 {
            return Err(LabError::Parameter(format!(
                "expected a scalar field, found {} components",
                self.components.len()
            )));
        }
        Ok(self.components.remove(0))
    }
}

pub fn encode(grid: &Grid, components: &[ScalarField]) -> Vec<u8> {
    let d = grid.dim();
    let mut out = Vec::with_capacity(24 + 4 * d + components.len() * grid.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    for _ in 0..d {
        out.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    }
    out.extend_from_slice(&grid.box_length().to_le_bytes());
    out.extend_from_slice(&(components.len() as u32).to_le_bytes());
    for c in components {
        for v in c.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn encode_vector(f: &VectorField) -> Vec<u8> {
    encode(f.grid(), f.components())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], LabError> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(LabError::Format(format!(
                "truncated field file: need {end} bytes, have {}",
                self.bytes.len()
            )));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, LabError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64, LabError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<FieldData, LabError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(LabError::Format("bad magic bytes; not a field file".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(LabError::Format(format!("unsupported field file version {version}")));
    }
    let d = r.u32()? as usize;
    if !(1..=3).contains(&d) {
        return Err(LabError::Format(format!("unsupported dimension {d}")));
    }
    let ns = (0..d).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
    if ns.iter().any(|&n| n != ns[0]) {
        return Err(LabError::Format(format!("anisotropic grids are not supported: {ns:?}")));
    }
    let box_length = r.f64()?;
    let grid = Grid::new(d, ns[0] as usize, box_length).map_err(|e| LabError::Format(e.to_string()))?;
    let count = r.u32()? as usize;
    let expected = count
        .checked_mul(grid.len() * 8)
        .ok_or_else(|| LabError::Format("payload size overflows".into()))?;
    if bytes.len() - r.pos != expected {
        return Err(LabError::Format(format!(
            "payload has {} bytes, header implies {expected}",
            bytes.len() - r.pos
        )));
    }
    let components = (0..count)
        .map(|_| {
            let vals = (0..grid.len()).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
            ScalarField::new(grid, vals).map_err(|e| LabError::Format(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FieldData { grid, components })
}

pub fn write_vector(path: &Path, f: &VectorField) -> Result<(), LabError> {
    fs::write(path, encode_vector(f)).map_err(|e| LabError::io(path, e))
}

pub fn write_scalar(path: &Path, f: &ScalarField) -> Result<(), LabError> {
    fs::write(path, encode(f.grid(), std::slice::from_ref(f))).map_err(|e| LabError::io(path, e))
}

pub fn read(path: &Path) -> Result<FieldData, LabError> {
    let bytes = fs::read(path).map_err(|e| LabError::io(path, e))?;
    decode(&bytes)
}
