//! Binary persistence for signed distance grids.
//!
//! Fixed little-endian layout: magic, format version, dims, origin, spacing,
//! expanded bounds max, source mesh hash, node count, then node values and
//! the near-hull mask. Round trips are bit-identical.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::Point3;

use crate::error::{Error, Result};
use super::SdfGrid;

const MAGIC: &[u8; 4] = b"FSDG";
const FORMAT_VERSION: u32 = 1;

pub fn save_grid(grid: &SdfGrid, path: &Path) -> Result<()> {
    let n = grid.values.len();
    let mut buf =
        Vec::with_capacity(4 + 4 + 12 + 24 + 8 + 24 + 32 + 8 + n * 8 + n);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    for d in grid.dims {
        buf.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for i in 0..3 {
        buf.extend_from_slice(&grid.origin[i].to_le_bytes());
    }
    buf.extend_from_slice(&grid.spacing.to_le_bytes());
    for i in 0..3 {
        buf.extend_from_slice(&grid.bounds_max[i].to_le_bytes());
    }
    buf.extend_from_slice(&grid.mesh_hash);
    buf.extend_from_slice(&(n as u64).to_le_bytes());
    for v in &grid.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend(grid.near_hull.iter().map(|&m| m as u8));
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

pub fn load_grid(path: &Path) -> Result<SdfGrid> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut r = Reader { bytes: &bytes, pos: 0 };
    let magic = r.take(4)?;
    if magic != MAGIC {
        return Err(Error::Format("bad grid file magic".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::SchemaVersion {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let dims = [r.u32()? as usize, r.u32()? as usize, r.u32()? as usize];
    let origin = Point3::new(r.f64()?, r.f64()?, r.f64()?);
    let spacing = r.f64()?;
    let bounds_max = Point3::new(r.f64()?, r.f64()?, r.f64()?);
    let mut mesh_hash = [0u8; 32];
    mesh_hash.copy_from_slice(r.take(32)?);
    let n = r.u64()? as usize;
    if n != dims[0] * dims[1] * dims[2] {
        return Err(Error::Format(format!(
            "node count {} does not match dims {:?}",
            n, dims
        )));
    }
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        values.push(r.f64()?);
    }
    let mask = r.take(n)?;
    let near_hull = mask.iter().map(|&b| b != 0).collect();
    if r.pos != bytes.len() {
        return Err(Error::Format("trailing bytes in grid file".into()));
    }
    Ok(SdfGrid {
        origin,
        bounds_max,
        spacing,
        dims,
        values,
        near_hull,
        mesh_hash,
    })
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format("grid file truncated".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
