//! Binary persistence for trained weights.
//!
//! Fixed little-endian layout: magic, format version, variant code, layer
//! dimensions, training seed, then every tensor in a fixed order, followed
//! by a SHA-256 digest of all preceding bytes. Round trips are
//! bit-identical and corruption anywhere is caught by the digest.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::data::Variant;
use crate::model::Mlp;

const MAGIC: &[u8; 4] = b"FMLW";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct SavedModel {
    pub model: Mlp,
    pub variant: Variant,
    pub seed: u64,
}

pub fn save_model(model: &Mlp, variant: Variant, seed: u64, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.push(variant.code());
    buf.extend_from_slice(&(model.surface_dim as u32).to_le_bytes());
    buf.extend_from_slice(&(model.global_dim as u32).to_le_bytes());
    buf.extend_from_slice(&(model.hidden as u32).to_le_bytes());
    buf.extend_from_slice(&seed.to_le_bytes());
    let tensors: [&[f64]; 6] = [
        model.w1.as_slice().expect("contiguous"),
        model.b1.as_slice().expect("contiguous"),
        model.w2.as_slice().expect("contiguous"),
        model.b2.as_slice().expect("contiguous"),
        model.w3.as_slice().expect("contiguous"),
        model.b3.as_slice().expect("contiguous"),
    ];
    for t in tensors {
        for v in t {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    fs::write(path, buf)?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format("weight file truncated".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64_vec(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n * 8)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn load_model(path: &Path) -> Result<SavedModel> {
    let bytes = fs::read(path)?;
    if bytes.len() < 32 {
        return Err(Error::Format("weight file truncated".into()));
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 32);
    let digest = Sha256::digest(body);
    if digest.as_slice() != trailer {
        return Err(Error::Checksum(format!(
            "weight file {} failed integrity check",
            path.display()
        )));
    }

    let mut r = Reader { bytes: body, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Format("bad weight file magic".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::SchemaVersion {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let variant = Variant::from_code(r.u8()?)?;
    let surface_dim = r.u32()? as usize;
    let global_dim = r.u32()? as usize;
    let hidden = r.u32()? as usize;
    if surface_dim != variant.surface_dim() || global_dim != variant.global_dim() {
        return Err(Error::Format(format!(
            "stored dims {surface_dim}+{global_dim} do not match variant {variant:?}"
        )));
    }
    let seed = r.u64()?;
    let d = surface_dim + global_dim;
    let model = Mlp {
        surface_dim,
        global_dim,
        hidden,
        w1: Array2::from_shape_vec((d, hidden), r.f64_vec(d * hidden)?).unwrap(),
        b1: Array1::from_vec(r.f64_vec(hidden)?),
        w2: Array2::from_shape_vec((hidden, hidden), r.f64_vec(hidden * hidden)?).unwrap(),
        b2: Array1::from_vec(r.f64_vec(hidden)?),
        w3: Array2::from_shape_vec((hidden, super::OUTPUT_DIM), r.f64_vec(hidden * super::OUTPUT_DIM)?).unwrap(),
        b3: Array1::from_vec(r.f64_vec(super::OUTPUT_DIM)?),
    };
    if r.pos != body.len() {
        return Err(Error::Format("trailing bytes in weight file".into()));
    }
    Ok(SavedModel { model, variant, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.fmlw");
        let m = Mlp::init(15, 12, 32, 99);
        save_model(&m, Variant::Full, 99, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(loaded.model, m);
        assert_eq!(loaded.variant, Variant::Full);
        assert_eq!(loaded.seed, 99);
    }

    #[test]
    fn corruption_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.fmlw");
        let m = Mlp::init(0, 12, 8, 1);
        save_model(&m, Variant::GlobalOnly, 1, &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x40;
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_model(&path), Err(Error::Checksum(_))));
    }

    #[test]
    fn version_and_magic_are_checked() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.fmlw");
        let m = Mlp::init(15, 9, 8, 2);
        save_model(&m, Variant::StrippedDims, 2, &path).unwrap();
        let good = fs::read(&path).unwrap();

        let mut bad = good.clone();
        bad[0] = b'X';
        let body_len = bad.len() - 32;
        let digest = Sha256::digest(&bad[..body_len]);
        bad[body_len..].copy_from_slice(&digest);
        fs::write(&path, &bad).unwrap();
        assert!(matches!(load_model(&path), Err(Error::Format(_))));

        let mut bad = good.clone();
        bad[4..8].copy_from_slice(&9u32.to_le_bytes());
        let digest = Sha256::digest(&bad[..body_len]);
        bad[body_len..].copy_from_slice(&digest);
        fs::write(&path, &bad).unwrap();
        assert!(matches!(
            load_model(&path),
            Err(Error::SchemaVersion { found: 9, .. })
        ));
    }

    #[test]
    fn truncation_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.fmlw");
        let m = Mlp::init(15, 12, 8, 3);
        save_model(&m, Variant::Full, 3, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..20]).unwrap();
        match load_model(&path) {
            Err(Error::Format(_)) | Err(Error::Checksum(_)) => {}
            other => panic!("expected failure on truncated file, got {other:?}"),
        }
    }
}
