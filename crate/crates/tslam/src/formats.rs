//! Binary artifacts, all little-endian.
//!
//! `TVOX`: magic, u32 version, u32 N, 6 × f64 box (min then max), packed
//! occupancy bits (x fastest, LSB first).
//!
//! `TPOL` / `TREC`: magic, u32 version, length-prefixed config digest,
//! length-prefixed UTF-8 `key = value` metadata lines, u32 tensor count,
//! then per tensor: u32 name length, name, u32 rank, u32 dims, f32 values.
//! Parameters are trained in f64 and rounded on save.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use tslam_core::geometry::VoxelGrid;
use tslam_core::math::{Aabb, Vec3};
use tslam_core::nn::{ParamSet, Tensor};

use crate::error::{Result, WorkbenchError};

const VERSION: u32 = 1;
pub const POLICY_MAGIC: &[u8; 4] = b"TPOL";
pub const RECON_MAGIC: &[u8; 4] = b"TREC";
const VOX_MAGIC: &[u8; 4] = b"TVOX";

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(WorkbenchError::format(self.path, "unexpected end of file"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn string(&mut self, what: &str) -> Result<&'a str> {
        let n = self.u32()? as usize;
        let path = self.path;
        std::str::from_utf8(self.take(n)?).map_err(|_| WorkbenchError::format(path, format!("{what} is not UTF-8")))
    }

    fn magic(&mut self, want: &[u8; 4]) -> Result<()> {
        let m = self.take(4)?;
        if m != want {
            return Err(WorkbenchError::format(
                self.path,
                format!("expected {} file", String::from_utf8_lossy(want)),
            ));
        }
        let v = self.u32()?;
        if v != VERSION {
            return Err(WorkbenchError::format(self.path, format!("unsupported version {v}")));
        }
        Ok(())
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            WorkbenchError::missing(path, "file not found")
        } else {
            WorkbenchError::io(path, e)
        }
    })
}

pub fn encode_grid(grid: &VoxelGrid) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(VOX_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.resolution() as u32).to_le_bytes());
    let b = grid.bbox();
    for v in [b.min.x, b.min.y, b.min.z, b.max.x, b.max.y, b.max.z] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&grid.to_packed_bytes());
    out
}

pub fn decode_grid(bytes: &[u8], path: &Path) -> Result<VoxelGrid> {
    let mut r = Reader { buf: bytes, pos: 0, path };
    r.magic(VOX_MAGIC)?;
    let n = r.u32()? as usize;
    let mut c = [0.0; 6];
    for v in &mut c {
        *v = r.f64()?;
    }
    let bbox = Aabb::new(Vec3::new(c[0], c[1], c[2]), Vec3::new(c[3], c[4], c[5]));
    let rest = &bytes[r.pos..];
    Ok(VoxelGrid::from_packed_bytes(n, bbox, rest)?)
}

pub fn write_grid(path: &Path, grid: &VoxelGrid) -> Result<()> {
    fs::write(path, encode_grid(grid)).map_err(|e| WorkbenchError::io(path, e))
}

pub fn read_grid(path: &Path) -> Result<VoxelGrid> {
    decode_grid(&read_file(path)?, path)
}

/// A parameter set with string metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub digest: String,
    pub meta: BTreeMap<String, String>,
    pub params: ParamSet,
}

impl Checkpoint {
    pub fn meta(&self, key: &str, path: &Path) -> Result<&str> {
        self.meta
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| WorkbenchError::format(path, format!("checkpoint lacks `{key}`")))
    }
}

pub fn encode_checkpoint(magic: &[u8; 4], ck: &Checkpoint) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(magic);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(ck.digest.len() as u32).to_le_bytes());
    out.extend_from_slice(ck.digest.as_bytes());
    let mut meta = String::new();
    for (k, v) in &ck.meta {
        meta.push_str(k);
        meta.push_str(" = ");
        meta.push_str(v);
        meta.push('\n');
    }
    out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    out.extend_from_slice(meta.as_bytes());
    out.extend_from_slice(&(ck.params.len() as u32).to_le_bytes());
    for (name, t) in ck.params.names().iter().zip(ck.params.tensors()) {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
        for &d in &t.shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in &t.data {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_checkpoint(magic: &[u8; 4], bytes: &[u8], path: &Path) -> Result<Checkpoint> {
    let mut r = Reader { buf: bytes, pos: 0, path };
    r.magic(magic)?;
    let digest = r.string("digest")?.to_string();
    let text = r.string("metadata")?;
    let mut meta = BTreeMap::new();
    for line in text.lines().filter(|l| !l.is_empty()) {
        let (k, v) = line
            .split_once(" = ")
            .ok_or_else(|| WorkbenchError::format(path, format!("bad metadata line `{line}`")))?;
        meta.insert(k.to_string(), v.to_string());
    }
    let count = r.u32()?;
    let mut params = ParamSet::new();
    for _ in 0..count {
        let name = r.string("tensor name")?.to_string();
        let rank = r.u32()? as usize;
        if rank > 8 {
            return Err(WorkbenchError::format(path, format!("tensor `{name}` has rank {rank}")));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u32()? as usize);
        }
        let n: usize = shape.iter().product();
        if n.saturating_mul(4) > bytes.len() - r.pos {
            return Err(WorkbenchError::format(path, format!("tensor `{name}` is truncated")));
        }
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(r.f32()? as f64);
        }
        params.add(&name, Tensor::new(&shape, data)?);
    }
    if r.pos != bytes.len() {
        return Err(WorkbenchError::format(path, "trailing bytes after checkpoint"));
    }
    Ok(Checkpoint { digest, meta, params })
}

pub fn write_checkpoint(path: &Path, magic: &[u8; 4], ck: &Checkpoint) -> Result<()> {
    fs::write(path, encode_checkpoint(magic, ck)).map_err(|e| WorkbenchError::io(path, e))
}

pub fn read_checkpoint(path: &Path, magic: &[u8; 4]) -> Result<Checkpoint> {
    decode_checkpoint(magic, &read_file(path)?, path)
}
