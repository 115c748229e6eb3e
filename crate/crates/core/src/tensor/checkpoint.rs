//! Flat binary parameter container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "MIRT" | version: u32 | entry*
//! entry = name_len: u16 | name: utf-8 | rank: u8 | extents: u32 * rank | values: f32 * prod(extents)
//! ```
//!
//! Entries run until end of file.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"MIRT";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointEntry {
    pub name: String,
    pub dims: Vec<usize>,
    pub values: Vec<f32>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Checkpoint {
    pub entries: Vec<CheckpointEntry>,
}

impl Checkpoint {
    pub fn get(&self, name: &str) -> Option<&CheckpointEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn push(&mut self, name: impl Into<String>, dims: Vec<usize>, values: Vec<f32>) {
        self.entries.push(CheckpointEntry { name: name.into(), dims, values });
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        write_checkpoint(&mut out, self)?;
        Ok(out)
    }
}

pub fn write_checkpoint<W: Write>(mut w: W, ckpt: &Checkpoint) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for e in &ckpt.entries {
        let numel: usize = e.dims.iter().product();
        let name_len = u16::try_from(e.name.len())
            .map_err(|_| Error::Contract(format!("parameter name too long: {}", e.name)))?;
        let rank = u8::try_from(e.dims.len())
            .map_err(|_| Error::Contract(format!("rank too large for {}", e.name)))?;
        if numel != e.values.len() {
            return Err(Error::Contract(format!(
                "{}: {} values for extents {:?}",
                e.name,
                e.values.len(),
                e.dims
            )));
        }
        w.write_all(&name_len.to_le_bytes())?;
        w.write_all(e.name.as_bytes())?;
        w.write_all(&[rank])?;
        for &d in &e.dims {
            let d = u32::try_from(d).map_err(|_| Error::Contract(format!("extent too large in {}", e.name)))?;
            w.write_all(&d.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(4 * numel);
        for v in &e.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Parse { offset: self.pos, message: format!("truncated {what}") });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Checkpoint> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut cur = Cursor { bytes: &bytes, pos: 0 };
    if cur.take(4, "magic")? != MAGIC {
        return Err(Error::Parse { offset: 0, message: "bad magic, expected \"MIRT\"".into() });
    }
    let version = cur.u32("version")?;
    if version != VERSION {
        return Err(Error::Parse { offset: 4, message: format!("unsupported version {version}") });
    }
    let mut ckpt = Checkpoint::default();
    while cur.pos < bytes.len() {
        let start = cur.pos;
        let len = cur.u16("name length")? as usize;
        let name = std::str::from_utf8(cur.take(len, "name")?)
            .map_err(|_| Error::Parse { offset: start + 2, message: "name is not utf-8".into() })?
            .to_string();
        let rank = cur.take(1, "rank")?[0] as usize;
        let dims = (0..rank).map(|_| cur.u32("extent").map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let numel: usize = dims.iter().product();
        let raw = cur.take(4 * numel, "values")?;
        let values = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        ckpt.entries.push(CheckpointEntry { name, dims, values });
    }
    Ok(ckpt)
}
