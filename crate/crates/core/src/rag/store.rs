//! Index files.
//!
//! ```text
//! magic     7 bytes  "AMRIDX1"
//! version   u16      1
//! tag       u32 length + UTF-8 embedder tag
//! dim       u32
//! count     u64
//! checksum  u64      FNV-1a 64 over every record byte that follows
//! records   count × { u32 record length, u64 id, label, source_title, text,
//!                     dim × f64 }
//! ```
//!
//! Strings inside records are `u32` length + UTF-8. All numbers are
//! little-endian.

use std::hash::Hasher;
use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use fnv::FnvHasher;

use super::index::{DocChunk, VectorIndex};
use super::RagError;

pub const INDEX_MAGIC: &[u8; 7] = b"AMRIDX1";
pub const INDEX_VERSION: u16 = 1;

fn put_str(w: &mut Vec<u8>, s: &str) {
    w.write_u32::<LE>(s.len() as u32).unwrap();
    w.extend_from_slice(s.as_bytes());
}

fn checksum(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

pub fn index_to_bytes(index: &VectorIndex) -> Vec<u8> {
    let mut records = Vec::new();
    let mut rec = Vec::new();
    for e in index.entries() {
        rec.clear();
        rec.write_u64::<LE>(e.chunk.id).unwrap();
        put_str(&mut rec, &e.chunk.label);
        put_str(&mut rec, &e.chunk.source_title);
        put_str(&mut rec, &e.chunk.text);
        for x in &e.vector {
            rec.write_f64::<LE>(*x).unwrap();
        }
        records.write_u32::<LE>(rec.len() as u32).unwrap();
        records.extend_from_slice(&rec);
    }
    let mut out = Vec::with_capacity(records.len() + 64);
    out.extend_from_slice(INDEX_MAGIC);
    out.write_u16::<LE>(INDEX_VERSION).unwrap();
    put_str(&mut out, index.embedder_tag());
    out.write_u32::<LE>(index.dim() as u32).unwrap();
    out.write_u64::<LE>(index.len() as u64).unwrap();
    out.write_u64::<LE>(checksum(&records)).unwrap();
    out.extend_from_slice(&records);
    out
}

fn corrupt(msg: impl Into<String>) -> RagError {
    RagError::CorruptIndex(msg.into())
}

fn read_str(c: &mut Cursor<&[u8]>) -> Result<String, RagError> {
    let n = c.read_u32::<LE>().map_err(|_| corrupt("truncated string length"))? as usize;
    let remaining = c.get_ref().len() - c.position() as usize;
    if n > remaining {
        return Err(corrupt("truncated string"));
    }
    let mut buf = vec![0; n];
    c.read_exact(&mut buf).map_err(|_| corrupt("truncated string"))?;
    String::from_utf8(buf).map_err(|_| corrupt("string is not UTF-8"))
}

pub fn index_from_bytes(bytes: &[u8]) -> Result<VectorIndex, RagError> {
    let mut c = Cursor::new(bytes);
    let mut magic = [0u8; 7];
    c.read_exact(&mut magic).map_err(|_| corrupt("truncated header"))?;
    if &magic != INDEX_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = c.read_u16::<LE>().map_err(|_| corrupt("truncated header"))?;
    if version != INDEX_VERSION {
        return Err(corrupt(format!("unsupported version {version}")));
    }
    let tag = read_str(&mut c)?;
    let dim = c.read_u32::<LE>().map_err(|_| corrupt("truncated header"))? as usize;
    let count = c.read_u64::<LE>().map_err(|_| corrupt("truncated header"))?;
    let expected = c.read_u64::<LE>().map_err(|_| corrupt("truncated header"))?;
    let body = &bytes[c.position() as usize..];
    if checksum(body) != expected {
        return Err(corrupt("checksum mismatch"));
    }

    let mut index = VectorIndex::new(tag, dim);
    let mut c = Cursor::new(body);
    for i in 0..count {
        let len = c.read_u32::<LE>().map_err(|_| corrupt(format!("truncated record {i}")))? as usize;
        let start = c.position() as usize;
        if len > body.len() - start {
            return Err(corrupt(format!("truncated record {i}")));
        }
        let mut r = Cursor::new(&body[start..start + len]);
        let id = r.read_u64::<LE>().map_err(|_| corrupt("truncated id"))?;
        let label = read_str(&mut r)?;
        let source_title = read_str(&mut r)?;
        let text = read_str(&mut r)?;
        if len - r.position() as usize != dim * 8 {
            return Err(corrupt(format!("record {i} vector length")));
        }
        let vector = (0..dim)
            .map(|_| r.read_f64::<LE>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| corrupt("truncated vector"))?;
        index
            .insert(
                DocChunk {
                    id,
                    label,
                    source_title,
                    text,
                },
                vector,
            )
            .map_err(|e| corrupt(format!("record {i}: {e}")))?;
        c.set_position((start + len) as u64);
    }
    if c.position() as usize != body.len() {
        return Err(corrupt("trailing bytes"));
    }
    Ok(index)
}

pub fn save_index(index: &VectorIndex, path: &Path) -> Result<(), RagError> {
    std::fs::write(path, index_to_bytes(index))?;
    Ok(())
}

pub fn load_index(path: &Path) -> Result<VectorIndex, RagError> {
    index_from_bytes(&std::fs::read(path)?)
}
