//! The `.ramk` block-mask format.
//!
//! ```text
//! "RAMK"            4 bytes
//! version           u16
//! frames            u32
//! tokens_per_frame  u32
//! block_size        u32
//! kind              u8
//! sink              u8
//! grid_rows (R)     u32
//! row_ptr           (R + 1) x u64
//! col_idx           row_ptr[R] x u32
//! ```
//!
//! All integers little-endian. Window parameters are not part of the format;
//! only the pattern kind and sink flag travel with the layout.

use super::BlockLayout;
use crate::error::{Error, Result};
use crate::grid::GridShape;
use crate::pattern::PatternKind;

pub const MAGIC: [u8; 4] = *b"RAMK";
pub const FORMAT_VERSION: u16 = 1;

const HEADER_LEN: usize = 4 + 2 + 4 + 4 + 4 + 1 + 1 + 4;

pub fn serialize(layout: &BlockLayout) -> Vec<u8> {
    let rows = layout.grid_rows();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * (rows + 1) + 4 * layout.col_idx().len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(layout.shape().frames() as u32).to_le_bytes());
    out.extend_from_slice(&(layout.shape().tokens_per_frame() as u32).to_le_bytes());
    out.extend_from_slice(&(layout.block_size() as u32).to_le_bytes());
    out.push(layout.kind().code());
    out.push(u8::from(layout.sink()));
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    for &p in layout.row_ptr() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    for &c in layout.col_idx() {
        out.extend_from_slice(&c.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, field: &'static str, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| {
                Error::format(
                    field,
                    format!(
                        "truncated: need {len} bytes at offset {}, {} available",
                        self.pos,
                        self.buf.len().saturating_sub(self.pos)
                    ),
                )
            })?;
        let bytes = &self.buf[self.pos..end];
        self.pos = end;
        Ok(bytes)
    }

    fn u8(&mut self, field: &'static str) -> Result<u8> {
        Ok(self.take(field, 1)?[0])
    }

    fn u16(&mut self, field: &'static str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(field, 2)?.try_into().unwrap()))
    }

    fn u32(&mut self, field: &'static str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(field, 4)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

pub fn deserialize(bytes: &[u8]) -> Result<BlockLayout> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let magic = r.take("magic", 4)?;
    if magic != MAGIC {
        return Err(Error::format("magic", format!("expected \"RAMK\", found {magic:02x?}")));
    }
    let version = r.u16("version")?;
    if version != FORMAT_VERSION {
        return Err(Error::format(
            "version",
            format!("unsupported version {version} (expected {FORMAT_VERSION})"),
        ));
    }
    let frames = r.u32("frames")? as usize;
    let tokens = r.u32("tokens_per_frame")? as usize;
    let block_size = r.u32("block_size")? as usize;
    let kind_code = r.u8("kind")?;
    let sink_byte = r.u8("sink")?;
    let rows = r.u32("grid_rows")? as usize;

    let shape = GridShape::new(frames, tokens).map_err(|e| Error::format("frames", e.to_string()))?;
    if block_size == 0 {
        return Err(Error::format("block_size", "must be at least 1"));
    }
    let kind = PatternKind::from_code(kind_code)
        .ok_or_else(|| Error::format("kind", format!("unknown pattern code {kind_code}")))?;
    let sink = match sink_byte {
        0 => false,
        1 => true,
        other => return Err(Error::format("sink", format!("expected 0 or 1, found {other}"))),
    };
    let expected_rows = shape.total_tokens().div_ceil(block_size);
    if rows != expected_rows {
        return Err(Error::format(
            "grid_rows",
            format!("header says {rows}, grid {shape} at block {block_size} needs {expected_rows}"),
        ));
    }

    // size checks before allocating anything proportional to the header
    let ptr_bytes = (rows + 1)
        .checked_mul(8)
        .ok_or_else(|| Error::format("row_ptr", "length overflow"))?;
    let raw_ptr = r.take("row_ptr", ptr_bytes)?;
    let row_ptr: Vec<u64> = raw_ptr
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let nnz = row_ptr[rows];
    if nnz.checked_mul(4) != Some(r.remaining() as u64) {
        let have = r.remaining();
        return Err(Error::format(
            "col_idx",
            format!("row_ptr announces {nnz} entries, {have} bytes remain"),
        ));
    }
    let col_idx: Vec<u32> = r
        .take("col_idx", r.remaining())?
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    BlockLayout::from_parts(shape, block_size, kind, sink, row_ptr, col_idx)
}
