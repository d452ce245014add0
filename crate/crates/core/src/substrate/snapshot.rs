//! `NFW1` weight snapshots.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic "NFW1" | version u32 = 1 | pre_rows u32 | pre_cols u32
//! | post_rows u32 | post_cols u32 | features u32 | count u64
//! | count x (post_id u32, pre_id u32, weight f64)
//! ```
//!
//! The header is 36 bytes and each record 16 bytes. The lateral flag is not
//! stored; use [`WeightField::into_lateral`] after reading a lateral field.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::sheet::Sheet;
use super::weights::{Synapse, WeightField};
use crate::error::{invalid, NetfragError, Result};

pub const MAGIC: &[u8; 4] = b"NFW1";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 36;
pub const RECORD_LEN: usize = 16;

pub fn encode_snapshot(field: &WeightField) -> Result<Vec<u8>> {
    let (pre, post) = (field.pre(), field.post());
    if pre.features() != post.features() {
        return invalid("snapshot needs equal feature counts on both sheets");
    }
    let count = field.nonzero_count();
    let mut out = Vec::with_capacity(HEADER_LEN + RECORD_LEN * count);
    out.extend_from_slice(MAGIC);
    for v in [
        VERSION,
        pre.rows() as u32,
        pre.cols() as u32,
        post.rows() as u32,
        post.cols() as u32,
        pre.features() as u32,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(count as u64).to_le_bytes());
    for (post_id, pre_id, w) in field.triples() {
        if !w.is_finite() {
            return Err(NetfragError::Format(format!(
                "non-finite weight at ({post_id}, {pre_id})"
            )));
        }
        out.extend_from_slice(&(post_id as u32).to_le_bytes());
        out.extend_from_slice(&(pre_id as u32).to_le_bytes());
        out.extend_from_slice(&w.to_le_bytes());
    }
    Ok(out)
}

fn format_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(NetfragError::Format(msg.into()))
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<WeightField> {
    if bytes.len() < HEADER_LEN {
        return format_err(format!("truncated header: {} bytes", bytes.len()));
    }
    if &bytes[0..4] != MAGIC {
        return format_err("bad magic, expected NFW1");
    }
    let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return format_err(format!("unsupported version {version}"));
    }
    let dims: Vec<usize> = (0..5).map(|i| u32_at(8 + 4 * i) as usize).collect();
    let to_sheet = |r: usize, c: usize| {
        Sheet::new(r, c, dims[4]).map_err(|e| NetfragError::Format(format!("bad sheet shape: {e}")))
    };
    let pre = to_sheet(dims[0], dims[1])?;
    let post = to_sheet(dims[2], dims[3])?;
    let count = u64::from_le_bytes(bytes[28..36].try_into().unwrap());
    let body = &bytes[HEADER_LEN..];
    let expected = (count as u128) * RECORD_LEN as u128;
    if (body.len() as u128) < expected {
        return format_err(format!(
            "truncated body: {count} records need {expected} bytes, found {}",
            body.len()
        ));
    }
    if body.len() as u128 != expected {
        return format_err("trailing bytes after last record");
    }

    let mut rows: Vec<Vec<Synapse>> = vec![Vec::new(); post.unit_count()];
    for rec in body.chunks_exact(RECORD_LEN) {
        let post_id = u32::from_le_bytes(rec[0..4].try_into().unwrap()) as usize;
        let pre_id = u32::from_le_bytes(rec[4..8].try_into().unwrap());
        let weight = f64::from_le_bytes(rec[8..16].try_into().unwrap());
        if post_id >= post.unit_count() || pre_id as usize >= pre.unit_count() {
            return format_err(format!("record ({post_id}, {pre_id}) out of range"));
        }
        if !weight.is_finite() {
            return format_err(format!("non-finite weight at ({post_id}, {pre_id})"));
        }
        if weight < 0.0 {
            return format_err(format!("negative weight at ({post_id}, {pre_id})"));
        }
        rows[post_id].push(Synapse {
            pre: pre_id,
            weight,
        });
    }
    for (post_id, row) in rows.iter_mut().enumerate() {
        row.sort_by_key(|s| s.pre);
        if row.windows(2).any(|w| w[0].pre == w[1].pre) {
            return format_err(format!("duplicate record for post unit {post_id}"));
        }
    }
    Ok(WeightField::from_rows(pre, post, false, rows))
}

pub fn write_snapshot(field: &WeightField, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_snapshot(field)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<WeightField> {
    decode_snapshot(&fs::read(path)?)
}
