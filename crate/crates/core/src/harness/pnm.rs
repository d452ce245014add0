//! Portable graymap (binary `P5`, 8 bit) and bitmap (binary `P4`) dumps.

use std::fs;
use std::path::Path;

use crate::error::{NetfragError, Result};
use crate::substrate::Image;

/// Encodes `image` as an 8-bit `P5` graymap, mapping `[0, 1]` to `0..=255`.
pub fn encode_pgm(image: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.cols(), image.rows()).into_bytes();
    out.extend(image.pixels().iter().map(|p| (p.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

/// Encodes a row-major mask as a `P4` bitmap, foreground black.
pub fn encode_pbm(mask: &[bool], rows: usize, cols: usize) -> Result<Vec<u8>> {
    if mask.len() != rows * cols {
        return Err(NetfragError::InvalidArgument(format!(
            "mask has {} pixels, expected {rows}x{cols}",
            mask.len()
        )));
    }
    let mut out = format!("P4\n{cols} {rows}\n").into_bytes();
    for row in mask.chunks(cols) {
        for byte in row.chunks(8) {
            out.push(byte.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << (7 - i))));
        }
    }
    Ok(out)
}

pub fn write_pgm(image: &Image, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_pgm(image))?;
    Ok(())
}

pub fn write_pbm(mask: &[bool], rows: usize, cols: usize, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_pbm(mask, rows, cols)?)?;
    Ok(())
}

fn header_tokens(bytes: &[u8], count: usize) -> Result<(Vec<String>, usize)> {
    let mut tokens = Vec::new();
    let mut i = 0;
    while tokens.len() < count {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(NetfragError::Format("truncated graymap header".into()));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    Ok((tokens, i + 1))
}

/// Decodes a `P2` or `P5` graymap into an image scaled to `[0, 1]`.
pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    let (tokens, body) = header_tokens(bytes, 4)?;
    let number = |s: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| NetfragError::Format(format!("bad graymap header field {s:?}")))
    };
    let (cols, rows, max) = (number(&tokens[1])?, number(&tokens[2])?, number(&tokens[3])?);
    if max == 0 || max > 255 {
        return Err(NetfragError::Format(format!("unsupported graymap maxval {max}")));
    }
    let raw: Vec<usize> = match tokens[0].as_str() {
        "P5" => bytes.get(body..body + rows * cols).map(|b| b.iter().map(|&v| v as usize).collect()).ok_or_else(
            || NetfragError::Format("truncated graymap data".into()),
        )?,
        "P2" => String::from_utf8_lossy(bytes.get(body..).unwrap_or_default())
            .split_ascii_whitespace()
            .map(number)
            .collect::<Result<_>>()?,
        other => return Err(NetfragError::Format(format!("unsupported graymap magic {other:?}"))),
    };
    if raw.len() != rows * cols || raw.iter().any(|&v| v > max) {
        return Err(NetfragError::Format("graymap data does not match its header".into()));
    }
    Image::from_pixels(rows, cols, raw.into_iter().map(|v| v as f64 / max as f64).collect())
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Image> {
    decode_pgm(&fs::read(path)?)
}
