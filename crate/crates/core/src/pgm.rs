//! PGM import/export.
//!
//! Maps are written row-major with the top image row holding the cells at
//! maximum world `y`. Ground-truth worlds use the convention that intensity
//! below 128 marks an occupied cell. Only maxval 255 is supported.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::PixelGrid;

/// Serialize as binary PGM (P5).
pub fn write_p5(px: &PixelGrid) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", px.width, px.height).into_bytes();
    for row in (0..px.height).rev() {
        out.extend_from_slice(&px.intensity[row * px.width..(row + 1) * px.width]);
    }
    out
}

/// Serialize as plain-text PGM (P2).
pub fn write_p2(px: &PixelGrid) -> Vec<u8> {
    let mut out = format!("P2\n{} {}\n255\n", px.width, px.height);
    for row in (0..px.height).rev() {
        let line: Vec<String> = px.intensity[row * px.width..(row + 1) * px.width]
            .iter()
            .map(|v| v.to_string())
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out.into_bytes()
}

pub fn save(px: &PixelGrid, path: &Path, binary: bool) -> Result<()> {
    let bytes = if binary { write_p5(px) } else { write_p2(px) };
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

/// Parse a P2 or P5 PGM into a [`PixelGrid`], undoing the row flip applied on
/// write. Comments (`#` to end of line) are accepted anywhere in the header.
pub fn parse(bytes: &[u8]) -> Result<PixelGrid> {
    let mut cursor = 0usize;
    let magic = next_token(bytes, &mut cursor).ok_or_else(|| bad("missing magic number"))?;
    let binary = match magic.as_str() {
        "P5" => true,
        "P2" => false,
        other => return Err(bad(format!("unsupported magic {other:?}"))),
    };
    let width: usize = parse_header_int(bytes, &mut cursor, "width")?;
    let height: usize = parse_header_int(bytes, &mut cursor, "height")?;
    let maxval: usize = parse_header_int(bytes, &mut cursor, "maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions { width, height });
    }
    if maxval != 255 {
        return Err(bad(format!("unsupported maxval {maxval}, expected 255")));
    }
    let n = width * height;
    let mut flat = Vec::with_capacity(n);
    if binary {
        // Exactly one whitespace byte separates the header from the raster.
        let data = &bytes[cursor + 1..];
        if data.len() < n {
            return Err(bad("raster shorter than width * height"));
        }
        flat.extend_from_slice(&data[..n]);
    } else {
        for _ in 0..n {
            let tok = next_token(bytes, &mut cursor).ok_or_else(|| bad("raster truncated"))?;
            let v: usize = tok.parse().map_err(|_| bad(format!("bad sample {tok:?}")))?;
            if v > maxval {
                return Err(bad(format!("sample {v} exceeds maxval")));
            }
            flat.push(v as u8);
        }
    }
    // Undo the top-row-is-max-y flip.
    let mut intensity = vec![0u8; n];
    for row in 0..height {
        let src = &flat[row * width..(row + 1) * width];
        intensity[(height - 1 - row) * width..(height - row) * width].copy_from_slice(src);
    }
    PixelGrid::new(width, height, intensity)
}

pub fn load(path: &Path) -> Result<PixelGrid> {
    parse(&fs::read(path)?)
}

fn bad(msg: impl Into<String>) -> Error {
    Error::PgmFormat(msg.into())
}

fn parse_header_int(bytes: &[u8], cursor: &mut usize, what: &str) -> Result<usize> {
    let tok = next_token(bytes, cursor).ok_or_else(|| bad(format!("missing {what}")))?;
    tok.parse().map_err(|_| bad(format!("non-numeric {what}: {tok:?}")))
}

/// Next whitespace-delimited token, skipping `#` comments. Leaves the cursor
/// on the byte after the token.
fn next_token(bytes: &[u8], cursor: &mut usize) -> Option<String> {
    loop {
        while *cursor < bytes.len() && bytes[*cursor].is_ascii_whitespace() {
            *cursor += 1;
        }
        if *cursor < bytes.len() && bytes[*cursor] == b'#' {
            while *cursor < bytes.len() && bytes[*cursor] != b'\n' {
                *cursor += 1;
            }
            continue;
        }
        break;
    }
    if *cursor >= bytes.len() {
        return None;
    }
    let start = *cursor;
    while *cursor < bytes.len() && !bytes[*cursor].is_ascii_whitespace() {
        *cursor += 1;
    }
    Some(String::from_utf8_lossy(&bytes[start..*cursor]).into_owned())
}
