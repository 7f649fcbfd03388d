//! Minimal binary PGM (P5) reader and writer.
//!
//! Only 8-bit images (maxval 255) are supported; that is the one format the
//! dataset loader accepts. Values are returned as `f64` in 0..=255, row-major.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const MAXVAL: u32 = 255;

/// Read a binary PGM file into a matrix of raw intensities in `[0, 255]`.
pub fn read_pgm(path: &Path) -> Result<DMatrix<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |reason: &str| Error::Pgm {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };

    let mut cursor = 0usize;
    let magic = next_token(&bytes, &mut cursor).ok_or_else(|| bad("missing magic number"))?;
    if magic != b"P5" {
        return Err(bad("not a binary PGM (expected magic P5)"));
    }
    let width: usize = parse_token(&bytes, &mut cursor).ok_or_else(|| bad("missing width"))?;
    let height: usize = parse_token(&bytes, &mut cursor).ok_or_else(|| bad("missing height"))?;
    let maxval: u32 = parse_token(&bytes, &mut cursor).ok_or_else(|| bad("missing maxval"))?;
    if maxval != MAXVAL {
        return Err(bad(&format!("unsupported maxval {maxval} (only 255)")));
    }
    if width == 0 || height == 0 {
        return Err(bad("zero image dimension"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    cursor += 1;
    let expected = width * height;
    let raster = bytes
        .get(cursor..cursor + expected)
        .ok_or_else(|| bad("truncated raster"))?;

    Ok(DMatrix::from_row_iterator(
        height,
        width,
        raster.iter().map(|&b| b as f64),
    ))
}

/// Write a matrix of intensities in `[0, 255]` as binary PGM. Values are
/// rounded to the nearest integer and clamped to the 8-bit range.
pub fn write_pgm(path: &Path, img: &DMatrix<f64>) -> Result<()> {
    let (rows, cols) = img.shape();
    let mut out = Vec::with_capacity(rows * cols + 32);
    write!(out, "P5\n{cols} {rows}\n{MAXVAL}\n").expect("write to Vec cannot fail");
    for i in 0..rows {
        for j in 0..cols {
            out.push(img[(i, j)].round().clamp(0.0, 255.0) as u8);
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Advance past whitespace and `#` comments, returning the next token.
fn next_token<'a>(bytes: &'a [u8], cursor: &mut usize) -> Option<&'a [u8]> {
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
    Some(&bytes[start..*cursor])
}

fn parse_token<T: std::str::FromStr>(bytes: &[u8], cursor: &mut usize) -> Option<T> {
    let tok = next_token(bytes, cursor)?;
    std::str::from_utf8(tok).ok()?.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_preserves_pixels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let img = DMatrix::from_row_slice(2, 3, &[0.0, 17.0, 255.0, 128.0, 3.0, 42.0]);
        write_pgm(&path, &img).unwrap();
        let back = read_pgm(&path).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn comments_in_header_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        std::fs::write(&path, b"P5\n# a comment\n2 1\n# another\n255\n\x01\x02").unwrap();
        let img = read_pgm(&path).unwrap();
        assert_eq!(img, DMatrix::from_row_slice(1, 2, &[1.0, 2.0]));
    }

    #[test]
    fn rejects_wrong_magic_and_maxval() {
        let dir = tempfile::tempdir().unwrap();
        let ascii = dir.path().join("ascii.pgm");
        std::fs::write(&ascii, b"P2\n1 1\n255\n7\n").unwrap();
        assert!(matches!(read_pgm(&ascii), Err(Error::Pgm { .. })));

        let deep = dir.path().join("deep.pgm");
        std::fs::write(&deep, b"P5\n1 1\n65535\n\x00\x00").unwrap();
        assert!(matches!(read_pgm(&deep), Err(Error::Pgm { .. })));
    }

    #[test]
    fn truncated_raster_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.pgm");
        std::fs::write(&path, b"P5\n4 4\n255\n\x00\x01").unwrap();
        assert!(matches!(read_pgm(&path), Err(Error::Pgm { .. })));
    }
}
