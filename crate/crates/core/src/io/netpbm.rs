//! Minimal binary netpbm: P4 bitmaps and 8/16-bit P5 graymaps. Plain
//! (ASCII) P1/P2 files are accepted on read.

use std::path::Path;

use crate::error::{Error, Result};

/// Grayscale samples with their declared maximum value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graymap {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self) -> Option<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).ok()?.parse().ok()
    }
}

fn header<'a>(bytes: &'a [u8], path: &Path, with_maxval: bool) -> Result<(Cursor<'a>, [u8; 2], usize, usize, usize)> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(format_err(path, "missing netpbm magic number"));
    }
    let magic = [bytes[0], bytes[1]];
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.number().ok_or_else(|| format_err(path, "bad width"))?;
    let height = cur.number().ok_or_else(|| format_err(path, "bad height"))?;
    let maxval = if with_maxval {
        cur.number().ok_or_else(|| format_err(path, "bad maxval"))?
    } else {
        1
    };
    if width == 0 || height == 0 {
        return Err(format_err(path, "zero dimension"));
    }
    Ok((cur, magic, width, height, maxval))
}

/// Encodes a {0,1} grid as P4. Netpbm draws 1 as black, so a transmitting
/// (1) pixel is stored as 0 and shows up white.
pub fn encode_pbm(width: usize, height: usize, bits: &[u8]) -> Vec<u8> {
    let mut out = format!("P4\n{width} {height}\n").into_bytes();
    let row_bytes = width.div_ceil(8);
    for row in bits.chunks(width).take(height) {
        let mut packed = vec![0u8; row_bytes];
        for (c, &b) in row.iter().enumerate() {
            if b == 0 {
                packed[c / 8] |= 0x80 >> (c % 8);
            }
        }
        out.extend_from_slice(&packed);
    }
    out
}

pub fn decode_pbm(bytes: &[u8], path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let (mut cur, magic, width, height, _) = header(bytes, path, false)?;
    let mut bits = Vec::with_capacity(width * height);
    match &magic {
        b"P4" => {
            let start = cur.pos + 1;
            let row_bytes = width.div_ceil(8);
            let body = bytes
                .get(start..start + row_bytes * height)
                .ok_or_else(|| format_err(path, "truncated bitmap data"))?;
            for row in body.chunks(row_bytes) {
                for c in 0..width {
                    let black = row[c / 8] & (0x80 >> (c % 8)) != 0;
                    bits.push(u8::from(!black));
                }
            }
        }
        b"P1" => {
            while bits.len() < width * height {
                cur.skip_space_and_comments();
                match bytes.get(cur.pos) {
                    Some(b'0') => bits.push(1),
                    Some(b'1') => bits.push(0),
                    _ => return Err(format_err(path, "bad or truncated plain bitmap data")),
                }
                cur.pos += 1;
            }
        }
        _ => return Err(format_err(path, "not a PBM file")),
    }
    Ok((width, height, bits))
}

/// Encodes samples as P5, two big-endian bytes per sample when
/// `maxval > 255`.
pub fn encode_pgm(map: &Graymap) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", map.width, map.height, map.maxval).into_bytes();
    if map.maxval > 255 {
        for &s in &map.samples {
            out.extend_from_slice(&s.to_be_bytes());
        }
    } else {
        out.extend(map.samples.iter().map(|&s| s as u8));
    }
    out
}

pub fn decode_pgm(bytes: &[u8], path: &Path) -> Result<Graymap> {
    let (mut cur, magic, width, height, maxval) = header(bytes, path, true)?;
    if maxval == 0 || maxval > 65535 {
        return Err(format_err(path, format!("maxval {maxval} out of range")));
    }
    let n = width * height;
    let samples: Vec<u16> = match &magic {
        b"P5" => {
            let start = cur.pos + 1;
            let wide = maxval > 255;
            let len = if wide { 2 * n } else { n };
            let body = bytes
                .get(start..start + len)
                .ok_or_else(|| format_err(path, "truncated graymap data"))?;
            if wide {
                body.chunks(2).map(|p| u16::from_be_bytes([p[0], p[1]])).collect()
            } else {
                body.iter().map(|&b| b as u16).collect()
            }
        }
        b"P2" => (0..n)
            .map(|_| cur.number().map(|v| v as u16))
            .collect::<Option<_>>()
            .ok_or_else(|| format_err(path, "bad or truncated plain graymap data"))?,
        _ => return Err(format_err(path, "not a PGM file")),
    };
    if samples.iter().any(|&s| s as usize > maxval) {
        return Err(format_err(path, "sample exceeds maxval"));
    }
    Ok(Graymap {
        width,
        height,
        maxval: maxval as u16,
        samples,
    })
}
