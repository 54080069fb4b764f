//! Binary PGM (P5, maxval 255) reading and writing.

use std::fs;
use std::io;
use std::path::Path;

use ctmark_core::ImageU8;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("ASCII PGM (P2) is not supported, convert to binary P5")]
    Ascii,
    #[error("not a PGM file (magic {0:?})")]
    BadMagic(String),
    #[error("malformed PGM header: {0}")]
    BadHeader(String),
    #[error("maxval {0} is not supported, only 8-bit images with maxval 255")]
    Maxval(u32),
    #[error("truncated pixel data: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.buf.len() {
            match self.buf[self.pos] {
                b'#' => {
                    while self.pos < self.buf.len() && self.buf[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32, PgmError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.buf.len() && self.buf[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(PgmError::BadHeader(format!("missing {what}")));
        }
        std::str::from_utf8(&self.buf[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PgmError::BadHeader(format!("{what} out of range")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<ImageU8, PgmError> {
    if bytes.len() < 2 {
        return Err(PgmError::BadMagic(String::from_utf8_lossy(bytes).into_owned()));
    }
    match &bytes[..2] {
        b"P5" => {}
        b"P2" => return Err(PgmError::Ascii),
        m => return Err(PgmError::BadMagic(String::from_utf8_lossy(m).into_owned())),
    }
    let mut c = Cursor { buf: bytes, pos: 2 };
    let cols = c.number("width")? as usize;
    let rows = c.number("height")? as usize;
    let maxval = c.number("maxval")?;
    if rows == 0 || cols == 0 {
        return Err(PgmError::BadHeader(format!("empty image {cols}x{rows}")));
    }
    if maxval != 255 {
        return Err(PgmError::Maxval(maxval));
    }
    // exactly one whitespace byte separates the header from the raster
    if c.pos >= bytes.len() || !bytes[c.pos].is_ascii_whitespace() {
        return Err(PgmError::BadHeader("no separator after maxval".into()));
    }
    let data = &bytes[c.pos + 1..];
    let expected = rows * cols;
    if data.len() < expected {
        return Err(PgmError::Truncated { expected, found: data.len() });
    }
    Ok(ImageU8::from_vec(rows, cols, data[..expected].to_vec()).expect("size checked"))
}

pub fn encode(img: &ImageU8) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.cols(), img.rows()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

pub fn read(path: &Path) -> Result<ImageU8, PgmError> {
    let bytes = fs::read(path).map_err(|source| PgmError::Io { path: path.display().to_string(), source })?;
    decode(&bytes)
}

pub fn write(path: &Path, img: &ImageU8) -> Result<(), PgmError> {
    fs::write(path, encode(img)).map_err(|source| PgmError::Io { path: path.display().to_string(), source })
}
