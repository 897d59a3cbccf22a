//! 8-bit grayscale frames and the binary PGM (`P5`) codec.

use std::path::Path;

use crate::error::{Error, Result};
use crate::mask::MAX_PIXELS;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GrayFrame {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for GrayFrame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GrayFrame {}x{}", self.height, self.width)
    }
}

impl GrayFrame {
    pub fn new(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 || height.saturating_mul(width) > MAX_PIXELS {
            return Err(Error::Pgm(format!("bad frame size {height}x{width}")));
        }
        if data.len() != height * width {
            return Err(Error::Pgm(format!("{} bytes for a {height}x{width} frame", data.len())));
        }
        Ok(Self { height, width, data })
    }

    pub fn filled(height: usize, width: usize, value: u8) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        self.data[row * self.width + col] = value;
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    /// Parses a binary PGM with maxval 255. Comments (`#` to end of line) are
    /// allowed in the header.
    pub fn from_pgm(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let magic = header_token(bytes, &mut pos)?;
        if magic != b"P5" {
            return Err(Error::Pgm("missing P5 magic".into()));
        }
        let width = header_number(bytes, &mut pos)?;
        let height = header_number(bytes, &mut pos)?;
        let maxval = header_number(bytes, &mut pos)?;
        if maxval != 255 {
            return Err(Error::Pgm(format!("only maxval 255 is supported, got {maxval}")));
        }
        // exactly one whitespace byte separates the header from the raster
        match bytes.get(pos) {
            Some(b) if b.is_ascii_whitespace() => pos += 1,
            _ => return Err(Error::Pgm("header not terminated".into())),
        }
        if width == 0 || height == 0 || height.saturating_mul(width) > MAX_PIXELS {
            return Err(Error::Pgm(format!("bad frame size {height}x{width}")));
        }
        let raster = &bytes[pos..];
        if raster.len() != width * height {
            return Err(Error::Pgm(format!(
                "raster has {} bytes, expected {}",
                raster.len(),
                width * height
            )));
        }
        Self::new(height, width, raster.to_vec())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        match path.extension().and_then(|e| e.to_str()) {
            #[cfg(feature = "png")]
            Some("png") => {
                let img = image::load_from_memory(&bytes)
                    .map_err(|e| Error::Pgm(format!("{}: {e}", path.display())))?
                    .into_luma8();
                let (w, h) = img.dimensions();
                Self::new(h as usize, w as usize, img.into_raw())
            }
            _ => Self::from_pgm(&bytes),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_pgm()).map_err(|e| Error::io(path, e))
    }
}

fn skip_space_and_comments(bytes: &[u8], pos: &mut usize) {
    while let Some(&b) = bytes.get(*pos) {
        if b.is_ascii_whitespace() {
            *pos += 1;
        } else if b == b'#' {
            while let Some(&c) = bytes.get(*pos) {
                *pos += 1;
                if c == b'\n' {
                    break;
                }
            }
        } else {
            break;
        }
    }
}

fn header_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    skip_space_and_comments(bytes, pos);
    let start = *pos;
    while bytes.get(*pos).is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#') {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Pgm("truncated header".into()));
    }
    Ok(&bytes[start..*pos])
}

fn header_number(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    let tok = header_token(bytes, pos)?;
    if tok.len() > 9 || !tok.iter().all(u8::is_ascii_digit) {
        return Err(Error::Pgm(format!("bad header number {:?}", String::from_utf8_lossy(tok))));
    }
    Ok(std::str::from_utf8(tok).expect("ascii digits").parse().expect("short digit run"))
}
