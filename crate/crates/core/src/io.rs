//! File formats: binary PGM for 8-bit rasters, grayscale PFM for dB rasters,
//! and small JSON helpers that attach the path to every error.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::raster::{Raster8, RasterF};

pub fn encode_pgm(r: &Raster8) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", r.width(), r.height()).into_bytes();
    out.extend_from_slice(r.values());
    out
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Raster8> {
    let mut cur = HeaderCursor { bytes, pos: 0 };
    if cur.token()? != "P5" {
        return Err(Error::Parse("not a binary PGM (P5)".into()));
    }
    let width = cur.number()?;
    let height = cur.number()?;
    let maxval = cur.number()?;
    if maxval != 255 {
        return Err(Error::Parse(format!("unsupported PGM maxval {maxval}")));
    }
    let data = cur.payload()?;
    if data.len() < width * height {
        return Err(Error::Parse(format!(
            "PGM payload has {} bytes, expected {}",
            data.len(),
            width * height
        )));
    }
    Raster8::new(width, height, data[..width * height].to_vec())
}

/// Grayscale PFM ("Pf"), little-endian, rows stored bottom-to-top as the
/// format requires. Nodata pixels are written as NaN.
pub fn encode_pfm(r: &RasterF) -> Vec<u8> {
    let (w, h) = r.dims();
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * 4);
    for row in (0..h).rev() {
        for col in 0..w {
            let v = r.get(col, row);
            let v = if r.is_nodata(v) { f32::NAN } else { v };
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Inverse of [`encode_pfm`]; NaN pixels become nodata.
pub fn decode_pfm(bytes: &[u8]) -> Result<RasterF> {
    let mut cur = HeaderCursor { bytes, pos: 0 };
    if cur.token()? != "Pf" {
        return Err(Error::Parse("not a grayscale PFM (Pf)".into()));
    }
    let width = cur.number()?;
    let height = cur.number()?;
    let scale: f64 = cur
        .token()?
        .parse()
        .map_err(|_| Error::Parse("PFM scale".into()))?;
    let little = scale < 0.0;
    let data = cur.payload()?;
    let n = width * height;
    if data.len() < n * 4 {
        return Err(Error::Parse(format!(
            "PFM payload has {} bytes, expected {}",
            data.len(),
            n * 4
        )));
    }
    let mut values = vec![0f32; n];
    for (i, chunk) in data[..n * 4].chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        let (row, col) = (height - 1 - i / width, i % width);
        values[row * width + col] = v;
    }
    let has_nan = values.iter().any(|v| v.is_nan());
    RasterF::new(width, height, values, has_nan.then_some(f32::NAN))
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Result<String> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Parse("truncated image header".into()));
        }
        Ok(String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned())
    }

    fn number(&mut self) -> Result<usize> {
        let tok = self.token()?;
        tok.parse()
            .map_err(|_| Error::Parse(format!("bad header number {tok:?}")))
    }

    /// Raster bytes start after exactly one whitespace byte.
    fn payload(&mut self) -> Result<&'a [u8]> {
        if self.pos >= self.bytes.len() {
            return Err(Error::Parse("missing image payload".into()));
        }
        Ok(&self.bytes[self.pos + 1..])
    }
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn read_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_pgm(path: &Path) -> Result<Raster8> {
    decode_pgm(&read_bytes(path)?).map_err(|e| with_path(path, e))
}

pub fn write_pgm(path: &Path, r: &Raster8) -> Result<()> {
    write_bytes(path, &encode_pgm(r))
}

pub fn read_pfm(path: &Path) -> Result<RasterF> {
    decode_pfm(&read_bytes(path)?).map_err(|e| with_path(path, e))
}

pub fn write_pfm(path: &Path, r: &RasterF) -> Result<()> {
    write_bytes(path, &encode_pfm(r))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    }
}

/// Regular files in `dir` with the given extension, sorted by name.
pub fn list_files(dir: &Path, ext: &str) -> Result<Vec<std::path::PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().and_then(|s| s.to_str()) == Some(ext) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}
