//! PPM (P3/P6, maxval 255) reading and writing, and pixel feature extraction.

use std::path::Path;

use quickshift_core::Dataset;
use thiserror::Error;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PpmError {
    #[error("bad magic number, expected P3 or P6")]
    BadMagic,
    #[error("malformed header: {0}")]
    Header(String),
    #[error("unsupported maxval {0}, only 255 is accepted")]
    MaxVal(u64),
    #[error("truncated pixel data: expected {expected} samples, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("invalid sample `{0}`")]
    Sample(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// Row-major RGB triples.
    pub pixels: Vec<[u8; 3]>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Self {
        assert_eq!(pixels.len(), width * height, "pixel count must match dimensions");
        Self { width, height, pixels }
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        Self::new(width, height, vec![rgb; width * height])
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&[u8]> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() && self.bytes[self.pos] != b'#'
        {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<u64, PpmError> {
        let tok = self
            .token()
            .ok_or_else(|| PpmError::Header(format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PpmError::Header(format!("{what} is not a number")))
    }
}

pub fn parse_ppm(bytes: &[u8]) -> Result<Image, PpmError> {
    let binary = match bytes.get(..2) {
        Some(b"P6") => true,
        Some(b"P3") => false,
        _ => return Err(PpmError::BadMagic),
    };
    if bytes.get(2).is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#') {
        return Err(PpmError::BadMagic);
    }
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    if width == 0 || height == 0 {
        return Err(PpmError::Header("zero image dimension".into()));
    }
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(PpmError::MaxVal(maxval));
    }
    let expected = width
        .checked_mul(height)
        .and_then(|p| p.checked_mul(3))
        .ok_or_else(|| PpmError::Header("image dimensions overflow".into()))?;

    let samples: Vec<u8> = if binary {
        // exactly one whitespace byte separates the header from the raster
        match bytes.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => {}
            _ => return Err(PpmError::Truncated { expected, found: 0 }),
        }
        let raster = &bytes[cur.pos + 1..];
        if raster.len() < expected {
            return Err(PpmError::Truncated {
                expected,
                found: raster.len(),
            });
        }
        raster[..expected].to_vec()
    } else {
        let mut out = Vec::with_capacity(expected);
        while out.len() < expected {
            let Some(tok) = cur.token() else {
                return Err(PpmError::Truncated {
                    expected,
                    found: out.len(),
                });
            };
            let v = std::str::from_utf8(tok)
                .ok()
                .and_then(|s| s.parse::<u64>().ok())
                .filter(|&v| v <= 255)
                .ok_or_else(|| PpmError::Sample(String::from_utf8_lossy(tok).into_owned()))?;
            out.push(v as u8);
        }
        out
    };
    let pixels = samples.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    Ok(Image { width, height, pixels })
}

/// Binary P6 encoding.
pub fn encode_ppm(img: &Image) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.reserve(img.pixels.len() * 3);
    for px in &img.pixels {
        out.extend_from_slice(px);
    }
    out
}

pub fn read_ppm(path: &Path) -> Result<Image> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    parse_ppm(&bytes).map_err(|source| CliError::Ppm {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageFeatureSpec {
    /// Weight of the normalised pixel coordinates relative to colour.
    pub lambda: f64,
}

impl ImageFeatureSpec {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(CliError::Usage(format!(
                "--lambda must be finite and >= 0, got {lambda}"
            )));
        }
        Ok(Self { lambda })
    }
}

/// One `(r, g, b, λx, λy)` row per pixel, colours and coordinates in [0, 1].
pub fn image_features(img: &Image, spec: ImageFeatureSpec) -> Result<Dataset> {
    let scale = |i: usize, extent: usize| {
        if extent <= 1 {
            0.0
        } else {
            spec.lambda * i as f64 / (extent - 1) as f64
        }
    };
    let mut flat = Vec::with_capacity(img.pixels.len() * 5);
    for (idx, px) in img.pixels.iter().enumerate() {
        let (row, col) = (idx / img.width, idx % img.width);
        flat.extend(px.iter().map(|&c| f64::from(c) / 255.0));
        flat.push(scale(col, img.width));
        flat.push(scale(row, img.height));
    }
    Ok(Dataset::from_flat(flat, 5)?)
}

pub fn load_ppm(path: &Path, spec: ImageFeatureSpec) -> Result<(Dataset, Image)> {
    let img = read_ppm(path)?;
    let data = image_features(&img, spec)?;
    Ok((data, img))
}
