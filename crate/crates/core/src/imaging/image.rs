use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Grayscale image with row-major intensities in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    samples: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, samples: Vec<f64>) -> Result<Self> {
        if width * height != samples.len() {
            return Err(Error::Validation(format!(
                "image of {width}x{height} needs {} samples, got {}",
                width * height,
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !(v.is_finite() && (0.0..=1.0).contains(v))) {
            return Err(Error::Validation(format!("sample {i} is outside [0, 1]")));
        }
        Ok(GrayImage {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.samples[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.samples[y * self.width + x] = v.clamp(0.0, 1.0);
    }

    /// `1 - v` at every pixel.
    pub fn inverted(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            samples: self.samples.iter().map(|v| 1.0 - v).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width * height != bits.len() {
            return Err(Error::Validation(format!(
                "mask of {width}x{height} needs {} entries, got {}",
                width * height,
                bits.len()
            )));
        }
        Ok(BinaryMask {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        BinaryMask {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Foreground as black (0) on white (maxval 255).
    pub fn to_image(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            samples: self.bits.iter().map(|&b| if b { 0.0 } else { 1.0 }).collect(),
        }
    }
}

fn header_token<R: Read>(r: &mut R) -> Result<String> {
    let mut tok = String::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            if tok.is_empty() {
                return Err(Error::Validation("truncated PGM header".into()));
            }
            return Ok(tok);
        }
        let c = byte[0];
        if c == b'#' && tok.is_empty() {
            // comment runs to end of line
            while r.read(&mut byte)? == 1 && byte[0] != b'\n' {}
            continue;
        }
        if c.is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            return Ok(tok);
        }
        tok.push(c as char);
    }
}

/// Reads a binary (P5) PGM with maxval 255 or 65535, scaling to `[0, 1]`.
pub fn read_pgm<R: Read>(mut r: R) -> Result<GrayImage> {
    let magic = header_token(&mut r)?;
    if magic != "P5" {
        return Err(Error::Validation(format!("expected PGM magic P5, found {magic:?}")));
    }
    let mut num = |what: &str| -> Result<usize> {
        let t = header_token(&mut r)?;
        t.parse()
            .map_err(|_| Error::Validation(format!("invalid PGM {what}: {t:?}")))
    };
    let width = num("width")?;
    let height = num("height")?;
    let maxval = num("maxval")?;
    if maxval != 255 && maxval != 65535 {
        return Err(Error::Validation(format!("unsupported PGM maxval {maxval}")));
    }
    let bytes_per = if maxval == 255 { 1 } else { 2 };
    let mut data = vec![0u8; width * height * bytes_per];
    r.read_exact(&mut data)
        .map_err(|_| Error::Validation("PGM pixel data is truncated".into()))?;
    let samples = if bytes_per == 1 {
        data.iter().map(|&b| b as f64 / 255.0).collect()
    } else {
        data.chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / 65535.0)
            .collect()
    };
    GrayImage::new(width, height, samples)
}

/// Writes a P5 PGM, 8-bit (`maxval = 255`) or big-endian 16-bit (`65535`).
pub fn write_pgm<W: Write>(mut w: W, img: &GrayImage, maxval: u16) -> Result<()> {
    if maxval != 255 && maxval != 65535 {
        return Err(Error::Validation(format!("unsupported PGM maxval {maxval}")));
    }
    write!(w, "P5\n{} {}\n{}\n", img.width, img.height, maxval)?;
    let m = maxval as f64;
    let mut buf = Vec::with_capacity(img.samples.len() * 2);
    for &v in &img.samples {
        let q = (v * m).round() as u16;
        if maxval == 255 {
            buf.push(q as u8);
        } else {
            buf.extend_from_slice(&q.to_be_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}
