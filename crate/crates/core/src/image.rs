//! 8-bit grayscale images, corner-aligned bilinear resizing, and netpbm I/O.
//!
//! Supported formats, all with a maximum value of 255:
//! * read: binary PGM (`P5`)
//! * write: binary PGM (`P5`), ASCII PGM (`P2`), binary PPM (`P6`)
//!
//! Resizing maps destination pixel `x` to source coordinate
//! `x * (src - 1) / (dst - 1)` (corner-aligned; a lone pixel maps to
//! coordinate 0), interpolates bilinearly in `f64`, and when producing bytes
//! rounds to nearest. The same sampling is used everywhere an image or
//! heatmap changes size, so crops, network inputs, and upsampled heatmaps
//! agree with each other.

use crate::error::Error;
use crate::Result;

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::geometry("image dimensions must be nonzero"));
        }
        if pixels.len() != width * height {
            return Err(Error::geometry(format!(
                "image {width}x{height} needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(GrayImage { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        GrayImage::new(width, height, vec![value; width * height])
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    /// Copies out the rectangle at `(x, y)` with size `w`×`h`, which must lie
    /// fully inside the image.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<GrayImage> {
        if w == 0 || h == 0 || x + w > self.width || y + h > self.height {
            return Err(Error::geometry(format!(
                "crop {w}x{h}+{x}+{y} exceeds image {}x{}",
                self.width, self.height
            )));
        }
        let mut pixels = Vec::with_capacity(w * h);
        for row in y..y + h {
            pixels.extend_from_slice(&self.pixels[row * self.width + x..row * self.width + x + w]);
        }
        GrayImage::new(w, h, pixels)
    }

    /// Corner-aligned bilinear resize producing continuous intensities.
    pub fn resize_f64(&self, width: usize, height: usize) -> Result<Vec<f64>> {
        if width == 0 || height == 0 {
            return Err(Error::geometry("resize target must be nonzero"));
        }
        let sample_pos = |dst: usize, dst_len: usize, src_len: usize| -> f64 {
            if dst_len <= 1 {
                0.0
            } else {
                dst as f64 * (src_len - 1) as f64 / (dst_len - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(width * height);
        for y in 0..height {
            let sy = sample_pos(y, height, self.height);
            let y0 = sy.floor() as usize;
            let y1 = (y0 + 1).min(self.height - 1);
            let fy = sy - y0 as f64;
            for x in 0..width {
                let sx = sample_pos(x, width, self.width);
                let x0 = sx.floor() as usize;
                let x1 = (x0 + 1).min(self.width - 1);
                let fx = sx - x0 as f64;
                let p00 = self.get(x0, y0) as f64;
                let p10 = self.get(x1, y0) as f64;
                let p01 = self.get(x0, y1) as f64;
                let p11 = self.get(x1, y1) as f64;
                let top = p00 + (p10 - p00) * fx;
                let bot = p01 + (p11 - p01) * fx;
                out.push(top + (bot - top) * fy);
            }
        }
        Ok(out)
    }

    /// Bilinear resize to a new 8-bit image (values rounded to nearest).
    pub fn resize(&self, width: usize, height: usize) -> Result<GrayImage> {
        let vals = self.resize_f64(width, height)?;
        GrayImage::new(
            width,
            height,
            vals.iter().map(|&v| v.round().clamp(0.0, 255.0) as u8).collect(),
        )
    }
}

fn parse_err(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, col, msg: msg.into() }
}

/// Reads the next header token, skipping whitespace and `#` comments.
/// Returns the token plus the (line, col) where it started.
fn next_token(bytes: &[u8], pos: &mut usize, line: &mut usize, col: &mut usize) -> Result<(String, usize, usize)> {
    loop {
        while *pos < bytes.len() {
            let b = bytes[*pos];
            if b == b'\n' {
                *line += 1;
                *col = 1;
                *pos += 1;
            } else if b.is_ascii_whitespace() {
                *col += 1;
                *pos += 1;
            } else {
                break;
            }
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    if *pos >= bytes.len() {
        return Err(parse_err(*line, *col, "unexpected end of header"));
    }
    let (tl, tc) = (*line, *col);
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
        *col += 1;
    }
    let tok = std::str::from_utf8(&bytes[start..*pos])
        .map_err(|_| parse_err(tl, tc, "non-ASCII header token"))?;
    Ok((tok.to_string(), tl, tc))
}

/// Parses a binary PGM (`P5`) with an 8-bit maximum value.
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 0usize;
    let (mut line, mut col) = (1usize, 1usize);
    let (magic, ml, mc) = next_token(bytes, &mut pos, &mut line, &mut col)?;
    if magic != "P5" {
        return Err(parse_err(ml, mc, format!("expected magic 'P5', found '{magic}'")));
    }
    let mut dims = [0usize; 3];
    for (i, name) in ["width", "height", "maxval"].iter().enumerate() {
        let (tok, tl, tc) = next_token(bytes, &mut pos, &mut line, &mut col)?;
        dims[i] = tok
            .parse::<usize>()
            .map_err(|_| parse_err(tl, tc, format!("invalid {name} '{tok}'")))?;
        if dims[i] == 0 {
            return Err(parse_err(tl, tc, format!("{name} must be positive")));
        }
        if i == 2 && dims[2] > 255 {
            return Err(parse_err(tl, tc, format!("maxval {} exceeds 255; only 8-bit images are supported", dims[2])));
        }
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(parse_err(line, col, "missing whitespace before raster"));
    }
    if bytes[pos] == b'\n' {
        line += 1;
        col = 1;
    }
    pos += 1;
    let (w, h) = (dims[0], dims[1]);
    let need = w * h;
    let raster = &bytes[pos..];
    if raster.len() < need {
        return Err(parse_err(line, col, format!("raster truncated: need {need} bytes, have {}", raster.len())));
    }
    if raster.len() > need {
        return Err(parse_err(line, col, format!("raster has {} trailing bytes", raster.len() - need)));
    }
    GrayImage::new(w, h, raster.to_vec())
}

pub fn read_pgm(path: &std::path::Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path)?;
    parse_pgm(&bytes)
}

/// Serializes a binary PGM (`P5`).
pub fn write_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

/// Serializes an ASCII PGM (`P2`), one image row per text line.
pub fn write_pgm_ascii(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P2\n{} {}\n255\n", img.width, img.height);
    for row in img.pixels.chunks(img.width) {
        let line: Vec<String> = row.iter().map(|p| p.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out.into_bytes()
}

/// Row-major 8-bit RGB image (write-only; used for heatmap overlays).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    /// Interleaved `r, g, b` triples.
    pub pixels: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height * 3 {
            return Err(Error::geometry("rgb image dimensions do not match pixel data"));
        }
        Ok(RgbImage { width, height, pixels })
    }
}

/// Serializes a binary PPM (`P6`).
pub fn write_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}
