//! Appearance features of input frames.
//!
//! The loss stack only sees [`FeatureImage`]s: either the frame's own RGB
//! values scaled to `[0, 1]` ([`encode_identity`]) or externally computed
//! feature maps read from `FTEN` tensor files ([`load_feature_map`]).
//!
//! `FTEN` layout: the 4 magic bytes `FTEN`, then `height`, `width`,
//! `channels` as little-endian `u32`, then `height * width * channels`
//! little-endian `f32` values, row-major, channel-fastest.

use std::fs;
use std::io::Write;
use std::path::Path;

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"FTEN";
const HEADER_LEN: usize = 16;

/// H×W×D feature image, row-major with channels fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl FeatureImage {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * channels {
            return Err(Error::ShapeMismatch(format!(
                "feature data has {} values, expected {}x{}x{}",
                data.len(),
                height,
                width,
                channels
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature image".into()));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [f64] {
        let i = (y * self.width + x) * self.channels;
        &mut self.data[i..i + self.channels]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Bilinear resampling with pixel-centre alignment and edge clamping.
    pub fn resize_bilinear(&self, width: usize, height: usize) -> FeatureImage {
        if (width, height) == self.dims() {
            return self.clone();
        }
        let mut out = FeatureImage::zeros(width, height, self.channels);
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        let axis = |c: f64, n: usize| {
            let c = c.clamp(0.0, (n - 1) as f64);
            let i0 = (c.floor() as usize).min(n.saturating_sub(2));
            let i1 = (i0 + 1).min(n - 1);
            (i0, i1, c - i0 as f64)
        };
        for y in 0..height {
            let (y0, y1, fy) = axis((y as f64 + 0.5) * sy - 0.5, self.height);
            for x in 0..width {
                let (x0, x1, fx) = axis((x as f64 + 0.5) * sx - 0.5, self.width);
                for c in 0..self.channels {
                    let a = self.pixel(x0, y0)[c] * (1.0 - fx) + self.pixel(x1, y0)[c] * fx;
                    let b = self.pixel(x0, y1)[c] * (1.0 - fx) + self.pixel(x1, y1)[c] * fx;
                    out.pixel_mut(x, y)[c] = a * (1.0 - fy) + b * fy;
                }
            }
        }
        out
    }
}

/// Identity feature encoding: RGB scaled to `[0, 1]`, three channels.
pub fn encode_identity(image: &RgbImage) -> FeatureImage {
    let (w, h) = image.dimensions();
    let data = image.as_raw().iter().map(|&v| v as f64 / 255.0).collect();
    FeatureImage {
        width: w as usize,
        height: h as usize,
        channels: 3,
        data,
    }
}

/// Identity encoding of a float RGB image; values are clamped to `[0, 1]`.
pub fn encode_identity_f32(width: usize, height: usize, rgb: &[f32]) -> Result<FeatureImage> {
    if rgb.len() != width * height * 3 {
        return Err(Error::ShapeMismatch(format!(
            "{} rgb values for a {width}x{height} image",
            rgb.len()
        )));
    }
    let data = rgb.iter().map(|&v| (v as f64).clamp(0.0, 1.0)).collect();
    FeatureImage::from_vec(width, height, 3, data)
}

/// Inverse of [`encode_identity`] for the first three channels, with rounding.
pub fn decode_identity(features: &FeatureImage) -> RgbImage {
    let mut img = RgbImage::new(features.width as u32, features.height as u32);
    for y in 0..features.height {
        for x in 0..features.width {
            let p = features.pixel(x, y);
            let q = |k: usize| {
                let v = p.get(k).copied().unwrap_or(0.0);
                (v.clamp(0.0, 1.0) * 255.0).round() as u8
            };
            img.put_pixel(x as u32, y as u32, Rgb([q(0), q(1), q(2)]));
        }
    }
    img
}

/// Reads an `FTEN` tensor file.
pub fn load_feature_map(path: impl AsRef<Path>) -> Result<FeatureImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |reason: String| Error::FeatureFormat {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("file is {} bytes, shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(bad("missing FTEN magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    let (height, width, channels) = (word(0), word(1), word(2));
    let count = height
        .checked_mul(width)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| bad("header dimensions overflow".into()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != count * 4 {
        return Err(bad(format!(
            "header declares {height}x{width}x{channels} ({} bytes) but payload has {} bytes",
            count * 4,
            payload.len()
        )));
    }
    let mut data = Vec::with_capacity(count);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(bad(format!("non-finite value at index {i}")));
        }
        data.push(v as f64);
    }
    Ok(FeatureImage {
        width,
        height,
        channels,
        data,
    })
}

/// Writes an `FTEN` tensor file; values are stored as `f32`.
pub fn save_feature_map(path: impl AsRef<Path>, features: &FeatureImage) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::with_capacity(HEADER_LEN + features.data.len() * 4);
    buf.extend_from_slice(MAGIC);
    for d in [features.height, features.width, features.channels] {
        buf.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &v in &features.data {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}
