use crate::error::{Error, Result};

pub const DEFAULT_TEXTURE_SIZE: usize = 300;

/// Texel grid of appearance features, row-major with channels fastest.
///
/// Texel `(x, y)` covers `u in [x/W, (x+1)/W]`, `v in [y/H, (y+1)/H]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTexture {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

/// The four texels touched by one bilinear lookup, with their weights and the
/// derivatives of the weights w.r.t. the texture coordinates.
#[derive(Debug, Clone, Copy)]
pub struct BilinearFootprint {
    /// Texel indices (not multiplied by the channel count).
    pub texels: [usize; 4],
    pub weights: [f64; 4],
    pub dweights_du: [f64; 4],
    pub dweights_dv: [f64; 4],
}

impl FeatureTexture {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::ShapeMismatch("texture dimensions must be positive".into()));
        }
        if data.len() != width * height * channels {
            return Err(Error::ShapeMismatch(format!(
                "texture data has {} values, expected {}x{}x{}",
                data.len(),
                width,
                height,
                channels
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("texture".into()));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, channels: usize, f: impl Fn(usize, usize, &mut [f64])) -> Self {
        let mut t = Self::zeros(width, height, channels);
        for y in 0..height {
            for x in 0..width {
                let i = (y * width + x) * channels;
                f(x, y, &mut t.data[i..i + channels]);
            }
        }
        t
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

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn texel(&self, index: usize) -> &[f64] {
        &self.data[index * self.channels..(index + 1) * self.channels]
    }

    pub fn texel_at(&self, x: usize, y: usize) -> &[f64] {
        self.texel(y * self.width + x)
    }

    /// Bilinear footprint at `(u, v)` with clamp-to-edge addressing.
    pub fn footprint(&self, u: f64, v: f64) -> BilinearFootprint {
        let (x0, x1, fx, dfx) = axis_lookup(u, self.width);
        let (y0, y1, fy, dfy) = axis_lookup(v, self.height);
        let w = self.width;
        BilinearFootprint {
            texels: [y0 * w + x0, y0 * w + x1, y1 * w + x0, y1 * w + x1],
            weights: [(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy],
            dweights_du: [-dfx * (1.0 - fy), dfx * (1.0 - fy), -dfx * fy, dfx * fy],
            dweights_dv: [-(1.0 - fx) * dfy, -fx * dfy, (1.0 - fx) * dfy, fx * dfy],
        }
    }

    /// Writes the bilinear sample at `(u, v)` into `out` and returns its footprint.
    pub fn sample_into(&self, u: f64, v: f64, out: &mut [f64]) -> BilinearFootprint {
        let fp = self.footprint(u, v);
        out.iter_mut().for_each(|o| *o = 0.0);
        for k in 0..4 {
            let wk = fp.weights[k];
            if wk == 0.0 {
                continue;
            }
            for (o, t) in out.iter_mut().zip(self.texel(fp.texels[k])) {
                *o += wk * t;
            }
        }
        fp
    }
}

/// Returns `(i0, i1, frac, dfrac/dcoord)` along one axis of `n` texels.
#[inline]
fn axis_lookup(coord: f64, n: usize) -> (usize, usize, f64, f64) {
    if n == 1 {
        return (0, 0, 0.0, 0.0);
    }
    let x = coord * n as f64 - 0.5;
    let max = (n - 1) as f64;
    let (xc, d) = if x <= 0.0 {
        (0.0, 0.0)
    } else if x >= max {
        (max, 0.0)
    } else {
        (x, n as f64)
    };
    let i0 = (xc.floor() as usize).min(n - 2);
    (i0, i0 + 1, xc - i0 as f64, d)
}
